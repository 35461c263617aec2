//! Assembly of the stabilized bilinear forms and load vectors. All loops
//! run in ascending cell and edge order and scatter into sorted triplets,
//! so the assembled matrices are bit-reproducible.

use crate::basis::{quad_basis, quad_node_count, Basis1d, K_MAX};
use crate::curve::{Axis, ClosedCurve};
use crate::fem::quad::{BoundaryQuad, VolumeQuad};
use crate::fem::sparse::CsrMatrix;
use crate::fem::{Field2, Geometry};
use crate::geom::Vec2;
use crate::quadrature::gauss_legendre;

/// The three operators of one step: A = viscous stiffness plus its ghost
/// penalty, the plain mass, and the penalized mass used by projections.
pub struct Operators {
    pub stiffness: CsrMatrix,
    pub mass_plain: CsrMatrix,
    pub mass_penalized: CsrMatrix,
}

pub fn assemble_operators<C: ClosedCurve>(
    geom: &Geometry<C>,
    vq: &VolumeQuad,
    nu: f64,
    gamma: f64,
) -> Operators {
    let (vol_stiff, vol_mass) = assemble_volume(geom, vq, nu);
    let (pen_stiff, pen_mass) = assemble_ghost_penalties(geom, nu, gamma);
    Operators {
        stiffness: vol_stiff.add_scaled(1.0, &pen_stiff),
        mass_penalized: vol_mass.add_scaled(1.0, &pen_mass),
        mass_plain: vol_mass,
    }
}

/// Volume parts: (nu * grad:grad, w*v) over the discrete domain.
pub fn assemble_volume<C: ClosedCurve>(
    geom: &Geometry<C>,
    vq: &VolumeQuad,
    nu: f64,
) -> (CsrMatrix, CsrMatrix) {
    let k = geom.k;
    let nn = quad_node_count(k);
    let n = geom.dofs.n_dofs;
    let inv_h = 1.0 / geom.grid.h;
    let mut stiff_trips = Vec::new();
    let mut mass_trips = Vec::new();
    let mut vals = [0.0; 25];
    let mut grads = [Vec2::ZERO; 25];
    let mut local_s = vec![0.0; nn * nn];
    let mut local_m = vec![0.0; nn * nn];
    for ci in 0..vq.n_cells() {
        let (cell, pts, wts) = vq.cell(ci);
        local_s.fill(0.0);
        local_m.fill(0.0);
        for (p, w) in pts.iter().zip(wts) {
            quad_basis(k, geom.local_coords(cell, *p), &mut vals, &mut grads);
            for i in 0..nn {
                let gi = grads[i] * inv_h;
                for j in 0..=i {
                    local_s[i * nn + j] += w * nu * gi.dot(grads[j] * inv_h);
                    local_m[i * nn + j] += w * vals[i] * vals[j];
                }
            }
        }
        let dofs = geom.dofs.dofs_of(cell).expect("cover cell");
        for i in 0..nn {
            for j in 0..=i {
                let (s, m) = (local_s[i * nn + j], local_m[i * nn + j]);
                stiff_trips.push((dofs[i], dofs[j], s));
                mass_trips.push((dofs[i], dofs[j], m));
                if i != j {
                    stiff_trips.push((dofs[j], dofs[i], s));
                    mass_trips.push((dofs[j], dofs[i], m));
                }
            }
        }
    }
    (
        CsrMatrix::from_triplets(n, stiff_trips),
        CsrMatrix::from_triplets(n, mass_trips),
    )
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Ghost-penalty forms over the boundary-zone edges: the stiffness variant
/// gamma*nu*h^(2l-1)/((l-1)!)^2 and the mass variant gamma*h^(2l+1)/(l!)^2,
/// both summing normal-derivative jumps of orders l = 1..k.
pub fn assemble_ghost_penalties<C: ClosedCurve>(
    geom: &Geometry<C>,
    nu: f64,
    gamma: f64,
) -> (CsrMatrix, CsrMatrix) {
    let k = geom.k;
    let h = geom.grid.h;
    let nn = quad_node_count(k);
    let n = geom.dofs.n_dofs;
    let b1 = Basis1d::get(k);
    let g = gauss_legendre(k + 1);

    // Tangential values per quadrature point; one-sided normal derivative
    // values at the face for each order l.
    let mut vals_t = vec![[0.0; K_MAX + 1]; g.len()];
    for (q, &(t, _)) in g.iter().enumerate() {
        b1.eval(t, &mut vals_t[q]);
    }
    let mut d_at0 = vec![[0.0; K_MAX + 1]; k + 1];
    let mut d_at1 = vec![[0.0; K_MAX + 1]; k + 1];
    for l in 1..=k {
        b1.eval_deriv(l, 0.0, &mut d_at0[l]);
        b1.eval_deriv(l, 1.0, &mut d_at1[l]);
    }
    let scale_s: Vec<f64> = (0..=k)
        .map(|l| gamma * nu * h.powi(2 * l as i32 - 1) / factorial(l.saturating_sub(1)).powi(2))
        .collect();
    let scale_m: Vec<f64> =
        (0..=k).map(|l| gamma * h.powi(2 * l as i32 + 1) / factorial(l).powi(2)).collect();

    let mut stiff_trips = Vec::new();
    let mut mass_trips = Vec::new();
    let mut merged: Vec<u32> = Vec::new();
    let mut pos_lo = vec![0usize; nn];
    let mut pos_hi = vec![0usize; nn];
    let mut jump = vec![0.0; 2 * nn];
    let mut local_s = vec![0.0; 4 * nn * nn];
    let mut local_m = vec![0.0; 4 * nn * nn];

    for e in &geom.cls.ghost_edges {
        let lo_dofs = geom.dofs.dofs_of(e.lo).expect("cover cell");
        let hi_dofs = geom.dofs.dofs_of(e.hi).expect("cover cell");
        merged.clear();
        merged.extend_from_slice(lo_dofs);
        merged.extend_from_slice(hi_dofs);
        merged.sort_unstable();
        merged.dedup();
        for i in 0..nn {
            pos_lo[i] = merged.binary_search(&lo_dofs[i]).unwrap();
            pos_hi[i] = merged.binary_search(&hi_dofs[i]).unwrap();
        }
        let m = merged.len();
        local_s[..m * m].fill(0.0);
        local_m[..m * m].fill(0.0);

        for (q, &(_, wq)) in g.iter().enumerate() {
            let vt = &vals_t[q];
            for l in 1..=k {
                let inv_hl = (1.0 / h).powi(l as i32);
                jump[..m].fill(0.0);
                // lo cell trace at face coordinate 1, hi cell at 0.
                for b in 0..=k {
                    for a in 0..=k {
                        let i = crate::basis::quad_node_index(a, b, k);
                        let (dlo, dhi) = match e.axis {
                            Axis::X => (d_at1[l][a] * vt[b], d_at0[l][a] * vt[b]),
                            Axis::Y => (vt[a] * d_at1[l][b], vt[a] * d_at0[l][b]),
                        };
                        jump[pos_lo[i]] += inv_hl * dlo;
                        jump[pos_hi[i]] -= inv_hl * dhi;
                    }
                }
                let ws = scale_s[l] * h * wq;
                let wm = scale_m[l] * h * wq;
                for i in 0..m {
                    if jump[i] == 0.0 {
                        continue;
                    }
                    for j in 0..=i {
                        let jj = jump[i] * jump[j];
                        local_s[i * m + j] += ws * jj;
                        local_m[i * m + j] += wm * jj;
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..=i {
                let (s, mm) = (local_s[i * m + j], local_m[i * m + j]);
                if s == 0.0 && mm == 0.0 {
                    continue;
                }
                stiff_trips.push((merged[i], merged[j], s));
                mass_trips.push((merged[i], merged[j], mm));
                if i != j {
                    stiff_trips.push((merged[j], merged[i], s));
                    mass_trips.push((merged[j], merged[i], mm));
                }
            }
        }
    }
    (
        CsrMatrix::from_triplets(n, stiff_trips),
        CsrMatrix::from_triplets(n, mass_trips),
    )
}

/// Evaluates the two ghost-penalty forms at a single coefficient vector,
/// computing each trace jump of w before squaring. This avoids the
/// cancellation the assembled matrix suffers when the jumps are tiny, and
/// is the evaluation used by the vanishing-jump diagnostics.
pub fn ghost_penalty_value<C: ClosedCurve>(
    geom: &Geometry<C>,
    nu: f64,
    gamma: f64,
    w: &[f64],
) -> (f64, f64) {
    let k = geom.k;
    let h = geom.grid.h;
    let b1 = Basis1d::get(k);
    let g = gauss_legendre(k + 1);
    let mut vals_t = vec![[0.0; K_MAX + 1]; g.len()];
    for (q, &(t, _)) in g.iter().enumerate() {
        b1.eval(t, &mut vals_t[q]);
    }
    let mut d_at0 = vec![[0.0; K_MAX + 1]; k + 1];
    let mut d_at1 = vec![[0.0; K_MAX + 1]; k + 1];
    for l in 1..=k {
        b1.eval_deriv(l, 0.0, &mut d_at0[l]);
        b1.eval_deriv(l, 1.0, &mut d_at1[l]);
    }
    let mut acc_s = 0.0;
    let mut acc_m = 0.0;
    for e in &geom.cls.ghost_edges {
        let lo_dofs = geom.dofs.dofs_of(e.lo).expect("cover cell");
        let hi_dofs = geom.dofs.dofs_of(e.hi).expect("cover cell");
        for (q, &(_, wq)) in g.iter().enumerate() {
            let vt = &vals_t[q];
            for l in 1..=k {
                let inv_hl = (1.0 / h).powi(l as i32);
                let mut tr_lo = 0.0;
                let mut tr_hi = 0.0;
                for b in 0..=k {
                    for a in 0..=k {
                        let i = crate::basis::quad_node_index(a, b, k);
                        let (dlo, dhi) = match e.axis {
                            Axis::X => (d_at1[l][a] * vt[b], d_at0[l][a] * vt[b]),
                            Axis::Y => (vt[a] * d_at1[l][b], vt[a] * d_at0[l][b]),
                        };
                        tr_lo += dlo * w[lo_dofs[i] as usize];
                        tr_hi += dhi * w[hi_dofs[i] as usize];
                    }
                }
                let jump = inv_hl * (tr_lo - tr_hi);
                let scale_s = gamma * nu * h.powi(2 * l as i32 - 1)
                    / factorial(l.saturating_sub(1)).powi(2);
                let scale_m = gamma * h.powi(2 * l as i32 + 1) / factorial(l).powi(2);
                acc_s += scale_s * h * wq * jump * jump;
                acc_m += scale_m * h * wq * jump * jump;
            }
        }
    }
    (acc_s, acc_m)
}

/// (f, v) over the discrete domain for each component.
pub fn assemble_vector_functional<C: ClosedCurve>(
    geom: &Geometry<C>,
    vq: &VolumeQuad,
    f: impl Fn(Vec2) -> Vec2,
) -> Field2 {
    let k = geom.k;
    let nn = quad_node_count(k);
    let mut out = [vec![0.0; geom.dofs.n_dofs], vec![0.0; geom.dofs.n_dofs]];
    let mut vals = [0.0; 25];
    for ci in 0..vq.n_cells() {
        let (cell, pts, wts) = vq.cell(ci);
        let dofs = geom.dofs.dofs_of(cell).expect("cover cell");
        for (p, w) in pts.iter().zip(wts) {
            let fv = f(*p);
            crate::basis::quad_basis_values(k, geom.local_coords(cell, *p), &mut vals);
            for i in 0..nn {
                let d = dofs[i] as usize;
                out[0][d] += w * fv.x * vals[i];
                out[1][d] += w * fv.y * vals[i];
            }
        }
    }
    out
}

/// Load vector (f, v) + nu * int_Gamma gN(x, n) . v ds, unscaled by tau.
pub fn assemble_load<C: ClosedCurve>(
    geom: &Geometry<C>,
    vq: &VolumeQuad,
    bq: &BoundaryQuad,
    nu: f64,
    f: impl Fn(Vec2) -> Vec2,
    g_n: impl Fn(Vec2, Vec2) -> Vec2,
) -> Field2 {
    let k = geom.k;
    let nn = quad_node_count(k);
    let mut out = assemble_vector_functional(geom, vq, f);
    let mut vals = [0.0; 25];
    for q in 0..bq.len() {
        let cell = bq.cells[q];
        let dofs = geom.dofs.dofs_of(cell).expect("cover cell");
        let gv = g_n(bq.points[q], bq.normals[q]);
        let w = nu * bq.weights[q];
        crate::basis::quad_basis_values(k, geom.local_coords(cell, bq.points[q]), &mut vals);
        for i in 0..nn {
            let d = dofs[i] as usize;
            out[0][d] += w * gv.x * vals[i];
            out[1][d] += w * gv.y * vals[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Ellipse;
    use crate::curve::SplineCurve;
    use crate::curve::testshapes::AxisSquare;
    use crate::fem::quad::BoundaryQuad;
    use crate::fem::sparse::banded_cholesky;
    use crate::grid::GridSpec;

    fn one_cell_geometry(k: usize) -> Geometry<AxisSquare> {
        let grid = GridSpec::square(0.0, 1.0, 8);
        let h = grid.h;
        let sq = AxisSquare::new(Vec2::new(3.0 * h, 3.0 * h), h);
        Geometry::build(sq, grid, k).unwrap()
    }

    fn disk_geometry(k: usize, n: usize) -> Geometry<SplineCurve> {
        let grid = GridSpec::square(0.0, 1.0, n);
        let pts = Ellipse::circle(Vec2::new(0.5, 0.5), 0.3).equal_arclength_points(2 * n);
        Geometry::build(SplineCurve::fit_closed(&pts), grid, k).unwrap()
    }

    #[test]
    fn q1_element_matrices_match_textbook() {
        let geom = one_cell_geometry(1);
        let vq = VolumeQuad::build(&geom);
        let (stiff, mass) = assemble_volume(&geom, &vq, 1.0);
        let cell = geom
            .cls
            .interior
            .first()
            .copied()
            .expect("one interior cell");
        let dofs = geom.dofs.dofs_of(cell).unwrap();
        let k_ref = [
            [2.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 3.0],
            [-1.0 / 6.0, 2.0 / 3.0, -1.0 / 3.0, -1.0 / 6.0],
            [-1.0 / 6.0, -1.0 / 3.0, 2.0 / 3.0, -1.0 / 6.0],
            [-1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, 2.0 / 3.0],
        ];
        let h2 = geom.grid.h * geom.grid.h;
        let m_ref = [
            [4.0, 2.0, 2.0, 1.0],
            [2.0, 4.0, 1.0, 2.0],
            [2.0, 1.0, 4.0, 2.0],
            [1.0, 2.0, 2.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                let s = stiff.get(dofs[i] as usize, dofs[j] as usize);
                assert!((s - k_ref[i][j]).abs() < 1e-14, "stiff {i}{j}: {s}");
                let m = mass.get(dofs[i] as usize, dofs[j] as usize);
                assert!((m - h2 / 36.0 * m_ref[i][j]).abs() < 1e-16, "mass {i}{j}: {m}");
            }
        }
    }

    #[test]
    fn penalty_vanishes_on_global_polynomials() {
        let geom = disk_geometry(3, 16);
        // A full Q_3 polynomial in each variable.
        let w = geom.interpolate(|p| {
            let q = (1.0 + p.x + 0.5 * p.x * p.x * p.x) * (2.0 - p.y + p.y * p.y);
            Vec2::new(q, p.x * p.x * p.y * p.y * p.y)
        });
        for c in 0..2 {
            let norm2: f64 = w[c].iter().map(|v| v * v).sum();
            let (js, jm) = ghost_penalty_value(&geom, 1.0, 0.001, &w[c]);
            assert!(js <= 1e-20 * norm2, "stiffness jump {js:.3e} vs {:.3e}", 1e-20 * norm2);
            assert!(jm <= 1e-20 * norm2, "mass jump {jm:.3e} vs {:.3e}", 1e-20 * norm2);
        }
    }

    #[test]
    fn penalty_form_and_matrix_agree_on_rough_fields() {
        let geom = disk_geometry(2, 16);
        let (pen_s, pen_m) = assemble_ghost_penalties(&geom, 0.7, 0.001);
        // A deliberately non-smooth coefficient vector.
        let w: Vec<f64> = (0..geom.dofs.n_dofs)
            .map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let (js, jm) = ghost_penalty_value(&geom, 0.7, 0.001, &w);
        let qs = pen_s.quadratic_form(&w);
        let qm = pen_m.quadratic_form(&w);
        assert!((js - qs).abs() < 1e-10 * js.abs().max(1.0), "{js} vs {qs}");
        assert!((jm - qm).abs() < 1e-10 * jm.abs().max(1.0), "{jm} vs {qm}");
        assert!(js > 0.0 && jm > 0.0);
    }

    #[test]
    fn penalized_mass_of_constants_gives_area() {
        let geom = disk_geometry(3, 16);
        let vq = VolumeQuad::build(&geom);
        let ops = assemble_operators(&geom, &vq, 1.0, 0.001);
        let ones = vec![1.0; geom.dofs.n_dofs];
        let area = crate::curve::enclosed_area(&geom.curve);
        let q = ops.mass_penalized.quadratic_form(&ones);
        assert!((q - area).abs() < 1e-9, "{q} vs {area}");
        // Per-component convention: the vector form doubles it.
        assert!((2.0 * q - 2.0 * area).abs() < 2e-9);
        // Constants also annihilate the stiffness.
        assert!(ops.stiffness.quadratic_form(&ones).abs() < 1e-12);
    }

    #[test]
    fn operators_are_symmetric_and_spd() {
        let geom = disk_geometry(3, 16);
        let vq = VolumeQuad::build(&geom);
        let ops = assemble_operators(&geom, &vq, 1.0, 0.001);
        assert!(ops.stiffness.asymmetry() < 1e-12);
        assert!(ops.mass_plain.asymmetry() < 1e-12);
        assert!(ops.mass_penalized.asymmetry() < 1e-12);
        // Penalized mass is SPD on the whole cover.
        let chol = banded_cholesky(&ops.mass_penalized);
        assert!(chol.is_ok());
        // Smallest eigenvalue probe by inverse power iteration.
        let chol = chol.unwrap();
        let n = geom.dofs.n_dofs;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..40 {
            let w = chol.solve(&v);
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            lambda = 1.0 / nw * v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().abs();
            for i in 0..n {
                v[i] = w[i] / nw;
            }
        }
        assert!(lambda > 0.0 && lambda.is_finite());
        // The step matrix a0*M + tau*A is SPD too.
        let step = ops.mass_plain.add_scaled(0.05, &ops.stiffness);
        assert!(banded_cholesky(&step).is_ok());
    }

    #[test]
    fn load_partition_of_unity() {
        let geom = disk_geometry(3, 16);
        let vq = VolumeQuad::build(&geom);
        let bq = BoundaryQuad::build(&geom).unwrap();
        let load = assemble_load(&geom, &vq, &bq, 1.0, |_| Vec2::new(1.0, 0.0), |_, _| Vec2::ZERO);
        let area = crate::curve::enclosed_area(&geom.curve);
        let s0: f64 = load[0].iter().sum();
        let s1: f64 = load[1].iter().sum();
        assert!((s0 - area).abs() < 1e-9);
        assert!(s1.abs() < 1e-15);
    }

    #[test]
    fn load_matches_high_order_quadrature_oracle() {
        let geom = disk_geometry(2, 16);
        let vq = VolumeQuad::build(&geom);
        let bq = BoundaryQuad::build(&geom).unwrap();
        let f = |p: Vec2| Vec2::new((3.0 * p.x).sin() * (2.0 * p.y).cos(), p.x * p.y);
        let load = assemble_load(&geom, &vq, &bq, 1.0, f, |_, _| Vec2::ZERO);

        // Re-integrate with a much finer rule on the same charts.
        use crate::cut::transform::{RefShape, ReferenceTransform};
        use crate::mesh::CellLabel;
        use crate::quadrature::{square_rule, triangle_rule};
        let k = geom.k;
        let nn = quad_node_count(k);
        let mut oracle = [vec![0.0; geom.dofs.n_dofs], vec![0.0; geom.dofs.n_dofs]];
        let fine_q = square_rule(k + 8);
        let fine_t = triangle_rule(2 * k + 16);
        let mut vals = [0.0; 25];
        for &cell in &geom.cls.cover {
            let mut scatter = |x: Vec2, w: f64, out: &mut [Vec<f64>; 2]| {
                let fv = f(x);
                crate::basis::quad_basis_values(k, geom.local_coords(cell, x), &mut vals);
                let dofs = geom.dofs.dofs_of(cell).unwrap();
                for i in 0..nn {
                    let d = dofs[i] as usize;
                    out[0][d] += w * fv.x * vals[i];
                    out[1][d] += w * fv.y * vals[i];
                }
            };
            if geom.table.is_cut(cell) {
                for region in geom.regions.of_cell(cell) {
                    let tf = ReferenceTransform::from_region(&geom.curve, region, k);
                    let rule = match tf.shape {
                        RefShape::Quad => &fine_q,
                        RefShape::Tri => &fine_t,
                    };
                    for (xi, w) in rule.points.iter().zip(&rule.weights) {
                        let (x, m) = tf.value_jacobian(*xi);
                        scatter(x, w * m.det().abs(), &mut oracle);
                    }
                }
            } else if geom.cls.label(cell) == CellLabel::Interior {
                let b = geom.grid.cell_box(cell as usize);
                let h = geom.grid.h;
                for (xi, w) in fine_q.points.iter().zip(&fine_q.weights) {
                    scatter(b.min + *xi * h, w * h * h, &mut oracle);
                }
            }
        }
        // Spot-check a deterministic selection of entries.
        for c in 0..2 {
            for step in 1..=20 {
                let d = (step * geom.dofs.n_dofs / 21) % geom.dofs.n_dofs;
                assert!(
                    (load[c][d] - oracle[c][d]).abs() < 1e-9,
                    "component {c} entry {d}: {} vs {}",
                    load[c][d],
                    oracle[c][d]
                );
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_load() {
        let geom = disk_geometry(1, 16);
        let vq = VolumeQuad::build(&geom);
        let bq = BoundaryQuad::build(&geom).unwrap();
        let load = assemble_load(&geom, &vq, &bq, 1.0, |_| Vec2::ZERO, |_, _| Vec2::ZERO);
        assert!(load[0].iter().all(|&v| v == 0.0));
        assert!(load[1].iter().all(|&v| v == 0.0));
    }
}
