//! Finite element layer: per-step geometry bundle, dof management, sparse
//! operators, quadrature caches, and assembly.

pub mod assemble;
pub mod dofmap;
pub mod quad;
pub mod sparse;

pub use dofmap::DofMap;
pub use sparse::{banded_cholesky, pcg_jacobi, CsrMatrix};

use crate::basis::{quad_basis, quad_basis_values, quad_node_count};
use crate::curve::ClosedCurve;
use crate::cut::{CellRegions, FragmentTable};
use crate::error::{Result, SolverError};
use crate::geom::{Mat2, Vec2};
use crate::grid::GridSpec;
use crate::mesh::{classify, CellLabel, Classification};

/// Scalar coefficient vectors for the two velocity components.
pub type Field2 = [Vec<f64>; 2];

/// Everything derived from one curve position on the fixed background grid:
/// fragments, classification, cut-cell regions, and the dof numbering.
pub struct Geometry<C: ClosedCurve> {
    pub curve: C,
    pub grid: GridSpec,
    pub k: usize,
    pub table: FragmentTable,
    pub cls: Classification,
    pub regions: CellRegions,
    pub dofs: DofMap,
}

impl<C: ClosedCurve> Geometry<C> {
    pub fn build(curve: C, grid: GridSpec, k: usize) -> Result<Geometry<C>> {
        let table = FragmentTable::build(&curve, &grid)?;
        let cls = classify(&curve, &grid, &table)?;
        let regions = CellRegions::build(&curve, &grid, &table);
        let dofs = DofMap::build(&grid, &cls, k);
        Ok(Geometry { curve, grid, k, table, cls, regions, dofs })
    }

    /// Tensor coordinates of `p` in `cell`, possibly outside [0,1]^2.
    pub fn local_coords(&self, cell: u32, p: Vec2) -> Vec2 {
        let (i, j) = self.grid.cell_coords(cell as usize);
        Vec2::new(
            (p.x - self.grid.xline(i)) / self.grid.h,
            (p.y - self.grid.yline(j)) / self.grid.h,
        )
    }

    /// Cover cell owning `p`; falls back to the nearest cover cell in the
    /// 3x3 ring around the located cell (polynomial extension).
    pub fn owning_cover_cell(&self, p: Vec2) -> Result<u32> {
        let (i, j) = self.grid.locate_clamped(p);
        let c = self.grid.cell_index(i, j) as u32;
        if self.cls.is_cover(c) {
            return Ok(c);
        }
        let mut best: Option<(f64, u32)> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= self.grid.nx as i64 || jj >= self.grid.ny as i64 {
                    continue;
                }
                let cand = self.grid.cell_index(ii as usize, jj as usize) as u32;
                if !self.cls.is_cover(cand) {
                    continue;
                }
                let d2 = (self.grid.cell_box(cand as usize).center() - p).norm_sq();
                if best.map_or(true, |(bd, _)| d2 < bd) {
                    best = Some((d2, cand));
                }
            }
        }
        best.map(|(_, c)| c).ok_or_else(|| {
            SolverError::PointOutsideHistoryDomain(format!("({}, {})", p.x, p.y))
        })
    }

    pub fn eval_scalar_in_cell(&self, cell: u32, coeffs: &[f64], p: Vec2) -> f64 {
        let mut vals = [0.0; 25];
        quad_basis_values(self.k, self.local_coords(cell, p), &mut vals);
        let dofs = self.dofs.dofs_of(cell).expect("cell has dofs");
        let mut acc = 0.0;
        for (v, d) in vals[..dofs.len()].iter().zip(dofs) {
            acc += coeffs[*d as usize] * v;
        }
        acc
    }

    pub fn eval_vec_in_cell(&self, cell: u32, f: &Field2, p: Vec2) -> Vec2 {
        let mut vals = [0.0; 25];
        quad_basis_values(self.k, self.local_coords(cell, p), &mut vals);
        let dofs = self.dofs.dofs_of(cell).expect("cell has dofs");
        let mut acc = Vec2::ZERO;
        for (v, d) in vals[..dofs.len()].iter().zip(dofs) {
            acc.x += f[0][*d as usize] * v;
            acc.y += f[1][*d as usize] * v;
        }
        acc
    }

    pub fn eval_scalar(&self, coeffs: &[f64], p: Vec2) -> Result<f64> {
        Ok(self.eval_scalar_in_cell(self.owning_cover_cell(p)?, coeffs, p))
    }

    pub fn eval_vec(&self, f: &Field2, p: Vec2) -> Result<Vec2> {
        Ok(self.eval_vec_in_cell(self.owning_cover_cell(p)?, f, p))
    }

    /// Value and physical Jacobian [[du_x/dx, du_x/dy], [du_y/dx, du_y/dy]].
    pub fn eval_vec_grad_in_cell(&self, cell: u32, f: &Field2, p: Vec2) -> (Vec2, Mat2) {
        let nn = quad_node_count(self.k);
        let mut vals = [0.0; 25];
        let mut grads = [Vec2::ZERO; 25];
        quad_basis(self.k, self.local_coords(cell, p), &mut vals, &mut grads);
        let dofs = self.dofs.dofs_of(cell).expect("cell has dofs");
        let mut acc = Vec2::ZERO;
        let mut jac = Mat2::default();
        let inv_h = 1.0 / self.grid.h;
        for i in 0..nn {
            let d = dofs[i] as usize;
            let g = grads[i] * inv_h;
            acc.x += f[0][d] * vals[i];
            acc.y += f[1][d] * vals[i];
            jac.a += f[0][d] * g.x;
            jac.b += f[0][d] * g.y;
            jac.c += f[1][d] * g.x;
            jac.d += f[1][d] * g.y;
        }
        (acc, jac)
    }

    /// Nodal interpolant of an analytic vector field.
    pub fn interpolate(&self, f: impl Fn(Vec2) -> Vec2) -> Field2 {
        let n = self.dofs.n_dofs;
        let mut fx = vec![0.0; n];
        let mut fy = vec![0.0; n];
        for (d, &p) in self.dofs.positions.iter().enumerate() {
            let v = f(p);
            fx[d] = v.x;
            fy[d] = v.y;
        }
        [fx, fy]
    }

    /// area(Omega_h ∩ cell): full for interior cells, by the cut
    /// decomposition for cut cells, zero otherwise.
    pub fn area_in_cell(&self, cell: u32) -> f64 {
        if self.table.is_cut(cell) {
            self.regions.cell_area(&self.curve, cell)
        } else if self.cls.label(cell) == CellLabel::Interior {
            self.grid.h * self.grid.h
        } else {
            0.0
        }
    }

    pub fn domain_area(&self) -> f64 {
        (0..self.grid.n_cells() as u32).map(|c| self.area_in_cell(c)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Ellipse;

    fn disk_geometry(k: usize) -> Geometry<Ellipse> {
        let grid = GridSpec::square(0.0, 1.0, 16);
        let circle = Ellipse::circle(Vec2::new(0.5, 0.5), 0.3);
        Geometry::build(circle, grid, k).unwrap()
    }

    #[test]
    fn interpolation_reproduces_polynomials_of_degree_k() {
        for k in 1..=4usize {
            let geom = disk_geometry(k);
            let f = |p: Vec2| {
                Vec2::new(
                    (1.0 + p.x).powi(k as i32),
                    (0.3 + p.y).powi(k as i32) - p.x,
                )
            };
            let coeffs = geom.interpolate(f);
            for &p in &[
                Vec2::new(0.5, 0.5),
                Vec2::new(0.31, 0.62),
                Vec2::new(0.717, 0.401),
            ] {
                let got = geom.eval_vec(&coeffs, p).unwrap();
                assert!((got - f(p)).norm() < 1e-11, "k={k} at ({}, {})", p.x, p.y);
            }
        }
    }

    #[test]
    fn gradient_matches_analytic_for_interpolated_quadratic() {
        let geom = disk_geometry(2);
        let f = |p: Vec2| Vec2::new(p.x * p.x + 2.0 * p.y, p.x * p.y);
        let coeffs = geom.interpolate(f);
        let p = Vec2::new(0.45, 0.58);
        let cell = geom.owning_cover_cell(p).unwrap();
        let (v, j) = geom.eval_vec_grad_in_cell(cell, &coeffs, p);
        assert!((v - f(p)).norm() < 1e-12);
        assert!((j.a - 2.0 * p.x).abs() < 1e-11);
        assert!((j.b - 2.0).abs() < 1e-11);
        assert!((j.c - p.y).abs() < 1e-11);
        assert!((j.d - p.x).abs() < 1e-11);
    }

    #[test]
    fn continuity_across_shared_cover_edges() {
        let geom = disk_geometry(3);
        let coeffs = geom.interpolate(|p| Vec2::new((3.1f64 * p.x).sin() * p.y, p.x - p.y * p.y));
        let h = geom.grid.h;
        for &cell in &geom.cls.cover {
            let (i, j) = geom.grid.cell_coords(cell as usize);
            let right = geom.grid.cell_index(i + 1, j) as u32;
            if !geom.cls.is_cover(right) {
                continue;
            }
            let x = geom.grid.xline(i + 1);
            for m in 0..5 {
                let p = Vec2::new(x, geom.grid.yline(j) + h * (0.1 + 0.2 * m as f64));
                let a = geom.eval_vec_in_cell(cell, &coeffs, p);
                let b = geom.eval_vec_in_cell(right, &coeffs, p);
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn extension_evaluates_just_outside_cover() {
        let geom = disk_geometry(2);
        let coeffs = geom.interpolate(|p| Vec2::new(p.x, p.y));
        // A point just outside the circle but within the cover halo.
        let p = Vec2::new(0.5, 0.5 + 0.3 + 0.04);
        let v = geom.eval_vec(&coeffs, p).unwrap();
        assert!((v - p).norm() < 1e-10);
        // Far outside fails.
        assert!(geom.eval_vec(&coeffs, Vec2::new(0.02, 0.02)).is_err());
    }

    #[test]
    fn domain_area_matches_curve_area() {
        let geom = disk_geometry(2);
        let exact = std::f64::consts::PI * 0.3 * 0.3;
        assert!((geom.domain_area() - exact).abs() < 1e-10);
    }
}
