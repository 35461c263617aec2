//! Periodic C^2 cubic spline through a closed polygon of control points,
//! parametrized by cumulative chord length.

use crate::geom::Vec2;

use super::{Axis, ClosedCurve, MonoPiece};

/// Closed interpolating spline. Piece j covers the knot interval
/// [t_j, t_{j+1}] with local coordinates s = l - t_j:
///
///   x(s) = a + b s + c s^2 + d s^3.
#[derive(Clone, Debug)]
pub struct SplineCurve {
    points: Vec<Vec2>,
    /// Cumulative chord lengths, length J+1 with knots[0] = 0.
    knots: Vec<f64>,
    /// Per-piece coefficients [a, b, c, d].
    coeff: Vec<[Vec2; 4]>,
    mono: Vec<MonoPiece>,
}

impl SplineCurve {
    /// Fits the periodic spline through `points` with chord-length knots.
    /// Needs at least 3 distinct points; consecutive duplicates are rejected.
    pub fn fit_closed(points: &[Vec2]) -> SplineCurve {
        let j = points.len();
        assert!(j >= 3, "periodic spline needs at least 3 control points");
        let mut knots = Vec::with_capacity(j + 1);
        knots.push(0.0);
        for i in 0..j {
            let chord = points[(i + 1) % j].dist(points[i]);
            assert!(chord > 0.0, "coincident consecutive control points");
            knots.push(knots[i] + chord);
        }

        let h: Vec<f64> = (0..j).map(|i| knots[i + 1] - knots[i]).collect();
        let hm = |i: usize| h[(i + j - 1) % j];
        let dd = |i: usize| {
            let p = points[i];
            let next = points[(i + 1) % j];
            let prev = points[(i + j - 1) % j];
            (next - p) / h[i] - (p - prev) / hm(i)
        };

        // Cyclic tridiagonal system for the knot second derivatives M_i:
        //   (h_{i-1}/6) M_{i-1} + ((h_{i-1}+h_i)/3) M_i + (h_i/6) M_{i+1} = dd_i.
        let alpha: Vec<f64> = (0..j).map(|i| hm(i) / 6.0).collect();
        let beta: Vec<f64> = (0..j).map(|i| (hm(i) + h[i]) / 3.0).collect();
        let gamma: Vec<f64> = (0..j).map(|i| h[i] / 6.0).collect();
        let rhs: Vec<Vec2> = (0..j).map(dd).collect();
        let m = solve_cyclic_tridiag(&alpha, &beta, &gamma, &rhs);

        let mut coeff = Vec::with_capacity(j);
        for i in 0..j {
            let inext = (i + 1) % j;
            let a = points[i];
            let b = (points[inext] - points[i]) / h[i] - (m[i] * 2.0 + m[inext]) * (h[i] / 6.0);
            let c = m[i] * 0.5;
            let d = (m[inext] - m[i]) / (6.0 * h[i]);
            coeff.push([a, b, c, d]);
        }

        let mut curve = SplineCurve { points: points.to_vec(), knots, coeff, mono: Vec::new() };
        curve.mono = curve.build_mono_pieces();
        curve
    }

    pub fn control_points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    fn wrap(&self, l: f64) -> f64 {
        let len = self.param_len();
        let w = l.rem_euclid(len);
        if w == len {
            0.0
        } else {
            w
        }
    }

    /// Piece index containing parameter l (already wrapped).
    fn piece_of(&self, l: f64) -> usize {
        let n = self.coeff.len();
        let i = self.knots.partition_point(|&t| t <= l);
        i.clamp(1, n) - 1
    }

    fn build_mono_pieces(&self) -> Vec<MonoPiece> {
        let mut mono = Vec::with_capacity(2 * self.coeff.len());
        for (j, co) in self.coeff.iter().enumerate() {
            let h = self.knots[j + 1] - self.knots[j];
            let mut events = vec![0.0, h];
            for axis in [Axis::X, Axis::Y] {
                let pick = |v: Vec2| axis.of(v);
                // Roots of b + 2 c s + 3 d s^2 inside (0, h).
                for s in quadratic_roots(3.0 * pick(co[3]), 2.0 * pick(co[2]), pick(co[1])) {
                    if s > 0.0 && s < h {
                        events.push(s);
                    }
                }
            }
            events.sort_by(|a, b| a.partial_cmp(b).unwrap());
            events.dedup_by(|b, a| *b - *a <= 1e-13 * h);
            if *events.last().unwrap() < h {
                events.push(h);
            }
            for w in events.windows(2) {
                let (s0, s1) = (w[0], w[1]);
                if s1 <= s0 {
                    continue;
                }
                // Knot endpoints use the exact control points so adjacent
                // pieces share endpoint coordinates bitwise.
                let p0 = if s0 == 0.0 { self.points[j] } else { eval_piece(co, s0) };
                let p1 = if s1 == h {
                    self.points[(j + 1) % self.points.len()]
                } else {
                    eval_piece(co, s1)
                };
                mono.push(MonoPiece {
                    l0: self.knots[j] + s0,
                    l1: self.knots[j] + s1,
                    p0,
                    p1,
                });
            }
        }
        mono
    }

    /// True when two non-adjacent chords of the control polygon intersect.
    pub fn control_polygon_self_intersects(&self) -> bool {
        let n = self.points.len();
        for i in 0..n {
            let a0 = self.points[i];
            let a1 = self.points[(i + 1) % n];
            for j in (i + 2)..n {
                // Skip the chord adjacent to i across the closing edge.
                if i == 0 && j == n - 1 {
                    continue;
                }
                let b0 = self.points[j];
                let b1 = self.points[(j + 1) % n];
                if segments_intersect(a0, a1, b0, b1) {
                    return true;
                }
            }
        }
        false
    }
}

fn eval_piece(co: &[Vec2; 4], s: f64) -> Vec2 {
    co[0] + (co[1] + (co[2] + co[3] * s) * s) * s
}

/// Real roots of a s^2 + b s + c, degenerating gracefully to linear.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = if b >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

fn segments_intersect(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = (a1 - a0).cross(b0 - a0);
    let d2 = (a1 - a0).cross(b1 - a0);
    let d3 = (b1 - b0).cross(a0 - b0);
    let d4 = (b1 - b0).cross(a1 - b0);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Sherman-Morrison solve of the cyclic tridiagonal system with sub-diagonal
/// `alpha`, diagonal `beta`, super-diagonal `gamma` and wrap-around entries
/// A[0][n-1] = alpha[0], A[n-1][0] = gamma[n-1].
fn solve_cyclic_tridiag(alpha: &[f64], beta: &[f64], gamma: &[f64], rhs: &[Vec2]) -> Vec<Vec2> {
    let n = beta.len();
    assert!(n >= 3);
    let sigma = -beta[0];
    let mut diag = beta.to_vec();
    diag[0] -= sigma;
    diag[n - 1] -= alpha[0] * gamma[n - 1] / sigma;

    let solve = |b: &mut Vec<Vec2>| {
        // Thomas algorithm on the modified tridiagonal matrix.
        let mut d = diag.clone();
        for i in 1..n {
            let w = alpha[i] / d[i - 1];
            d[i] -= w * gamma[i - 1];
            let prev = b[i - 1];
            b[i] -= prev * w;
        }
        b[n - 1] = b[n - 1] / d[n - 1];
        for i in (0..n - 1).rev() {
            let next = b[i + 1];
            b[i] = (b[i] - next * gamma[i]) / d[i];
        }
    };

    let mut z = rhs.to_vec();
    solve(&mut z);
    // T w = u with u = (sigma, 0, ..., 0, gamma[n-1]); both components share it.
    let mut w = vec![Vec2::ZERO; n];
    w[0] = Vec2::new(sigma, sigma);
    w[n - 1] = Vec2::new(gamma[n - 1], gamma[n - 1]);
    solve(&mut w);

    // x = z - w (v . z) / (1 + v . w) with v = (1, 0, ..., 0, alpha[0]/sigma).
    let vfac = alpha[0] / sigma;
    let vz = Vec2::new(z[0].x + vfac * z[n - 1].x, z[0].y + vfac * z[n - 1].y);
    let vw = Vec2::new(w[0].x + vfac * w[n - 1].x, w[0].y + vfac * w[n - 1].y);
    let fx = vz.x / (1.0 + vw.x);
    let fy = vz.y / (1.0 + vw.y);
    z.iter()
        .zip(&w)
        .map(|(zi, wi)| Vec2::new(zi.x - fx * wi.x, zi.y - fy * wi.y))
        .collect()
}

impl ClosedCurve for SplineCurve {
    fn param_len(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn point(&self, l: f64) -> Vec2 {
        let l = self.wrap(l);
        let j = self.piece_of(l);
        eval_piece(&self.coeff[j], l - self.knots[j])
    }

    fn tangent(&self, l: f64) -> Vec2 {
        let l = self.wrap(l);
        let j = self.piece_of(l);
        let s = l - self.knots[j];
        let co = &self.coeff[j];
        co[1] + (co[2] * 2.0 + co[3] * (3.0 * s)) * s
    }

    fn accel(&self, l: f64) -> Vec2 {
        let l = self.wrap(l);
        let j = self.piece_of(l);
        let s = l - self.knots[j];
        let co = &self.coeff[j];
        co[2] * 2.0 + co[3] * (6.0 * s)
    }

    fn mono_pieces(&self) -> &[MonoPiece] {
        &self.mono
    }

    fn arc_gauss_points(&self) -> usize {
        4
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{contains, enclosed_area};
    use std::f64::consts::PI;

    fn circle_points(c: Vec2, r: f64, n: usize) -> Vec<Vec2> {
        (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                c + Vec2::new(r * th.cos(), r * th.sin())
            })
            .collect()
    }

    #[test]
    fn interpolates_control_points() {
        let pts = circle_points(Vec2::new(0.3, 0.4), 0.25, 17);
        let sp = SplineCurve::fit_closed(&pts);
        for (j, &p) in pts.iter().enumerate() {
            let q = sp.point(sp.knots()[j]);
            assert!((q - p).norm() < 1e-14, "knot {j}");
        }
    }

    #[test]
    fn periodic_c2_continuity() {
        let pts = circle_points(Vec2::ZERO, 1.0, 11);
        let sp = SplineCurve::fit_closed(&pts);
        let len = sp.param_len();
        for j in 0..pts.len() {
            let t = sp.knots()[j];
            let eps = 1e-7 * len;
            let tm = if t == 0.0 { len - eps } else { t - eps };
            let d_before = sp.tangent(tm);
            let d_after = sp.tangent(t + eps);
            assert!((d_before - d_after).norm() < 1e-5, "C1 at knot {j}");
            let a_before = sp.accel(tm);
            let a_after = sp.accel(t + eps);
            assert!((a_before - a_after).norm() < 1e-4, "C2 at knot {j}");
        }
    }

    #[test]
    fn diamond_spline_matches_vertices_and_contains_center() {
        let pts = vec![
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
            Vec2::new(0.0, -1.0),
        ];
        let sp = SplineCurve::fit_closed(&pts);
        assert!(contains(&sp, Vec2::ZERO));
        assert!(!contains(&sp, Vec2::new(1.2, 0.0)));
        // Symmetry: the spline bulges outward identically in each quadrant.
        let a = enclosed_area(&sp);
        assert!(a > 2.0 && a < PI, "area {a}");
    }

    #[test]
    fn circle_spline_radial_deviation_fourth_order() {
        // Max radial deviation of the fitted spline from the circle scales
        // like (L/J)^4 with a constant below 1 for chord-length knots.
        let r = 0.15;
        let c = Vec2::new(0.5, 0.75);
        let l_total = 2.0 * PI * r;
        for n in [32usize, 64, 128] {
            let sp = SplineCurve::fit_closed(&circle_points(c, r, n));
            let mut dev = 0.0f64;
            for i in 0..(8 * n) {
                let l = sp.param_len() * i as f64 / (8 * n) as f64;
                let p = sp.point(l);
                dev = dev.max(((p - c).norm() - r).abs());
            }
            let bound = (l_total / n as f64).powi(4);
            assert!(dev < bound, "n={n}: dev {dev:e} vs bound {bound:e}");
        }
    }

    #[test]
    fn area_of_circle_spline_converges() {
        let r = 0.3;
        let exact = PI * r * r;
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let sp = SplineCurve::fit_closed(&circle_points(Vec2::ZERO, r, n));
            errs.push((enclosed_area(&sp) - exact).abs());
        }
        // Fourth order: each doubling shrinks the error about 16x.
        assert!(errs[0] / errs[1] > 12.0, "ratio {}", errs[0] / errs[1]);
        assert!(errs[1] / errs[2] > 12.0, "ratio {}", errs[1] / errs[2]);
        assert!(errs[2] < 1e-7, "err {}", errs[2]);
    }

    #[test]
    fn self_intersection_detection() {
        let ok = circle_points(Vec2::ZERO, 1.0, 8);
        assert!(!SplineCurve::fit_closed(&ok).control_polygon_self_intersects());
        // Figure-eight ordering of the same points.
        let bad = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(SplineCurve::fit_closed(&bad).control_polygon_self_intersects());
    }
}
