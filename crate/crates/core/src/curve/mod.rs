//! Closed oriented curves in the plane.
//!
//! All curve types expose a common decomposition into pieces that are
//! monotone in both coordinates. Monotonicity makes point membership,
//! grid-line crossings and distance queries exact and branch-free: every
//! crossing of a coordinate line inside a piece is transversal and unique,
//! and the corner box of a piece's endpoints is its exact bounding box.

mod analytic;
mod spline;
#[cfg(test)]
pub(crate) mod testshapes;
pub mod tracking;

pub use analytic::Ellipse;
pub use spline::SplineCurve;

use crate::geom::{Aabb, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    #[inline]
    pub fn of(self, p: Vec2) -> f64 {
        match self {
            Axis::X => p.x,
            Axis::Y => p.y,
        }
    }
}

/// Parameter interval on which the curve is monotone in both coordinates and
/// infinitely smooth (no knots inside).
#[derive(Clone, Copy, Debug)]
pub struct MonoPiece {
    pub l0: f64,
    pub l1: f64,
    pub p0: Vec2,
    pub p1: Vec2,
}

impl MonoPiece {
    /// Exact bounding box: the corner box of the endpoints.
    pub fn bbox(&self) -> Aabb {
        Aabb::new(
            Vec2::new(self.p0.x.min(self.p1.x), self.p0.y.min(self.p1.y)),
            Vec2::new(self.p0.x.max(self.p1.x), self.p0.y.max(self.p1.y)),
        )
    }

    /// Half-open crossing test against the coordinate value `c`: true when the
    /// piece crosses the line `axis = c`, counting each shared endpoint once.
    pub fn spans(&self, axis: Axis, c: f64) -> bool {
        let a = axis.of(self.p0);
        let b = axis.of(self.p1);
        (a.min(b)..a.max(b)).contains(&c)
    }
}

/// Closed curve traversed counterclockwise (the enclosed domain lies to the
/// left of the tangent).
pub trait ClosedCurve {
    /// Total parameter length; parameters are taken modulo this.
    fn param_len(&self) -> f64;
    fn point(&self, l: f64) -> Vec2;
    /// First derivative with respect to the parameter.
    fn tangent(&self, l: f64) -> Vec2;
    /// Second derivative with respect to the parameter.
    fn accel(&self, l: f64) -> Vec2;
    /// Pieces monotone in both coordinates, covering one full period in
    /// ascending parameter order.
    fn mono_pieces(&self) -> &[MonoPiece];
    /// Gauss point count that integrates smooth data over one piece to
    /// near machine precision.
    fn arc_gauss_points(&self) -> usize;

    /// The unique parameter in `piece` where the given coordinate equals `c`.
    /// Requires `piece.spans(axis, c)` or an endpoint hit.
    fn mono_root(&self, piece: &MonoPiece, axis: Axis, c: f64) -> f64 {
        let a = axis.of(piece.p0) - c;
        let b = axis.of(piece.p1) - c;
        if a == 0.0 {
            return piece.l0;
        }
        if b == 0.0 {
            return piece.l1;
        }
        debug_assert!(a * b < 0.0, "mono_root without a sign change");
        let mut lo = piece.l0;
        let mut hi = piece.l1;
        let mut flo = a;
        // Safeguarded Newton: fall back to bisection whenever the Newton step
        // leaves the bracket.
        let mut l = 0.5 * (lo + hi);
        for _ in 0..80 {
            let f = axis.of(self.point(l)) - c;
            if f == 0.0 {
                return l;
            }
            if f * flo < 0.0 {
                hi = l;
            } else {
                lo = l;
                flo = f;
            }
            let d = axis.of(self.tangent(l));
            let mut next = if d != 0.0 { l - f / d } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - l).abs() <= 1e-15 * self.param_len() {
                return next;
            }
            l = next;
        }
        l
    }
}

/// Winding parity membership test. Points exactly on the curve resolve
/// deterministically but arbitrarily.
pub fn contains<C: ClosedCurve + ?Sized>(curve: &C, p: Vec2) -> bool {
    let mut odd = false;
    for mp in curve.mono_pieces() {
        if !mp.spans(Axis::Y, p.y) {
            continue;
        }
        // x-coordinate where the piece crosses the horizontal line through p.
        let x = if p.y == mp.p0.y {
            mp.p0.x
        } else if p.y == mp.p1.y {
            mp.p1.x
        } else {
            let xlo = mp.p0.x.min(mp.p1.x);
            let xhi = mp.p0.x.max(mp.p1.x);
            if xlo > p.x {
                odd = !odd;
                continue;
            } else if xhi <= p.x {
                continue;
            }
            curve.point(curve.mono_root(mp, Axis::Y, p.y)).x
        };
        if x > p.x {
            odd = !odd;
        }
    }
    odd
}

/// Closest point on the curve: returns (parameter, distance).
pub fn closest_point<C: ClosedCurve + ?Sized>(curve: &C, p: Vec2) -> (f64, f64) {
    let mut best_l = 0.0;
    let mut best_d2 = f64::INFINITY;
    for mp in curve.mono_pieces() {
        if mp.bbox().dist_sq(p) >= best_d2 {
            continue;
        }
        // Coarse scan, then a few damped Newton steps on (x - p) . x'.
        let mut l_loc = mp.l0;
        let mut d_loc = f64::INFINITY;
        const M: usize = 8;
        for s in 0..=M {
            let l = mp.l0 + (mp.l1 - mp.l0) * s as f64 / M as f64;
            let d2 = (curve.point(l) - p).norm_sq();
            if d2 < d_loc {
                d_loc = d2;
                l_loc = l;
            }
        }
        let mut l = l_loc;
        for _ in 0..25 {
            let x = curve.point(l);
            let t = curve.tangent(l);
            let a = curve.accel(l);
            let g = (x - p).dot(t);
            let gp = t.norm_sq() + (x - p).dot(a);
            if gp <= 0.0 {
                break;
            }
            let step = (g / gp).clamp(-(mp.l1 - mp.l0), mp.l1 - mp.l0);
            l = (l - step).clamp(mp.l0, mp.l1);
            if step.abs() < 1e-15 * curve.param_len() {
                break;
            }
        }
        let d2 = (curve.point(l) - p).norm_sq();
        let (l, d2) = if d2 < d_loc { (l, d2) } else { (l_loc, d_loc) };
        if d2 < best_d2 {
            best_d2 = d2;
            best_l = l;
        }
    }
    (best_l, best_d2.sqrt())
}

/// True when some point of the curve lies within `cutoff` of the closed
/// rectangle. Branch-and-bound on monotone pieces; exact up to ~1e-12 h
/// fuzz at the cutoff itself.
pub fn within_distance_of_rect<C: ClosedCurve + ?Sized>(curve: &C, rect: &Aabb, cutoff: f64) -> bool {
    let c2 = cutoff * cutoff;
    for mp in curve.mono_pieces() {
        if rect_piece_within(curve, mp, rect, c2, 0) {
            return true;
        }
    }
    false
}

fn rect_piece_within<C: ClosedCurve + ?Sized>(
    curve: &C,
    mp: &MonoPiece,
    rect: &Aabb,
    c2: f64,
    depth: usize,
) -> bool {
    // Lower bound: distance from the exact piece bbox to the rectangle.
    let bb = mp.bbox();
    let gap2 = rect_rect_dist_sq(&bb, rect);
    if gap2 > c2 {
        return false;
    }
    if rect.dist_sq(mp.p0) <= c2 || rect.dist_sq(mp.p1) <= c2 {
        return true;
    }
    let lm = 0.5 * (mp.l0 + mp.l1);
    let pm = curve.point(lm);
    if rect.dist_sq(pm) <= c2 {
        return true;
    }
    if depth >= 40 || (mp.l1 - mp.l0) < 1e-13 * curve.param_len() {
        // Bbox gap is within cutoff and samples are not: the piece is tiny,
        // treat the midpoint sample as authoritative.
        return false;
    }
    let a = MonoPiece { l0: mp.l0, l1: lm, p0: mp.p0, p1: pm };
    let b = MonoPiece { l0: lm, l1: mp.l1, p0: pm, p1: mp.p1 };
    rect_piece_within(curve, &a, rect, c2, depth + 1) || rect_piece_within(curve, &b, rect, c2, depth + 1)
}

fn rect_rect_dist_sq(a: &Aabb, b: &Aabb) -> f64 {
    let dx = (b.min.x - a.max.x).max(a.min.x - b.max.x).max(0.0);
    let dy = (b.min.y - a.max.y).max(a.min.y - b.max.y).max(0.0);
    dx * dx + dy * dy
}

/// Signed enclosed area by Green's theorem; positive for counterclockwise
/// traversal. Exact for splines, near machine precision for analytic curves.
pub fn enclosed_area<C: ClosedCurve + ?Sized>(curve: &C) -> f64 {
    let gauss = crate::quadrature::gauss_legendre(curve.arc_gauss_points());
    let mut area = 0.0;
    for mp in curve.mono_pieces() {
        let len = mp.l1 - mp.l0;
        for &(q, w) in gauss {
            let l = mp.l0 + q * len;
            let x = curve.point(l);
            let t = curve.tangent(l);
            area += 0.5 * w * len * x.cross(t);
        }
    }
    area
}

/// Outward unit normal for a counterclockwise curve.
pub fn outward_normal<C: ClosedCurve + ?Sized>(curve: &C, l: f64) -> Vec2 {
    let t = curve.tangent(l).normalized();
    Vec2::new(t.y, -t.x)
}
