//! Surface tracking: control points are advected by a forward flow map,
//! the point set is refined and coarsened to a target spacing, and the
//! spline is refit through the images.

use crate::error::{Result, SolverError};
use crate::geom::Vec2;

use super::{ClosedCurve, SplineCurve};

#[derive(Clone, Copy, Debug)]
pub struct TrackParams {
    /// Target chord spacing of the advected control polygon.
    pub eta: f64,
    /// Lower spacing fraction: chords at or below delta*eta are merged away.
    pub delta: f64,
}

impl TrackParams {
    pub fn new(h: f64, eta_factor: f64, delta: f64) -> TrackParams {
        TrackParams { eta: eta_factor * h, delta }
    }
}

/// Advances the curve through one step of the flow `fwd`.
///
/// Control point images whose chords exceed eta get intermediate preimages
/// inserted (ceil(gap/eta) equal parameter subdivisions, recursively until
/// every chord fits); afterwards points are removed while merged chords stay
/// within eta, so the final spacing sits in (delta*eta, eta] wherever the
/// geometry allows.
pub fn track_surface<F>(prev: &SplineCurve, fwd: &mut F, params: &TrackParams) -> Result<SplineCurve>
where
    F: FnMut(Vec2) -> Result<Vec2>,
{
    let knots = prev.knots();
    let n = prev.n_points();
    let mut samples: Vec<Vec2> = Vec::with_capacity(2 * n);

    let mut images = Vec::with_capacity(n + 1);
    for j in 0..n {
        images.push(fwd(prev.control_points()[j])?);
    }
    images.push(images[0]);

    for j in 0..n {
        samples.push(images[j]);
        subdivide(
            prev,
            fwd,
            knots[j],
            images[j],
            knots[j + 1],
            images[j + 1],
            params.eta,
            0,
            &mut samples,
        )?;
    }

    coarsen(&mut samples, params);

    let next = SplineCurve::fit_closed(&samples);
    if next.control_polygon_self_intersects() {
        return Err(SolverError::SelfIntersection(format!(
            "tracked polygon with {} points self-intersects",
            next.n_points()
        )));
    }
    Ok(next)
}

/// Emits the interior refinement samples of the gap (l0, l1); endpoints are
/// handled by the caller.
#[allow(clippy::too_many_arguments)]
fn subdivide<F>(
    prev: &SplineCurve,
    fwd: &mut F,
    l0: f64,
    q0: Vec2,
    l1: f64,
    q1: Vec2,
    eta: f64,
    depth: usize,
    out: &mut Vec<Vec2>,
) -> Result<()>
where
    F: FnMut(Vec2) -> Result<Vec2>,
{
    let gap = q1.dist(q0);
    if gap <= eta || depth >= 8 {
        return Ok(());
    }
    let m = (gap / eta).ceil() as usize;
    let dl = (l1 - l0) / m as f64;
    let mut last_l = l0;
    let mut last_q = q0;
    for i in 1..=m {
        let (li, qi) = if i == m {
            (l1, q1)
        } else {
            let li = l0 + i as f64 * dl;
            (li, fwd(prev.point(li))?)
        };
        subdivide(prev, fwd, last_l, last_q, li, qi, eta, depth + 1, out)?;
        if i < m {
            out.push(qi);
        }
        last_l = li;
        last_q = qi;
    }
    Ok(())
}

/// Cyclic removal sweep: points bounding a chord at or below delta*eta are
/// dropped while the merged chord stays within eta.
fn coarsen(pts: &mut Vec<Vec2>, params: &TrackParams) {
    let low = params.delta * params.eta;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < pts.len() && pts.len() > 4 {
            let n = pts.len();
            let prev = pts[(i + n - 1) % n];
            let next = pts[(i + 1) % n];
            let before = pts[i].dist(prev);
            let after = next.dist(pts[i]);
            if (before <= low || after <= low) && next.dist(prev) <= params.eta {
                pts.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{enclosed_area, Ellipse};
    use std::f64::consts::PI;

    fn circle_spline(r: f64, n: usize) -> SplineCurve {
        let pts = Ellipse::circle(Vec2::new(0.5, 0.5), r).equal_arclength_points(n);
        SplineCurve::fit_closed(&pts)
    }

    #[test]
    fn identity_flow_keeps_points() {
        let sp = circle_spline(0.25, 24);
        let params = TrackParams { eta: 2.0 * PI * 0.25 / 24.0 * 1.0001, delta: 0.01 };
        let next = track_surface(&sp, &mut |p| Ok(p), &params).unwrap();
        assert_eq!(next.n_points(), sp.n_points());
        for (a, b) in next.control_points().iter().zip(sp.control_points()) {
            assert!((*a - *b).norm() < 1e-14);
        }
    }

    #[test]
    fn rigid_rotation_preserves_spacing_and_area() {
        let sp = circle_spline(0.25, 32);
        let th = 0.3f64;
        let (s, c) = th.sin_cos();
        let ctr = Vec2::new(0.5, 0.5);
        let mut rot = |p: Vec2| {
            let r = p - ctr;
            Ok(ctr + Vec2::new(c * r.x - s * r.y, s * r.x + c * r.y))
        };
        let params = TrackParams { eta: 2.0 * PI * 0.25 / 32.0 * 1.001, delta: 0.01 };
        let next = track_surface(&sp, &mut rot, &params).unwrap();
        assert_eq!(next.n_points(), 32);
        let a0 = enclosed_area(&sp);
        let a1 = enclosed_area(&next);
        assert!((a0 - a1).abs() < 1e-13);
    }

    #[test]
    fn expansion_inserts_per_gap_formula() {
        // Uniform dilation by 2.7 about the center: every original chord maps
        // to one gap of 2.7 * chord, so each gap gets ceil(2.7*chord/eta) - 1
        // insertions on the first pass and none afterwards.
        let sp = circle_spline(0.2, 20);
        let ctr = Vec2::new(0.5, 0.5);
        let scale = 2.7;
        let chord = sp.control_points()[1].dist(sp.control_points()[0]);
        let eta = chord * 1.0001;
        let mut dil = |p: Vec2| Ok(ctr + (p - ctr) * scale);
        let params = TrackParams { eta, delta: 0.01 };
        let next = track_surface(&sp, &mut dil, &params).unwrap();
        // Independent count: images of the subdivided parameters.
        let mut expect = 0usize;
        for j in 0..20 {
            let q0 = ctr + (sp.control_points()[j] - ctr) * scale;
            let q1 = ctr + (sp.control_points()[(j + 1) % 20] - ctr) * scale;
            let m = (q0.dist(q1) / eta).ceil() as usize;
            // The m subchords of a circular arc are shorter than the full
            // chord; none should need a second pass here.
            expect += m;
        }
        assert_eq!(next.n_points(), expect);
    }

    #[test]
    fn contraction_removes_points() {
        let sp = circle_spline(0.25, 64);
        let ctr = Vec2::new(0.5, 0.5);
        let mut con = |p: Vec2| Ok(ctr + (p - ctr) * 0.25);
        let chord = sp.control_points()[1].dist(sp.control_points()[0]);
        let params = TrackParams { eta: chord * 1.0001, delta: 0.3 };
        let next = track_surface(&sp, &mut con, &params).unwrap();
        assert!(next.n_points() < 64, "kept {}", next.n_points());
        // Remaining chords respect the band (delta*eta, eta].
        let pts = next.control_points();
        let n = pts.len();
        for i in 0..n {
            let gap = pts[(i + 1) % n].dist(pts[i]);
            assert!(gap <= params.eta * (1.0 + 1e-12), "gap {gap}");
            assert!(gap > params.delta * params.eta * 0.999, "gap {gap}");
        }
    }
}
