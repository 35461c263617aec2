//! The discrete forward flow map: one SBDF-k extrapolation step of
//! dX/dt = u along the characteristic through each query point.

use crate::curve::ClosedCurve;
use crate::error::{Result, SolverError};
use crate::fem::{Field2, Geometry};
use crate::geom::Vec2;
use crate::sbdf::SbdfScheme;

use super::patch::PatchMap;

/// One history level as seen by the forward map: the step's geometry and
/// solution, plus the backward map built at that step (to the level below).
pub struct HistoryRef<'a, C: ClosedCurve> {
    pub geom: &'a Geometry<C>,
    pub u: &'a Field2,
    pub back: Option<&'a PatchMap>,
}

/// Evaluator of the step-n forward map from the k previous levels;
/// `hist[0]` is step n-1, `hist[k-1]` is step n-k.
pub struct ForwardMap<'a, C: ClosedCurve> {
    pub scheme: SbdfScheme,
    pub tau: f64,
    pub hist: Vec<HistoryRef<'a, C>>,
}

impl<'a, C: ClosedCurve> ForwardMap<'a, C> {
    pub fn new(
        scheme: SbdfScheme,
        tau: f64,
        hist: Vec<HistoryRef<'a, C>>,
    ) -> Result<ForwardMap<'a, C>> {
        if hist.len() != scheme.order {
            return Err(SolverError::HistoryMissing(format!(
                "order {} forward map given {} levels",
                scheme.order,
                hist.len()
            )));
        }
        Ok(ForwardMap { scheme, tau, hist })
    }

    /// New position at step n of the material point at `x` in step n-1:
    /// (1/a0) sum_i [tau b_i u^{n-i}(z_i) - a_i z_i] with z_i the pullback
    /// of x to level n-i through the stored one-step backward maps.
    pub fn eval(&self, x: Vec2) -> Result<Vec2> {
        let k = self.scheme.order;
        let mut z = x;
        let mut acc = Vec2::ZERO;
        for i in 1..=k {
            if i > 1 {
                let bm = self.hist[i - 2].back.ok_or_else(|| {
                    SolverError::HistoryMissing(format!("level n-{} has no backward map", i - 1))
                })?;
                z = bm.backward(z)?;
            }
            let e = &self.hist[i - 1];
            let u = e.geom.eval_vec(e.u, z)?;
            acc += u * (self.tau * self.scheme.b(i)) - z * self.scheme.a(i);
        }
        Ok(acc / self.scheme.a(0))
    }

    /// Pullback X^{n-1,n-i}(x); i = 1 is the identity.
    pub fn history_position(&self, i: usize, x: Vec2) -> Result<Vec2> {
        let mut z = x;
        for j in 2..=i {
            let bm = self.hist[j - 2].back.ok_or_else(|| {
                SolverError::HistoryMissing(format!("level n-{} has no backward map", j - 1))
            })?;
            z = bm.backward(z)?;
        }
        Ok(z)
    }
}

/// Applies the given one-step backward maps in order.
pub fn compose_backward(maps: &[&PatchMap], x: Vec2) -> Result<Vec2> {
    let mut z = x;
    for m in maps {
        z = m.backward(z)?;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Ellipse, SplineCurve};
    use crate::grid::GridSpec;

    fn rotate(p: Vec2, th: f64) -> Vec2 {
        let c = Vec2::new(0.5, 0.5);
        let d = p - c;
        let (s, co) = th.sin_cos();
        c + Vec2::new(co * d.x - s * d.y, s * d.x + co * d.y)
    }

    fn disk_at(angle: f64, k: usize) -> Geometry<SplineCurve> {
        let grid = GridSpec::square(0.0, 1.0, 16);
        let pts: Vec<Vec2> = Ellipse::circle(Vec2::new(0.7, 0.5), 0.15)
            .equal_arclength_points(24)
            .into_iter()
            .map(|p| rotate(p, angle))
            .collect();
        Geometry::build(SplineCurve::fit_closed(&pts), grid, k).unwrap()
    }

    fn zero_field<C: crate::curve::ClosedCurve>(g: &Geometry<C>) -> Field2 {
        [vec![0.0; g.dofs.n_dofs], vec![0.0; g.dofs.n_dofs]]
    }

    #[test]
    fn zero_velocity_keeps_points_fixed() {
        for k in 1..=4usize {
            let geoms: Vec<_> = (0..k).map(|_| disk_at(0.0, 2)).collect();
            let us: Vec<_> = geoms.iter().map(zero_field).collect();
            let maps: Vec<_> = geoms
                .iter()
                .map(|g| PatchMap::build(g, &mut |p| Ok(p)).unwrap())
                .collect();
            let hist: Vec<_> = (0..k)
                .map(|i| HistoryRef {
                    geom: &geoms[i],
                    u: &us[i],
                    back: Some(&maps[i]),
                })
                .collect();
            let fm = ForwardMap::new(SbdfScheme::new(k), 0.05, hist).unwrap();
            for &x in &[Vec2::new(0.7, 0.5), Vec2::new(0.62, 0.44), Vec2::new(0.8, 0.55)] {
                let y = fm.eval(x).unwrap();
                assert!((y - x).norm() < 5e-13, "k={k}: drift {:?}", y - x);
            }
        }
    }

    #[test]
    fn order_one_is_forward_euler() {
        let geom = disk_at(0.0, 2);
        let u = geom.interpolate(|p| Vec2::new(0.5 - p.y, p.x - 0.5));
        let tau = 0.03;
        let fm = ForwardMap::new(
            SbdfScheme::new(1),
            tau,
            vec![HistoryRef { geom: &geom, u: &u, back: None }],
        )
        .unwrap();
        let x = Vec2::new(0.73, 0.46);
        let want = x + geom.eval_vec(&u, x).unwrap() * tau;
        assert!((fm.eval(x).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn sbdf3_rotation_has_fourth_order_local_error() {
        // Rigid rotation: history solutions are the linear velocity field
        // (captured exactly by the space), history maps are exact rotations
        // (captured exactly by the charts), so the only error left is the
        // SBDF truncation O(tau^4).
        let k = 3;
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&tau| {
                let geoms: Vec<_> = (0..k).map(|i| disk_at(-(i as f64) * tau, 3)).collect();
                let us: Vec<_> = geoms
                    .iter()
                    .map(|g| g.interpolate(|p| Vec2::new(0.5 - p.y, p.x - 0.5)))
                    .collect();
                // Backward map stored at level n-i sends it to level n-i-1,
                // so it is built from the older geometry with fwd = +tau.
                let maps: Vec<_> = (0..k - 1)
                    .map(|i| {
                        PatchMap::build(&geoms[i + 1], &mut |p| Ok(rotate(p, tau))).unwrap()
                    })
                    .collect();
                let hist: Vec<_> = (0..k)
                    .map(|i| HistoryRef {
                        geom: &geoms[i],
                        u: &us[i],
                        back: if i < k - 1 { Some(&maps[i]) } else { None },
                    })
                    .collect();
                let fm = ForwardMap::new(SbdfScheme::new(k), tau, hist).unwrap();
                let mut worst = 0.0f64;
                for &x in &[Vec2::new(0.7, 0.5), Vec2::new(0.66, 0.56), Vec2::new(0.77, 0.48)] {
                    let err = (fm.eval(x).unwrap() - rotate(x, tau)).norm();
                    worst = worst.max(err);
                }
                worst
            })
            .collect();
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 3.7 && o2 > 3.7, "orders {o1:.2} {o2:.2}, errs {errs:?}");
    }

    #[test]
    fn composed_rotation_maps_give_multistep_rotation() {
        let tau = 0.04;
        let geoms: Vec<_> = (1..=3).map(|i| disk_at(-(i as f64) * tau, 3)).collect();
        let maps: Vec<_> = geoms
            .iter()
            .map(|g| PatchMap::build(g, &mut |p| Ok(rotate(p, tau))).unwrap())
            .collect();
        // maps[i-1] is X^{n-i+1,n-i} for i = 1..3; composing all three pulls
        // a step-n point back by 3 tau.
        let refs: Vec<&PatchMap> = maps.iter().collect();
        let x = Vec2::new(0.71, 0.53);
        let z = compose_backward(&refs, x).unwrap();
        assert!((z - rotate(x, -3.0 * tau)).norm() < 1e-11, "{:?}", z);
    }

    #[test]
    fn missing_history_is_reported() {
        let geom = disk_at(0.0, 2);
        let u = zero_field(&geom);
        let hist = vec![
            HistoryRef { geom: &geom, u: &u, back: None },
            HistoryRef { geom: &geom, u: &u, back: None },
        ];
        let fm = ForwardMap::new(SbdfScheme::new(2), 0.05, hist).unwrap();
        assert!(matches!(
            fm.eval(Vec2::new(0.7, 0.5)),
            Err(SolverError::HistoryMissing(_))
        ));
        assert!(
            ForwardMap::<SplineCurve>::new(SbdfScheme::new(3), 0.05, Vec::new()).is_err()
        );
    }
}
