//! Analytic ellipse (and circle) reference shapes, parametrized by the
//! eccentric angle on [0, 2pi), traversed counterclockwise.

use std::f64::consts::PI;

use crate::geom::Vec2;
use crate::quadrature::gauss_legendre;

use super::{Axis, ClosedCurve, MonoPiece};

#[derive(Clone, Debug)]
pub struct Ellipse {
    pub center: Vec2,
    pub r1: f64,
    pub r2: f64,
    mono: Vec<MonoPiece>,
}

impl Ellipse {
    pub fn new(center: Vec2, r1: f64, r2: f64) -> Ellipse {
        assert!(r1 > 0.0 && r2 > 0.0);
        let east = center + Vec2::new(r1, 0.0);
        let north = center + Vec2::new(0.0, r2);
        let west = center - Vec2::new(r1, 0.0);
        let south = center - Vec2::new(0.0, r2);
        let mono = vec![
            MonoPiece { l0: 0.0, l1: 0.5 * PI, p0: east, p1: north },
            MonoPiece { l0: 0.5 * PI, l1: PI, p0: north, p1: west },
            MonoPiece { l0: PI, l1: 1.5 * PI, p0: west, p1: south },
            MonoPiece { l0: 1.5 * PI, l1: 2.0 * PI, p0: south, p1: east },
        ];
        Ellipse { center, r1, r2, mono }
    }

    pub fn circle(center: Vec2, r: f64) -> Ellipse {
        Ellipse::new(center, r, r)
    }

    /// Arc length element |d point / d theta|.
    fn speed(&self, th: f64) -> f64 {
        let (s, c) = th.sin_cos();
        (self.r1 * self.r1 * s * s + self.r2 * self.r2 * c * c).sqrt()
    }

    /// Total circumference to near machine precision.
    pub fn circumference(&self) -> f64 {
        self.arc_length_table(4096).1
    }

    fn arc_length_table(&self, m: usize) -> (Vec<f64>, f64) {
        let gauss = gauss_legendre(8);
        let dt = 2.0 * PI / m as f64;
        let mut cum = Vec::with_capacity(m + 1);
        cum.push(0.0);
        let mut total = 0.0;
        for i in 0..m {
            let t0 = i as f64 * dt;
            let mut seg = 0.0;
            for &(q, w) in gauss {
                seg += w * self.speed(t0 + q * dt);
            }
            total += seg * dt;
            cum.push(total);
        }
        (cum, total)
    }

    /// `n` angles spaced at exactly equal arc length, starting at angle 0.
    pub fn equal_arclength_params(&self, n: usize) -> Vec<f64> {
        assert!(n >= 3);
        let m = 4096;
        let (cum, total) = self.arc_length_table(m);
        let dt = 2.0 * PI / m as f64;
        let gauss = gauss_legendre(8);
        let arc_from = |t0: f64, t1: f64| -> f64 {
            let mut s = 0.0;
            for &(q, w) in gauss {
                s += w * self.speed(t0 + q * (t1 - t0));
            }
            s * (t1 - t0)
        };
        let mut params = Vec::with_capacity(n);
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            let i = cum.partition_point(|&s| s <= target).saturating_sub(1).min(m - 1);
            let t0 = i as f64 * dt;
            let mut th = t0 + dt * (target - cum[i]) / (cum[i + 1] - cum[i]).max(1e-300);
            for _ in 0..50 {
                let f = cum[i] + arc_from(t0, th) - target;
                let d = self.speed(th);
                let step = f / d;
                th -= step;
                if step.abs() < 1e-14 {
                    break;
                }
            }
            params.push(th);
        }
        params
    }

    /// `n` points spaced at exactly equal arc length, starting at angle 0.
    pub fn equal_arclength_points(&self, n: usize) -> Vec<Vec2> {
        self.equal_arclength_params(n).into_iter().map(|th| self.point(th)).collect()
    }
}

impl ClosedCurve for Ellipse {
    fn param_len(&self) -> f64 {
        2.0 * PI
    }

    fn point(&self, l: f64) -> Vec2 {
        let (s, c) = l.sin_cos();
        self.center + Vec2::new(self.r1 * c, self.r2 * s)
    }

    fn tangent(&self, l: f64) -> Vec2 {
        let (s, c) = l.sin_cos();
        Vec2::new(-self.r1 * s, self.r2 * c)
    }

    fn accel(&self, l: f64) -> Vec2 {
        let (s, c) = l.sin_cos();
        Vec2::new(-self.r1 * c, -self.r2 * s)
    }

    fn mono_pieces(&self) -> &[MonoPiece] {
        &self.mono
    }

    fn arc_gauss_points(&self) -> usize {
        20
    }

    fn mono_root(&self, piece: &MonoPiece, axis: Axis, c: f64) -> f64 {
        // Closed-form inversion per quadrant.
        let th = match axis {
            Axis::X => {
                let v = ((c - self.center.x) / self.r1).clamp(-1.0, 1.0);
                let base = v.acos();
                if piece.l0 < PI { base } else { 2.0 * PI - base }
            }
            Axis::Y => {
                let v = ((c - self.center.y) / self.r2).clamp(-1.0, 1.0);
                let base = v.asin();
                if piece.l0 >= 0.5 * PI && piece.l0 < 1.5 * PI {
                    PI - base
                } else if base < 0.0 {
                    2.0 * PI + base
                } else {
                    base
                }
            }
        };
        th.clamp(piece.l0, piece.l1)
    }
}
