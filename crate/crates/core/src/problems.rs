//! Manufactured moving-domain problems: an exact velocity field with its
//! analytic derivatives, the initial shape, and the synthesized forcing
//! f = u_t + (u·∇)u − νΔu and Neumann data g_N = ∇u·n.

use std::f64::consts::PI;

use crate::curve::Ellipse;
use crate::geom::{Mat2, Vec2};

pub trait ProblemData {
    fn name(&self) -> &'static str;
    fn initial_shape(&self) -> Ellipse;
    /// Hold-all box [lo, hi]^2 tiled by the background grid.
    fn domain(&self) -> (f64, f64);
    fn final_time(&self) -> f64;
    /// Time step per unit mesh size: tau = tau_factor() * h.
    fn tau_factor(&self) -> f64;
    fn velocity(&self, x: Vec2, t: f64) -> Vec2;
    /// Jacobian [[du_x/dx, du_x/dy], [du_y/dx, du_y/dy]].
    fn velocity_gradient(&self, x: Vec2, t: f64) -> Mat2;
    fn velocity_dt(&self, x: Vec2, t: f64) -> Vec2;
    fn velocity_laplacian(&self, x: Vec2, t: f64) -> Vec2;

    fn nu(&self) -> f64 {
        1.0
    }

    fn forcing(&self, x: Vec2, t: f64) -> Vec2 {
        let u = self.velocity(x, t);
        let conv = self.velocity_gradient(x, t).mul_vec(u);
        self.velocity_dt(x, t) + conv - self.velocity_laplacian(x, t) * self.nu()
    }

    fn neumann(&self, x: Vec2, n: Vec2, t: f64) -> Vec2 {
        self.velocity_gradient(x, t).mul_vec(n)
    }
}

/// Rigid rotation of an ellipse about the box center over half a turn.
pub struct Example1;

/// A disk kneaded into a snake-like region and back over one period.
pub struct Example2;

/// A disk stretched into a thin filament and back over one period.
pub struct Example3;

pub fn example(idx: u32) -> Option<Box<dyn ProblemData>> {
    match idx {
        1 => Some(Box::new(Example1)),
        2 => Some(Box::new(Example2)),
        3 => Some(Box::new(Example3)),
        _ => None,
    }
}

impl ProblemData for Example1 {
    fn name(&self) -> &'static str {
        "example1"
    }

    fn initial_shape(&self) -> Ellipse {
        Ellipse::new(Vec2::new(0.5, 0.5), 0.6, 0.3)
    }

    fn domain(&self) -> (f64, f64) {
        (-0.25, 1.25)
    }

    fn final_time(&self) -> f64 {
        PI
    }

    fn tau_factor(&self) -> f64 {
        PI
    }

    fn velocity(&self, x: Vec2, _t: f64) -> Vec2 {
        Vec2::new(0.5 - x.y, x.x - 0.5)
    }

    fn velocity_gradient(&self, _x: Vec2, _t: f64) -> Mat2 {
        Mat2::new(0.0, -1.0, 1.0, 0.0)
    }

    fn velocity_dt(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::ZERO
    }

    fn velocity_laplacian(&self, _x: Vec2, _t: f64) -> Vec2 {
        Vec2::ZERO
    }
}

fn modulation(t: f64) -> f64 {
    (PI * t / 3.0).cos()
}

fn modulation_dt(t: f64) -> f64 {
    -(PI / 3.0) * (PI * t / 3.0).sin()
}

impl ProblemData for Example2 {
    fn name(&self) -> &'static str {
        "example2"
    }

    fn initial_shape(&self) -> Ellipse {
        Ellipse::circle(Vec2::new(0.5, 0.75), 0.15)
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn final_time(&self) -> f64 {
        3.0
    }

    fn tau_factor(&self) -> f64 {
        1.0
    }

    fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        let c = modulation(t);
        let sx = (PI * x.x).sin();
        let sy = (PI * x.y).sin();
        Vec2::new(
            c * sx * sx * (2.0 * PI * x.y).sin(),
            -c * sy * sy * (2.0 * PI * x.x).sin(),
        )
    }

    fn velocity_gradient(&self, x: Vec2, t: f64) -> Mat2 {
        let c = modulation(t);
        let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
        let sx2 = (PI * x.x).sin().powi(2);
        let sy2 = (PI * x.y).sin().powi(2);
        Mat2::new(
            c * PI * s2x * s2y,
            c * 2.0 * PI * sx2 * c2y,
            -c * 2.0 * PI * sy2 * c2x,
            -c * PI * s2y * s2x,
        )
    }

    fn velocity_dt(&self, x: Vec2, t: f64) -> Vec2 {
        let sx = (PI * x.x).sin();
        let sy = (PI * x.y).sin();
        Vec2::new(
            sx * sx * (2.0 * PI * x.y).sin(),
            -sy * sy * (2.0 * PI * x.x).sin(),
        ) * modulation_dt(t)
    }

    fn velocity_laplacian(&self, x: Vec2, t: f64) -> Vec2 {
        let c = modulation(t);
        let s2x = (2.0 * PI * x.x).sin();
        let c2x = (2.0 * PI * x.x).cos();
        let s2y = (2.0 * PI * x.y).sin();
        let c2y = (2.0 * PI * x.y).cos();
        let sx2 = (PI * x.x).sin().powi(2);
        let sy2 = (PI * x.y).sin().powi(2);
        let pi2 = PI * PI;
        Vec2::new(
            c * (2.0 * pi2 * c2x * s2y - 4.0 * pi2 * sx2 * s2y),
            -c * (2.0 * pi2 * c2y * s2x - 4.0 * pi2 * sy2 * s2x),
        )
    }
}

impl ProblemData for Example3 {
    fn name(&self) -> &'static str {
        "example3"
    }

    fn initial_shape(&self) -> Ellipse {
        Ellipse::circle(Vec2::new(0.5, 0.5), 0.15)
    }

    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn final_time(&self) -> f64 {
        3.0
    }

    fn tau_factor(&self) -> f64 {
        1.0
    }

    fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        let c = modulation(t);
        let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
        Vec2::new(c * s2x * s2y, c * c2x * c2y)
    }

    fn velocity_gradient(&self, x: Vec2, t: f64) -> Mat2 {
        let c = modulation(t);
        let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
        let w = 2.0 * PI * c;
        Mat2::new(w * c2x * s2y, w * s2x * c2y, -w * s2x * c2y, -w * c2x * s2y)
    }

    fn velocity_dt(&self, x: Vec2, t: f64) -> Vec2 {
        let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
        let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
        Vec2::new(s2x * s2y, c2x * c2y) * modulation_dt(t)
    }

    fn velocity_laplacian(&self, x: Vec2, t: f64) -> Vec2 {
        self.velocity(x, t) * (-8.0 * PI * PI)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Deterministic points in [0.1, 0.9]^2 x [0, 3].
    fn sample_points(n: usize) -> Vec<(Vec2, f64)> {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n)
            .map(|_| {
                (
                    Vec2::new(0.1 + 0.8 * next(), 0.1 + 0.8 * next()),
                    3.0 * next(),
                )
            })
            .collect()
    }

    fn fd_first(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn fd_second(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
            / (12.0 * h * h)
    }

    fn check_derivatives(p: &dyn ProblemData, tol: f64) {
        let h = 1e-3;
        for (x, t) in sample_points(100) {
            let j = p.velocity_gradient(x, t);
            let ut = p.velocity_dt(x, t);
            let lap = p.velocity_laplacian(x, t);
            for comp in 0..2 {
                let u = |q: Vec2, s: f64| {
                    let v = p.velocity(q, s);
                    if comp == 0 {
                        v.x
                    } else {
                        v.y
                    }
                };
                let dx = fd_first(|a| u(Vec2::new(a, x.y), t), x.x, h);
                let dy = fd_first(|a| u(Vec2::new(x.x, a), t), x.y, h);
                let dt = fd_first(|a| u(x, a), t, h);
                let ll = fd_second(|a| u(Vec2::new(a, x.y), t), x.x, h)
                    + fd_second(|a| u(Vec2::new(x.x, a), t), x.y, h);
                let (ja, jb) = if comp == 0 { (j.a, j.b) } else { (j.c, j.d) };
                assert!((dx - ja).abs() < tol, "{} d/dx {dx} vs {ja}", p.name());
                assert!((dy - jb).abs() < tol, "{} d/dy {dy} vs {jb}", p.name());
                let at = if comp == 0 { ut.x } else { ut.y };
                let al = if comp == 0 { lap.x } else { lap.y };
                assert!((dt - at).abs() < tol, "{} d/dt {dt} vs {at}", p.name());
                assert!((ll - al).abs() < 1e4 * tol, "{} lap {ll} vs {al}", p.name());
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        check_derivatives(&Example1, 1e-10);
        check_derivatives(&Example2, 1e-8);
        check_derivatives(&Example3, 1e-8);
    }

    #[test]
    fn forcing_matches_finite_difference_reconstruction() {
        let h = 1e-3;
        for idx in 1..=3u32 {
            let p = example(idx).unwrap();
            for (x, t) in sample_points(100) {
                let f = p.forcing(x, t);
                let comp = |c: usize| {
                    let u = |q: Vec2, s: f64| {
                        let v = p.velocity(q, s);
                        if c == 0 {
                            v.x
                        } else {
                            v.y
                        }
                    };
                    let dt = fd_first(|a| u(x, a), t, h);
                    let dx = fd_first(|a| u(Vec2::new(a, x.y), t), x.x, h);
                    let dy = fd_first(|a| u(Vec2::new(x.x, a), t), x.y, h);
                    let lap = fd_second(|a| u(Vec2::new(a, x.y), t), x.x, h)
                        + fd_second(|a| u(Vec2::new(x.x, a), t), x.y, h);
                    let vel = p.velocity(x, t);
                    dt + vel.x * dx + vel.y * dy - p.nu() * lap
                };
                assert!((f.x - comp(0)).abs() < 1e-7, "ex{idx} f_x at {x:?} t={t}");
                assert!((f.y - comp(1)).abs() < 1e-7, "ex{idx} f_y at {x:?} t={t}");
            }
        }
    }

    #[test]
    fn rotation_center_is_stationary() {
        for t in [0.0, 0.7, 2.0] {
            let u = Example1.velocity(Vec2::new(0.5, 0.5), t);
            assert_eq!(u, Vec2::ZERO);
        }
    }

    #[test]
    fn deforming_examples_pause_at_half_period() {
        for idx in [2u32, 3] {
            let p = example(idx).unwrap();
            for (x, _) in sample_points(20) {
                let u = p.velocity(x, 1.5);
                assert!(u.x.abs() < 1e-16 && u.y.abs() < 1e-16);
            }
        }
    }

    #[test]
    fn velocity_is_antisymmetric_about_half_period() {
        for idx in [2u32, 3] {
            let p = example(idx).unwrap();
            for (x, s) in sample_points(50) {
                let s = s / 3.0;
                let a = p.velocity(x, 1.5 + s);
                let b = p.velocity(x, 1.5 - s);
                assert!((a.x + b.x).abs() < 1e-13 && (a.y + b.y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn neumann_is_gradient_times_normal() {
        let p = example(3).unwrap();
        let x = Vec2::new(0.3, 0.6);
        let n = Vec2::new(0.6, 0.8);
        let g = p.neumann(x, n, 0.4);
        let j = p.velocity_gradient(x, 0.4);
        assert_eq!(g, j.mul_vec(n));
    }
}
