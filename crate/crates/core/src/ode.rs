//! Adaptive Dormand-Prince integration of plane trajectories dx/dt = u(x, t).
//!
//! Used for the exact characteristics in startup and for reference solutions
//! in tests; tolerances down to 1e-13 are practical for the smooth velocity
//! fields that appear here.

use crate::geom::Vec2;

/// Integrates dx/dt = u(x, t) from (x0, t0) to t1 with mixed error control
/// `atol + rtol * |x|` per step.
pub fn integrate<F: Fn(Vec2, f64) -> Vec2>(u: &F, x0: Vec2, t0: f64, t1: f64, rtol: f64, atol: f64) -> Vec2 {
    let span = t1 - t0;
    if span == 0.0 {
        return x0;
    }
    let dir = span.signum();
    let mut t = t0;
    let mut x = x0;
    let mut k1 = u(x, t);
    let mut dt = (span.abs() * 0.1).min(1e-2).copysign(dir);

    // Dormand-Prince 5(4) tableau.
    const A2: f64 = 1.0 / 5.0;
    const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
    const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    const B5: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    const C: [f64; 5] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0];

    let mut steps = 0usize;
    loop {
        if (t1 - t) * dir <= 0.0 {
            return x;
        }
        if (t + dt - t1) * dir > 0.0 {
            dt = t1 - t;
        }
        let k2 = u(x + dt * A2 * k1, t + C[0] * dt);
        let k3 = u(x + dt * (A3[0] * k1 + A3[1] * k2), t + C[1] * dt);
        let k4 = u(x + dt * (A4[0] * k1 + A4[1] * k2 + A4[2] * k3), t + C[2] * dt);
        let k5 = u(
            x + dt * (A5[0] * k1 + A5[1] * k2 + A5[2] * k3 + A5[3] * k4),
            t + C[3] * dt,
        );
        let k6 = u(
            x + dt * (A6[0] * k1 + A6[1] * k2 + A6[2] * k3 + A6[3] * k4 + A6[4] * k5),
            t + C[4] * dt,
        );
        let x5 = x + dt * (B5[0] * k1 + B5[2] * k3 + B5[3] * k4 + B5[4] * k5 + B5[5] * k6);
        let k7 = u(x5, t + dt);
        let x4 = x + dt
            * (B4[0] * k1 + B4[2] * k3 + B4[3] * k4 + B4[4] * k5 + B4[5] * k6 + B4[6] * k7);

        let scale = atol + rtol * x.max_abs().max(x5.max_abs());
        let err = (x5 - x4).max_abs() / scale;

        if err <= 1.0 {
            t += dt;
            x = x5;
            k1 = k7;
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        dt *= factor;
        steps += 1;
        assert!(steps < 1_000_000, "characteristic integration did not converge");
    }
}
