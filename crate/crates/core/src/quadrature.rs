//! Gauss-Legendre rules on [0,1], tensor rules on the unit square, and
//! collapsed tensor rules on the reference triangle {x,y >= 0, x + y <= 1}.

use std::sync::OnceLock;

use crate::geom::Vec2;

const N_MAX: usize = 24;

/// Nodes and weights of the n-point Gauss-Legendre rule on [0,1].
/// Exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..=N_MAX).map(compute_gauss_unit).collect());
    assert!(n >= 1 && n <= N_MAX, "Gauss rule size {n} out of range");
    &table[n]
}

fn compute_gauss_unit(n: usize) -> Vec<(f64, f64)> {
    if n == 0 {
        return Vec::new();
    }
    // Roots of the Legendre polynomial P_n on [-1,1] by Newton iteration.
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map from [-1,1] to [0,1].
        rule.push(((1.0 - x) * 0.5, w * 0.5));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on a reference element; points paired with weights.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// n x n tensor Gauss rule on the unit square, exact for degree 2n-1 per
/// variable.
pub fn square_rule(n: usize) -> QuadRule {
    let g = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for &(y, wy) in g {
        for &(x, wx) in g {
            points.push(Vec2::new(x, y));
            weights.push(wx * wy);
        }
    }
    QuadRule { points, weights }
}

/// Rule on the reference triangle exact for all polynomials of total degree
/// <= `degree`, built by collapsing a tensor Gauss rule through the map
/// (s, t) -> (s, t(1-s)) with Jacobian (1-s). All weights are positive and
/// they sum to 1/2.
pub fn triangle_rule(degree: usize) -> QuadRule {
    // Collapsing multiplies the s-degree by one, hence the extra point.
    let ns = (degree + 3) / 2;
    let nt = (degree + 2) / 2;
    let gs = gauss_legendre(ns.max(1));
    let gt = gauss_legendre(nt.max(1));
    let mut points = Vec::with_capacity(gs.len() * gt.len());
    let mut weights = Vec::with_capacity(gs.len() * gt.len());
    for &(s, ws) in gs {
        for &(t, wt) in gt {
            points.push(Vec2::new(s, t * (1.0 - s)));
            weights.push(ws * wt * (1.0 - s));
        }
    }
    QuadRule { points, weights }
}
