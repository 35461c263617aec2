//! Nodal Lagrange bases used both for the finite element space and for the
//! isoparametric patch transforms: 1D bases on uniform nodes of [0,1]
//! (tensorized on quadrilaterals) and P_k bases on the uniform triangle
//! lattice.

use std::sync::OnceLock;

use crate::geom::Vec2;

pub const K_MAX: usize = 4;

/// Degree-k Lagrange basis on the uniform nodes j/k of [0,1], stored as
/// monomial coefficients so derivatives of any order are cheap.
#[derive(Clone, Debug)]
pub struct Basis1d {
    pub k: usize,
    /// coeff[i][m] multiplies x^m in basis function i.
    coeff: Vec<[f64; K_MAX + 1]>,
}

impl Basis1d {
    /// Cached basis of degree k (1..=4).
    pub fn get(k: usize) -> &'static Basis1d {
        static TABLE: OnceLock<Vec<Basis1d>> = OnceLock::new();
        let table = TABLE.get_or_init(|| (0..=K_MAX).map(Basis1d::build).collect());
        assert!(k >= 1 && k <= K_MAX, "basis degree {k} out of range");
        &table[k]
    }

    fn build(k: usize) -> Basis1d {
        let k = k.max(1);
        let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
        let mut coeff = Vec::with_capacity(k + 1);
        for i in 0..=k {
            // Expand prod_{j != i} (x - x_j) / (x_i - x_j).
            let mut poly = [0.0; K_MAX + 1];
            poly[0] = 1.0;
            let mut deg = 0;
            let mut denom = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                denom *= nodes[i] - xj;
                let mut next = [0.0; K_MAX + 1];
                for m in 0..=deg {
                    next[m + 1] += poly[m];
                    next[m] -= xj * poly[m];
                }
                poly = next;
                deg += 1;
            }
            for c in poly.iter_mut() {
                *c /= denom;
            }
            coeff.push(poly);
        }
        Basis1d { k, coeff }
    }

    pub fn n(&self) -> usize {
        self.k + 1
    }

    /// Values of all basis functions at x, written to `out[..=k]`.
    pub fn eval(&self, x: f64, out: &mut [f64]) {
        for (i, c) in self.coeff.iter().enumerate() {
            let mut v = c[self.k];
            for m in (0..self.k).rev() {
                v = v * x + c[m];
            }
            out[i] = v;
        }
    }

    /// Values of the l-th derivative of all basis functions at x.
    pub fn eval_deriv(&self, l: usize, x: f64, out: &mut [f64]) {
        if l > self.k {
            out[..=self.k].fill(0.0);
            return;
        }
        for (i, c) in self.coeff.iter().enumerate() {
            // Horner on the l-th derivative coefficients.
            let mut v = 0.0;
            for m in (l..=self.k).rev() {
                let mut fall = 1.0;
                for r in 0..l {
                    fall *= (m - r) as f64;
                }
                v = v * x + fall * c[m];
            }
            out[i] = v;
        }
    }
}

/// Index of the tensor-product node (a, b) on a degree-k quadrilateral,
/// row-major in b.
#[inline]
pub fn quad_node_index(a: usize, b: usize, k: usize) -> usize {
    b * (k + 1) + a
}

/// Number of nodes of the degree-k quadrilateral.
#[inline]
pub fn quad_node_count(k: usize) -> usize {
    (k + 1) * (k + 1)
}

/// Reference coordinates of the quad nodes in index order.
pub fn quad_nodes(k: usize) -> Vec<Vec2> {
    let mut v = Vec::with_capacity(quad_node_count(k));
    for b in 0..=k {
        for a in 0..=k {
            v.push(Vec2::new(a as f64 / k as f64, b as f64 / k as f64));
        }
    }
    v
}

/// Values and reference gradients of all quad basis functions at `p`.
pub fn quad_basis(k: usize, p: Vec2, values: &mut [f64], grads: &mut [Vec2]) {
    let b1 = Basis1d::get(k);
    let mut vx = [0.0; K_MAX + 1];
    let mut vy = [0.0; K_MAX + 1];
    let mut dx = [0.0; K_MAX + 1];
    let mut dy = [0.0; K_MAX + 1];
    b1.eval(p.x, &mut vx);
    b1.eval(p.y, &mut vy);
    b1.eval_deriv(1, p.x, &mut dx);
    b1.eval_deriv(1, p.y, &mut dy);
    for b in 0..=k {
        for a in 0..=k {
            let i = quad_node_index(a, b, k);
            values[i] = vx[a] * vy[b];
            grads[i] = Vec2::new(dx[a] * vy[b], vx[a] * dy[b]);
        }
    }
}

/// Values only of all quad basis functions at `p`.
pub fn quad_basis_values(k: usize, p: Vec2, values: &mut [f64]) {
    let b1 = Basis1d::get(k);
    let mut vx = [0.0; K_MAX + 1];
    let mut vy = [0.0; K_MAX + 1];
    b1.eval(p.x, &mut vx);
    b1.eval(p.y, &mut vy);
    for b in 0..=k {
        for a in 0..=k {
            values[quad_node_index(a, b, k)] = vx[a] * vy[b];
        }
    }
}

/// Number of nodes of the degree-k triangle.
#[inline]
pub fn tri_node_count(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Index of the triangle lattice node (i, j), i + j <= k, rows in j.
#[inline]
pub fn tri_node_index(i: usize, j: usize, k: usize) -> usize {
    // Nodes with smaller j come first; row j starts after k+1, k, ... entries.
    j * (k + 1) - j * (j.saturating_sub(1)) / 2 + i
}

/// Reference coordinates of the triangle nodes in index order.
pub fn tri_nodes(k: usize) -> Vec<Vec2> {
    let mut v = Vec::with_capacity(tri_node_count(k));
    for j in 0..=k {
        for i in 0..=(k - j) {
            v.push(Vec2::new(i as f64 / k as f64, j as f64 / k as f64));
        }
    }
    v
}

/// Silvester factor R_m(z) = prod_{r<m} (z - r)/(m - r) and its z-derivative.
fn silvester(m: usize, z: f64) -> (f64, f64) {
    let mut val = 1.0;
    let mut der = 0.0;
    for r in 0..m {
        let f = (z - r as f64) / (m - r) as f64;
        der = der * f + val / (m - r) as f64;
        val *= f;
    }
    (val, der)
}

/// Values and reference gradients of the P_k triangle basis at `p`.
pub fn tri_basis(k: usize, p: Vec2, values: &mut [f64], grads: &mut [Vec2]) {
    let kf = k as f64;
    let l1 = p.x;
    let l2 = p.y;
    let l0 = 1.0 - p.x - p.y;
    for j in 0..=k {
        for i in 0..=(k - j) {
            let c = k - i - j;
            let (v1, d1) = silvester(i, kf * l1);
            let (v2, d2) = silvester(j, kf * l2);
            let (v0, d0) = silvester(c, kf * l0);
            let idx = tri_node_index(i, j, k);
            values[idx] = v0 * v1 * v2;
            // dl1/dx = 1, dl2/dx = 0, dl0/dx = -1; dl1/dy = 0, dl2/dy = 1, dl0/dy = -1.
            grads[idx] = Vec2::new(
                kf * (d1 * v2 * v0 - d0 * v1 * v2),
                kf * (d2 * v1 * v0 - d0 * v1 * v2),
            );
        }
    }
}

/// Values only of the P_k triangle basis at `p`.
pub fn tri_basis_values(k: usize, p: Vec2, values: &mut [f64]) {
    let kf = k as f64;
    let l1 = p.x;
    let l2 = p.y;
    let l0 = 1.0 - p.x - p.y;
    for j in 0..=k {
        for i in 0..=(k - j) {
            let c = k - i - j;
            values[tri_node_index(i, j, k)] =
                silvester(i, kf * l1).0 * silvester(j, kf * l2).0 * silvester(c, kf * l0).0;
        }
    }
}
