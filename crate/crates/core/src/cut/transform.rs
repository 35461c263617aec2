//! Isoparametric maps from reference elements onto curved regions.
//!
//! A region's map is the degree-k interpolant of a transfinite blend of its
//! edges: Coons patches for quadrilaterals, barycentric edge blending for
//! triangles. Edge lattice nodes are placed on the exact edge geometry, so
//! the discrete trace of the map along an interface edge reproduces the
//! spline arc exactly whenever k is at least 3.

use crate::basis::{
    quad_basis, quad_node_count, quad_nodes, tri_basis, tri_node_count, tri_node_index,
};
use crate::curve::ClosedCurve;
use crate::geom::{Mat2, Vec2};

use super::region::{CurvedRegion, EdgeGeom, RegionShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefShape {
    Quad,
    Tri,
}

impl RefShape {
    pub fn node_count(self, k: usize) -> usize {
        match self {
            RefShape::Quad => quad_node_count(k),
            RefShape::Tri => tri_node_count(k),
        }
    }

    pub fn contains(self, xi: Vec2, tol: f64) -> bool {
        match self {
            RefShape::Quad => {
                xi.x >= -tol && xi.x <= 1.0 + tol && xi.y >= -tol && xi.y <= 1.0 + tol
            }
            RefShape::Tri => xi.x >= -tol && xi.y >= -tol && xi.x + xi.y <= 1.0 + tol,
        }
    }
}

/// Degree-k polynomial map determined by its lattice node images.
#[derive(Clone, Debug)]
pub struct ReferenceTransform {
    pub shape: RefShape,
    pub k: usize,
    pub nodes: Vec<Vec2>,
}

impl ReferenceTransform {
    pub fn from_region<C: ClosedCurve + ?Sized>(
        curve: &C,
        region: &CurvedRegion,
        k: usize,
    ) -> ReferenceTransform {
        match &region.shape {
            RegionShape::Quad { bottom, right, top, left } => ReferenceTransform {
                shape: RefShape::Quad,
                k,
                nodes: coons_lattice(curve, bottom, right, top, left, k),
            },
            RegionShape::Tri { e01, e12, e02 } => ReferenceTransform {
                shape: RefShape::Tri,
                k,
                nodes: tri_lattice(curve, e01, e12, e02, k),
            },
        }
    }

    /// Axis-aligned affine map onto the square with corner `origin` and side
    /// `h`, as a degree-k quad (used for uncut cells).
    pub fn affine(origin: Vec2, h: f64, k: usize) -> ReferenceTransform {
        let nodes = quad_nodes(k)
            .into_iter()
            .map(|xi| Vec2::new(origin.x + h * xi.x, origin.y + h * xi.y))
            .collect();
        ReferenceTransform { shape: RefShape::Quad, k, nodes }
    }

    pub fn value(&self, xi: Vec2) -> Vec2 {
        let n = self.nodes.len();
        let mut vals = vec![0.0; n];
        match self.shape {
            RefShape::Quad => crate::basis::quad_basis_values(self.k, xi, &mut vals),
            RefShape::Tri => crate::basis::tri_basis_values(self.k, xi, &mut vals),
        }
        let mut p = Vec2::ZERO;
        for (v, node) in vals.iter().zip(&self.nodes) {
            p += *node * *v;
        }
        p
    }

    /// Map value and Jacobian at a reference point.
    pub fn value_jacobian(&self, xi: Vec2) -> (Vec2, Mat2) {
        let n = self.nodes.len();
        let mut vals = vec![0.0; n];
        let mut grads = vec![Vec2::ZERO; n];
        match self.shape {
            RefShape::Quad => quad_basis(self.k, xi, &mut vals, &mut grads),
            RefShape::Tri => tri_basis(self.k, xi, &mut vals, &mut grads),
        }
        let mut p = Vec2::ZERO;
        let mut m = Mat2::default();
        for i in 0..n {
            let node = self.nodes[i];
            p += node * vals[i];
            m.a += node.x * grads[i].x;
            m.b += node.x * grads[i].y;
            m.c += node.y * grads[i].x;
            m.d += node.y * grads[i].y;
        }
        (p, m)
    }

    pub fn jacobian(&self, xi: Vec2) -> Mat2 {
        self.value_jacobian(xi).1
    }

    /// Minimum Jacobian determinant over an (m+1)^2 reference sample grid.
    pub fn min_jacobian_det(&self, m: usize) -> f64 {
        let mut min = f64::INFINITY;
        for xi in ref_sample_points(self.shape, m) {
            let d = self.jacobian(xi).det();
            if d < min {
                min = d;
            }
        }
        min
    }
}

/// Uniform reference sample points including corners and edges.
pub fn ref_sample_points(shape: RefShape, m: usize) -> Vec<Vec2> {
    let m = m.max(1);
    let mut pts = Vec::new();
    match shape {
        RefShape::Quad => {
            for j in 0..=m {
                for i in 0..=m {
                    pts.push(Vec2::new(i as f64 / m as f64, j as f64 / m as f64));
                }
            }
        }
        RefShape::Tri => {
            for j in 0..=m {
                for i in 0..=(m - j) {
                    pts.push(Vec2::new(i as f64 / m as f64, j as f64 / m as f64));
                }
            }
        }
    }
    pts
}

fn coons_lattice<C: ClosedCurve + ?Sized>(
    curve: &C,
    bottom: &EdgeGeom,
    right: &EdgeGeom,
    top: &EdgeGeom,
    left: &EdgeGeom,
    k: usize,
) -> Vec<Vec2> {
    let p00 = bottom.start();
    let p10 = bottom.end();
    let p01 = top.start();
    let p11 = top.end();
    let n = k + 1;
    let mut nodes = Vec::with_capacity(n * n);
    for b in 0..n {
        let t = b as f64 / k as f64;
        for a in 0..n {
            let s = a as f64 / k as f64;
            let bs = bottom.at(curve, s);
            let ts = top.at(curve, s);
            let lt = left.at(curve, t);
            let rt = right.at(curve, t);
            let bil = p00 * ((1.0 - s) * (1.0 - t))
                + p10 * (s * (1.0 - t))
                + p01 * ((1.0 - s) * t)
                + p11 * (s * t);
            nodes.push(bs * (1.0 - t) + ts * t + lt * (1.0 - s) + rt * s - bil);
        }
    }
    nodes
}

fn tri_lattice<C: ClosedCurve + ?Sized>(
    curve: &C,
    e01: &EdgeGeom,
    e12: &EdgeGeom,
    e02: &EdgeGeom,
    k: usize,
) -> Vec<Vec2> {
    let v0 = e01.start();
    let v1 = e01.end();
    let v2 = e02.end();
    let mut nodes = vec![Vec2::ZERO; tri_node_count(k)];
    for j in 0..=k {
        for i in 0..=(k - j) {
            let l1 = i as f64 / k as f64;
            let l2 = j as f64 / k as f64;
            let l0 = (k - i - j) as f64 / k as f64;
            let mut p = v0 * l0 + v1 * l1 + v2 * l2;
            p += edge_bulge(curve, e01, l0, l1, v0, v1);
            p += edge_bulge(curve, e12, l1, l2, v1, v2);
            p += edge_bulge(curve, e02, l0, l2, v0, v2);
            nodes[tri_node_index(i, j, k)] = p;
        }
    }
    nodes
}

/// Transfinite correction pulling the straight chord between `a` and `b`
/// onto the edge geometry, weighted by the pair of barycentrics.
fn edge_bulge<C: ClosedCurve + ?Sized>(
    curve: &C,
    edge: &EdgeGeom,
    la: f64,
    lb: f64,
    a: Vec2,
    b: Vec2,
) -> Vec2 {
    let w = la + lb;
    if w < 1e-14 {
        return Vec2::ZERO;
    }
    let sigma = lb / w;
    if sigma == 0.0 || sigma == 1.0 {
        // The blend point is a corner; the correction vanishes identically.
        return Vec2::ZERO;
    }
    (edge.at(curve, sigma) - a.lerp(b, sigma)) * w
}
