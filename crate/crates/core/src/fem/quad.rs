//! Per-step quadrature caches: one volume rule over the discrete domain
//! (full interior cells plus mapped cut regions) and one line rule over the
//! interface fragments. Built once per step and shared by all assemblies
//! and error norms.

use crate::curve::{outward_normal, ClosedCurve};
use crate::cut::transform::{RefShape, ReferenceTransform};
use crate::error::{Result, SolverError};
use crate::fem::Geometry;
use crate::geom::Vec2;
use crate::mesh::CellLabel;
use crate::quadrature::{gauss_legendre, square_rule, triangle_rule, QuadRule};

/// Physical quadrature points grouped by cover cell, ascending cell index.
#[derive(Clone, Debug)]
pub struct VolumeQuad {
    pub cells: Vec<u32>,
    offsets: Vec<u32>,
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl VolumeQuad {
    pub fn build<C: ClosedCurve>(geom: &Geometry<C>) -> VolumeQuad {
        let k = geom.k;
        let h = geom.grid.h;
        let full = square_rule(k + 1);
        let quad_rule = square_rule(k + 3);
        let tri_rule = triangle_rule(2 * k + 5);
        let mut cells = Vec::new();
        let mut offsets = vec![0u32];
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &cell in &geom.cls.cover {
            if geom.table.is_cut(cell) {
                for region in geom.regions.of_cell(cell) {
                    let tf = ReferenceTransform::from_region(&geom.curve, region, k);
                    let rule = match tf.shape {
                        RefShape::Quad => &quad_rule,
                        RefShape::Tri => &tri_rule,
                    };
                    for (xi, w) in rule.points.iter().zip(&rule.weights) {
                        let (x, m) = tf.value_jacobian(*xi);
                        points.push(x);
                        weights.push(w * m.det().abs());
                    }
                }
            } else if geom.cls.label(cell) == CellLabel::Interior {
                let b = geom.grid.cell_box(cell as usize);
                for (xi, w) in full.points.iter().zip(&full.weights) {
                    points.push(b.min + *xi * h);
                    weights.push(w * h * h);
                }
            } else {
                continue;
            }
            cells.push(cell);
            offsets.push(points.len() as u32);
        }
        VolumeQuad { cells, offsets, points, weights }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// (cell, points, weights) of the i-th quadrature cell.
    pub fn cell(&self, i: usize) -> (u32, &[Vec2], &[f64]) {
        let r = self.offsets[i] as usize..self.offsets[i + 1] as usize;
        (self.cells[i], &self.points[r.clone()], &self.weights[r])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Line quadrature along the interface, one batch per fragment, each point
/// carrying the outward unit normal and the owning cover cell.
#[derive(Clone, Debug)]
pub struct BoundaryQuad {
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub cells: Vec<u32>,
}

impl BoundaryQuad {
    pub fn build<C: ClosedCurve>(geom: &Geometry<C>) -> Result<BoundaryQuad> {
        let nq = geom.k + 2;
        let g = gauss_legendre(nq);
        let mut points = Vec::new();
        let mut normals = Vec::new();
        let mut weights = Vec::new();
        let mut cells = Vec::new();
        for f in &geom.table.fragments {
            let cell = owning_cell(geom, f.cell, geom.curve.point(0.5 * (f.l0 + f.l1)))?;
            let span = f.l1 - f.l0;
            for &(t, w) in g {
                let l = f.l0 + span * t;
                points.push(geom.curve.point(l));
                normals.push(outward_normal(&geom.curve, l));
                weights.push(w * span * geom.curve.tangent(l).norm());
                cells.push(cell);
            }
        }
        Ok(BoundaryQuad { points, normals, weights, cells })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Cover cell whose closure holds `p`, preferring the fragment's own cell.
/// Wall fragments sit on a face whose midpoint-located cell may be exterior;
/// the cell on the other side then owns the quadrature.
fn owning_cell<C: ClosedCurve>(geom: &Geometry<C>, cell: u32, p: Vec2) -> Result<u32> {
    if geom.cls.is_cover(cell) {
        return Ok(cell);
    }
    let (i, j) = geom.grid.cell_coords(cell as usize);
    let tol = 1e-9 * geom.grid.h;
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let (ii, jj) = (i as i64 + di, j as i64 + dj);
            if ii < 0 || jj < 0 || ii >= geom.grid.nx as i64 || jj >= geom.grid.ny as i64 {
                continue;
            }
            let cand = geom.grid.cell_index(ii as usize, jj as usize) as u32;
            if geom.cls.is_cover(cand)
                && geom.grid.cell_box(cand as usize).dist_sq(p) <= tol * tol
            {
                return Ok(cand);
            }
        }
    }
    Err(SolverError::Geometry(format!(
        "no cover cell owns boundary point ({}, {})",
        p.x, p.y
    )))
}

/// Maps a reference rule through a chart, yielding physical points and
/// weights including |det dF|.
pub fn mapped_rule(tf: &ReferenceTransform, rule: &QuadRule) -> (Vec<Vec2>, Vec<f64>) {
    let mut pts = Vec::with_capacity(rule.len());
    let mut wts = Vec::with_capacity(rule.len());
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let (x, m) = tf.value_jacobian(*xi);
        pts.push(x);
        wts.push(w * m.det().abs());
    }
    (pts, wts)
}
