//! Discrete flow maps between consecutive steps, represented patchwise.
//!
//! Every integration region of the source step (full interior cells as
//! affine charts, cut cells via their curved-region charts) carries a pair
//! of degree-k transforms: F maps the reference element onto the source
//! region, G maps it onto the forward image. G is the polynomial
//! interpolant of the forward map on the F-lattice, so composing G with
//! F^-1 never requires inverting F. The backward map inverts G by Newton
//! iteration; query points in the sliver just outside the image domain are
//! projected to the closest point of the image interface first.

use crate::curve::ClosedCurve;
use crate::cut::transform::{RefShape, ReferenceTransform};
use crate::cut::RegionShape;
use crate::error::{Result, SolverError};
use crate::fem::Geometry;
use crate::geom::{Aabb, Vec2};
use crate::grid::GridSpec;
use crate::mesh::CellLabel;

/// One source region with its forward-image chart.
#[derive(Clone, Debug)]
pub struct Patch {
    /// Cover cell of the source step this patch integrates over.
    pub src_cell: u32,
    pub f: ReferenceTransform,
    pub g: ReferenceTransform,
    /// Reference edges of the patch lying on the source interface.
    pub interface_edges: Vec<RefEdge>,
}

/// Reference-square or reference-triangle edge, parameterized over [0,1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefEdge {
    QuadBottom,
    QuadRight,
    QuadTop,
    QuadLeft,
    TriBottom,
    TriHyp,
    TriLeft,
}

impl RefEdge {
    /// Reference point at edge parameter t.
    pub fn at(self, t: f64) -> Vec2 {
        match self {
            RefEdge::QuadBottom => Vec2::new(t, 0.0),
            RefEdge::QuadRight => Vec2::new(1.0, t),
            RefEdge::QuadTop => Vec2::new(t, 1.0),
            RefEdge::QuadLeft => Vec2::new(0.0, t),
            RefEdge::TriBottom => Vec2::new(t, 0.0),
            RefEdge::TriHyp => Vec2::new(1.0 - t, t),
            RefEdge::TriLeft => Vec2::new(0.0, t),
        }
    }
}

/// The discrete map X^{n,n-1} from the new step back to the previous one,
/// together with its forward patches.
pub struct PatchMap {
    pub patches: Vec<Patch>,
    grid: GridSpec,
    h: f64,
    k: usize,
    /// Patch indices per background cell, keyed by inflated image bounds.
    buckets: Vec<Vec<u32>>,
    /// (patch, edge) pairs forming the image-domain interface.
    boundary: Vec<(u32, RefEdge)>,
}

fn arc_ref_edges(shape: &RegionShape) -> Vec<RefEdge> {
    let mut out = Vec::new();
    match shape {
        RegionShape::Quad { bottom, right, top, left } => {
            for (e, re) in [
                (bottom, RefEdge::QuadBottom),
                (right, RefEdge::QuadRight),
                (top, RefEdge::QuadTop),
                (left, RefEdge::QuadLeft),
            ] {
                if e.is_arc() {
                    out.push(re);
                }
            }
        }
        RegionShape::Tri { e01, e12, e02 } => {
            for (e, re) in [
                (e01, RefEdge::TriBottom),
                (e12, RefEdge::TriHyp),
                (e02, RefEdge::TriLeft),
            ] {
                if e.is_arc() {
                    out.push(re);
                }
            }
        }
    }
    out
}

/// Rejects image charts folded by the forward map. Region charts can have
/// roundoff-degenerate corners where both Jacobians vanish together, so the
/// test compares `det dG` against `det dF` pointwise instead of asking for a
/// positive minimum.
fn check_unfolded(
    f: &ReferenceTransform,
    g: &ReferenceTransform,
    h: f64,
    cell: u32,
) -> Result<()> {
    let samples = crate::cut::transform::ref_sample_points(f.shape, 2 * f.k + 1);
    let dets: Vec<(f64, f64)> = samples
        .iter()
        .map(|&p| (f.jacobian(p).det(), g.jacobian(p).det()))
        .collect();
    let max_df = dets.iter().fold(0.0f64, |m, &(df, _)| m.max(df));
    let folded = dets.iter().any(|&(df, dg)| {
        dg < -1e-10 * h * h || (df > 0.01 * max_df && dg <= 1e-6 * df)
    });
    if folded {
        return Err(SolverError::FoldedPatch(format!(
            "cell {} image chart has nonpositive Jacobian",
            cell
        )));
    }
    Ok(())
}

impl PatchMap {
    /// Builds the map of one step: `fwd` sends source-step points to their
    /// new positions. Forward values are cached per exact node position so
    /// lattice nodes shared between patches are evaluated once.
    pub fn build<C: ClosedCurve>(
        src: &Geometry<C>,
        fwd: &mut dyn FnMut(Vec2) -> Result<Vec2>,
    ) -> Result<PatchMap> {
        let k = src.k;
        let grid = src.grid;
        let h = grid.h;
        let mut cache: std::collections::HashMap<(u64, u64), Vec2> =
            std::collections::HashMap::new();
        let mut patches = Vec::new();
        for &cell in &src.cls.cover {
            let charts: Vec<(ReferenceTransform, Vec<RefEdge>, f64)> = if src.table.is_cut(cell)
            {
                src.regions
                    .of_cell(cell)
                    .iter()
                    .map(|r| {
                        (
                            ReferenceTransform::from_region(&src.curve, r, k),
                            arc_ref_edges(&r.shape),
                            r.area(&src.curve),
                        )
                    })
                    .collect()
            } else if src.cls.label(cell) == CellLabel::Interior {
                let b = grid.cell_box(cell as usize);
                vec![(ReferenceTransform::affine(b.min, h, k), Vec::new(), h * h)]
            } else {
                continue;
            };
            for (f, interface, area) in charts {
                // Tangential cuts can leave measure-zero sliver regions
                // whose charts are degenerate; they carry no volume and no
                // usable interface, so the map skips them.
                if area < 1e-9 * h * h {
                    continue;
                }
                let mut g_nodes = Vec::with_capacity(f.nodes.len());
                for &p in &f.nodes {
                    let key = (p.x.to_bits(), p.y.to_bits());
                    let img = match cache.get(&key) {
                        Some(v) => *v,
                        None => {
                            let v = fwd(p)?;
                            cache.insert(key, v);
                            v
                        }
                    };
                    g_nodes.push(img);
                }
                let g = ReferenceTransform { shape: f.shape, k, nodes: g_nodes };
                check_unfolded(&f, &g, h, cell)?;
                patches.push(Patch { src_cell: cell, f, g, interface_edges: interface });
            }
        }

        let mut buckets = vec![Vec::new(); grid.n_cells()];
        let mut boundary = Vec::new();
        for (pi, patch) in patches.iter().enumerate() {
            let bb = image_bounds(&patch.g).inflate(0.05 * h);
            for cell in cells_overlapping(&grid, &bb) {
                buckets[cell].push(pi as u32);
            }
            for &e in &patch.interface_edges {
                boundary.push((pi as u32, e));
            }
        }
        Ok(PatchMap { patches, grid, h, k, buckets, boundary })
    }

    /// Area of the image domain, patchwise sum of ∫ |det dG|.
    pub fn image_area(&self) -> f64 {
        let quad = crate::quadrature::square_rule(self.k + 3);
        let tri = crate::quadrature::triangle_rule(2 * self.k + 5);
        let mut area = 0.0;
        for patch in &self.patches {
            let rule = match patch.g.shape {
                RefShape::Quad => &quad,
                RefShape::Tri => &tri,
            };
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                area += w * patch.g.jacobian(*xi).det().abs();
            }
        }
        area
    }

    /// X^{n,n-1}(x): source-step position of the new-step point `x`.
    pub fn backward(&self, x: Vec2) -> Result<Vec2> {
        if let Some((pi, xi)) = self.locate(x) {
            return Ok(self.patches[pi].f.value(xi));
        }
        self.extend_from_interface(x)
    }

    /// Patch and reference coordinates of `x` in the image domain, if any.
    pub fn locate(&self, x: Vec2) -> Option<(usize, Vec2)> {
        let (i, j) = self.grid.locate_clamped(x);
        let cell = self.grid.cell_index(i, j);
        for &pi in &self.buckets[cell] {
            let patch = &self.patches[pi as usize];
            if let Some(xi) = invert_chart(&patch.g, x, self.h) {
                if patch.g.shape.contains(xi, 1e-9) {
                    return Some((pi as usize, xi));
                }
            }
        }
        None
    }

    /// Closest-point extension: query points in the sliver outside the
    /// image domain map to the source position of the nearest interface
    /// point. Fails if the query is farther than 0.2h from the interface.
    fn extend_from_interface(&self, x: Vec2) -> Result<Vec2> {
        let mut best: Option<(f64, u32, RefEdge, f64)> = None;
        for &(pi, edge) in &self.boundary {
            let g = &self.patches[pi as usize].g;
            let t = closest_edge_param(g, edge, x);
            let d2 = (g.value(edge.at(t)) - x).norm_sq();
            if best.map_or(true, |(bd, ..)| d2 < bd) {
                best = Some((d2, pi, edge, t));
            }
        }
        let (d2, pi, edge, t) = best.ok_or_else(|| {
            SolverError::NoRegionFound(format!("({}, {})", x.x, x.y))
        })?;
        if d2.sqrt() > 0.2 * self.h {
            return Err(SolverError::PointOutsideHistoryDomain(format!(
                "({}, {}) is {:.3e} from the image interface",
                x.x,
                x.y,
                d2.sqrt()
            )));
        }
        Ok(self.patches[pi as usize].f.value(edge.at(t)))
    }
}

fn image_bounds(g: &ReferenceTransform) -> Aabb {
    // Sampled bounds; the build inflates them to absorb the sampling gap.
    let mut bb = Aabb::of_points(g.nodes.iter().copied());
    for p in crate::cut::transform::ref_sample_points(g.shape, 2 * g.k + 1) {
        bb.expand(g.value(p));
    }
    bb
}

fn cells_overlapping(grid: &GridSpec, bb: &Aabb) -> Vec<usize> {
    let (i0, j0) = grid.locate_clamped(bb.min);
    let (i1, j1) = grid.locate_clamped(bb.max);
    let mut out = Vec::with_capacity((i1 - i0 + 1) * (j1 - j0 + 1));
    for j in j0..=j1 {
        for i in i0..=i1 {
            out.push(grid.cell_index(i, j));
        }
    }
    out
}

/// Newton inversion of a chart; seeds from the affine map through the
/// corner nodes and polishes to 1e-13*h residual. Falls back to a
/// multistart over reference-grid seeds when that diverges. Region charts
/// can collapse an edge onto a turning point of the interface, so seeds
/// sitting on the singular set are skipped and candidates are tried in
/// order of image distance.
fn invert_chart(g: &ReferenceTransform, x: Vec2, h: f64) -> Option<Vec2> {
    let k = g.k;
    let tol = 1e-13 * h;
    let (c0, cx, cy) = match g.shape {
        RefShape::Quad => (g.nodes[0], g.nodes[k], g.nodes[k * (k + 1)]),
        RefShape::Tri => (
            g.nodes[0],
            g.nodes[k],
            g.nodes[crate::basis::tri_node_index(0, k, k)],
        ),
    };
    let a = crate::geom::Mat2::from_cols(cx - c0, cy - c0);
    if let Some(seed) = a.solve(x - c0) {
        if seed.x.abs() < 3.0 && seed.y.abs() < 3.0 {
            if let Some(xi) = newton(g, x, seed, tol) {
                return Some(xi);
            }
        }
    }
    let mut cands: Vec<(f64, f64, Vec2)> = crate::cut::transform::ref_sample_points(g.shape, 7)
        .into_iter()
        .map(|p| {
            (
                (g.value(p) - x).norm_sq(),
                g.jacobian(p).det().abs(),
                p,
            )
        })
        .collect();
    let det_ref = cands.iter().fold(0.0f64, |m, c| m.max(c.1));
    cands.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let mut tried = 0;
    for &(_, det, seed) in &cands {
        if det < 1e-3 * det_ref {
            continue;
        }
        if let Some(xi) = newton(g, x, seed, tol) {
            return Some(xi);
        }
        tried += 1;
        if tried >= 6 {
            break;
        }
    }
    None
}

fn newton(g: &ReferenceTransform, x: Vec2, seed: Vec2, tol: f64) -> Option<Vec2> {
    let mut xi = seed;
    for _ in 0..80 {
        let (v, m) = g.value_jacobian(xi);
        let r = v - x;
        if r.norm() <= tol {
            return Some(xi);
        }
        let mut step = m.solve(r)?;
        let n = step.norm();
        if !n.is_finite() {
            return None;
        }
        // Cap the step so near-singular Jacobians cannot eject the iterate.
        if n > 0.5 {
            step = step * (0.5 / n);
        }
        xi -= step;
        xi.x = xi.x.clamp(-1.0, 2.0);
        xi.y = xi.y.clamp(-1.0, 2.0);
    }
    None
}

/// Parameter of the closest point to `x` on the image edge, by sampling
/// plus golden-section refinement.
fn closest_edge_param(g: &ReferenceTransform, edge: RefEdge, x: Vec2) -> f64 {
    let d2 = |t: f64| (g.value(edge.at(t)) - x).norm_sq();
    let m = 8;
    let mut t_best = 0.0;
    let mut d_best = d2(0.0);
    for i in 1..=m {
        let t = i as f64 / m as f64;
        let d = d2(t);
        if d < d_best {
            d_best = d;
            t_best = t;
        }
    }
    let mut lo = (t_best - 1.0 / m as f64).max(0.0);
    let mut hi = (t_best + 1.0 / m as f64).min(1.0);
    let phi = 0.5 * (3.0 - 5.0f64.sqrt());
    let mut t1 = lo + phi * (hi - lo);
    let mut t2 = hi - phi * (hi - lo);
    let mut d1 = d2(t1);
    let mut dd2 = d2(t2);
    for _ in 0..60 {
        if d1 < dd2 {
            hi = t2;
            t2 = t1;
            dd2 = d1;
            t1 = lo + phi * (hi - lo);
            d1 = d2(t1);
        } else {
            lo = t1;
            t1 = t2;
            d1 = dd2;
            t2 = hi - phi * (hi - lo);
            dd2 = d2(t2);
        }
    }
    if d1 < dd2 {
        t1
    } else {
        t2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Ellipse, SplineCurve};
    use crate::quadrature::square_rule;

    fn disk_geometry(k: usize) -> Geometry<SplineCurve> {
        let grid = GridSpec::square(0.0, 1.0, 16);
        let pts = Ellipse::circle(Vec2::new(0.5, 0.5), 0.3).equal_arclength_points(32);
        Geometry::build(SplineCurve::fit_closed(&pts), grid, k).unwrap()
    }

    #[test]
    fn identity_map_roundtrips_exactly() {
        let geom = disk_geometry(3);
        let map = PatchMap::build(&geom, &mut |p| Ok(p)).unwrap();
        for &p in &[Vec2::new(0.5, 0.5), Vec2::new(0.61, 0.44), Vec2::new(0.29, 0.55)] {
            let back = map.backward(p).unwrap();
            assert!((back - p).norm() < 1e-13);
        }
    }

    #[test]
    fn rotation_map_inverts_to_machine_precision() {
        let geom = disk_geometry(3);
        let th = 0.02f64;
        let (s, c) = th.sin_cos();
        let ctr = Vec2::new(0.5, 0.5);
        let rot = move |p: Vec2| {
            let d = p - ctr;
            ctr + Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y)
        };
        let map = PatchMap::build(&geom, &mut |p| Ok(rot(p))).unwrap();
        for &p in &[Vec2::new(0.52, 0.47), Vec2::new(0.7, 0.5), Vec2::new(0.35, 0.62)] {
            let back = map.backward(rot(p)).unwrap();
            assert!((back - p).norm() < 1e-12, "{:?}", back - p);
        }
    }

    #[test]
    fn forward_backward_roundtrip_on_patch_lattices() {
        // Smooth non-rigid deformation.
        let geom = disk_geometry(3);
        let h = geom.grid.h;
        let defo = |p: Vec2| {
            Vec2::new(
                p.x + 0.15 * h * (2.0 * p.y).sin(),
                p.y - 0.2 * h * (3.0 * p.x).cos(),
            )
        };
        let map = PatchMap::build(&geom, &mut |p| Ok(defo(p))).unwrap();
        let rule = square_rule(3);
        let mut checked = 0usize;
        for patch in &map.patches {
            for xi in &rule.points {
                if !patch.f.shape.contains(*xi, 0.0) {
                    continue;
                }
                let x_src = patch.f.value(*xi);
                let x_img = patch.g.value(*xi);
                let back = map.backward(x_img).unwrap();
                assert!(
                    (back - x_src).norm() <= 1e-10 * h,
                    "{:.3e}",
                    (back - x_src).norm()
                );
                checked += 1;
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn sliver_points_extend_to_interface() {
        let geom = disk_geometry(3);
        let h = geom.grid.h;
        // Uniform shrink toward the center: points near the old boundary
        // fall outside the image domain.
        let ctr = Vec2::new(0.5, 0.5);
        let shrink = move |p: Vec2| ctr + (p - ctr) * (1.0 - 0.1 * h);
        let map = PatchMap::build(&geom, &mut |p| Ok(shrink(p))).unwrap();
        // A point on the old interface is outside the shrunk image.
        let p = Vec2::new(0.5 + 0.3 - 1e-9, 0.5);
        let back = map.backward(p).unwrap();
        // The extension lands on (approximately) the source interface point.
        assert!((back - Vec2::new(0.8, 0.5)).norm() < 1e-4);
        // Far-away points are rejected.
        let err = map.backward(Vec2::new(0.5 + 0.3 + 0.5 * h, 0.5));
        assert!(err.is_err());
    }

    #[test]
    fn rigid_maps_preserve_image_area() {
        let geom = disk_geometry(3);
        let th = 0.07f64;
        let (s, c) = th.sin_cos();
        let ctr = Vec2::new(0.5, 0.5);
        let map = PatchMap::build(&geom, &mut |p| {
            let d = p - ctr;
            Ok(ctr + Vec2::new(c * d.x - s * d.y, s * d.x + c * d.y))
        })
        .unwrap();
        let src_area = geom.domain_area();
        assert!((map.image_area() - src_area).abs() < 1e-12, "{}", map.image_area() - src_area);
    }

    #[test]
    fn linear_scaling_scales_image_area_exactly() {
        let geom = disk_geometry(3);
        let ctr = Vec2::new(0.5, 0.5);
        let lam = 0.97;
        let map = PatchMap::build(&geom, &mut |p| Ok(ctr + (p - ctr) * lam)).unwrap();
        let want = lam * lam * geom.domain_area();
        assert!((map.image_area() - want).abs() < 1e-12);
    }

    #[test]
    fn images_of_separated_patches_stay_separated() {
        // Injectivity audit: densified samples of patches whose inflated
        // image boxes are disjoint must never (nearly) coincide.
        let geom = disk_geometry(2);
        let h = geom.grid.h;
        let defo = |p: Vec2| {
            Vec2::new(
                p.x + 0.2 * h * (5.0 * p.y).sin(),
                p.y + 0.2 * h * (4.0 * p.x).sin(),
            )
        };
        let map = PatchMap::build(&geom, &mut |p| Ok(defo(p))).unwrap();
        let boxes: Vec<_> = map
            .patches
            .iter()
            .map(|p| image_bounds(&p.g).inflate(0.05 * h))
            .collect();
        let samples: Vec<Vec<Vec2>> = map
            .patches
            .iter()
            .map(|p| {
                crate::cut::transform::ref_sample_points(p.g.shape, 5 * p.g.k)
                    .into_iter()
                    .map(|xi| p.g.value(xi))
                    .collect()
            })
            .collect();
        for i in 0..map.patches.len() {
            for j in (i + 1)..map.patches.len() {
                if boxes[i].intersects(&boxes[j]) {
                    continue;
                }
                // Disjoint boxes with an axis gap past the threshold cannot
                // hold near-coincident samples; only near-touching pairs
                // need the explicit scan.
                let gx = (boxes[j].min.x - boxes[i].max.x).max(boxes[i].min.x - boxes[j].max.x);
                let gy = (boxes[j].min.y - boxes[i].max.y).max(boxes[i].min.y - boxes[j].max.y);
                if gx.max(gy) >= 1e-12 {
                    continue;
                }
                for &a in &samples[i] {
                    for &b in &samples[j] {
                        assert!((a - b).norm() > 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn folded_forward_map_is_rejected() {
        let geom = disk_geometry(2);
        // Collapse x: the image charts degenerate.
        let squash = |p: Vec2| Vec2::new(0.5, p.y);
        assert!(matches!(
            PatchMap::build(&geom, &mut |p| Ok(squash(p))),
            Err(SolverError::FoldedPatch(_))
        ));
    }
}
