//! Slab decomposition of a cut cell.
//!
//! The cell is sliced into vertical slabs at every fragment endpoint
//! abscissa. Inside one slab every fragment covering it is a monotone graph
//! y(x); the slab is banded between consecutive graphs (including the
//! horizontal cell edges), and each band inside the domain becomes a curved
//! quadrilateral, degenerating to a curved triangle where two graphs pinch.

use crate::curve::{contains, Axis, ClosedCurve, MonoPiece};
use crate::geom::Vec2;
use crate::grid::GridSpec;
use crate::quadrature::gauss_legendre;

use super::fragments::{Fragment, FragmentTable};

/// Oriented edge of a region; `a` and `b` are exact endpoint coordinates.
/// For arcs the curve parameter runs affinely from l0 at t=0 to l1 at t=1
/// (l0 > l1 encodes reversed traversal).
#[derive(Clone, Debug)]
pub enum EdgeGeom {
    Seg { a: Vec2, b: Vec2 },
    Arc { l0: f64, l1: f64, a: Vec2, b: Vec2 },
}

impl EdgeGeom {
    pub fn start(&self) -> Vec2 {
        match self {
            EdgeGeom::Seg { a, .. } | EdgeGeom::Arc { a, .. } => *a,
        }
    }

    pub fn end(&self) -> Vec2 {
        match self {
            EdgeGeom::Seg { b, .. } | EdgeGeom::Arc { b, .. } => *b,
        }
    }

    pub fn is_arc(&self) -> bool {
        matches!(self, EdgeGeom::Arc { .. })
    }

    /// Point at edge parameter t in [0,1]; endpoints are returned exactly.
    pub fn at<C: ClosedCurve + ?Sized>(&self, curve: &C, t: f64) -> Vec2 {
        if t == 0.0 {
            return self.start();
        }
        if t == 1.0 {
            return self.end();
        }
        match self {
            EdgeGeom::Seg { a, b } => a.lerp(*b, t),
            EdgeGeom::Arc { l0, l1, .. } => curve.point(l0 + t * (l1 - l0)),
        }
    }

    pub fn reversed(&self) -> EdgeGeom {
        match self {
            EdgeGeom::Seg { a, b } => EdgeGeom::Seg { a: *b, b: *a },
            EdgeGeom::Arc { l0, l1, a, b } => EdgeGeom::Arc { l0: *l1, l1: *l0, a: *b, b: *a },
        }
    }

    /// Green's theorem contribution of this edge traversed a -> b:
    /// integral of (x dy - y dx) / 2.
    fn green<C: ClosedCurve + ?Sized>(&self, curve: &C) -> f64 {
        match self {
            EdgeGeom::Seg { a, b } => 0.5 * a.cross(*b),
            EdgeGeom::Arc { l0, l1, .. } => {
                let gauss = gauss_legendre(curve.arc_gauss_points());
                let span = l1 - l0;
                let mut s = 0.0;
                for &(q, w) in gauss {
                    let l = l0 + q * span;
                    s += w * curve.point(l).cross(curve.tangent(l));
                }
                0.5 * s * span
            }
        }
    }
}

/// Counterclockwise curved region.
///
/// Quad edges are stored in the reference orientation of the unit square
/// F(s,t): bottom = F(.,0), top = F(.,1) (both left to right), left = F(0,.),
/// right = F(1,.) (both bottom to top). Triangles store the edges between
/// the counterclockwise corners V0 -> V1 -> V2 mapped to the reference
/// corners (0,0), (1,0), (0,1).
#[derive(Clone, Debug)]
pub enum RegionShape {
    Quad { bottom: EdgeGeom, right: EdgeGeom, top: EdgeGeom, left: EdgeGeom },
    Tri { e01: EdgeGeom, e12: EdgeGeom, e02: EdgeGeom },
}

#[derive(Clone, Debug)]
pub struct CurvedRegion {
    pub cell: u32,
    pub shape: RegionShape,
}

impl CurvedRegion {
    /// Oriented boundary loop (edge, reversed) traversing the region
    /// counterclockwise.
    pub fn boundary_loop(&self) -> Vec<(&EdgeGeom, bool)> {
        match &self.shape {
            RegionShape::Quad { bottom, right, top, left } => {
                vec![(bottom, false), (right, false), (top, true), (left, true)]
            }
            RegionShape::Tri { e01, e12, e02 } => vec![(e01, false), (e12, false), (e02, true)],
        }
    }

    /// Exact area by Green's theorem over the boundary loop.
    pub fn area<C: ClosedCurve + ?Sized>(&self, curve: &C) -> f64 {
        self.boundary_loop()
            .into_iter()
            .map(|(e, rev)| if rev { e.reversed().green(curve) } else { e.green(curve) })
            .sum()
    }

    /// Curved (interface) edges of the region.
    pub fn arc_edges(&self) -> Vec<&EdgeGeom> {
        self.boundary_loop()
            .into_iter()
            .filter(|(e, _)| e.is_arc())
            .map(|(e, _)| e)
            .collect()
    }
}

/// Decomposes one cut cell into regions, appending to `out`.
pub fn decompose_cell<C: ClosedCurve>(
    curve: &C,
    grid: &GridSpec,
    cell: u32,
    table: &FragmentTable,
    out: &mut Vec<CurvedRegion>,
) {
    let b = grid.cell_box(cell as usize);
    let frags: Vec<&Fragment> = table.of_cell(cell).collect();

    let mut xs: Vec<f64> = vec![b.min.x, b.max.x];
    for f in &frags {
        for x in [f.p0.x, f.p1.x] {
            if x > b.min.x && x < b.max.x {
                xs.push(x);
            }
        }
    }
    xs.sort_by(|a, c| a.partial_cmp(c).unwrap());
    xs.dedup();

    for w in xs.windows(2) {
        band_slab(curve, cell, b.min.y, b.max.y, &frags, w[0], w[1], out);
    }
}

/// One graph spanning the slab [xa, xb].
struct SlabGraph {
    /// None for the horizontal cell edges, Some(fragment) for arcs.
    frag: Option<MonoPiece>,
    pl: Vec2,
    pr: Vec2,
    ll: f64,
    lr: f64,
    ym: f64,
}

impl SlabGraph {
    fn is_arc(&self) -> bool {
        self.frag.is_some()
    }

    fn edge_lr(&self) -> EdgeGeom {
        if self.is_arc() {
            EdgeGeom::Arc { l0: self.ll, l1: self.lr, a: self.pl, b: self.pr }
        } else {
            EdgeGeom::Seg { a: self.pl, b: self.pr }
        }
    }

    /// Splits the graph at x = xm (strictly inside its span).
    fn split_at<C: ClosedCurve>(&self, curve: &C, xm: f64) -> (SlabGraph, SlabGraph) {
        let (lm, pm) = match &self.frag {
            None => (0.0, Vec2::new(xm, self.pl.y)),
            Some(mp) => {
                let l = curve.mono_root(mp, Axis::X, xm);
                (l, Vec2::new(xm, curve.point(l).y))
            }
        };
        let left = SlabGraph { frag: self.frag, pl: self.pl, pr: pm, ll: self.ll, lr: lm, ym: self.ym };
        let right = SlabGraph { frag: self.frag, pl: pm, pr: self.pr, ll: lm, lr: self.lr, ym: self.ym };
        (left, right)
    }
}

#[allow(clippy::too_many_arguments)]
fn band_slab<C: ClosedCurve>(
    curve: &C,
    cell: u32,
    y0: f64,
    y1: f64,
    frags: &[&Fragment],
    xa: f64,
    xb: f64,
    out: &mut Vec<CurvedRegion>,
) {
    if xb <= xa {
        return;
    }
    let xm = 0.5 * (xa + xb);

    let mut graphs: Vec<SlabGraph> = Vec::with_capacity(frags.len() + 2);
    graphs.push(SlabGraph {
        frag: None,
        pl: Vec2::new(xa, y0),
        pr: Vec2::new(xb, y0),
        ll: 0.0,
        lr: 0.0,
        ym: y0,
    });
    for f in frags {
        if !(f.x_min() <= xa && f.x_max() >= xb) || f.x_min() == f.x_max() {
            continue;
        }
        let mp = f.as_mono();
        let (ll, pl) = graph_side(curve, &mp, f, xa);
        let (lr, pr) = graph_side(curve, &mp, f, xb);
        let lm = curve.mono_root(&mp, Axis::X, xm);
        let ym = curve.point(lm).y;
        graphs.push(SlabGraph { frag: Some(mp), pl, pr, ll, lr, ym });
    }
    graphs.push(SlabGraph {
        frag: None,
        pl: Vec2::new(xa, y1),
        pr: Vec2::new(xb, y1),
        ll: 0.0,
        lr: 0.0,
        ym: y1,
    });
    graphs.sort_by(|a, b| a.ym.partial_cmp(&b.ym).unwrap());

    let nb = graphs.len() - 1;
    // Parity seed: test containment at the fattest band's midpoint, then
    // alternate across the arc separators.
    let mut ref_band = 0;
    let mut best_h = f64::NEG_INFINITY;
    for g in 0..nb {
        let hgt = graphs[g + 1].ym - graphs[g].ym;
        if hgt > best_h {
            best_h = hgt;
            ref_band = g;
        }
    }
    let probe = Vec2::new(xm, 0.5 * (graphs[ref_band].ym + graphs[ref_band + 1].ym));
    let ref_inside = contains(curve, probe);

    for g in 0..nb {
        let inside = ref_inside == ((g % 2) == (ref_band % 2));
        if !inside {
            continue;
        }
        emit_band(curve, cell, &graphs[g], &graphs[g + 1], 0, out);
    }
}

fn graph_side<C: ClosedCurve>(curve: &C, mp: &MonoPiece, f: &Fragment, x: f64) -> (f64, Vec2) {
    if f.p0.x == x {
        (f.l0, f.p0)
    } else if f.p1.x == x {
        (f.l1, f.p1)
    } else {
        let l = curve.mono_root(mp, Axis::X, x);
        (l, Vec2::new(x, curve.point(l).y))
    }
}

fn emit_band<C: ClosedCurve>(
    curve: &C,
    cell: u32,
    bot: &SlabGraph,
    top: &SlabGraph,
    depth: usize,
    out: &mut Vec<CurvedRegion>,
) {
    let bl = bot.pl;
    let br = bot.pr;
    let tl = top.pl;
    let tr = top.pr;
    let left_pinch = bl == tl;
    let right_pinch = br == tr;

    if left_pinch && right_pinch {
        // Bigon: split until each half pinches on one side only.
        if depth >= 8 {
            return;
        }
        let xm = 0.5 * (bl.x + br.x);
        if !(xm > bl.x && xm < br.x) {
            return;
        }
        let (bot_l, bot_r) = bot.split_at(curve, xm);
        let (top_l, top_r) = top.split_at(curve, xm);
        emit_band(curve, cell, &bot_l, &top_l, depth + 1, out);
        emit_band(curve, cell, &bot_r, &top_r, depth + 1, out);
        return;
    }

    let shape = if left_pinch {
        RegionShape::Tri {
            e01: bot.edge_lr(),
            e12: EdgeGeom::Seg { a: br, b: tr },
            e02: top.edge_lr(),
        }
    } else if right_pinch {
        RegionShape::Tri {
            e01: top.edge_lr().reversed(),
            e12: EdgeGeom::Seg { a: tl, b: bl },
            e02: bot.edge_lr().reversed(),
        }
    } else {
        RegionShape::Quad {
            bottom: bot.edge_lr(),
            right: EdgeGeom::Seg { a: br, b: tr },
            top: top.edge_lr(),
            left: EdgeGeom::Seg { a: bl, b: tl },
        }
    };
    out.push(CurvedRegion { cell, shape });
}
