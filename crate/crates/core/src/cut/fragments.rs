//! Splitting a closed curve into cell-confined fragments.
//!
//! Every monotone piece is cut at its crossings with the grid lines, so each
//! resulting fragment lies in the closure of exactly one cell and crosses no
//! grid line. Crossing parameters are computed once per (piece, line) pair,
//! which keeps shared fragment endpoints bitwise identical across
//! neighboring cells.

use crate::curve::{Axis, ClosedCurve, MonoPiece};
use crate::error::{Result, SolverError};
use crate::geom::Vec2;
use crate::grid::GridSpec;

/// Maximal curve piece confined to one cell, monotone in both coordinates.
#[derive(Clone, Copy, Debug)]
pub struct Fragment {
    pub l0: f64,
    pub l1: f64,
    /// Endpoints with crossed grid coordinates snapped exactly onto the line.
    pub p0: Vec2,
    pub p1: Vec2,
    pub cell: u32,
    /// True when the fragment meets the open interior of its cell (degenerate
    /// fragments lying inside a grid line do not).
    pub cuts_cell: bool,
}

impl Fragment {
    pub fn as_mono(&self) -> MonoPiece {
        MonoPiece { l0: self.l0, l1: self.l1, p0: self.p0, p1: self.p1 }
    }

    pub fn x_min(&self) -> f64 {
        self.p0.x.min(self.p1.x)
    }

    pub fn x_max(&self) -> f64 {
        self.p0.x.max(self.p1.x)
    }
}

#[derive(Clone, Debug)]
pub struct FragmentTable {
    pub fragments: Vec<Fragment>,
    /// Distinct cells owning at least one interior-cutting fragment, sorted.
    cut_cells: Vec<u32>,
    /// CSR grouping of fragment indices by cut cell.
    offsets: Vec<u32>,
    order: Vec<u32>,
}

impl FragmentTable {
    pub fn build<C: ClosedCurve>(curve: &C, grid: &GridSpec) -> Result<FragmentTable> {
        let mut fragments = Vec::new();
        for mp in curve.mono_pieces() {
            split_piece(curve, grid, mp, &mut fragments)?;
        }

        let mut pairs: Vec<(u32, u32)> = fragments
            .iter()
            .enumerate()
            .filter(|(_, f)| f.cuts_cell)
            .map(|(i, f)| (f.cell, i as u32))
            .collect();
        pairs.sort();
        let mut cut_cells = Vec::new();
        let mut offsets = Vec::new();
        let mut order = Vec::with_capacity(pairs.len());
        for (cell, frag) in pairs {
            if cut_cells.last() != Some(&cell) {
                cut_cells.push(cell);
                offsets.push(order.len() as u32);
            }
            order.push(frag);
        }
        offsets.push(order.len() as u32);

        Ok(FragmentTable { fragments, cut_cells, offsets, order })
    }

    pub fn cut_cells(&self) -> &[u32] {
        &self.cut_cells
    }

    /// Indices into `fragments` of the interior-cutting fragments of `cell`.
    pub fn of_cell(&self, cell: u32) -> impl Iterator<Item = &Fragment> + '_ {
        let range = match self.cut_cells.binary_search(&cell) {
            Ok(i) => self.offsets[i] as usize..self.offsets[i + 1] as usize,
            Err(_) => 0..0,
        };
        self.order[range].iter().map(|&i| &self.fragments[i as usize])
    }

    pub fn is_cut(&self, cell: u32) -> bool {
        self.cut_cells.binary_search(&cell).is_ok()
    }
}

fn split_piece<C: ClosedCurve>(
    curve: &C,
    grid: &GridSpec,
    mp: &MonoPiece,
    out: &mut Vec<Fragment>,
) -> Result<()> {
    // Crossing events: (parameter, snapped point, axis of the crossed line).
    let mut events: Vec<(f64, Vec2, Option<Axis>)> = Vec::new();
    let box_err = |p: Vec2| {
        SolverError::CurveOutsideDomain(format!("curve point ({}, {}) outside the background box", p.x, p.y))
    };

    let (xlo, xhi) = (mp.p0.x.min(mp.p1.x), mp.p0.x.max(mp.p1.x));
    let h = grid.h;
    let i_first = ((xlo - grid.origin.x) / h).floor() as i64 + 1;
    let i_last = ((xhi - grid.origin.x) / h).ceil() as i64 - 1;
    for i in i_first..=i_last {
        if i < 0 || i as usize > grid.nx {
            return Err(box_err(mp.p0));
        }
        let c = grid.xline(i as usize);
        if c > xlo && c < xhi {
            let l = curve.mono_root(mp, Axis::X, c);
            let p = curve.point(l);
            events.push((l, Vec2::new(c, p.y), Some(Axis::X)));
        }
    }
    let (ylo, yhi) = (mp.p0.y.min(mp.p1.y), mp.p0.y.max(mp.p1.y));
    let j_first = ((ylo - grid.origin.y) / h).floor() as i64 + 1;
    let j_last = ((yhi - grid.origin.y) / h).ceil() as i64 - 1;
    for j in j_first..=j_last {
        if j < 0 || j as usize > grid.ny {
            return Err(box_err(mp.p0));
        }
        let c = grid.yline(j as usize);
        if c > ylo && c < yhi {
            let l = curve.mono_root(mp, Axis::Y, c);
            let p = curve.point(l);
            events.push((l, Vec2::new(p.x, c), Some(Axis::Y)));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    events.push((mp.l1, mp.p1, None));

    let mut last = (mp.l0, mp.p0);
    for (l, p, axis) in events {
        if l <= last.0 {
            // Coincident events (a corner pass-through): keep the coordinate
            // snapped by each event.
            let merged = match axis {
                Some(Axis::X) => Vec2::new(p.x, last.1.y),
                Some(Axis::Y) => Vec2::new(last.1.x, p.y),
                None => last.1,
            };
            last = (last.0, merged);
            if let Some(prev) = out.last_mut() {
                if prev.l1 == last.0 {
                    prev.p1 = merged;
                }
            }
            continue;
        }
        let lm = 0.5 * (last.0 + l);
        let pm = curve.point(lm);
        let (ci, cj) = grid.locate(pm).ok_or_else(|| box_err(pm))?;
        let cell = grid.cell_index(ci, cj) as u32;
        let b = grid.cell_box(cell as usize);
        let bb_min = Vec2::new(last.1.x.min(p.x), last.1.y.min(p.y));
        let bb_max = Vec2::new(last.1.x.max(p.x), last.1.y.max(p.y));
        let cuts_cell = bb_max.x > b.min.x && bb_min.x < b.max.x && bb_max.y > b.min.y && bb_min.y < b.max.y;
        out.push(Fragment { l0: last.0, l1: l, p0: last.1, p1: p, cell, cuts_cell });
        last = (l, p);
    }
    Ok(())
}
