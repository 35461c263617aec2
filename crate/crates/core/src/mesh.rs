//! Classification of background cells against the current interface.
//!
//! The cover is every cell that is cut, has its center enclosed, or lies
//! within h/4 of the interface. Interior cells are the uncut cells with
//! enclosed centers; the rest of the cover forms the boundary zone where
//! ghost penalties act. Ghost edges are the shared edges of two cover cells
//! of which at least one belongs to the boundary zone.

use crate::curve::{contains, within_distance_of_rect, Axis, ClosedCurve};
use crate::cut::FragmentTable;
use crate::error::{Result, SolverError};
use crate::grid::GridSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellLabel {
    Exterior,
    Interior,
    BoundaryZone,
}

/// Shared edge of two adjacent cover cells; `axis` is the direction of the
/// edge normal, so `axis == X` means `hi = lo + (1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GhostEdge {
    pub lo: u32,
    pub hi: u32,
    pub axis: Axis,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub labels: Vec<CellLabel>,
    /// Sorted cell indices by role; cover = interior + boundary zone.
    pub cover: Vec<u32>,
    pub interior: Vec<u32>,
    pub boundary_zone: Vec<u32>,
    pub ghost_edges: Vec<GhostEdge>,
    /// Connected components of the cover under edge adjacency.
    pub cover_components: usize,
}

impl Classification {
    pub fn label(&self, cell: u32) -> CellLabel {
        self.labels[cell as usize]
    }

    pub fn is_cover(&self, cell: u32) -> bool {
        self.labels[cell as usize] != CellLabel::Exterior
    }
}

pub fn classify<C: ClosedCurve>(
    curve: &C,
    grid: &GridSpec,
    table: &FragmentTable,
) -> Result<Classification> {
    let n = grid.n_cells();
    let band = 0.25 * grid.h;
    let mut labels = vec![CellLabel::Exterior; n];

    for idx in 0..n {
        let cell = idx as u32;
        let cut = table.is_cut(cell);
        let b = grid.cell_box(idx);
        let center_in = contains(curve, b.center());
        let covered = if cut || center_in {
            true
        } else {
            within_distance_of_rect(curve, &b, band)
        };
        if !covered {
            continue;
        }
        labels[idx] = if !cut && center_in { CellLabel::Interior } else { CellLabel::BoundaryZone };
    }

    // The cover must stay clear of the outermost cell ring so every cover
    // cell has all its edge neighbors available.
    for idx in 0..n {
        if labels[idx] == CellLabel::Exterior {
            continue;
        }
        let (i, j) = grid.cell_coords(idx);
        if i == 0 || j == 0 || i + 1 == grid.nx || j + 1 == grid.ny {
            return Err(SolverError::CurveOutsideDomain(format!(
                "cover reaches the outermost cell ring at ({i}, {j})"
            )));
        }
    }

    let mut cover = Vec::new();
    let mut interior = Vec::new();
    let mut boundary_zone = Vec::new();
    for (idx, &l) in labels.iter().enumerate() {
        match l {
            CellLabel::Exterior => {}
            CellLabel::Interior => {
                cover.push(idx as u32);
                interior.push(idx as u32);
            }
            CellLabel::BoundaryZone => {
                cover.push(idx as u32);
                boundary_zone.push(idx as u32);
            }
        }
    }

    let mut ghost_edges = Vec::new();
    for &cell in &cover {
        let idx = cell as usize;
        let (i, j) = grid.cell_coords(idx);
        for (axis, ni, nj) in [(Axis::X, i + 1, j), (Axis::Y, i, j + 1)] {
            if ni >= grid.nx || nj >= grid.ny {
                continue;
            }
            let nb = grid.cell_index(ni, nj);
            if labels[nb] == CellLabel::Exterior {
                continue;
            }
            if labels[idx] == CellLabel::BoundaryZone || labels[nb] == CellLabel::BoundaryZone {
                ghost_edges.push(GhostEdge { lo: cell, hi: nb as u32, axis });
            }
        }
    }

    let cover_components = count_components(grid, &labels, &cover);

    Ok(Classification { labels, cover, interior, boundary_zone, ghost_edges, cover_components })
}

fn count_components(grid: &GridSpec, labels: &[CellLabel], cover: &[u32]) -> usize {
    let mut seen = vec![false; grid.n_cells()];
    let mut components = 0;
    let mut stack = Vec::new();
    for &start in cover {
        if seen[start as usize] {
            continue;
        }
        components += 1;
        seen[start as usize] = true;
        stack.push(start as usize);
        while let Some(idx) = stack.pop() {
            let (i, j) = grid.cell_coords(idx);
            let mut push = |ii: usize, jj: usize, stack: &mut Vec<usize>| {
                if ii < grid.nx && jj < grid.ny {
                    let nb = grid.cell_index(ii, jj);
                    if labels[nb] != CellLabel::Exterior && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            };
            push(i + 1, j, &mut stack);
            push(i, j + 1, &mut stack);
            if i > 0 {
                push(i - 1, j, &mut stack);
            }
            if j > 0 {
                push(i, j - 1, &mut stack);
            }
        }
    }
    components
}
