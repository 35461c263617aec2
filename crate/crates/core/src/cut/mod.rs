//! Cut-cell geometry: the curve is fragmented at grid lines, and each cut
//! cell is tiled by curved quadrilaterals and triangles whose edges are
//! exact spline arcs or straight segments.

mod fragments;
mod region;
pub mod transform;

pub use fragments::{Fragment, FragmentTable};
pub use region::{decompose_cell, CurvedRegion, EdgeGeom, RegionShape};

use crate::curve::ClosedCurve;
use crate::grid::GridSpec;

/// Regions of all cut cells, grouped per cell in ascending cell order.
#[derive(Clone, Debug)]
pub struct CellRegions {
    pub regions: Vec<CurvedRegion>,
    /// Parallel to `cut_cells`: regions[offsets[i]..offsets[i+1]] belong to
    /// cut_cells[i].
    pub cut_cells: Vec<u32>,
    pub offsets: Vec<u32>,
}

impl CellRegions {
    pub fn build<C: ClosedCurve>(curve: &C, grid: &GridSpec, table: &FragmentTable) -> CellRegions {
        let mut regions = Vec::new();
        let mut cut_cells = Vec::new();
        let mut offsets = vec![0u32];
        for &cell in table.cut_cells() {
            decompose_cell(curve, grid, cell, table, &mut regions);
            cut_cells.push(cell);
            offsets.push(regions.len() as u32);
        }
        CellRegions { regions, cut_cells, offsets }
    }

    pub fn of_cell(&self, cell: u32) -> &[CurvedRegion] {
        match self.cut_cells.binary_search(&cell) {
            Ok(i) => &self.regions[self.offsets[i] as usize..self.offsets[i + 1] as usize],
            Err(_) => &[],
        }
    }

    /// Area of the overlap of the enclosed domain with the given cut cell,
    /// by Green's theorem over the region loops.
    pub fn cell_area<C: ClosedCurve>(&self, curve: &C, cell: u32) -> f64 {
        self.of_cell(cell).iter().map(|r| r.area(curve)).sum()
    }
}
