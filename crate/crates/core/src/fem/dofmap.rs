//! Degrees of freedom of the Q_k space restricted to the cover.
//!
//! Basis nodes live on the global tensor lattice of the background grid,
//! (nx·k+1) by (ny·k+1) points; a node is active when some cover cell uses
//! it. Active nodes are numbered densely in lattice row-major order, which
//! fixes the assembly and solver ordering regardless of traversal.

use crate::basis::{quad_node_count, quad_node_index};
use crate::geom::Vec2;
use crate::grid::GridSpec;
use crate::mesh::Classification;

#[derive(Clone, Debug)]
pub struct DofMap {
    pub k: usize,
    pub n_dofs: usize,
    lat_nx: usize,
    node_dof: Vec<i64>,
    cover: Vec<u32>,
    cell_dofs: Vec<u32>,
    /// Physical position of each dof node.
    pub positions: Vec<Vec2>,
}

impl DofMap {
    pub fn build(grid: &GridSpec, cls: &Classification, k: usize) -> DofMap {
        let lat_nx = grid.nx * k + 1;
        let lat_ny = grid.ny * k + 1;
        let mut node_dof = vec![-1i64; lat_nx * lat_ny];
        for &cell in &cls.cover {
            let (i, j) = grid.cell_coords(cell as usize);
            for b in 0..=k {
                for a in 0..=k {
                    node_dof[(j * k + b) * lat_nx + (i * k + a)] = 0;
                }
            }
        }
        let mut n_dofs = 0usize;
        let mut positions = Vec::new();
        for (idx, d) in node_dof.iter_mut().enumerate() {
            if *d == 0 {
                *d = n_dofs as i64;
                let (lx, ly) = (idx % lat_nx, idx / lat_nx);
                positions.push(Vec2::new(
                    grid.origin.x + grid.h * lx as f64 / k as f64,
                    grid.origin.y + grid.h * ly as f64 / k as f64,
                ));
                n_dofs += 1;
            }
        }
        let nn = quad_node_count(k);
        let mut cell_dofs = Vec::with_capacity(cls.cover.len() * nn);
        for &cell in &cls.cover {
            let (i, j) = grid.cell_coords(cell as usize);
            for b in 0..=k {
                for a in 0..=k {
                    let d = node_dof[(j * k + b) * lat_nx + (i * k + a)];
                    debug_assert!(d >= 0);
                    debug_assert_eq!(cell_dofs.len() % nn, quad_node_index(a, b, k));
                    cell_dofs.push(d as u32);
                }
            }
        }
        DofMap { k, n_dofs, lat_nx, node_dof, cover: cls.cover.clone(), cell_dofs, positions }
    }

    /// Dofs of a cover cell in tensor node order, None off the cover.
    pub fn dofs_of(&self, cell: u32) -> Option<&[u32]> {
        let nn = quad_node_count(self.k);
        let pos = self.cover.binary_search(&cell).ok()?;
        Some(&self.cell_dofs[pos * nn..(pos + 1) * nn])
    }

    /// Dof of the lattice node (lx, ly), if active.
    pub fn node_dof(&self, lx: usize, ly: usize) -> Option<u32> {
        let d = self.node_dof[ly * self.lat_nx + lx];
        (d >= 0).then_some(d as u32)
    }
}
