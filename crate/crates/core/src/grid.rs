//! Fixed Cartesian background grid over the rectangular box D.

use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Vec2};

/// Uniform nx-by-ny grid of square cells of side h anchored at `origin`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: Vec2, h: f64, nx: usize, ny: usize) -> GridSpec {
        assert!(h > 0.0 && nx > 0 && ny > 0);
        GridSpec { origin, h, nx, ny }
    }

    /// Square box [x0, x0+side]^2 split into n cells per direction.
    pub fn square(x0: f64, side: f64, n: usize) -> GridSpec {
        GridSpec::new(Vec2::new(x0, x0), side / n as f64, n, n)
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// x-coordinate of vertical grid line i, 0..=nx. All geometry code must
    /// use these accessors so shared lines agree bitwise.
    #[inline]
    pub fn xline(&self, i: usize) -> f64 {
        self.origin.x + i as f64 * self.h
    }

    #[inline]
    pub fn yline(&self, j: usize) -> f64 {
        self.origin.y + j as f64 * self.h
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn cell_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn cell_box(&self, idx: usize) -> Aabb {
        let (i, j) = self.cell_coords(idx);
        Aabb::new(
            Vec2::new(self.xline(i), self.yline(j)),
            Vec2::new(self.xline(i + 1), self.yline(j + 1)),
        )
    }

    pub fn domain_box(&self) -> Aabb {
        Aabb::new(
            self.origin,
            Vec2::new(self.xline(self.nx), self.yline(self.ny)),
        )
    }

    /// Cell containing p under the half-open convention x in [x_i, x_{i+1});
    /// None outside the grid.
    pub fn locate(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.h;
        let fy = (p.y - self.origin.y) / self.h;
        if !(fx >= 0.0 && fy >= 0.0) {
            return None;
        }
        let mut i = fx.floor() as usize;
        let mut j = fy.floor() as usize;
        // Repair floating point drift right at a grid line.
        if p.x < self.xline(i) {
            i = i.checked_sub(1)?;
        } else if i + 1 <= self.nx && p.x >= self.xline(i + 1) {
            i += 1;
        }
        if p.y < self.yline(j) {
            j = j.checked_sub(1)?;
        } else if j + 1 <= self.ny && p.y >= self.yline(j + 1) {
            j += 1;
        }
        if i < self.nx && j < self.ny {
            Some((i, j))
        } else {
            None
        }
    }

    /// Clamped variant for points that may sit on the far boundary or
    /// marginally outside.
    pub fn locate_clamped(&self, p: Vec2) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.h).floor();
        let fy = ((p.y - self.origin.y) / self.h).floor();
        let i = (fx.max(0.0) as usize).min(self.nx - 1);
        let j = (fy.max(0.0) as usize).min(self.ny - 1);
        (i, j)
    }
}
