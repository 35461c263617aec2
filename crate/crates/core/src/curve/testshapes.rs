//! Closed-curve stand-ins used by unit tests across modules.

use crate::geom::Vec2;

use super::{ClosedCurve, MonoPiece};

/// Square traced counterclockwise, sides parametrized by arc length.
pub(crate) struct AxisSquare {
    mono: Vec<MonoPiece>,
    pub c0: Vec2,
    pub side: f64,
}

impl AxisSquare {
    pub fn new(c0: Vec2, side: f64) -> AxisSquare {
        let c = [
            c0,
            c0 + Vec2::new(side, 0.0),
            c0 + Vec2::new(side, side),
            c0 + Vec2::new(0.0, side),
        ];
        let mono = (0..4)
            .map(|s| MonoPiece {
                l0: s as f64 * side,
                l1: (s + 1) as f64 * side,
                p0: c[s],
                p1: c[(s + 1) % 4],
            })
            .collect();
        AxisSquare { mono, c0, side }
    }
}

impl ClosedCurve for AxisSquare {
    fn param_len(&self) -> f64 {
        4.0 * self.side
    }

    fn point(&self, l: f64) -> Vec2 {
        let l = l.rem_euclid(self.param_len());
        let s = (l / self.side).floor().min(3.0) as usize;
        let t = l - s as f64 * self.side;
        let mp = &self.mono[s];
        mp.p0 + (mp.p1 - mp.p0) * (t / self.side)
    }

    fn tangent(&self, l: f64) -> Vec2 {
        let l = l.rem_euclid(self.param_len());
        let s = (l / self.side).floor().min(3.0) as usize;
        let mp = &self.mono[s];
        (mp.p1 - mp.p0) / self.side
    }

    fn accel(&self, _l: f64) -> Vec2 {
        Vec2::ZERO
    }

    fn mono_pieces(&self) -> &[MonoPiece] {
        &self.mono
    }

    fn arc_gauss_points(&self) -> usize {
        4
    }
}
