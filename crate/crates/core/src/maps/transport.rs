//! Transport of history fields onto the current step by stabilized L2
//! projection: 𝓜(û, v) = (w ∘ X, v) over the current domain.
//!
//! The right-hand side integrates on the current cut decomposition and
//! pulls each quadrature point back through the one-step map. Keeping the
//! quadrature aligned with the test functions matters: v has O(1) gradient
//! jumps across background edges, while w ∘ X only carries the O(h^k)
//! inter-cell jumps of the finite element field w, so the rule never
//! straddles a strong kink.

use crate::basis::quad_basis_values;
use crate::curve::ClosedCurve;
use crate::error::Result;
use crate::fem::quad::VolumeQuad;
use crate::fem::sparse::{pcg_jacobi, CsrMatrix};
use crate::fem::{Field2, Geometry};

use super::patch::PatchMap;

/// RHS of the transported projection: rhs_j = ∫ w(X(x)) φ_j(x) dx over the
/// current domain, with X the backward map of `map`.
pub fn transported_rhs<C1: ClosedCurve, C2: ClosedCurve>(
    prev: &Geometry<C1>,
    prev_hat: &Field2,
    map: &PatchMap,
    cur: &Geometry<C2>,
    vq: &VolumeQuad,
) -> Result<Field2> {
    let k = cur.k;
    let mut rhs = [vec![0.0; cur.dofs.n_dofs], vec![0.0; cur.dofs.n_dofs]];
    let mut vals = [0.0; 25];
    for ci in 0..vq.n_cells() {
        let (cell, pts, wts) = vq.cell(ci);
        let dofs = cur.dofs.dofs_of(cell).expect("cover cell has dofs");
        for (x, w) in pts.iter().zip(wts) {
            let src = map.backward(*x)?;
            let v = prev.eval_vec(prev_hat, src)?;
            quad_basis_values(k, cur.local_coords(cell, *x), &mut vals);
            for (phi, d) in vals[..dofs.len()].iter().zip(dofs) {
                rhs[0][*d as usize] += w * v.x * phi;
                rhs[1][*d as usize] += w * v.y * phi;
            }
        }
    }
    Ok(rhs)
}

/// Projects a previous-step field onto the current space through the map:
/// solves the penalized mass system componentwise.
pub fn transport_project<C1: ClosedCurve, C2: ClosedCurve>(
    prev: &Geometry<C1>,
    prev_hat: &Field2,
    map: &PatchMap,
    cur: &Geometry<C2>,
    vq: &VolumeQuad,
    mass: &CsrMatrix,
) -> Result<Field2> {
    let rhs = transported_rhs(prev, prev_hat, map, cur, vq)?;
    let mut out = [vec![0.0; cur.dofs.n_dofs], vec![0.0; cur.dofs.n_dofs]];
    let max_iter = 100 + 10 * cur.dofs.n_dofs;
    for c in 0..2 {
        pcg_jacobi(mass, &rhs[c], &mut out[c], 1e-14, max_iter)?;
    }
    Ok(out)
}
