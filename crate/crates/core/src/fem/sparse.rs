//! Sparse symmetric linear algebra: CSR storage, Jacobi-preconditioned
//! conjugate gradients, and a banded Cholesky used as an SPD probe.

use std::io::Write;

use crate::error::{Result, SolverError};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut trips: Vec<(u32, u32, f64)>) -> CsrMatrix {
        trips.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col: Vec<u32> = Vec::new();
        let mut val: Vec<f64> = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in trips {
            debug_assert!((r as usize) < n && (c as usize) < n);
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                last = Some((r, c));
            }
            row_ptr[r as usize + 1] = col.len();
        }
        // Prefix-max so empty rows point past their predecessors.
        for i in 1..=n {
            if row_ptr[i] < row_ptr[i - 1] {
                row_ptr[i] = row_ptr[i - 1];
            }
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col[r.clone()], &self.val[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c as usize];
            }
            y[i] = s;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// x' A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                row += v * x[*c as usize];
            }
            s += x[i] * row;
        }
        s
    }

    /// Largest relative asymmetry max |a_ij - a_ji| / max|a|.
    pub fn asymmetry(&self) -> f64 {
        let mut amax = 0.0f64;
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                amax = amax.max(v.abs());
                worst = worst.max((v - self.get(*c as usize, i)).abs());
            }
        }
        if amax == 0.0 {
            0.0
        } else {
            worst / amax
        }
    }

    /// `a + scale * b`; patterns need not match.
    pub fn add_scaled(&self, scale: f64, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, b.n);
        let mut trips = Vec::with_capacity(self.nnz() + b.nnz());
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                trips.push((i as u32, *c, *v));
            }
            let (cols, vals) = b.row(i);
            for (c, v) in cols.iter().zip(vals) {
                trips.push((i as u32, *c, scale * v));
            }
        }
        CsrMatrix::from_triplets(self.n, trips)
    }

    /// Symmetric coordinate MatrixMarket dump (lower triangle).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let lower: usize = (0..self.n)
            .map(|i| self.row(i).0.iter().filter(|&&c| (c as usize) <= i).count())
            .sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower)?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if (*c as usize) <= i {
                    writeln!(w, "{} {} {:.17e}", i + 1, *c + 1, v)?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PcgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Jacobi-preconditioned CG; `x` carries the initial guess in and the
/// solution out.
pub fn pcg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    let n = a.n;
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(PcgOutcome { iterations: 0, rel_residual: 0.0 });
    }
    let d = a.diag();
    let mut inv_d = vec![0.0; n];
    for i in 0..n {
        if d[i] <= 0.0 {
            return Err(SolverError::SolveFailure(format!(
                "nonpositive diagonal {} at row {i}",
                d[i]
            )));
        }
        inv_d[i] = 1.0 / d[i];
    }

    let mut r = vec![0.0; n];
    a.matvec_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let rnorm = norm(&r);
        if rnorm <= rtol * bnorm {
            return Ok(PcgOutcome { iterations: it, rel_residual: rnorm / bnorm });
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::SolveFailure(format!(
                "nonpositive curvature {pap} at iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_d[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / bnorm;
    Err(SolverError::SolveFailure(format!(
        "cg stalled at relative residual {rel:.3e} after {max_iter} iterations"
    )))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Banded Cholesky factor; row i stores L[i][i-bw..=i].
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

/// Factors an SPD matrix; fails with SolveFailure on a nonpositive pivot.
pub fn banded_cholesky(a: &CsrMatrix) -> Result<BandedCholesky> {
    let n = a.n;
    let mut bw = 0usize;
    for i in 0..n {
        for c in a.row(i).0 {
            bw = bw.max(i.abs_diff(*c as usize));
        }
    }
    let w = bw + 1;
    let mut band = vec![0.0; n * w];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (c, v) in cols.iter().zip(vals) {
            let j = *c as usize;
            if j <= i {
                band[i * w + (bw - (i - j))] = *v;
            }
        }
    }
    // In-place factorization; band[i][bw - (i - j)] holds L_ij.
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..=i {
            let mut s = band[i * w + (bw - (i - j))];
            let t0 = lo.max(j.saturating_sub(bw));
            for t in t0..j {
                s -= band[i * w + (bw - (i - t))] * band[j * w + (bw - (j - t))];
            }
            if j < i {
                band[i * w + (bw - (i - j))] = s / band[j * w + bw];
            } else {
                if s <= 0.0 {
                    return Err(SolverError::SolveFailure(format!(
                        "nonpositive pivot {s} at row {i}"
                    )));
                }
                band[i * w + bw] = s.sqrt();
            }
        }
    }
    Ok(BandedCholesky { n, bw, l: band })
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for j in lo..i {
                s -= self.l[i * w + (bw - (i - j))] * y[j];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for j in i + 1..=hi {
                s -= self.l[j * w + (bw - (j - i))] * y[j];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}
