//! Renormalization identities linking the machine at stage `r` with the machine at
//! stage `r + 1`.
//!
//! `S_r` is the machine built from the shifted sequences `(d_r, d_{r+1}, …)` and
//! `(p_r, p_{r+1}, …)`, and `R_r = (S_r - (1 - p_r) I) / p_r`. With the 0/1 maps
//! `Π_k` (spreading state `m` to `k + m d_r`) and `F_k` (reading state `k + l d_r`
//! back as `l`), the identities checked are
//!
//! ```text
//! R_r Π_k = Π_{k-1}              for 1 <= k < d_r
//! R_r Π_0 = Π_{d_r - 1} S_{r+1}
//! R_r^{d_r} = Σ_k Π_k S_{r+1} F_k
//! ```

use crate::error::{Error, Result};
use crate::numeration::{BaseSeq, ProbSeq};

use super::build_matrix;

/// Small row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.cols + j] = x;
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn pow(&self, e: u64) -> DenseMatrix {
        assert_eq!(self.rows, self.cols);
        (0..e).fold(DenseMatrix::identity(self.rows), |acc, _| acc.mul(self))
    }

    /// Largest `|self - other|` over rows `< max_row` and columns `< max_col`.
    pub fn max_diff(&self, other: &DenseMatrix, max_row: usize, max_col: usize) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut worst = 0.0f64;
        for i in 0..max_row.min(self.rows) {
            for j in 0..max_col.min(self.cols) {
                worst = worst.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        worst
    }
}

/// `(Π_{k,r})_{l,m} = 1` iff `l = k + m d_r`.
pub fn projection_matrix_pi(
    k: u64,
    r: u64,
    n_rows: usize,
    n_cols: usize,
    base: &BaseSeq,
) -> Result<DenseMatrix> {
    let d = base.d(r);
    if k >= d {
        return Err(Error::InvalidParameter(format!("Π index {k} not below d_{r} = {d}")));
    }
    let mut m = DenseMatrix::zeros(n_rows, n_cols);
    for col in 0..n_cols {
        let l = k as usize + col * d as usize;
        if l < n_rows {
            m.set(l, col, 1.0);
        }
    }
    Ok(m)
}

/// `(F_{k,r})_{l,j} = 1` iff `j = k + l d_r`.
pub fn projection_matrix_f(
    k: u64,
    r: u64,
    n_rows: usize,
    n_cols: usize,
    base: &BaseSeq,
) -> Result<DenseMatrix> {
    let d = base.d(r);
    if k >= d {
        return Err(Error::InvalidParameter(format!("F index {k} not below d_{r} = {d}")));
    }
    let mut m = DenseMatrix::zeros(n_rows, n_cols);
    for l in 0..n_rows {
        let j = k as usize + l * d as usize;
        if j < n_cols {
            m.set(l, j, 1.0);
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenormReport {
    pub r: u64,
    pub n1: usize,
    pub n2: usize,
    /// Rows below this index are compared.
    pub window: usize,
    /// `max |R^{d_r} - Σ_k Π_k S_{r+1} F_k|` on the window.
    pub power_diff: f64,
    /// Largest difference over the `R Π_k` identities on the window.
    pub shift_diff: f64,
}

impl RenormReport {
    pub fn max_diff(&self) -> f64 {
        self.power_diff.max(self.shift_diff)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_diff() < tol
    }
}

pub fn renorm_check(r: u64, n2: usize, base: &BaseSeq, probs: &ProbSeq) -> Result<RenormReport> {
    if r < 1 || n2 < 2 {
        return Err(Error::InvalidParameter(format!(
            "renormalization check needs r >= 1 and N2 >= 2 (got r={r}, N2={n2})"
        )));
    }
    let d = base.d(r);
    let d_next = base.d(r + 1);
    let n1 = n2
        .checked_mul(d as usize)
        .ok_or(Error::Overflow("renormalization dimension N1"))?;
    let margin = (d * d_next) as usize;
    let window = n1.saturating_sub(margin);
    if window == 0 {
        return Err(Error::EmptyInterior { n1, margin });
    }

    let s_r = build_matrix(n1, &base.shifted(r - 1), &probs.shifted(r - 1))?.to_dense();
    let s_next = build_matrix(n2, &base.shifted(r), &probs.shifted(r))?.to_dense();
    let p = probs.p(r);
    let mut rr = s_r;
    for i in 0..n1 {
        rr.set(i, i, rr.get(i, i) - (1.0 - p));
    }
    rr.data.iter_mut().for_each(|x| *x /= p);

    let pis = (0..d)
        .map(|k| projection_matrix_pi(k, r, n1, n2, base))
        .collect::<Result<Vec<_>>>()?;

    let lhs = rr.pow(d);
    let mut rhs = DenseMatrix::zeros(n1, n1);
    for (k, pi) in pis.iter().enumerate() {
        let f = projection_matrix_f(k as u64, r, n2, n1, base)?;
        rhs.add_assign(&pi.mul(&s_next).mul(&f));
    }
    let power_diff = lhs.max_diff(&rhs, window, window);

    let mut shift_diff = 0.0f64;
    for k in 1..d as usize {
        let got = rr.mul(&pis[k]);
        shift_diff = shift_diff.max(got.max_diff(&pis[k - 1], window, n2));
    }
    let got = rr.mul(&pis[0]);
    let expect = pis[d as usize - 1].mul(&s_next);
    shift_diff = shift_diff.max(got.max_diff(&expect, window, n2));

    Ok(RenormReport {
        r,
        n1,
        n2,
        window,
        power_diff,
        shift_diff,
    })
}
