//! The stochastic adding machine on a Cantor numeration system.
//!
//! From state `n` the machine tries to add one. At stage `s` the carry is
//! propagated with probability `p_s`; if it fails at stage `s + 1` the first `s`
//! digits have already been reset, so the chain lands on `T_s(n) = n - (q_s - 1)`.

mod export;
mod renorm;
mod simulate;

pub use export::{write_coordinate, write_trajectory_csv};
pub use renorm::{projection_matrix_f, projection_matrix_pi, renorm_check, DenseMatrix, RenormReport};
pub use simulate::{sample_step, simulate, Trajectory, RNG_ALGORITHM};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeration::{counter_of, BaseSeq, ProbSeq};

/// Threshold below which an explicit partial product is treated as vanishing.
pub const PRODUCT_THRESHOLD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionRow {
    pub source: u64,
    /// `(target, probability)` sorted by target, probabilities strictly positive.
    pub entries: Vec<(u64, f64)>,
}

impl TransitionRow {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn prob(&self, target: u64) -> f64 {
        self.entries
            .binary_search_by_key(&target, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

/// Row `n` of the infinite transition matrix.
pub fn transition_row(n: u64, base: &BaseSeq, probs: &ProbSeq) -> TransitionRow {
    let sn = counter_of(n, base);
    let mut entries = Vec::with_capacity(sn as usize + 1);
    let p1 = probs.p(1);
    if p1 < 1.0 {
        entries.push((n, 1.0 - p1));
    }
    // `prod` is p_1⋯p_s, `q` is q_s.
    let mut prod = p1;
    let mut q = base.d(1);
    for s in 1..sn {
        let next = probs.p(s + 1);
        if next < 1.0 {
            entries.push((n - (q - 1), (1.0 - next) * prod));
        }
        prod *= next;
        if s + 1 < sn {
            q *= base.d(s + 1);
        }
    }
    entries.push((n + 1, prod));
    entries.sort_by_key(|e| e.0);
    TransitionRow { source: n, entries }
}

/// The `N × N` upper-left block of the transition matrix.
#[derive(Clone, Debug)]
pub struct SparseTransitionMatrix {
    dim: usize,
    rows: Vec<TransitionRow>,
    clipped: Vec<bool>,
    base: BaseSeq,
    probs: ProbSeq,
}

pub fn build_matrix(n: usize, base: &BaseSeq, probs: &ProbSeq) -> Result<SparseTransitionMatrix> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("matrix dimension {n} below 2")));
    }
    let (rows, clipped): (Vec<_>, Vec<_>) = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut row = transition_row(i, base, probs);
            let before = row.entries.len();
            row.entries.retain(|e| e.0 < n as u64);
            let clipped = row.entries.len() != before;
            (row, clipped)
        })
        .unzip();
    Ok(SparseTransitionMatrix {
        dim: n,
        rows,
        clipped,
        base: base.clone(),
        probs: probs.clone(),
    })
}

impl SparseTransitionMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn row(&self, n: usize) -> &TransitionRow {
        &self.rows[n]
    }

    pub fn is_clipped(&self, n: usize) -> bool {
        self.clipped[n]
    }

    pub fn clipped_rows(&self) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.clipped[i]).collect()
    }

    pub fn base(&self) -> &BaseSeq {
        &self.base
    }

    pub fn probs(&self) -> &ProbSeq {
        &self.probs
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.rows[row].prob(col as u64)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.entries.len()).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for row in &self.rows {
            for &(c, p) in &row.entries {
                m.set(row.source as usize, c as usize, p);
            }
        }
        m
    }

    /// Largest `|row sum - 1|` over unclipped rows.
    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.clipped)
            .filter(|(_, &c)| !c)
            .map(|(r, _)| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sum of column `col` over rows `[0, rows)`.
    pub fn column_partial_sum(&self, col: usize, rows: usize) -> f64 {
        self.rows[..rows.min(self.dim)]
            .iter()
            .map(|r| r.prob(col as u64))
            .sum()
    }
}

/// `(S v)_n` for each unclipped row, `None` on clipped rows.
pub fn apply_operator(
    mat: &SparseTransitionMatrix,
    v: &[Complex64],
) -> Result<Vec<Option<Complex64>>> {
    if v.len() != mat.dim {
        return Err(Error::DimensionMismatch {
            expected: mat.dim,
            actual: v.len(),
        });
    }
    Ok(mat
        .rows
        .par_iter()
        .zip(mat.clipped.par_iter())
        .map(|(row, &clipped)| {
            (!clipped).then(|| {
                row.entries
                    .iter()
                    .map(|&(m, p)| v[m as usize] * p)
                    .sum()
            })
        })
        .collect())
}

/// `‖(S - λI) v‖_∞` over unclipped rows.
pub fn eigen_residual(mat: &SparseTransitionMatrix, lambda: Complex64, v: &[Complex64]) -> Result<f64> {
    let sv = apply_operator(mat, v)?;
    Ok(sv
        .iter()
        .zip(v)
        .filter_map(|(s, x)| s.map(|s| (s - lambda * x).norm()))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnSum {
    pub column: usize,
    pub sum: f64,
    /// Every row of the infinite matrix that reaches this column lies inside the truncation.
    pub complete: bool,
}

pub fn column_sum_report(mat: &SparseTransitionMatrix) -> Vec<ColumnSum> {
    let mut sums = vec![0.0; mat.dim];
    for row in &mat.rows {
        for &(c, p) in &row.entries {
            sums[c as usize] += p;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(m, sum)| ColumnSum {
            column: m,
            sum,
            complete: column_complete(m as u64, mat.dim as u64, &mat.base),
        })
        .collect()
}

/// Column `m >= 1` is reached from rows `m`, `m - 1` and `m + q_s - 1` for every `s`
/// below the position of the first nonzero digit of `m`. Column 0 is reached from
/// infinitely many rows and is never complete.
fn column_complete(m: u64, n: u64, base: &BaseSeq) -> bool {
    if m == 0 {
        return false;
    }
    let mut rest = m;
    let mut q = 1u64;
    let mut r = 1;
    while rest.is_multiple_of(base.d(r)) {
        rest /= base.d(r);
        q = match q.checked_mul(base.d(r)) {
            Some(q) => q,
            None => return false,
        };
        r += 1;
    }
    // q is now q_{v-1}.
    m.checked_add(q - 1).is_some_and(|top| top < n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainClass {
    NullRecurrentLike,
    TransientLike,
}

/// Recurrence classification from the infinite product of the probabilities.
///
/// Every supported tail has a closed-form product, so `depth` only bounds how many
/// explicit prefix terms are multiplied before the tail takes over.
pub fn classify_chain(probs: &ProbSeq, depth: u64) -> ChainClass {
    assert!(depth >= 1, "classification depth must be positive");
    let product = match probs.kind() {
        crate::numeration::ProbKind::Prefix { prefix, tail } if *tail == 1.0 => {
            let len = (prefix.len() as u64).saturating_sub(probs.shift()).max(depth);
            probs.partial_product(len)
        }
        _ => probs.infinite_product(),
    };
    if product < PRODUCT_THRESHOLD {
        ChainClass::NullRecurrentLike
    } else {
        ChainClass::TransientLike
    }
}
