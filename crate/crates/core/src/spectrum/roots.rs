//! Backward iteration of the fibered system: `f̃_r^{-1}{1}` for each depth `r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::julia::{pow_u64, FiberedSystem};

pub const DEDUP_TOL: f64 = 1e-10;
pub const DEFAULT_CAP: usize = 200_000;

/// `f̃_r^{-1}{1}` with multiplicities collapsed.
#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub depth: u64,
    pub roots: Vec<Complex64>,
    pub dedup_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSpectrum {
    /// One set per depth `1..=r`, stopping early when the cap is hit.
    pub sets: Vec<RootSet>,
    /// The requested depth was not reached because the cap would have been exceeded.
    pub partial: bool,
    pub requested_depth: u64,
}

impl PointSpectrum {
    pub fn total_roots(&self) -> usize {
        self.sets.iter().map(|s| s.roots.len()).sum()
    }

    pub fn deepest(&self) -> Option<&RootSet> {
        self.sets.last()
    }
}

/// The `d_r` solutions of `f_r(z) = w`, ordered by the branch index of the `d_r`-th root.
pub fn preimage_stage(sys: &FiberedSystem, r: u64, w: Complex64) -> Vec<Complex64> {
    let d = sys.base.d(r);
    let p = sys.probs.p(r);
    let one = Complex64::new(1.0, 0.0);
    let (rho, theta) = w.to_polar();
    let modulus = rho.powf(1.0 / d as f64);
    (0..d)
        .map(|j| {
            let u = Complex64::from_polar(modulus, (theta + 2.0 * PI * j as f64) / d as f64);
            let z = one + (u - 1.0) * p;
            // One Newton step on h(z)^d - w, kept only if it helps. Near the critical
            // point the rounded z can sit where the derivative is tiny and the step wild.
            let h = one + (z - 1.0) / p;
            let hd1 = pow_u64(h, d - 1, one);
            let deriv = hd1 * (d as f64 / p);
            if deriv == Complex64::new(0.0, 0.0) {
                return z;
            }
            let cand = z - (hd1 * h - w) / deriv;
            let err = |x: Complex64| (pow_u64(one + (x - 1.0) / p, d, one) - w).norm();
            if cand.is_finite() && err(cand) < err(z) {
                cand
            } else {
                z
            }
        })
        .collect()
}

/// Follows one branch of the preimage tree from `w` back through stages
/// `branches.len(), …, 1`; `branches[r - 1]` selects the root index at stage `r`.
///
/// Each `f_r^{-1}` maps the closed unit disk into itself, so starting from `|w| <= 1`
/// gives a point whose orbit stays in the disk for `branches.len()` stages. Backward
/// iteration is contracting, unlike the forward orbit, so the result is accurate.
pub fn pull_back(sys: &FiberedSystem, w: Complex64, branches: &[u64]) -> Complex64 {
    branches
        .iter()
        .enumerate()
        .rev()
        .fold(w, |z, (i, &j)| {
            let pre = preimage_stage(sys, i as u64 + 1, z);
            pre[(j % pre.len() as u64) as usize]
        })
}

/// Removes points closer than `tol` to an earlier kept point.
pub fn dedup(mut pts: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut kept: Vec<Complex64> = Vec::with_capacity(pts.len());
    for z in pts {
        let dup = kept
            .iter()
            .rev()
            .take_while(|k| z.re - k.re <= tol)
            .any(|k| (z - k).norm() < tol);
        if !dup {
            kept.push(z);
        }
    }
    kept
}

/// `(f̃_r(λ), f̃_r'(λ))`.
pub fn compose_with_derivative(sys: &FiberedSystem, lambda: Complex64, r: u64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let mut z = lambda;
    let mut dz = one;
    for s in 1..=r {
        let d = sys.base.d(s);
        let p = sys.probs.p(s);
        let h = one + (z - 1.0) / p;
        let hd1 = pow_u64(h, d - 1, one);
        dz *= hd1 * (d as f64 / p);
        z = hd1 * h;
    }
    (z, dz)
}

const MAX_REFINE_STEP: f64 = 1e-8;

/// Up to three Newton steps on `f̃_r(λ) - 1`, each kept only if it reduces the residual.
pub fn refine_root(sys: &FiberedSystem, lambda: Complex64, r: u64) -> Complex64 {
    let mut best = lambda;
    let (mut val, mut deriv) = compose_with_derivative(sys, best, r);
    let mut err = (val - 1.0).norm();
    for _ in 0..3 {
        if err == 0.0 || deriv.norm() == 0.0 {
            break;
        }
        let step = (val - 1.0) / deriv;
        // Backward iteration is already accurate; a large step means a near-critical
        // point where Newton would wander to a different root.
        if !step.is_finite() || step.norm() > MAX_REFINE_STEP {
            break;
        }
        let cand = best - step;
        let (cv, cd) = compose_with_derivative(sys, cand, r);
        let cerr = (cv - 1.0).norm();
        if cerr < err {
            best = cand;
            val = cv;
            deriv = cd;
            err = cerr;
        } else {
            break;
        }
    }
    best
}

/// Roots of `f̃_r = 1` for `r = 1..=r_max`, pulled back from `1` through stages `r, …, 1`.
///
/// Depth `r` is skipped, and the result flagged partial, once the running total plus
/// the `∏_{j<=r} d_j` candidates at that depth would exceed `cap`.
pub fn point_spectrum(sys: &FiberedSystem, r_max: u64, cap: usize) -> PointSpectrum {
    assert!(r_max >= 1, "spectrum depth must be positive");
    let mut sets = Vec::new();
    let mut total = 0usize;
    let mut partial = false;
    for r in 1..=r_max {
        let bound = sys.base.q_product(r).ok().and_then(|q| usize::try_from(q).ok());
        match bound {
            Some(b) if total.saturating_add(b) <= cap => {}
            _ => {
                partial = true;
                break;
            }
        }
        let mut level = vec![Complex64::new(1.0, 0.0)];
        for s in (1..=r).rev() {
            let next: Vec<Complex64> = level
                .par_iter()
                .flat_map_iter(|&w| preimage_stage(sys, s, w))
                .collect();
            level = dedup(next, DEDUP_TOL);
        }
        let refined: Vec<Complex64> = level.par_iter().map(|&z| refine_root(sys, z, r)).collect();
        let roots = dedup(refined, DEDUP_TOL);
        total += roots.len();
        sets.push(RootSet {
            depth: r,
            roots,
            dedup_tol: DEDUP_TOL,
        });
    }
    PointSpectrum {
        sets,
        partial,
        requested_depth: r_max,
    }
}
