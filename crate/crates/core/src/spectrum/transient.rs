//! Limits of `|f̃_r(λ)|` in the transient regime.
//!
//! Interior points are contracted to 0, and points of `∂E` satisfy
//! `2 ∏ p_s - 1 <= |f̃_r(λ)| <= 1` in the limit. Orbits of boundary points are
//! expanding, so double precision loses every digit long before depth 60. Boundary
//! samples are therefore taken on the point spectrum (which lies in `∂E`), refined
//! and iterated in double-double arithmetic.

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::julia::{boundary_pixels, pow_u64, FiberedSystem, MembershipGrid};
use crate::machine::{classify_chain, ChainClass};

use super::roots::point_spectrum;

type Dd = Complex<TwoFloat>;

pub const DEFAULT_PROBE_DEPTH: u64 = 60;
pub const BOUNDARY_SLACK: f64 = 0.05;
pub const INTERIOR_THRESHOLD: f64 = 0.1;
/// Radius, in pixels, of the all-bounded neighborhood required of an interior sample.
pub const INTERIOR_MARGIN: usize = 4;
/// Largest root-tree size used to pick boundary samples.
const ROOT_BUDGET: usize = 1 << 14;
/// Double-double roots are good to about `1e-28`; this keeps probes near `1e-12`.
const AMPLIFICATION_BUDGET: f64 = 1e16;

fn dd(z: Complex64) -> Dd {
    Dd::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

fn dd_norm(z: Dd) -> f64 {
    let n2 = z.re * z.re + z.im * z.im;
    f64::from(n2).sqrt()
}

/// `(f̃_r(λ), f̃_r'(λ))` in double-double.
fn compose_dd(sys: &FiberedSystem, lambda: Dd, r: u64) -> (Dd, Dd) {
    let one = Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let mut z = lambda;
    let mut dz = one;
    for s in 1..=r {
        let d = sys.base.d(s);
        let p = TwoFloat::from(sys.probs.p(s));
        let h = one + (z - one) / p;
        let hd1 = pow_u64(h, d - 1, one);
        dz = dz * hd1 * (TwoFloat::from(d as f64) / p);
        z = hd1 * h;
    }
    (z, dz)
}

/// Newton refinement of a root of `f̃_r = 1` in double-double.
fn refine_dd(sys: &FiberedSystem, lambda: Complex64, r: u64) -> Dd {
    let one = Dd::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let mut z = dd(lambda);
    let (mut val, mut deriv) = compose_dd(sys, z, r);
    let mut err = dd_norm(val - one);
    for _ in 0..8 {
        if err == 0.0 || dd_norm(deriv) == 0.0 {
            break;
        }
        let cand = z - (val - one) / deriv;
        let (cv, cd) = compose_dd(sys, cand, r);
        let cerr = dd_norm(cv - one);
        if cerr >= err || cerr.is_nan() {
            break;
        }
        z = cand;
        val = cv;
        deriv = cd;
        err = cerr;
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitSample {
    pub lambda: Complex64,
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransientReport {
    pub probe_depth: u64,
    /// `2 ∏ p_s - 1 - δ`.
    pub lower_bound: f64,
    /// Upper bound with a small allowance for double-double rounding.
    pub upper_bound: f64,
    pub boundary: Vec<LimitSample>,
    pub interior: Vec<LimitSample>,
    pub interior_threshold: f64,
}

impl TransientReport {
    pub fn boundary_range(&self) -> (f64, f64) {
        self.boundary.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.modulus), hi.max(s.modulus))
        })
    }

    pub fn interior_max(&self) -> f64 {
        self.interior.iter().map(|s| s.modulus).fold(0.0, f64::max)
    }

    pub fn boundary_ok(&self) -> bool {
        !self.boundary.is_empty()
            && self
                .boundary
                .iter()
                .all(|s| s.modulus >= self.lower_bound && s.modulus <= self.upper_bound)
    }

    pub fn interior_ok(&self) -> bool {
        self.interior.iter().all(|s| s.modulus < self.interior_threshold)
    }

    pub fn passed(&self) -> bool {
        self.boundary_ok() && self.interior_ok()
    }
}

/// Deepest root tree, at most `limit` stages, that fits the budget.
fn root_depth(sys: &FiberedSystem, limit: u64) -> u64 {
    let mut depth = 1;
    while depth < limit
        && sys
            .base
            .q_product(depth + 1)
            .is_ok_and(|q| q as usize <= ROOT_BUDGET)
    {
        depth += 1;
    }
    depth
}

/// Largest probe depth, at most `requested`, for which the stages past the sampled roots
/// magnify a rounding error by no more than `AMPLIFICATION_BUDGET`.
///
/// Each stage multiplies a perturbation of a point near 1 by `d_r / p_r`, so boundary
/// samples probed too deep report rounding noise rather than `|f̃_r|`.
pub fn stable_probe_depth(sys: &FiberedSystem, requested: u64) -> u64 {
    let mut r = root_depth(sys, requested);
    let mut gain = 1.0;
    while r < requested {
        let next = gain * sys.base.d(r + 1) as f64 / sys.probs.p(r + 1);
        if next > AMPLIFICATION_BUDGET {
            break;
        }
        gain = next;
        r += 1;
    }
    r
}

/// Evenly spaced picks from `items`.
fn spread<T: Copy>(items: &[T], count: usize) -> Vec<T> {
    if items.len() <= count {
        return items.to_vec();
    }
    (0..count).map(|i| items[i * items.len() / count]).collect()
}

pub fn transient_limit_check(
    sys: &FiberedSystem,
    grid: &MembershipGrid,
    sample_count: usize,
    probe_depth: u64,
) -> Result<TransientReport> {
    if classify_chain(&sys.probs, probe_depth.max(1)) != ChainClass::TransientLike {
        return Err(Error::NotTransient);
    }
    let boundary_px = boundary_pixels(grid);
    if boundary_px.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let product = sys.probs.infinite_product();

    let depth = root_depth(sys, probe_depth);
    let spectrum = point_spectrum(sys, depth, usize::MAX);
    let deepest = spectrum.deepest().expect("depth-1 roots always fit");
    let roots = &deepest.roots;

    let mut boundary = Vec::new();
    for (x, y) in spread(&boundary_px, sample_count) {
        let c = grid.center(x, y);
        let nearest = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - c).norm().total_cmp(&(b - c).norm()))
            .expect("root sets contain 1");
        let z = refine_dd(sys, nearest, deepest.depth);
        let (fz, _) = compose_dd(sys, z, probe_depth);
        boundary.push(LimitSample {
            lambda: Complex64::new(z.re.hi(), z.im.hi()),
            modulus: dd_norm(fz),
        });
    }

    let m = INTERIOR_MARGIN as isize;
    let mut deep = Vec::new();
    for y in 0..grid.height {
        for x in 0..grid.width {
            let all_bounded = (-m..=m).all(|dy| {
                (-m..=m).all(|dx| {
                    let (i, j) = (x as isize + dx, y as isize + dy);
                    i >= 0
                        && j >= 0
                        && (i as usize) < grid.width
                        && (j as usize) < grid.height
                        && grid.is_bounded(i as usize, j as usize)
                })
            });
            if all_bounded {
                deep.push((x, y));
            }
        }
    }
    let interior = spread(&deep, sample_count)
        .into_iter()
        .map(|(x, y)| {
            let lambda = grid.center(x, y);
            LimitSample {
                lambda,
                modulus: sys.compose(lambda, probe_depth).norm(),
            }
        })
        .collect();

    Ok(TransientReport {
        probe_depth,
        lower_bound: 2.0 * product - 1.0 - BOUNDARY_SLACK,
        upper_bound: 1.0 + 1e-9,
        boundary,
        interior,
        interior_threshold: INTERIOR_THRESHOLD,
    })
}
