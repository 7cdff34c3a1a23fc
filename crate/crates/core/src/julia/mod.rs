//! The fibered polynomial system `f_r(z) = h_r(z)^{d_r}` with `h_r(z) = 1 + (z - 1)/p_r`.
//!
//! `f̃_r = f_r ∘ ⋯ ∘ f_1`. A point escapes as soon as `|f̃_r(λ)| > 1`, after which the
//! orbit diverges; the filled Julia set `E` is the set of points that never escape.

mod grid;

pub use grid::{
    boundary_pixels, render, write_metadata, write_pbm, write_pgm, MembershipGrid, PixelStatus,
    Window,
};

use std::ops::Mul;

use num_complex::Complex64;

use crate::numeration::{BaseSeq, ProbSeq};

/// Default number of stages iterated before a point is declared bounded.
pub const DEFAULT_DEPTH: u64 = 200;

/// `x^e` by repeated squaring.
pub fn pow_u64<T: Copy + Mul<Output = T>>(x: T, mut e: u64, one: T) -> T {
    let mut acc = one;
    let mut sq = x;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * sq;
        }
        e >>= 1;
        if e > 0 {
            sq = sq * sq;
        }
    }
    acc
}

fn cpow(z: Complex64, e: u64) -> Complex64 {
    pow_u64(z, e, Complex64::new(1.0, 0.0))
}

/// `|z| > 1`, with NaN and infinities counted as escaped.
#[inline]
pub fn escaped(z: Complex64) -> bool {
    let m = z.norm_sqr();
    m > 1.0 || m.is_nan()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberedSystem {
    pub base: BaseSeq,
    pub probs: ProbSeq,
}

/// `(d_r, p_r)` for `r = 1..=len`, cached for inner loops.
#[derive(Clone, Debug)]
pub(crate) struct Stages(Vec<(u64, f64)>);

impl Stages {
    #[inline]
    pub(crate) fn get(&self, r: u64) -> (u64, f64) {
        self.0[(r - 1) as usize]
    }

    pub(crate) fn len(&self) -> u64 {
        self.0.len() as u64
    }
}

#[inline]
fn h(p: f64, z: Complex64) -> Complex64 {
    Complex64::new(1.0, 0.0) + (z - 1.0) / p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitStatus {
    /// First stage with `|f̃_r| > 1`.
    Escaped(u64),
    /// No escape within the given number of stages.
    BoundedUpTo(u64),
}

impl OrbitStatus {
    pub fn is_bounded(&self) -> bool {
        matches!(self, OrbitStatus::BoundedUpTo(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitResult {
    pub status: OrbitStatus,
    pub final_value: Complex64,
    /// `f̃_1(λ), …, f̃_r(λ)` up to the stopping stage.
    pub trace: Option<Vec<Complex64>>,
}

impl FiberedSystem {
    pub fn new(base: BaseSeq, probs: ProbSeq) -> Self {
        FiberedSystem { base, probs }
    }

    pub(crate) fn stages(&self, len: u64) -> Stages {
        Stages((1..=len).map(|r| (self.base.d(r), self.probs.p(r))).collect())
    }

    pub fn h(&self, r: u64, z: Complex64) -> Complex64 {
        h(self.probs.p(r), z)
    }

    /// `f_r(z)`.
    pub fn stage_map(&self, r: u64, z: Complex64) -> Complex64 {
        cpow(self.h(r, z), self.base.d(r))
    }

    /// `f̃_r(λ)` without any bailout.
    pub fn compose(&self, lambda: Complex64, r: u64) -> Complex64 {
        (1..=r).fold(lambda, |z, s| self.stage_map(s, z))
    }

    pub fn orbit(&self, lambda: Complex64, r_max: u64, keep_trace: bool) -> OrbitResult {
        self.orbit_with_bailout(lambda, r_max, 1.0, keep_trace)
    }

    /// Orbit stopping at the first stage with `|f̃_r| > bailout`.
    pub fn orbit_with_bailout(
        &self,
        lambda: Complex64,
        r_max: u64,
        bailout: f64,
        keep_trace: bool,
    ) -> OrbitResult {
        assert!(r_max >= 1, "orbit depth must be positive");
        let mut trace = keep_trace.then(Vec::new);
        let mut z = lambda;
        let b2 = bailout * bailout;
        for r in 1..=r_max {
            z = self.stage_map(r, z);
            if let Some(t) = trace.as_mut() {
                t.push(z);
            }
            let m = z.norm_sqr();
            if m > b2 || m.is_nan() {
                return OrbitResult {
                    status: OrbitStatus::Escaped(r),
                    final_value: z,
                    trace,
                };
            }
        }
        OrbitResult {
            status: OrbitStatus::BoundedUpTo(r_max),
            final_value: z,
            trace,
        }
    }

    pub(crate) fn escape_status(&self, stages: &Stages, lambda: Complex64) -> OrbitStatus {
        let mut z = lambda;
        for r in 1..=stages.len() {
            let (d, p) = stages.get(r);
            z = cpow(h(p, z), d);
            if escaped(z) {
                return OrbitStatus::Escaped(r);
            }
        }
        OrbitStatus::BoundedUpTo(stages.len())
    }

    /// `ι_λ(r) = h_r(f̃_{r-1}(λ))`.
    pub fn iota(&self, lambda: Complex64, r: u64) -> Complex64 {
        assert!(r >= 1);
        self.h(r, self.compose(lambda, r - 1))
    }

    /// `ι_λ(1), …, ι_λ(t)`.
    pub fn iotas(&self, lambda: Complex64, t: u64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(t as usize);
        let mut z = lambda;
        for r in 1..=t {
            let i = self.h(r, z);
            out.push(i);
            z = cpow(i, self.base.d(r));
        }
        out
    }

    /// `v_λ(n) = ∏_r ι_λ(r)^{a_r(n)}` for `n < len`, with `0^0 = 1`.
    pub fn eigvec(&self, lambda: Complex64, len: usize) -> Vec<Complex64> {
        self.digit_product(lambda, len, u64::MAX)
    }

    /// `g_{λ,t}(n) = ∏_{r <= t} ι_λ(r)^{a_r(n)}` for `n < len`.
    pub fn witness(&self, lambda: Complex64, t: u64, len: usize) -> Vec<Complex64> {
        assert!(t >= 1, "witness depth must be positive");
        self.digit_product(lambda, len, t)
    }

    /// Builds the product block by block: the entries with `a_r = a` are the entries
    /// below `q_{r-1}` scaled by `ι(r)^a`.
    fn digit_product(&self, lambda: Complex64, len: usize, t: u64) -> Vec<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut v = Vec::with_capacity(len.max(1));
        v.push(one);
        let mut z = lambda;
        let mut r = 1;
        while v.len() < len {
            let d = self.base.d(r);
            let factor = if r <= t { self.h(r, z) } else { one };
            if r <= t {
                z = cpow(factor, d);
            }
            let block = v.len();
            let mut scale = one;
            for _ in 1..d {
                if v.len() >= len {
                    break;
                }
                scale *= factor;
                for i in 0..block.min(len - v.len()) {
                    let x = v[i] * scale;
                    v.push(x);
                }
            }
            r += 1;
        }
        v.truncate(len);
        v
    }

    /// Relative residual of the factorization
    /// `ι(r) - 1 = (ι(r-k) - 1) ∏_{j=r-k+1}^{r} z_j / p_j`, `z_j = Σ_{i < d_{j-1}} ι(j-1)^i`,
    /// scaled by `max(1, |ι(r) - 1|)`.
    pub fn factorization_check(&self, lambda: Complex64, r: u64, k: u64) -> f64 {
        assert!(k >= 1 && k < r, "factorization needs 1 <= k <= r - 1");
        let iota = self.iotas(lambda, r);
        let at = |j: u64| iota[(j - 1) as usize];
        let lhs = at(r) - 1.0;
        let mut rhs = at(r - k) - 1.0;
        for j in r - k + 1..=r {
            let w = at(j - 1);
            let mut zj = Complex64::new(0.0, 0.0);
            let mut pw = Complex64::new(1.0, 0.0);
            for _ in 0..self.base.d(j - 1) {
                zj += pw;
                pw *= w;
            }
            rhs = rhs * zj / self.probs.p(j);
        }
        (lhs - rhs).norm() / lhs.norm().max(1.0)
    }
}
