//! Point spectrum of the transition operator and its relation to the filled Julia set.
//!
//! The eigenvalues are exactly the points with `f̃_r(λ) = 1` for some `r`. The whole
//! spectrum is `E` when `∏ p_r = 0` and `∂E` otherwise.

mod roots;
mod transient;

pub use roots::{
    compose_with_derivative, dedup, point_spectrum, preimage_stage, pull_back, refine_root, PointSpectrum,
    RootSet, DEDUP_TOL, DEFAULT_CAP,
};
pub use transient::{
    stable_probe_depth, transient_limit_check, LimitSample, TransientReport, BOUNDARY_SLACK, DEFAULT_PROBE_DEPTH,
    INTERIOR_MARGIN, INTERIOR_THRESHOLD,
};

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::julia::{boundary_pixels, render, FiberedSystem, MembershipGrid, Window};
use crate::machine::{build_matrix, classify_chain, eigen_residual, ChainClass};

#[derive(Clone, Debug, PartialEq)]
pub struct EigenReport {
    pub dim: usize,
    pub checked: usize,
    pub max_residual: f64,
    pub worst: Option<Complex64>,
    pub tol: f64,
}

impl EigenReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tol
    }
}

/// `‖(S - λI) v_λ‖_∞` over the unclipped rows of the `n`-truncation, for every root.
pub fn verify_eigenpairs(sys: &FiberedSystem, roots: &RootSet, n: usize, tol: f64) -> Result<EigenReport> {
    verify_values(sys, &roots.roots, n, tol)
}

pub fn verify_values(sys: &FiberedSystem, lambdas: &[Complex64], n: usize, tol: f64) -> Result<EigenReport> {
    let mat = build_matrix(n, &sys.base, &sys.probs)?;
    let residuals = lambdas
        .par_iter()
        .map(|&l| eigen_residual(&mat, l, &sys.eigvec(l, n)).map(|r| (r, l)))
        .collect::<Result<Vec<_>>>()?;
    let worst = residuals
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0));
    Ok(EigenReport {
        dim: n,
        checked: lambdas.len(),
        max_residual: worst.map_or(0.0, |w| w.0),
        worst: worst.map(|w| w.1),
        tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryDensity {
    /// Largest distance from a boundary pixel center to the nearest root.
    pub sup_min_dist: f64,
    /// Fraction of roots within two pixel diagonals of a boundary pixel center.
    pub coverage_fraction: f64,
    pub boundary_count: usize,
    pub root_count: usize,
}

/// Uniform bucket grid over a point set for nearest-neighbor queries.
struct Buckets {
    origin: Complex64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<Complex64>>,
}

impl Buckets {
    fn new(points: &[Complex64], cell: f64) -> Self {
        let (mut lo, mut hi) = (points[0], points[0]);
        for z in points {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let nx = ((hi.re - lo.re) / cell) as usize + 1;
        let ny = ((hi.im - lo.im) / cell) as usize + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        let mut b = Buckets {
            origin: lo,
            cell,
            nx,
            ny,
            cells: Vec::new(),
        };
        for &z in points {
            let (i, j) = b.index(z);
            cells[j * nx + i].push(z);
        }
        b.cells = cells;
        b
    }

    fn index(&self, z: Complex64) -> (usize, usize) {
        let i = ((z.re - self.origin.re) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64);
        let j = ((z.im - self.origin.im) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }

    /// Distance from `z` to the nearest stored point.
    fn nearest(&self, z: Complex64) -> f64 {
        let (ci, cj) = self.index(z);
        let mut best = f64::INFINITY;
        let max_ring = self.nx.max(self.ny);
        for ring in 0..=max_ring {
            let lo_i = ci.saturating_sub(ring);
            let hi_i = (ci + ring).min(self.nx - 1);
            let lo_j = cj.saturating_sub(ring);
            let hi_j = (cj + ring).min(self.ny - 1);
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    let on_ring = i == lo_i || i == hi_i || j == lo_j || j == hi_j;
                    if !on_ring {
                        continue;
                    }
                    for p in &self.cells[j * self.nx + i] {
                        best = best.min((p - z).norm());
                    }
                }
            }
            // Everything outside the searched block lies farther than this.
            let gap = [
                z.re - (self.origin.re + lo_i as f64 * self.cell),
                self.origin.re + (hi_i + 1) as f64 * self.cell - z.re,
                z.im - (self.origin.im + lo_j as f64 * self.cell),
                self.origin.im + (hi_j + 1) as f64 * self.cell - z.im,
            ];
            let covered_all = lo_i == 0 && lo_j == 0 && hi_i == self.nx - 1 && hi_j == self.ny - 1;
            let clearance = gap
                .iter()
                .zip([lo_i == 0, hi_i == self.nx - 1, lo_j == 0, hi_j == self.ny - 1])
                .filter(|(_, at_edge)| !at_edge)
                .map(|(g, _)| *g)
                .fold(f64::INFINITY, f64::min);
            if covered_all || best <= clearance {
                break;
            }
        }
        best
    }
}

pub fn boundary_density(grid: &MembershipGrid, roots: &[RootSet]) -> Result<BoundaryDensity> {
    let boundary = boundary_pixels(grid);
    if boundary.is_empty() {
        return Err(Error::EmptyBoundary);
    }
    let pts: Vec<Complex64> = roots.iter().flat_map(|s| s.roots.iter().copied()).collect();
    if pts.is_empty() {
        return Err(Error::InvalidParameter("no roots supplied".into()));
    }
    let diag = grid.pixel_diagonal();

    let buckets = Buckets::new(&pts, 4.0 * diag);
    let sup_min_dist = boundary
        .par_iter()
        .map(|&(x, y)| buckets.nearest(grid.center(x, y)))
        .reduce(|| 0.0, f64::max);

    let centers: Vec<Complex64> = boundary.iter().map(|&(x, y)| grid.center(x, y)).collect();
    let boundary_buckets = Buckets::new(&centers, 4.0 * diag);
    let covered = pts
        .par_iter()
        .filter(|&&z| boundary_buckets.nearest(z) <= 2.0 * diag)
        .count();

    Ok(BoundaryDensity {
        sup_min_dist,
        coverage_fraction: covered as f64 / pts.len() as f64,
        boundary_count: boundary.len(),
        root_count: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `∏ p_r = 0`.
    Recurrent,
    /// `∏ p_r > 0`.
    Transient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimedSpectrum {
    FilledJuliaSet,
    BoundaryOfFilledJuliaSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evidence {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub regime: Regime,
    pub claimed: ClaimedSpectrum,
    pub evidence: Vec<Evidence>,
}

impl SpectrumReport {
    pub fn passed(&self) -> bool {
        self.evidence.iter().all(|e| e.passed)
    }

    /// `key=value` lines.
    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        let regime = match self.regime {
            Regime::Recurrent => "recurrent",
            Regime::Transient => "transient",
        };
        let claimed = match self.claimed {
            ClaimedSpectrum::FilledJuliaSet => "E",
            ClaimedSpectrum::BoundaryOfFilledJuliaSet => "boundary_of_E",
        };
        writeln!(out, "regime={regime}")?;
        writeln!(out, "claimed_spectrum={claimed}")?;
        for e in &self.evidence {
            writeln!(out, "{}.passed={}", e.name, e.passed)?;
            writeln!(out, "{}.detail={}", e.name, e.detail)?;
        }
        writeln!(out, "passed={}", self.passed())
    }
}

/// Window around the disk `|λ - (1 - p_1)| <= p_1`, which contains `E`.
pub fn default_window(sys: &FiberedSystem) -> Window {
    let p1 = sys.probs.p(1);
    let c = 1.0 - p1;
    let h = p1 * 1.05;
    Window::new(c - h, c + h, -h, h).expect("p_1 > 0 gives a proper window")
}

/// Side of the grid rendered by [`classify_spectrum`].
pub const CLASSIFY_RESOLUTION: usize = 1024;

/// Regime, claimed spectrum and supporting numerical checks at the given depth.
pub fn classify_spectrum(sys: &FiberedSystem, depth: u64) -> Result<SpectrumReport> {
    assert!(depth >= 1, "classification depth must be positive");
    let (regime, claimed) = match classify_chain(&sys.probs, depth) {
        ChainClass::NullRecurrentLike => (Regime::Recurrent, ClaimedSpectrum::FilledJuliaSet),
        ChainClass::TransientLike => (Regime::Transient, ClaimedSpectrum::BoundaryOfFilledJuliaSet),
    };
    let mut evidence = Vec::new();

    let spectrum = point_spectrum(sys, depth, 20_000);
    let deepest = spectrum.deepest().expect("depth-1 roots always fit");
    let n = sys.base.q_product(deepest.depth + 2).map_or(4096, |q| q.min(4096) as usize).max(2);
    let eig = verify_eigenpairs(sys, deepest, n, 1e-9)?;
    evidence.push(Evidence {
        name: "eigenpairs",
        passed: eig.passed(),
        detail: format!(
            "depth={} roots={} N={} max_residual={:.16e}",
            deepest.depth, eig.checked, n, eig.max_residual
        ),
    });

    let grid = render(sys, default_window(sys), CLASSIFY_RESOLUTION, CLASSIFY_RESOLUTION, crate::julia::DEFAULT_DEPTH)?;
    match boundary_density(&grid, &spectrum.sets) {
        Ok(bd) => evidence.push(Evidence {
            name: "boundary_density",
            passed: bd.coverage_fraction == 1.0,
            detail: format!(
                "coverage_fraction={:.16e} sup_min_dist={:.16e} boundary_pixels={} roots={}",
                bd.coverage_fraction, bd.sup_min_dist, bd.boundary_count, bd.root_count
            ),
        }),
        Err(e) => evidence.push(Evidence {
            name: "boundary_density",
            passed: false,
            detail: e.to_string(),
        }),
    }

    if regime == Regime::Transient {
        let probe = stable_probe_depth(sys, DEFAULT_PROBE_DEPTH);
        let t = transient_limit_check(sys, &grid, 64, probe)?;
        let (lo, hi) = t.boundary_range();
        evidence.push(Evidence {
            name: "transient_limits",
            passed: t.passed(),
            detail: format!(
                "probe_depth={} boundary_min={lo:.16e} boundary_max={hi:.16e} lower_bound={:.16e} interior_samples={} interior_max={:.16e}",
                t.probe_depth,
                t.lower_bound,
                t.interior.len(),
                t.interior_max()
            ),
        });
    }

    Ok(SpectrumReport {
        regime,
        claimed,
        evidence,
    })
}

/// CSV `depth,re,im`, with a comment line when the enumeration stopped early.
pub fn write_roots_csv<W: Write>(spectrum: &PointSpectrum, mut out: W) -> io::Result<()> {
    if spectrum.partial {
        writeln!(
            out,
            "# partial: stopped at depth {} of {} (root cap)",
            spectrum.sets.len(),
            spectrum.requested_depth
        )?;
    }
    writeln!(out, "depth,re,im")?;
    for set in &spectrum.sets {
        for z in &set.roots {
            writeln!(out, "{},{:.16e},{:.16e}", set.depth, z.re, z.im)?;
        }
    }
    Ok(())
}
