use std::io::Write;
use std::path::Path;

use sam_core::julia::FiberedSystem;
use sam_core::machine::{build_matrix, column_sum_report, renorm_check};
use sam_core::presets::PRESETS;
use sam_core::spectrum::{classify_spectrum, point_spectrum, verify_eigenpairs};

use crate::config::RunConfig;
use crate::{sink, Failure, Outcome, Suite};

const STOCHASTIC_TOL: f64 = 1e-12;
const RENORM_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-9;
const MAX_DIM: u64 = 10_000;
const EIGEN_ROOTS: u64 = 4096;

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn failed(name: impl Into<String>, e: impl ToString) -> Check {
    check(name, false, e.to_string())
}

fn stochasticity(sys: &FiberedSystem) -> Vec<Check> {
    let n = sys.base.q_product(5).map_or(MAX_DIM, |q| q.min(MAX_DIM)) as usize;
    let mat = match build_matrix(n, &sys.base, &sys.probs) {
        Ok(m) => m,
        Err(e) => return vec![failed("stochasticity", e)],
    };
    let row_err = mat.max_row_sum_error();
    let col_err = column_sum_report(&mat)
        .iter()
        .filter(|c| c.complete)
        .map(|c| (c.sum - 1.0).abs())
        .fold(0.0, f64::max);
    vec![check(
        "stochasticity",
        row_err < STOCHASTIC_TOL && col_err < STOCHASTIC_TOL,
        format!("N={n} max_row_sum_error={row_err:.16e} max_complete_column_error={col_err:.16e}"),
    )]
}

fn renorm(sys: &FiberedSystem) -> Vec<Check> {
    (1..=2)
        .map(|r| {
            let name = format!("renorm.r{r}");
            let n2 = 4 * sys.base.d(r + 1) as usize;
            match renorm_check(r, n2, &sys.base, &sys.probs) {
                Ok(rep) => check(
                    name,
                    rep.passes(RENORM_TOL),
                    format!(
                        "N1={} N2={} window={} power_diff={:.16e} shift_diff={:.16e}",
                        rep.n1, rep.n2, rep.window, rep.power_diff, rep.shift_diff
                    ),
                ),
                Err(e) => failed(name, e),
            }
        })
        .collect()
}

fn eigen(sys: &FiberedSystem, depth: u64) -> Vec<Check> {
    let depth = (1..=depth)
        .take_while(|&r| sys.base.q_product(r).is_ok_and(|q| q <= EIGEN_ROOTS))
        .last()
        .unwrap_or(1);
    let spectrum = point_spectrum(sys, depth, usize::MAX);
    let n = sys
        .base
        .q_product(depth + 2)
        .map_or(MAX_DIM, |q| q.min(MAX_DIM)) as usize;
    spectrum
        .sets
        .iter()
        .map(|set| {
            let name = format!("eigen.depth{}", set.depth);
            match verify_eigenpairs(sys, set, n, EIGEN_TOL) {
                Ok(rep) => check(
                    name,
                    rep.passed(),
                    format!("N={n} roots={} max_residual={:.16e}", rep.checked, rep.max_residual),
                ),
                Err(e) => failed(name, e),
            }
        })
        .collect()
}

fn spectrum(sys: &FiberedSystem, depth: u64) -> Vec<Check> {
    match classify_spectrum(sys, depth) {
        Ok(rep) => {
            let mut text = Vec::new();
            rep.write_to(&mut text).expect("writing to a Vec cannot fail");
            let summary = String::from_utf8_lossy(&text)
                .lines()
                .filter(|l| !l.starts_with("passed="))
                .collect::<Vec<_>>()
                .join(" ");
            vec![check("spectrum", rep.passed(), summary)]
        }
        Err(e) => vec![failed("spectrum", e)],
    }
}

fn run_suite(sys: &FiberedSystem, suite: Suite, depth: u64) -> Vec<Check> {
    match suite {
        Suite::Stochasticity => stochasticity(sys),
        Suite::Renorm => renorm(sys),
        Suite::Eigen => eigen(sys, depth),
        Suite::Spectrum => spectrum(sys, depth),
        Suite::All => {
            let mut v = stochasticity(sys);
            v.extend(renorm(sys));
            v.extend(eigen(sys, depth));
            v.extend(spectrum(sys, depth));
            v
        }
    }
}

pub fn run(cfg: &RunConfig, suite: Suite, all_presets: bool, depth: u64, out: Option<&Path>) -> Outcome {
    if depth == 0 {
        return Err(Failure::Usage("verify depth must be positive".into()));
    }
    let targets: Vec<(String, FiberedSystem)> = if all_presets {
        PRESETS
            .iter()
            .map(|p| Ok((p.name.to_string(), p.system()?)))
            .collect::<Result<_, sam_core::Error>>()?
    } else {
        let label = cfg.preset.clone().unwrap_or_else(|| "custom".into());
        vec![(label, cfg.system()?)]
    };

    let mut w = sink(out)?;
    let mut failures = 0;
    let mut total = 0;
    for (label, sys) in &targets {
        writeln!(w, "[{label}] base={} probs={}", sys.base, sys.probs)?;
        for c in run_suite(sys, suite, depth) {
            total += 1;
            if !c.passed {
                failures += 1;
            }
            let status = if c.passed { "pass" } else { "FAIL" };
            writeln!(w, "{}={status} {}", c.name, c.detail)?;
        }
    }
    writeln!(w, "checks={total} failures={failures}")?;
    w.flush()?;
    if failures == 0 {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
