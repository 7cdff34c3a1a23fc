//! `sam`: digit expansions, transition matrices, Julia set renders, eigenvalue
//! enumeration, consistency checks and trajectories for the stochastic adding machine.

mod config;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sam_core::julia::{render, write_metadata, write_pbm, write_pgm, Window, DEFAULT_DEPTH};
use sam_core::machine::{build_matrix, column_sum_report, simulate, write_coordinate, write_trajectory_csv};
use sam_core::numeration::{counter, successor, to_digits};
use sam_core::presets;
use sam_core::spectrum::{point_spectrum, write_roots_csv, DEFAULT_CAP};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "sam", version, about = "Stochastic adding machine toolkit")]
struct Cli {
    /// Base sequence, e.g. `const:3`, `periodic:3,5`, `list:2,3,4;tail=4`, `even`, `fib`.
    #[arg(long, global = true)]
    base: Option<String>,
    /// Probability sequence, e.g. `pconst:0.7`, `plist:0.7,1;tail=0.55`, `pgeo:c=0.25,gamma=0.5`.
    #[arg(long, global = true)]
    probs: Option<String>,
    /// Named configuration (`fig3a` … `fig10c`); explicit `--base`/`--probs` override it.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// `key=value` file providing `base`, `probs`, `seed` and `threads`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path. Defaults to stdout where a single file is produced.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Digit expansion, counter and successor of `n`.
    Digits { n: u64 },
    /// Upper-left `n × n` block of the transition matrix in coordinate format.
    Matrix { n: usize },
    /// Membership grid of the filled Julia set as PGM, PBM and metadata.
    Render {
        /// `re_min,re_max,im_min,im_max`.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        /// `W` or `WxH`.
        #[arg(long, default_value = "512")]
        resolution: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u64,
    },
    /// Eigenvalues `f̃_r(λ) = 1` for `r = 1..=depth` as CSV.
    Roots {
        #[arg(long, default_value_t = 8)]
        depth: u64,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Runs a check suite and exits with status 1 if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Run on every preset instead of a single configuration.
        #[arg(long)]
        all_presets: bool,
        #[arg(long, default_value_t = 6)]
        depth: u64,
    },
    /// Markov trajectory as CSV `step,state`.
    Simulate {
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        steps: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Suite {
    Stochasticity,
    Renorm,
    Eigen,
    Spectrum,
    All,
}

#[derive(Debug)]
pub(crate) enum Failure {
    Usage(String),
    Runtime(String),
    Check,
}

impl From<sam_core::Error> for Failure {
    fn from(e: sam_core::Error) -> Self {
        use sam_core::Error as E;
        match e {
            E::Parse { .. } | E::InvalidParameter(_) | E::DegenerateWindow(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

pub(crate) type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = RunConfig::resolve(
        cli.config.as_deref(),
        cli.preset.as_deref(),
        cli.base.as_deref(),
        cli.probs.as_deref(),
        cli.seed,
        cli.threads,
    )?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Digits { n } => cmd_digits(&cfg, n, out),
        Command::Matrix { n } => cmd_matrix(&cfg, n, out),
        Command::Render {
            window,
            resolution,
            depth,
        } => cmd_render(&cfg, window.as_deref(), &resolution, depth, out),
        Command::Roots { depth, cap } => cmd_roots(&cfg, depth, cap, out),
        Command::Verify {
            suite,
            all_presets,
            depth,
        } => verify::run(&cfg, suite, all_presets, depth, out),
        Command::Simulate { start, steps } => cmd_simulate(&cfg, start, steps, out),
    }
}

/// The file at `path`, or stdout.
pub(crate) fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_digits(cfg: &RunConfig, n: u64, out: Option<&Path>) -> Outcome {
    let base = cfg.base()?;
    let dv = to_digits(n, &base);
    let next = successor(&dv)
        .value()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut w = sink(out)?;
    writeln!(w, "digits={} counter={} succ={}", join(dv.digits()), counter(&dv), next)?;
    w.flush()?;
    Ok(())
}

fn cmd_matrix(cfg: &RunConfig, n: usize, out: Option<&Path>) -> Outcome {
    let (base, probs) = (cfg.base()?, cfg.probs()?);
    let mat = build_matrix(n, &base, &probs)?;
    let mut w = sink(out)?;
    write_coordinate(&mat, &mut w)?;
    w.flush()?;

    let row_err = mat.max_row_sum_error();
    let cols = column_sum_report(&mat);
    let complete: Vec<_> = cols.iter().filter(|c| c.complete).collect();
    let col_err = complete.iter().map(|c| (c.sum - 1.0).abs()).fold(0.0, f64::max);
    let ok = row_err < 1e-12 && col_err < 1e-12;
    // The matrix may be on stdout, so the report goes to stderr.
    let mut r = io::stderr().lock();
    writeln!(r, "dim={}", mat.dim())?;
    writeln!(r, "nnz={}", mat.nnz())?;
    writeln!(r, "clipped_rows={}", mat.clipped_rows().len())?;
    writeln!(r, "max_row_sum_error={row_err:.16e}")?;
    writeln!(r, "complete_columns={}", complete.len())?;
    writeln!(r, "max_complete_column_error={col_err:.16e}")?;
    writeln!(r, "column0_sum={:.16e}", cols[0].sum)?;
    writeln!(r, "stochastic={ok}")?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn parse_window(s: &str) -> Result<Window, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Failure::Usage(format!("window `{s}` is not re_min,re_max,im_min,im_max"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let v = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    Ok(Window::new(v[0], v[1], v[2], v[3])?)
}

fn parse_resolution(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("resolution `{s}` is not W or WxH"));
    let (w, h) = match s.split_once(['x', 'X']) {
        Some((w, h)) => (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?),
        None => {
            let w = s.parse().map_err(|_| bad())?;
            (w, w)
        }
    };
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn cmd_render(cfg: &RunConfig, window: Option<&str>, resolution: &str, depth: u64, out: Option<&Path>) -> Outcome {
    let sys = cfg.system()?;
    let window = match window {
        Some(s) => parse_window(s)?,
        None => presets::default_window(),
    };
    let (width, height) = parse_resolution(resolution)?;
    let stem = out.ok_or_else(|| Failure::Usage("render needs --out".into()))?;
    let grid = render(&sys, window, width, height, depth)?;

    let with_ext = |ext: &str| stem.with_extension(ext);
    let mut w = BufWriter::new(File::create(with_ext("pgm"))?);
    write_pgm(&grid, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(with_ext("pbm"))?);
    write_pbm(&grid, &mut w)?;
    w.flush()?;
    let mut extra = vec![("threads", rayon::current_num_threads().to_string())];
    if let Some(name) = &cfg.preset {
        extra.push(("preset", name.clone()));
    }
    let mut w = BufWriter::new(File::create(with_ext("meta"))?);
    write_metadata(&grid, &sys, &extra, &mut w)?;
    w.flush()?;
    println!("bounded_pixels={} of {}", grid.bounded_count(), width * height);
    Ok(())
}

fn cmd_roots(cfg: &RunConfig, depth: u64, cap: usize, out: Option<&Path>) -> Outcome {
    if depth == 0 {
        return Err(Failure::Usage("root depth must be positive".into()));
    }
    let sys = cfg.system()?;
    let spectrum = point_spectrum(&sys, depth, cap);
    let mut w = sink(out)?;
    write_roots_csv(&spectrum, &mut w)?;
    w.flush()?;
    if spectrum.partial {
        eprintln!(
            "warning: root cap {cap} reached, stopped at depth {} of {depth}",
            spectrum.sets.len()
        );
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, start: u64, steps: u64, out: Option<&Path>) -> Outcome {
    let (base, probs) = (cfg.base()?, cfg.probs()?);
    let traj = simulate(&base, &probs, start, steps, cfg.seed);
    let mut w = sink(out)?;
    write_trajectory_csv(&traj, &mut w)?;
    w.flush()?;
    Ok(())
}
