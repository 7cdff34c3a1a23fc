use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use sam_core::julia::FiberedSystem;
use sam_core::numeration::{BaseSeq, ProbSeq};
use sam_core::presets;

use crate::Failure;

/// Configuration shared by every subcommand. Precedence: flags, then preset, then config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct RunConfig {
    pub base: Option<BaseSeq>,
    pub probs: Option<ProbSeq>,
    pub preset: Option<String>,
    pub seed: u64,
    pub threads: Option<usize>,
}

fn usage<E: fmt::Display>(key: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Usage(format!("{key}: {e}"))
}

impl RunConfig {
    pub fn resolve(
        file: Option<&Path>,
        preset: Option<&str>,
        base: Option<&str>,
        probs: Option<&str>,
        seed: Option<u64>,
        threads: Option<usize>,
    ) -> Result<Self, Failure> {
        let mut cfg = match file {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                text.parse()?
            }
            None => RunConfig::default(),
        };
        if let Some(name) = preset {
            let p = presets::find(name).ok_or_else(|| Failure::Usage(format!("unknown preset `{name}`")))?;
            cfg.base = Some(p.base.parse()?);
            cfg.probs = Some(p.probs.parse()?);
            cfg.preset = Some(name.to_string());
        }
        if let Some(b) = base {
            cfg.base = Some(b.parse()?);
        }
        if let Some(p) = probs {
            cfg.probs = Some(p.parse()?);
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if threads.is_some() {
            cfg.threads = threads;
        }
        if cfg.threads == Some(0) {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn base(&self) -> Result<BaseSeq, Failure> {
        self.base
            .clone()
            .ok_or_else(|| Failure::Usage("missing --base (or --preset)".into()))
    }

    pub fn probs(&self) -> Result<ProbSeq, Failure> {
        self.probs
            .clone()
            .ok_or_else(|| Failure::Usage("missing --probs (or --preset)".into()))
    }

    pub fn system(&self) -> Result<FiberedSystem, Failure> {
        Ok(FiberedSystem::new(self.base()?, self.probs()?))
    }
}

impl FromStr for RunConfig {
    type Err = Failure;

    /// `key=value` lines; blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self, Failure> {
        let mut cfg = RunConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("line {}: expected key=value", i + 1)))?;
            let value = value.trim();
            match key.trim() {
                "base" => cfg.base = Some(value.parse()?),
                "probs" => cfg.probs = Some(value.parse()?),
                "preset" => {
                    let p = presets::find(value)
                        .ok_or_else(|| Failure::Usage(format!("unknown preset `{value}`")))?;
                    cfg.base = Some(p.base.parse()?);
                    cfg.probs = Some(p.probs.parse()?);
                    cfg.preset = Some(value.to_string());
                }
                "seed" => cfg.seed = value.parse().map_err(usage("seed"))?,
                "threads" => cfg.threads = Some(value.parse().map_err(usage("threads"))?),
                other => return Err(Failure::Usage(format!("line {}: unknown key `{other}`", i + 1))),
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = &self.base {
            writeln!(f, "base={b}")?;
        }
        if let Some(p) = &self.probs {
            writeln!(f, "probs={p}")?;
        }
        writeln!(f, "seed={}", self.seed)?;
        if let Some(t) = self.threads {
            writeln!(f, "threads={t}")?;
        }
        Ok(())
    }
}
