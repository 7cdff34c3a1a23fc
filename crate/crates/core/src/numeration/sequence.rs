//! Base sequences `d = (d_r)` and probability sequences `p = (p_r)`, indexed from `r = 1`.
//!
//! Both are closed enumerations with a textual grammar so that configurations can be
//! written on a command line and reproduced exactly:
//!
//! ```text
//! const:3            periodic:3,5        list:2,3,4;tail=4     even     fib
//! pconst:0.7         plist:0.7,1,0.5;tail=0.55                 pgeo:c=0.25,gamma=0.5
//! ```
//!
//! Any sequence may carry a trailing `;shift=k`, meaning the sequence `r ↦ x_{r+k}`.
//! Shifted sequences describe the machine seen from stage `k + 1` onwards.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const FIB_LEN: usize = 94;

/// `FIB[r]` is the Fibonacci base digit `d_r` (`d_0 = 1`, `d_1 = 2`, `d_2 = 3`, ...).
/// Entries past `u64` range are saturated.
const FIB: [u64; FIB_LEN] = {
    let mut table = [0u64; FIB_LEN];
    table[0] = 1;
    table[1] = 2;
    let mut i = 2;
    while i < FIB_LEN {
        table[i] = table[i - 1].saturating_add(table[i - 2]);
        i += 1;
    }
    table
};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseKind {
    Constant(u64),
    Periodic(Vec<u64>),
    Prefix { prefix: Vec<u64>, tail: u64 },
    /// `d_r = 2r`.
    Even,
    /// `d_1 = 2`, `d_2 = 3`, `d_r = d_{r-1} + d_{r-2}`.
    Fibonacci,
}

/// Integer base sequence with every `d_r >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BaseSeq {
    kind: BaseKind,
    shift: u64,
}

impl BaseSeq {
    pub fn new(kind: BaseKind) -> Result<Self> {
        let check = |d: u64| {
            if d < 2 {
                Err(Error::InvalidParameter(format!("base digit {d} is below 2")))
            } else {
                Ok(())
            }
        };
        match &kind {
            BaseKind::Constant(d) => check(*d)?,
            BaseKind::Periodic(ds) => {
                if ds.is_empty() {
                    return Err(Error::InvalidParameter("empty periodic base".into()));
                }
                ds.iter().try_for_each(|d| check(*d))?;
            }
            BaseKind::Prefix { prefix, tail } => {
                if prefix.is_empty() {
                    return Err(Error::InvalidParameter("empty base list".into()));
                }
                prefix.iter().try_for_each(|d| check(*d))?;
                check(*tail)?;
            }
            BaseKind::Even | BaseKind::Fibonacci => {}
        }
        Ok(BaseSeq { kind, shift: 0 })
    }

    pub fn constant(d: u64) -> Result<Self> {
        Self::new(BaseKind::Constant(d))
    }

    pub fn periodic(ds: Vec<u64>) -> Result<Self> {
        Self::new(BaseKind::Periodic(ds))
    }

    pub fn prefix(prefix: Vec<u64>, tail: u64) -> Result<Self> {
        Self::new(BaseKind::Prefix { prefix, tail })
    }

    pub fn even() -> Self {
        BaseSeq {
            kind: BaseKind::Even,
            shift: 0,
        }
    }

    pub fn fibonacci() -> Self {
        BaseSeq {
            kind: BaseKind::Fibonacci,
            shift: 0,
        }
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    /// The sequence `r ↦ d_{r+k}`.
    pub fn shifted(&self, k: u64) -> Self {
        BaseSeq {
            kind: self.kind.clone(),
            shift: self.shift + k,
        }
    }

    /// `d_r` for `r >= 1`.
    ///
    /// The Fibonacci kind saturates at `u64::MAX` beyond `r = 92`; every cumulative
    /// product overflows long before that, so only stage maps ever see the saturated value.
    pub fn d(&self, r: u64) -> u64 {
        assert!(r >= 1, "base sequence is indexed from 1");
        let i = r + self.shift;
        match &self.kind {
            BaseKind::Constant(d) => *d,
            BaseKind::Periodic(ds) => ds[((i - 1) % ds.len() as u64) as usize],
            BaseKind::Prefix { prefix, tail } => {
                prefix.get((i - 1) as usize).copied().unwrap_or(*tail)
            }
            BaseKind::Even => i.saturating_mul(2),
            BaseKind::Fibonacci => FIB.get(i as usize).copied().unwrap_or(u64::MAX),
        }
    }

    /// `q_r = d_1 ⋯ d_r`, with `q_0 = 1`.
    pub fn q_product(&self, r: u64) -> Result<u64> {
        (1..=r).try_fold(1u64, |acc, i| {
            acc.checked_mul(self.d(i))
                .ok_or(Error::Overflow("cumulative base product q_r"))
        })
    }

    /// Largest `d_r`, when the sequence is bounded.
    pub fn max_radix(&self) -> Option<u64> {
        match &self.kind {
            BaseKind::Constant(d) => Some(*d),
            BaseKind::Periodic(ds) => ds.iter().copied().max(),
            BaseKind::Prefix { prefix, tail } => {
                let skip = (self.shift as usize).min(prefix.len());
                Some(prefix[skip..].iter().copied().fold(*tail, u64::max))
            }
            BaseKind::Even | BaseKind::Fibonacci => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.max_radix().is_some()
    }
}

impl fmt::Display for BaseSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BaseKind::Constant(d) => write!(f, "const:{d}")?,
            BaseKind::Periodic(ds) => write!(f, "periodic:{}", join(ds))?,
            BaseKind::Prefix { prefix, tail } => write!(f, "list:{};tail={tail}", join(prefix))?,
            BaseKind::Even => write!(f, "even")?,
            BaseKind::Fibonacci => write!(f, "fib")?,
        }
        if self.shift > 0 {
            write!(f, ";shift={}", self.shift)?;
        }
        Ok(())
    }
}

impl FromStr for BaseSeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = Parts::split(s)?;
        let base = match parts.head {
            "const" => {
                parts.no_keys(&[])?;
                BaseSeq::constant(parts.single_arg::<u64>()?)
            }
            "periodic" => {
                parts.no_keys(&[])?;
                BaseSeq::periodic(parts.list_args::<u64>()?)
            }
            "list" => {
                parts.no_keys(&["tail"])?;
                let tail = parts.key::<u64>("tail")?.ok_or_else(|| {
                    Error::parse(s, s.len(), "`list` base requires `;tail=<d>`")
                })?;
                BaseSeq::prefix(parts.list_args::<u64>()?, tail)
            }
            "even" => {
                parts.no_args()?;
                parts.no_keys(&[])?;
                Ok(BaseSeq::even())
            }
            "fib" => {
                parts.no_args()?;
                parts.no_keys(&[])?;
                Ok(BaseSeq::fibonacci())
            }
            other => {
                return Err(Error::parse(
                    s,
                    0,
                    format!("unknown base kind `{other}` (expected const, periodic, list, even, fib)"),
                ))
            }
        }
        .map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::parse(s, parts.args_pos, msg),
            other => other,
        })?;
        Ok(base.shifted(parts.key::<u64>("shift")?.unwrap_or(0)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbKind {
    Constant(f64),
    Prefix { prefix: Vec<f64>, tail: f64 },
    /// `p_r = 1 - c·γ^r`.
    Geometric { c: f64, gamma: f64 },
}

/// Probability sequence with every `p_r ∈ (0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbSeq {
    kind: ProbKind,
    shift: u64,
}

fn check_prob(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("probability {p} outside (0, 1]")))
    }
}

impl ProbSeq {
    pub fn new(kind: ProbKind) -> Result<Self> {
        match &kind {
            ProbKind::Constant(p) => check_prob(*p)?,
            ProbKind::Prefix { prefix, tail } => {
                if prefix.is_empty() {
                    return Err(Error::InvalidParameter("empty probability list".into()));
                }
                prefix.iter().try_for_each(|p| check_prob(*p))?;
                check_prob(*tail)?;
            }
            ProbKind::Geometric { c, gamma } => {
                let ok = c.is_finite()
                    && *c >= 0.0
                    && gamma.is_finite()
                    && (0.0..1.0).contains(gamma)
                    && c * gamma < 1.0;
                if !ok {
                    return Err(Error::InvalidParameter(format!(
                        "geometric tail needs c >= 0, 0 <= gamma < 1 and c*gamma < 1 (got c={c}, gamma={gamma})"
                    )));
                }
            }
        }
        Ok(ProbSeq { kind, shift: 0 })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new(ProbKind::Constant(p))
    }

    pub fn prefix(prefix: Vec<f64>, tail: f64) -> Result<Self> {
        Self::new(ProbKind::Prefix { prefix, tail })
    }

    pub fn geometric(c: f64, gamma: f64) -> Result<Self> {
        Self::new(ProbKind::Geometric { c, gamma })
    }

    /// The deterministic machine, `p_r = 1` for all `r`.
    pub fn one() -> Self {
        ProbSeq {
            kind: ProbKind::Constant(1.0),
            shift: 0,
        }
    }

    pub fn kind(&self) -> &ProbKind {
        &self.kind
    }

    pub fn shift(&self) -> u64 {
        self.shift
    }

    pub fn shifted(&self, k: u64) -> Self {
        ProbSeq {
            kind: self.kind.clone(),
            shift: self.shift + k,
        }
    }

    /// `p_r` for `r >= 1`.
    pub fn p(&self, r: u64) -> f64 {
        assert!(r >= 1, "probability sequence is indexed from 1");
        let i = r + self.shift;
        match &self.kind {
            ProbKind::Constant(p) => *p,
            ProbKind::Prefix { prefix, tail } => {
                prefix.get((i - 1) as usize).copied().unwrap_or(*tail)
            }
            ProbKind::Geometric { c, gamma } => {
                1.0 - c * gamma.powi(i32::try_from(i).unwrap_or(i32::MAX))
            }
        }
    }

    /// `p_1 ⋯ p_t`.
    pub fn partial_product(&self, t: u64) -> f64 {
        (1..=t).map(|r| self.p(r)).product()
    }

    /// `∏_{r >= 1} p_r`, evaluated in closed form per tail kind.
    pub fn infinite_product(&self) -> f64 {
        match &self.kind {
            ProbKind::Constant(p) => {
                if *p == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ProbKind::Prefix { prefix, tail } => {
                if *tail < 1.0 {
                    0.0
                } else {
                    let skip = (self.shift as usize).min(prefix.len());
                    prefix[skip..].iter().product()
                }
            }
            ProbKind::Geometric { c, gamma } => {
                // Factors equal 1.0 in double precision once c·γ^r < 2^-54.
                let mut acc = 1.0;
                let mut term = c * gamma.powi(i32::try_from(self.shift + 1).unwrap_or(i32::MAX));
                while term > 1e-18 {
                    acc *= 1.0 - term;
                    term *= gamma;
                }
                acc
            }
        }
    }

    /// `∏_{r >= s} p_r`.
    pub fn tail_product(&self, s: u64) -> f64 {
        assert!(s >= 1);
        self.shifted(s - 1).infinite_product()
    }

    pub fn is_identically_one(&self) -> bool {
        self.infinite_product() == 1.0
    }
}

impl fmt::Display for ProbSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProbKind::Constant(p) => write!(f, "pconst:{p}")?,
            ProbKind::Prefix { prefix, tail } => {
                write!(f, "plist:{};tail={tail}", join(prefix))?
            }
            ProbKind::Geometric { c, gamma } => write!(f, "pgeo:c={c},gamma={gamma}")?,
        }
        if self.shift > 0 {
            write!(f, ";shift={}", self.shift)?;
        }
        Ok(())
    }
}

impl FromStr for ProbSeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = Parts::split(s)?;
        let probs = match parts.head {
            "pconst" => {
                parts.no_keys(&[])?;
                ProbSeq::constant(parts.single_arg::<f64>()?)
            }
            "plist" => {
                parts.no_keys(&["tail"])?;
                let tail = parts.key::<f64>("tail")?.ok_or_else(|| {
                    Error::parse(s, s.len(), "`plist` requires `;tail=<p>`")
                })?;
                ProbSeq::prefix(parts.list_args::<f64>()?, tail)
            }
            "pgeo" => {
                parts.no_keys(&[])?;
                let (c, gamma) = parts.geometric_args()?;
                ProbSeq::geometric(c, gamma)
            }
            other => {
                return Err(Error::parse(
                    s,
                    0,
                    format!("unknown probability kind `{other}` (expected pconst, plist, pgeo)"),
                ))
            }
        }
        .map_err(|e| match e {
            Error::InvalidParameter(msg) => Error::parse(s, parts.args_pos, msg),
            other => other,
        })?;
        Ok(probs.shifted(parts.key::<u64>("shift")?.unwrap_or(0)))
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A sequence string split into `head:args` and `;key=value` segments, keeping byte offsets
/// for error reporting.
struct Parts<'a> {
    input: &'a str,
    head: &'a str,
    args: Option<&'a str>,
    args_pos: usize,
    keys: Vec<(usize, &'a str, &'a str)>,
}

impl<'a> Parts<'a> {
    fn split(input: &'a str) -> Result<Self> {
        let mut segments = input.split(';');
        let first = segments.next().unwrap_or("");
        let (head, args, args_pos) = match first.split_once(':') {
            Some((h, a)) => (h, Some(a), h.len() + 1),
            None => (first, None, first.len()),
        };
        if head.is_empty() {
            return Err(Error::parse(input, 0, "missing sequence kind"));
        }
        let mut keys = Vec::new();
        let mut pos = first.len() + 1;
        for seg in segments {
            let (k, v) = seg
                .split_once('=')
                .ok_or_else(|| Error::parse(input, pos, format!("expected key=value, found `{seg}`")))?;
            keys.push((pos, k, v));
            pos += seg.len() + 1;
        }
        Ok(Parts {
            input,
            head,
            args,
            args_pos,
            keys,
        })
    }

    fn no_args(&self) -> Result<()> {
        match self.args {
            None => Ok(()),
            Some(_) => Err(Error::parse(
                self.input,
                self.args_pos,
                format!("`{}` takes no arguments", self.head),
            )),
        }
    }

    fn no_keys(&self, allowed: &[&str]) -> Result<()> {
        for (pos, k, _) in &self.keys {
            if *k != "shift" && !allowed.contains(k) {
                return Err(Error::parse(self.input, *pos, format!("unexpected key `{k}`")));
            }
        }
        Ok(())
    }

    fn key<T: FromStr>(&self, name: &str) -> Result<Option<T>> {
        match self.keys.iter().rev().find(|(_, k, _)| *k == name) {
            None => Ok(None),
            Some((pos, k, v)) => v.parse::<T>().map(Some).map_err(|_| {
                Error::parse(self.input, pos + k.len() + 1, format!("invalid value `{v}` for `{k}`"))
            }),
        }
    }

    fn require_args(&self) -> Result<&'a str> {
        self.args.filter(|a| !a.is_empty()).ok_or_else(|| {
            Error::parse(self.input, self.args_pos, format!("`{}` requires arguments", self.head))
        })
    }

    fn list_args<T: FromStr>(&self) -> Result<Vec<T>> {
        let args = self.require_args()?;
        let mut pos = self.args_pos;
        let mut out = Vec::new();
        for item in args.split(',') {
            out.push(item.trim().parse::<T>().map_err(|_| {
                Error::parse(self.input, pos, format!("invalid number `{item}`"))
            })?);
            pos += item.len() + 1;
        }
        Ok(out)
    }

    fn single_arg<T: FromStr>(&self) -> Result<T> {
        let mut items = self.list_args::<T>()?;
        if items.len() != 1 {
            return Err(Error::parse(
                self.input,
                self.args_pos,
                format!("`{}` takes exactly one value", self.head),
            ));
        }
        Ok(items.remove(0))
    }

    fn geometric_args(&self) -> Result<(f64, f64)> {
        let args = self.require_args()?;
        let mut c = None;
        let mut gamma = None;
        let mut pos = self.args_pos;
        for item in args.split(',') {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::parse(self.input, pos, format!("expected c=<x> or gamma=<x>, found `{item}`"))
            })?;
            let value = v.parse::<f64>().map_err(|_| {
                Error::parse(self.input, pos + k.len() + 1, format!("invalid number `{v}`"))
            })?;
            match k {
                "c" => c = Some(value),
                "gamma" => gamma = Some(value),
                _ => return Err(Error::parse(self.input, pos, format!("unexpected key `{k}`"))),
            }
            pos += item.len() + 1;
        }
        match (c, gamma) {
            (Some(c), Some(g)) => Ok((c, g)),
            _ => Err(Error::parse(self.input, self.args_pos, "pgeo requires both c= and gamma=")),
        }
    }
}
