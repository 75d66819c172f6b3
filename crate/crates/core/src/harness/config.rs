//! Experiment configuration and the flat `key = value` config format.
//!
//! Blank lines and lines starting with `#` are ignored. Recognized keys:
//!
//! | key | values | default |
//! |-----|--------|---------|
//! | `dataset` | `synthetic` or a dataset file path | `synthetic` |
//! | `n`, `d` | synthetic sample count and dimension | `10000`, `20` |
//! | `data_seed` | seed for synthetic generation | value of `seed` |
//! | `family` | `ridge`, `logistic`, `hinge_sq` | `logistic` (or the file header) |
//! | `lh` | regularization strength `L_h > 0` | `1` |
//! | `batch_size` | `B >= 1` | `1` |
//! | `sampling` | `uniform`, `proportional` | `uniform` |
//! | `step_rule` | `eta_bar`, `eta_tilde`, `gd_gamma`, `fixed:<v>` | `eta_bar` |
//! | `iterations` | `K >= 4` | `10000` |
//! | `repetitions` | `>= 1` | `100` |
//! | `seed` | base seed for repetition streams | `0` |
//! | `x1` | `zero`, `constant:<c>` or a bare number | `constant:10` |
//! | `ref_tol`, `ref_max_iters` | reference solve controls | `1e-12`, `10000000` |
//! | `out` | output directory | none |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{SyntheticSpec, DEFAULT_REFERENCE_MAX_ITERS, DEFAULT_REFERENCE_TOLERANCE};
use crate::error::{Error, Result};
use crate::problem::Family;

pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_D: usize = 20;
pub const DEFAULT_REPETITIONS: usize = 100;
pub const DEFAULT_ITERATIONS: usize = 10_000;
pub const DEFAULT_X1: f64 = 10.0;
/// Shortest trace for which the last-20% window is defined.
pub const MIN_ITERATIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic { n: usize, d: usize, seed: Option<u64> },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingChoice {
    Uniform,
    ProportionalToL,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    EtaBar,
    EtaTilde,
    GdGamma,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialPoint {
    Constant(f64),
    Zero,
}

impl InitialPoint {
    pub fn materialize(self, d: usize) -> Vec<f64> {
        match self {
            InitialPoint::Constant(c) => vec![c; d],
            InitialPoint::Zero => vec![0.0; d],
        }
    }
}

impl fmt::Display for SamplingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplingChoice::Uniform => "uniform",
            SamplingChoice::ProportionalToL => "proportional",
        })
    }
}

impl FromStr for SamplingChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" => Ok(SamplingChoice::Uniform),
            "proportional" | "proportional_to_l" => Ok(SamplingChoice::ProportionalToL),
            other => Err(Error::Config(format!(
                "unknown sampling `{other}` (expected uniform or proportional)"
            ))),
        }
    }
}

impl fmt::Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::EtaBar => f.write_str("eta_bar"),
            StepRule::EtaTilde => f.write_str("eta_tilde"),
            StepRule::GdGamma => f.write_str("gd_gamma"),
            StepRule::Fixed(v) => write!(f, "fixed:{v:e}"),
        }
    }
}

impl FromStr for StepRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "eta_bar" => return Ok(StepRule::EtaBar),
            "eta_tilde" => return Ok(StepRule::EtaTilde),
            "gd_gamma" | "gd" => return Ok(StepRule::GdGamma),
            _ => {}
        }
        let value = s
            .strip_prefix("fixed:")
            .or_else(|| s.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown step_rule `{s}` (expected eta_bar, eta_tilde, gd_gamma or fixed:<v>)"
                ))
            })?;
        let v = parse_f64("step_rule", value)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!("fixed step must be positive, got {v}")));
        }
        Ok(StepRule::Fixed(v))
    }
}

impl fmt::Display for InitialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialPoint::Constant(c) => write!(f, "constant:{c:e}"),
            InitialPoint::Zero => f.write_str("zero"),
        }
    }
}

impl FromStr for InitialPoint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "zero" {
            return Ok(InitialPoint::Zero);
        }
        let value = s
            .strip_prefix("constant:")
            .or_else(|| s.strip_prefix("constant(").and_then(|r| r.strip_suffix(')')))
            .unwrap_or(&s);
        let c = parse_f64("x1", value)?;
        if !c.is_finite() {
            return Err(Error::Config(format!("x1 must be finite, got {c}")));
        }
        Ok(InitialPoint::Constant(c))
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    let v = v.trim();
    if let Ok(n) = v.parse::<usize>() {
        return Ok(n);
    }
    // Accept integral scientific notation such as `5e4`.
    match v.parse::<f64>() {
        Ok(f) if f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f <= 1e15 => Ok(f as usize),
        _ => Err(Error::Config(format!("`{key}`: `{v}` is not a non-negative integer"))),
    }
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not an unsigned 64-bit integer")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// `None` means: the file header for file datasets, logistic otherwise.
    pub family: Option<Family>,
    pub reg_strength: f64,
    pub batch_size: usize,
    pub sampling: SamplingChoice,
    pub step_rule: StepRule,
    pub iterations: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub x1: InitialPoint,
    pub reference_tolerance: f64,
    pub reference_max_iters: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic {
                n: DEFAULT_N,
                d: DEFAULT_D,
                seed: None,
            },
            family: None,
            reg_strength: 1.0,
            batch_size: 1,
            sampling: SamplingChoice::Uniform,
            step_rule: StepRule::EtaBar,
            iterations: DEFAULT_ITERATIONS,
            repetitions: DEFAULT_REPETITIONS,
            base_seed: 0,
            x1: InitialPoint::Constant(DEFAULT_X1),
            reference_tolerance: DEFAULT_REFERENCE_TOLERANCE,
            reference_max_iters: DEFAULT_REFERENCE_MAX_ITERS,
            output_dir: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "dataset",
    "n",
    "d",
    "data_seed",
    "family",
    "lh",
    "batch_size",
    "sampling",
    "step_rule",
    "iterations",
    "repetitions",
    "seed",
    "x1",
    "ref_tol",
    "ref_max_iters",
    "out",
];

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "dataset" => {
                self.dataset = if value.eq_ignore_ascii_case("synthetic") {
                    match &self.dataset {
                        DatasetSource::Synthetic { .. } => self.dataset.clone(),
                        DatasetSource::File(_) => DatasetSource::Synthetic {
                            n: DEFAULT_N,
                            d: DEFAULT_D,
                            seed: None,
                        },
                    }
                } else {
                    DatasetSource::File(PathBuf::from(value))
                }
            }
            "n" | "d" | "data_seed" => {
                let DatasetSource::Synthetic { n, d, seed } = &mut self.dataset else {
                    return Err(Error::Config(format!(
                        "`{key}` only applies to synthetic datasets"
                    )));
                };
                match key {
                    "n" => *n = parse_usize(key, value)?,
                    "d" => *d = parse_usize(key, value)?,
                    _ => *seed = Some(parse_u64(key, value)?),
                }
            }
            "family" => self.family = Some(value.parse()?),
            "lh" | "reg_strength" => self.reg_strength = parse_f64(key, value)?,
            "batch_size" | "b" => self.batch_size = parse_usize(key, value)?,
            "sampling" => self.sampling = value.parse()?,
            "step_rule" => self.step_rule = value.parse()?,
            "iterations" | "k" => self.iterations = parse_usize(key, value)?,
            "repetitions" => self.repetitions = parse_usize(key, value)?,
            "seed" => self.base_seed = parse_u64(key, value)?,
            "x1" => self.x1 = value.parse()?,
            "ref_tol" => self.reference_tolerance = parse_f64(key, value)?,
            "ref_max_iters" => self.reference_max_iters = parse_usize(key, value)?,
            "out" => self.output_dir = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}` (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, pairs: &[S]) -> Result<()> {
        for p in pairs {
            let p = p.as_ref();
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{p}` is not key=value")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. A key may appear only once.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.merge_str(text)?;
        Ok(cfg)
    }

    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim().to_string();
            if seen.contains(&k) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            self.set(&k, v)
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_config(e))))?;
            seen.push(k);
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if let DatasetSource::Synthetic { n, d, .. } = self.dataset {
            if n == 0 || d == 0 {
                return bad(format!("synthetic dataset needs n, d >= 1 (got n={n}, d={d})"));
            }
        }
        if !(self.reg_strength.is_finite() && self.reg_strength > 0.0) {
            return bad(format!("lh must be positive, got {}", self.reg_strength));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.iterations < MIN_ITERATIONS {
            return bad(format!(
                "iterations must be at least {MIN_ITERATIONS}, got {}",
                self.iterations
            ));
        }
        if self.step_rule == StepRule::EtaTilde
            && (self.batch_size != 1 || self.sampling != SamplingChoice::Uniform)
        {
            return bad("step_rule=eta_tilde requires batch_size=1 and uniform sampling".into());
        }
        if !(self.reference_tolerance.is_finite() && self.reference_tolerance > 0.0) {
            return bad(format!("ref_tol must be positive, got {}", self.reference_tolerance));
        }
        if self.reference_max_iters == 0 {
            return bad("ref_max_iters must be at least 1".into());
        }
        Ok(())
    }

    /// The synthetic spec this config describes, if any.
    pub fn synthetic_spec(&self) -> Option<SyntheticSpec> {
        match self.dataset {
            DatasetSource::Synthetic { n, d, seed } => Some(SyntheticSpec {
                n,
                d,
                seed: seed.unwrap_or(self.base_seed),
                family: self.family.unwrap_or(Family::Logistic),
            }),
            DatasetSource::File(_) => None,
        }
    }

    /// Renders the config in the format accepted by [`ExperimentConfig::parse_str`].
    pub fn to_config_string(&self) -> String {
        let mut lines = Vec::new();
        match &self.dataset {
            DatasetSource::Synthetic { n, d, seed } => {
                lines.push("dataset = synthetic".to_string());
                lines.push(format!("n = {n}"));
                lines.push(format!("d = {d}"));
                if let Some(s) = seed {
                    lines.push(format!("data_seed = {s}"));
                }
            }
            DatasetSource::File(p) => lines.push(format!("dataset = {}", p.display())),
        }
        if let Some(f) = self.family {
            lines.push(format!("family = {f}"));
        }
        lines.push(format!("lh = {:e}", self.reg_strength));
        lines.push(format!("batch_size = {}", self.batch_size));
        lines.push(format!("sampling = {}", self.sampling));
        lines.push(format!("step_rule = {}", self.step_rule));
        lines.push(format!("iterations = {}", self.iterations));
        lines.push(format!("repetitions = {}", self.repetitions));
        lines.push(format!("seed = {}", self.base_seed));
        lines.push(format!("x1 = {}", self.x1));
        lines.push(format!("ref_tol = {:e}", self.reference_tolerance));
        lines.push(format!("ref_max_iters = {}", self.reference_max_iters));
        if let Some(o) = &self.output_dir {
            lines.push(format!("out = {}", o.display()));
        }
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

fn strip_config(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}
