//! Synthetic datasets, the plain-text dataset format, and reference solutions.
//!
//! Dataset files start with a header line `n d family` followed by one line
//! per sample: the label, then the `d` feature values, separated by single
//! spaces and written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::optimizer::gd_until;
use crate::problem::{Dataset, Family, ProblemSpec};
use crate::sampling::RngStream;
use crate::theory::gd_step;

/// Stream id for feature draws. Kept far from the small ids used by run
/// repetitions so a dataset seed can double as an experiment seed.
pub const FEATURE_STREAM: u64 = 1 << 63;
/// Stream id for label draws.
pub const LABEL_STREAM: u64 = (1 << 63) + 1;

pub const DEFAULT_REFERENCE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_REFERENCE_MAX_ITERS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub family: Family,
}

struct NormalSource {
    rng: RngStream,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(rng: RngStream) -> Self {
        NormalSource { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.rng.next_normal_pair();
        self.spare = Some(b);
        a
    }
}

/// Standard-normal features in row-major order from stream
/// `(seed, FEATURE_STREAM)`, Box-Muller pairs consumed in order. Labels come
/// from `(seed, LABEL_STREAM)`: `+1` when a uniform draw is below 0.5 and `-1`
/// otherwise for the classification families, standard normal for ridge.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::InvalidInput(format!(
            "synthetic data needs n, d >= 1 (got n={}, d={})",
            spec.n, spec.d
        )));
    }
    let mut normals = NormalSource::new(RngStream::new(spec.seed, FEATURE_STREAM));
    let features: Vec<f64> = (0..spec.n * spec.d).map(|_| normals.next()).collect();

    let mut label_rng = RngStream::new(spec.seed, LABEL_STREAM);
    let labels: Vec<f64> = if spec.family.is_classification() {
        (0..spec.n)
            .map(|_| if label_rng.next_f64() < 0.5 { 1.0 } else { -1.0 })
            .collect()
    } else {
        let mut src = NormalSource::new(label_rng);
        (0..spec.n).map(|_| src.next()).collect()
    };
    Dataset::from_flat(spec.n, spec.d, features, labels)
}

fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn dataset_to_string(ds: &Dataset, family: Family) -> String {
    let mut out = String::with_capacity(ds.n() * (ds.dim() + 1) * 24 + 32);
    let _ = writeln!(out, "{} {} {}", ds.n(), ds.dim(), family);
    for (row, &b) in ds.rows().zip(ds.labels()) {
        out.push_str(&fmt_full(b));
        for &v in row {
            out.push(' ');
            out.push_str(&fmt_full(v));
        }
        out.push('\n');
    }
    out
}

pub fn save_dataset(ds: &Dataset, family: Family, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_string(ds, family)).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_value(path: &Path, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{token}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value `{token}`")));
    }
    Ok(v)
}

/// Parses the dataset format; `path` is only used in error messages.
pub fn parse_dataset(text: &str, path: &Path) -> Result<(Dataset, Family)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file, expected header `n d family`"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(path, 1, "header must be `n d family`"));
    }
    let n: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad sample count `{}`", fields[0])))?;
    let d: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad dimension `{}`", fields[1])))?;
    let family: Family = fields[2]
        .parse()
        .map_err(|e: Error| parse_err(path, 1, e.to_string()))?;
    if n == 0 || d == 0 {
        return Err(parse_err(path, 1, "n and d must be at least 1"));
    }

    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let line_no = i + 2;
        let (_, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, line_no, format!("missing sample {} of {n}", i + 1)))?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != d + 1 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected {} fields (label + {d} features), found {}", d + 1, tokens.len()),
            ));
        }
        let label = parse_value(path, line_no, tokens[0])?;
        if family.is_classification() && label != 1.0 && label != -1.0 {
            return Err(Error::InvalidInput(format!(
                "{}:{line_no}: {family} label must be +1 or -1, found {label}",
                path.display()
            )));
        }
        labels.push(label);
        for t in &tokens[1..] {
            features.push(parse_value(path, line_no, t)?);
        }
    }
    if let Some((idx, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(
            path,
            idx + 1,
            format!("unexpected content after {n} samples: `{}`", extra.trim()),
        ));
    }
    Ok((Dataset::from_flat(n, d, features, labels)?, family))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Dataset, Family)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

/// A gradient-descent approximation of the minimizer of `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub grad_norm: f64,
    pub iterations_used: usize,
    pub tolerance: f64,
}

/// Gradient descent with `gamma = 2 / (L + lambda)` from the origin until
/// `||grad psi|| <= tol`. Fails with [`Error::NotConverged`] at `max_iters`.
pub fn solve_reference(problem: &ProblemSpec, tol: f64, max_iters: usize) -> Result<ReferenceSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let gamma = gd_step(&problem.smoothness_profile());
    let out = gd_until(problem, gamma, vec![0.0; problem.dim()], tol, max_iters)?;
    if !out.converged {
        return Err(Error::NotConverged {
            grad_norm: out.grad_norm,
            tolerance: tol,
            iterations: out.iterations,
        });
    }
    Ok(ReferenceSolution {
        x_star: out.x,
        grad_norm: out.grad_norm,
        iterations_used: out.iterations,
        tolerance: tol,
    })
}

/// `<dataset path>.ref`
pub fn reference_path(dataset_path: impl AsRef<Path>) -> PathBuf {
    let mut s = dataset_path.as_ref().as_os_str().to_owned();
    s.push(".ref");
    PathBuf::from(s)
}

pub fn reference_to_string(r: &ReferenceSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tolerance {}", fmt_full(r.tolerance));
    let _ = writeln!(out, "grad_norm {}", fmt_full(r.grad_norm));
    let _ = writeln!(out, "iterations {}", r.iterations_used);
    let _ = writeln!(out, "d {}", r.x_star.len());
    for v in &r.x_star {
        out.push_str(&fmt_full(*v));
        out.push('\n');
    }
    out
}

pub fn save_reference(r: &ReferenceSolution, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, reference_to_string(r)).map_err(|e| Error::io(path, e))
}

pub fn load_reference(path: impl AsRef<Path>) -> Result<ReferenceSolution> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let mut field = |key: &str| -> Result<(usize, String)> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("missing `{key}` line")))?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(path, i + 1, format!("expected `{key} <value>`")))?;
        if k != key {
            return Err(parse_err(path, i + 1, format!("expected `{key}`, found `{k}`")));
        }
        Ok((i + 1, v.trim().to_string()))
    };
    let (l, v) = field("tolerance")?;
    let tolerance = parse_value(path, l, &v)?;
    let (l, v) = field("grad_norm")?;
    let grad_norm = parse_value(path, l, &v)?;
    let (l, v) = field("iterations")?;
    let iterations_used = v
        .parse()
        .map_err(|_| parse_err(path, l, format!("bad iteration count `{v}`")))?;
    let (l, v) = field("d")?;
    let d: usize = v
        .parse()
        .map_err(|_| parse_err(path, l, format!("bad dimension `{v}`")))?;
    let mut x_star = Vec::with_capacity(d);
    for (i, line) in lines.by_ref().take(d) {
        x_star.push(parse_value(path, i + 1, line.trim())?);
    }
    if x_star.len() != d {
        return Err(parse_err(path, 5 + x_star.len(), format!("expected {d} coordinates")));
    }
    Ok(ReferenceSolution {
        x_star,
        grad_norm,
        iterations_used,
        tolerance,
    })
}
