//! Index sampling and the importance-weighted mini-batch gradient estimator
//!
//! `g = (1/B) sum_j grad f_{xi_j}(x) / (n p_{xi_j})`, with the `xi_j` drawn
//! i.i.d. with replacement from `p`.

mod alias;
mod rng;

pub use alias::AliasTable;
pub use rng::RngStream;

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

/// Inputs whose total is within this distance of 1 are renormalized.
pub const PROB_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingKind {
    Uniform,
    ProportionalToL,
    Custom,
}

/// A fixed sampling distribution over components plus a batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingScheme {
    probs: Vec<f64>,
    batch_size: usize,
    kind: SamplingKind,
}

impl SamplingScheme {
    pub fn new(probs: Vec<f64>, batch_size: usize) -> Result<Self> {
        let probs = normalize(probs)?;
        SamplingScheme::from_parts(probs, batch_size, SamplingKind::Custom)
    }

    pub fn uniform(n: usize, batch_size: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("no components to sample".into()));
        }
        SamplingScheme::from_parts(vec![1.0 / n as f64; n], batch_size, SamplingKind::Uniform)
    }

    /// `p_i = w_i / sum w`. All weights must be strictly positive, so zero
    /// feature rows (`L_i = 0`) are rejected.
    pub fn proportional(weights: &[f64], batch_size: usize) -> Result<Self> {
        validate_positive(weights)?;
        let total: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / total).collect();
        SamplingScheme::from_parts(probs, batch_size, SamplingKind::ProportionalToL)
    }

    fn from_parts(probs: Vec<f64>, batch_size: usize, kind: SamplingKind) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch size must be at least 1".into()));
        }
        validate_positive(&probs)?;
        Ok(SamplingScheme {
            probs,
            batch_size,
            kind,
        })
    }

    pub fn with_batch_size(&self, batch_size: usize) -> Result<Self> {
        SamplingScheme::from_parts(self.probs.clone(), batch_size, self.kind)
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn kind(&self) -> SamplingKind {
        self.kind
    }

    /// True when every `p_i` equals `1/n`.
    pub fn is_uniform(&self) -> bool {
        self.kind == SamplingKind::Uniform || {
            let u = 1.0 / self.n() as f64;
            self.probs.iter().all(|&p| p == u)
        }
    }
}

fn validate_positive(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    if let Some(i) = probs.iter().position(|p| !p.is_finite()) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is not finite ({})",
            probs[i]
        )));
    }
    if let Some(i) = probs.iter().position(|&p| p <= 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} is {} but every probability must be positive",
            probs[i]
        )));
    }
    Ok(())
}

fn normalize(probs: Vec<f64>) -> Result<Vec<f64>> {
    validate_positive(&probs)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(probs.into_iter().map(|p| p / total).collect())
}

/// Builds an alias table for `probs` (validated and renormalized).
pub fn build_sampler(probs: &[f64]) -> Result<AliasTable> {
    let probs = normalize(probs.to_vec())?;
    AliasTable::new(&probs)
}

/// A sampling scheme with its precomputed alias table. Immutable and
/// shareable across threads.
#[derive(Debug, Clone)]
pub struct Sampler {
    scheme: SamplingScheme,
    table: AliasTable,
}

impl Sampler {
    pub fn new(scheme: SamplingScheme) -> Result<Self> {
        let table = AliasTable::new(scheme.probs())?;
        Ok(Sampler { scheme, table })
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn table(&self) -> &AliasTable {
        &self.table
    }

    pub fn draw(&self, rng: &mut RngStream) -> usize {
        self.table.sample(rng)
    }

    /// `batch_size` i.i.d. indices, with replacement.
    pub fn draw_batch(&self, rng: &mut RngStream, batch_size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(batch_size);
        self.draw_batch_into(rng, batch_size, &mut out);
        out
    }

    pub fn draw_batch_into(&self, rng: &mut RngStream, batch_size: usize, out: &mut Vec<usize>) {
        out.clear();
        out.extend((0..batch_size).map(|_| self.table.sample(rng)));
    }
}

/// The weighted mini-batch gradient of `F` (without `grad h`). The batch size
/// is `batch.len()`.
pub fn minibatch_gradient(
    problem: &ProblemSpec,
    x: &[f64],
    batch: &[usize],
    scheme: &SamplingScheme,
) -> Result<Vec<f64>> {
    problem.check_dim(x)?;
    if scheme.n() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            got: scheme.n(),
        });
    }
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    for &i in batch {
        problem.check_index(i)?;
    }
    let mut sorted = batch.to_vec();
    let mut g = vec![0.0; problem.dim()];
    minibatch_gradient_into(problem, x, &mut sorted, scheme.probs(), &mut g);
    Ok(g)
}

/// Sorts `batch` in place and writes the estimator into `out`. Repeated
/// indices are merged so that each component is weighted once by
/// `m_i / (B n p_i)`; with `n = 1` this weight is exactly 1.
pub(crate) fn minibatch_gradient_into(
    problem: &ProblemSpec,
    x: &[f64],
    batch: &mut [usize],
    probs: &[f64],
    out: &mut [f64],
) {
    out.fill(0.0);
    let denom = batch.len() as f64 * problem.n() as f64;
    batch.sort_unstable();
    let mut start = 0;
    while start < batch.len() {
        let i = batch[start];
        let mut end = start + 1;
        while end < batch.len() && batch[end] == i {
            end += 1;
        }
        let weight = (end - start) as f64 / (denom * probs[i]);
        problem.accumulate_grad_component(i, x, weight, out);
        start = end;
    }
}
