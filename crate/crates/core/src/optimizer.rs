//! Constant-step mini-batch SGD and full-gradient descent with per-iteration traces.

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm};
use crate::problem::ProblemSpec;
use crate::sampling::{minibatch_gradient_into, RngStream, Sampler};

/// Stride used by [`OptimizerConfig::with_objective`] when none is given.
pub const DEFAULT_OBJECTIVE_STRIDE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    step_size: f64,
    iterations: usize,
    initial_point: Vec<f64>,
    objective_stride: Option<usize>,
}

impl OptimizerConfig {
    pub fn new(step_size: f64, iterations: usize, initial_point: Vec<f64>) -> Result<Self> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive and finite, got {step_size}"
            )));
        }
        if iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if initial_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("initial point must be finite".into()));
        }
        Ok(OptimizerConfig {
            step_size,
            iterations,
            initial_point,
            objective_stride: None,
        })
    }

    /// Also record `psi(x_k)` every `stride` iterations (O(nd) each).
    pub fn with_objective(mut self, stride: Option<usize>) -> Self {
        self.objective_stride = Some(stride.unwrap_or(DEFAULT_OBJECTIVE_STRIDE).max(1));
        self
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn initial_point(&self) -> &[f64] {
        &self.initial_point
    }

    pub fn objective_stride(&self) -> Option<usize> {
        self.objective_stride
    }
}

/// Record of one run. Iterations are numbered from `k = 1` (the initial point)
/// to `k = K + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    error_sq: Vec<f64>,
    objective: Vec<(usize, f64)>,
    final_iterate: Vec<f64>,
    diverged_at: Option<usize>,
}

impl Trace {
    /// `||x_k - x*||^2` for each recorded `k`; empty without a reference.
    pub fn squared_errors(&self) -> &[f64] {
        &self.error_sq
    }

    /// `||x_k - x*||`.
    pub fn iterate_errors(&self) -> Vec<f64> {
        self.error_sq.iter().map(|e| e.sqrt()).collect()
    }

    /// `(k, psi(x_k))` pairs, if objective recording was enabled.
    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    /// `x_{K+1}`, or the last finite iterate of a diverged run.
    pub fn final_iterate(&self) -> &[f64] {
        &self.final_iterate
    }

    /// Index `k` of the first non-finite iterate.
    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }
}

struct Recorder<'a> {
    problem: &'a ProblemSpec,
    reference: Option<&'a [f64]>,
    stride: Option<usize>,
    trace: Trace,
}

impl<'a> Recorder<'a> {
    fn new(problem: &'a ProblemSpec, cfg: &OptimizerConfig, reference: Option<&'a [f64]>) -> Self {
        let capacity = if reference.is_some() { cfg.iterations + 1 } else { 0 };
        Recorder {
            problem,
            reference,
            stride: cfg.objective_stride,
            trace: Trace {
                error_sq: Vec::with_capacity(capacity),
                objective: Vec::new(),
                final_iterate: Vec::new(),
                diverged_at: None,
            },
        }
    }

    fn record(&mut self, k: usize, x: &[f64]) {
        if let Some(xs) = self.reference {
            self.trace.error_sq.push(dist_sq(x, xs));
        }
        if let Some(m) = self.stride {
            if (k - 1).is_multiple_of(m) {
                let value = self
                    .problem
                    .eval_objective(x)
                    .expect("dimension checked at run start");
                self.trace.objective.push((k, value));
            }
        }
    }
}

fn check_inputs(problem: &ProblemSpec, cfg: &OptimizerConfig, reference: Option<&[f64]>) -> Result<()> {
    problem.check_dim(cfg.initial_point())?;
    if let Some(xs) = reference {
        problem.check_dim(xs)?;
    }
    Ok(())
}

/// Shared loop: `x <- x - eta (g(x) + L_h x)` with `g` supplied by `direction`.
fn run_loop(
    problem: &ProblemSpec,
    cfg: &OptimizerConfig,
    reference: Option<&[f64]>,
    mut direction: impl FnMut(&[f64], &mut [f64]),
) -> Trace {
    let eta = cfg.step_size;
    let lh = problem.reg_strength();
    let mut x = cfg.initial_point.clone();
    let mut g = vec![0.0; x.len()];
    let mut next = vec![0.0; x.len()];
    let mut rec = Recorder::new(problem, cfg, reference);
    rec.record(1, &x);
    for k in 1..=cfg.iterations {
        direction(&x, &mut g);
        for ((n, &xj), &gj) in next.iter_mut().zip(&x).zip(&g) {
            *n = xj - eta * (gj + lh * xj);
        }
        if next.iter().any(|v| !v.is_finite()) {
            rec.trace.diverged_at = Some(k + 1);
            break;
        }
        std::mem::swap(&mut x, &mut next);
        rec.record(k + 1, &x);
    }
    rec.trace.final_iterate = x;
    rec.trace
}

/// Mini-batch SGD with batch size `sampler.scheme().batch_size()`.
pub fn sgd_run(
    problem: &ProblemSpec,
    sampler: &Sampler,
    cfg: &OptimizerConfig,
    rng: &mut RngStream,
    reference: Option<&[f64]>,
) -> Result<Trace> {
    check_inputs(problem, cfg, reference)?;
    let scheme = sampler.scheme();
    if scheme.n() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            got: scheme.n(),
        });
    }
    let batch_size = scheme.batch_size();
    let probs = scheme.probs();
    let mut batch = Vec::with_capacity(batch_size);
    Ok(run_loop(problem, cfg, reference, |x, g| {
        sampler.draw_batch_into(rng, batch_size, &mut batch);
        minibatch_gradient_into(problem, x, &mut batch, probs, g);
    }))
}

/// Deterministic gradient descent `x <- x - gamma (grad F(x) + grad h(x))`.
pub fn gd_run(problem: &ProblemSpec, cfg: &OptimizerConfig, reference: Option<&[f64]>) -> Result<Trace> {
    check_inputs(problem, cfg, reference)?;
    Ok(run_loop(problem, cfg, reference, |x, g| problem.grad_sg_term_into(x, g)))
}

/// Outcome of [`gd_until`].
#[derive(Debug, Clone, PartialEq)]
pub struct GdSolve {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Gradient descent from `x1` until `||grad psi|| <= tol` or `max_iters` steps.
pub fn gd_until(
    problem: &ProblemSpec,
    step_size: f64,
    x1: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<GdSolve> {
    problem.check_dim(&x1)?;
    let mut x = x1;
    let mut g = vec![0.0; x.len()];
    let mut iterations = 0;
    loop {
        problem.grad_full_into(&x, &mut g);
        let grad_norm = norm(&g);
        if !grad_norm.is_finite() {
            return Ok(GdSolve {
                x,
                grad_norm,
                iterations,
                converged: false,
            });
        }
        if grad_norm <= tol || iterations >= max_iters {
            return Ok(GdSolve {
                x,
                grad_norm,
                iterations,
                converged: grad_norm <= tol,
            });
        }
        for (xj, gj) in x.iter_mut().zip(&g) {
            *xj -= step_size * gj;
        }
        iterations += 1;
    }
}
