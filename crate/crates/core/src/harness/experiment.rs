use rayon::prelude::*;

use crate::data::{gen_synthetic, load_dataset, load_reference, reference_path, solve_reference, ReferenceSolution};
use crate::error::{Error, Result};
use crate::linalg::{dist_sq, norm};
use crate::optimizer::{gd_run, sgd_run, OptimizerConfig, Trace};
use crate::problem::{Family, ProblemSpec};
use crate::sampling::{RngStream, Sampler, SamplingScheme};
use crate::theory::{
    admissible_step_bound, bound_rhs, gd_bound, radius_r, rate_q, TheoryReport, STEP_BOUND_RTOL,
};

use super::config::{DatasetSource, ExperimentConfig, SamplingChoice, StepRule};
use super::output::emit_outputs;

/// Problem plus reference solution, shared by runs that differ only in
/// sampling, batch size or step rule.
#[derive(Debug, Clone)]
pub struct ResolvedProblem {
    pub problem: ProblemSpec,
    pub reference: ReferenceSolution,
}

/// Builds the problem a config describes, without solving for `x*`.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    match &cfg.dataset {
        DatasetSource::Synthetic { .. } => {
            let spec = cfg.synthetic_spec().expect("synthetic source");
            let data = gen_synthetic(&spec)?;
            ProblemSpec::new(spec.family, data, cfg.reg_strength)
        }
        DatasetSource::File(path) => {
            let (data, file_family) = load_dataset(path)?;
            let family = match cfg.family {
                Some(f) if f != file_family => {
                    return Err(Error::Config(format!(
                        "family = {f} but {} declares {file_family}",
                        path.display()
                    )))
                }
                _ => file_family,
            };
            ProblemSpec::new(family, data, cfg.reg_strength)
        }
    }
}

/// Loads the problem and its reference solution. For file datasets a
/// `<path>.ref` is reused when its point meets the configured tolerance for
/// the current `L_h`; otherwise the reference is solved afresh.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ResolvedProblem> {
    cfg.validate()?;
    let problem = load_problem(cfg)?;
    if let DatasetSource::File(path) = &cfg.dataset {
        let ref_path = reference_path(path);
        if ref_path.exists() {
            let stored = load_reference(&ref_path)?;
            if stored.x_star.len() == problem.dim() {
                let grad_norm = norm(&problem.grad_full(&stored.x_star)?);
                if grad_norm <= cfg.reference_tolerance {
                    return Ok(ResolvedProblem {
                        problem,
                        reference: ReferenceSolution {
                            grad_norm,
                            tolerance: cfg.reference_tolerance,
                            ..stored
                        },
                    });
                }
            }
        }
    }
    let reference = solve_reference(&problem, cfg.reference_tolerance, cfg.reference_max_iters)?;
    Ok(ResolvedProblem { problem, reference })
}

pub fn sampling_scheme(problem: &ProblemSpec, choice: SamplingChoice, batch_size: usize) -> Result<SamplingScheme> {
    match choice {
        SamplingChoice::Uniform => SamplingScheme::uniform(problem.n(), batch_size),
        SamplingChoice::ProportionalToL => {
            SamplingScheme::proportional(problem.smoothness_profile().per_sample(), batch_size)
        }
    }
}

/// Per-iteration averages over the non-diverged repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurves {
    pub mean_sq_error: Vec<f64>,
    pub mean_rel_error: Vec<f64>,
    pub completed: usize,
    pub diverged: usize,
}

fn ratio(err: f64, init: f64) -> f64 {
    if err == 0.0 {
        0.0
    } else {
        err / init
    }
}

/// Sums traces in slice order. Diverged traces are dropped.
pub fn aggregate_traces(traces: &[Trace], init_err_sq: f64) -> Result<MeanCurves> {
    let kept: Vec<&Trace> = traces.iter().filter(|t| !t.diverged()).collect();
    let diverged = traces.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::AllDiverged(traces.len()));
    }
    let len = kept[0].squared_errors().len();
    let init_norm = init_err_sq.sqrt();
    let mut sq = vec![0.0; len];
    let mut rel = vec![0.0; len];
    for t in &kept {
        for ((s, r), &e) in sq.iter_mut().zip(rel.iter_mut()).zip(t.squared_errors()) {
            *s += e;
            *r += ratio(e.sqrt(), init_norm);
        }
    }
    let count = kept.len() as f64;
    for v in sq.iter_mut().chain(rel.iter_mut()) {
        *v /= count;
    }
    Ok(MeanCurves {
        mean_sq_error: sq,
        mean_rel_error: rel,
        completed: kept.len(),
        diverged,
    })
}

/// Runs one SGD repetition per stream id in parallel, then aggregates in the
/// order of `stream_ids`.
pub fn run_repetitions(
    problem: &ProblemSpec,
    sampler: &Sampler,
    opt: &OptimizerConfig,
    x_star: &[f64],
    base_seed: u64,
    stream_ids: &[u64],
) -> Result<MeanCurves> {
    let traces: Vec<Trace> = stream_ids
        .par_iter()
        .map(|&id| {
            let mut rng = RngStream::new(base_seed, id);
            sgd_run(problem, sampler, opt, &mut rng, Some(x_star))
        })
        .collect::<Result<_>>()?;
    aggregate_traces(&traces, dist_sq(opt.initial_point(), x_star))
}

/// Max of the final `ceil(0.2 len)` entries.
pub fn estimate_r_rel(curve: &[f64]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::InvalidInput("R_rel of an empty curve".into()));
    }
    if curve.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "R_rel needs at least 5 points, got {}",
            curve.len()
        )));
    }
    let window = (curve.len() as f64 * 0.2).ceil() as usize;
    Ok(curve[curve.len() - window..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Least-squares slope of `ln(curve[k])` against `k` over the linear phase:
/// the contiguous run that starts at the first entry `<= upper` and stops
/// before the first later entry `< lower`. `None` with fewer than two points.
pub fn fit_log_slope(curve: &[f64], lower: f64, upper: f64) -> Option<f64> {
    let start = curve.iter().position(|&v| v <= upper)?;
    let end = curve[start..]
        .iter()
        .position(|&v| v < lower)
        .map_or(curve.len(), |p| start + p);
    let points: Vec<(f64, f64)> = (start..end)
        .filter(|&k| curve[k] > 0.0)
        .map(|k| (k as f64, curve[k].ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    Some(sxy / sxx)
}

/// Slope over the window `[10 R_rel, 0.5]`.
pub fn linear_phase_slope(mean_rel_error: &[f64], r_rel: f64) -> Option<f64> {
    fit_log_slope(mean_rel_error, 10.0 * r_rel, 0.5)
}

/// Which guarantee the bound curve comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// `(1 - q)^(k-1) init + R`
    Stochastic { q: f64, radius: f64 },
    /// `factor^(2(k-1)) init`
    Deterministic { factor: f64 },
}

impl BoundKind {
    pub fn curve(self, len: usize, init_err_sq: f64) -> Vec<f64> {
        (0..len)
            .map(|k| match self {
                BoundKind::Stochastic { q, radius } => bound_rhs(k, q, radius, init_err_sq),
                BoundKind::Deterministic { factor } => gd_bound(k, factor, init_err_sq),
            })
            .collect()
    }

    pub fn rate(self) -> f64 {
        match self {
            BoundKind::Stochastic { q, .. } => q,
            BoundKind::Deterministic { factor } => 1.0 - factor * factor,
        }
    }

    pub fn radius(self) -> f64 {
        match self {
            BoundKind::Stochastic { radius, .. } => radius,
            BoundKind::Deterministic { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub reg_strength: f64,
    pub batch_size: usize,
    pub step_rule: StepRule,
    pub step_size: f64,
    pub theory: TheoryReport,
    pub bound: Option<BoundKind>,
    pub init_err_sq: f64,
    /// Entry `k - 1` is the average over repetitions of `||x_k - x*||^2`.
    pub mean_sq_error: Vec<f64>,
    /// Average of `||x_k - x*|| / ||x_1 - x*||`.
    pub mean_rel_error: Vec<f64>,
    pub bound_rhs_curve: Option<Vec<f64>>,
    pub r_rel: f64,
    pub violations: Option<usize>,
    pub slope: Option<f64>,
    pub repetitions: usize,
    pub diverged_repetitions: usize,
    pub reference_grad_norm: f64,
}

/// Step size and bound for a step rule on a problem with the given theory.
pub fn step_and_bound(
    rule: StepRule,
    problem: &ProblemSpec,
    theory: &TheoryReport,
) -> Result<(f64, Option<BoundKind>)> {
    let profile = problem.smoothness_profile();
    let stochastic = |eta: f64| -> Result<BoundKind> {
        let q = rate_q(eta, &profile, theory.s_f)?;
        let radius = radius_r(eta, theory.sigma_f, q)?;
        Ok(BoundKind::Stochastic { q, radius })
    };
    Ok(match rule {
        StepRule::EtaBar => (
            theory.eta_bar,
            Some(BoundKind::Stochastic {
                q: theory.q_bar,
                radius: theory.r_bar,
            }),
        ),
        StepRule::EtaTilde => {
            let eta = theory.eta_tilde;
            let bound = admissible_step_bound(&profile, theory.s_f);
            if eta <= bound * (1.0 + STEP_BOUND_RTOL) {
                (eta, Some(stochastic(eta)?))
            } else {
                (eta, None)
            }
        }
        StepRule::Fixed(eta) => (eta, Some(stochastic(eta)?)),
        StepRule::GdGamma => (
            theory.gamma_gd,
            Some(BoundKind::Deterministic {
                factor: theory.gd_rate_factor,
            }),
        ),
    })
}

/// Runs a validated config against an already resolved problem.
pub fn run_resolved(cfg: &ExperimentConfig, resolved: &ResolvedProblem) -> Result<ExperimentReport> {
    cfg.validate()?;
    let problem = if resolved.problem.reg_strength() == cfg.reg_strength {
        resolved.problem.clone()
    } else {
        return Err(Error::Config(format!(
            "resolved problem has lh = {} but config has lh = {}",
            resolved.problem.reg_strength(),
            cfg.reg_strength
        )));
    };
    let x_star = &resolved.reference.x_star;
    let scheme = sampling_scheme(&problem, cfg.sampling, cfg.batch_size)?;
    let theory = TheoryReport::compute(&problem, x_star, &scheme, resolved.reference.tolerance)?;
    let (step_size, bound) = step_and_bound(cfg.step_rule, &problem, &theory)?;

    let x1 = cfg.x1.materialize(problem.dim());
    let init_err_sq = dist_sq(&x1, x_star);
    let opt = OptimizerConfig::new(step_size, cfg.iterations, x1)?;

    let curves = if cfg.step_rule == StepRule::GdGamma {
        let trace = gd_run(&problem, &opt, Some(x_star))?;
        aggregate_traces(std::slice::from_ref(&trace), init_err_sq)?
    } else {
        let sampler = Sampler::new(scheme)?;
        let ids: Vec<u64> = (0..cfg.repetitions as u64).collect();
        run_repetitions(&problem, &sampler, &opt, x_star, cfg.base_seed, &ids)?
    };

    let len = curves.mean_sq_error.len();
    let bound_rhs_curve = bound.map(|b| b.curve(len, init_err_sq));
    let violations = bound_rhs_curve.as_ref().map(|rhs| {
        curves
            .mean_sq_error
            .iter()
            .zip(rhs)
            .filter(|(e, b)| e > b)
            .count()
    });
    let r_rel = estimate_r_rel(&curves.mean_rel_error)?;
    let slope = linear_phase_slope(&curves.mean_rel_error, r_rel);

    Ok(ExperimentReport {
        family: problem.family(),
        n: problem.n(),
        d: problem.dim(),
        reg_strength: cfg.reg_strength,
        batch_size: cfg.batch_size,
        step_rule: cfg.step_rule,
        step_size,
        theory,
        bound,
        init_err_sq,
        mean_sq_error: curves.mean_sq_error,
        mean_rel_error: curves.mean_rel_error,
        bound_rhs_curve,
        r_rel,
        violations,
        slope,
        repetitions: curves.completed + curves.diverged,
        diverged_repetitions: curves.diverged,
        reference_grad_norm: resolved.reference.grad_norm,
    })
}

/// Resolves, runs, and writes artifacts when the config names an output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let resolved = resolve(cfg)?;
    let report = run_resolved(cfg, &resolved)?;
    if let Some(dir) = &cfg.output_dir {
        emit_outputs(&report, dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RegStrength,
    BatchSize,
}

impl SweepParam {
    pub fn key(self) -> &'static str {
        match self {
            SweepParam::RegStrength => "lh",
            SweepParam::BatchSize => "batch_size",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lh" | "reg_strength" => Ok(SweepParam::RegStrength),
            "batch_size" | "b" => Ok(SweepParam::BatchSize),
            other => Err(Error::Config(format!(
                "cannot sweep `{other}` (expected lh or batch_size)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: ExperimentReport,
}

/// Runs `base` once per grid value. A batch-size sweep shares one reference
/// solution; an `L_h` sweep resolves each point separately.
pub fn run_sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    base.validate()?;
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        cfg.output_dir = None;
        match param {
            SweepParam::RegStrength => cfg.reg_strength = v,
            SweepParam::BatchSize => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(Error::Config(format!("batch_size {v} is not a positive integer")));
                }
                cfg.batch_size = v as usize;
            }
        }
        cfg.validate()?;
        configs.push(cfg);
    }
    let shared = match param {
        SweepParam::BatchSize => Some(resolve(base)?),
        SweepParam::RegStrength => None,
    };
    let mut points = Vec::with_capacity(values.len());
    for (cfg, &value) in configs.iter().zip(values) {
        let report = match &shared {
            Some(r) => run_resolved(cfg, r)?,
            None => run_resolved(cfg, &resolve(cfg)?)?,
        };
        points.push(SweepPoint { value, report });
    }
    Ok(points)
}
