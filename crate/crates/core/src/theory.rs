//! Closed-form constants for constant-step mini-batch SGD on `F + h`:
//! the growth factor `s_F`, the noise level `sigma_F`, step sizes, linear
//! rates, convergence radii and the applicability predicates that go with them.
//!
//! Notation: `L_F = (1/n) sum L_i`, `L = L_F + L_h`, `lambda` the convexity
//! parameter of `psi`, `B` the batch size and `p` the sampling distribution.

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::problem::{ProblemSpec, SmoothnessProfile};
use crate::sampling::SamplingScheme;

/// Relative slack accepted when checking `eta` against the admissible bound,
/// so a step printed at full precision and read back still qualifies.
pub const STEP_BOUND_RTOL: f64 = 1e-12;

/// Relative tolerance for the equality of the two `q_tilde` evaluations.
pub const Q_TILDE_EQ_RTOL: f64 = 1e-15;

fn check_scheme(profile: &SmoothnessProfile, scheme: &SamplingScheme) -> Result<()> {
    if scheme.n() != profile.n() {
        return Err(Error::DimensionMismatch {
            expected: profile.n(),
            got: scheme.n(),
        });
    }
    Ok(())
}

fn s_f_raw(per_sample: &[f64], convexity: f64, probs: &[f64], batch_size: usize) -> f64 {
    let n = per_sample.len() as f64;
    let sum: f64 = per_sample
        .iter()
        .zip(probs)
        .map(|(l, p)| l * l / (n * p))
        .sum();
    2.0 / (batch_size as f64 * convexity * convexity * n) * sum
}

fn q_bar_raw(mean_sample: f64, lh: f64, convexity: f64, s_f: f64) -> f64 {
    let total = mean_sample + lh;
    let denom = convexity + total;
    4.0 * convexity * total / ((s_f + 1.0) * denom * denom)
}

fn q_tilde_raw(max_sample: f64, lh: f64, convexity: f64) -> f64 {
    convexity / (2.0 * (max_sample + lh))
}

/// `s_F = 2 / (B lambda^2 n) * sum L_i^2 / (n p_i)`.
pub fn compute_s_f(profile: &SmoothnessProfile, scheme: &SamplingScheme) -> Result<f64> {
    check_scheme(profile, scheme)?;
    Ok(s_f_raw(
        profile.per_sample(),
        profile.convexity(),
        scheme.probs(),
        scheme.batch_size(),
    ))
}

/// `sigma_F = 1 / (B n) * sum ||grad f_i(x*)||^2 / (n p_i)`.
pub fn compute_sigma_f(problem: &ProblemSpec, x_star: &[f64], scheme: &SamplingScheme) -> Result<f64> {
    problem.check_dim(x_star)?;
    if scheme.n() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            got: scheme.n(),
        });
    }
    let n = problem.n() as f64;
    let mut sum = 0.0;
    for (i, p) in scheme.probs().iter().enumerate() {
        let g = problem.grad_component(i, x_star)?;
        sum += norm_sq(&g) / (n * p);
    }
    Ok(sum / (scheme.batch_size() as f64 * n))
}

/// Largest admissible constant step, `2 / ((s_F + 1)(lambda + L))`.
pub fn admissible_step_bound(profile: &SmoothnessProfile, s_f: f64) -> f64 {
    2.0 / ((s_f + 1.0) * (profile.convexity() + profile.total()))
}

/// The rate-maximizing step `eta_bar`; identical to the admissible bound.
pub fn step_eta_bar(profile: &SmoothnessProfile, s_f: f64) -> f64 {
    admissible_step_bound(profile, s_f)
}

/// `q = 2 eta lambda L / (lambda + L)` for an admissible `eta`.
///
/// The result lies in `(0, 1]`; it equals 1 only in the noiseless boundary
/// case `s_F = 0`, `lambda = L`, `eta = eta_bar`.
pub fn rate_q(eta: f64, profile: &SmoothnessProfile, s_f: f64) -> Result<f64> {
    let bound = admissible_step_bound(profile, s_f);
    if !(eta.is_finite() && eta > 0.0) || eta > bound * (1.0 + STEP_BOUND_RTOL) {
        return Err(Error::InadmissibleStep {
            eta,
            bound,
            rule: "0 < eta <= 2 / ((s_F + 1)(lambda + L_F + L_h))",
        });
    }
    let lambda = profile.convexity();
    let total = profile.total();
    Ok(2.0 * eta * lambda * total / (lambda + total))
}

/// Closed form of `rate_q(eta_bar)`: `4 lambda L / ((s_F + 1)(lambda + L)^2)`.
pub fn q_bar(profile: &SmoothnessProfile, s_f: f64) -> f64 {
    q_bar_raw(
        profile.mean_sample(),
        profile.deterministic_term(),
        profile.convexity(),
        s_f,
    )
}

/// `R = 2 eta^2 sigma_F / q`.
pub fn radius_r(eta: f64, sigma_f: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidInput(format!("rate q = {q} is outside (0, 1]")));
    }
    Ok(2.0 * eta * eta * sigma_f / q)
}

/// `R_bar = 2 sigma_F / (lambda (s_F + 1) L)`, the radius at `eta_bar`.
pub fn radius_r_bar(profile: &SmoothnessProfile, s_f: f64, sigma_f: f64) -> f64 {
    2.0 * sigma_f / (profile.convexity() * (s_f + 1.0) * profile.total())
}

/// `eta_tilde = 1 / (2 (max L_i + L_h))`, the classic single-sample uniform step.
pub fn step_eta_tilde(profile: &SmoothnessProfile) -> f64 {
    1.0 / (2.0 * (profile.max_sample() + profile.deterministic_term()))
}

/// `q_tilde = lambda / (2 (max L_i + L_h))`.
pub fn rate_q_tilde(profile: &SmoothnessProfile) -> f64 {
    q_tilde_raw(
        profile.max_sample(),
        profile.deterministic_term(),
        profile.convexity(),
    )
}

/// Gradient descent step `gamma = 2 / (L + lambda)`.
pub fn gd_step(profile: &SmoothnessProfile) -> f64 {
    2.0 / (profile.total() + profile.convexity())
}

/// Per-step error contraction of gradient descent, `(L - lambda) / (L + lambda)`.
pub fn gd_rate_factor(profile: &SmoothnessProfile) -> f64 {
    (profile.total() - profile.convexity()) / (profile.total() + profile.convexity())
}

/// Sufficient condition `(2/n) sum L_i^2 <= lambda^2` (equivalently
/// `s_F <= 1`) for `q_tilde <= q_bar`. Only defined for `B = 1` and uniform
/// sampling. The comparison carries no tolerance.
pub fn cor3_condition(profile: &SmoothnessProfile, scheme: &SamplingScheme) -> Result<bool> {
    check_scheme(profile, scheme)?;
    if scheme.batch_size() != 1 || !scheme.is_uniform() {
        return Err(Error::NotApplicable(format!(
            "the q_tilde comparison needs B = 1 and uniform sampling (got B = {}, {:?})",
            scheme.batch_size(),
            scheme.kind()
        )));
    }
    let n = profile.n() as f64;
    let lhs = 2.0 * profile.per_sample().iter().map(|l| l * l).sum::<f64>() / n;
    let lambda = profile.convexity();
    Ok(lhs <= lambda * lambda)
}

/// `(1 - q)^K init_err_sq + R`, with the power taken as `exp(K log1p(-q))`.
pub fn bound_rhs(k: usize, q: f64, r: f64, init_err_sq: f64) -> f64 {
    contraction_power(1.0 - q, -q, k) * init_err_sq + r
}

/// `factor^(2K) init_err_sq`, the gradient-descent error bound.
pub fn gd_bound(k: usize, factor: f64, init_err_sq: f64) -> f64 {
    contraction_power(factor * factor, factor * factor - 1.0, k) * init_err_sq
}

/// `base^k` where `base = 1 + base_minus_one`, evaluated through `log1p`.
fn contraction_power(base: f64, base_minus_one: f64, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else if base <= 0.0 {
        0.0
    } else {
        libm::exp(k as f64 * libm::log1p(base_minus_one))
    }
}

/// Both sides of the asymmetric-shift comparison for a shift `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftComparison {
    /// `q_bar(L_1 - c, ..., L_n - c, L_h)`
    pub lhs: f64,
    /// `q_bar(L_1, ..., L_n, L_h - c)`
    pub rhs: f64,
    pub strict: bool,
    /// `q_tilde(L_1 - c, ..., L_n - c, L_h)`
    pub tilde_lhs: f64,
    /// `q_tilde(L_1, ..., L_n, L_h - c)`
    pub tilde_rhs: f64,
    pub tilde_equal: bool,
}

/// Compares lowering every `L_i` by `c` against lowering `L_h` by `c`, with
/// `lambda`, `p` and `B` held fixed and `s_F` recomputed for the shifted `L_i`.
pub fn ordering_check_cor2(
    profile: &SmoothnessProfile,
    scheme: &SamplingScheme,
    c: f64,
) -> Result<ShiftComparison> {
    check_scheme(profile, scheme)?;
    let min_sample = profile.per_sample().iter().copied().fold(f64::INFINITY, f64::min);
    let limit = min_sample.min(profile.deterministic_term());
    if !(c > 0.0 && c < limit) {
        return Err(Error::InvalidInput(format!(
            "shift c = {c} must lie in (0, {limit})"
        )));
    }
    let lambda = profile.convexity();
    let lh = profile.deterministic_term();
    let b = scheme.batch_size();

    let shifted: Vec<f64> = profile.per_sample().iter().map(|l| l - c).collect();
    let shifted_mean = shifted.iter().sum::<f64>() / shifted.len() as f64;
    let s_shifted = s_f_raw(&shifted, lambda, scheme.probs(), b);
    let lhs = q_bar_raw(shifted_mean, lh, lambda, s_shifted);

    let s_orig = s_f_raw(profile.per_sample(), lambda, scheme.probs(), b);
    let rhs = q_bar_raw(profile.mean_sample(), lh - c, lambda, s_orig);

    let max_sample = profile.max_sample();
    let tilde_lhs = q_tilde_raw(max_sample - c, lh, lambda);
    let tilde_rhs = q_tilde_raw(max_sample, lh - c, lambda);
    let tilde_equal = (tilde_lhs - tilde_rhs).abs() <= Q_TILDE_EQ_RTOL * tilde_lhs.abs().max(tilde_rhs.abs());

    Ok(ShiftComparison {
        lhs,
        rhs,
        strict: lhs > rhs,
        tilde_lhs,
        tilde_rhs,
        tilde_equal,
    })
}

/// All derived constants for one problem, reference solution and scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub s_f: f64,
    pub sigma_f: f64,
    pub eta_bar: f64,
    pub q_bar: f64,
    pub r_bar: f64,
    pub eta_tilde: f64,
    pub q_tilde: f64,
    pub gamma_gd: f64,
    pub gd_rate_factor: f64,
    /// `None` when the predicate does not apply (B != 1 or non-uniform p).
    pub cor3_holds: Option<bool>,
    /// Gradient-norm tolerance of the reference solution behind `sigma_f`.
    pub reference_tolerance: f64,
}

impl TheoryReport {
    /// Column order of [`to_csv_row`](Self::to_csv_row).
    pub const CSV_HEADER: [&'static str; 10] = [
        "s_F",
        "sigma_F",
        "eta_bar",
        "q_bar",
        "R_bar",
        "eta_tilde",
        "q_tilde",
        "gamma_gd",
        "gd_rate_factor",
        "cor3_holds",
    ];

    pub fn compute(
        problem: &ProblemSpec,
        x_star: &[f64],
        scheme: &SamplingScheme,
        reference_tolerance: f64,
    ) -> Result<Self> {
        let profile = problem.smoothness_profile();
        let sigma_f = compute_sigma_f(problem, x_star, scheme)?;
        TheoryReport::from_parts(&profile, scheme, sigma_f, reference_tolerance)
    }

    pub fn from_parts(
        profile: &SmoothnessProfile,
        scheme: &SamplingScheme,
        sigma_f: f64,
        reference_tolerance: f64,
    ) -> Result<Self> {
        let s_f = compute_s_f(profile, scheme)?;
        let cor3_holds = match cor3_condition(profile, scheme) {
            Ok(v) => Some(v),
            Err(Error::NotApplicable(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(TheoryReport {
            s_f,
            sigma_f,
            eta_bar: step_eta_bar(profile, s_f),
            q_bar: q_bar(profile, s_f),
            r_bar: radius_r_bar(profile, s_f, sigma_f),
            eta_tilde: step_eta_tilde(profile),
            q_tilde: rate_q_tilde(profile),
            gamma_gd: gd_step(profile),
            gd_rate_factor: gd_rate_factor(profile),
            cor3_holds,
            reference_tolerance,
        })
    }

    fn cor3_str(&self) -> &'static str {
        match self.cor3_holds {
            Some(true) => "true",
            Some(false) => "false",
            None => "na",
        }
    }

    fn values(&self) -> [f64; 9] {
        [
            self.s_f,
            self.sigma_f,
            self.eta_bar,
            self.q_bar,
            self.r_bar,
            self.eta_tilde,
            self.q_tilde,
            self.gamma_gd,
            self.gd_rate_factor,
        ]
    }

    /// `key = value` lines, one per constant, numbers in round-trip precision.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (key, v) in Self::CSV_HEADER.iter().zip(self.values()) {
            out.push_str(&format!("{key} = {v:e}\n"));
        }
        out.push_str(&format!("cor3_holds = {}\n", self.cor3_str()));
        out.push_str(&format!("reference_tolerance = {:e}\n", self.reference_tolerance));
        out
    }

    pub fn csv_header() -> String {
        Self::CSV_HEADER.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut cells: Vec<String> = self.values().iter().map(|v| format!("{v:e}")).collect();
        cells.push(self.cor3_str().to_string());
        cells.join(",")
    }

    /// Inverse of [`to_csv_row`](Self::to_csv_row); `reference_tolerance` is
    /// not part of the row and comes back as NaN.
    pub fn parse_csv_row(row: &str) -> Result<Self> {
        let cells: Vec<&str> = row.trim().split(',').collect();
        if cells.len() != Self::CSV_HEADER.len() {
            return Err(Error::InvalidInput(format!(
                "theory row has {} fields, expected {}",
                cells.len(),
                Self::CSV_HEADER.len()
            )));
        }
        let mut v = [0.0; 9];
        for (slot, (cell, key)) in v.iter_mut().zip(cells.iter().zip(Self::CSV_HEADER)) {
            *slot = cell
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad value `{cell}` for {key}")))?;
        }
        let cor3_holds = match cells[9] {
            "true" => Some(true),
            "false" => Some(false),
            "na" => None,
            other => return Err(Error::InvalidInput(format!("bad cor3_holds `{other}`"))),
        };
        Ok(TheoryReport {
            s_f: v[0],
            sigma_f: v[1],
            eta_bar: v[2],
            q_bar: v[3],
            r_bar: v[4],
            eta_tilde: v[5],
            q_tilde: v[6],
            gamma_gd: v[7],
            gd_rate_factor: v[8],
            cor3_holds,
            reference_tolerance: f64::NAN,
        })
    }
}
