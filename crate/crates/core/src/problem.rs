//! Structured objectives `psi(x) = F(x) + h(x)` where `F` is the sample average
//! of per-sample losses and `h(x) = (L_h / 2) ||x||^2`.
//!
//! All three loss families are generalized linear: the per-sample gradient is a
//! scalar coefficient times the feature row, `grad f_i(x) = c_i(x) a_i`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `f_i = 0.5 (a_i^T x - b_i)^2`
    Ridge,
    /// `f_i = log(1 + exp(-b_i a_i^T x))`
    Logistic,
    /// `f_i = 0.5 max(0, 1 - b_i a_i^T x)^2`
    HingeSq,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Ridge, Family::Logistic, Family::HingeSq];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ridge => "ridge",
            Family::Logistic => "logistic",
            Family::HingeSq => "hinge_sq",
        }
    }

    /// Logistic and squared-hinge require labels in {+1, -1}.
    pub fn is_classification(self) -> bool {
        !matches!(self, Family::Ridge)
    }

    /// Lipschitz constant of `grad f_i` given `||a_i||^2`.
    pub fn lipschitz_from_row_norm_sq(self, row_norm_sq: f64) -> f64 {
        match self {
            Family::Ridge | Family::HingeSq => row_norm_sq,
            Family::Logistic => row_norm_sq / 4.0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ridge" => Ok(Family::Ridge),
            "logistic" => Ok(Family::Logistic),
            "hinge_sq" | "hingesq" | "svm" => Ok(Family::HingeSq),
            other => Err(Error::InvalidInput(format!(
                "unknown model family `{other}` (expected ridge, logistic or hinge_sq)"
            ))),
        }
    }
}

/// `n` samples of `d` features, stored row-major, with one label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn from_flat(n: usize, d: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset needs n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if features.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: features.len(),
            });
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: labels.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature at sample {}, column {}",
                pos / d,
                pos % d
            )));
        }
        if let Some(i) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite label at sample {i}")));
        }
        Ok(Dataset {
            n,
            d,
            features,
            labels,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidInput(format!(
                    "sample {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            features.extend(row);
        }
        Dataset::from_flat(n, d, features, labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.d)
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Checks the label domain required by `family`.
    pub fn validate_labels(&self, family: Family) -> Result<()> {
        if family.is_classification() {
            if let Some(i) = self.labels.iter().position(|&b| b != 1.0 && b != -1.0) {
                return Err(Error::InvalidInput(format!(
                    "{family} labels must be +1 or -1, sample {i} has {}",
                    self.labels[i]
                )));
            }
        }
        Ok(())
    }
}

/// Per-sample and deterministic-term smoothness constants of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProfile {
    per_sample: Vec<f64>,
    deterministic_term: f64,
    convexity: f64,
    mean_sample: f64,
}

impl SmoothnessProfile {
    /// Builds a profile from `L_i`, `L_h` and `lambda`.
    ///
    /// `L_i = 0` is accepted (a zero feature row) and reported by
    /// [`degenerate_samples`](Self::degenerate_samples); negative or
    /// non-finite constants, `L_h <= 0`, `lambda <= 0` and
    /// `lambda > L_F + L_h` are rejected.
    pub fn new(per_sample: Vec<f64>, deterministic_term: f64, convexity: f64) -> Result<Self> {
        if per_sample.is_empty() {
            return Err(Error::InvalidInput("profile needs at least one sample".into()));
        }
        if let Some(i) = per_sample.iter().position(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "sample Lipschitz constant L_{i} = {} must be finite and nonnegative",
                per_sample[i]
            )));
        }
        if !(deterministic_term.is_finite() && deterministic_term > 0.0) {
            return Err(Error::InvalidInput(format!(
                "L_h must be positive and finite, got {deterministic_term}"
            )));
        }
        if !(convexity.is_finite() && convexity > 0.0) {
            return Err(Error::InvalidInput(format!(
                "convexity parameter must be positive and finite, got {convexity}"
            )));
        }
        let mean_sample = mean(&per_sample);
        if convexity > mean_sample + deterministic_term {
            return Err(Error::InvalidInput(format!(
                "convexity {convexity} exceeds the smoothness constant L_F + L_h = {}",
                mean_sample + deterministic_term
            )));
        }
        Ok(SmoothnessProfile {
            per_sample,
            deterministic_term,
            convexity,
            mean_sample,
        })
    }

    pub fn n(&self) -> usize {
        self.per_sample.len()
    }

    /// `L_i`, one per sample.
    pub fn per_sample(&self) -> &[f64] {
        &self.per_sample
    }

    /// `L_h`.
    pub fn deterministic_term(&self) -> f64 {
        self.deterministic_term
    }

    /// `lambda`.
    pub fn convexity(&self) -> f64 {
        self.convexity
    }

    /// `L_F = (1/n) sum L_i`.
    pub fn mean_sample(&self) -> f64 {
        self.mean_sample
    }

    /// `L_F + L_h`, the smoothness constant of `psi`.
    pub fn total(&self) -> f64 {
        self.mean_sample + self.deterministic_term
    }

    pub fn max_sample(&self) -> f64 {
        self.per_sample.iter().copied().fold(0.0, f64::max)
    }

    /// Indices with `L_i = 0`.
    pub fn degenerate_samples(&self) -> Vec<usize> {
        self.per_sample
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A structured objective together with its data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    family: Family,
    data: Dataset,
    reg_strength: f64,
}

impl ProblemSpec {
    pub fn new(family: Family, data: Dataset, reg_strength: f64) -> Result<Self> {
        if !(reg_strength.is_finite() && reg_strength > 0.0) {
            return Err(Error::InvalidInput(format!(
                "regularization strength L_h must be positive and finite, got {reg_strength}"
            )));
        }
        data.validate_labels(family)?;
        Ok(ProblemSpec {
            family,
            data,
            reg_strength,
        })
    }

    /// Same data and family with a different `L_h`.
    pub fn with_reg_strength(&self, reg_strength: f64) -> Result<Self> {
        ProblemSpec::new(self.family, self.data.clone(), reg_strength)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn reg_strength(&self) -> f64 {
        self.reg_strength
    }

    pub fn n(&self) -> usize {
        self.data.n
    }

    pub fn dim(&self) -> usize {
        self.data.d
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.data.d {
            return Err(Error::DimensionMismatch {
                expected: self.data.d,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.data.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.data.n,
            });
        }
        Ok(())
    }

    /// `f_i(x)`. Indices are zero-based.
    pub fn loss_component(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_index(i)?;
        Ok(self.loss_unchecked(i, x))
    }

    fn loss_unchecked(&self, i: usize, x: &[f64]) -> f64 {
        let t = dot(self.data.row(i), x);
        let b = self.data.labels[i];
        match self.family {
            Family::Ridge => 0.5 * (t - b) * (t - b),
            Family::Logistic => log1p_exp_neg(b * t),
            Family::HingeSq => {
                let slack = (1.0 - b * t).max(0.0);
                0.5 * slack * slack
            }
        }
    }

    /// The scalar `c_i(x)` with `grad f_i(x) = c_i(x) a_i`.
    pub(crate) fn grad_coefficient(&self, i: usize, x: &[f64]) -> f64 {
        let t = dot(self.data.row(i), x);
        let b = self.data.labels[i];
        match self.family {
            Family::Ridge => t - b,
            Family::Logistic => -b * sigmoid_neg(b * t),
            Family::HingeSq => -b * (1.0 - b * t).max(0.0),
        }
    }

    /// `out += scale * grad f_i(x)`, unchecked.
    pub(crate) fn accumulate_grad_component(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let c = self.grad_coefficient(i, x);
        let row = self.data.row(i);
        for (o, &a) in out.iter_mut().zip(row) {
            *o += scale * (c * a);
        }
    }

    /// `grad f_i(x)`.
    pub fn grad_component(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        self.check_index(i)?;
        let c = self.grad_coefficient(i, x);
        Ok(self.data.row(i).iter().map(|&a| c * a).collect())
    }

    /// `h(x) = (L_h / 2) ||x||^2`.
    pub fn eval_deterministic(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(0.5 * self.reg_strength * norm_sq(x))
    }

    /// `F(x) = (1/n) sum f_i(x)`.
    pub fn eval_sg_term(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let total: f64 = (0..self.data.n).map(|i| self.loss_unchecked(i, x)).sum();
        Ok(total / self.data.n as f64)
    }

    /// `psi(x) = F(x) + h(x)`.
    pub fn eval_objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval_sg_term(x)? + self.eval_deterministic(x)?)
    }

    /// `grad F(x)`, accumulated left to right in sample order.
    pub fn grad_sg_term(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = vec![0.0; self.data.d];
        self.grad_sg_term_into(x, &mut g);
        Ok(g)
    }

    pub(crate) fn grad_sg_term_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.data.n {
            let c = self.grad_coefficient(i, x);
            for (o, &a) in out.iter_mut().zip(self.data.row(i)) {
                *o += c * a;
            }
        }
        let n = self.data.n as f64;
        for o in out.iter_mut() {
            *o /= n;
        }
    }

    /// `grad h(x) = L_h x`.
    pub fn grad_deterministic(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(x.iter().map(|&v| self.reg_strength * v).collect())
    }

    /// `grad psi(x) = grad F(x) + L_h x`.
    pub fn grad_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = vec![0.0; self.data.d];
        self.grad_full_into(x, &mut g);
        Ok(g)
    }

    pub(crate) fn grad_full_into(&self, x: &[f64], out: &mut [f64]) {
        self.grad_sg_term_into(x, out);
        axpy(self.reg_strength, x, out);
    }

    pub fn smoothness_profile(&self) -> SmoothnessProfile {
        let per_sample: Vec<f64> = self
            .data
            .rows()
            .map(|row| self.family.lipschitz_from_row_norm_sq(norm_sq(row)))
            .collect();
        let mean_sample = mean(&per_sample);
        SmoothnessProfile {
            per_sample,
            deterministic_term: self.reg_strength,
            convexity: self.reg_strength,
            mean_sample,
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `log(1 + exp(-z))` without overflow.
pub(crate) fn log1p_exp_neg(z: f64) -> f64 {
    if z >= 0.0 {
        libm::log1p(libm::exp(-z))
    } else {
        -z + libm::log1p(libm::exp(z))
    }
}

/// `1 / (1 + exp(z))`, branched like [`log1p_exp_neg`].
pub(crate) fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = libm::exp(-z);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(family: Family, a: Vec<f64>, b: f64, lh: f64) -> ProblemSpec {
        let data = Dataset::from_rows(vec![a], vec![b]).unwrap();
        ProblemSpec::new(family, data, lh).unwrap()
    }

    #[test]
    fn ridge_zero_residual_objective() {
        let p = single(Family::Ridge, vec![1.0, 0.0], 0.0, 2.0);
        assert_eq!(p.eval_objective(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn logistic_zero_row_gives_log2() {
        let p = single(Family::Logistic, vec![0.0, 0.0, 0.0], -1.0, 3.0);
        let x = [1.0, -2.0, 0.5];
        let expected = std::f64::consts::LN_2 + 1.5 * (1.0 + 4.0 + 0.25);
        assert!((p.eval_objective(&x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn logistic_scalar_value() {
        let p = single(Family::Logistic, vec![1.0, 0.0], 1.0, 1.0);
        let v = p.eval_objective(&[3.0, 0.0]).unwrap();
        // log1p(exp(-3)) + 4.5 to 40 digits: 4.548587351573742058758925919854689997942
        assert!((v - 4.548_587_351_573_742).abs() < 1e-14, "{v}");
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let p = single(Family::Logistic, vec![1.0], 1.0, 1.0);
        let big = p.loss_component(0, &[-800.0]).unwrap();
        assert_eq!(big, 800.0);
        let small = p.loss_component(0, &[800.0]).unwrap();
        assert!((0.0..1e-300).contains(&small));
        let g = p.grad_component(0, &[-800.0]).unwrap();
        assert_eq!(g, vec![-1.0]);
        let g = p.grad_component(0, &[800.0]).unwrap();
        assert!(g[0].is_finite() && g[0] <= 0.0);
    }

    #[test]
    fn grad_component_examples() {
        let ridge = single(Family::Ridge, vec![1.0, 0.0], 0.0, 1.0);
        assert_eq!(ridge.grad_component(0, &[2.0, 5.0]).unwrap(), vec![2.0, 0.0]);

        let logistic = single(Family::Logistic, vec![1.0, 0.0], 1.0, 1.0);
        assert_eq!(logistic.grad_component(0, &[0.0, 0.0]).unwrap(), vec![-0.5, 0.0]);

        let hinge = single(Family::HingeSq, vec![1.0, 0.0], 1.0, 1.0);
        assert_eq!(hinge.grad_component(0, &[2.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn logistic_gradient_matches_finite_difference_at_origin() {
        let p = single(Family::Logistic, vec![1.0, 0.0], 1.0, 1.0);
        let h = 1e-6;
        let fd = (p.loss_component(0, &[h, 0.0]).unwrap() - p.loss_component(0, &[-h, 0.0]).unwrap())
            / (2.0 * h);
        assert!((fd + 0.5).abs() < 1e-9);
    }

    #[test]
    fn ridge_full_gradient_by_hand() {
        let p = single(Family::Ridge, vec![1.0, 0.0], 1.0, 1.0);
        assert_eq!(p.grad_full(&[0.0, 0.0]).unwrap(), vec![-1.0, 0.0]);
    }

    #[test]
    fn logistic_all_zero_rows_full_gradient_is_regularizer() {
        let data = Dataset::from_rows(vec![vec![0.0; 3]; 4], vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        let p = ProblemSpec::new(Family::Logistic, data, 2.5).unwrap();
        let x = [1.0, -3.0, 0.25];
        assert_eq!(p.grad_full(&x).unwrap(), vec![2.5, -7.5, 0.625]);
    }

    #[test]
    fn dimension_and_index_errors() {
        let p = single(Family::Ridge, vec![1.0, 0.0], 0.0, 1.0);
        assert!(matches!(
            p.eval_objective(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(matches!(
            p.grad_component(1, &[0.0, 0.0]),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn classification_labels_are_validated() {
        let data = Dataset::from_rows(vec![vec![1.0]], vec![0.0]).unwrap();
        assert!(ProblemSpec::new(Family::Logistic, data.clone(), 1.0).is_err());
        assert!(ProblemSpec::new(Family::HingeSq, data.clone(), 1.0).is_err());
        assert!(ProblemSpec::new(Family::Ridge, data, 1.0).is_ok());
    }

    #[test]
    fn nonpositive_reg_strength_rejected() {
        let data = Dataset::from_rows(vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(ProblemSpec::new(Family::Ridge, data.clone(), 0.0).is_err());
        assert!(ProblemSpec::new(Family::Ridge, data, f64::NAN).is_err());
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::from_flat(0, 1, vec![], vec![]).is_err());
        assert!(Dataset::from_flat(1, 2, vec![1.0], vec![1.0]).is_err());
        assert!(Dataset::from_flat(1, 1, vec![f64::INFINITY], vec![1.0]).is_err());
        assert!(Dataset::from_rows(vec![vec![1.0, 2.0], vec![1.0]], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn smoothness_profile_per_family() {
        let p = single(Family::Logistic, vec![2.0, 0.0], 1.0, 0.5);
        let prof = p.smoothness_profile();
        assert_eq!(prof.per_sample(), &[1.0]);
        assert_eq!(prof.convexity(), 0.5);
        assert_eq!(prof.deterministic_term(), 0.5);

        let p = single(Family::HingeSq, vec![2.0, 1.0], 1.0, 0.5);
        assert_eq!(p.smoothness_profile().per_sample(), &[5.0]);

        let p = single(Family::Ridge, vec![0.0, 0.0], 1.0, 0.5);
        let prof = p.smoothness_profile();
        assert_eq!(prof.per_sample(), &[0.0]);
        assert_eq!(prof.degenerate_samples(), vec![0]);
    }

    #[test]
    fn profile_constructor_validates() {
        assert!(SmoothnessProfile::new(vec![1.0, -1.0], 1.0, 1.0).is_err());
        assert!(SmoothnessProfile::new(vec![1.0], 0.0, 1.0).is_err());
        assert!(SmoothnessProfile::new(vec![1.0], 1.0, 2.5).is_err());
        let p = SmoothnessProfile::new(vec![1.0, 3.0], 1.0, 3.0).unwrap();
        assert_eq!(p.mean_sample(), 2.0);
        assert_eq!(p.total(), 3.0);
        assert_eq!(p.max_sample(), 3.0);
    }

    #[test]
    fn family_parse_roundtrip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("lasso".parse::<Family>().is_err());
    }
}
