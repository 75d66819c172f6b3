use structsgd::data::{gen_synthetic, solve_reference, SyntheticSpec, DEFAULT_REFERENCE_MAX_ITERS};
use structsgd::linalg::norm;
use structsgd::theory::cor3_condition;
use structsgd::{Family, ProblemSpec, SamplingScheme};

fn logistic(n: usize, d: usize, seed: u64, lh: f64) -> ProblemSpec {
    let data = gen_synthetic(&SyntheticSpec { n, d, seed, family: Family::Logistic }).unwrap();
    ProblemSpec::new(Family::Logistic, data, lh).unwrap()
}

#[test]
fn setup_at_dimension_100_matches_reported_smoothness() {
    let n = 10_000;
    let p = logistic(n, 100, 2024, 25.0);
    let prof = p.smoothness_profile();
    // L_i = chi2_100 / 4
    let se_mean = (200.0f64).sqrt() / 4.0 / (n as f64).sqrt();
    assert!((prof.mean_sample() - 25.002).abs() <= 3.0 * se_mean, "L_F = {}", prof.mean_sample());

    let two_mean_sq = 2.0 * prof.per_sample().iter().map(|l| l * l).sum::<f64>() / n as f64;
    // Var(chi2_k^2) = k(k+2)(k+4)(k+6) - (k(k+2))^2, scaled by 2/16
    let k = 100.0f64;
    let var = k * (k + 2.0) * (k + 4.0) * (k + 6.0) - (k * (k + 2.0)).powi(2);
    let se = 2.0 / 16.0 * var.sqrt() / (n as f64).sqrt();
    assert!((two_mean_sq - 1275.233).abs() <= 3.0 * se, "{two_mean_sq}");
    let scheme = SamplingScheme::uniform(n, 1).unwrap();
    assert!(!cor3_condition(&prof, &scheme).unwrap());
}

#[test]
fn desk_logistic_reference_meets_tolerance() {
    for lh in [1.0, 10.0] {
        let p = logistic(10_000, 20, 1, lh);
        let r = solve_reference(&p, 1e-12, DEFAULT_REFERENCE_MAX_ITERS).unwrap();
        assert!(r.grad_norm <= 1e-12, "{}", r.grad_norm);
        let recomputed = norm(&p.grad_full(&r.x_star).unwrap());
        assert_eq!(recomputed, r.grad_norm);
    }
}
