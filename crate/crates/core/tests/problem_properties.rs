use proptest::prelude::*;

use structsgd::linalg::{dist_sq, dot, norm, norm_sq};
use structsgd::{Dataset, Family, ProblemSpec};

#[derive(Debug, Clone)]
struct Case {
    problem: ProblemSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Ridge), Just(Family::Logistic), Just(Family::HingeSq)]
}

fn case() -> impl Strategy<Value = Case> {
    (family(), 1usize..6, 1usize..5, 0.01f64..10.0).prop_flat_map(|(family, n, d, lh)| {
        let rows = prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n);
        let labels = prop::collection::vec(
            if family.is_classification() {
                prop_oneof![Just(1.0), Just(-1.0)].boxed()
            } else {
                (-3.0f64..3.0).boxed()
            },
            n,
        );
        let point = || prop::collection::vec(-3.0f64..3.0, d);
        (rows, labels, point(), point()).prop_map(move |(rows, labels, x, y)| Case {
            problem: ProblemSpec::new(family, Dataset::from_rows(rows, labels).unwrap(), lh).unwrap(),
            x,
            y,
        })
    })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Hinge-squared has a second-derivative jump at margin 1; finite differences
/// straddling it are only first-order accurate.
fn near_kink(p: &ProblemSpec, x: &[f64]) -> bool {
    p.family() == Family::HingeSq
        && (0..p.n()).any(|i| (1.0 - p.data().label(i) * dot(p.data().row(i), x)).abs() < 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn gradient_matches_central_differences(c in case()) {
        prop_assume!(!near_kink(&c.problem, &c.x));
        let p = &c.problem;
        let g = p.grad_full(&c.x).unwrap();
        let h = 1e-5;
        let mut diff = Vec::with_capacity(g.len());
        for j in 0..g.len() {
            let mut xp = c.x.clone();
            let mut xm = c.x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (p.eval_objective(&xp).unwrap() - p.eval_objective(&xm).unwrap()) / (2.0 * h);
            diff.push(fd - g[j]);
        }
        let scale = norm(&g).max((g.len() as f64).sqrt());
        prop_assert!(norm(&diff) / scale <= 1e-6, "rel err {}", norm(&diff) / scale);
    }

    #[test]
    fn components_obey_their_smoothness_constants(c in case()) {
        let p = &c.problem;
        let prof = p.smoothness_profile();
        let step = sub(&c.y, &c.x);
        let dsq = norm_sq(&step);
        for i in 0..p.n() {
            let fx = p.loss_component(i, &c.x).unwrap();
            let fy = p.loss_component(i, &c.y).unwrap();
            let gx = p.grad_component(i, &c.x).unwrap();
            let gap = (fy - fx - dot(&gx, &step)).abs();
            let bound = prof.per_sample()[i] / 2.0 * dsq;
            prop_assert!(gap <= bound + 1e-9 * (1.0 + fx.abs() + fy.abs()), "i={i}: {gap} > {bound}");
        }
        let hx = p.eval_deterministic(&c.x).unwrap();
        let hy = p.eval_deterministic(&c.y).unwrap();
        let gh = p.grad_deterministic(&c.x).unwrap();
        let gap = (hy - hx - dot(&gh, &step)).abs();
        prop_assert!(gap <= p.reg_strength() / 2.0 * dsq * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn strong_convexity_and_lipschitz_gradient(c in case()) {
        let p = &c.problem;
        let prof = p.smoothness_profile();
        let lambda = prof.convexity();
        let big_l = prof.total();
        let gx = p.grad_full(&c.x).unwrap();
        let gy = p.grad_full(&c.y).unwrap();
        let dist = dist_sq(&c.x, &c.y).sqrt();
        let gdist = dist_sq(&gx, &gy).sqrt();
        let tol = 1e-10 * (1.0 + norm(&gx) + norm(&gy));
        prop_assert!(lambda * dist <= gdist + tol, "{} > {}", lambda * dist, gdist);
        prop_assert!(gdist <= big_l * dist + tol, "{} > {}", gdist, big_l * dist);

        // quadratic lower bound from strong convexity
        let step = sub(&c.y, &c.x);
        let px = p.eval_objective(&c.x).unwrap();
        let py = p.eval_objective(&c.y).unwrap();
        let lower = px + dot(&gx, &step) + lambda / 2.0 * dist * dist;
        prop_assert!(py >= lower - 1e-9 * (1.0 + px.abs() + py.abs()), "{py} < {lower}");
    }

    #[test]
    fn gradient_coercivity(c in case()) {
        let p = &c.problem;
        let prof = p.smoothness_profile();
        let (lambda, big_l) = (prof.convexity(), prof.total());
        let gx = p.grad_full(&c.x).unwrap();
        let gy = p.grad_full(&c.y).unwrap();
        let dg = sub(&gx, &gy);
        let dx = sub(&c.x, &c.y);
        let lhs = dot(&dg, &dx);
        let rhs = lambda * big_l / (lambda + big_l) * norm_sq(&dx) + norm_sq(&dg) / (lambda + big_l);
        prop_assert!(lhs >= rhs - 1e-10 * (1.0 + lhs.abs()), "{lhs} < {rhs}");
    }

    #[test]
    fn full_gradient_is_component_average_plus_reg(c in case()) {
        let p = &c.problem;
        let n = p.n() as f64;
        let mut avg = vec![0.0; p.dim()];
        for i in 0..p.n() {
            for (a, g) in avg.iter_mut().zip(p.grad_component(i, &c.x).unwrap()) {
                *a += g;
            }
        }
        let full = p.grad_full(&c.x).unwrap();
        for (j, (a, f)) in avg.iter().zip(&full).enumerate() {
            let want = a / n + p.reg_strength() * c.x[j];
            let scale = want.abs().max(1e-300);
            prop_assert!((want - f).abs() <= 1e-12 * scale.max(1.0), "{want} vs {f}");
        }
    }
}
