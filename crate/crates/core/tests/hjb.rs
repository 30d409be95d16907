//! Verifier checks against an independent region-1 oracle.
//!
//! Below the threshold `g = K x^gamma` and `pi_i = x u_i`. With the analytic
//! inner minimizer the operator becomes
//! `x^gamma (gamma mu'u - gamma u'A u/2 - delta)`, `A = (1-gamma) Sigma + gamma diag(beta sigma^2)`,
//! so the outer sup is `gamma mu'A^{-1}mu/2 - delta`, attained at `u = A^{-1} mu`.

use robust_dividend::closed_form::{general_w, solve, ClosedFormSolution, Regime, RegimeTag, RootPolicy};
use robust_dividend::model::{ModelParams, RawParams};
use robust_dividend::verify::{hjb_residual, saddle_check, saddle_check_oriented, Operator, VerifyConfig};

fn base() -> ModelParams {
    RawParams::base().validate().unwrap()
}

fn a_inv_mu(p: &ModelParams, g: f64) -> [f64; 2] {
    let c = p.rho * p.sigma1 * p.sigma2;
    let a11 = (1.0 - g) * p.sigma1 * p.sigma1 + g * p.beta1 * p.sigma1 * p.sigma1;
    let a22 = (1.0 - g) * p.sigma2 * p.sigma2 + g * p.beta2 * p.sigma2 * p.sigma2;
    let a12 = (1.0 - g) * c;
    let det = a11 * a22 - a12 * a12;
    [(a22 * p.mu1 - a12 * p.mu2) / det, (a11 * p.mu2 - a12 * p.mu1) / det]
}

fn region1_excess(p: &ModelParams, g: f64) -> f64 {
    let u = a_inv_mu(p, g);
    0.5 * g * (p.mu1 * u[0] + p.mu2 * u[1]) - p.delta
}

fn consistent_gamma(p: &ModelParams) -> f64 {
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if region1_excess(p, m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn built_at(p: &ModelParams, gamma: f64) -> ClosedFormSolution {
    let regime = Regime {
        tag: RegimeTag::GeneralInteriorNeq,
        gamma1: Some(gamma),
    };
    ClosedFormSolution::build(p, false, regime, vec![gamma], RootPolicy::Smallest).unwrap()
}

fn region1_residual(sol: &ClosedFormSolution, n: usize) -> f64 {
    let w0 = sol.w0();
    (1..n)
        .map(|k| {
            let op = Operator::at(sol, w0 * k as f64 / n as f64);
            op.sup_inner(65).0.abs() / op.scale()
        })
        .fold(0.0, f64::max)
}

#[test]
fn thresholds_are_the_unconstrained_maximizers() {
    let p = base();
    for g in [0.05, 0.131, 0.3, 0.6, 0.9] {
        let (w1, w2) = general_w(&p, g);
        let u = a_inv_mu(&p, g);
        assert!((w1 * u[0] - 1.0).abs() < 1e-12, "gamma {g}: w1 {w1} vs {}", 1.0 / u[0]);
        assert!((w2 * u[1] - 1.0).abs() < 1e-12, "gamma {g}: w2 {w2} vs {}", 1.0 / u[1]);
    }
}

#[test]
fn consistent_root_value() {
    let g = consistent_gamma(&base());
    assert!((g - 0.131_200_584).abs() < 1e-8, "{g}");
}

#[test]
fn verifier_certifies_a_consistent_region_one() {
    let p = base();
    let sol = built_at(&p, consistent_gamma(&p));
    let r = region1_residual(&sol, 200);
    assert!(r < 1e-10, "{r}");
    // and the inner/outer optimizers agree with the feedback map
    let x = 0.5 * sol.w0();
    let op = Operator::at(&sol, x);
    let (_, pi) = op.sup_inner(65);
    let s = sol.strategy(x).unwrap();
    assert!((pi[0] - s.pi1).abs() < 1e-9 && (pi[1] - s.pi2).abs() < 1e-9);
    let th = op.theta_hat(pi);
    assert!((th[0] - s.theta1).abs() < 1e-9 && (th[1] - s.theta2).abs() < 1e-9);
}

#[test]
fn verifier_flags_the_quartic_root_in_region_one() {
    let sol = solve(&base()).unwrap();
    assert!(region1_excess(&sol.params, sol.gamma1().unwrap()).abs() > 1e-2);
    assert!(region1_residual(&sol, 200) > 1e-2);
}

#[test]
fn saddle_orientation_is_distinguished() {
    let p = base();
    let sol = built_at(&p, consistent_gamma(&p));
    let cfg = VerifyConfig::default();
    let xs: Vec<f64> = (1..20).map(|k| sol.w0() * k as f64 / 20.0).collect();
    assert_eq!(saddle_check(&sol, &cfg, &xs), 0);
    assert!(saddle_check_oriented(&sol, &cfg, &xs, true) > 0);
}

#[test]
fn residual_does_not_blow_up_under_refinement() {
    for raw in [
        RawParams::base(),
        RawParams::base().with_betas(0.0, 1.0),
        RawParams {
            rho: 0.0,
            ..RawParams::base()
        },
    ] {
        let sol = solve(&raw.validate().unwrap()).unwrap();
        let coarse = VerifyConfig {
            residual_points: 256,
            ..Default::default()
        };
        let fine = VerifyConfig {
            residual_points: 512,
            ..Default::default()
        };
        let (a, b) = (
            hjb_residual(&sol, &coarse).max_hjb_residual,
            hjb_residual(&sol, &fine).max_hjb_residual,
        );
        assert!(b <= 2.0 * a + 1e-12, "{raw:?}: {a} -> {b}");
    }
}

#[test]
fn inner_minimizer_is_strict() {
    let sol = solve(&base()).unwrap();
    let x = sol.w0();
    let op = Operator::at(&sol, x);
    let s = sol.strategy(x).unwrap();
    let pi = [s.pi1, s.pi2];
    let th = [s.theta1, s.theta2];
    assert!(op.value(pi, [1.1 * th[0], 1.1 * th[1]]) > op.value(pi, th));
}

#[test]
fn no_retention_is_pure_discounting() {
    let sol = solve(&base()).unwrap();
    for x in [0.3, 1.0, 1.5] {
        let op = Operator::at(&sol, x);
        let v = op.inner_min([0.0, 0.0]);
        assert!((v + sol.params.delta * op.g).abs() < 1e-12 && v < 0.0);
    }
}

#[test]
fn equilibrium_pair_solves_the_equation_mid_barrier() {
    let sol = solve(&base()).unwrap();
    let x = 0.5 * sol.bstar;
    let op = Operator::at(&sol, x);
    let s = sol.strategy(x).unwrap();
    let v = op.value([s.pi1, s.pi2], [s.theta1, s.theta2]);
    assert!(v.abs() / op.scale() < 1e-9, "{}", v / op.scale());
}

#[test]
fn linear_tail_has_unit_dividend_gradient() {
    let sol = solve(&base()).unwrap();
    let op = Operator::at(&sol, 1.5 * sol.bstar);
    assert!((sol.params.a2 - op.gp).abs() < 1e-10);
}

#[test]
fn theta_decreases_beyond_threshold() {
    let sol = solve(&base()).unwrap();
    let w0 = sol.w0();
    assert!(sol.strategy(2.0 * w0).unwrap().theta1 > sol.strategy(4.0 * w0).unwrap().theta1);
}

#[test]
fn degenerate_sup_is_nonpositive() {
    let sol = solve(
        &RawParams {
            delta: 100.0,
            ..RawParams::base()
        }
        .validate()
        .unwrap(),
    )
    .unwrap();
    let rep = hjb_residual(&sol, &VerifyConfig::default());
    assert!(rep.degenerate);
    assert!(rep.max_tail_sup <= 0.0, "{}", rep.max_tail_sup);
}
