//! No-ambiguity benchmark (`beta1 = beta2 = 0`), solved without root finding.

use super::{compute_thresholds, gamma2, ClosedFormSolution, RegimeTag, RootPolicy};
use crate::error::{Error, Result};
use crate::model::{canonicalize, ModelParams};

/// Explicit `gamma1` of the benchmark.
pub fn benchmark_gamma1(p: &ModelParams) -> f64 {
    let (s1, s2) = (p.sigma1, p.sigma2);
    let ss = s1 * s1 * s2 * s2;
    let q = 1.0 - p.rho * p.rho;
    let k = 2.0 * p.delta * ss * q;
    let diff = p.mu1 * s2 - p.mu2 * s1;
    k / (diff * diff + 2.0 * (1.0 - p.rho) * (p.mu1 * s2) * (p.mu2 * s1) + k)
}

/// `0 < rho <= S <= 1/rho` or `rho <= 0`, with `S` the Sharpe-ratio ratio.
pub fn benchmark_hypothesis(p: &ModelParams) -> bool {
    let s = p.sharpe_ratio();
    p.rho <= 0.0 || (p.rho <= s && s <= 1.0 / p.rho)
}

/// Benchmark solution; fails with a hypothesis error outside the Sharpe-ratio sandwich.
pub fn benchmark_no_uncertainty(params: &ModelParams) -> Result<ClosedFormSolution> {
    if !params.no_uncertainty() {
        return Err(Error::Hypothesis("benchmark needs beta1 = beta2 = 0".into()));
    }
    let (p, swapped) = canonicalize(params);
    if !benchmark_hypothesis(&p) {
        return Err(Error::Hypothesis(format!(
            "rho = {} with Sharpe ratio {} outside [rho, 1/rho]",
            p.rho,
            p.sharpe_ratio()
        )));
    }
    build(p, swapped, benchmark_gamma1(&p), RootPolicy::Smallest)
}

pub(super) fn build(p: ModelParams, swapped: bool, gamma1: f64, policy: RootPolicy) -> Result<ClosedFormSolution> {
    let t = compute_thresholds(&p, gamma1, RegimeTag::NoUncertainty)?;
    let (gp, gm) = gamma2(&t, p.delta)?;
    let bstar = t.w0 + (-gm / gp).ln() / (gp - gm);
    let y = bstar - t.w0;
    let lambda = -(p.a2 / (gp * gm)) / ((gp * y).exp() + (gm * y).exp());
    Ok(ClosedFormSolution::benchmark_parts(
        p, swapped, gamma1, policy, t, gp, gm, bstar, lambda,
    ))
}

pub(super) fn g_region(s: &ClosedFormSolution, region: u8, x: f64) -> (f64, f64, f64) {
    let t = s.thresholds.expect("benchmark thresholds");
    let lambda = s.lambda.unwrap_or(f64::NAN);
    let g1 = s.regime.gamma1.unwrap_or(f64::NAN);
    let (gp, gm) = (s.gamma2_plus, s.gamma2_minus);
    match region {
        1 => {
            let g = 2.0 * lambda * (1.0 - g1) / t.w0 * (x / t.w0).powf(g1);
            (g, g1 * g / x, g1 * (g1 - 1.0) * g / (x * x))
        }
        2 => {
            let y = x - t.w0;
            let (ep, em) = ((gp * y).exp(), (gm * y).exp());
            (
                -lambda * (gm * ep + gp * em),
                -lambda * gp * gm * (ep + em),
                -lambda * gp * gm * (gp * ep + gm * em),
            )
        }
        _ => {
            let a2 = s.params.a2;
            (a2 * (x - s.bstar + t.n2 / s.params.delta), a2, 0.0)
        }
    }
}

pub(super) fn g_all(s: &ClosedFormSolution, x: f64) -> (f64, f64, f64) {
    let region = if x < s.w0() {
        1
    } else if x < s.bstar {
        2
    } else {
        3
    };
    g_region(s, region, x)
}
