use serde::Serialize;

use super::{Branch, ClosedFormSolution, RegimeTag};
use crate::error::{Error, Result};

/// Optimal controls at one reserve level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyPoint {
    pub pi1: f64,
    pub pi2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub entropy_rate: f64,
}

impl StrategyPoint {
    pub fn swapped(&self) -> StrategyPoint {
        StrategyPoint {
            pi1: self.pi2,
            pi2: self.pi1,
            theta1: self.theta2,
            theta2: self.theta1,
            entropy_rate: self.entropy_rate,
        }
    }
}

/// Instantaneous relative-entropy rate `(theta1^2 + (theta2 - rho theta1)^2/(1 - rho^2))/2`.
pub fn entropy_rate(theta1: f64, theta2: f64, rho: f64) -> f64 {
    let d = theta2 - rho * theta1;
    0.5 * (theta1 * theta1 + d * d / (1.0 - rho * rho))
}

pub(super) fn strategy(s: &ClosedFormSolution, x: f64) -> Result<StrategyPoint> {
    if s.is_degenerate() {
        return Err(Error::Branch(
            "reinsurance and distortion are irrelevant in the degenerate regime".into(),
        ));
    }
    let p = &s.params;
    let t = s.thresholds.expect("nondegenerate");
    let g1 = s.regime.gamma1.unwrap_or(0.0);
    let x = x.max(0.0);
    let (mut pi1, mut pi2, mut k1, mut k2);
    if x < t.w0 {
        pi1 = x / t.w1;
        pi2 = x / t.w2;
        k1 = g1 / t.w1;
        k2 = g1 / t.w2;
    } else {
        pi1 = t.p1;
        pi2 = t.p2;
        let scale = if x < s.bstar {
            s.v(x)
        } else {
            1.0 / (x - s.bstar + s.k4)
        };
        k1 = t.p1 * scale;
        k2 = t.p2 * scale;
    }
    match s.regime.tag {
        RegimeTag::Line1FullCession => {
            pi1 = 0.0;
            k1 = 0.0;
        }
        RegimeTag::Line2FullCession => {
            pi2 = 0.0;
            k2 = 0.0;
        }
        _ => {}
    }
    if s.branch == Branch::Benchmark {
        k1 = 0.0;
        k2 = 0.0;
    }
    let theta1 = p.beta1 * p.sigma1 * k1;
    let theta2 = p.beta2 * p.sigma2 * k2;
    Ok(StrategyPoint {
        pi1,
        pi2,
        theta1,
        theta2,
        entropy_rate: entropy_rate(theta1, theta2, p.rho),
    })
}
