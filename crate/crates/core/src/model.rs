//! Model parameters, validation and the `a1 <= a2` relabeling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw scalar inputs as they appear in a JSON config.
///
/// `beta1`/`beta2` are the per-line robustness parameters `beta_i` (not the
/// weighted `beta_tilde_i = a_i * beta_i`). `a2` defaults to `1 - a1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub delta: f64,
    pub a1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
}

impl RawParams {
    /// Base parameters of the two-line reference configuration, with `beta = (1, 1)`.
    pub fn base() -> Self {
        RawParams {
            mu1: 4.0,
            mu2: 2.0,
            sigma1: 1.5,
            sigma2: 1.0,
            rho: 0.6,
            delta: 0.5,
            a1: 0.3,
            a2: Some(0.7),
            beta1: 1.0,
            beta2: 1.0,
        }
    }

    /// Symmetric configuration: equal drifts and volatilities.
    pub fn symmetric() -> Self {
        RawParams {
            mu1: 2.0,
            mu2: 2.0,
            sigma1: 1.0,
            sigma2: 1.0,
            ..Self::base()
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn validate(&self) -> Result<ModelParams> {
        validate(self)
    }
}

/// Validated parameters. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub delta: f64,
    pub a1: f64,
    pub a2: f64,
    pub beta_tilde1: f64,
    pub beta_tilde2: f64,
    pub beta1: f64,
    pub beta2: f64,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}

/// Validate raw inputs and derive `beta_tilde_i = a_i beta_i`, `beta_i = beta_tilde_i / a_i`.
pub fn validate(raw: &RawParams) -> Result<ModelParams> {
    let a2 = raw.a2.unwrap_or(1.0 - raw.a1);
    let named = [
        ("mu1", raw.mu1),
        ("mu2", raw.mu2),
        ("sigma1", raw.sigma1),
        ("sigma2", raw.sigma2),
        ("rho", raw.rho),
        ("delta", raw.delta),
        ("a1", raw.a1),
        ("a2", a2),
        ("beta1", raw.beta1),
        ("beta2", raw.beta2),
    ];
    for (name, v) in named {
        check(v.is_finite(), || format!("{name} must be finite, got {v}"))?;
    }
    check(raw.sigma1 > 0.0, || format!("sigma1 must be > 0, got {}", raw.sigma1))?;
    check(raw.sigma2 > 0.0, || format!("sigma2 must be > 0, got {}", raw.sigma2))?;
    check(raw.delta > 0.0, || format!("delta must be > 0, got {}", raw.delta))?;
    check(raw.rho > -1.0 && raw.rho < 1.0, || {
        format!("rho out of (-1,1): {}", raw.rho)
    })?;
    check(raw.mu1 > 0.0, || format!("mu1 must be > 0, got {}", raw.mu1))?;
    check(raw.mu2 > 0.0, || format!("mu2 must be > 0, got {}", raw.mu2))?;
    check(raw.a1 > 0.0 && raw.a1 < 1.0, || format!("a1 out of (0,1): {}", raw.a1))?;
    check(a2 > 0.0 && a2 < 1.0, || format!("a2 out of (0,1): {a2}"))?;
    check(raw.beta1 >= 0.0, || format!("beta1 must be >= 0, got {}", raw.beta1))?;
    check(raw.beta2 >= 0.0, || format!("beta2 must be >= 0, got {}", raw.beta2))?;
    if (raw.a1 + a2 - 1.0).abs() > 1e-12 {
        return Err(Error::Weights(format!(
            "a1 + a2 must equal 1, got {} + {} = {}",
            raw.a1,
            a2,
            raw.a1 + a2
        )));
    }
    let beta_tilde1 = raw.a1 * raw.beta1;
    let beta_tilde2 = a2 * raw.beta2;
    Ok(ModelParams {
        mu1: raw.mu1,
        mu2: raw.mu2,
        sigma1: raw.sigma1,
        sigma2: raw.sigma2,
        rho: raw.rho,
        delta: raw.delta,
        a1: raw.a1,
        a2,
        beta_tilde1,
        beta_tilde2,
        beta1: beta_tilde1 / raw.a1,
        beta2: beta_tilde2 / a2,
    })
}

impl ModelParams {
    /// Relabel line 1 as line 2 and vice versa. `rho` is unchanged.
    pub fn swap_lines(&self) -> ModelParams {
        ModelParams {
            mu1: self.mu2,
            mu2: self.mu1,
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            rho: self.rho,
            delta: self.delta,
            a1: self.a2,
            a2: self.a1,
            beta_tilde1: self.beta_tilde2,
            beta_tilde2: self.beta_tilde1,
            beta1: self.beta2,
            beta2: self.beta1,
        }
    }

    /// Ratio of Sharpe ratios `(mu1/sigma1) / (mu2/sigma2)`.
    pub fn sharpe_ratio(&self) -> f64 {
        (self.mu1 / self.sigma1) / (self.mu2 / self.sigma2)
    }

    pub fn no_uncertainty(&self) -> bool {
        self.beta_tilde1 == 0.0 && self.beta_tilde2 == 0.0
    }

    pub fn to_raw(&self) -> RawParams {
        RawParams {
            mu1: self.mu1,
            mu2: self.mu2,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            rho: self.rho,
            delta: self.delta,
            a1: self.a1,
            a2: Some(self.a2),
            beta1: self.beta1,
            beta2: self.beta2,
        }
    }
}

/// Put the line with the smaller weight first. Ties keep the input order.
pub fn canonicalize(params: &ModelParams) -> (ModelParams, bool) {
    if params.a1 > params.a2 {
        (params.swap_lines(), true)
    } else {
        (*params, false)
    }
}

/// `delta < mu1^2/(2 beta1 sigma1^2) + mu2^2/(2 beta2 sigma2^2)`, with a zero beta
/// contributing an infinite term.
pub fn existence_condition(p: &ModelParams) -> bool {
    let term = |mu: f64, sigma: f64, beta: f64| {
        if beta == 0.0 {
            f64::INFINITY
        } else {
            mu * mu / (2.0 * beta * sigma * sigma)
        }
    };
    p.delta < term(p.mu1, p.sigma1, p.beta1) + term(p.mu2, p.sigma2, p.beta2)
}
