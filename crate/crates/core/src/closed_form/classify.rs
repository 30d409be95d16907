//! Regime classification and root selection.

use serde::Serialize;

use super::{benchmark, compute_thresholds, Regime, RegimeTag};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::psi::{find_gamma1, PsiVariant};

/// Which root of `psi` becomes `gamma1` when several lie in (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub enum RootPolicy {
    #[default]
    Smallest,
    Largest,
    /// Root whose threshold `w0` is closest to a reference value.
    BestTableMatch {
        w0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub regime: Regime,
    /// Roots of the governing `psi` (empty for the benchmark).
    pub roots: Vec<f64>,
    pub variant: Option<PsiVariant>,
}

/// `(left, right)` halves of `rho/(1 + b2 g/(1-g)) <= S <= (1 + b1 g/(1-g))/rho`.
/// Both hold trivially for `rho <= 0`.
pub fn sandwich(p: &ModelParams, gamma1: f64) -> (bool, bool) {
    if p.rho <= 0.0 {
        return (true, true);
    }
    let s = p.sharpe_ratio();
    let k = gamma1 / (1.0 - gamma1);
    let left = p.rho / (1.0 + p.beta2 * k) <= s;
    let right = s <= (1.0 + p.beta1 * k) / p.rho;
    (left, right)
}

// The cession variant's own defining condition.
fn variant_condition(p: &ModelParams, variant: PsiVariant, gamma1: f64) -> bool {
    let (left, right) = sandwich(p, gamma1);
    match variant {
        PsiVariant::Line1Ceded => !left,
        PsiVariant::Line2Ceded => !right,
        PsiVariant::General => left && right,
    }
}

fn cession_tag(variant: PsiVariant) -> RegimeTag {
    match variant {
        PsiVariant::Line1Ceded => RegimeTag::Line1FullCession,
        PsiVariant::Line2Ceded => RegimeTag::Line2FullCession,
        PsiVariant::General => RegimeTag::GeneralInteriorNeq,
    }
}

/// Pick `gamma1` from a nonempty root list.
pub fn gamma1_select(roots: &[f64], params: &ModelParams, tag: RegimeTag, policy: RootPolicy) -> Option<f64> {
    match policy {
        RootPolicy::Smallest => roots.first().copied(),
        RootPolicy::Largest => roots.last().copied(),
        RootPolicy::BestTableMatch { w0 } => roots
            .iter()
            .filter_map(|&g| compute_thresholds(params, g, tag).ok().map(|t| (g, (t.w0 - w0).abs())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(g, _)| g)
            .or_else(|| roots.first().copied()),
    }
}

fn pick(p: &ModelParams, variant: PsiVariant, policy: RootPolicy) -> Result<(Vec<f64>, Option<f64>)> {
    let roots = find_gamma1(p, variant)?;
    let g = gamma1_select(&roots, p, cession_tag(variant), policy);
    Ok((roots, g))
}

fn found(tag: RegimeTag, gamma1: f64, roots: Vec<f64>, variant: PsiVariant) -> Classification {
    Classification {
        regime: Regime {
            tag,
            gamma1: Some(gamma1),
        },
        roots,
        variant: Some(variant),
    }
}

fn degenerate(roots: Vec<f64>) -> Classification {
    Classification {
        regime: Regime {
            tag: RegimeTag::Degenerate,
            gamma1: None,
        },
        roots,
        variant: None,
    }
}

/// Classify canonical parameters.
///
/// The interior tag returned here is provisional (`GeneralInteriorNeq`); the
/// `N1` vs `N3` split is made once thresholds are known.
pub fn classify_regime(p: &ModelParams, policy: RootPolicy) -> Result<Classification> {
    if p.no_uncertainty() {
        if benchmark::benchmark_hypothesis(p) {
            return Ok(Classification {
                regime: Regime {
                    tag: RegimeTag::NoUncertainty,
                    gamma1: Some(benchmark::benchmark_gamma1(p)),
                },
                roots: Vec::new(),
                variant: None,
            });
        }
        // Outside the hypothesis one line cedes everything; with beta = 0 the
        // side is fixed by the Sharpe ratio alone.
        let variant = if p.rho > p.sharpe_ratio() {
            PsiVariant::Line1Ceded
        } else {
            PsiVariant::Line2Ceded
        };
        let (roots, g) = pick(p, variant, policy)?;
        return Ok(match g {
            Some(g) => found(cession_tag(variant), g, roots, variant),
            None => degenerate(roots),
        });
    }

    let (roots, g) = pick(p, PsiVariant::General, policy)?;
    let Some(g) = g else {
        for variant in [PsiVariant::Line1Ceded, PsiVariant::Line2Ceded] {
            let (r, gv) = pick(p, variant, policy)?;
            if let Some(gv) = gv {
                if variant_condition(p, variant, gv) {
                    return Ok(found(cession_tag(variant), gv, r, variant));
                }
            }
        }
        return Ok(degenerate(roots));
    };

    let (left, right) = sandwich(p, g);
    if left && right {
        return Ok(found(RegimeTag::GeneralInteriorNeq, g, roots, PsiVariant::General));
    }
    let variant = if !left {
        PsiVariant::Line1Ceded
    } else {
        PsiVariant::Line2Ceded
    };
    let (r, gv) = pick(p, variant, policy)?;
    match gv {
        Some(gv) if variant_condition(p, variant, gv) => Ok(found(cession_tag(variant), gv, r, variant)),
        _ => Err(Error::Classification {
            general: g,
            variant: variant.name(),
            recomputed: gv,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;

    #[test]
    fn base_is_interior() {
        let p = RawParams::base().validate().unwrap();
        let c = classify_regime(&p, RootPolicy::Smallest).unwrap();
        assert_eq!(c.regime.tag, RegimeTag::GeneralInteriorNeq);
        assert_eq!(c.variant, Some(PsiVariant::General));
    }

    #[test]
    fn small_sharpe_cedes_line1() {
        let p = RawParams {
            mu1: 0.5,
            ..RawParams::base()
        }
        .validate()
        .unwrap();
        let c = classify_regime(&p, RootPolicy::Smallest).unwrap();
        assert_eq!(c.regime.tag, RegimeTag::Line1FullCession);
    }

    #[test]
    fn large_sharpe_cedes_line2() {
        let p = RawParams {
            mu1: 40.0,
            ..RawParams::base()
        }
        .validate()
        .unwrap();
        let c = classify_regime(&p, RootPolicy::Smallest).unwrap();
        assert_eq!(c.regime.tag, RegimeTag::Line2FullCession);
    }

    #[test]
    fn zero_beta_is_benchmark() {
        let p = RawParams::base().with_betas(0.0, 0.0).validate().unwrap();
        let c = classify_regime(&p, RootPolicy::Smallest).unwrap();
        assert_eq!(c.regime.tag, RegimeTag::NoUncertainty);
    }

    #[test]
    fn select_policies() {
        let p = RawParams::base().validate().unwrap();
        let t = RegimeTag::GeneralInteriorNeq;
        assert_eq!(gamma1_select(&[0.2], &p, t, RootPolicy::Smallest), Some(0.2));
        assert_eq!(gamma1_select(&[0.2, 0.4], &p, t, RootPolicy::Largest), Some(0.4));
        assert_eq!(gamma1_select(&[], &p, t, RootPolicy::Smallest), None);
    }
}
