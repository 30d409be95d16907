//! JSON solution documents in the caller's line labels.

use serde::{Deserialize, Serialize};

use crate::closed_form::{solve, ClosedFormSolution};
use crate::error::Result;
use crate::model::RawParams;

/// Everything `solve` reports, with line indices translated back. Feeding
/// `params` back in reproduces the document exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDoc {
    pub params: RawParams,
    pub regime: String,
    pub branch: String,
    pub gamma1: Option<f64>,
    pub gamma1_roots: Vec<f64>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub w0: Option<f64>,
    #[serde(rename = "N1")]
    pub n1: Option<f64>,
    #[serde(rename = "N2")]
    pub n2: Option<f64>,
    #[serde(rename = "N3")]
    pub n3: Option<f64>,
    pub gamma2_plus: Option<f64>,
    pub gamma2_minus: Option<f64>,
    #[serde(rename = "K3")]
    pub k3: Option<f64>,
    #[serde(rename = "K4")]
    pub k4: Option<f64>,
    pub lambda: Option<f64>,
    pub bstar: f64,
    pub swapped: bool,
}

impl SolveDoc {
    pub fn new(raw: &RawParams, sol: &ClosedFormSolution) -> SolveDoc {
        let t = sol.thresholds;
        let (w1, w2) = match t {
            Some(t) if sol.swapped => (Some(t.w2), Some(t.w1)),
            Some(t) => (Some(t.w1), Some(t.w2)),
            None => (None, None),
        };
        let live = !sol.is_degenerate();
        SolveDoc {
            params: *raw,
            regime: sol.reported_tag().name().to_string(),
            branch: format!("{:?}", sol.branch),
            gamma1: sol.gamma1(),
            gamma1_roots: sol.gamma1_roots.clone(),
            w1,
            w2,
            w0: t.map(|t| t.w0),
            n1: t.map(|t| t.n1),
            n2: t.map(|t| t.n2),
            n3: t.map(|t| t.n3),
            gamma2_plus: live.then_some(sol.gamma2_plus),
            gamma2_minus: live.then_some(sol.gamma2_minus),
            k3: sol.k3,
            k4: live.then_some(sol.k4),
            lambda: sol.lambda,
            bstar: sol.bstar,
            swapped: sol.swapped,
        }
    }

    /// Validate, solve and document `raw`.
    pub fn solve(raw: &RawParams) -> Result<SolveDoc> {
        let sol = solve(&raw.validate()?)?;
        Ok(SolveDoc::new(raw, &sol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swapped_input_reports_caller_labels() {
        let raw = RawParams::base();
        let flipped = RawParams {
            mu1: raw.mu2,
            mu2: raw.mu1,
            sigma1: raw.sigma2,
            sigma2: raw.sigma1,
            a1: 0.7,
            a2: Some(0.3),
            ..raw
        };
        let a = SolveDoc::solve(&raw).unwrap();
        let b = SolveDoc::solve(&flipped).unwrap();
        assert!(b.swapped && !a.swapped);
        assert_eq!((a.w1, a.w2), (b.w2, b.w1));
        assert_eq!(a.w0, b.w0);
        assert_eq!(a.bstar, b.bstar);
    }

    #[test]
    fn json_round_trip() {
        let doc = SolveDoc::solve(&RawParams::base().with_betas(0.3, 2.0)).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        let back: SolveDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(SolveDoc::solve(&back.params).unwrap(), doc);
    }

    #[test]
    fn degenerate_document() {
        let doc = SolveDoc::solve(&RawParams {
            delta: 100.0,
            ..RawParams::base()
        })
        .unwrap();
        assert_eq!(doc.regime, "Degenerate");
        assert_eq!(doc.bstar, 0.0);
        assert_eq!(doc.w0, None);
    }
}
