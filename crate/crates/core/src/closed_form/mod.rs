//! Closed-form solution: thresholds, the Riccati function `v`, the dividend
//! barrier `b*`, the value function `g` and the optimal feedback strategies.
//!
//! Everything here works in canonical labels (`a1 <= a2`). The `swapped` flag
//! on [`ClosedFormSolution`] tells the reporting layer to translate back.

mod benchmark;
mod classify;
mod strategy;

use serde::{Deserialize, Serialize};

pub use benchmark::{benchmark_gamma1, benchmark_hypothesis, benchmark_no_uncertainty};
pub use classify::{classify_regime, gamma1_select, sandwich, Classification, RootPolicy};
pub use strategy::{entropy_rate, StrategyPoint};

use crate::error::{Error, Result};
use crate::model::{canonicalize, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "GeneralInterior_NeqCase")]
    GeneralInteriorNeq,
    #[serde(rename = "GeneralInterior_EqCase")]
    GeneralInteriorEq,
    Line1FullCession,
    Line2FullCession,
    Degenerate,
    NoUncertainty,
}

impl RegimeTag {
    pub fn name(self) -> &'static str {
        match self {
            RegimeTag::GeneralInteriorNeq => "GeneralInterior_NeqCase",
            RegimeTag::GeneralInteriorEq => "GeneralInterior_EqCase",
            RegimeTag::Line1FullCession => "Line1FullCession",
            RegimeTag::Line2FullCession => "Line2FullCession",
            RegimeTag::Degenerate => "Degenerate",
            RegimeTag::NoUncertainty => "NoUncertainty",
        }
    }

    pub fn parse(s: &str) -> Option<RegimeTag> {
        [
            RegimeTag::GeneralInteriorNeq,
            RegimeTag::GeneralInteriorEq,
            RegimeTag::Line1FullCession,
            RegimeTag::Line2FullCession,
            RegimeTag::Degenerate,
            RegimeTag::NoUncertainty,
        ]
        .into_iter()
        .find(|t| t.name() == s)
    }

    /// The same regime seen with line labels exchanged.
    pub fn swapped(self) -> RegimeTag {
        match self {
            RegimeTag::Line1FullCession => RegimeTag::Line2FullCession,
            RegimeTag::Line2FullCession => RegimeTag::Line1FullCession,
            t => t,
        }
    }

    pub fn is_interior(self) -> bool {
        matches!(self, RegimeTag::GeneralInteriorNeq | RegimeTag::GeneralInteriorEq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    /// Absent for the degenerate regime.
    pub gamma1: Option<f64>,
}

/// Which representation of `g` on `[w0, b*)` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `N1 != N3`: `v` is a ratio of exponentials.
    Neq,
    /// `N1 == N3`: `v` relaxes exponentially to `delta/N2`.
    Eq,
    /// No ambiguity: the explicit `lambda` representation.
    Benchmark,
    /// No threshold at all, `g(x) = a2 x`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub w1: f64,
    pub w2: f64,
    pub w0: f64,
    #[serde(rename = "N1")]
    pub n1: f64,
    #[serde(rename = "N2")]
    pub n2: f64,
    #[serde(rename = "N3")]
    pub n3: f64,
    /// Retained proportions at and beyond `w0`.
    pub p1: f64,
    pub p2: f64,
    // N1 - N3 summed term by term, free of cancellation
    #[serde(skip)]
    pub(crate) dn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormSolution {
    /// Canonical parameters (`a1 <= a2`).
    pub params: ModelParams,
    pub swapped: bool,
    pub regime: Regime,
    pub branch: Branch,
    pub gamma1_roots: Vec<f64>,
    pub root_policy: RootPolicy,
    pub thresholds: Option<Thresholds>,
    pub gamma2_plus: f64,
    pub gamma2_minus: f64,
    /// Pasting constant of the `N1 != N3` branch.
    #[serde(rename = "K3")]
    pub k3: Option<f64>,
    pub bstar: f64,
    /// `K4 = 1/v(b*)`.
    #[serde(rename = "K4")]
    pub k4: f64,
    /// Benchmark scale constant.
    pub lambda: Option<f64>,
    // K3 e^{(g+ - g-) w0}; keeps v(x) free of overflow
    #[serde(skip)]
    ratio: f64,
    // log of the region-2 scale so that ln g = log_k2 + G(x), G(w0) = 0
    #[serde(skip)]
    log_k2: f64,
}

const EQ_TOL: f64 = 1e-9;

/// `D(gamma) = (b1+b2) g(g-1) - (1-rho^2)(g-1)^2 - b1 b2 g^2`.
fn d_gamma(p: &ModelParams, g: f64) -> f64 {
    let gm = g - 1.0;
    (p.beta1 + p.beta2) * g * gm - (1.0 - p.rho * p.rho) * gm * gm - (p.beta1 * p.beta2) * g * g
}

// w for line a, with b the other line; evaluated identically for both lines.
#[allow(clippy::too_many_arguments)]
fn w_line(sa: f64, sb: f64, ma: f64, mb: f64, bb: f64, rho: f64, g: f64, d: f64) -> f64 {
    let num = sa * sa * sb * d;
    let den = (ma * sb - rho * mb * sa) * (g - 1.0) - bb * ma * sb * g;
    num / den
}

/// `w1, w2` of the general formulas at a given `gamma1`.
pub fn general_w(p: &ModelParams, gamma1: f64) -> (f64, f64) {
    let d = d_gamma(p, gamma1);
    let w1 = w_line(p.sigma1, p.sigma2, p.mu1, p.mu2, p.beta2, p.rho, gamma1, d);
    let w2 = w_line(p.sigma2, p.sigma1, p.mu2, p.mu1, p.beta1, p.rho, gamma1, d);
    (w1, w2)
}

fn n_terms(p: &ModelParams, p1: f64, p2: f64) -> (f64, f64, f64, f64) {
    let s1 = p.sigma1 * p1;
    let s2 = p.sigma2 * p2;
    let n1 = (0.5 * s1 * s1 + 0.5 * s2 * s2) + p.rho * (s1 * s2);
    let n2 = p.mu1 * p1 + p.mu2 * p2;
    let n3 = 0.5 * p.beta1 * s1 * s1 + 0.5 * p.beta2 * s2 * s2;
    let dn = (0.5 * (1.0 - p.beta1) * s1 * s1 + 0.5 * (1.0 - p.beta2) * s2 * s2) + p.rho * (s1 * s2);
    (n1, n2, n3, dn)
}

/// Thresholds and the `N` coefficients for a regime family at a given `gamma1`.
pub fn compute_thresholds(p: &ModelParams, gamma1: f64, tag: RegimeTag) -> Result<Thresholds> {
    if !(gamma1 > 0.0 && gamma1 < 1.0) {
        return Err(Error::Numerical(format!("gamma1 = {gamma1} outside (0,1)")));
    }
    let (w1, w2) = general_w(p, gamma1);
    let (w0, p1, p2) = match tag {
        RegimeTag::GeneralInteriorNeq | RegimeTag::GeneralInteriorEq | RegimeTag::NoUncertainty => {
            if !(w1 > 0.0 && w2 > 0.0) {
                return Err(Error::Sign(format!(
                    "interior thresholds must be positive: w1 = {w1}, w2 = {w2}"
                )));
            }
            let w0 = w1.min(w2);
            (w0, w0 / w1, w0 / w2)
        }
        RegimeTag::Line1FullCession => {
            if !(w2 > 0.0) {
                return Err(Error::Sign(format!("w2 = {w2} must be positive when line 1 cedes")));
            }
            (w2, 0.0, 1.0)
        }
        RegimeTag::Line2FullCession => {
            if !(w1 > 0.0) {
                return Err(Error::Sign(format!("w1 = {w1} must be positive when line 2 cedes")));
            }
            (w1, 1.0, 0.0)
        }
        RegimeTag::Degenerate => return Err(Error::Branch("degenerate regime has no thresholds".into())),
    };
    let (n1, n2, n3, dn) = n_terms(p, p1, p2);
    Ok(Thresholds {
        w1,
        w2,
        w0,
        n1,
        n2,
        n3,
        p1,
        p2,
        dn,
    })
}

/// Roots `gamma2_plus > gamma2_minus` of `N1 y^2 + N2 y - delta + N3 (...)`.
pub fn gamma2(t: &Thresholds, delta: f64) -> Result<(f64, f64)> {
    let disc = t.n2 * t.n2 + 4.0 * delta * t.dn;
    if !(disc > 0.0) {
        return Err(Error::Numerical(format!(
            "discriminant N2^2 + 4 delta (N1 - N3) = {disc} is not positive"
        )));
    }
    // q carries the sign of N2 so neither root is formed by cancellation
    let q = -0.5 * (t.n2 + t.n2.signum() * disc.sqrt());
    let (a, b) = (q / t.n1, -delta * t.dn / (t.n1 * q));
    Ok((a.max(b), a.min(b)))
}

pub fn is_eq_case(t: &Thresholds) -> bool {
    t.dn.abs() <= EQ_TOL * t.n1.max(t.n3)
}

/// Solve with the default root policy.
pub fn solve(params: &ModelParams) -> Result<ClosedFormSolution> {
    solve_with(params, RootPolicy::Smallest)
}

pub fn solve_with(params: &ModelParams, policy: RootPolicy) -> Result<ClosedFormSolution> {
    let (canon, swapped) = canonicalize(params);
    let class = classify_regime(&canon, policy)?;
    ClosedFormSolution::build(&canon, swapped, class.regime, class.roots, policy)
}

impl ClosedFormSolution {
    /// Assemble the solution for a known regime family and `gamma1`.
    ///
    /// `params` must already be canonical. Interior tags are re-derived from
    /// the `N1` vs `N3` test, so either interior tag may be passed in.
    pub fn build(
        params: &ModelParams,
        swapped: bool,
        regime: Regime,
        roots: Vec<f64>,
        policy: RootPolicy,
    ) -> Result<Self> {
        let p = *params;
        let tag = regime.tag;
        let gamma1 = match (tag, regime.gamma1) {
            (RegimeTag::Degenerate, _) => return Ok(Self::degenerate(p, swapped, roots, policy)),
            (_, Some(g)) => g,
            (_, None) => return Err(Error::Branch(format!("{} needs gamma1", tag.name()))),
        };
        if tag == RegimeTag::NoUncertainty {
            return benchmark::build(p, swapped, gamma1, policy);
        }
        let t = compute_thresholds(&p, gamma1, tag)?;
        let (gp, gm) = gamma2(&t, p.delta)?;
        let eq = is_eq_case(&t);
        let tag = match tag {
            RegimeTag::GeneralInteriorNeq | RegimeTag::GeneralInteriorEq if eq => RegimeTag::GeneralInteriorEq,
            RegimeTag::GeneralInteriorNeq | RegimeTag::GeneralInteriorEq => RegimeTag::GeneralInteriorNeq,
            t => t,
        };
        let mut sol = ClosedFormSolution {
            params: p,
            swapped,
            regime: Regime {
                tag,
                gamma1: Some(gamma1),
            },
            branch: if eq { Branch::Eq } else { Branch::Neq },
            gamma1_roots: roots,
            root_policy: policy,
            thresholds: Some(t),
            gamma2_plus: gp,
            gamma2_minus: gm,
            k3: None,
            bstar: f64::NAN,
            k4: f64::NAN,
            lambda: None,
            ratio: 0.0,
            log_k2: 0.0,
        };
        if !eq {
            let c = t.dn / t.n1;
            let s = c * gamma1 / t.w0;
            let den = gp - s;
            if den.abs() <= 1e-12 * gp.abs().max(s.abs()).max(1.0) {
                return Err(Error::Numerical(format!(
                    "K3 denominator gamma2+ - (1 - N3/N1) gamma1/w0 = {den} vanishes"
                )));
            }
            sol.ratio = (s - gm) / den;
            sol.k3 = Some(sol.ratio * ((gm - gp) * t.w0).exp());
        }
        sol.bstar = sol.find_bstar()?;
        let vb = sol.v(sol.bstar);
        sol.k4 = 1.0 / vb;
        sol.log_k2 = p.a2.ln() - vb.ln() - sol.big_g(sol.bstar);
        Ok(sol)
    }

    fn degenerate(p: ModelParams, swapped: bool, roots: Vec<f64>, policy: RootPolicy) -> Self {
        ClosedFormSolution {
            params: p,
            swapped,
            regime: Regime {
                tag: RegimeTag::Degenerate,
                gamma1: None,
            },
            branch: Branch::Linear,
            gamma1_roots: roots,
            root_policy: policy,
            thresholds: None,
            gamma2_plus: f64::NAN,
            gamma2_minus: f64::NAN,
            k3: None,
            bstar: 0.0,
            k4: f64::NAN,
            lambda: None,
            ratio: 0.0,
            log_k2: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn benchmark_parts(
        params: ModelParams,
        swapped: bool,
        gamma1: f64,
        policy: RootPolicy,
        t: Thresholds,
        gp: f64,
        gm: f64,
        bstar: f64,
        lambda: f64,
    ) -> Self {
        ClosedFormSolution {
            params,
            swapped,
            regime: Regime {
                tag: RegimeTag::NoUncertainty,
                gamma1: Some(gamma1),
            },
            branch: Branch::Benchmark,
            gamma1_roots: Vec::new(),
            root_policy: policy,
            thresholds: Some(t),
            gamma2_plus: gp,
            gamma2_minus: gm,
            k3: None,
            bstar,
            k4: t.n2 / params.delta,
            lambda: Some(lambda),
            ratio: 0.0,
            log_k2: 0.0,
        }
    }

    pub fn tag(&self) -> RegimeTag {
        self.regime.tag
    }

    pub fn gamma1(&self) -> Option<f64> {
        self.regime.gamma1
    }

    pub fn is_degenerate(&self) -> bool {
        self.regime.tag == RegimeTag::Degenerate
    }

    /// `w0`, or 0 for the degenerate regime.
    pub fn w0(&self) -> f64 {
        self.thresholds.map_or(0.0, |t| t.w0)
    }

    fn th(&self) -> &Thresholds {
        self.thresholds.as_ref().expect("nondegenerate solution")
    }

    /// `v(x)` for `x >= w0`, without the degenerate check.
    pub(crate) fn v(&self, x: f64) -> f64 {
        let t = self.th();
        let g1 = self.regime.gamma1.unwrap_or(0.0);
        match self.branch {
            Branch::Neq => {
                let e = t.n1 / t.dn;
                let (gp, gm) = (self.gamma2_plus, self.gamma2_minus);
                let q = (-(gp - gm) * (x - t.w0)).exp();
                e * (self.ratio * gp + gm * q) / (self.ratio + q)
            }
            Branch::Eq => {
                let q = (-(t.n2 / t.n1) * (x - t.w0)).exp();
                self.params.delta / t.n2 * (1.0 - q) + g1 / t.w0 * q
            }
            Branch::Benchmark => {
                let (gp, gm) = (self.gamma2_plus, self.gamma2_minus);
                let (ep, em) = (((x - t.w0) * gp).exp(), ((x - t.w0) * gm).exp());
                gp * gm * (ep + em) / (gm * ep + gp * em)
            }
            Branch::Linear => f64::NAN,
        }
    }

    /// Riccati identity `v' = -(1 - N3/N1) v^2 - (N2/N1) v + delta/N1`.
    pub(crate) fn v_prime_of(&self, v: f64) -> f64 {
        let t = self.th();
        -(t.dn / t.n1) * v * v - (t.n2 / t.n1) * v + self.params.delta / t.n1
    }

    /// `(v(x), v'(x))` for `x >= w0`.
    pub fn v_eval(&self, x: f64) -> Result<(f64, f64)> {
        if self.is_degenerate() {
            return Err(Error::Branch("v is undefined in the degenerate regime".into()));
        }
        let v = self.v(x);
        Ok((v, self.v_prime_of(v)))
    }

    /// `h(x) = v^2 + v'`; its first zero past `w0` is `b*`.
    pub fn h(&self, x: f64) -> f64 {
        let v = self.v(x);
        v * v + self.v_prime_of(v)
    }

    fn find_bstar(&self) -> Result<f64> {
        let w0 = self.th().w0;
        let h0 = self.h(w0);
        if !(h0 < 0.0) {
            return Err(Error::Numerical(format!(
                "h(w0) = {h0} is not negative; no barrier bracket"
            )));
        }
        let mut lo = w0;
        let mut width = w0;
        let mut hi = w0 + width;
        let mut found = false;
        for _ in 0..=60 {
            let hh = self.h(hi);
            if hh.is_nan() {
                return Err(Error::Numerical(format!("h is not finite at x = {hi}")));
            }
            if hh >= 0.0 {
                found = true;
                break;
            }
            lo = hi;
            width *= 2.0;
            hi = w0 + width;
        }
        if !found {
            return Err(Error::Numerical(
                "no sign change of v^2 + v' within 2^60 bracket growth".into(),
            ));
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.h(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `G(x) = ln(g(x)/g(w0))` on `[w0, b*]`.
    fn big_g(&self, x: f64) -> f64 {
        let t = self.th();
        let y = x - t.w0;
        match self.branch {
            Branch::Neq => {
                let e = t.n1 / t.dn;
                let (gp, gm) = (self.gamma2_plus, self.gamma2_minus);
                let s = (gp - gm) * y;
                let r = self.ratio;
                // ln|u(x)/u(w0)| with u = e^{g- x} (1 + r e^{s}); u may be negative throughout
                let ln_abs = |s: f64| {
                    if s > 30.0 {
                        s + (r + (-s).exp()).abs().ln()
                    } else {
                        let y = r * s.exp();
                        if y.abs() < 0.5 {
                            y.ln_1p()
                        } else {
                            (1.0 + y).abs().ln()
                        }
                    }
                };
                e * (gm * y + ln_abs(s) - ln_abs(0.0))
            }
            Branch::Eq => {
                let k = t.n2 / t.n1;
                let g1 = self.regime.gamma1.unwrap_or(0.0);
                let d = self.params.delta;
                d / t.n2 * y - (t.n1 / t.n2) * (g1 / t.w0 - d / t.n2) * ((-k * y).exp() - 1.0)
            }
            Branch::Benchmark | Branch::Linear => f64::NAN,
        }
    }

    /// Value function `g(x)`.
    pub fn value_g(&self, x: f64) -> f64 {
        self.g_all(x).0
    }

    pub fn g_prime(&self, x: f64) -> f64 {
        self.g_all(x).1
    }

    pub fn g_second(&self, x: f64) -> f64 {
        self.g_all(x).2
    }

    /// `(g, g', g'')` at `x >= 0` from the closed forms.
    pub fn g_all(&self, x: f64) -> (f64, f64, f64) {
        let a2 = self.params.a2;
        if self.branch == Branch::Linear {
            return (a2 * x.max(0.0), a2, 0.0);
        }
        if x <= 0.0 {
            return (0.0, f64::INFINITY, f64::NEG_INFINITY);
        }
        if self.branch == Branch::Benchmark {
            return benchmark::g_all(self, x);
        }
        let t = self.th();
        let g1 = self.regime.gamma1.unwrap_or(0.0);
        if x < t.w0 {
            let g = (self.log_k2 + g1 * (x / t.w0).ln()).exp();
            (g, g1 * g / x, g1 * (g1 - 1.0) * g / (x * x))
        } else if x < self.bstar {
            let g = (self.log_k2 + self.big_g(x)).exp();
            let v = self.v(x);
            (g, v * g, (v * v + self.v_prime_of(v)) * g)
        } else {
            (a2 * (x - self.bstar + self.k4), a2, 0.0)
        }
    }

    /// One-sided limits `(g, g', g'')` just below and just above `x`,
    /// each from the formula of the corresponding region.
    pub fn one_sided(&self, x: f64) -> ((f64, f64, f64), (f64, f64, f64)) {
        let below = x * (1.0 - 1e-15) - f64::MIN_POSITIVE;
        let above = x * (1.0 + 1e-15) + f64::MIN_POSITIVE;
        (self.g_all(below), self.g_all(above))
    }

    /// Per-region formula evaluated at an arbitrary point, for pasting checks.
    pub fn g_region(&self, region: u8, x: f64) -> (f64, f64, f64) {
        let a2 = self.params.a2;
        if self.branch == Branch::Benchmark {
            return benchmark::g_region(self, region, x);
        }
        let t = self.th();
        let g1 = self.regime.gamma1.unwrap_or(0.0);
        match region {
            1 => {
                let g = (self.log_k2 + g1 * (x / t.w0).ln()).exp();
                (g, g1 * g / x, g1 * (g1 - 1.0) * g / (x * x))
            }
            2 => {
                let g = (self.log_k2 + self.big_g(x)).exp();
                let v = self.v(x);
                (g, v * g, (v * v + self.v_prime_of(v)) * g)
            }
            _ => (a2 * (x - self.bstar + self.k4), a2, 0.0),
        }
    }

    /// Optimal strategy at `x`, in canonical labels.
    pub fn strategy(&self, x: f64) -> Result<StrategyPoint> {
        strategy::strategy(self, x)
    }

    /// Optimal strategy at `x`, translated back to the caller's labels.
    pub fn strategy_reported(&self, x: f64) -> Result<StrategyPoint> {
        let s = self.strategy(x)?;
        Ok(if self.swapped { s.swapped() } else { s })
    }

    /// Regime tag in the caller's labels.
    pub fn reported_tag(&self) -> RegimeTag {
        if self.swapped {
            self.regime.tag.swapped()
        } else {
            self.regime.tag
        }
    }
}
