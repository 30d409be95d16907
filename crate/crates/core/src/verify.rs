//! Numerical certification of a closed-form solution against the aggregated
//! HJB equation and the saddle inequalities of the verification argument.
//!
//! All derivatives come from the closed forms; nothing is finite-differenced.

use serde::Serialize;

use crate::closed_form::{Branch, ClosedFormSolution};

/// Tolerances and grid sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Points on (0, b*) for the HJB residual.
    pub residual_points: usize,
    /// Points for shape checks on (0, 1.5 b*].
    pub shape_points: usize,
    /// Per-axis size of the (pi1, pi2) grid.
    pub pi_grid: usize,
    /// Per-axis size of the (theta1, theta2) grid in the saddle check.
    pub theta_grid: usize,
    /// Half-width of the theta box in units of |theta*|.
    pub theta_box: f64,
    pub residual_tol: f64,
    pub pasting_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            residual_points: 512,
            shape_points: 10_000,
            pi_grid: 65,
            theta_grid: 41,
            theta_box: 5.0,
            residual_tol: 1e-6,
            pasting_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    /// Largest `|sup_pi inf_theta L| / (delta g)` on (0, b*).
    pub max_hjb_residual: f64,
    pub residual_argmax_x: f64,
    /// Largest scaled positive part of the sup term beyond b*.
    pub max_tail_sup: f64,
    /// Largest `|a2 - g'|` beyond b*.
    pub max_tail_gradient_gap: f64,
    /// Largest relative jump of `g, g', g''` at `w0` and `b*`.
    pub max_pasting_gap: f64,
    pub pasting_gaps: Vec<PastingGap>,
    pub saddle_violations: usize,
    pub concavity_violations: usize,
    pub monotonicity_violations: usize,
    pub admissibility_violations: usize,
    pub theta_monotonicity_violations: usize,
    pub residual_points: usize,
    pub shape_points: usize,
    pub degenerate: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PastingGap {
    pub at: &'static str,
    pub x: f64,
    pub order: u8,
    pub relative_gap: f64,
}

/// Coefficients of `x` fixed: `L(pi, theta) = 1/2 Var g'' + drift g' + penalty - delta g`.
#[derive(Debug, Clone, Copy)]
pub struct Operator {
    pub g: f64,
    pub gp: f64,
    pub gpp: f64,
    mu: [f64; 2],
    sigma: [f64; 2],
    beta: [f64; 2],
    rho: f64,
    delta: f64,
}

impl Operator {
    pub fn at(sol: &ClosedFormSolution, x: f64) -> Operator {
        let (g, gp, gpp) = sol.g_all(x);
        let p = &sol.params;
        Operator {
            g,
            gp,
            gpp,
            mu: [p.mu1, p.mu2],
            sigma: [p.sigma1, p.sigma2],
            beta: [p.beta1, p.beta2],
            rho: p.rho,
            delta: p.delta,
        }
    }

    /// `delta g`, the scale residuals are measured against.
    pub fn scale(&self) -> f64 {
        (self.delta * self.g).abs().max(f64::MIN_POSITIVE)
    }

    fn variance(&self, pi: [f64; 2]) -> f64 {
        let a = self.sigma[0] * pi[0];
        let b = self.sigma[1] * pi[1];
        a * a + b * b + 2.0 * self.rho * a * b
    }

    /// Full operator with both controls given. A line with `beta = 0` admits only `theta = 0`.
    pub fn value(&self, pi: [f64; 2], theta: [f64; 2]) -> f64 {
        let mut drift = 0.0;
        let mut penalty = 0.0;
        for i in 0..2 {
            drift += (self.mu[i] - self.sigma[i] * theta[i]) * pi[i];
            if self.beta[i] > 0.0 {
                penalty += theta[i] * theta[i] * self.g / (2.0 * self.beta[i]);
            } else if theta[i] != 0.0 {
                penalty = f64::INFINITY;
            }
        }
        0.5 * self.variance(pi) * self.gpp + drift * self.gp + penalty - self.delta * self.g
    }

    /// Analytic inner minimizer `theta_i = beta_i sigma_i pi_i g'/g`.
    pub fn theta_hat(&self, pi: [f64; 2]) -> [f64; 2] {
        let r = self.gp / self.g;
        [
            self.beta[0] * self.sigma[0] * pi[0] * r,
            self.beta[1] * self.sigma[1] * pi[1] * r,
        ]
    }

    /// Inner-minimized operator `H(pi)`.
    pub fn inner_min(&self, pi: [f64; 2]) -> f64 {
        self.value(pi, self.theta_hat(pi))
    }

    // H(pi) = 1/2 pi'Q pi + c'pi - delta g
    fn quadratic(&self) -> ([[f64; 2]; 2], [f64; 2]) {
        let k = self.gp * self.gp / self.g;
        let (s1, s2) = (self.sigma[0], self.sigma[1]);
        let q11 = s1 * s1 * self.gpp - self.beta[0] * s1 * s1 * k;
        let q22 = s2 * s2 * self.gpp - self.beta[1] * s2 * s2 * k;
        let q12 = self.rho * s1 * s2 * self.gpp;
        ([[q11, q12], [q12, q22]], [self.mu[0] * self.gp, self.mu[1] * self.gp])
    }

    /// `sup_{[0,1]^2} H`: dense grid, then every KKT candidate of the box QP.
    pub fn sup_inner(&self, grid: usize) -> (f64, [f64; 2]) {
        let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
        let mut consider = |pi: [f64; 2]| {
            if (0.0..=1.0).contains(&pi[0]) && (0.0..=1.0).contains(&pi[1]) {
                let h = self.inner_min(pi);
                if h > best.0 {
                    best = (h, pi);
                }
            }
        };
        let n = grid.max(2) - 1;
        for i in 0..=n {
            for j in 0..=n {
                consider([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        let (q, c) = self.quadratic();
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        if det != 0.0 {
            consider([
                (-c[0] * q[1][1] + c[1] * q[0][1]) / det,
                (-c[1] * q[0][0] + c[0] * q[1][0]) / det,
            ]);
        }
        for fixed in [0.0, 1.0] {
            // pi1 fixed, optimize pi2; then the mirror
            if q[1][1] != 0.0 {
                consider([fixed, -(c[1] + q[0][1] * fixed) / q[1][1]]);
            }
            if q[0][0] != 0.0 {
                consider([-(c[0] + q[0][1] * fixed) / q[0][0], fixed]);
            }
            consider([fixed, 0.0]);
            consider([fixed, 1.0]);
        }
        best
    }
}

fn residual_grid(sol: &ClosedFormSolution, n: usize) -> Vec<f64> {
    (1..=n).map(|k| sol.bstar * k as f64 / (n + 1) as f64).collect()
}

/// HJB residual on (0, b*) and the tail conditions beyond it.
pub fn hjb_residual(sol: &ClosedFormSolution, cfg: &VerifyConfig) -> VerifyReport {
    let mut rep = VerifyReport {
        residual_points: cfg.residual_points,
        ..Default::default()
    };
    if sol.is_degenerate() {
        rep.degenerate = true;
        rep.max_tail_sup = degenerate_sup(sol, cfg);
        return rep;
    }
    for x in residual_grid(sol, cfg.residual_points) {
        let op = Operator::at(sol, x);
        let (sup, _) = op.sup_inner(cfg.pi_grid);
        let r = sup.abs() / op.scale();
        if r > rep.max_hjb_residual {
            rep.max_hjb_residual = r;
            rep.residual_argmax_x = x;
        }
        // the dividend term a2 - g' must not be positive below b*
        let gap = sol.params.a2 - op.gp;
        if gap > cfg.residual_tol * sol.params.a2 {
            rep.max_hjb_residual = rep.max_hjb_residual.max(gap / sol.params.a2);
        }
    }
    for k in 0..64 {
        let x = sol.bstar * (1.0 + k as f64 / 32.0);
        let op = Operator::at(sol, x);
        let (sup, _) = op.sup_inner(cfg.pi_grid);
        rep.max_tail_sup = rep.max_tail_sup.max(sup / op.scale());
        rep.max_tail_gradient_gap = rep.max_tail_gradient_gap.max((sol.params.a2 - op.gp).abs());
    }
    rep
}

// Degenerate: the sup term of the operator with g = a2 x must be <= 0 everywhere.
fn degenerate_sup(sol: &ClosedFormSolution, cfg: &VerifyConfig) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in 1..=cfg.residual_points {
        let x = 10.0 * k as f64 / cfg.residual_points as f64;
        let op = Operator::at(sol, x);
        let (sup, _) = op.sup_inner(cfg.pi_grid);
        worst = worst.max(sup / op.scale());
    }
    worst
}

/// Saddle inequalities: `L(pi, theta*) <= tol`, `L(pi*, theta) >= -tol`,
/// `|L(pi*, theta*)| <= tol`, each scaled by `delta g(x)`.
pub fn saddle_check(sol: &ClosedFormSolution, cfg: &VerifyConfig, xs: &[f64]) -> usize {
    saddle_check_oriented(sol, cfg, xs, false)
}

/// With `flipped`, the roles are exchanged (maximize over theta, minimize over
/// pi), which must produce violations for a genuine saddle.
pub fn saddle_check_oriented(sol: &ClosedFormSolution, cfg: &VerifyConfig, xs: &[f64], flipped: bool) -> usize {
    if sol.is_degenerate() {
        return 0;
    }
    let sign = if flipped { -1.0 } else { 1.0 };
    let mut violations = 0;
    let n = cfg.pi_grid.max(2) - 1;
    let m = cfg.theta_grid.max(2) - 1;
    for &x in xs {
        let Ok(s) = sol.strategy(x) else { continue };
        let op = Operator::at(sol, x);
        let tol = cfg.residual_tol * op.scale();
        let pi_star = [s.pi1, s.pi2];
        let th_star = [s.theta1, s.theta2];
        // (i) insurer cannot gain against theta*
        let mut bad_i = false;
        for i in 0..=n {
            for j in 0..=n {
                let pi = [i as f64 / n as f64, j as f64 / n as f64];
                if sign * op.value(pi, th_star) > tol {
                    bad_i = true;
                }
            }
        }
        if x <= sol.bstar {
            // (ii) adversary cannot lower the value against pi*
            let mut bad_ii = false;
            let half = |t: f64| (cfg.theta_box * t.abs()).max(1e-3);
            let (h1, h2) = (half(th_star[0]), half(th_star[1]));
            for i in 0..=m {
                for j in 0..=m {
                    let mut th = [
                        th_star[0] - h1 + 2.0 * h1 * i as f64 / m as f64,
                        th_star[1] - h2 + 2.0 * h2 * j as f64 / m as f64,
                    ];
                    for (k, t) in th.iter_mut().enumerate() {
                        if op.beta[k] == 0.0 {
                            *t = 0.0;
                        }
                    }
                    if sign * op.value(pi_star, th) < -tol {
                        bad_ii = true;
                    }
                }
            }
            // (iii) equality at the equilibrium pair
            let bad_iii = !flipped && op.value(pi_star, th_star).abs() > tol;
            violations += bad_ii as usize + bad_iii as usize;
        }
        violations += bad_i as usize;
    }
    violations
}

fn rel_gap(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// Smooth pasting, monotonicity, concavity, admissibility, theta monotonicity.
pub fn pasting_and_shape(sol: &ClosedFormSolution, cfg: &VerifyConfig) -> VerifyReport {
    let mut rep = VerifyReport {
        shape_points: cfg.shape_points,
        ..Default::default()
    };
    let a2 = sol.params.a2;
    if sol.is_degenerate() {
        rep.degenerate = true;
        for k in 1..=cfg.shape_points {
            let x = 10.0 * k as f64 / cfg.shape_points as f64;
            let (_, gp, gpp) = sol.g_all(x);
            rep.concavity_violations += (gpp > 1e-9) as usize;
            rep.monotonicity_violations += (gp <= 0.0 || (gp - a2).abs() > 1e-9) as usize;
        }
        return rep;
    }
    let w0 = sol.w0();
    let b = sol.bstar;
    for (name, x, lo, hi) in [("w0", w0, 1u8, 2u8), ("bstar", b, 2, 3)] {
        let l = sol.g_region(lo, x);
        let r = sol.g_region(hi, x);
        for (order, (a, c)) in [(l.0, r.0), (l.1, r.1), (l.2, r.2)].into_iter().enumerate() {
            // g'' is compared on the scale of g'' at the point, or of g'/x when it vanishes
            let gap = if order == 2 {
                let s = a.abs().max(c.abs()).max(1e-300);
                let floor = (l.1.abs() / x.max(1e-300)).max(s);
                (a - c).abs() / floor
            } else {
                rel_gap(a, c)
            };
            rep.pasting_gaps.push(PastingGap {
                at: name,
                x,
                order: order as u8,
                relative_gap: gap,
            });
            rep.max_pasting_gap = rep.max_pasting_gap.max(gap);
        }
    }

    let n = cfg.shape_points;
    let top = 1.5 * b;
    let mut prev_theta: Option<(f64, f64)> = None;
    let mut gpp_scale = 0.0_f64;
    let pts: Vec<f64> = (1..=n).map(|k| top * k as f64 / n as f64).collect();
    for &x in &pts {
        gpp_scale = gpp_scale.max(sol.g_second(x).abs());
    }
    for &x in &pts {
        let (_, gp, gpp) = sol.g_all(x);
        if !(gp > 0.0) || gp < a2 - 1e-9 || (x >= b && (gp - a2).abs() > 1e-9) {
            rep.monotonicity_violations += 1;
        }
        if gpp > 1e-9 * gpp_scale.max(1.0) || (x < b && sol.branch != Branch::Linear && !(gpp < 0.0)) {
            rep.concavity_violations += 1;
        }
        if let Ok(s) = sol.strategy(x) {
            for p in [s.pi1, s.pi2] {
                if !(0.0..=1.0).contains(&p) {
                    rep.admissibility_violations += 1;
                }
            }
            if x > w0 {
                if let Some((t1, t2)) = prev_theta {
                    if s.theta1 > t1 * (1.0 + 1e-12) || s.theta2 > t2 * (1.0 + 1e-12) {
                        rep.theta_monotonicity_violations += 1;
                    }
                }
                prev_theta = Some((s.theta1, s.theta2));
            }
        }
    }
    rep
}

/// Full report with every check.
pub fn verify(sol: &ClosedFormSolution, cfg: &VerifyConfig) -> VerifyReport {
    let res = hjb_residual(sol, cfg);
    let mut rep = pasting_and_shape(sol, cfg);
    rep.max_hjb_residual = res.max_hjb_residual;
    rep.residual_argmax_x = res.residual_argmax_x;
    rep.max_tail_sup = res.max_tail_sup;
    rep.max_tail_gradient_gap = res.max_tail_gradient_gap;
    rep.residual_points = res.residual_points;
    if !sol.is_degenerate() {
        let xs: Vec<f64> = (1..=32).map(|k| 1.5 * sol.bstar * k as f64 / 32.0).collect();
        rep.saddle_violations = saddle_check(sol, cfg, &xs);
    }
    rep.passed = rep.max_hjb_residual <= cfg.residual_tol
        && rep.max_tail_sup <= cfg.residual_tol
        && rep.max_tail_gradient_gap <= 1e-10
        && rep.max_pasting_gap <= cfg.pasting_tol
        && rep.saddle_violations == 0
        && rep.concavity_violations == 0
        && rep.monotonicity_violations == 0
        && rep.admissibility_violations == 0
        && rep.theta_monotonicity_violations == 0;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::solve;
    use crate::model::RawParams;

    fn base() -> ClosedFormSolution {
        solve(&RawParams::base().validate().unwrap()).unwrap()
    }

    #[test]
    fn theta_perturbation_raises_operator() {
        let s = base();
        let x = s.w0();
        let st = s.strategy(x).unwrap();
        let op = Operator::at(&s, x);
        let pi = [st.pi1, st.pi2];
        let a = op.value(pi, [st.theta1, st.theta2]);
        let b = op.value(pi, [1.1 * st.theta1, 1.1 * st.theta2]);
        assert!(b > a);
    }

    #[test]
    fn zero_pi_is_pure_discounting() {
        let s = base();
        let x = 0.5 * s.bstar;
        let op = Operator::at(&s, x);
        let v = op.inner_min([0.0, 0.0]);
        assert!((v + s.params.delta * s.value_g(x)).abs() < 1e-12);
        assert!(v <= 0.0);
    }

    #[test]
    fn tail_gradient_is_exact() {
        let s = base();
        let op = Operator::at(&s, 1.5 * s.bstar);
        assert_eq!(s.params.a2 - op.gp, 0.0);
    }

    #[test]
    fn box_qp_matches_fine_grid() {
        let s = base();
        let op = Operator::at(&s, 0.8 * s.bstar);
        let (sup, _) = op.sup_inner(3);
        let (grid, _) = op.sup_inner(801);
        assert!(sup >= grid - 1e-12);
        assert!(sup - grid < 1e-5 * op.scale());
    }

    #[test]
    fn degenerate_sup_nonpositive() {
        let s = solve(
            &RawParams {
                delta: 100.0,
                ..RawParams::base()
            }
            .validate()
            .unwrap(),
        )
        .unwrap();
        let rep = verify(
            &s,
            &VerifyConfig {
                residual_points: 128,
                shape_points: 1000,
                ..Default::default()
            },
        );
        assert!(rep.max_tail_sup <= 0.0);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn theta_decreases_past_w0() {
        let s = base();
        let a = s.strategy(2.0 * s.w0()).unwrap();
        let b = s.strategy(4.0 * s.w0()).unwrap();
        assert!(a.theta1 > b.theta1);
    }
}
