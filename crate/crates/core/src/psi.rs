//! The quartic `psi(z)` whose root in (0,1) fixes the power `gamma1` of the
//! value function below the reinsurance threshold.
//!
//! Assembly goes through the basis
//! `{z^4, z^3(z-1), (z-1)^4, z(z-1)^3, z^2(z-1)^2}`. Every bracket is written
//! as a sum of per-line terms evaluated by the same function, so swapping the
//! two lines yields bit-identical coefficients.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PsiVariant {
    General,
    Line1Ceded,
    Line2Ceded,
}

impl PsiVariant {
    pub fn name(self) -> &'static str {
        match self {
            PsiVariant::General => "General",
            PsiVariant::Line1Ceded => "Line1Ceded",
            PsiVariant::Line2Ceded => "Line2Ceded",
        }
    }
}

/// Basis slots, in the order used by [`PsiPoly::basis`].
pub const Z4: usize = 0;
pub const Z3M: usize = 1;
pub const M4: usize = 2;
pub const ZM3: usize = 3;
pub const Z2M2: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiPoly {
    /// Monomial coefficients `c0..c4`.
    pub coeffs: [f64; 5],
    /// Weights on `z^4, z^3(z-1), (z-1)^4, z(z-1)^3, z^2(z-1)^2`.
    pub basis: [f64; 5],
    pub variant: PsiVariant,
}

// Weights of the five basis polynomials in the B~ term (shared by all variants).
fn b_tilde(p: &ModelParams) -> [f64; 5] {
    let (b1, b2) = (p.beta1, p.beta2);
    let q = 1.0 - p.rho * p.rho;
    let bs = b1 + b2;
    let bp = b1 * b2;
    let mut w = [0.0; 5];
    w[Z4] = bp * bp;
    w[Z3M] = -2.0 * bp * bs;
    w[M4] = q * q;
    w[ZM3] = -2.0 * q * bs;
    w[Z2M2] = bs * bs + 2.0 * q * bp;
    w
}

fn a_tilde_general(p: &ModelParams) -> [f64; 5] {
    let r = p.rho;
    let (b1, b2) = (p.beta1, p.beta2);
    // P1 = mu1 sigma2, P2 = mu2 sigma1 swap into each other under relabeling.
    let p1 = p.mu1 * p.sigma2;
    let p2 = p.mu2 * p.sigma1;
    let cross = p1 * p2;
    let bp = b1 * b2;

    let f3 = |pa: f64, ba: f64, bb: f64| bb * pa * pa * (2.0 * ba + bb);
    let f2 = |pa: f64, ba: f64, bb: f64| pa * pa * (ba - 3.0 * r * r * bb + 2.0 * r * bb + 2.0 * bb);
    let f4 = |pa: f64, bb: f64| bp * bb * pa * pa;

    let mut w = [0.0; 5];
    w[ZM3] = (p1 * p1 + p2 * p2) * (3.0 * r + 1.0) * (r - 1.0) + 2.0 * cross * (1.0 - r) * (2.0 * r * r + r + 1.0);
    w[Z3M] = -(f3(p1, b1, b2) + f3(p2, b2, b1)) + 2.0 * bp * cross;
    w[Z2M2] = (f2(p1, b1, b2) + f2(p2, b2, b1)) - 2.0 * cross * (b1 + b2);
    w[Z4] = f4(p1, b2) + f4(p2, b1);
    w[M4] = 0.0;
    w
}

fn a_tilde_line1(p: &ModelParams) -> [f64; 5] {
    let r = p.rho;
    let (b1, b2) = (p.beta1, p.beta2);
    let p1 = p.mu1 * p.sigma2;
    let p2 = p.mu2 * p.sigma1;
    let (s1, s2) = (p1 * p1, p2 * p2);
    let mut w = [0.0; 5];
    w[ZM3] = r * r * s1 + s2 * (2.0 * r * r - 1.0) - 2.0 * r * r * r * p1 * p2;
    w[Z3M] = -s2 * (b1 * b1 + 2.0 * b1 * b2);
    w[Z2M2] = s2 * (2.0 * b1 + b2 - 2.0 * r * r * b1) - r * r * b2 * s1;
    w[Z4] = b1 * b1 * b2 * s2;
    w[M4] = 0.0;
    w
}

fn to_monomial(h: &[f64; 5]) -> [f64; 5] {
    [
        h[M4],
        -4.0 * h[M4] - h[ZM3],
        6.0 * h[M4] + 3.0 * h[ZM3] + h[Z2M2],
        -h[Z3M] - 4.0 * h[M4] - 3.0 * h[ZM3] - 2.0 * h[Z2M2],
        h[Z4] + h[Z3M] + h[M4] + h[ZM3] + h[Z2M2],
    ]
}

/// Assemble `psi = A~ - 2 delta sigma1^2 sigma2^2 B~` for the requested variant.
pub fn build_psi(params: &ModelParams, variant: PsiVariant) -> PsiPoly {
    let (a, b) = match variant {
        PsiVariant::General => (a_tilde_general(params), b_tilde(params)),
        PsiVariant::Line1Ceded => (a_tilde_line1(params), b_tilde(params)),
        PsiVariant::Line2Ceded => {
            let s = params.swap_lines();
            (a_tilde_line1(&s), b_tilde(&s))
        }
    };
    let ss = params.sigma1 * params.sigma2;
    let k = 2.0 * params.delta * (ss * ss);
    let mut basis = [0.0; 5];
    for i in 0..5 {
        basis[i] = a[i] - k * b[i];
    }
    PsiPoly {
        coeffs: to_monomial(&basis),
        basis,
        variant,
    }
}

impl PsiPoly {
    /// Evaluate through the basis form; exact zero structure at `z = 0` and `z = 1`.
    pub fn eval(&self, z: f64) -> f64 {
        let m = z - 1.0;
        let h = &self.basis;
        h[Z4] * z.powi(4)
            + h[Z3M] * z.powi(3) * m
            + h[M4] * m.powi(4)
            + h[ZM3] * z * m.powi(3)
            + h[Z2M2] * z * z * m * m
    }

    /// Horner evaluation of the monomial form.
    pub fn eval_monomial(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let c = &self.coeffs;
        c[1] + z * (2.0 * c[2] + z * (3.0 * c[3] + z * 4.0 * c[4]))
    }

    pub fn scale(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// `psi(z)/(z-1)`, valid when the `z^4` weight vanishes.
    fn deflated(&self, z: f64) -> f64 {
        let m = z - 1.0;
        let h = &self.basis;
        h[Z3M] * z.powi(3) + h[M4] * m.powi(3) + h[ZM3] * z * m * m + h[Z2M2] * z * z * m
    }

    fn deflated_monomial(&self) -> Vec<f64> {
        // synthetic division of c4 z^4 + ... + c0 by (z - 1)
        let c = &self.coeffs;
        let mut q = vec![0.0; 4];
        q[3] = c[4];
        q[2] = c[3] + q[3];
        q[1] = c[2] + q[2];
        q[0] = c[1] + q[1];
        q
    }
}

/// Roots of `psi` strictly inside (0,1), ascending.
pub fn find_gamma1(params: &ModelParams, variant: PsiVariant) -> Result<Vec<f64>> {
    isolate_roots(&build_psi(params, variant))
}

const GRID: usize = 4096;
const MAX_BISECT: usize = 200;

pub fn isolate_roots(poly: &PsiPoly) -> Result<Vec<f64>> {
    let scale = poly.scale();
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let tol = 1e-12 * scale;
    let deflate = poly.eval(1.0).abs() <= tol;
    let f = |z: f64| if deflate { poly.deflated(z) } else { poly.eval(z) };

    let mut roots = Vec::new();
    let mut z_prev = 0.0;
    let mut f_prev = f(0.0);
    for k in 1..=GRID {
        let z = k as f64 / GRID as f64;
        let fz = f(z);
        if fz == 0.0 && k < GRID {
            roots.push(z);
        } else if f_prev != 0.0 && fz != 0.0 && (f_prev < 0.0) != (fz < 0.0) {
            roots.push(bisect(poly, z_prev, z, f_prev, tol, &f)?);
        }
        z_prev = z;
        f_prev = fz;
    }
    if roots.is_empty() {
        roots = companion_fallback(poly, deflate, tol);
    }
    roots.retain(|&r| r > 0.0 && r < 1.0);
    roots.sort_by(|a, b| a.total_cmp(b));
    // a tangential root can show up as a pair of rounding-level sign changes
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-6 && poly.eval(0.5 * (*a + *b)).abs() <= tol);
    Ok(roots)
}

fn bisect(poly: &PsiPoly, mut lo: f64, mut hi: f64, f_lo: f64, tol: f64, f: &impl Fn(f64) -> f64) -> Result<f64> {
    let neg_lo = f_lo < 0.0;
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if poly.eval(mid).abs() <= tol {
        Ok(mid)
    } else {
        Err(Error::Numerical(format!(
            "psi root refinement did not converge near z = {mid} (|psi| = {:e}, tol {:e})",
            poly.eval(mid).abs(),
            tol
        )))
    }
}

/// Eigenvalues of the companion matrix, kept when real, in (0,1) and small
/// after Newton polishing. Catches tangential roots the sign scan misses.
fn companion_fallback(poly: &PsiPoly, deflate: bool, tol: f64) -> Vec<f64> {
    let mut c: Vec<f64> = if deflate {
        poly.deflated_monomial()
    } else {
        poly.coeffs.to_vec()
    };
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() <= tol * 1e-3) {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let m = DMatrix::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -c[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut out = Vec::new();
    for ev in m.complex_eigenvalues().iter() {
        if ev.im.abs() > 1e-6 || ev.re <= 0.0 || ev.re >= 1.0 {
            continue;
        }
        let mut z = ev.re;
        for _ in 0..60 {
            let d = poly.derivative(z);
            if d == 0.0 {
                break;
            }
            let step = poly.eval(z) / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        if z > 0.0 && z < 1.0 && poly.eval(z).abs() <= tol {
            out.push(z);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawParams;

    fn base() -> ModelParams {
        RawParams::base().validate().unwrap()
    }

    #[test]
    fn psi_at_zero_matches_sign_identity() {
        let p = base();
        let psi = build_psi(&p, PsiVariant::General);
        let expect = -2.0 * p.delta * (p.sigma1 * p.sigma2).powi(2) * (1.0 - p.rho * p.rho).powi(2);
        assert!((psi.eval(0.0) - expect).abs() < 1e-12);
        assert!((psi.coeffs[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn psi_at_one_base() {
        let psi = build_psi(&base(), PsiVariant::General);
        assert!((psi.eval(1.0) - 22.75).abs() < 1e-12);
        assert!((psi.eval_monomial(1.0) - 22.75).abs() < 1e-11);
    }

    #[test]
    fn monomial_and_basis_agree() {
        let psi = build_psi(&base(), PsiVariant::General);
        for k in 0..=20 {
            let z = k as f64 / 20.0;
            assert!((psi.eval(z) - psi.eval_monomial(z)).abs() < 1e-11);
        }
    }

    #[test]
    fn line1_ceded_z4_weight_vanishes_with_beta1_zero() {
        let p = RawParams::base().with_betas(0.0, 1.0).validate().unwrap();
        let psi = build_psi(&p, PsiVariant::Line1Ceded);
        assert_eq!(psi.basis[Z4], 0.0);
    }

    #[test]
    fn base_root() {
        let r = find_gamma1(&base(), PsiVariant::General).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.157_023_39).abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn huge_delta_has_no_root() {
        let p = RawParams {
            delta: 1e6,
            ..RawParams::base()
        }
        .validate()
        .unwrap();
        assert!(find_gamma1(&p, PsiVariant::General).unwrap().is_empty());
    }

    #[test]
    fn deflation_excludes_one() {
        let p = RawParams::base().with_betas(0.0, 0.0).validate().unwrap();
        let psi = build_psi(&p, PsiVariant::General);
        assert_eq!(psi.eval(1.0), 0.0);
        let r = isolate_roots(&psi).unwrap();
        assert!(r.iter().all(|&z| z < 1.0));
    }

    #[test]
    fn line2_is_swapped_line1() {
        let p = RawParams {
            mu1: 0.7,
            beta1: 0.4,
            ..RawParams::base()
        }
        .validate()
        .unwrap();
        let a = build_psi(&p, PsiVariant::Line2Ceded);
        let b = build_psi(&p.swap_lines(), PsiVariant::Line1Ceded);
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn general_is_bitwise_symmetric() {
        let p = RawParams::symmetric().with_betas(1.0, 0.0).validate().unwrap();
        let q = RawParams::symmetric().with_betas(0.0, 1.0).validate().unwrap();
        let a = build_psi(&p, PsiVariant::General);
        let b = build_psi(&q, PsiVariant::General);
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn companion_finds_double_root() {
        // (z - 0.3)^2 (z^2 + 3z + 2): touches zero without a sign change
        let m = [0.18, -0.93, 0.29, 2.4, 1.0];
        let hm4 = m[0];
        let hzm3 = -m[1] - 4.0 * hm4;
        let hz2m2 = m[2] - 6.0 * hm4 - 3.0 * hzm3;
        let hz3m = -m[3] - 4.0 * hm4 - 3.0 * hzm3 - 2.0 * hz2m2;
        let hz4 = m[4] - hz3m - hm4 - hzm3 - hz2m2;
        let poly = PsiPoly {
            coeffs: m,
            basis: [hz4, hz3m, hm4, hzm3, hz2m2],
            variant: PsiVariant::General,
        };
        assert!(poly.eval(0.3).abs() < 1e-14);
        let r = isolate_roots(&poly).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.3).abs() < 1e-6, "{r:?}");
    }
}
