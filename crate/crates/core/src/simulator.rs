//! Monte Carlo estimate of the robust objective under the worst-case measure.
//!
//! Euler–Maruyama with strategies frozen at the pre-step state, reflection at
//! `b*` by projection (overshoot paid as a dividend), absorption at zero.
//! Each path owns a ChaCha8 stream selected by its index, so a path is
//! reproducible regardless of how many paths run or on which thread.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::ClosedFormSolution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SimMode {
    #[default]
    Aggregate,
    TwoLine,
}

/// Who plays optimally. A fixed side is held constant; the other side keeps
/// its feedback rule (for a fixed `pi` the adversary responds analytically).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum Policy {
    #[default]
    Optimal,
    FixedOverride {
        #[serde(default)]
        pi: Option<[f64; 2]>,
        #[serde(default)]
        theta: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub dt: f64,
    pub n_paths: usize,
    /// Horizon cap; `None` means `40/delta`.
    pub t_max: Option<f64>,
    pub seed: u64,
    pub mode: SimMode,
    pub policy: Policy,
    /// Pair each path with its mirror image; `n_paths` counts pairs.
    pub antithetic: bool,
    /// Keep per-path records in the result.
    pub keep_paths: bool,
    /// Discount only up to this time, then kill the path at an independent
    /// `Exp(delta)` clock. Same expectation step by step, much shorter paths;
    /// `Some(0.0)` is pure killing.
    pub kill_after: Option<f64>,
    /// Brownian increments per step, summed. A run at `dt` with `substeps = k`
    /// sees the same Brownian path as a run at `dt / k` with the same seed.
    pub substeps: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            x0: 1.0,
            x1: 0.0,
            x2: 0.0,
            dt: 1e-3,
            n_paths: 10_000,
            t_max: None,
            seed: 0,
            mode: SimMode::Aggregate,
            policy: Policy::Optimal,
            antithetic: false,
            keep_paths: false,
            kill_after: None,
            substeps: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: u64,
    /// `None` when the path survived to the horizon.
    pub ruin_time: Option<f64>,
    pub discounted_dividends: f64,
    pub discounted_penalty: f64,
    /// Undiscounted capital moved from line 1 to line 2 and back (two-line mode).
    pub transfer_from1: f64,
    pub transfer_from2: f64,
    /// Stopped by the killing clock (only with `kill_after`).
    pub killed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub j_hat: f64,
    pub std_err: f64,
    /// Mean of `a2` times discounted dividends.
    pub dividend_part: f64,
    /// Mean discounted penalty.
    pub penalty_part: f64,
    pub ruined_fraction: f64,
    /// Mean ruin time over ruined paths (NaN when none).
    pub mean_ruin_time: f64,
    pub paths_truncated: usize,
    /// `e^{-delta t_max} g(b*)`, a bound on the value discarded at the horizon.
    pub truncation_bound: f64,
    pub n_samples: usize,
    pub t_max: f64,
    pub dt: f64,
    pub mean_transfer_from1: f64,
    pub mean_transfer_from2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<PathRecord>>,
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Controls and their drift/diffusion/penalty coefficients at one state.
#[derive(Debug, Clone, Copy)]
struct Step {
    pi: [f64; 2],
    // per-line drift under the distorted measure
    drift: [f64; 2],
    // loadings of the aggregate on the two independent normals
    c1: f64,
    c2: f64,
    penalty_rate: f64,
}

impl Step {
    const ZERO: Step = Step {
        pi: [0.0; 2],
        drift: [0.0; 2],
        c1: 0.0,
        c2: 0.0,
        penalty_rate: 0.0,
    };
}

struct Dynamics<'a> {
    sol: &'a ClosedFormSolution,
    policy: Policy,
    sq: f64,
    table: Table,
}

// Piecewise-linear table of `Step` over [0, w0] and [w0, b*], with a node at
// w0 so the kink in the retention rule is reproduced exactly.
struct Table {
    w0: f64,
    b: f64,
    inv_h1: f64,
    inv_h2: f64,
    lower: Vec<Step>,
    upper: Vec<Step>,
}

const TABLE_CELLS: usize = 1 << 13;

impl Step {
    fn lerp(a: &Step, b: &Step, t: f64) -> Step {
        let l = |u: f64, v: f64| u + t * (v - u);
        Step {
            pi: [l(a.pi[0], b.pi[0]), l(a.pi[1], b.pi[1])],
            drift: [l(a.drift[0], b.drift[0]), l(a.drift[1], b.drift[1])],
            c1: l(a.c1, b.c1),
            c2: l(a.c2, b.c2),
            penalty_rate: l(a.penalty_rate, b.penalty_rate),
        }
    }
}

impl Table {
    fn build(w0: f64, b: f64, f: impl Fn(f64) -> Step) -> Table {
        let nodes = |lo: f64, hi: f64| -> (Vec<Step>, f64) {
            if hi <= lo {
                return (vec![f(lo)], 0.0);
            }
            let h = (hi - lo) / TABLE_CELLS as f64;
            let v = (0..=TABLE_CELLS)
                .map(|k| f(if k == TABLE_CELLS { hi } else { lo + k as f64 * h }))
                .collect();
            (v, 1.0 / h)
        };
        let (lower, inv_h1) = nodes(0.0, w0);
        let (upper, inv_h2) = nodes(w0, b);
        Table {
            w0,
            b,
            inv_h1,
            inv_h2,
            lower,
            upper,
        }
    }

    fn get(&self, x: f64) -> Step {
        let (nodes, u) = if x < self.w0 {
            (&self.lower, x.max(0.0) * self.inv_h1)
        } else {
            (&self.upper, (x.min(self.b) - self.w0) * self.inv_h2)
        };
        let last = nodes.len() - 1;
        let k = (u as usize).min(last.saturating_sub(1));
        if last == 0 {
            return nodes[0];
        }
        Step::lerp(&nodes[k], &nodes[k + 1], u - k as f64)
    }
}

impl<'a> Dynamics<'a> {
    fn new(sol: &'a ClosedFormSolution, policy: Policy) -> Self {
        let rho = sol.params.rho;
        let b = sol.bstar.max(0.0);
        let w0 = sol.thresholds.map_or(0.0, |t| t.w0).clamp(0.0, b);
        let mut d = Dynamics {
            sol,
            policy,
            sq: (1.0 - rho * rho).sqrt(),
            table: Table::build(0.0, 0.0, |_| Step::ZERO),
        };
        d.table = Table::build(w0, b, |x| d.exact(x));
        d
    }

    fn step(&self, x: f64) -> Step {
        self.table.get(x)
    }

    fn exact(&self, x: f64) -> Step {
        let p = &self.sol.params;
        let (pi, theta, g) = self.controls(x);
        let drift = [
            pi[0] * (p.mu1 - p.sigma1 * theta[0]),
            pi[1] * (p.mu2 - p.sigma2 * theta[1]),
        ];
        let (a, b) = (pi[0] * p.sigma1, pi[1] * p.sigma2);
        let mut penalty_rate = 0.0;
        if p.beta1 > 0.0 {
            penalty_rate += theta[0] * theta[0] * g / (2.0 * p.beta1);
        }
        if p.beta2 > 0.0 {
            penalty_rate += theta[1] * theta[1] * g / (2.0 * p.beta2);
        }
        Step {
            pi,
            drift,
            c1: a + p.rho * b,
            c2: b * self.sq,
            penalty_rate,
        }
    }

    // (pi, theta, g(x)) in canonical labels
    fn controls(&self, x: f64) -> ([f64; 2], [f64; 2], f64) {
        let sol = self.sol;
        let p = &sol.params;
        let (g, gp, _) = sol.g_all(x);
        let optimal = || match sol.strategy(x) {
            Ok(s) => ([s.pi1, s.pi2], [s.theta1, s.theta2]),
            Err(_) => ([0.0, 0.0], [0.0, 0.0]),
        };
        let (pi, theta) = match self.policy {
            Policy::Optimal => optimal(),
            Policy::FixedOverride {
                pi: Some(pi),
                theta: Some(th),
            } => (pi, th),
            Policy::FixedOverride {
                pi: Some(pi),
                theta: None,
            } => {
                let r = if g > 0.0 { gp / g } else { 0.0 };
                (pi, [p.beta1 * p.sigma1 * pi[0] * r, p.beta2 * p.sigma2 * pi[1] * r])
            }
            Policy::FixedOverride {
                pi: None,
                theta: Some(th),
            } => (optimal().0, th),
            Policy::FixedOverride { pi: None, theta: None } => optimal(),
        };
        let theta = [
            if p.beta1 > 0.0 { theta[0] } else { 0.0 },
            if p.beta2 > 0.0 { theta[1] } else { 0.0 },
        ];
        (pi, theta, g)
    }
}

fn check_cfg(cfg: &SimConfig, mode: SimMode) -> Result<()> {
    let bad = |m: String| Err(Error::Config(m));
    if cfg.mode != mode {
        return bad(format!("mode {:?} requested from the {:?} simulator", cfg.mode, mode));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
        return bad(format!("dt must be positive, got {}", cfg.dt));
    }
    if cfg.substeps == 0 {
        return bad("substeps must be at least 1".into());
    }
    if cfg.n_paths == 0 {
        return bad("n_paths must be at least 1".into());
    }
    if let Some(t) = cfg.t_max {
        if !(t > 0.0) {
            return bad(format!("t_max must be positive, got {t}"));
        }
    }
    if let Some(t) = cfg.kill_after {
        if !(t >= 0.0 && t.is_finite()) {
            return bad(format!("kill_after must be finite and nonnegative, got {t}"));
        }
    }
    let starts = match mode {
        SimMode::Aggregate => vec![cfg.x0],
        SimMode::TwoLine => vec![cfg.x1, cfg.x2],
    };
    if starts.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return bad(format!(
            "initial reserves must be finite and nonnegative, got {starts:?}"
        ));
    }
    Ok(())
}

fn horizon(sol: &ClosedFormSolution, cfg: &SimConfig) -> f64 {
    cfg.t_max.unwrap_or(40.0 / sol.params.delta)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// (end of discounting, killing time); drawn first so it does not shift the normals.
fn clock(rng: &mut ChaCha8Rng, cfg: &SimConfig, delta: f64) -> (f64, f64) {
    match cfg.kill_after {
        Some(t0) => {
            let e: f64 = rng.sample(Exp1);
            (t0, t0 + e / delta)
        }
        None => (f64::INFINITY, f64::INFINITY),
    }
}

fn normals(rng: &mut ChaCha8Rng, sign: f64, substeps: u32) -> (f64, f64) {
    let (mut z1, mut z2) = (0.0, 0.0);
    for _ in 0..substeps {
        z1 += rng.sample::<f64, _>(StandardNormal);
        z2 += rng.sample::<f64, _>(StandardNormal);
    }
    if substeps > 1 {
        let r = (substeps as f64).sqrt();
        (z1, z2) = (z1 / r, z2 / r);
    }
    (sign * z1, sign * z2)
}

/// Result of applying the barrier rules to a two-line state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settlement {
    pub x1: f64,
    pub x2: f64,
    /// Paid by line 2.
    pub dividend: f64,
    pub from1: f64,
    pub from2: f64,
}

/// Axis transfers keep both lines nonnegative; above `b` line 1 hands its
/// excess to line 2; an aggregate above `b` is paid out by line 2.
pub fn settle(mut x1: f64, mut x2: f64, b: f64) -> Settlement {
    let (mut from1, mut from2) = (0.0, 0.0);
    if x1 < 0.0 {
        from2 = -x1;
        x2 += x1;
        x1 = 0.0;
    }
    if x2 < 0.0 {
        from1 = -x2;
        x1 += x2;
        x2 = 0.0;
    }
    if x1 > b {
        from1 += x1 - b;
        x2 += x1 - b;
        x1 = b;
    }
    let mut dividend = 0.0;
    if x1 + x2 > b {
        dividend = x1 + x2 - b;
        x2 = b - x1;
    }
    Settlement {
        x1,
        x2,
        dividend,
        from1,
        from2,
    }
}

/// State of one aggregate path; `sink` sees the reserve after every step.
fn run_aggregate(
    dynamics: &Dynamics,
    cfg: &SimConfig,
    t_max: f64,
    path_id: u64,
    sign: f64,
    mut sink: impl FnMut(f64),
) -> PathRecord {
    let sol = dynamics.sol;
    let b = sol.bstar;
    let delta = sol.params.delta;
    let mut rng = rng_for(cfg.seed, path_id);
    let (discount_end, kill) = clock(&mut rng, cfg, sol.params.delta);
    let mut div = KahanSum::default();
    let mut pen = KahanSum::default();
    let mut x = cfg.x0;
    if x > b {
        div.add(x - b);
        x = b;
    }
    let mut rec = PathRecord {
        path_id,
        ruin_time: None,
        discounted_dividends: 0.0,
        discounted_penalty: 0.0,
        transfer_from1: 0.0,
        transfer_from2: 0.0,
        killed: false,
    };
    let sqdt = cfg.dt.sqrt();
    let decay = (-delta * cfg.dt).exp();
    let n_steps = (t_max / cfg.dt).ceil() as u64;
    let mut disc = 1.0;
    if x <= 0.0 {
        rec.ruin_time = Some(0.0);
    } else {
        for k in 1..=n_steps {
            let s = dynamics.step(x);
            pen.add(disc * s.penalty_rate * cfg.dt);
            let (z1, z2) = normals(&mut rng, sign, cfg.substeps);
            x += (s.drift[0] + s.drift[1]) * cfg.dt + (s.c1 * z1 + s.c2 * z2) * sqdt;
            let t = k as f64 * cfg.dt;
            if t <= discount_end {
                disc *= decay;
            }
            if t > kill {
                rec.killed = true;
                break;
            }
            if x <= 0.0 {
                sink(x);
                rec.ruin_time = Some(k as f64 * cfg.dt);
                break;
            }
            if x > b {
                div.add(disc * (x - b));
                x = b;
            }
            sink(x);
        }
    }
    rec.discounted_dividends = div.total();
    rec.discounted_penalty = pen.total();
    rec
}

/// One two-line path; `sink` sees `(x1, x2)` after every step's transfers.
fn run_two_lines(
    dynamics: &Dynamics,
    cfg: &SimConfig,
    t_max: f64,
    path_id: u64,
    sign: f64,
    mut sink: impl FnMut(f64, f64),
) -> PathRecord {
    let sol = dynamics.sol;
    let p = &sol.params;
    let b = sol.bstar;
    let mut rng = rng_for(cfg.seed, path_id);
    let (discount_end, kill) = clock(&mut rng, cfg, sol.params.delta);
    let mut div = KahanSum::default();
    let mut pen = KahanSum::default();
    let (mut from1, mut from2) = (0.0, 0.0);
    let (mut x1, mut x2) = (cfg.x1, cfg.x2);
    let mut rec = PathRecord {
        path_id,
        ruin_time: None,
        discounted_dividends: 0.0,
        discounted_penalty: 0.0,
        transfer_from1: 0.0,
        transfer_from2: 0.0,
        killed: false,
    };
    let sqdt = cfg.dt.sqrt();
    let sq = (1.0 - p.rho * p.rho).sqrt();
    let decay = (-p.delta * cfg.dt).exp();
    let n_steps = (t_max / cfg.dt).ceil() as u64;
    let mut disc = 1.0;
    if x1 + x2 <= 0.0 {
        rec.ruin_time = Some(0.0);
    } else {
        let st = settle(x1, x2, b);
        (x1, x2) = (st.x1, st.x2);
        div.add(st.dividend);
        (from1, from2) = (from1 + st.from1, from2 + st.from2);
        for k in 1..=n_steps {
            let s = dynamics.step(x1 + x2);
            pen.add(disc * s.penalty_rate * cfg.dt);
            let (z1, z2) = normals(&mut rng, sign, cfg.substeps);
            x1 += s.drift[0] * cfg.dt + s.pi[0] * p.sigma1 * z1 * sqdt;
            x2 += s.drift[1] * cfg.dt + s.pi[1] * p.sigma2 * (p.rho * z1 + sq * z2) * sqdt;
            let t = k as f64 * cfg.dt;
            if t <= discount_end {
                disc *= decay;
            }
            if t > kill {
                rec.killed = true;
                break;
            }
            if x1 + x2 <= 0.0 {
                sink(x1, x2);
                rec.ruin_time = Some(k as f64 * cfg.dt);
                break;
            }
            let st = settle(x1, x2, b);
            (x1, x2) = (st.x1, st.x2);
            div.add(disc * st.dividend);
            (from1, from2) = (from1 + st.from1, from2 + st.from2);
            sink(x1, x2);
        }
    }
    rec.discounted_dividends = div.total();
    rec.discounted_penalty = pen.total();
    rec.transfer_from1 = from1;
    rec.transfer_from2 = from2;
    rec
}

fn summarize(sol: &ClosedFormSolution, cfg: &SimConfig, t_max: f64, recs: Vec<PathRecord>) -> SimResult {
    let a2 = sol.params.a2;
    let value = |r: &PathRecord| a2 * r.discounted_dividends + r.discounted_penalty;
    // antithetic pairs are averaged into one sample
    let samples: Vec<f64> = if cfg.antithetic {
        recs.chunks(2).map(|c| 0.5 * (value(&c[0]) + value(&c[1]))).collect()
    } else {
        recs.iter().map(value).collect()
    };
    let n = samples.len() as f64;
    let mean = samples.iter().copied().collect::<KahanSum>().total() / n;
    let var = if samples.len() > 1 {
        samples
            .iter()
            .map(|s| (s - mean) * (s - mean))
            .collect::<KahanSum>()
            .total()
            / (n - 1.0)
    } else {
        0.0
    };
    let m = recs.len() as f64;
    let ruined: Vec<f64> = recs.iter().filter_map(|r| r.ruin_time).collect();
    let mean_ruin_time = if ruined.is_empty() {
        f64::NAN
    } else {
        ruined.iter().copied().collect::<KahanSum>().total() / ruined.len() as f64
    };
    let truncated = recs.iter().filter(|r| r.ruin_time.is_none() && !r.killed).count();
    let g_top = if sol.is_degenerate() {
        0.0
    } else {
        sol.value_g(sol.bstar)
    };
    SimResult {
        j_hat: mean,
        std_err: (var / n).sqrt(),
        dividend_part: recs
            .iter()
            .map(|r| a2 * r.discounted_dividends)
            .collect::<KahanSum>()
            .total()
            / m,
        penalty_part: recs.iter().map(|r| r.discounted_penalty).collect::<KahanSum>().total() / m,
        ruined_fraction: ruined.len() as f64 / m,
        mean_ruin_time,
        paths_truncated: truncated,
        truncation_bound: (-sol.params.delta * t_max).exp() * g_top,
        n_samples: samples.len(),
        t_max,
        dt: cfg.dt,
        mean_transfer_from1: recs.iter().map(|r| r.transfer_from1).collect::<KahanSum>().total() / m,
        mean_transfer_from2: recs.iter().map(|r| r.transfer_from2).collect::<KahanSum>().total() / m,
        paths: if cfg.keep_paths { Some(recs) } else { None },
    }
}

// Caller labels to canonical labels; the map is its own inverse.
fn canonical(sol: &ClosedFormSolution, cfg: &SimConfig) -> SimConfig {
    if !sol.swapped {
        return *cfg;
    }
    let flip = |a: Option<[f64; 2]>| a.map(|[u, v]| [v, u]);
    let policy = match cfg.policy {
        Policy::FixedOverride { pi, theta } => Policy::FixedOverride {
            pi: flip(pi),
            theta: flip(theta),
        },
        p => p,
    };
    SimConfig {
        x1: cfg.x2,
        x2: cfg.x1,
        policy,
        ..*cfg
    }
}

fn report_transfers(sol: &ClosedFormSolution, mut r: SimResult) -> SimResult {
    if sol.swapped {
        std::mem::swap(&mut r.mean_transfer_from1, &mut r.mean_transfer_from2);
        for p in r.paths.iter_mut().flatten() {
            std::mem::swap(&mut p.transfer_from1, &mut p.transfer_from2);
        }
    }
    r
}

// (stream, sign) for every simulated path
fn path_plan(cfg: &SimConfig) -> Vec<(u64, f64)> {
    if cfg.antithetic {
        (0..cfg.n_paths as u64).flat_map(|k| [(k, 1.0), (k, -1.0)]).collect()
    } else {
        (0..cfg.n_paths as u64).map(|k| (k, 1.0)).collect()
    }
}

/// Aggregate reserve simulation. `cfg` is in the caller's line labels.
pub fn simulate_aggregate(sol: &ClosedFormSolution, cfg: &SimConfig) -> Result<SimResult> {
    check_cfg(cfg, SimMode::Aggregate)?;
    let cfg = &canonical(sol, cfg);
    let t_max = horizon(sol, cfg);
    let dynamics = Dynamics::new(sol, cfg.policy);
    let recs: Vec<PathRecord> = path_plan(cfg)
        .into_par_iter()
        .map(|(id, sign)| run_aggregate(&dynamics, cfg, t_max, id, sign, |_| {}))
        .collect();
    Ok(summarize(sol, cfg, t_max, recs))
}

/// Two-line simulation with capital transfers.
pub fn simulate_two_lines(sol: &ClosedFormSolution, cfg: &SimConfig) -> Result<SimResult> {
    check_cfg(cfg, SimMode::TwoLine)?;
    let cfg = &canonical(sol, cfg);
    let t_max = horizon(sol, cfg);
    let dynamics = Dynamics::new(sol, cfg.policy);
    let recs: Vec<PathRecord> = path_plan(cfg)
        .into_par_iter()
        .map(|(id, sign)| run_two_lines(&dynamics, cfg, t_max, id, sign, |_, _| {}))
        .collect();
    Ok(report_transfers(sol, summarize(sol, cfg, t_max, recs)))
}

/// Dispatch on `cfg.mode`.
pub fn simulate(sol: &ClosedFormSolution, cfg: &SimConfig) -> Result<SimResult> {
    match cfg.mode {
        SimMode::Aggregate => simulate_aggregate(sol, cfg),
        SimMode::TwoLine => simulate_two_lines(sol, cfg),
    }
}

/// Objective with one side held fixed; see [`Policy::FixedOverride`].
pub fn challenge_objective(sol: &ClosedFormSolution, cfg: &SimConfig) -> Result<SimResult> {
    match cfg.policy {
        Policy::FixedOverride { pi, theta } if pi.is_some() || theta.is_some() => simulate(sol, cfg),
        _ => Err(Error::Config("challenge runs need a fixed pi or theta override".into())),
    }
}

/// Reserve after each step of one aggregate path (the time-0 dividend already applied).
pub fn trace_aggregate(sol: &ClosedFormSolution, cfg: &SimConfig, path_id: u64) -> Result<(Vec<f64>, PathRecord)> {
    check_cfg(cfg, SimMode::Aggregate)?;
    let cfg = &canonical(sol, cfg);
    let dynamics = Dynamics::new(sol, cfg.policy);
    let mut out = Vec::new();
    let rec = run_aggregate(&dynamics, cfg, horizon(sol, cfg), path_id, 1.0, |x| out.push(x));
    Ok((out, rec))
}

/// `(x1, x2)` after each step of one two-line path.
pub fn trace_two_lines(
    sol: &ClosedFormSolution,
    cfg: &SimConfig,
    path_id: u64,
) -> Result<(Vec<(f64, f64)>, PathRecord)> {
    check_cfg(cfg, SimMode::TwoLine)?;
    let cfg = &canonical(sol, cfg);
    let dynamics = Dynamics::new(sol, cfg.policy);
    let mut out = Vec::new();
    let mut rec = run_two_lines(&dynamics, cfg, horizon(sol, cfg), path_id, 1.0, |a, b| out.push((a, b)));
    if sol.swapped {
        out.iter_mut().for_each(|(a, b)| std::mem::swap(a, b));
        std::mem::swap(&mut rec.transfer_from1, &mut rec.transfer_from2);
    }
    Ok((out, rec))
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
    fn zero_start_is_immediate_ruin() {
        let s = base();
        let r = simulate_aggregate(
            &s,
            &SimConfig {
                x0: 0.0,
                n_paths: 10,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.j_hat, 0.0);
        assert_eq!(r.ruined_fraction, 1.0);
    }

    #[test]
    fn degenerate_pays_everything() {
        let s = solve(
            &RawParams {
                delta: 100.0,
                ..RawParams::base()
            }
            .validate()
            .unwrap(),
        )
        .unwrap();
        let r = simulate_aggregate(
            &s,
            &SimConfig {
                x0: 2.0,
                n_paths: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((r.j_hat - 1.4).abs() < 1e-15);
        assert_eq!(r.std_err, 0.0);
    }

    #[test]
    fn deterministic() {
        let s = base();
        let cfg = SimConfig {
            n_paths: 20,
            dt: 1e-2,
            t_max: Some(5.0),
            seed: 7,
            ..Default::default()
        };
        let a = serde_json::to_string(&simulate_aggregate(&s, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate_aggregate(&s, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn path_independent_of_count() {
        let s = base();
        let a = SimConfig {
            n_paths: 3,
            dt: 1e-2,
            t_max: Some(5.0),
            keep_paths: true,
            ..Default::default()
        };
        let b = SimConfig { n_paths: 7, ..a };
        let ra = simulate_aggregate(&s, &a).unwrap().paths.unwrap();
        let rb = simulate_aggregate(&s, &b).unwrap().paths.unwrap();
        assert_eq!(ra[..], rb[..3]);
    }

    #[test]
    fn bad_configs() {
        let s = base();
        for cfg in [
            SimConfig {
                dt: 0.0,
                ..Default::default()
            },
            SimConfig {
                n_paths: 0,
                ..Default::default()
            },
            SimConfig {
                t_max: Some(-1.0),
                ..Default::default()
            },
            SimConfig {
                x0: -1.0,
                ..Default::default()
            },
            SimConfig {
                mode: SimMode::TwoLine,
                ..Default::default()
            },
            SimConfig {
                substeps: 0,
                ..Default::default()
            },
            SimConfig {
                kill_after: Some(-1.0),
                ..Default::default()
            },
        ] {
            assert!(matches!(simulate_aggregate(&s, &cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn compensated_sum() {
        let s: KahanSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.total(), 1.0);
    }

    #[test]
    fn substeps_share_the_brownian_path() {
        let s = base();
        let fine = SimConfig {
            x0: 1.0,
            dt: 1e-3,
            t_max: Some(0.2),
            ..Default::default()
        };
        let coarse = SimConfig {
            dt: 4e-3,
            substeps: 4,
            ..fine
        };
        let (xf, _) = trace_aggregate(&s, &fine, 3).unwrap();
        let (xc, _) = trace_aggregate(&s, &coarse, 3).unwrap();
        assert_eq!(xc.len() * 4, xf.len());
        let gap = xc
            .iter()
            .zip(xf.iter().skip(3).step_by(4))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 0.05, "{gap}");
    }

    #[test]
    fn killing_matches_discounting() {
        let s = base();
        let disc = SimConfig {
            x0: 0.5,
            dt: 1e-2,
            n_paths: 4000,
            t_max: Some(30.0),
            ..Default::default()
        };
        let kill = SimConfig {
            kill_after: Some(1.0),
            ..disc
        };
        let a = simulate_aggregate(&s, &disc).unwrap();
        let b = simulate_aggregate(&s, &kill).unwrap();
        let se = a.std_err.hypot(b.std_err);
        assert!((a.j_hat - b.j_hat).abs() < 4.0 * se, "{} {} {se}", a.j_hat, b.j_hat);
        assert_eq!(b.paths_truncated, 0);
    }
}
