use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use robust_dividend::closed_form::{classify_regime, solve_with, RootPolicy};
use robust_dividend::model::canonicalize;
use robust_dividend::psi::{build_psi, PsiVariant};
use robust_dividend::report::SolveDoc;
use robust_dividend::reproduce::{reproduce, TableId};
use robust_dividend::simulator::{simulate, Policy, SimConfig, SimMode, SimResult};
use robust_dividend::sweep::{frontier, run_sweep, set_param, write_csv, Axis, Field, SweepSpec};
use robust_dividend::verify::{verify, VerifyConfig};
use robust_dividend::{Error, RawParams};

#[derive(Parser)]
#[command(
    name = "robdiv",
    version,
    about = "Robust dividend, reinsurance and capital injection for two insurance lines"
)]
struct Cli {
    /// JSON parameter file (defaults to the base configuration).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one parameter, e.g. `--set beta1=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Which root of psi to use when several lie in (0,1).
    #[arg(long, global = true, value_enum, default_value = "smallest")]
    root: RootChoice,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum RootChoice {
    Smallest,
    Largest,
}

#[derive(Subcommand)]
enum Cmd {
    /// Regime and the roots of psi.
    Classify {
        /// Emit the monomial coefficients c0..c4 of every psi variant as CSV.
        #[arg(long)]
        dump_psi: bool,
    },
    /// Full closed-form solution.
    Solve {
        /// Re-solve from the parameters of an earlier solve document.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Value function and strategies on a grid of reserve levels.
    Eval {
        #[arg(long, default_value_t = 0.0)]
        x_min: f64,
        /// Defaults to 1.5 b*.
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Grid over one or two parameters.
    Sweep(SweepArgs),
    /// Recompute a reference table and diff it against the goldens.
    Reproduce {
        #[arg(value_parser = ["ambiguity", "symmetric"])]
        table: String,
    },
    /// Check the solution against the HJB equation; exit 1 unless it passes.
    Verify {
        #[arg(long, default_value_t = 512)]
        residual_points: usize,
        #[arg(long, default_value_t = 10_000)]
        shape_points: usize,
    },
    /// Monte Carlo estimate of the robust objective.
    Simulate(SimArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// `name:lo:hi:count`.
    #[arg(long, required_unless_present_any = ["spec", "frontier"])]
    axis1: Option<String>,
    #[arg(long)]
    axis2: Option<String>,
    /// Comma-separated subset of regime,w0,bstar,w1,w2.
    #[arg(long)]
    outputs: Option<String>,
    /// JSON sweep spec instead of the axis flags.
    #[arg(long, conflicts_with_all = ["axis1", "axis2", "outputs"])]
    spec: Option<PathBuf>,
    /// `name:lo:hi`: bisect for the largest value with a nondegenerate solution.
    #[arg(long, conflicts_with_all = ["axis1", "axis2", "outputs", "spec"])]
    frontier: Option<String>,
}

#[derive(Args)]
struct SimArgs {
    /// JSON simulation config; flags below override it.
    #[arg(long)]
    sim_config: Option<PathBuf>,
    #[arg(long)]
    x0: Option<f64>,
    /// Two-line mode starting reserves.
    #[arg(long, requires = "x2")]
    x1: Option<f64>,
    #[arg(long, requires = "x1")]
    x2: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    n_paths: Option<usize>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    antithetic: bool,
    /// Discount up to this time, then kill at an Exp(delta) clock.
    #[arg(long)]
    kill_after: Option<f64>,
    #[arg(long)]
    substeps: Option<u32>,
    /// Hold the retention fixed, e.g. `0,0`.
    #[arg(long, value_name = "PI1,PI2")]
    fix_pi: Option<String>,
    /// Hold the distortion fixed, e.g. `0,0`.
    #[arg(long, value_name = "THETA1,THETA2")]
    fix_theta: Option<String>,
    /// Write one CSV row per path here.
    #[arg(long)]
    paths_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    match &cli.cmd {
        Cmd::Classify { dump_psi } => classify(cli, *dump_psi),
        Cmd::Solve { from } => {
            let raw = match from {
                Some(path) => {
                    let doc: SolveDoc = read_json(path)?;
                    doc.params
                }
                None => params(cli)?,
            };
            let sol = solve_with(&raw.validate()?, policy(cli))?;
            emit(cli, Format::Json, &SolveDoc::new(&raw, &sol))?;
            Ok(0)
        }
        Cmd::Eval { x_min, x_max, points } => eval(cli, *x_min, *x_max, *points),
        Cmd::Sweep(args) => sweep(cli, args),
        Cmd::Reproduce { table } => {
            let report = reproduce(TableId::parse(table)?)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => emit(cli, Format::Json, &report)?,
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for r in &report.rows {
                        w.serialize(r)?;
                    }
                    write_out(cli, &w.into_inner()?)?;
                }
            }
            eprint!("{}", report.to_text());
            Ok(if report.pass { 0 } else { 1 })
        }
        Cmd::Verify {
            residual_points,
            shape_points,
        } => {
            let sol = solve_with(&params(cli)?.validate()?, policy(cli))?;
            let cfg = VerifyConfig {
                residual_points: *residual_points,
                shape_points: *shape_points,
                ..VerifyConfig::default()
            };
            let report = verify(&sol, &cfg);
            emit(cli, Format::Json, &report)?;
            Ok(if report.passed { 0 } else { 1 })
        }
        Cmd::Simulate(args) => simulate_cmd(cli, args),
    }
}

fn policy(cli: &Cli) -> RootPolicy {
    match cli.root {
        RootChoice::Smallest => RootPolicy::Smallest,
        RootChoice::Largest => RootPolicy::Largest,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn params(cli: &Cli) -> anyhow::Result<RawParams> {
    let mut raw = match &cli.config {
        Some(path) => read_json(path)?,
        None => RawParams::base(),
    };
    for s in &cli.set {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects NAME=VALUE, got {s:?}"))?;
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("--set {name}: not a number"))?;
        set_param(&mut raw, name.trim(), value)?;
    }
    Ok(raw)
}

fn write_out(cli: &Cli, bytes: &[u8]) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => Ok(io::stdout().write_all(bytes)?),
    }
}

/// JSON, or a one-row CSV of the scalar leaves (nested keys joined by dots).
fn emit<T: Serialize>(cli: &Cli, default: Format, value: &T) -> anyhow::Result<()> {
    match cli.format.unwrap_or(default) {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            write_out(cli, text.as_bytes())
        }
        Format::Csv => {
            let mut cols = Vec::new();
            flatten("", &serde_json::to_value(value)?, &mut cols);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(cols.iter().map(|c| c.0.as_str()))?;
            w.write_record(cols.iter().map(|c| c.1.as_str()))?;
            write_out(cli, &w.into_inner()?)
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object()) => {
            let cells: Vec<String> = a.iter().map(scalar).collect();
            out.push((prefix.to_string(), cells.join(";")));
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Serialize)]
struct ClassifyDoc {
    regime: String,
    gamma1: Option<f64>,
    gamma1_roots: Vec<f64>,
    psi_variant: Option<PsiVariant>,
    swapped: bool,
}

fn classify(cli: &Cli, dump_psi: bool) -> anyhow::Result<u8> {
    let p = params(cli)?.validate()?;
    let (canon, swapped) = canonicalize(&p);
    if dump_psi {
        // coefficients belong to the canonical labeling (a1 <= a2)
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["variant", "c0", "c1", "c2", "c3", "c4"])?;
        for v in [PsiVariant::General, PsiVariant::Line1Ceded, PsiVariant::Line2Ceded] {
            let psi = build_psi(&canon, v);
            let mut rec = vec![v.name().to_string()];
            rec.extend(psi.coeffs.iter().map(|c| format!("{c:e}")));
            w.write_record(&rec)?;
        }
        write_out(cli, &w.into_inner()?)?;
        return Ok(0);
    }
    let c = classify_regime(&canon, policy(cli))?;
    let tag = if swapped { c.regime.tag.swapped() } else { c.regime.tag };
    let doc = ClassifyDoc {
        regime: tag.name().to_string(),
        gamma1: c.regime.gamma1,
        gamma1_roots: c.roots,
        psi_variant: c.variant,
        swapped,
    };
    emit(cli, Format::Json, &doc)?;
    Ok(0)
}

fn eval(cli: &Cli, x_min: f64, x_max: Option<f64>, points: usize) -> anyhow::Result<u8> {
    let sol = solve_with(&params(cli)?.validate()?, policy(cli))?;
    let x_max = x_max.unwrap_or(1.5 * sol.bstar.max(1.0 / 1.5));
    if !(x_min >= 0.0 && x_max > x_min && points >= 2) {
        return Err(Error::Config(format!(
            "need 0 <= x_min < x_max and points >= 2, got {x_min}, {x_max}, {points}"
        ))
        .into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "g", "g_prime", "pi1", "pi2", "theta1", "theta2", "entropy_rate"])?;
    for k in 0..points {
        let x = if k + 1 == points {
            x_max
        } else {
            x_min + (x_max - x_min) * k as f64 / (points - 1) as f64
        };
        let (g, gp, _) = sol.g_all(x);
        let mut rec = vec![x.to_string(), g.to_string(), gp.to_string()];
        match sol.strategy_reported(x) {
            Ok(s) => rec.extend([s.pi1, s.pi2, s.theta1, s.theta2, s.entropy_rate].map(|v| v.to_string())),
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&rec)?;
    }
    write_out(cli, &w.into_inner()?)?;
    Ok(0)
}

#[derive(Serialize)]
struct FrontierDoc {
    parameter: String,
    frontier: f64,
    lo: f64,
    hi: f64,
}

fn sweep(cli: &Cli, args: &SweepArgs) -> anyhow::Result<u8> {
    let base = params(cli)?;
    if let Some(f) = &args.frontier {
        let parts: Vec<&str> = f.split(':').collect();
        let [name, lo, hi] = parts[..] else {
            return Err(Error::Config(format!("--frontier expects name:lo:hi, got {f:?}")).into());
        };
        let (lo, hi): (f64, f64) = (lo.parse()?, hi.parse()?);
        let value = frontier(&base, name, lo, hi, 1e-6)?;
        emit(
            cli,
            Format::Json,
            &FrontierDoc {
                parameter: name.to_string(),
                frontier: value,
                lo,
                hi,
            },
        )?;
        return Ok(0);
    }
    let spec = match &args.spec {
        Some(path) => read_json(path)?,
        None => SweepSpec {
            axis1: Axis::parse(args.axis1.as_deref().unwrap_or_default())?,
            axis2: args.axis2.as_deref().map(Axis::parse).transpose()?,
            outputs: match &args.outputs {
                Some(s) => s.split(',').map(|f| Field::parse(f.trim())).collect::<Result<_, _>>()?,
                None => Field::ALL.to_vec(),
            },
        },
    };
    let rows = run_sweep(&base, &spec)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &spec, &rows)?;
            write_out(cli, &buf)?;
        }
        Format::Json => emit(cli, Format::Json, &rows)?,
    }
    Ok(0)
}

fn pair(s: &str) -> anyhow::Result<[f64; 2]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err(Error::Config(format!("expected two comma-separated numbers, got {s:?}")).into()),
    }
}

fn simulate_cmd(cli: &Cli, args: &SimArgs) -> anyhow::Result<u8> {
    let sol = solve_with(&params(cli)?.validate()?, policy(cli))?;
    let mut cfg: SimConfig = match &args.sim_config {
        Some(path) => read_json(path)?,
        None => SimConfig::default(),
    };
    if let Some(x0) = args.x0 {
        cfg.x0 = x0;
    }
    if let (Some(x1), Some(x2)) = (args.x1, args.x2) {
        cfg.x1 = x1;
        cfg.x2 = x2;
        cfg.mode = SimMode::TwoLine;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(n) = args.n_paths {
        cfg.n_paths = n;
    }
    if args.t_max.is_some() {
        cfg.t_max = args.t_max;
    }
    if args.kill_after.is_some() {
        cfg.kill_after = args.kill_after;
    }
    if let Some(k) = args.substeps {
        cfg.substeps = k;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.antithetic |= args.antithetic;
    if args.fix_pi.is_some() || args.fix_theta.is_some() {
        cfg.policy = Policy::FixedOverride {
            pi: args.fix_pi.as_deref().map(pair).transpose()?,
            theta: args.fix_theta.as_deref().map(pair).transpose()?,
        };
    }
    cfg.keep_paths = args.paths_csv.is_some();
    let mut result: SimResult = simulate(&sol, &cfg)?;
    if let (Some(path), Some(paths)) = (&args.paths_csv, result.paths.take()) {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record([
            "path_id",
            "ruin_time",
            "discounted_dividends",
            "discounted_penalty",
            "transfer_from1",
            "transfer_from2",
            "killed",
        ])?;
        for p in &paths {
            w.write_record([
                p.path_id.to_string(),
                p.ruin_time.map(|t| t.to_string()).unwrap_or_default(),
                p.discounted_dividends.to_string(),
                p.discounted_penalty.to_string(),
                p.transfer_from1.to_string(),
                p.transfer_from2.to_string(),
                p.killed.to_string(),
            ])?;
        }
        w.flush()?;
    }
    emit(
        cli,
        Format::Json,
        &SimOutput {
            g_x0: sim_reference(&sol, &cfg),
            result,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SimOutput {
    /// Closed-form value at the starting aggregate reserve.
    g_x0: f64,
    #[serde(flatten)]
    result: SimResult,
}

fn sim_reference(sol: &robust_dividend::ClosedFormSolution, cfg: &SimConfig) -> f64 {
    let x = match cfg.mode {
        SimMode::Aggregate => cfg.x0,
        SimMode::TwoLine => cfg.x1 + cfg.x2,
    };
    sol.value_g(x)
}
