//! Two lines sharing capital. Line 1 passes its excess over b* to line 2, which pays the dividend,
//! so the line-1 transfer total includes the dividend flow.

use robust_dividend::simulator::{simulate_two_lines, trace_two_lines, SimConfig, SimMode};
use robust_dividend::{solve, RawParams};

fn main() -> robust_dividend::Result<()> {
    let sol = solve(&RawParams::base().validate()?)?;
    let cfg = SimConfig {
        x1: 0.2,
        x2: 0.8,
        mode: SimMode::TwoLine,
        dt: 1e-3,
        n_paths: 5_000,
        kill_after: Some(4.0),
        seed: 1,
        ..Default::default()
    };
    let r = simulate_two_lines(&sol, &cfg)?;
    println!("J {:.4} +- {:.4} (g = {:.4})", r.j_hat, r.std_err, sol.value_g(1.0));
    println!(
        "mean transfer out of line 1 {:.4}, out of line 2 {:.4}",
        r.mean_transfer_from1, r.mean_transfer_from2
    );

    let (xs, rec) = trace_two_lines(
        &sol,
        &SimConfig {
            t_max: Some(5.0),
            kill_after: None,
            ..cfg
        },
        0,
    )?;
    for (k, (a, b)) in xs.iter().enumerate().step_by(500) {
        println!("t {:.1}  x1 {a:.4}  x2 {b:.4}", k as f64 * cfg.dt);
    }
    println!("dividends paid on this path: {:.4}", rec.discounted_dividends);
    Ok(())
}
