//! Monte Carlo estimate of the robust objective under the barrier strategy, next to g(x0).

use robust_dividend::simulator::{simulate_aggregate, SimConfig};
use robust_dividend::{solve, RawParams};

fn main() -> robust_dividend::Result<()> {
    let sol = solve(&RawParams::base().validate()?)?;
    for x0 in [0.3, 1.0, 1.8] {
        let cfg = SimConfig {
            x0,
            dt: 1e-3,
            n_paths: 20_000,
            kill_after: Some(4.0),
            seed: 7,
            ..Default::default()
        };
        let r = simulate_aggregate(&sol, &cfg)?;
        println!(
            "x0 {x0:.1}  g {:.4}  J {:.4} +- {:.4}  dividends {:.4}  penalty {:.4}  ruined {:.3}",
            sol.value_g(x0),
            r.j_hat,
            r.std_err,
            r.dividend_part,
            r.penalty_part,
            r.ruined_fraction
        );
    }
    Ok(())
}
