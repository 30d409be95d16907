//! Hold one player fixed and let the other deviate: neither deviation should pay.

use robust_dividend::simulator::{challenge_objective, Policy, SimConfig};
use robust_dividend::{solve, RawParams};

fn main() -> robust_dividend::Result<()> {
    let sol = solve(&RawParams::base().validate()?)?;
    let base = SimConfig {
        x0: 1.0,
        dt: 1e-3,
        n_paths: 20_000,
        kill_after: Some(4.0),
        seed: 9,
        ..Default::default()
    };
    println!("g(1) = {:.4}", sol.value_g(1.0));

    // nature stops distorting: the insurer can only gain
    let calm = SimConfig {
        policy: Policy::FixedOverride {
            pi: None,
            theta: Some([0.0, 0.0]),
        },
        ..base
    };
    let r = challenge_objective(&sol, &calm)?;
    println!("theta = 0     J {:.4} +- {:.4}", r.j_hat, r.std_err);

    // the insurer cedes everything: reserves never move, nothing is paid
    let ceded = SimConfig {
        policy: Policy::FixedOverride {
            pi: Some([0.0, 0.0]),
            theta: None,
        },
        ..base
    };
    let r = challenge_objective(&sol, &ceded)?;
    println!("pi = (0, 0)   J {:.4} +- {:.4}", r.j_hat, r.std_err);
    Ok(())
}
