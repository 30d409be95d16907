//! Solve the base configuration and print the strategy at a few reserve levels.

use robust_dividend::report::SolveDoc;
use robust_dividend::{solve, RawParams};

fn main() -> robust_dividend::Result<()> {
    let raw = RawParams::base();
    let sol = solve(&raw.validate()?)?;
    let doc = SolveDoc::new(&raw, &sol);
    println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));

    println!(
        "{:>6} {:>9} {:>6} {:>6} {:>8} {:>8}",
        "x", "g", "pi1", "pi2", "theta1", "theta2"
    );
    for x in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let s = sol.strategy(x)?;
        println!(
            "{x:>6.2} {:>9.5} {:>6.3} {:>6.3} {:>8.4} {:>8.4}",
            sol.value_g(x),
            s.pi1,
            s.pi2,
            s.theta1,
            s.theta2
        );
    }
    Ok(())
}
