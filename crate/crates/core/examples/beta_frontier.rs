//! Sweep the line-1 ambiguity level with beta2 = 5 and locate where the strategy turns degenerate.

use robust_dividend::sweep::{frontier, run_sweep, write_csv, Axis, Field, SweepSpec};
use robust_dividend::RawParams;

fn main() -> robust_dividend::Result<()> {
    let base = RawParams::base().with_betas(1.0, 5.0);
    let spec = SweepSpec {
        axis1: Axis::parse("beta1:0:40:9")?,
        axis2: None,
        outputs: vec![Field::Regime, Field::W0, Field::Bstar],
    };
    let rows = run_sweep(&base, &spec)?;
    write_csv(std::io::stdout(), &spec, &rows)?;

    let b = frontier(&base, "beta1", 0.0, 40.0, 1e-6)?;
    println!("degenerate from beta1 = {b:.6}");
    Ok(())
}
