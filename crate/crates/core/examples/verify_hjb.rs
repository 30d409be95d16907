//! Check the closed form against the HJB-Isaacs equation on a grid and report the gaps.

use robust_dividend::verify::{verify, VerifyConfig};
use robust_dividend::{solve, RawParams};

fn main() -> robust_dividend::Result<()> {
    let cases = [
        ("base", RawParams::base()),
        ("no ambiguity", RawParams::base().with_betas(0.0, 0.0)),
        (
            "uncorrelated",
            RawParams {
                rho: 0.0,
                ..RawParams::base()
            },
        ),
        (
            "degenerate",
            RawParams {
                delta: 100.0,
                ..RawParams::base()
            },
        ),
    ];
    let cfg = VerifyConfig::default();
    for (name, raw) in cases {
        let sol = solve(&raw.validate()?)?;
        let r = verify(&sol, &cfg);
        println!(
            "{name:<14} {:<24} residual {:.3e} at x={:.4}  pasting {:.3e}  saddle {}  passed {}",
            sol.reported_tag().name(),
            r.max_hjb_residual,
            r.residual_argmax_x,
            r.max_pasting_gap,
            r.saddle_violations,
            r.passed
        );
    }
    Ok(())
}
