//! Recompute both reference tables of thresholds and barriers.

use robust_dividend::reproduce::{reproduce, TableId};

fn main() -> robust_dividend::Result<()> {
    for table in [TableId::Ambiguity, TableId::Symmetric] {
        let report = reproduce(table)?;
        print!("{}", report.to_text());
        println!();
    }
    Ok(())
}
