//! Recompute the reference `(w0, b*)` tables and diff them against the goldens.

use std::fmt::Write as _;

use serde::Serialize;

use crate::closed_form::solve;
use crate::error::{Error, Result};
use crate::model::RawParams;

pub const GOLDENS: &str = include_str!("../data/goldens.txt");
pub const W0_TOL: f64 = 5e-6;
pub const BSTAR_TOL: f64 = 5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableId {
    Ambiguity,
    Symmetric,
}

impl TableId {
    pub fn name(self) -> &'static str {
        match self {
            TableId::Ambiguity => "ambiguity",
            TableId::Symmetric => "symmetric",
        }
    }

    pub fn parse(s: &str) -> Result<TableId> {
        match s {
            "ambiguity" => Ok(TableId::Ambiguity),
            "symmetric" => Ok(TableId::Symmetric),
            _ => Err(Error::Config(format!(
                "unknown table {s:?}; expected ambiguity or symmetric"
            ))),
        }
    }

    pub fn base(self) -> RawParams {
        match self {
            TableId::Ambiguity => RawParams::base(),
            TableId::Symmetric => RawParams::symmetric(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Golden {
    pub beta1: f64,
    pub beta2: f64,
    pub w0: f64,
    pub bstar: f64,
}

/// Reference rows of one table, in file order.
pub fn goldens(table: TableId) -> Vec<Golden> {
    GOLDENS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 5 || f[0] != table.name() {
                return None;
            }
            let n = |i: usize| f[i].parse::<f64>().expect("goldens file is well formed");
            Some(Golden {
                beta1: n(1),
                beta2: n(2),
                w0: n(3),
                bstar: n(4),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproRow {
    pub beta1: f64,
    pub beta2: f64,
    pub w0: f64,
    pub bstar: f64,
    pub ref_w0: f64,
    pub ref_bstar: f64,
    pub dw0: f64,
    pub dbstar: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproReport {
    pub table: TableId,
    pub rows: Vec<ReproRow>,
    /// Symmetric table only: rows (1,0) and (0,1) agree bit for bit.
    pub mirror_identical: Option<bool>,
    pub pass: bool,
}

pub fn reproduce(table: TableId) -> Result<ReproReport> {
    let mut rows = Vec::new();
    for g in goldens(table) {
        let sol = solve(&table.base().with_betas(g.beta1, g.beta2).validate()?)?;
        let (w0, bstar) = (sol.w0(), sol.bstar);
        let (dw0, dbstar) = (w0 - g.w0, bstar - g.bstar);
        rows.push(ReproRow {
            beta1: g.beta1,
            beta2: g.beta2,
            w0,
            bstar,
            ref_w0: g.w0,
            ref_bstar: g.bstar,
            dw0,
            dbstar,
            pass: dw0.abs() <= W0_TOL && dbstar.abs() <= BSTAR_TOL,
        });
    }
    let mirror_identical = match table {
        TableId::Symmetric => {
            let find = |b1: f64, b2: f64| rows.iter().find(|r| r.beta1 == b1 && r.beta2 == b2);
            Some(match (find(1.0, 0.0), find(0.0, 1.0)) {
                (Some(a), Some(b)) => a.w0.to_bits() == b.w0.to_bits() && a.bstar.to_bits() == b.bstar.to_bits(),
                _ => false,
            })
        }
        TableId::Ambiguity => None,
    };
    let pass = rows.iter().all(|r| r.pass) && mirror_identical != Some(false);
    Ok(ReproReport {
        table,
        rows,
        mirror_identical,
        pass,
    })
}

impl ReproReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "table: {}", self.table.name());
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>11} {:>11} {:>10} {:>11} {:>11} {:>10}  ok",
            "beta1", "beta2", "w0", "ref w0", "dw0", "b*", "ref b*", "db*"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>11.7} {:>11.7} {:>10.2e} {:>11.6} {:>11.6} {:>10.2e}  {}",
                r.beta1,
                r.beta2,
                r.w0,
                r.ref_w0,
                r.dw0,
                r.bstar,
                r.ref_bstar,
                r.dbstar,
                if r.pass { "yes" } else { "NO" }
            );
        }
        if let Some(m) = self.mirror_identical {
            let _ = writeln!(
                s,
                "rows (1,0) and (0,1) bitwise identical: {}",
                if m { "yes" } else { "NO" }
            );
        }
        let _ = writeln!(s, "{}", if self.pass { "PASS" } else { "FAIL" });
        s
    }
}
