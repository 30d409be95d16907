//! Parameter grids over one or two axes, emitted as CSV rows for contour plots.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::solve;
use crate::error::{Error, Result};
use crate::model::RawParams;

pub const PARAM_NAMES: [&str; 9] = ["mu1", "mu2", "sigma1", "sigma2", "rho", "delta", "a1", "beta1", "beta2"];

/// Output columns a sweep can emit, in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Regime,
    W0,
    Bstar,
    W1,
    W2,
}

impl Field {
    pub const ALL: [Field; 5] = [Field::Regime, Field::W0, Field::Bstar, Field::W1, Field::W2];

    pub fn name(self) -> &'static str {
        match self {
            Field::Regime => "regime",
            Field::W0 => "w0",
            Field::Bstar => "bstar",
            Field::W1 => "w1",
            Field::W2 => "w2",
        }
    }

    pub fn parse(s: &str) -> Result<Field> {
        Field::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep output {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    /// Parse `name:lo:hi:count`.
    pub fn parse(s: &str) -> Result<Axis> {
        let bad = || Error::Config(format!("axis must look like name:lo:hi:count, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, count] = parts[..] else {
            return Err(bad());
        };
        let axis = Axis {
            name: name.to_string(),
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            count: count.parse().map_err(|_| bad())?,
        };
        axis.check()?;
        Ok(axis)
    }

    fn check(&self) -> Result<()> {
        if !PARAM_NAMES.contains(&self.name.as_str()) {
            return Err(Error::Config(format!(
                "unknown parameter {:?}; expected one of {PARAM_NAMES:?}",
                self.name
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::Config(format!("axis {} has a non-finite range", self.name)));
        }
        if self.count < 2 {
            return Err(Error::Config(format!("axis {} needs at least 2 points", self.name)));
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    #[serde(default = "all_fields")]
    pub outputs: Vec<Field>,
}

fn all_fields() -> Vec<Field> {
    Field::ALL.to_vec()
}

impl SweepSpec {
    pub fn check(&self) -> Result<()> {
        self.axis1.check()?;
        if let Some(a) = &self.axis2 {
            a.check()?;
            if a.name == self.axis1.name {
                return Err(Error::Config(format!("both axes vary {}", a.name)));
            }
        }
        if self.outputs.is_empty() {
            return Err(Error::Config("no sweep outputs selected".into()));
        }
        Ok(())
    }
}

/// Set one named parameter. Setting `a1` also sets `a2 = 1 - a1`.
pub fn set_param(raw: &mut RawParams, name: &str, value: f64) -> Result<()> {
    match name {
        "mu1" => raw.mu1 = value,
        "mu2" => raw.mu2 = value,
        "sigma1" => raw.sigma1 = value,
        "sigma2" => raw.sigma2 = value,
        "rho" => raw.rho = value,
        "delta" => raw.delta = value,
        "a1" => {
            raw.a1 = value;
            raw.a2 = Some(1.0 - value);
        }
        "beta1" => raw.beta1 = value,
        "beta2" => raw.beta2 = value,
        _ => return Err(Error::Config(format!("unknown parameter {name:?}"))),
    }
    Ok(())
}

/// One grid point. Numeric fields are `None` where they do not exist.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    /// Regime name in the caller's labels, or `Error`.
    pub regime: String,
    pub w0: Option<f64>,
    /// Blank for degenerate points too, so they show up as a gap in contour plots.
    pub bstar: Option<f64>,
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub error: Option<String>,
}

pub fn evaluate_point(base: &RawParams, assignments: &[(&str, f64)]) -> SweepRow {
    let mut raw = *base;
    let axis1 = assignments[0].1;
    let axis2 = assignments.get(1).map(|a| a.1);
    let outcome = assignments
        .iter()
        .try_for_each(|(n, v)| set_param(&mut raw, n, *v))
        .and_then(|_| raw.validate())
        .and_then(|p| solve(&p));
    match outcome {
        Ok(sol) => {
            let t = sol.thresholds;
            let (w1, w2) = match t {
                Some(t) if sol.swapped => (Some(t.w2), Some(t.w1)),
                Some(t) => (Some(t.w1), Some(t.w2)),
                None => (None, None),
            };
            SweepRow {
                axis1,
                axis2,
                regime: sol.reported_tag().name().to_string(),
                w0: t.map(|t| t.w0),
                bstar: (!sol.is_degenerate()).then_some(sol.bstar),
                w1,
                w2,
                error: None,
            }
        }
        Err(e) => SweepRow {
            axis1,
            axis2,
            regime: "Error".into(),
            w0: None,
            bstar: None,
            w1: None,
            w2: None,
            error: Some(e.to_string()),
        },
    }
}

/// Evaluate the grid in parallel; rows come back in grid order (axis1 outer).
pub fn run_sweep(base: &RawParams, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.check()?;
    let a1 = &spec.axis1;
    let points: Vec<(usize, Option<usize>)> = match &spec.axis2 {
        None => (0..a1.count).map(|i| (i, None)).collect(),
        Some(a2) => (0..a1.count)
            .flat_map(|i| (0..a2.count).map(move |j| (i, Some(j))))
            .collect(),
    };
    Ok(points
        .into_par_iter()
        .map(|(i, j)| {
            let mut asg = vec![(a1.name.as_str(), a1.value(i))];
            if let (Some(a2), Some(j)) = (&spec.axis2, j) {
                asg.push((a2.name.as_str(), a2.value(j)));
            }
            evaluate_point(base, &asg)
        })
        .collect())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10}")).unwrap_or_default()
}

/// Write rows as CSV: axis columns named after the parameters, then the chosen outputs.
pub fn write_csv<W: std::io::Write>(out: W, spec: &SweepSpec, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![spec.axis1.name.clone()];
    if let Some(a) = &spec.axis2 {
        header.push(a.name.clone());
    }
    let fields: Vec<Field> = Field::ALL.into_iter().filter(|f| spec.outputs.contains(f)).collect();
    header.extend(fields.iter().map(|f| f.name().to_string()));
    w.write_record(&header).map_err(io_err)?;
    for r in rows {
        let mut rec = vec![format!("{}", r.axis1)];
        if spec.axis2.is_some() {
            rec.push(r.axis2.map(|v| v.to_string()).unwrap_or_default());
        }
        for f in &fields {
            rec.push(match f {
                Field::Regime => r.regime.clone(),
                Field::W0 => cell(r.w0),
                Field::Bstar => cell(r.bstar),
                Field::W1 => cell(r.w1),
                Field::W2 => cell(r.w2),
            });
        }
        w.write_record(&rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))?;
    Ok(())
}

fn io_err(e: csv::Error) -> Error {
    Error::Config(format!("csv output failed: {e}"))
}

/// Largest value of parameter `name` in `[lo, hi]` that still gives a
/// nondegenerate solution, by bisection on the regime boundary. Needs a
/// nondegenerate `lo` and a degenerate (or failing) `hi`.
pub fn frontier(base: &RawParams, name: &str, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let alive = |v: f64| -> Result<bool> {
        let mut raw = *base;
        set_param(&mut raw, name, v)?;
        let p = raw.validate()?;
        Ok(solve(&p).map(|s| !s.is_degenerate()).unwrap_or(false))
    };
    if !alive(lo)? {
        return Err(Error::Config(format!("{name} = {lo} is already degenerate")));
    }
    if alive(hi)? {
        return Err(Error::Config(format!("{name} = {hi} is still nondegenerate")));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if alive(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("beta1:0:40:201").unwrap();
        assert_eq!((a.lo, a.hi, a.count), (0.0, 40.0, 201));
        assert_eq!(a.value(200), 40.0);
        assert_eq!(a.value(100), 20.0);
        assert!(Axis::parse("beta1:0:40:1").is_err());
        assert!(Axis::parse("gamma:0:1:3").is_err());
        assert!(Axis::parse("beta1:0:inf:3").is_err());
        assert!(Axis::parse("beta1:0:1").is_err());
    }

    #[test]
    fn beta1_frontier_with_beta2_five() {
        let base = RawParams::base().with_betas(1.0, 5.0);
        let f = frontier(&base, "beta1", 0.0, 40.0, 1e-4).unwrap();
        assert!((35.4..=35.7).contains(&f), "{f}");
    }

    #[test]
    fn rows_keep_grid_order() {
        let spec = SweepSpec {
            axis1: Axis::parse("beta1:0:2:3").unwrap(),
            axis2: Some(Axis::parse("beta2:0:1:2").unwrap()),
            outputs: all_fields(),
        };
        let rows = run_sweep(&RawParams::base(), &spec).unwrap();
        let got: Vec<(f64, Option<f64>)> = rows.iter().map(|r| (r.axis1, r.axis2)).collect();
        assert_eq!(got[..3], [(0.0, Some(0.0)), (0.0, Some(1.0)), (1.0, Some(0.0))]);
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn degenerate_corner_is_blank() {
        let spec = SweepSpec {
            axis1: Axis::parse("sigma1:1.5:60:2").unwrap(),
            axis2: Some(Axis::parse("sigma2:1:60:2").unwrap()),
            outputs: all_fields(),
        };
        let rows = run_sweep(&RawParams::base(), &spec).unwrap();
        assert!(rows[0].bstar.is_some());
        assert_eq!(rows[3].regime, "Degenerate");
        assert_eq!((rows[3].bstar, rows[3].w0), (None, None));
    }

    #[test]
    fn failing_points_become_error_rows() {
        let spec = SweepSpec {
            axis1: Axis::parse("rho:0.5:1.5:3").unwrap(),
            axis2: None,
            outputs: all_fields(),
        };
        let rows = run_sweep(&RawParams::base(), &spec).unwrap();
        assert_eq!(rows[0].regime, "GeneralInterior_NeqCase");
        assert_eq!(rows[1].regime, "Error");
        assert_eq!(rows[2].regime, "Error");
        let mut buf = Vec::new();
        write_csv(&mut buf, &spec, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho,regime,w0,bstar,w1,w2\n"));
        assert!(text.contains("\n1,Error,,,,\n"));
    }
}
