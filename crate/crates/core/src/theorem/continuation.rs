use std::io::Write;

use serde::{Deserialize, Serialize};

use super::minimize::{minimize, GRAD_TOL};
use super::objective::Objective1D;
use crate::error::{Error, Result};

/// Slope of the stationary curve `lambda(w) = -L'(w) / w` at a local minimum.
///
/// Requires `(lambda, omega)` to be stationary for `L + lambda/2 w^2`.
pub fn dlambda_domega(obj: &dyn Objective1D, lambda: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Singular("d lambda / d omega undefined at omega = 0".into()));
    }
    let g = obj.d1(omega) + lambda * omega;
    if g.abs() > 1e3 * GRAD_TOL * (1.0 + lambda.abs()) {
        return Err(Error::InvalidArgument(format!(
            "({lambda}, {omega}) is not stationary: Y' = {g:e}"
        )));
    }
    Ok(-(obj.d2(omega) + lambda) / omega)
}

/// `lambda` for which `omega` is stationary.
pub fn lambda_on_curve(obj: &dyn Objective1D, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(Error::Singular("lambda(omega) undefined at omega = 0".into()));
    }
    Ok(-obj.d1(omega) / omega)
}

/// Local minima along `lambda_0, lambda_0 + step, ...` each warm-started
/// from the previous one.
pub fn continuation_curve(
    obj: &dyn Objective1D,
    lambda0: f64,
    step: f64,
    steps: usize,
    omega_init: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(step >= 0.0) {
        return Err(Error::InvalidArgument(format!("step must be >= 0, got {step}")));
    }
    let mut w = minimize(obj, lambda0, omega_init)?.omega_star;
    let mut out = vec![(lambda0, w)];
    for i in 1..=steps {
        let lambda = lambda0 + step * i as f64;
        w = minimize(obj, lambda, w)?.omega_star;
        out.push((lambda, w));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub objective: String,
    pub lambda0: f64,
    pub omega0: f64,
    pub delta: f64,
    pub omega1: f64,
    /// `|omega1| < |omega0|` (or unchanged for `delta = 0`).
    pub shrinks: bool,
    /// Step was much larger than the first-order prediction.
    pub basin_jump: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<ContinuationRow>,
    /// Starting minima at `omega = 0` or with non-positive curvature.
    pub skipped: usize,
}

impl SuiteReport {
    /// Rows that violate shrinkage, ignoring flagged basin jumps.
    pub fn failures(&self) -> Vec<&ContinuationRow> {
        self.rows.iter().filter(|r| !r.shrinks && !r.basin_jump).collect()
    }

    pub fn jumps(&self) -> usize {
        self.rows.iter().filter(|r| r.basin_jump).count()
    }

    pub fn all_passed(&self) -> bool {
        !self.rows.is_empty() && self.failures().is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Checks that a positive increase of `lambda` shrinks `|omega*|` for each
/// objective, starting minimum and `(lambda0, delta)` pair.
pub fn theorem1_suite(
    objectives: &[Box<dyn Objective1D>],
    lambdas: &[f64],
    deltas: &[f64],
) -> Result<SuiteReport> {
    if deltas.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidArgument("deltas must be >= 0".into()));
    }
    let mut report = SuiteReport::default();
    for obj in objectives {
        for &lambda0 in lambdas {
            let mut starts: Vec<f64> = Vec::new();
            for seed in obj.seeds() {
                let m = minimize(obj.as_ref(), lambda0, seed)?;
                let usable = m.converged
                    && m.omega_star.abs() > 1e-12
                    && obj.d2(m.omega_star) + lambda0 > 0.0;
                if !usable {
                    report.skipped += 1;
                    continue;
                }
                if starts.iter().any(|s| (s - m.omega_star).abs() < 1e-9) {
                    continue;
                }
                starts.push(m.omega_star);
            }
            for &omega0 in &starts {
                let slope = dlambda_domega(obj.as_ref(), lambda0, omega0)?;
                for &delta in deltas {
                    let omega1 = minimize(obj.as_ref(), lambda0 + delta, omega0)?.omega_star;
                    let shrinks = if delta == 0.0 {
                        omega1 == omega0
                    } else {
                        omega1.abs() < omega0.abs()
                    };
                    let predicted = delta / slope.abs();
                    let basin_jump = (omega1 - omega0).abs() > 10.0 * predicted;
                    report.rows.push(ContinuationRow {
                        objective: obj.tag(),
                        lambda0,
                        omega0,
                        delta,
                        omega1,
                        shrinks,
                        basin_jump,
                    });
                }
            }
        }
    }
    Ok(report)
}
