//! Plot-ready coverage-vs-overhead and delay-vs-overhead tables.

use serde::{Deserialize, Serialize};

use crate::metrics::AggregateRow;
use crate::protocol::PolicyKind;
use crate::stimulus::Step;

/// One point of a curve. `value` is mean coverage or mean delay depending on
/// the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub policy: PolicyKind,
    pub sigma: f64,
    pub delta: Step,
    pub alpha: f64,
    pub t_mon: Step,
    pub rho: f64,
    pub value: f64,
    pub sd: f64,
}

impl CurvePoint {
    fn series_key(&self) -> (PolicyKind, u64, Step, u64, Step) {
        (
            self.policy,
            self.sigma.to_bits(),
            self.delta,
            self.alpha.to_bits(),
            self.t_mon,
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Curves {
    pub coverage: Vec<CurvePoint>,
    pub delay: Vec<CurvePoint>,
}

/// Splits aggregated rows into per-series curves sorted by overhead ratio.
/// Rows without an overhead ratio are skipped, as are rows below `rho_min`.
pub fn emit_curves(rows: &[AggregateRow], rho_min: Option<f64>) -> Curves {
    let mut curves = Curves::default();
    for row in rows {
        let Some(rho) = row.rho else { continue };
        if rho_min.is_some_and(|min| rho < min) {
            continue;
        }
        let point = |value: f64, sd: Option<f64>| CurvePoint {
            policy: row.policy,
            sigma: row.sigma,
            delta: row.delta,
            alpha: row.alpha,
            t_mon: row.t_mon,
            rho,
            value,
            sd: sd.unwrap_or(0.0),
        };
        if let Some(c) = row.coverage {
            curves.coverage.push(point(c, row.coverage_sd));
        }
        if let Some(d) = row.delay {
            curves.delay.push(point(d, row.delay_sd));
        }
    }
    for table in [&mut curves.coverage, &mut curves.delay] {
        table.sort_by(|a, b| {
            a.series_key()
                .cmp(&b.series_key())
                .then(a.rho.total_cmp(&b.rho))
        });
    }
    curves
}

/// Piecewise-linear interpolation of `(x, y)` points (any order) at `x`.
/// `None` outside the covered range.
pub fn interpolate(points: &[(f64, f64)], x: f64) -> Option<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (first, last) = (pts.first()?, pts.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 {
            if x1 == x0 {
                return Some((y0 + y1) / 2.0);
            }
            return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
        }
    }
    Some(first.1)
}
