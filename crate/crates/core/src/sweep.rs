//! Parameter sweeps: independent runs of one scenario with a single
//! parameter varied, executed in parallel, plus the orderings expected
//! across the results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::runner::{run_scenario, RunOutcome};
use crate::scenario::{ScenarioFile, SweepParam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub error: Option<String>,
    pub active_points: Option<usize>,
    pub max_lateral_deviation: Option<f64>,
    pub driven_final: Vec<Point2>,
    pub total_sweeps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    pub name: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub scenario: String,
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
    pub orderings: Vec<Ordering>,
}

impl SweepReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none())
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{:>12}  {:>6}  {:>7}  {:>12}  {:>8}\n",
            self.param.as_str(),
            "status",
            "active",
            "max_dev_um",
            "sweeps"
        );
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        for r in &self.rows {
            s.push_str(&format!(
                "{:>12}  {:>6}  {:>7}  {:>12}  {:>8}\n",
                r.value,
                r.status,
                opt(r.active_points.map(|a| a.to_string())),
                opt(r.max_lateral_deviation.map(|d| format!("{d:.4}"))),
                opt(r.total_sweeps.map(|t| t.to_string())),
            ));
        }
        for o in &self.orderings {
            s.push_str(&format!("{}: {}\n", o.name, if o.holds { "holds" } else { "violated" }));
        }
        s
    }
}

/// Variant scenarios for a sweep, failing fast on values the scenario
/// cannot accept.
pub fn sweep_variants(base: &ScenarioFile, param: SweepParam, values: &[f64]) -> Vec<crate::Result<ScenarioFile>> {
    values.iter().map(|&v| base.with_param(param, v)).collect()
}

fn row(value: f64, outcome: crate::Result<RunOutcome>) -> (SweepRow, Option<RunOutcome>) {
    match outcome {
        Ok(o) => {
            let m = &o.metrics;
            let r = SweepRow {
                value,
                status: "ok".into(),
                error: None,
                active_points: m.episodes.first().map(|e| e.segmentation.active_point_ids.len()),
                max_lateral_deviation: m
                    .chains
                    .iter()
                    .filter_map(|c| c.max_lateral_deviation_undriven)
                    .reduce(f64::max),
                driven_final: m.episodes.iter().map(|e| e.driven_final).collect(),
                total_sweeps: Some(m.episodes.iter().filter_map(|e| e.settle_sweeps).sum()),
            };
            (r, Some(o))
        }
        Err(e) => (
            SweepRow {
                value,
                status: if matches!(e, crate::Error::NonConvergence { .. }) {
                    "nonconv".into()
                } else {
                    "error".into()
                },
                error: Some(e.to_string()),
                active_points: None,
                max_lateral_deviation: None,
                driven_final: Vec::new(),
                total_sweeps: None,
            },
            None,
        ),
    }
}

fn ordered<T: PartialOrd + Copy>(rows: &[(f64, T)], ok: impl Fn(T, T) -> bool) -> bool {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted.windows(2).all(|w| ok(w[0].1, w[1].1))
}

/// Runs every value in parallel. Rows keep the order of `values`.
pub fn run_sweep(base: &ScenarioFile, param: SweepParam, values: &[f64]) -> (SweepReport, Vec<Option<RunOutcome>>) {
    let results: Vec<(SweepRow, Option<RunOutcome>)> = values
        .par_iter()
        .map(|&v| row(v, base.with_param(param, v).and_then(|s| run_scenario(&s))))
        .collect();
    let (rows, outcomes): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let mut orderings = Vec::new();
    let all_ok = rows.iter().all(|r| r.error.is_none());
    if all_ok {
        let dev: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.max_lateral_deviation.map(|d| (r.value, d)))
            .collect();
        match param {
            SweepParam::Theta => {
                let active: Vec<(f64, usize)> =
                    rows.iter().filter_map(|r| r.active_points.map(|a| (r.value, a))).collect();
                orderings.push(Ordering {
                    name: "active points strictly decrease with theta".into(),
                    holds: ordered(&active, |a, b| b < a),
                });
            }
            SweepParam::K => orderings.push(Ordering {
                name: "max lateral deviation non-increasing in k".into(),
                holds: ordered(&dev, |a, b| b <= a),
            }),
            SweepParam::L => orderings.push(Ordering {
                name: "max lateral deviation non-decreasing in l".into(),
                holds: ordered(&dev, |a, b| b >= a),
            }),
        }
        if matches!(param, SweepParam::K | SweepParam::L) {
            let first = &rows[0].driven_final;
            orderings.push(Ordering {
                name: "driven points end at identical positions".into(),
                holds: rows.iter().all(|r| &r.driven_final == first),
            });
        }
    }
    (
        SweepReport {
            scenario: base.name.clone(),
            param,
            rows,
            orderings,
        },
        outcomes,
    )
}
