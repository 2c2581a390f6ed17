//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use chainform_core::metrics::lateral_deviations;
use chainform_core::record::global_point_id;
use chainform_core::sweep::sweep_variants;
use chainform_core::{load_scenario, run_scenario, run_sweep, trajectory_csv, RunOutcome, ScenarioFile};

mod common;

use common::{compare, oracle_cases, scenario_path};

const SCENARIOS: [&str; 9] = [
    "baseline",
    "k-sweep",
    "l-sweep",
    "theta-sweep",
    "waves-far",
    "waves-near",
    "letter-P",
    "letter-K",
    "letter-U",
];

const RUNTIME_LIMIT: Duration = Duration::from_secs(5);
const ORACLE_TOL: f64 = 1e-6;
const WAVE_EXTENT_UM: f64 = 60.0;
const WAVE_GAP_UM: f64 = 30.0;
const WAVE_REL_TOL: f64 = 0.20;
const GOLDEN_TOL: f64 = 1e-6;

/// Frozen shape errors at quiescence: (scenario, target index, rms, hausdorff).
const SHAPE_GOLDENS: [(&str, usize, f64, f64); 4] = [
    ("letter-P", 0, 8.098562323092196, 41.981016942472515),
    ("letter-K", 0, 0.0, 0.0),
    ("letter-K", 1, 16.88497017983516, 59.929206960860945),
    ("letter-U", 0, 13.572642777375696, 27.06651723553),
];

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn load(name: &str) -> ScenarioFile {
    load_scenario(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(name: &str) -> RunOutcome {
    run_scenario(&load(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn quiescence() -> Check {
    let mut failures = Vec::new();
    let mut count = 0;
    let mut slowest = Duration::ZERO;
    let mut worst_ratio: f64 = 0.0;
    for name in SCENARIOS {
        let base = load(name);
        let mut variants = vec![(name.to_string(), Ok(base.clone()))];
        if let Some(s) = &base.sweep {
            for (v, variant) in s.values.iter().zip(sweep_variants(&base, s.param, &s.values)) {
                variants.push((format!("{name}[{}={v}]", s.param.as_str()), variant));
            }
        }
        for (label, variant) in variants {
            count += 1;
            let started = Instant::now();
            let outcome = variant.and_then(|s| run_scenario(&s));
            let took = started.elapsed();
            slowest = slowest.max(took);
            match outcome {
                Ok(o) => {
                    let gate = o.prepared.relaxation.gate();
                    for (c, chain) in o.final_chains.iter().enumerate() {
                        let e = chain.max_elongation();
                        worst_ratio = worst_ratio.max(e / gate);
                        if e > gate {
                            failures.push(format!("{label} chain {c}: {e} > {gate}"));
                        }
                    }
                    if took >= RUNTIME_LIMIT {
                        failures.push(format!("{label}: {took:?}"));
                    }
                }
                Err(e) => failures.push(format!("{label}: {e}")),
            }
        }
    }
    let baseline = run("baseline").final_chains[0].max_elongation();
    if baseline > 0.25 {
        failures.push(format!("baseline max elongation {baseline} > 0.25"));
    }
    Check {
        name: "quiescence bound",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!(
                "{count} runs, max elongation/θl {worst_ratio:.4}, baseline {baseline:.4} µm, slowest {slowest:.2?}"
            )
        } else {
            failures.join("; ")
        },
    }
}

fn oracle_equivalence() -> Check {
    let mut worst = (0.0, String::new());
    let cases = oracle_cases();
    for (name, n, driver, path, c, theta) in &cases {
        let m = compare(*n, *driver, path, *c, *theta);
        if m.worst >= worst.0 {
            worst = (m.worst, format!("{name} frame {} point {}", m.frame, m.point));
        }
    }
    Check {
        name: "oracle equivalence",
        pass: worst.0 <= ORACLE_TOL,
        detail: format!("{} cases, worst {:.3e} µm ({})", cases.len(), worst.0, worst.1),
    }
}

fn baseline_properties() -> Check {
    let o = run("baseline");
    let mut problems = Vec::new();
    if let Some((frame, point)) = o.metrics.displacement_cap_violation {
        problems.push(format!("point {point} outmoved the driven point at frame {frame}"));
    }
    let mv = &o.prepared.file.schedule.moves[0];
    let target = *mv.waypoints.last().expect("waypoint");
    let start = &o.prepared.chains[0];
    let end = &o.final_chains[0];
    if end.point(mv.point_id) != target {
        problems.push(format!("endpoint {:?} != {:?}", end.point(mv.point_id), target));
    }
    let disp: Vec<f64> = lateral_deviations(start, end)
        .expect("deviations")
        .iter()
        .map(|d| d.abs())
        .collect();
    let mut by_distance: Vec<usize> = (0..end.len()).filter(|&i| i != mv.point_id).collect();
    by_distance.sort_by_key(|&i| (i.abs_diff(mv.point_id), i));
    for w in by_distance.windows(2) {
        if w[1].abs_diff(mv.point_id) > w[0].abs_diff(mv.point_id) && disp[w[1]] > disp[w[0]] {
            problems.push(format!("lateral displacement rises from point {} to {}", w[0], w[1]));
        }
    }
    Check {
        name: "baseline properties",
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "cap holds over {} frames, lateral decay monotone over {} points, endpoint ({}, {})",
                o.frames.len(),
                by_distance.len(),
                target.x,
                target.y
            )
        } else {
            problems.join("; ")
        },
    }
}

fn sweep_of(name: &str) -> chainform_core::SweepReport {
    let base = load(name);
    let s = base.sweep.clone().expect("sweep section");
    run_sweep(&base, s.param, &s.values).0
}

fn theta_sweep() -> Check {
    let report = sweep_of("theta-sweep");
    let counts: Vec<Option<usize>> = report.rows.iter().map(|r| r.active_points).collect();
    let values: Vec<f64> = report.rows.iter().map(|r| r.value).collect();
    let pass = values == [0.1, 0.2, 0.3]
        && counts.iter().all(Option::is_some)
        && counts.windows(2).all(|w| w[1] < w[0]);
    Check {
        name: "theta sweep ordering",
        pass,
        detail: format!("θ {values:?} active {counts:?}"),
    }
}

fn deviations_and_drivers(report: &chainform_core::SweepReport) -> (Vec<f64>, bool) {
    let devs: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.max_lateral_deviation.unwrap_or(f64::NAN))
        .collect();
    let first = &report.rows[0].driven_final;
    let same = report.rows.iter().all(|r| !r.driven_final.is_empty() && &r.driven_final == first);
    (devs, same)
}

fn k_and_l_sweeps() -> Check {
    let k = sweep_of("k-sweep");
    let l = sweep_of("l-sweep");
    let (k_dev, k_same) = deviations_and_drivers(&k);
    let (l_dev, l_same) = deviations_and_drivers(&l);
    let k_order = k_dev.windows(2).all(|w| w[1] <= w[0]);
    let l_order = l_dev.windows(2).all(|w| w[1] >= w[0]);
    let fmt = |v: &[f64]| v.iter().map(|d| format!("{d:.3}")).collect::<Vec<_>>().join(", ");
    Check {
        name: "k and l sweep orderings",
        pass: k_order && k_same && l_order && l_same,
        detail: format!(
            "k {:?} dev [{}] non-increasing={k_order} same-driver={k_same}; l {:?} dev [{}] non-decreasing={l_order} same-driver={l_same}",
            k.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            fmt(&k_dev),
            l.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            fmt(&l_dev),
        ),
    }
}

fn within(value: f64, nominal: f64) -> bool {
    (value - nominal).abs() <= WAVE_REL_TOL * nominal
}

fn waves_far() -> Check {
    let o = run("waves-far");
    let waves = &o.metrics.final_waves;
    let mut supports: Vec<(f64, f64, f64, usize)> = Vec::new();
    let mut problems = Vec::new();
    for (k, w) in waves.iter().enumerate() {
        match w.support {
            Some((a, b)) => supports.push((a, b, w.peak_deviation, k)),
            None => problems.push(format!("wave {k} has no support")),
        }
    }
    supports.sort_by(|x, y| x.0.total_cmp(&y.0));
    let disjoint = supports.windows(2).all(|w| w[0].1 < w[1].0);
    let extents: Vec<f64> = supports.iter().map(|s| s.1 - s.0).collect();
    let gaps: Vec<f64> = supports.windows(2).map(|w| w[1].0 - w[0].1).collect();
    let extents_ok = extents.len() == 3 && extents.iter().all(|&e| within(e, WAVE_EXTENT_UM));
    let gaps_ok = gaps.len() == 2 && gaps.iter().all(|&g| within(g, WAVE_GAP_UM));
    let sign_ok = waves.len() == 3
        && waves[0].peak_deviation.signum() == waves[1].peak_deviation.signum()
        && waves[2].peak_deviation.signum() == -waves[0].peak_deviation.signum();
    let fmt = |v: &[f64]| v.iter().map(|d| format!("{d:.1}")).collect::<Vec<_>>().join(", ");
    Check {
        name: "waves far apart",
        pass: problems.is_empty() && disjoint && extents_ok && gaps_ok && sign_ok,
        detail: format!(
            "disjoint={disjoint} extents [{}] within 60±20%={extents_ok} gaps [{}] within 30±20%={gaps_ok} c opposite={sign_ok} (peaks {}){}",
            fmt(&extents),
            fmt(&gaps),
            waves.iter().map(|w| format!("{:.2}", w.peak_deviation)).collect::<Vec<_>>().join(", "),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    }
}

fn waves_near() -> Check {
    let o = run("waves-near");
    let eps = &o.episodes;
    let baseline = &o.prepared.chains[0];
    let l = baseline.rest_length();
    let theta = o.prepared.file.solver.threshold;
    let c = &eps[2];
    let c_wave = chainform_core::wave_report(baseline, &c.after, c.point_id, theta, l).expect("wave c");
    let c_dir = c_wave.peak_deviation.signum();
    let before = lateral_deviations(baseline, &c.before).expect("deviations");
    let after = lateral_deviations(baseline, &c.after).expect("deviations");
    let mut overlap = true;
    let mut moved = true;
    let mut notes = Vec::new();
    for (label, e) in [("a", &eps[0]), ("b", &eps[1])] {
        let pre = chainform_core::wave_report(baseline, &c.before, e.point_id, theta, l).expect("wave");
        let post = chainform_core::wave_report(baseline, &c.after, e.point_id, theta, l).expect("wave");
        let overlaps = match (post.support, c_wave.support) {
            (Some((a0, a1)), Some((c0, c1))) => a0 <= c1 && c0 <= a1,
            _ => false,
        };
        overlap &= overlaps;
        let Some((s0, s1)) = pre.support else {
            moved = false;
            notes.push(format!("{label} has no support before c"));
            continue;
        };
        let idx: Vec<usize> = (0..before.len())
            .filter(|&i| (i as f64 * l) >= s0 && (i as f64 * l) <= s1)
            .collect();
        let peak = |d: &[f64]| idx.iter().map(|&i| d[i] * c_dir).fold(f64::NEG_INFINITY, f64::max) * c_dir;
        let (p0, p1) = (peak(&before), peak(&after));
        let toward_c = (p1 - p0) * c_dir > 0.0;
        moved &= toward_c;
        notes.push(format!("{label} overlap={overlaps} peak {p0:.2} -> {p1:.2}"));
    }
    Check {
        name: "waves close together",
        pass: overlap && moved,
        detail: format!("c peak {:.2}; {}", c_wave.peak_deviation, notes.join("; ")),
    }
}

fn letters() -> Check {
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    for name in ["letter-P", "letter-K", "letter-U"] {
        let file = load(name);
        let o = match run_scenario(&file) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        if o.episodes.iter().any(|e| e.settle_sweeps.is_none()) && file.schedule.settle_between {
            problems.push(format!("{name}: missing settle"));
        }
        for mv in &file.schedule.moves {
            let g = global_point_id(&o.prepared.chains, mv.chain, mv.point_id);
            for w in &mv.waypoints {
                let hit = o.frames.iter().any(|f| f.driven == Some(g) && f.points[g] == *w);
                if !hit {
                    problems.push(format!("{name}: point {g} never at ({}, {})", w.x, w.y));
                }
            }
        }
        for (k, t) in o.metrics.shape_errors.iter().enumerate() {
            match SHAPE_GOLDENS.iter().find(|g| g.0 == name && g.1 == k) {
                Some(&(_, _, rms, hd)) => {
                    if (t.error.rms - rms).abs() > GOLDEN_TOL || (t.error.hausdorff - hd).abs() > GOLDEN_TOL {
                        problems.push(format!(
                            "{name}[{k}] rms {:.9} hausdorff {:.9} vs golden {rms} {hd}",
                            t.error.rms, t.error.hausdorff
                        ));
                    }
                }
                None => problems.push(format!("{name}[{k}] has no golden")),
            }
            notes.push(format!("{name}[{k}] rms {:.3}", t.error.rms));
        }
    }
    Check {
        name: "letter scenarios",
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("waypoints exact, converged; {}", notes.join(", "))
        } else {
            problems.join("; ")
        },
    }
}

fn determinism() -> Check {
    let mut differing = Vec::new();
    for name in SCENARIOS {
        let a = trajectory_csv(&run(name).frames).expect("csv");
        let b = trajectory_csv(&run(name).frames).expect("csv");
        if a != b {
            differing.push(name);
        }
    }
    Check {
        name: "determinism",
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} scenarios byte-identical across two runs", SCENARIOS.len())
        } else {
            format!("differs: {differing:?}")
        },
    }
}

fn main() -> ExitCode {
    let checks = [
        quiescence(),
        oracle_equivalence(),
        baseline_properties(),
        theta_sweep(),
        k_and_l_sweeps(),
        waves_far(),
        waves_near(),
        letters(),
        determinism(),
    ];
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.pass);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
