//! Checks over the bundled scenario files.

use chainform_core::{
    load_scenario, nearest_point_id, run_scenario, save_scenario, Error, Point2, ScenarioError, ScenarioFile,
};

mod common;

use common::scenario_path;

const ALL: [&str; 9] = [
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

fn load(name: &str) -> ScenarioFile {
    load_scenario(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

#[test]
fn bundled_files_load_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ALL {
        let s = load(name);
        assert_eq!(s.name, name);
        let path = dir.path().join(format!("{name}.json"));
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s, "{name}");
        assert_eq!(std::fs::read_to_string(&path).unwrap(), s.to_json());
    }
}

#[test]
fn baseline_geometry_and_compliance() {
    let s = load("baseline");
    let prepared = s.prepare().unwrap();
    let chain = &prepared.chains[0];
    assert_eq!(chain.len(), 29);
    assert_eq!(chain.point(0), p(10.0, 10.0));
    assert_eq!(chain.point(28), p(150.0, 10.0));
    assert_eq!(s.schedule.moves[0].point_id, 28);
    assert_eq!(s.schedule.moves[0].waypoints, vec![p(150.0, 60.0)]);
    assert!((prepared.relaxation.compliance.value() - 20.3718327157626).abs() < 1e-9);
    assert_eq!(prepared.relaxation.gate(), 0.25);
}

#[test]
fn wave_stress_points_sit_where_described() {
    let far = load("waves-far").prepare().unwrap();
    let chain = &far.chains[0];
    let expected = [(39, p(209.0, 15.0), 24.0), (15, p(89.0, 15.0), 24.0), (27, p(149.0, 15.0), 6.0)];
    for (mv, (id, at, to_y)) in far.file.schedule.moves.iter().zip(expected) {
        assert_eq!(mv.point_id, id);
        assert_eq!(chain.point(id), at);
        assert_eq!(mv.waypoints, vec![p(at.x, to_y)]);
        assert_eq!((to_y - at.y).abs(), 9.0);
    }
    let near = load("waves-near").prepare().unwrap();
    let ids: Vec<usize> = near.file.schedule.moves.iter().map(|m| m.point_id).collect();
    assert_eq!(ids, [33, 21, 27]);
    assert_eq!(near.file.schedule.moves[2].waypoints, vec![p(149.0, 2.7)]);
    assert!(near.file.comment.as_deref().unwrap().contains("12.3"));
}

#[test]
fn letter_k_cavity_point() {
    let s = load("letter-K").prepare().unwrap();
    assert_eq!(s.chains.len(), 2);
    assert_eq!(nearest_point_id(&s.chains[1], p(94.0, 80.0)), 15);
    assert_eq!(s.file.schedule.moves[0].chain, 1);
    assert_eq!(s.file.schedule.moves[0].point_id, 15);
}

#[test]
fn zero_threshold_is_rejected_with_its_field() {
    let mut s = load("baseline");
    s.solver.threshold = 0.0;
    match s.prepare() {
        Err(Error::Scenario(e @ ScenarioError::Schema { .. })) => assert_eq!(e.field(), Some("solver.threshold")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn no_point_outruns_its_driver() {
    for name in ALL {
        let o = run_scenario(&load(name)).unwrap();
        assert_eq!(o.metrics.displacement_cap_violation, None, "{name}");
    }
}

#[test]
fn baseline_active_points_decay_strictly() {
    let o = run_scenario(&load("baseline")).unwrap();
    let e = &o.metrics.episodes[0];
    let l = 5.0;
    let active: Vec<f64> = e
        .decay
        .samples
        .iter()
        .filter(|&&(d, _)| d > 0.0)
        .filter(|&&(d, _)| e.segmentation.active_point_ids.contains(&(28 - (d / l).round() as usize)))
        .map(|&(_, v)| v)
        .collect();
    assert_eq!(active.len(), e.segmentation.active_point_ids.len() - 1);
    assert!(active.windows(2).all(|w| w[1] < w[0]), "{active:?}");
    let fit = e.decay.fit.unwrap();
    assert!(fit.slope < 0.0);
}

#[test]
fn every_scenario_ends_quiescent() {
    for name in ALL {
        let o = run_scenario(&load(name)).unwrap();
        assert!(o.metrics.chains.iter().all(|c| c.quiescent), "{name}");
    }
}
