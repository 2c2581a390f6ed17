//! Reference transcription of the substep update on plain arrays, shared by
//! the oracle and acceptance targets.

#![allow(dead_code)]

use chainform_core::material::SolverParams;
use chainform_core::solver::{advance_frame, Relaxation};
use chainform_core::{ChainState, ComplianceRate, Point2};

pub type V = [f64; 2];

fn sub(a: V, b: V) -> V {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: V) -> f64 {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

pub struct Reference {
    pub c: f64,
    pub dt: f64,
    pub n: u32,
    pub l: f64,
    pub theta: f64,
    pub clamp: f64,
}

impl Reference {
    /// Displacement of `from` toward `to` for one substep, zero when slack.
    fn pull(&self, from: V, to: V) -> V {
        let d = sub(to, from);
        let dist = norm(d);
        let dl = dist - self.l;
        if dl <= 0.0 {
            return [0.0, 0.0];
        }
        let m = (self.c * dl * self.dt * self.dt / 2.0).min(self.clamp * dl);
        [d[0] / dist * m, d[1] / dist * m]
    }

    /// One frame with a single driven point `k` placed at `target`.
    pub fn frame(&self, r: &mut [V], k: usize, target: V) {
        r[k] = target;
        let gate = self.theta * self.l;
        let n_pts = r.len() as isize;
        for _ in 0..self.n {
            for dist in 1..n_pts {
                for side in [-1isize, 1] {
                    let i = k as isize + side * dist;
                    if i < 0 || i >= n_pts {
                        continue;
                    }
                    let i = i as usize;
                    let inner = (i as isize - side) as usize;
                    let outer = i as isize + side;
                    let r0 = r[i];
                    let mut rr = r0;
                    if norm(sub(r[inner], r0)) - self.l > gate {
                        let p = self.pull(r0, r[inner]);
                        rr = [rr[0] + p[0], rr[1] + p[1]];
                    }
                    if outer >= 0 && outer < n_pts {
                        let o = r[outer as usize];
                        if norm(sub(o, r0)) - self.l > gate {
                            let p = self.pull(rr, o);
                            rr = [rr[0] + p[0], rr[1] + p[1]];
                        }
                    }
                    r[i] = rr;
                }
            }
        }
    }
}

/// Largest per-coordinate difference between solver and reference on an
/// `n`-point straight chain (l = 5) whose point `driver` follows `path`.
pub struct Mismatch {
    pub worst: f64,
    pub frame: usize,
    pub point: usize,
}

pub fn compare(n: usize, driver: usize, path: &[V], c: f64, theta: f64) -> Mismatch {
    let params = SolverParams {
        dt: 0.1,
        substeps: 10,
        rest_length_um: 5.0,
        threshold: theta,
        max_sweeps: 100_000,
        clamp_fraction: 0.5,
    };
    let relax = Relaxation::with_compliance(&params, ComplianceRate::new(c).unwrap()).unwrap();
    let start: Vec<V> = (0..n).map(|i| [5.0 * i as f64, 0.0]).collect();
    let mut chain = ChainState::new(start.iter().map(|p| Point2::new(p[0], p[1])).collect(), 5.0).unwrap();
    let reference = Reference {
        c,
        dt: 0.1,
        n: 10,
        l: 5.0,
        theta,
        clamp: 0.5,
    };
    let mut r = start;
    let mut out = Mismatch {
        worst: 0.0,
        frame: 0,
        point: 0,
    };
    for (f, &t) in path.iter().enumerate() {
        reference.frame(&mut r, driver, t);
        advance_frame(&mut chain, &[(driver, Point2::new(t[0], t[1]))], &relax).unwrap();
        for (i, q) in r.iter().enumerate() {
            let p = chain.point(i);
            let d = (p.x - q[0]).abs().max((p.y - q[1]).abs());
            if d > out.worst {
                out = Mismatch {
                    worst: d,
                    frame: f,
                    point: i,
                };
            }
        }
    }
    out
}

/// Straight-line targets from `from` to `to` over `frames` frames, then
/// `hold` frames at `to`.
pub fn ramp(from: V, to: V, frames: usize, hold: usize) -> Vec<V> {
    let mut out: Vec<V> = (1..=frames)
        .map(|k| {
            let s = k as f64 / frames as f64;
            [from[0] + (to[0] - from[0]) * s, from[1] + (to[1] - from[1]) * s]
        })
        .collect();
    out.extend(std::iter::repeat(to).take(hold));
    out
}

/// The oracle cases: axial and lateral end drags on 2, 3 and 4 points,
/// drags from the first point, interior drivers and a clamped regime.
pub fn oracle_cases() -> Vec<(String, usize, usize, Vec<V>, f64, f64)> {
    const C: f64 = 20.3718327157626;
    let mut cases = Vec::new();
    for n in 2..=4 {
        let end = 5.0 * (n - 1) as f64;
        cases.push((format!("axial n={n}"), n, n - 1, ramp([end, 0.0], [end + 12.0, 0.0], 12, 20), C, 0.05));
        cases.push((format!("lateral n={n}"), n, n - 1, ramp([end, 0.0], [end, 9.0], 9, 20), C, 0.05));
        cases.push((format!("first n={n}"), n, 0, ramp([0.0, 0.0], [-4.0, 7.0], 8, 15), C, 0.05));
    }
    cases.push(("interior 1".into(), 4, 1, ramp([5.0, 0.0], [6.0, 10.0], 10, 25), C, 0.05));
    cases.push(("interior 2".into(), 4, 2, ramp([10.0, 0.0], [11.0, 10.0], 10, 25), C, 0.05));
    // c·Δt²/2 > 0.5, so every pull is clamped.
    cases.push(("clamped".into(), 4, 3, ramp([15.0, 0.0], [20.0, 6.0], 5, 10), 150.0, 0.1));
    cases
}

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"))
}
