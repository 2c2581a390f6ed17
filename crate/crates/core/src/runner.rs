//! Frame-by-frame execution of actuation plans over one or more chains,
//! shared by batch runs and interactive sessions.

use serde::{Deserialize, Serialize};

use crate::actuation::{expand_move, WaypointMove};
use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::metrics::{
    decay_profile, length_audit, max_lateral_deviation, segment_active_passive, shape_error, wave_report,
    DecayProfile, LengthAudit, SegmentationReport, ShapeError, WaveReport,
};
use crate::record::{global_point_id, FrameRecord};
use crate::scenario::{PreparedScenario, ScenarioFile};
use crate::solver::{advance_frame, run_until_quiescent, Relaxation};

/// Chains plus the frames recorded so far. Frame 0 is the initial state.
#[derive(Debug, Clone)]
pub struct Simulation {
    chains: Vec<ChainState>,
    relaxation: Relaxation,
    frame_index: u64,
    frames: Vec<FrameRecord>,
    held: Option<usize>,
}

/// One executed move: the driven chain's state before the move and after
/// its settle phase (or after its last drive frame when not settling).
#[derive(Debug, Clone)]
pub struct Episode {
    pub chain: usize,
    pub point_id: usize,
    pub start_frame: u64,
    pub end_frame: u64,
    pub before: ChainState,
    pub after: ChainState,
    pub settle_sweeps: Option<usize>,
}

impl Simulation {
    pub fn new(chains: Vec<ChainState>, relaxation: Relaxation) -> Self {
        let frames = vec![FrameRecord::capture(0, &chains, None)];
        Self {
            chains,
            relaxation,
            frame_index: 0,
            frames,
            held: None,
        }
    }

    pub fn from_prepared(p: &PreparedScenario) -> Self {
        Self::new(p.chains.clone(), p.relaxation.clone())
    }

    pub fn chains(&self) -> &[ChainState] {
        &self.chains
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn last_frame(&self) -> &FrameRecord {
        self.frames.last().expect("frame 0 is always present")
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn relaxation(&self) -> &Relaxation {
        &self.relaxation
    }

    fn check_point(&self, chain: usize, point_id: usize) -> Result<()> {
        let c = self
            .chains
            .get(chain)
            .ok_or_else(|| Error::Schedule(format!("chain {chain} does not exist")))?;
        if point_id >= c.len() {
            return Err(Error::Schedule(format!(
                "point id {point_id} out of range for a chain of {} points",
                c.len()
            )));
        }
        Ok(())
    }

    fn push_frame(&mut self) -> &FrameRecord {
        self.frame_index += 1;
        let f = FrameRecord::capture(self.frame_index, &self.chains, self.held);
        self.frames.push(f);
        self.last_frame()
    }

    /// One frame with `point_id` of `chain` placed at `target`. The other
    /// chains advance with no targets.
    pub fn drive(&mut self, chain: usize, point_id: usize, target: Point2) -> Result<&FrameRecord> {
        self.check_point(chain, point_id)?;
        for (c, state) in self.chains.iter_mut().enumerate() {
            if c == chain {
                advance_frame(state, &[(point_id, target)], &self.relaxation)?;
            } else {
                advance_frame(state, &[], &self.relaxation)?;
            }
        }
        self.held = Some(global_point_id(&self.chains, chain, point_id));
        Ok(self.push_frame())
    }

    /// One frame with no new targets; held points stay where they are.
    pub fn idle(&mut self) -> Result<&FrameRecord> {
        for state in &mut self.chains {
            advance_frame(state, &[], &self.relaxation)?;
        }
        Ok(self.push_frame())
    }

    /// Relaxes every chain to quiescence and records the result as one
    /// frame. Returns the total sweep count.
    pub fn settle(&mut self) -> Result<usize> {
        let mut total = 0;
        for state in &mut self.chains {
            state.begin_frame();
            total += run_until_quiescent(state, &self.relaxation)?;
            state.finish_frame();
        }
        self.push_frame();
        Ok(total)
    }

    /// Drives a move from the point's current position, reporting each
    /// frame as it is produced, then settles when asked.
    pub fn perform_move(
        &mut self,
        mv: &WaypointMove,
        settle: bool,
        mut on_frame: impl FnMut(&FrameRecord),
    ) -> Result<Episode> {
        mv.validate()?;
        self.check_point(mv.chain, mv.point_id)?;
        let before = self.chains[mv.chain].clone();
        let start_frame = self.frame_index;
        let start = before.point(mv.point_id);
        for target in expand_move(start, &mv.waypoints, mv.step_size) {
            let f = self.drive(mv.chain, mv.point_id, target)?;
            on_frame(f);
        }
        let settle_sweeps = if settle {
            let s = self.settle()?;
            on_frame(self.last_frame());
            Some(s)
        } else {
            None
        };
        Ok(Episode {
            chain: mv.chain,
            point_id: mv.point_id,
            start_frame,
            end_frame: self.frame_index,
            before,
            after: self.chains[mv.chain].clone(),
            settle_sweeps,
        })
    }

    /// Rewinds to an earlier snapshot taken with [`Simulation::snapshot`].
    pub fn restore(&mut self, snap: SimulationSnapshot) {
        self.chains = snap.chains;
        self.frame_index = snap.frame_index;
        self.frames.truncate(snap.frame_count);
        self.held = snap.held;
    }

    pub fn snapshot(&self) -> SimulationSnapshot {
        SimulationSnapshot {
            chains: self.chains.clone(),
            frame_index: self.frame_index,
            frame_count: self.frames.len(),
            held: self.held,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSnapshot {
    pub chains: Vec<ChainState>,
    pub frame_index: u64,
    pub frame_count: usize,
    held: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMetrics {
    pub chain: usize,
    pub audit: LengthAudit,
    pub quiescent: bool,
    /// Largest |lateral offset| of non-driven points from the initial
    /// straight line; absent for chains that did not start straight.
    pub max_lateral_deviation_undriven: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub chain: usize,
    pub point_id: usize,
    pub start_frame: u64,
    pub end_frame: u64,
    pub settle_sweeps: Option<usize>,
    pub driven_final: Point2,
    pub segmentation: SegmentationReport,
    pub decay: DecayProfile,
    /// Wave around the stress point right after this episode.
    pub wave: Option<WaveReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub chain: usize,
    pub label: Option<String>,
    pub error: ShapeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub scenario: String,
    pub compliance_rate: f64,
    pub frame_count: usize,
    pub chains: Vec<ChainMetrics>,
    pub episodes: Vec<EpisodeMetrics>,
    /// Wave around each stress point in the final state.
    pub final_waves: Vec<WaveReport>,
    pub shape_errors: Vec<TargetMetrics>,
    /// First `(frame, global point id)` where a point had moved further
    /// within a driven episode than the driven point itself.
    pub displacement_cap_violation: Option<(u64, usize)>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub prepared: PreparedScenario,
    pub frames: Vec<FrameRecord>,
    pub episodes: Vec<Episode>,
    pub final_chains: Vec<ChainState>,
    pub metrics: RunMetrics,
}

/// Runs a scenario to completion. Every run ends quiescent: a final settle
/// is added when the schedule does not already end with one.
pub fn run_scenario(file: &ScenarioFile) -> Result<RunOutcome> {
    let prepared = file.prepare()?;
    run_prepared(prepared)
}

pub fn run_prepared(prepared: PreparedScenario) -> Result<RunOutcome> {
    let mut sim = Simulation::from_prepared(&prepared);
    let schedule = &prepared.file.schedule;
    let mut episodes = Vec::with_capacity(schedule.moves.len());
    for mv in &schedule.moves {
        episodes.push(sim.perform_move(mv, schedule.settle_between, |_| {})?);
    }
    if !schedule.settle_between && !schedule.moves.is_empty() {
        sim.settle()?;
    }
    let metrics = compute_metrics(&prepared, &sim, &episodes)?;
    Ok(RunOutcome {
        final_chains: sim.chains().to_vec(),
        frames: sim.frames().to_vec(),
        prepared,
        episodes,
        metrics,
    })
}

fn is_straight(polyline: &[Point2]) -> bool {
    polyline.len() == 2
}

fn compute_metrics(p: &PreparedScenario, sim: &Simulation, episodes: &[Episode]) -> Result<RunMetrics> {
    let theta = p.file.solver.threshold;
    let l = p.file.solver.rest_length_um;
    let gate = p.relaxation.gate();
    let finals = sim.chains();

    let mut chains = Vec::with_capacity(finals.len());
    for (c, state) in finals.iter().enumerate() {
        let driven: Vec<usize> = episodes.iter().filter(|e| e.chain == c).map(|e| e.point_id).collect();
        let straight = is_straight(&p.file.initial_geometry[c]);
        chains.push(ChainMetrics {
            chain: c,
            audit: length_audit(state),
            quiescent: state.max_elongation() <= gate,
            max_lateral_deviation_undriven: if straight {
                Some(max_lateral_deviation(&p.chains[c], state, &driven)?)
            } else {
                None
            },
        });
    }

    let mut episode_metrics = Vec::with_capacity(episodes.len());
    for e in episodes {
        let straight = is_straight(&p.file.initial_geometry[e.chain]);
        episode_metrics.push(EpisodeMetrics {
            chain: e.chain,
            point_id: e.point_id,
            start_frame: e.start_frame,
            end_frame: e.end_frame,
            settle_sweeps: e.settle_sweeps,
            driven_final: e.after.point(e.point_id),
            segmentation: segment_active_passive(&e.before, &e.after, e.point_id, theta, l)?,
            decay: decay_profile(&e.before, &e.after, e.point_id, theta)?,
            wave: if straight {
                Some(wave_report(&p.chains[e.chain], &e.after, e.point_id, theta, l)?)
            } else {
                None
            },
        });
    }

    let mut final_waves = Vec::new();
    for e in episodes {
        if is_straight(&p.file.initial_geometry[e.chain]) {
            final_waves.push(wave_report(&p.chains[e.chain], &finals[e.chain], e.point_id, theta, l)?);
        }
    }

    let shape_errors = p
        .file
        .outputs
        .targets
        .iter()
        .map(|t| {
            Ok(TargetMetrics {
                chain: t.chain,
                label: t.label.clone(),
                error: shape_error(&finals[t.chain], &t.polyline)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RunMetrics {
        scenario: p.file.name.clone(),
        compliance_rate: p.relaxation.compliance.value(),
        frame_count: sim.frames().len(),
        chains,
        episodes: episode_metrics,
        final_waves,
        shape_errors,
        displacement_cap_violation: displacement_cap_violation(sim.frames()),
    })
}

/// Checks every frame of every driven episode: no point may have moved
/// further from its position at the start of the episode than the driven
/// point has. An episode is a run of frames driving the same point,
/// including its settle frame.
pub fn displacement_cap_violation(frames: &[FrameRecord]) -> Option<(u64, usize)> {
    let mut episode: Option<(usize, &FrameRecord)> = None;
    for (k, f) in frames.iter().enumerate() {
        let Some(g) = f.driven else {
            episode = None;
            continue;
        };
        if episode.map(|(d, _)| d) != Some(g) && k > 0 {
            episode = Some((g, &frames[k - 1]));
        }
        let Some((_, base)) = episode else { continue };
        let (chain, _) = f.locate(g)?;
        let start: usize = f.chain_lengths[..chain].iter().sum();
        let cap = f.points[g].distance(base.points[g]);
        for i in (start..start + f.chain_lengths[chain]).filter(|&i| i != g) {
            if f.points[i].distance(base.points[i]) > cap {
                return Some((f.frame_index, i));
            }
        }
    }
    None
}
