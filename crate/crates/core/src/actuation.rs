//! Stress-point manipulation plans and their expansion into per-frame
//! driven targets.

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Drags one point of one chain through an ordered list of waypoints,
/// advancing at most `step_size` µm per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointMove {
    /// Index into the scenario's chains.
    #[serde(default)]
    pub chain: usize,
    pub point_id: usize,
    pub waypoints: Vec<Point2>,
    pub step_size: f64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuationSchedule {
    pub moves: Vec<WaypointMove>,
    /// Relax to quiescence after each move.
    #[serde(default = "default_true")]
    pub settle_between: bool,
}

impl Default for ActuationSchedule {
    fn default() -> Self {
        Self {
            moves: Vec::new(),
            settle_between: true,
        }
    }
}

/// One compiled schedule step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameStep {
    Drive { chain: usize, point_id: usize, target: Point2 },
    Settle,
}

impl WaypointMove {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Schedule(format!("step_size must be finite and > 0, got {}", self.step_size)));
        }
        if self.waypoints.is_empty() {
            return Err(Error::Schedule("a move needs at least one waypoint".into()));
        }
        if let Some(i) = self.waypoints.iter().position(|p| !p.is_finite()) {
            return Err(Error::Schedule(format!("waypoint {i} is not finite")));
        }
        Ok(())
    }
}

/// Interpolated targets for a single move starting at `start`.
///
/// Each waypoint leg of length `d` takes `⌈d / step⌉` frames, so every
/// waypoint is itself a target and lands bit-exactly. Zero-length legs
/// contribute nothing.
pub fn expand_move(start: Point2, waypoints: &[Point2], step_size: f64) -> Vec<Point2> {
    let mut out = Vec::new();
    let mut from = start;
    for &to in waypoints {
        let len = from.distance(to);
        if len > 0.0 {
            // Absorbs rounding in len/step so an exact multiple does not gain a frame.
            let frames = ((len / step_size) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            for j in 1..frames {
                out.push(from.lerp(to, j as f64 / frames as f64));
            }
            out.push(to);
        }
        from = to;
    }
    out
}

/// Compiles schedules while tracking where each driven point was last
/// placed, so consecutive calls continue from the predicted positions.
#[derive(Debug, Clone)]
pub struct Planner {
    positions: Vec<Vec<Point2>>,
}

impl Planner {
    pub fn new(chains: &[ChainState]) -> Self {
        Self {
            positions: chains.iter().map(|c| c.points().to_vec()).collect(),
        }
    }

    pub fn compile(&mut self, schedule: &ActuationSchedule) -> Result<Vec<FrameStep>> {
        let mut steps = Vec::new();
        for (m, mv) in schedule.moves.iter().enumerate() {
            mv.validate().map_err(|e| Error::Schedule(format!("move {m}: {e}")))?;
            let chain = self.positions.get_mut(mv.chain).ok_or_else(|| {
                Error::Schedule(format!("move {m}: chain {} does not exist", mv.chain))
            })?;
            let start = *chain.get(mv.point_id).ok_or_else(|| {
                Error::Schedule(format!(
                    "move {m}: point id {} out of range for a chain of {} points",
                    mv.point_id,
                    chain.len()
                ))
            })?;
            let targets = expand_move(start, &mv.waypoints, mv.step_size);
            if let Some(&last) = targets.last() {
                chain[mv.point_id] = last;
            }
            steps.extend(targets.into_iter().map(|target| FrameStep::Drive {
                chain: mv.chain,
                point_id: mv.point_id,
                target,
            }));
            if schedule.settle_between {
                steps.push(FrameStep::Settle);
            }
        }
        Ok(steps)
    }
}

/// Expands a single-chain schedule into per-frame steps.
pub fn compile_schedule(schedule: &ActuationSchedule, chain: &ChainState) -> Result<Vec<FrameStep>> {
    Planner::new(std::slice::from_ref(chain)).compile(schedule)
}

/// Index of the point closest to `pos`; ties go to the lower index.
pub fn nearest_point_id(chain: &ChainState, pos: Point2) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in chain.points().iter().enumerate() {
        let d = p.distance(pos);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}
