//! Displacement-driven shape simulation for soft, slender bodies.
//!
//! A robot is discretized into mass points joined by tensile-only springs of
//! rest length `l`. Prescribed displacements of stress points propagate
//! along the chain through ordered, sub-stepped relaxation sweeps until no
//! spring is stretched beyond `θ·l`.
//!
//! Working units are µm for length and ns for time.

pub mod actuation;
pub mod chain;
pub mod error;
pub mod geometry;
pub mod material;
pub mod metrics;
pub mod protocol;
pub mod record;
pub mod render;
pub mod runner;
pub mod scenario;
pub mod session;
pub mod solver;
pub mod sweep;

pub use actuation::{compile_schedule, expand_move, nearest_point_id, ActuationSchedule, FrameStep, Planner, WaypointMove};
pub use chain::{discretize_polyline, segment_stretch, ChainState, Stretch};
pub use error::{Error, Result, ScenarioError};
pub use geometry::Point2;
pub use material::{compliance_rate, effective_spring_k, ComplianceRate, MaterialParams, SolverParams};
pub use metrics::{
    decay_profile, length_audit, segment_active_passive, shape_error, wave_report, LengthAudit, SegmentationReport,
    ShapeError, WaveReport,
};
pub use record::{format_sig9, trajectory_csv, write_trajectory, FrameRecord};
pub use render::{render_svg, SvgStyle};
pub use runner::{run_scenario, RunMetrics, RunOutcome, Simulation};
pub use scenario::{load_scenario, save_scenario, ScenarioFile, SweepParam};
pub use session::{FrameThrottle, Session, SessionManager};
pub use solver::{advance_frame, run_until_quiescent, substep_pull, sweep_substep, Relaxation};
pub use sweep::{run_sweep, SweepReport};
