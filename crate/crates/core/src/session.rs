//! Interactive sessions: a simulation with undo history, driven by protocol
//! requests. Transport-agnostic; responses are handed to a callback as they
//! are produced.

use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use crate::actuation::WaypointMove;
use crate::error::{Error, ScenarioError};
use crate::metrics::{length_audit, segment_active_passive, shape_error};
use crate::protocol::{DragMetrics, ErrorFrame, Request, Response, ScenarioSource, StateFrame, PROTOCOL_VERSION};
use crate::record::trajectory_csv;
use crate::runner::{Simulation, SimulationSnapshot};
use crate::scenario::{load_scenario, ScenarioFile};

pub const DEFAULT_HISTORY_DEPTH: usize = 64;

pub struct Session {
    id: String,
    scenario: ScenarioFile,
    sim: Simulation,
    history: VecDeque<SimulationSnapshot>,
    history_depth: usize,
    revision: u64,
}

fn error_frame(e: &Error) -> ErrorFrame {
    let code = match e {
        Error::NonConvergence { .. } => "non_convergence",
        Error::Scenario(ScenarioError::Parse { .. }) => "parse_error",
        Error::Scenario(_) => "invalid_scenario",
        Error::Io { .. } => "not_found",
        _ => "invalid_argument",
    };
    let mut f = Response::error(code, e.to_string());
    f.field = match e {
        Error::Scenario(s) => s.field().map(str::to_string),
        Error::Parameter { field, .. } => Some((*field).to_string()),
        _ => None,
    };
    f
}

impl Session {
    pub fn new(id: String, scenario: ScenarioFile, history_depth: usize) -> crate::Result<Self> {
        let prepared = scenario.prepare()?;
        Ok(Self {
            id,
            sim: Simulation::from_prepared(&prepared),
            scenario,
            history: VecDeque::new(),
            history_depth,
            revision: 0,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn scenario(&self) -> &ScenarioFile {
        &self.scenario
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn state(&self) -> StateFrame {
        StateFrame::from_record(self.sim.last_frame())
    }

    fn remember(&mut self) {
        if self.history_depth == 0 {
            return;
        }
        if self.history.len() == self.history_depth {
            self.history.pop_front();
        }
        self.history.push_back(self.sim.snapshot());
    }

    fn fail(&self, e: &Error) -> Response {
        let mut f = error_frame(e);
        f.session_id = Some(self.id.clone());
        f.revision = Some(self.revision);
        Response::Error(f)
    }

    fn frame_response(&self) -> Response {
        Response::Frame {
            v: PROTOCOL_VERSION,
            session_id: self.id.clone(),
            revision: self.revision,
            frame: self.state(),
        }
    }

    /// Drags one point to `target` in `step_um` increments, emitting a frame
    /// per increment, then settles and emits a quiescence message. A failed
    /// settle rolls the session back to its state before the drag.
    pub fn drag(
        &mut self,
        chain: usize,
        point_id: usize,
        target: crate::geometry::Point2,
        step_um: f64,
        emit: &mut dyn FnMut(Response),
    ) {
        let mv = WaypointMove {
            chain,
            point_id,
            waypoints: vec![target],
            step_size: step_um,
        };
        if let Err(e) = mv.validate().and_then(|_| {
            self.sim
                .chains()
                .get(chain)
                .filter(|c| point_id < c.len())
                .map(|_| ())
                .ok_or_else(|| Error::Schedule(format!("point {point_id} on chain {chain} does not exist")))
        }) {
            emit(self.fail(&e));
            return;
        }
        self.remember();
        let rollback = self.sim.snapshot();
        let Session { sim, revision, id, .. } = self;
        let result = sim.perform_move(&mv, false, |f| {
            *revision += 1;
            emit(Response::Frame {
                v: PROTOCOL_VERSION,
                session_id: id.clone(),
                revision: *revision,
                frame: StateFrame::from_record(f),
            });
        });
        let outcome = result.and_then(|episode| {
            let sweeps = self.sim.settle()?;
            Ok((episode, sweeps))
        });
        match outcome {
            Ok((episode, sweeps)) => {
                self.revision += 1;
                let after = &self.sim.chains()[chain];
                let relax = self.sim.relaxation();
                let segmentation = segment_active_passive(
                    &episode.before,
                    after,
                    point_id,
                    relax.params.threshold,
                    relax.params.rest_length_um,
                )
                .expect("same chain before and after");
                emit(Response::Quiescent {
                    v: PROTOCOL_VERSION,
                    session_id: self.id.clone(),
                    revision: self.revision,
                    quiescent: true,
                    frame: self.state(),
                    metrics: DragMetrics {
                        settle_sweeps: sweeps,
                        segmentation,
                        audits: self.sim.chains().iter().map(length_audit).collect(),
                    },
                });
            }
            Err(e) => {
                self.sim.restore(rollback);
                self.history.pop_back();
                self.revision += 1;
                emit(self.fail(&e));
            }
        }
    }

    pub fn step(&mut self) -> Response {
        self.remember();
        match self.sim.idle() {
            Ok(_) => {
                self.revision += 1;
                self.frame_response()
            }
            Err(e) => self.fail(&e),
        }
    }

    pub fn undo(&mut self) -> Response {
        match self.history.pop_back() {
            Some(snap) => {
                self.sim.restore(snap);
                self.revision += 1;
                self.frame_response()
            }
            None => {
                let mut f = Response::error("nothing_to_undo", "history is empty");
                f.session_id = Some(self.id.clone());
                f.revision = Some(self.revision);
                Response::Error(f)
            }
        }
    }

    pub fn get_state(&self) -> Response {
        self.frame_response()
    }

    pub fn score(&self, chain: usize, target: &[crate::geometry::Point2]) -> Response {
        let Some(c) = self.sim.chains().get(chain) else {
            return self.fail(&Error::Schedule(format!("chain {chain} does not exist")));
        };
        match shape_error(c, target) {
            Ok(e) => Response::Score {
                v: PROTOCOL_VERSION,
                session_id: self.id.clone(),
                revision: self.revision,
                rms: e.rms,
                hausdorff: e.hausdorff,
            },
            Err(e) => {
                let mut r = self.fail(&e);
                if let Response::Error(f) = &mut r {
                    f.field = Some("target_polyline".into());
                }
                r
            }
        }
    }

    pub fn export(&self) -> Response {
        match trajectory_csv(self.sim.frames()) {
            Ok(csv) => Response::Export {
                v: PROTOCOL_VERSION,
                session_id: self.id.clone(),
                revision: self.revision,
                csv,
            },
            Err(e) => self.fail(&e),
        }
    }
}

/// Owns every live session. Sessions are independent; commands on one
/// session are serialized by its lock.
pub struct SessionManager {
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    scenario_dir: Option<PathBuf>,
    history_depth: usize,
}

impl SessionManager {
    pub fn new(scenario_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            scenario_dir,
            history_depth: DEFAULT_HISTORY_DEPTH,
        }
    }

    pub fn with_history_depth(mut self, depth: usize) -> Self {
        self.history_depth = depth;
        self
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map").len()
    }

    pub fn session(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        self.sessions.lock().expect("session map").get(id).cloned()
    }

    fn resolve(&self, source: ScenarioSource) -> crate::Result<ScenarioFile> {
        match source {
            ScenarioSource::Inline(file) => {
                file.prepare()?;
                Ok(*file)
            }
            ScenarioSource::Name(name) => {
                let dir = self.scenario_dir.as_deref().ok_or_else(|| {
                    Error::from(ScenarioError::reference("scenario", "this service has no scenario directory"))
                })?;
                let plain = Path::new(&name)
                    .file_name()
                    .is_some_and(|f| f == name.as_str());
                if !plain || name.starts_with('.') {
                    return Err(ScenarioError::reference("scenario", format!("`{name}` is not a plain file name")).into());
                }
                let mut path = dir.join(&name);
                if path.extension().is_none() {
                    path.set_extension("json");
                }
                load_scenario(&path)
            }
        }
    }

    /// Parses and executes one JSON request. Malformed input produces an
    /// error frame.
    pub fn handle_json(&self, text: &str, emit: &mut dyn FnMut(Response)) {
        match serde_json::from_str::<Request>(text) {
            Ok(req) => self.handle(req, emit),
            Err(e) => emit(Response::Error(Response::error("bad_request", e.to_string()))),
        }
    }

    pub fn handle(&self, req: Request, emit: &mut dyn FnMut(Response)) {
        if req.version() != PROTOCOL_VERSION {
            let mut f = Response::error(
                "unsupported_version",
                format!("protocol version {} is not supported, expected {PROTOCOL_VERSION}", req.version()),
            );
            f.field = Some("v".into());
            emit(Response::Error(f));
            return;
        }
        if let Request::CreateSession { scenario, .. } = req {
            let created = self
                .resolve(scenario)
                .and_then(|file| Session::new(uuid::Uuid::new_v4().to_string(), file, self.history_depth));
            match created {
                Ok(session) => {
                    let response = Response::Created {
                        v: PROTOCOL_VERSION,
                        session_id: session.id.clone(),
                        revision: session.revision,
                        state: session.state(),
                    };
                    self.sessions
                        .lock()
                        .expect("session map")
                        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
                    emit(response);
                }
                Err(e) => emit(Response::Error(error_frame(&e))),
            }
            return;
        }
        let id = req.session_id().expect("non-create requests name a session").to_string();
        if let Request::CloseSession { .. } = req {
            let removed = self.sessions.lock().expect("session map").remove(&id).is_some();
            emit(if removed {
                Response::Closed {
                    v: PROTOCOL_VERSION,
                    session_id: id,
                    closed: true,
                }
            } else {
                unknown_session(&id)
            });
            return;
        }
        let Some(session) = self.session(&id) else {
            emit(unknown_session(&id));
            return;
        };
        let mut s = session.lock().unwrap_or_else(|p| p.into_inner());
        match req {
            Request::Drag {
                chain,
                point_id,
                target,
                step_um,
                ..
            } => s.drag(chain, point_id, target, step_um, emit),
            Request::Step { .. } => emit(s.step()),
            Request::Undo { .. } => emit(s.undo()),
            Request::GetState { .. } => emit(s.get_state()),
            Request::Score {
                chain, target_polyline, ..
            } => emit(s.score(chain, &target_polyline)),
            Request::Export { .. } => emit(s.export()),
            Request::CreateSession { .. } | Request::CloseSession { .. } => unreachable!("handled above"),
        }
    }
}

fn unknown_session(id: &str) -> Response {
    let mut f = Response::error("unknown_session", format!("no session `{id}`"));
    f.field = Some("session_id".into());
    Response::Error(f)
}

/// Coalesces a stream to at most `rate` items per second. Items offered
/// inside the interval replace any pending item; a final item is always
/// released immediately.
#[derive(Debug)]
pub struct FrameThrottle<T> {
    interval: Duration,
    last_sent: Option<Duration>,
    pending: Option<T>,
}

impl<T> FrameThrottle<T> {
    pub fn new(rate_per_second: u32) -> Self {
        Self {
            interval: Duration::from_secs(1) / rate_per_second.max(1),
            last_sent: None,
            pending: None,
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    fn due(&self, now: Duration) -> bool {
        self.last_sent.map_or(true, |t| now.saturating_sub(t) >= self.interval)
    }

    /// Offers an item at time `now`; returns what should be sent now.
    pub fn offer(&mut self, now: Duration, item: T, is_final: bool) -> Option<T> {
        if is_final || self.due(now) {
            self.pending = None;
            self.last_sent = Some(now);
            Some(item)
        } else {
            self.pending = Some(item);
            None
        }
    }

    /// Releases the pending item once the interval has elapsed.
    pub fn poll(&mut self, now: Duration) -> Option<T> {
        if self.pending.is_some() && self.due(now) {
            self.last_sent = Some(now);
            self.pending.take()
        } else {
            None
        }
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }
}
