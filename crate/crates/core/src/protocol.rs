//! JSON messages of the session protocol. Every message carries `v: 1`.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::metrics::{LengthAudit, SegmentationReport};
use crate::record::FrameRecord;
use crate::scenario::ScenarioFile;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    CreateSession {
        v: u32,
        scenario: ScenarioSource,
    },
    Drag {
        v: u32,
        session_id: String,
        #[serde(default)]
        chain: usize,
        point_id: usize,
        target: Point2,
        step_um: f64,
    },
    Step {
        v: u32,
        session_id: String,
    },
    Undo {
        v: u32,
        session_id: String,
    },
    GetState {
        v: u32,
        session_id: String,
    },
    Score {
        v: u32,
        session_id: String,
        #[serde(default)]
        chain: usize,
        target_polyline: Vec<Point2>,
    },
    Export {
        v: u32,
        session_id: String,
    },
    CloseSession {
        v: u32,
        session_id: String,
    },
}

impl Request {
    pub fn version(&self) -> u32 {
        match self {
            Request::CreateSession { v, .. }
            | Request::Drag { v, .. }
            | Request::Step { v, .. }
            | Request::Undo { v, .. }
            | Request::GetState { v, .. }
            | Request::Score { v, .. }
            | Request::Export { v, .. }
            | Request::CloseSession { v, .. } => *v,
        }
    }

    pub fn session_id(&self) -> Option<&str> {
        match self {
            Request::CreateSession { .. } => None,
            Request::Drag { session_id, .. }
            | Request::Step { session_id, .. }
            | Request::Undo { session_id, .. }
            | Request::GetState { session_id, .. }
            | Request::Score { session_id, .. }
            | Request::Export { session_id, .. }
            | Request::CloseSession { session_id, .. } => Some(session_id),
        }
    }
}

/// A bundled scenario by file name, or a full scenario inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Name(String),
    Inline(Box<ScenarioFile>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrivenRef {
    pub chain: usize,
    pub point_id: usize,
}

/// Positions of every chain at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub frame_index: u64,
    pub chains: Vec<Vec<Point2>>,
    pub driven: Option<DrivenRef>,
    pub max_elongation: f64,
}

impl StateFrame {
    pub fn from_record(f: &FrameRecord) -> Self {
        let chains: Vec<Vec<Point2>> = (0..f.chain_lengths.len()).map(|c| f.chain_points(c).to_vec()).collect();
        Self {
            frame_index: f.frame_index,
            chains,
            driven: f
                .driven
                .and_then(|g| f.locate(g))
                .map(|(chain, point_id)| DrivenRef { chain, point_id }),
            max_elongation: f.elongations.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragMetrics {
    pub settle_sweeps: usize,
    pub segmentation: SegmentationReport,
    pub audits: Vec<LengthAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub v: u32,
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Error(ErrorFrame),
    Created {
        v: u32,
        session_id: String,
        revision: u64,
        state: StateFrame,
    },
    Frame {
        v: u32,
        session_id: String,
        revision: u64,
        frame: StateFrame,
    },
    Quiescent {
        v: u32,
        session_id: String,
        revision: u64,
        quiescent: bool,
        frame: StateFrame,
        metrics: DragMetrics,
    },
    Score {
        v: u32,
        session_id: String,
        revision: u64,
        rms: f64,
        hausdorff: f64,
    },
    Export {
        v: u32,
        session_id: String,
        revision: u64,
        csv: String,
    },
    Closed {
        v: u32,
        session_id: String,
        closed: bool,
    },
}

impl Response {
    pub fn is_error(&self) -> bool {
        matches!(self, Response::Error(_))
    }

    /// True for messages that end a command's response stream.
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Response::Frame { .. })
    }

    pub fn revision(&self) -> Option<u64> {
        match self {
            Response::Error(e) => e.revision,
            Response::Created { revision, .. }
            | Response::Frame { revision, .. }
            | Response::Quiescent { revision, .. }
            | Response::Score { revision, .. }
            | Response::Export { revision, .. } => Some(*revision),
            Response::Closed { .. } => None,
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> ErrorFrame {
        ErrorFrame {
            v: PROTOCOL_VERSION,
            error: code.into(),
            message: message.into(),
            field: None,
            session_id: None,
            revision: None,
        }
    }
}
