//! The discretized chain: I+1 mass points joined by I tensile springs of a
//! common rest length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polyline_length, Point2};

/// Relative tolerance on segment lengths at construction and on the
/// arc-length divisibility check.
pub const REST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    points: Vec<Point2>,
    prev_points: Vec<Point2>,
    rest_length: f64,
    frame_index: u64,
    /// Points most recently held by actuation. Sweeps propagate outward from
    /// these and never move them.
    anchors: Vec<usize>,
}

/// Elongation of one segment and the unit vector from its far end back
/// toward its near end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stretch {
    pub segment_index: usize,
    pub elongation: f64,
    pub unit_direction: Point2,
}

impl ChainState {
    /// Builds a chain at rest. Every segment must measure `rest_length`
    /// within [`REST_TOLERANCE`].
    pub fn new(points: Vec<Point2>, rest_length: f64) -> Result<Self> {
        if !(rest_length.is_finite() && rest_length > 0.0) {
            return Err(Error::param("rest_length", format!("must be finite and > 0, got {rest_length}")));
        }
        if points.len() < 2 {
            return Err(Error::Discretization(format!(
                "a chain needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Discretization(format!("point {i} has non-finite coordinates")));
        }
        for (i, w) in points.windows(2).enumerate() {
            let len = w[0].distance(w[1]);
            if (len - rest_length).abs() > REST_TOLERANCE * rest_length {
                return Err(Error::Discretization(format!(
                    "segment {i} has length {len}, expected rest length {rest_length}"
                )));
            }
        }
        Ok(Self {
            prev_points: points.clone(),
            points,
            rest_length,
            frame_index: 0,
            anchors: Vec::new(),
        })
    }

    #[inline]
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    #[inline]
    pub fn prev_points(&self) -> &[Point2] {
        &self.prev_points
    }

    #[inline]
    pub fn point(&self, i: usize) -> Point2 {
        self.points[i]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    #[inline]
    pub fn rest_length(&self) -> f64 {
        self.rest_length
    }

    #[inline]
    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    #[inline]
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    /// Moves one point without touching any other state. Used for driven
    /// targets and for constructing test configurations.
    pub fn set_point(&mut self, i: usize, p: Point2) -> Result<()> {
        if i >= self.points.len() {
            return Err(Error::Schedule(format!(
                "point id {i} out of range for a chain of {} points",
                self.points.len()
            )));
        }
        if !p.is_finite() {
            return Err(Error::param("point", format!("non-finite target for point {i}")));
        }
        self.points[i] = p;
        Ok(())
    }

    pub fn set_anchors(&mut self, anchors: impl IntoIterator<Item = usize>) {
        let mut a: Vec<usize> = anchors.into_iter().filter(|&i| i < self.points.len()).collect();
        a.sort_unstable();
        a.dedup();
        self.anchors = a;
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Point2] {
        &mut self.points
    }

    pub(crate) fn begin_frame(&mut self) {
        self.prev_points.clone_from(&self.points);
    }

    pub(crate) fn finish_frame(&mut self) {
        self.frame_index += 1;
    }

    #[inline]
    pub fn segment_length(&self, i: usize) -> f64 {
        self.points[i].distance(self.points[i + 1])
    }

    /// Current length minus rest length for every segment.
    pub fn elongations(&self) -> Vec<f64> {
        (0..self.segment_count())
            .map(|i| self.segment_length(i) - self.rest_length)
            .collect()
    }

    pub fn max_elongation(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| self.segment_length(i) - self.rest_length)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn total_length(&self) -> f64 {
        polyline_length(&self.points)
    }

    /// Returns a copy with every point (current and previous) shifted.
    pub fn translated(&self, offset: Point2) -> ChainState {
        let mut out = self.clone();
        out.points.iter_mut().for_each(|p| *p += offset);
        out.prev_points.iter_mut().for_each(|p| *p += offset);
        out
    }
}

/// Places points at exact arc-length spacing `l` along a polyline, starting
/// at its first vertex. The polyline length must be a whole multiple of `l`.
pub fn discretize_polyline(vertices: &[Point2], l: f64) -> Result<ChainState> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::param("rest_length", format!("must be finite and > 0, got {l}")));
    }
    if vertices.len() < 2 {
        return Err(Error::Discretization("polyline needs at least 2 vertices".into()));
    }
    if vertices.iter().any(|p| !p.is_finite()) {
        return Err(Error::Discretization("polyline has non-finite vertices".into()));
    }
    let total = polyline_length(vertices);
    if total < l * (1.0 - REST_TOLERANCE) {
        return Err(Error::Discretization(format!(
            "polyline length {total} µm is shorter than the rest length {l} µm"
        )));
    }
    let segments = (total / l).round();
    if (total - segments * l).abs() > REST_TOLERANCE * l {
        return Err(Error::Discretization(format!(
            "polyline length {total} µm is not a whole multiple of the rest length {l} µm"
        )));
    }
    let segments = segments as usize;

    let mut points = Vec::with_capacity(segments + 1);
    points.push(vertices[0]);
    let mut edge = 0;
    let mut edge_offset = 0.0;
    for k in 1..segments {
        let s = k as f64 * l;
        loop {
            let len = vertices[edge].distance(vertices[edge + 1]);
            if s <= edge_offset + len || edge + 2 == vertices.len() {
                let t = if len > 0.0 { (s - edge_offset) / len } else { 0.0 };
                points.push(vertices[edge].lerp(vertices[edge + 1], t));
                break;
            }
            edge_offset += len;
            edge += 1;
        }
    }
    points.push(*vertices.last().unwrap());
    // Corners that do not fall on the l-grid leave chords shorter than l.
    ChainState::new(points, l).map_err(|e| match e {
        Error::Discretization(msg) => Error::Discretization(format!(
            "arc-length spacing does not keep every segment at rest ({msg})"
        )),
        other => other,
    })
}

/// Elongation of segment `i` and the unit direction from point `i+1` back
/// toward point `i`.
pub fn segment_stretch(chain: &ChainState, i: usize) -> Result<Stretch> {
    if i >= chain.segment_count() {
        return Err(Error::SegmentOutOfRange {
            index: i,
            segments: chain.segment_count(),
        });
    }
    let near = chain.point(i);
    let far = chain.point(i + 1);
    let unit_direction = (near - far)
        .normalized()
        .ok_or(Error::CoincidentPoints { segment: i })?;
    Ok(Stretch {
        segment_index: i,
        elongation: near.distance(far) - chain.rest_length(),
        unit_direction,
    })
}
