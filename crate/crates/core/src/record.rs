//! Frame snapshots and the trajectory CSV format.
//!
//! Point ids are global across chains: chain 0 occupies ids `0..n0`, chain 1
//! the next `n1` ids, and so on. `elongation_next_um` is the stretch of the
//! segment to the following point of the same chain and is left blank on
//! each chain's last point.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const TRAJECTORY_HEADER: &str = "frame,point_id,x_um,y_um,elongation_next_um,driven";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    /// Points of every chain, concatenated in chain order.
    pub points: Vec<Point2>,
    pub chain_lengths: Vec<usize>,
    /// Segment elongations of every chain, concatenated in chain order.
    pub elongations: Vec<f64>,
    /// Global id of the point driven during this frame.
    pub driven: Option<usize>,
}

impl FrameRecord {
    pub fn capture(frame_index: u64, chains: &[ChainState], driven: Option<usize>) -> Self {
        let mut points = Vec::new();
        let mut elongations = Vec::new();
        for c in chains {
            points.extend_from_slice(c.points());
            elongations.extend(c.elongations());
        }
        Self {
            frame_index,
            points,
            chain_lengths: chains.iter().map(ChainState::len).collect(),
            elongations,
            driven,
        }
    }

    /// Width of the frame written as a single wide row: frame index, driven
    /// id, every coordinate, every elongation.
    pub fn column_count(&self) -> usize {
        2 * self.points.len() + self.elongations.len() + 2
    }

    /// Points of one chain.
    pub fn chain_points(&self, chain: usize) -> &[Point2] {
        let start: usize = self.chain_lengths[..chain].iter().sum();
        &self.points[start..start + self.chain_lengths[chain]]
    }

    /// Chain index and local id for a global point id.
    pub fn locate(&self, global: usize) -> Option<(usize, usize)> {
        let mut start = 0;
        for (c, &n) in self.chain_lengths.iter().enumerate() {
            if global < start + n {
                return Some((c, global - start));
            }
            start += n;
        }
        None
    }

    fn check(&self) -> Result<()> {
        let total: usize = self.chain_lengths.iter().sum();
        let segments: usize = self.chain_lengths.iter().map(|n| n.saturating_sub(1)).sum();
        if total != self.points.len() || segments != self.elongations.len() {
            return Err(Error::Metric(format!(
                "frame {} is inconsistent: {} points and {} elongations for chains {:?}",
                self.frame_index,
                self.points.len(),
                self.elongations.len(),
                self.chain_lengths
            )));
        }
        Ok(())
    }
}

/// Global id of `point_id` on `chain`.
pub fn global_point_id(chains: &[ChainState], chain: usize, point_id: usize) -> usize {
    chains[..chain].iter().map(ChainState::len).sum::<usize>() + point_id
}

/// Formats a value with 9 significant digits in plain decimal notation,
/// trimming trailing zeros. Negative zero prints as `0`.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { "0".into() } else { v.to_string() };
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat('0').take((-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat('0').take(int_len - digits.len()));
            return out;
        }
        out.push_str(&digits[..int_len]);
        out.push('.');
        out.push_str(&digits[int_len..]);
    }
    let trimmed = out.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

/// Renders frames as trajectory CSV text.
pub fn trajectory_csv(frames: &[FrameRecord]) -> Result<String> {
    let Some(first) = frames.first() else {
        return Err(Error::Metric("cannot write an empty trajectory".into()));
    };
    let mut out = String::with_capacity(frames.len() * first.points.len() * 40);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    let mut last_index = None;
    for f in frames {
        f.check()?;
        if f.chain_lengths != first.chain_lengths {
            return Err(Error::Metric(format!("frame {} changes the chain layout", f.frame_index)));
        }
        if last_index.is_some_and(|l| f.frame_index <= l) {
            return Err(Error::Metric(format!("frame index {} is not increasing", f.frame_index)));
        }
        last_index = Some(f.frame_index);
        let mut gid = 0;
        let mut seg = 0;
        for &n in &f.chain_lengths {
            for local in 0..n {
                let p = f.points[gid];
                let elong = if local + 1 < n {
                    seg += 1;
                    format_sig9(f.elongations[seg - 1])
                } else {
                    String::new()
                };
                let driven = u8::from(f.driven == Some(gid));
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    f.frame_index,
                    gid,
                    format_sig9(p.x),
                    format_sig9(p.y),
                    elong,
                    driven
                );
                gid += 1;
            }
        }
    }
    Ok(out)
}

pub fn write_trajectory(frames: &[FrameRecord], path: &Path) -> Result<()> {
    let text = trajectory_csv(frames)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub frame: u64,
    pub point_id: usize,
    pub position: Point2,
    pub elongation_next: Option<f64>,
    pub driven: bool,
}

/// Parses trajectory CSV text produced by [`trajectory_csv`].
pub fn parse_trajectory(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(Error::Metric("trajectory header is missing or different".into()));
    }
    let bad = |n: usize, what: &str| Error::Metric(format!("trajectory line {}: {what}", n + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(n, "expected 6 columns"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(n, "malformed number"));
            Ok(TrajectoryRow {
                frame: cols[0].parse().map_err(|_| bad(n, "malformed frame"))?,
                point_id: cols[1].parse().map_err(|_| bad(n, "malformed point id"))?,
                position: Point2::new(num(cols[2])?, num(cols[3])?),
                elongation_next: if cols[4].is_empty() { None } else { Some(num(cols[4])?) },
                driven: match cols[5] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(n, "driven flag must be 0 or 1")),
                },
            })
        })
        .collect()
}
