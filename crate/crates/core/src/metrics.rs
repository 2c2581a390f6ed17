//! Run analysis: active/passive segmentation, wave geometry, displacement
//! decay, shape scoring and length audits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::geometry::{densify, point_polyline_distance, Point2};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub active_point_ids: BTreeSet<usize>,
    pub threshold_point_id: Option<usize>,
    pub passive_point_ids: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveReport {
    pub stress_point: usize,
    pub center: Point2,
    /// Width of the support along the baseline, µm.
    pub extent: f64,
    pub amplitude: f64,
    /// Signed lateral deviation at the center (positive to the left of the
    /// baseline direction).
    pub peak_deviation: f64,
    /// Support interval in baseline arc length, or `None` when the stress
    /// point itself is within the band.
    pub support: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `(chain distance µm, lateral displacement µm)` ordered by distance,
    /// then id.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares fit of `ln(displacement)` against distance over active
    /// non-driven points, when there are at least three.
    pub fit: Option<LinearFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeError {
    pub rms: f64,
    pub hausdorff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthAudit {
    pub total_length: f64,
    pub max_elongation: f64,
    pub min_separation: f64,
}

fn same_size(a: &ChainState, b: &ChainState) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::MismatchedChains {
            left: a.len(),
            right: b.len(),
        })
    }
}

/// Splits points into active and passive for one driven episode.
///
/// A segment counts as deformed when its vector changed by more than `θ·l`
/// between the two states; both endpoints of a deformed segment are active.
/// The threshold point is the active point farthest along the chain from
/// `driven`.
pub fn segment_active_passive(
    before: &ChainState,
    after: &ChainState,
    driven: usize,
    theta: f64,
    l: f64,
) -> Result<SegmentationReport> {
    same_size(before, after)?;
    let gate = theta * l;
    let b = before.points();
    let a = after.points();
    let mut active = BTreeSet::new();
    for i in 0..b.len() - 1 {
        let vb = b[i + 1] - b[i];
        let va = a[i + 1] - a[i];
        if (va - vb).norm() > gate {
            active.insert(i);
            active.insert(i + 1);
        }
    }
    let threshold_point_id = active.iter().copied().max_by_key(|&i| (i.abs_diff(driven), usize::MAX - i));
    let passive = (0..b.len()).filter(|i| !active.contains(i)).collect();
    Ok(SegmentationReport {
        active_point_ids: active,
        threshold_point_id,
        passive_point_ids: passive,
    })
}

/// Signed perpendicular offsets of `chain` from the line through the
/// baseline's first and last points.
pub fn lateral_deviations(baseline: &ChainState, chain: &ChainState) -> Result<Vec<f64>> {
    same_size(baseline, chain)?;
    let origin = baseline.point(0);
    let dir = (baseline.point(baseline.len() - 1) - origin)
        .normalized()
        .ok_or_else(|| Error::Metric("baseline endpoints coincide".into()))?;
    Ok(chain
        .points()
        .iter()
        .zip(baseline.points())
        .map(|(&p, &q)| dir.cross(p - origin) - dir.cross(q - origin))
        .collect())
}

/// Largest |lateral deviation| over points not in `driven`.
pub fn max_lateral_deviation(baseline: &ChainState, chain: &ChainState, driven: &[usize]) -> Result<f64> {
    let dev = lateral_deviations(baseline, chain)?;
    Ok(dev
        .iter()
        .enumerate()
        .filter(|(i, _)| !driven.contains(i))
        .map(|(_, d)| d.abs())
        .fold(0.0, f64::max))
}

/// Wave around `stress_point`: the contiguous run of points whose
/// |lateral deviation| exceeds `θ·l`, widened to the linearly interpolated
/// band crossings on either side.
pub fn wave_report(
    baseline: &ChainState,
    chain: &ChainState,
    stress_point: usize,
    theta: f64,
    l: f64,
) -> Result<WaveReport> {
    if stress_point >= chain.len() {
        return Err(Error::Metric(format!("stress point {stress_point} out of range")));
    }
    let dev = lateral_deviations(baseline, chain)?;
    let gate = theta * l;
    let s = |i: usize| i as f64 * baseline.rest_length();
    let abs: Vec<f64> = dev.iter().map(|d| d.abs()).collect();
    if abs[stress_point] <= gate {
        return Ok(WaveReport {
            stress_point,
            center: chain.point(stress_point),
            extent: 0.0,
            amplitude: 0.0,
            peak_deviation: 0.0,
            support: None,
        });
    }
    let mut lo = stress_point;
    while lo > 0 && abs[lo - 1] > gate {
        lo -= 1;
    }
    let mut hi = stress_point;
    while hi + 1 < abs.len() && abs[hi + 1] > gate {
        hi += 1;
    }
    let crossing = |inside: usize, outside: usize| {
        let t = (abs[inside] - gate) / (abs[inside] - abs[outside]);
        s(inside) + (s(outside) - s(inside)) * t
    };
    let start = if lo > 0 { crossing(lo, lo - 1) } else { s(0) };
    let end = if hi + 1 < abs.len() { crossing(hi, hi + 1) } else { s(hi) };
    let peak = (lo..=hi)
        .max_by(|&i, &j| abs[i].total_cmp(&abs[j]).then(j.cmp(&i)))
        .expect("non-empty support");
    Ok(WaveReport {
        stress_point,
        center: chain.point(peak),
        extent: end - start,
        amplitude: abs[peak],
        peak_deviation: dev[peak],
        support: Some((start, end)),
    })
}

fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Lateral displacement against chain distance from `stress_point`.
///
/// Lateral means normal to the chain in `before`, using the chord through
/// each point's neighbours as the local tangent. The log-linear fit covers
/// the active non-driven points of the episode.
pub fn decay_profile(before: &ChainState, after: &ChainState, stress_point: usize, theta: f64) -> Result<DecayProfile> {
    same_size(before, after)?;
    let n = before.len();
    if stress_point >= n {
        return Err(Error::Metric(format!("stress point {stress_point} out of range")));
    }
    let l = before.rest_length();
    let active = segment_active_passive(before, after, stress_point, theta, l)?.active_point_ids;
    let lateral = |i: usize| {
        let moved = after.point(i) - before.point(i);
        let chord = before.point((i + 1).min(n - 1)) - before.point(i.saturating_sub(1));
        match chord.normalized() {
            Some(t) => t.cross(moved).abs(),
            None => moved.norm(),
        }
    };
    let mut indexed: Vec<(usize, f64, f64)> = (0..n)
        .map(|i| (i, i.abs_diff(stress_point) as f64 * l, lateral(i)))
        .collect();
    indexed.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let (xs, ys): (Vec<f64>, Vec<f64>) = indexed
        .iter()
        .filter(|&&(i, _, d)| i != stress_point && active.contains(&i) && d > 1e-12)
        .map(|&(_, x, d)| (x, d.ln()))
        .unzip();
    let fit = (xs.len() >= 3).then(|| least_squares(&xs, &ys));
    Ok(DecayProfile {
        samples: indexed.into_iter().map(|(_, x, d)| (x, d)).collect(),
        fit,
    })
}

/// Distance of the chain's points to a target polyline. The Hausdorff term
/// also measures the target, sampled at `l/4`, against the chain polyline.
pub fn shape_error(chain: &ChainState, target: &[Point2]) -> Result<ShapeError> {
    if target.is_empty() {
        return Err(Error::Metric("target polyline is empty".into()));
    }
    if target.iter().any(|p| !p.is_finite()) {
        return Err(Error::Metric("target polyline has non-finite vertices".into()));
    }
    let forward: Vec<f64> = chain
        .points()
        .iter()
        .map(|&p| point_polyline_distance(p, target))
        .collect();
    let rms = (forward.iter().map(|d| d * d).sum::<f64>() / forward.len() as f64).sqrt();
    let backward = densify(target, chain.rest_length() / 4.0)
        .into_iter()
        .map(|q| point_polyline_distance(q, chain.points()))
        .fold(0.0, f64::max);
    let hausdorff = forward.iter().copied().fold(backward, f64::max);
    Ok(ShapeError { rms, hausdorff })
}

/// Smallest distance between any two points, by a sweep over x-sorted
/// points.
pub fn min_separation(points: &[Point2]) -> f64 {
    let mut sorted: Vec<Point2> = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if sorted[j].x - sorted[i].x >= best {
                break;
            }
            best = best.min(sorted[i].distance(sorted[j]));
        }
    }
    best
}

pub fn length_audit(chain: &ChainState) -> LengthAudit {
    LengthAudit {
        total_length: chain.total_length(),
        max_elongation: chain.max_elongation(),
        min_separation: min_separation(chain.points()),
    }
}
