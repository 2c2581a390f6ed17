//! Sub-stepped tensile relaxation of a chain under prescribed point
//! displacements.
//!
//! Each frame the driven points are placed at their targets and the chain is
//! relaxed by `N` ordered sweeps. A sweep visits the free points outward from
//! the nearest anchor. A visited point is first pulled toward its inner
//! neighbour (already updated in this sweep), then toward its outer neighbour
//! (not yet updated). Each pull has magnitude `min(c·ΔL·Δt²/2, clamp·ΔL)` and
//! only fires while the relevant spring is stretched beyond `θ·l`.
//!
//! The outer pull is gated on the outer spring as it stood before the visit,
//! and its magnitude uses the elongation measured after the inner pull.

use crate::chain::ChainState;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::material::{compliance_rate, ComplianceRate, MaterialParams, SolverParams};

/// Solver parameters bundled with the compliance rate derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub params: SolverParams,
    pub compliance: ComplianceRate,
}

impl Relaxation {
    /// Validates both parameter sets and folds the material into a single
    /// compliance rate evaluated at the rest length.
    pub fn from_material(material: &MaterialParams, params: &SolverParams) -> Result<Self> {
        material.validate()?;
        params.validate()?;
        let compliance = compliance_rate(material, params.rest_length_um, params)?;
        Ok(Self {
            params: params.clone(),
            compliance,
        })
    }

    /// Uses a working-unit compliance rate directly.
    pub fn with_compliance(params: &SolverParams, compliance: ComplianceRate) -> Result<Self> {
        params.validate()?;
        compliance.check_stability(params)?;
        Ok(Self {
            params: params.clone(),
            compliance,
        })
    }

    #[inline]
    pub fn gate(&self) -> f64 {
        self.params.gate()
    }
}

/// Displacement of a point toward a stretched neighbour for one substep.
///
/// Returns zero for a slack or rest-length spring. The magnitude is clamped
/// at `clamp_fraction·ΔL` so a single pull never carries the point past the
/// rest separation.
pub fn substep_pull(
    self_pos: Point2,
    neighbor_pos: Point2,
    rest_length: f64,
    c: ComplianceRate,
    dt: f64,
    clamp_fraction: f64,
) -> Point2 {
    let d = neighbor_pos - self_pos;
    let dist = d.norm();
    let elongation = dist - rest_length;
    if elongation <= 0.0 {
        return Point2::ZERO;
    }
    let magnitude = c.displacement(elongation, dt).min(clamp_fraction * elongation);
    d * (magnitude / dist)
}

/// One entry of a sweep: the point to move and its neighbours on the side
/// of the nearest anchor (`inner`) and away from it (`outer`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub point: usize,
    pub inner: Option<usize>,
    pub outer: Option<usize>,
}

/// Visit order for a chain of `n` points held at `anchors`.
///
/// Free points are ordered by chain distance to their nearest anchor (ties
/// go to the lower anchor, then the lower point index). With no anchors the
/// chain is swept from index 0 upward.
pub fn visit_order(n: usize, anchors: &[usize]) -> Vec<Visit> {
    if anchors.is_empty() {
        return (0..n)
            .map(|i| Visit {
                point: i,
                inner: i.checked_sub(1),
                outer: (i + 1 < n).then_some(i + 1),
            })
            .collect();
    }
    let mut is_anchor = vec![false; n];
    for &a in anchors {
        if a < n {
            is_anchor[a] = true;
        }
    }
    let mut keyed: Vec<(usize, usize, Visit)> = (0..n)
        .filter(|&i| !is_anchor[i])
        .map(|i| {
            let (dist, anchor) = anchors
                .iter()
                .filter(|&&a| a < n)
                .map(|&a| (a.abs_diff(i), a))
                .min()
                .expect("at least one anchor in range");
            let visit = if anchor < i {
                Visit {
                    point: i,
                    inner: Some(i - 1),
                    outer: (i + 1 < n).then_some(i + 1),
                }
            } else {
                Visit {
                    point: i,
                    inner: Some(i + 1),
                    outer: i.checked_sub(1),
                }
            };
            (dist, i, visit)
        })
        .collect();
    keyed.sort_unstable_by_key(|&(dist, i, _)| (dist, i));
    keyed.into_iter().map(|(_, _, v)| v).collect()
}

/// Performs one ordered relaxation pass. `substep` is the 1-based substep
/// index within the frame. Returns the number of points that moved.
pub fn sweep_substep(chain: &mut ChainState, driven: &[usize], relax: &Relaxation, substep: u32) -> Result<usize> {
    if substep < 1 || substep > relax.params.substeps {
        return Err(Error::param(
            "substep",
            format!("must lie in [1, {}], got {substep}", relax.params.substeps),
        ));
    }
    let order = visit_order(chain.len(), driven);
    Ok(apply_sweep(chain, &order, relax))
}

fn apply_sweep(chain: &mut ChainState, order: &[Visit], relax: &Relaxation) -> usize {
    let l = chain.rest_length();
    let gate = relax.gate();
    let c = relax.compliance;
    let dt = relax.params.dt;
    let clamp = relax.params.clamp_fraction;
    let points = chain.points_mut();
    let mut moved = 0;
    for v in order {
        let start = points[v.point];
        let mut pos = start;
        if let Some(inner) = v.inner {
            let q = points[inner];
            if start.distance(q) - l > gate {
                pos += substep_pull(start, q, l, c, dt, clamp);
            }
        }
        if let Some(outer) = v.outer {
            let q = points[outer];
            if start.distance(q) - l > gate {
                pos += substep_pull(pos, q, l, c, dt, clamp);
            }
        }
        if pos != start {
            points[v.point] = pos;
            moved += 1;
        }
    }
    moved
}

/// Places the driven points, runs the `N` substeps of one frame, and rolls
/// the previous-frame positions. The driven points become the chain's
/// anchors; with no targets the existing anchors stay held.
pub fn advance_frame(chain: &mut ChainState, driven_targets: &[(usize, Point2)], relax: &Relaxation) -> Result<()> {
    chain.begin_frame();
    for &(id, target) in driven_targets {
        chain.set_point(id, target)?;
    }
    if !driven_targets.is_empty() {
        chain.set_anchors(driven_targets.iter().map(|&(id, _)| id));
    }
    let order = visit_order(chain.len(), chain.anchors());
    for _ in 0..relax.params.substeps {
        apply_sweep(chain, &order, relax);
    }
    chain.finish_frame();
    Ok(())
}

/// Sweeps until no segment is stretched beyond `θ·l`, holding the current
/// anchors. Returns the number of sweeps used.
pub fn run_until_quiescent(chain: &mut ChainState, relax: &Relaxation) -> Result<usize> {
    let gate = relax.gate();
    let order = visit_order(chain.len(), chain.anchors());
    let mut sweeps = 0;
    loop {
        let residual = chain.max_elongation();
        if residual <= gate {
            return Ok(sweeps);
        }
        if sweeps >= relax.params.max_sweeps {
            return Err(Error::NonConvergence { sweeps, residual });
        }
        apply_sweep(chain, &order, relax);
        sweeps += 1;
    }
}

/// True when no spring is stretched beyond `θ·l`.
pub fn is_quiescent(chain: &ChainState, relax: &Relaxation) -> bool {
    chain.max_elongation() <= relax.gate()
}
