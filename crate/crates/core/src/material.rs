//! Material and solver parameters, and the lumped compliance rate that
//! turns a spring elongation into a per-substep displacement.
//!
//! Working units: lengths in µm, time in ns, so that the SI compliance
//! `k / (A·L·ρ)` [1/(m·s²)] maps onto the working value by a factor of
//! `1e-6 (m→µm) × 1e-18 (s²→ns²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Conversion from SI compliance [1/(m·s²)] to working compliance [1/(µm·ns²)].
pub const SI_TO_WORKING_COMPLIANCE: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub youngs_modulus_pa: f64,
    pub poisson_ratio: f64,
    /// Overrides `E / (2(1+λ))` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit_k_pa: Option<f64>,
    pub cross_section_area_um2: f64,
    pub density_kg_m3: f64,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let e = self.youngs_modulus_pa;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::param("youngs_modulus_pa", format!("must be finite and > 0, got {e}")));
        }
        let nu = self.poisson_ratio;
        if !(nu > -1.0 && nu <= 0.5) {
            return Err(Error::param("poisson_ratio", format!("must lie in (-1, 0.5], got {nu}")));
        }
        if let Some(k) = self.explicit_k_pa {
            if !(k.is_finite() && k > 0.0) {
                return Err(Error::param("explicit_k_pa", format!("must be finite and > 0, got {k}")));
            }
        }
        let a = self.cross_section_area_um2;
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::param("cross_section_area_um2", format!("must be finite and > 0, got {a}")));
        }
        let rho = self.density_kg_m3;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::param("density_kg_m3", format!("must be finite and > 0, got {rho}")));
        }
        Ok(())
    }
}

fn default_clamp_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverParams {
    pub dt: f64,
    pub substeps: u32,
    pub rest_length_um: f64,
    /// Quiescence threshold as a fraction of the rest length.
    pub threshold: f64,
    pub max_sweeps: usize,
    #[serde(default = "default_clamp_fraction")]
    pub clamp_fraction: f64,
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if self.substeps < 1 {
            return Err(Error::param("substeps", "must be at least 1"));
        }
        if !(self.rest_length_um.is_finite() && self.rest_length_um > 0.0) {
            return Err(Error::param(
                "rest_length_um",
                format!("must be finite and > 0, got {}", self.rest_length_um),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param("threshold", format!("must lie in (0, 1), got {}", self.threshold)));
        }
        if self.max_sweeps < 1 {
            return Err(Error::param("max_sweeps", "must be at least 1"));
        }
        if !(self.clamp_fraction > 0.0 && self.clamp_fraction <= 1.0) {
            return Err(Error::param(
                "clamp_fraction",
                format!("must lie in (0, 1], got {}", self.clamp_fraction),
            ));
        }
        Ok(())
    }

    /// Elongation above which a spring pulls, `θ·l`.
    #[inline]
    pub fn gate(&self) -> f64 {
        self.threshold * self.rest_length_um
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplianceRate(f64);

impl ComplianceRate {
    /// Wraps a working-unit compliance value directly. Fails unless `c > 0`.
    pub fn new(c: f64) -> Result<Self> {
        if c.is_finite() && c > 0.0 {
            Ok(Self(c))
        } else {
            Err(Error::param("compliance_rate", format!("must be finite and > 0, got {c}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// Un-clamped substep displacement for an elongation, `c·ΔL·Δt²/2`.
    #[inline]
    pub fn displacement(self, elongation: f64, dt: f64) -> f64 {
        self.0 * elongation * dt * dt / 2.0
    }

    /// Checks that a sub-threshold stretch cannot move a point by more than
    /// one rest length in a substep.
    pub fn check_stability(self, solver: &SolverParams) -> Result<()> {
        let value = self.displacement(solver.gate(), solver.dt);
        if value < solver.rest_length_um {
            Ok(())
        } else {
            Err(Error::Stability {
                value,
                rest_length: solver.rest_length_um,
            })
        }
    }
}

/// Spring coefficient: the explicit override when present, otherwise
/// `E / (2(1+λ))`.
pub fn effective_spring_k(m: &MaterialParams) -> Result<f64> {
    let k = match m.explicit_k_pa {
        Some(k) => k,
        None => m.youngs_modulus_pa / (2.0 * (1.0 + m.poisson_ratio)),
    };
    if k.is_finite() && k > 0.0 {
        Ok(k)
    } else {
        Err(Error::param("k", format!("effective spring coefficient must be finite and > 0, got {k}")))
    }
}

/// Compliance `c = k / (A·L·ρ)` for a point with local length `L` (µm),
/// expressed in working units and checked against the stability bound.
pub fn compliance_rate(m: &MaterialParams, local_length_um: f64, s: &SolverParams) -> Result<ComplianceRate> {
    if !(local_length_um.is_finite() && local_length_um > 0.0) {
        return Err(Error::param("local_length", format!("must be finite and > 0, got {local_length_um}")));
    }
    let k = effective_spring_k(m)?;
    let area_m2 = m.cross_section_area_um2 * 1e-12;
    let length_m = local_length_um * 1e-6;
    let si = k / (area_m2 * length_m * m.density_kg_m3);
    let c = ComplianceRate::new(si * SI_TO_WORKING_COMPLIANCE)?;
    c.check_stability(s)?;
    Ok(c)
}
