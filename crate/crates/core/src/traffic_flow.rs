//! Fundamental-diagram states and shockwaves.
//!
//! State O (original) is set by the demand flow at the design speed; state C
//! (cooperative) always lies on the equilibrium curve of the car-following
//! model, `s = cc0 + L + cc1·v`.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Equilibrium car-following parameters plus the speed range of the mainline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDParams {
    /// Standstill distance between bumpers (m).
    pub cc0: f64,
    /// Speed-dependent headway coefficient (s).
    pub cc1: f64,
    /// Vehicle length (m).
    pub veh_len: f64,
    /// Mainline design speed (m/s).
    pub v_free: f64,
    /// Critical mainline speed (m/s).
    pub v_crit: f64,
}

impl Default for FDParams {
    fn default() -> Self {
        Self {
            cc0: 1.5,
            cc1: 0.9,
            veh_len: 4.37,
            v_free: 120.0 / 3.6,
            v_crit: 75.0 / 3.6,
        }
    }
}

impl FDParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("cc0", self.cc0),
            ("cc1", self.cc1),
            ("veh_len", self.veh_len),
            ("v_free", self.v_free),
            ("v_crit", self.v_crit),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::domain(field, format!("must be positive, got {value}")));
            }
        }
        if self.v_crit >= self.v_free {
            return Err(ModelError::domain(
                "v_crit",
                format!("must be below v_free ({} >= {})", self.v_crit, self.v_free),
            ));
        }
        Ok(())
    }

    /// Front-to-front spacing at equilibrium speed `v` (m).
    #[inline]
    pub fn spacing(&self, v: f64) -> f64 {
        self.cc0 + self.veh_len + self.cc1 * v
    }

    /// Standstill front-to-front spacing, `cc0 + L`.
    #[inline]
    pub fn jam_spacing(&self) -> f64 {
        self.cc0 + self.veh_len
    }

    /// Equilibrium headway at the design speed; the tightest headway any
    /// mainline stream can sustain at `v_free`.
    pub fn saturation_headway(&self) -> f64 {
        self.spacing(self.v_free) / self.v_free
    }
}

/// A point on the fundamental diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficState {
    /// Speed (m/s).
    pub v: f64,
    /// Flow (veh/s).
    pub q: f64,
    /// Density (veh/m).
    pub k: f64,
    /// Mean headway (s).
    pub h: f64,
}

/// A speed-parameterised fundamental diagram. Alternative families can be
/// substituted by implementing this for another parameter type.
pub trait FundamentalDiagram {
    fn equilibrium_state(&self, v: f64) -> Result<TrafficState, ModelError>;
}

impl FundamentalDiagram for FDParams {
    fn equilibrium_state(&self, v: f64) -> Result<TrafficState, ModelError> {
        equilibrium_state(v, self)
    }
}

/// Equilibrium state at speed `v`: spacing `cc0 + L + cc1·v`, `h = s/v`,
/// `q = 1/h`, `k = q/v`.
pub fn equilibrium_state(v: f64, fd: &FDParams) -> Result<TrafficState, ModelError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(ModelError::domain("v", format!("speed must be positive, got {v}")));
    }
    let h = fd.spacing(v) / v;
    let q = 1.0 / h;
    Ok(TrafficState { v, q, k: q / v, h })
}

/// Demand-driven state: flow `q` at speed `v`, steady headway `1/q`.
pub fn demand_state(q: f64, v: f64) -> Result<TrafficState, ModelError> {
    if !(q.is_finite() && q > 0.0) {
        return Err(ModelError::domain("q", format!("flow must be positive, got {q}")));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(ModelError::domain("v", format!("speed must be positive, got {v}")));
    }
    Ok(TrafficState {
        v,
        q,
        k: q / v,
        h: 1.0 / q,
    })
}

/// Speed of the O→C interface, `(q_c − q_o)/(k_c − k_o)`.
///
/// A non-positive result means state C cannot collect space from state O
/// and is reported as [`ModelError::CompactionInfeasible`].
pub fn shockwave_speed(state_o: &TrafficState, state_c: &TrafficState) -> Result<f64, ModelError> {
    let dk = state_c.k - state_o.k;
    if dk.abs() <= f64::EPSILON * state_o.k.abs().max(state_c.k.abs()) {
        return Err(ModelError::DegenerateWave);
    }
    let omega = (state_c.q - state_o.q) / dk;
    if omega <= 0.0 {
        return Err(ModelError::CompactionInfeasible { omega });
    }
    Ok(omega)
}
