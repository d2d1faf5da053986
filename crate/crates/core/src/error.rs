use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Identity of a plan constraint, attached to infeasibility errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Created gap must hold the platoon (G_create >= G_require).
    GapSize,
    /// Previous shockwave must have dissipated before the next cycle (I >= T_sw).
    CycleSpacing,
    /// Cooperative speed not below the critical speed.
    CriticalSpeed,
    /// Platoon acceleration within the ramp limit.
    Acceleration,
    /// Structural bounds on the decision variables (n >= 1, v_c < v_o, d > 0).
    Structural,
    /// State C must absorb vehicles faster than state O supplies them (ω > 0).
    Compaction,
    /// The platoon needs positive time to accelerate (t_acc > 0).
    Kinematics,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::GapSize => "gap size",
            Constraint::CycleSpacing => "cycle spacing",
            Constraint::CriticalSpeed => "critical speed",
            Constraint::Acceleration => "ramp acceleration",
            Constraint::Structural => "structural",
            Constraint::Compaction => "compaction",
            Constraint::Kinematics => "platoon kinematics",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("degenerate shockwave: states O and C have equal density")]
    DegenerateWave,

    #[error("compaction infeasible: shockwave speed {omega:.4} m/s is not positive")]
    CompactionInfeasible { omega: f64 },

    #[error("platoon kinematics infeasible: acceleration time {t_acc:.4} s is not positive")]
    KinematicsInfeasible { t_acc: f64 },

    #[error("no feasible platoon size at v_c = {v_c:.4} m/s")]
    InfeasibleSpeed { v_c: f64 },

    #[error("d bounds empty for n = {n}, v_c = {v_c:.4} m/s (d_lb {d_lb:.2} > d_ub {d_ub:.2})")]
    InfeasiblePair { n: u32, v_c: f64, d_lb: f64, d_ub: f64 },

    #[error("scenario infeasible{}", closest.as_ref().map(|c| format!("; closest candidate {c}")).unwrap_or_default())]
    ScenarioInfeasible {
        closest: Option<Box<ClosestCandidate>>,
    },
}

impl ModelError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        ModelError::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// The constraint whose violation produced this error, when there is one.
    pub fn violated(&self) -> Option<Constraint> {
        match self {
            ModelError::DegenerateWave | ModelError::CompactionInfeasible { .. } => {
                Some(Constraint::Compaction)
            }
            ModelError::KinematicsInfeasible { .. } => Some(Constraint::Kinematics),
            ModelError::InfeasiblePair { .. } => Some(Constraint::CycleSpacing),
            ModelError::Domain { .. } => Some(Constraint::Structural),
            ModelError::InfeasibleSpeed { .. } | ModelError::ScenarioInfeasible { .. } => None,
        }
    }
}

/// The (n, v_c) pair that came closest to feasibility during a failed search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosestCandidate {
    pub n: u32,
    pub v_c: f64,
    /// d_lb − d_ub in metres; positive means infeasible by that much.
    pub bound_overlap: f64,
    /// Which lower bound was binding.
    pub binding_lower: Constraint,
}

impl fmt::Display for ClosestCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} v_c={:.2} km/h: d_lb exceeds d_ub by {:.2} m ({} bound binding)",
            self.n,
            self.v_c * 3.6,
            self.bound_overlap,
            self.binding_lower
        )
    }
}
