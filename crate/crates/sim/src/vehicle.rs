use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Mainline,
    Ramp,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Mainline => "mainline",
            Origin::Ramp => "ramp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Normal,
    Facilitating,
    PlatoonMember,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Normal => "normal",
            Role::Facilitating => "facilitating",
            Role::PlatoonMember => "platoon_member",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Main,
    Ramp,
}

/// Control state of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Control {
    Normal,
    /// Ramp vehicle heading for the waiting position.
    Approaching,
    /// Ramp vehicle stopped in the queue and registered for a cycle.
    Waiting,
    /// Released platoon member that must reach MP at `target` (s).
    Member { cycle: usize, target: f64 },
    /// Appointed facilitating vehicle not yet decelerating.
    Assigned { cycle: usize },
    /// Facilitating vehicle between the start of deceleration and EM.
    Facilitating { cycle: usize },
}

impl Control {
    pub fn role(self) -> Role {
        match self {
            Control::Member { .. } => Role::PlatoonMember,
            Control::Assigned { .. } | Control::Facilitating { .. } => Role::Facilitating,
            _ => Role::Normal,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Vehicle {
    pub id: u64,
    pub origin: Origin,
    pub lane: Lane,
    pub control: Control,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    /// Scheduled arrival at the network entry.
    pub scheduled: f64,
    /// Time the vehicle would have crossed the entry given its admission.
    pub entered: f64,
    pub t_measure_start: Option<f64>,
    pub t_measure_end: Option<f64>,
    pub exited: Option<f64>,
}

impl Vehicle {
    /// Time spent waiting outside the network for admission.
    pub fn entry_delay(&self) -> f64 {
        (self.entered - self.scheduled).max(0.0)
    }
}
