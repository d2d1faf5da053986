//! Analytic model and optimizer for coordinative on-ramp merging.
//!
//! Mainline vehicles are compacted by a decelerating *facilitating vehicle*
//! to open a large gap, and ramp vehicles held at a waiting position are
//! released as a platoon that reaches the merging point at the cooperative
//! speed exactly when the gap arrives. This crate contains:
//!
//! * [`traffic_flow`]: fundamental-diagram states and shockwave speeds,
//! * [`model`]: per-cycle mainline/ramp delays, cycle rate and constraints,
//! * [`optimizer`]: the breakpoint search for the optimal [`ControlPlan`],
//!   plus a brute-force oracle and the ramp-capacity boundary sweep.
//!
//! All quantities are SI internally (m, s, m/s, veh/s, veh/m); see
//! [`units`] for conversions at I/O boundaries.

pub mod error;
pub mod model;
pub mod optimizer;
pub mod traffic_flow;
pub mod units;

pub use error::{ClosestCandidate, Constraint, ModelError};
pub use model::{
    check_constraints, cooperative_count, mainline_delay_sum, platoon_kinematics, ramp_delay_sum,
    shockwave_duration, total_delay, ConstraintCheck, ControlPlan, DelayReport, FeasibilityReport,
    InitialGap, MergeInputs, PlatoonKinematics,
};
pub use optimizer::{
    brute_force_solve, d_bounds, is_solvable, max_ramp_flow, max_ramp_flow_with, optimal_d,
    optimal_n_capped, optimal_n_given_vc, pair_optimum, quadratic_form, relaxed_objective, solve,
    solve_with, vc_trace, Breakpoint, DBounds, PairOptimum, QuadraticForm, Solution,
    SolverOptions, DEFAULT_N_CAP,
};
pub use traffic_flow::{
    demand_state, equilibrium_state, shockwave_speed, FDParams, FundamentalDiagram, TrafficState,
};
