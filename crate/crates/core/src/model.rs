//! Per-cycle delay model.
//!
//! One merging cycle consists of a facilitating vehicle slowing from `v_o` to
//! `v_c` at the speed-change position SC (`d` metres upstream of the merging
//! point MP) and a platoon of `n` ramp vehicles released from the waiting
//! position WP so that it enters the created gap at MP. The mainline
//! disturbance travels as a shockwave at ω and ends at EM, `d′` metres
//! downstream of MP.

use serde::{Deserialize, Serialize};

use crate::error::{Constraint, ModelError};
use crate::traffic_flow::{demand_state, equilibrium_state, shockwave_speed, FDParams, TrafficState};
use crate::units::{kmh_to_mps, vph_to_vps, SECONDS_PER_HOUR};

/// Tolerance on constraint margins when deciding feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Headway the facilitating vehicle is assumed to keep from its leader when
/// it starts to decelerate (the `h_o` term of the created gap).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGap {
    /// Equilibrium headway at the design speed: the tightest gap the
    /// facilitating vehicle can have, so the created gap is guaranteed.
    #[default]
    Saturated,
    /// Mean demand headway `1/q_o`.
    Demand,
}

/// Scenario inputs to the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeInputs {
    pub state_o: TrafficState,
    pub fd: FDParams,
    /// Distance MP → EM (m).
    pub d_prime: f64,
    /// Ramp arrival rate (veh/s).
    pub lambda: f64,
    /// Ramp arrival/design speed (m/s).
    pub v_r: f64,
    /// Ramp braking rate (m/s²).
    pub b: f64,
    /// Maximum platoon acceleration (m/s²).
    pub a_max: f64,
    pub w_m: f64,
    pub w_r: f64,
    #[serde(default)]
    pub initial_gap: InitialGap,
}

impl MergeInputs {
    /// Inputs with the reference parameter set (v_o 120 km/h, v_r 60 km/h,
    /// d′ 457.2 m, v_crit 75 km/h, b = a_max = 2.75 m/s², unit weights) for
    /// the given mainline and ramp flows in veh/s.
    pub fn new(q_main: f64, lambda: f64) -> Result<Self, ModelError> {
        let fd = FDParams::default();
        let inputs = Self {
            state_o: demand_state(q_main, fd.v_free)?,
            fd,
            d_prime: 457.2,
            lambda,
            v_r: kmh_to_mps(60.0),
            b: 2.75,
            a_max: 2.75,
            w_m: 1.0,
            w_r: 1.0,
            initial_gap: InitialGap::default(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Same as [`MergeInputs::new`] with flows in veh/h.
    pub fn from_hourly(q_main_vph: f64, q_ramp_vph: f64) -> Result<Self, ModelError> {
        Self::new(vph_to_vps(q_main_vph), vph_to_vps(q_ramp_vph))
    }

    /// Rebuilds state O for a new mainline demand (veh/s) at the design speed.
    pub fn with_mainline_flow(mut self, q_main: f64) -> Result<Self, ModelError> {
        self.state_o = demand_state(q_main, self.fd.v_free)?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.fd.validate()?;
        for (field, value) in [
            ("d_prime", self.d_prime),
            ("lambda", self.lambda),
            ("v_r", self.v_r),
            ("b", self.b),
            ("a_max", self.a_max),
            ("state_o.q", self.state_o.q),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::domain(field, format!("must be positive, got {value}")));
            }
        }
        for (field, value) in [("w_m", self.w_m), ("w_r", self.w_r)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::domain(field, format!("must be non-negative, got {value}")));
            }
        }
        if (self.state_o.v - self.fd.v_free).abs() > 1e-9 * self.fd.v_free {
            return Err(ModelError::domain(
                "state_o.v",
                "state O must travel at the design speed",
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn v_o(&self) -> f64 {
        self.state_o.v
    }

    #[inline]
    pub fn h_o(&self) -> f64 {
        self.state_o.h
    }

    /// Headway term of the created gap, per [`InitialGap`].
    pub fn initial_gap_headway(&self) -> f64 {
        match self.initial_gap {
            InitialGap::Saturated => self.fd.saturation_headway(),
            InitialGap::Demand => self.state_o.h,
        }
    }

    /// State C and the shockwave speed for a cooperative speed `v_c`.
    pub fn cooperation(&self, v_c: f64) -> Result<(TrafficState, f64), ModelError> {
        let state_c = equilibrium_state(v_c, &self.fd)?;
        let omega = shockwave_speed(&self.state_o, &state_c)?;
        Ok((state_c, omega))
    }
}

/// Decision triple of one merging cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    /// Platoon size (veh).
    pub n: u32,
    /// Cooperative speed (m/s).
    pub v_c: f64,
    /// Distance SC → MP (m).
    pub d: f64,
}

impl ControlPlan {
    pub fn new(n: u32, v_c: f64, d: f64) -> Self {
        Self { n, v_c, d }
    }

    fn check_domain(&self) -> Result<(), ModelError> {
        if self.n == 0 {
            return Err(ModelError::domain("n", "platoon size must be at least 1"));
        }
        if !(self.v_c.is_finite() && self.v_c > 0.0) {
            return Err(ModelError::domain("v_c", format!("must be positive, got {}", self.v_c)));
        }
        if !(self.d.is_finite() && self.d >= 0.0) {
            return Err(ModelError::domain("d", format!("must be non-negative, got {}", self.d)));
        }
        Ok(())
    }
}

/// Platoon timing for one cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatoonKinematics {
    pub t_br: f64,
    pub s_br: f64,
    pub t_acc: f64,
    /// Constant acceleration WP → MP (m/s²).
    pub a: f64,
    /// Distance WP → MP (m).
    pub s_wp: f64,
    /// Cruise time MP → EM at v_c (s).
    pub t_cr: f64,
    /// Expected wait at WP for platoon positions 1..=n.
    pub t_wt: Vec<f64>,
}

/// Delay breakdown of a plan, scaled to an hourly rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayReport {
    /// Cooperative mainline vehicles per cycle.
    pub m: u32,
    pub omega: f64,
    /// Shockwave dissipation time (s).
    pub t_sw: f64,
    /// Σ mainline delays per cycle (s).
    pub mainline_sum: f64,
    /// Σ ramp delays per cycle (s).
    pub ramp_sum: f64,
    /// Expected cycle duration n/λ (s).
    pub cycle_interval: f64,
    /// Cycles per hour.
    pub r: f64,
    /// Weighted delay per hour (veh·s/h).
    pub total: f64,
}

/// T_sw = (d + d′)/ω.
pub fn shockwave_duration(plan: &ControlPlan, inputs: &MergeInputs) -> Result<f64, ModelError> {
    plan.check_domain()?;
    let (_, omega) = inputs.cooperation(plan.v_c)?;
    Ok((plan.d + inputs.d_prime) / omega)
}

fn raw_cooperative_count(plan: &ControlPlan, inputs: &MergeInputs, omega: f64) -> f64 {
    (plan.d + inputs.d_prime) / inputs.h_o() * (1.0 / omega - 1.0 / inputs.v_o())
}

/// Number of mainline vehicles reached by the shockwave before it ends at EM.
pub fn cooperative_count(plan: &ControlPlan, inputs: &MergeInputs) -> Result<u32, ModelError> {
    plan.check_domain()?;
    let (_, omega) = inputs.cooperation(plan.v_c)?;
    Ok(ceil_count(raw_cooperative_count(plan, inputs, omega)))
}

fn ceil_count(raw: f64) -> u32 {
    (raw.ceil().max(1.0)) as u32
}

/// Closed-form Σ_{i=1..m} of the mainline delays for a (possibly relaxed)
/// cooperative count `m`.
pub(crate) fn mainline_sum_for_count(
    m: f64,
    plan: &ControlPlan,
    inputs: &MergeInputs,
    omega: f64,
) -> f64 {
    let v_o = inputs.v_o();
    m * (v_o - plan.v_c) / plan.v_c
        * ((plan.d + inputs.d_prime) / v_o - (m - 1.0) * omega * inputs.h_o() / (2.0 * (v_o - omega)))
}

/// Σ mainline delay per cycle with the exact integer cooperative count.
pub fn mainline_delay_sum(plan: &ControlPlan, inputs: &MergeInputs) -> Result<f64, ModelError> {
    plan.check_domain()?;
    let (_, omega) = inputs.cooperation(plan.v_c)?;
    let m = ceil_count(raw_cooperative_count(plan, inputs, omega));
    Ok(mainline_sum_for_count(m as f64, plan, inputs, omega))
}

pub fn platoon_kinematics(
    plan: &ControlPlan,
    inputs: &MergeInputs,
) -> Result<PlatoonKinematics, ModelError> {
    plan.check_domain()?;
    let h_c = equilibrium_state(plan.v_c, &inputs.fd)?.h;
    let n = plan.n as f64;
    let t_acc = plan.d / plan.v_c - n * h_c;
    if t_acc <= 0.0 {
        return Err(ModelError::KinematicsInfeasible { t_acc });
    }
    let run_up = plan.d - n * h_c * plan.v_c;
    Ok(PlatoonKinematics {
        t_br: inputs.v_r / inputs.b,
        s_br: inputs.v_r * inputs.v_r / (2.0 * inputs.b),
        t_acc,
        a: plan.v_c * plan.v_c / run_up,
        s_wp: run_up / 2.0,
        t_cr: inputs.d_prime / plan.v_c,
        t_wt: (1..=plan.n).map(|j| (plan.n - j) as f64 / inputs.lambda).collect(),
    })
}

/// Σ ramp delay per cycle, measured against a trip at design speed
/// (`v_r` on the ramp, `v_o` downstream of MP).
///
/// The per-vehicle delay subtracts the ramp reference time
/// `(S_BR + S)/v_r + d′/v_o`, not the mainline reference `(d + d′)/v_o`.
pub fn ramp_delay_sum(plan: &ControlPlan, inputs: &MergeInputs) -> Result<f64, ModelError> {
    platoon_kinematics(plan, inputs)?;
    let h_c = equilibrium_state(plan.v_c, &inputs.fd)?.h;
    let n = plan.n as f64;
    let per_vehicle = inputs.v_r / (2.0 * inputs.b) + (plan.d + inputs.d_prime) / plan.v_c
        - n * h_c
        - (plan.d - n * h_c * plan.v_c) / (2.0 * inputs.v_r)
        - inputs.d_prime / inputs.v_o()
        + (n - 1.0) / (2.0 * inputs.lambda);
    Ok(n * per_vehicle)
}

/// Hourly weighted delay of a plan with all intermediate quantities.
pub fn total_delay(plan: &ControlPlan, inputs: &MergeInputs) -> Result<DelayReport, ModelError> {
    plan.check_domain()?;
    let (_, omega) = inputs.cooperation(plan.v_c)?;
    let m = ceil_count(raw_cooperative_count(plan, inputs, omega));
    let mainline_sum = mainline_sum_for_count(m as f64, plan, inputs, omega);
    let ramp_sum = ramp_delay_sum(plan, inputs)?;
    let n = plan.n as f64;
    let r = SECONDS_PER_HOUR * inputs.lambda / n;
    Ok(DelayReport {
        m,
        omega,
        t_sw: (plan.d + inputs.d_prime) / omega,
        mainline_sum,
        ramp_sum,
        cycle_interval: n / inputs.lambda,
        r,
        total: (inputs.w_m * mainline_sum + inputs.w_r * ramp_sum) * r,
    })
}

/// Signed distance of a plan to one constraint boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub satisfied: bool,
    pub margin: f64,
}

impl ConstraintCheck {
    fn at_least(margin: f64) -> Self {
        Self {
            satisfied: margin >= -FEASIBILITY_TOL,
            margin,
        }
    }
}

/// Per-constraint feasibility of a plan. Margins are in the natural unit of
/// each constraint: seconds for gap size and cycle spacing, m/s for the
/// critical speed, m/s² for acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub gap_size: ConstraintCheck,
    pub cycle_spacing: ConstraintCheck,
    pub critical_speed: ConstraintCheck,
    pub acceleration: ConstraintCheck,
    pub structural: ConstraintCheck,
}

impl FeasibilityReport {
    pub fn iter(&self) -> impl Iterator<Item = (Constraint, ConstraintCheck)> {
        [
            (Constraint::GapSize, self.gap_size),
            (Constraint::CycleSpacing, self.cycle_spacing),
            (Constraint::CriticalSpeed, self.critical_speed),
            (Constraint::Acceleration, self.acceleration),
            (Constraint::Structural, self.structural),
        ]
        .into_iter()
    }

    pub fn all_satisfied(&self) -> bool {
        self.iter().all(|(_, c)| c.satisfied)
    }

    pub fn violated(&self) -> Vec<Constraint> {
        self.iter().filter(|(_, c)| !c.satisfied).map(|(k, _)| k).collect()
    }

    pub fn min_margin(&self) -> f64 {
        self.iter().map(|(_, c)| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates every constraint; infeasibility is reported, never raised.
pub fn check_constraints(plan: &ControlPlan, inputs: &MergeInputs) -> FeasibilityReport {
    let v_o = inputs.v_o();
    let structural_margin = (plan.n as f64 - 1.0).min(v_o - plan.v_c).min(plan.d);
    let structural = ConstraintCheck {
        satisfied: plan.n >= 1 && plan.v_c < v_o && plan.d > 0.0,
        margin: structural_margin,
    };
    let critical_speed = ConstraintCheck::at_least(plan.v_c - inputs.fd.v_crit);

    let state_c = (plan.v_c > 0.0)
        .then(|| equilibrium_state(plan.v_c, &inputs.fd).ok())
        .flatten();
    let Some(state_c) = state_c else {
        let fail = ConstraintCheck {
            satisfied: false,
            margin: f64::NEG_INFINITY,
        };
        return FeasibilityReport {
            gap_size: fail,
            cycle_spacing: fail,
            critical_speed,
            acceleration: fail,
            structural,
        };
    };

    let n = plan.n as f64;
    let g_create = inputs.initial_gap_headway() + plan.d / plan.v_c - plan.d / v_o;
    let g_require = (n + 1.0) * state_c.h;
    let gap_size = ConstraintCheck::at_least(g_create - g_require);

    let cycle_spacing = match shockwave_speed(&inputs.state_o, &state_c) {
        Ok(omega) => {
            ConstraintCheck::at_least(n / inputs.lambda - (plan.d + inputs.d_prime) / omega)
        }
        Err(_) => ConstraintCheck {
            satisfied: false,
            margin: f64::NEG_INFINITY,
        },
    };

    let run_up = plan.d - n * state_c.h * plan.v_c;
    let acceleration = if run_up > 0.0 {
        ConstraintCheck::at_least(inputs.a_max - plan.v_c * plan.v_c / run_up)
    } else {
        ConstraintCheck {
            satisfied: false,
            margin: f64::NEG_INFINITY,
        }
    };

    FeasibilityReport {
        gap_size,
        cycle_spacing,
        critical_speed,
        acceleration,
        structural,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kmh(v: f64) -> f64 {
        v / 3.6
    }

    fn inputs(q_main: f64, q_ramp: f64) -> MergeInputs {
        MergeInputs::from_hourly(q_main, q_ramp).unwrap()
    }

    fn plan_1a() -> ControlPlan {
        ControlPlan::new(4, kmh(96.67), 624.0)
    }

    fn plan_2c() -> ControlPlan {
        ControlPlan::new(15, kmh(82.25), 1266.0)
    }

    #[test]
    fn shockwave_duration_examples() {
        assert_relative_eq!(
            shockwave_duration(&plan_2c(), &inputs(1800.0, 500.0)).unwrap(),
            107.98,
            epsilon = 0.01
        );
        assert_relative_eq!(
            shockwave_duration(&plan_1a(), &inputs(1600.0, 300.0)).unwrap(),
            48.0,
            epsilon = 0.01
        );
        let inp = inputs(1800.0, 500.0);
        let at_mp = ControlPlan { d: 0.0, ..plan_2c() };
        let (_, omega) = inp.cooperation(at_mp.v_c).unwrap();
        assert_relative_eq!(
            shockwave_duration(&at_mp, &inp).unwrap(),
            inp.d_prime / omega,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cooperative_count_examples() {
        assert_eq!(cooperative_count(&plan_1a(), &inputs(1600.0, 300.0)).unwrap(), 7);
        assert_eq!(cooperative_count(&plan_2c(), &inputs(1800.0, 500.0)).unwrap(), 29);
    }

    #[test]
    fn cooperative_count_keeps_integral_values() {
        // Choose d so the raw count is exactly 30: (d + d')/h_o · (1/ω − 1/v_o) = 30.
        let inp = inputs(1800.0, 500.0);
        let v_c = kmh(90.0);
        let (_, omega) = inp.cooperation(v_c).unwrap();
        let per_metre = (1.0 / omega - 1.0 / inp.v_o()) / inp.h_o();
        let d = 30.0 / per_metre - inp.d_prime;
        let plan = ControlPlan::new(3, v_c, d);
        let raw = raw_cooperative_count(&plan, &inp, omega);
        assert_eq!(cooperative_count(&plan, &inp).unwrap(), raw.ceil() as u32);
        assert!(raw.fract() == 0.0 || raw.fract() > 0.999_999 || raw.fract() < 1e-6);
    }

    #[test]
    fn mainline_delay_facilitating_vehicle_only() {
        // Raw count ≤ 1 leaves only the facilitating vehicle, whose delay is
        // (d+d′)/v_c − (d+d′)/v_o.
        let inp = inputs(1800.0, 500.0);
        let plan = ControlPlan::new(1, kmh(119.0), 10.0);
        let m = cooperative_count(&plan, &inp).unwrap();
        assert_eq!(m, 1);
        let len = plan.d + inp.d_prime;
        assert_relative_eq!(
            mainline_delay_sum(&plan, &inp).unwrap(),
            len / plan.v_c - len / inp.v_o(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn mainline_delay_vanishes_without_speed_change() {
        let inp = inputs(1800.0, 500.0);
        let plan = ControlPlan::new(3, inp.v_o(), 500.0);
        assert_relative_eq!(mainline_delay_sum(&plan, &inp).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn platoon_kinematics_1a() {
        let inp = inputs(1600.0, 300.0);
        let k = platoon_kinematics(&plan_1a(), &inp).unwrap();
        assert_relative_eq!(k.t_acc, 18.762, epsilon = 2e-3);
        assert_relative_eq!(k.a, 1.431, epsilon = 1e-3);
        assert!(k.a <= inp.a_max);
        assert_relative_eq!(k.s_wp, plan_1a().v_c * k.t_acc / 2.0, max_relative = 1e-12);
        assert_eq!(k.t_wt.len(), 4);
        assert_eq!(*k.t_wt.last().unwrap(), 0.0);
        assert_relative_eq!(k.t_wt[0], 3.0 / inp.lambda);
    }

    #[test]
    fn platoon_acceleration_at_boundary() {
        let inp = inputs(1600.0, 300.0);
        let v_c = kmh(96.67);
        let h_c = equilibrium_state(v_c, &inp.fd).unwrap().h;
        let d = v_c * v_c / inp.a_max + h_c * v_c;
        let k = platoon_kinematics(&ControlPlan::new(1, v_c, d), &inp).unwrap();
        assert_relative_eq!(k.a, inp.a_max, max_relative = 1e-12);
        assert_relative_eq!(k.t_acc, d / v_c - h_c, max_relative = 1e-12);
    }

    #[test]
    fn platoon_kinematics_infeasible() {
        let inp = inputs(1600.0, 300.0);
        let err = platoon_kinematics(&ControlPlan::new(10, kmh(90.0), 100.0), &inp).unwrap_err();
        assert!(matches!(err, ModelError::KinematicsInfeasible { .. }));
        assert_eq!(err.violated(), Some(Constraint::Kinematics));
        assert!(ramp_delay_sum(&ControlPlan::new(10, kmh(90.0), 100.0), &inp).is_err());
    }

    #[test]
    fn ramp_delay_single_vehicle_has_no_wait() {
        let inp = inputs(1600.0, 300.0);
        let plan = ControlPlan::new(1, kmh(96.67), 624.0);
        let k = platoon_kinematics(&plan, &inp).unwrap();
        let t_ramp0 = (k.s_br + k.s_wp) / inp.v_r + inp.d_prime / inp.v_o();
        let expected = k.t_br + k.t_acc + k.t_cr - t_ramp0;
        assert_relative_eq!(ramp_delay_sum(&plan, &inp).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn ramp_delay_high_arrival_rate_limit() {
        let plan = plan_2c();
        let inp = inputs(1800.0, 500.0).with_lambda(1e12);
        let k = platoon_kinematics(&plan, &inp).unwrap();
        let t_ramp0 = (k.s_br + k.s_wp) / inp.v_r + inp.d_prime / inp.v_o();
        let n = plan.n as f64;
        let expected = n * (k.t_br + k.t_acc + k.t_cr - t_ramp0);
        assert_relative_eq!(ramp_delay_sum(&plan, &inp).unwrap(), expected, max_relative = 1e-9);
    }

    #[test]
    fn waiting_times_sum() {
        let inp = inputs(1800.0, 500.0);
        let k = platoon_kinematics(&plan_2c(), &inp).unwrap();
        let n = 15.0;
        assert_relative_eq!(
            k.t_wt.iter().sum::<f64>(),
            n * (n - 1.0) / (2.0 * inp.lambda),
            max_relative = 1e-12
        );
    }

    #[test]
    fn total_delay_weights() {
        let inp = inputs(1800.0, 500.0);
        let base = total_delay(&plan_2c(), &inp).unwrap();
        assert_relative_eq!(base.r, 3600.0 * inp.lambda / 15.0, max_relative = 1e-12);
        assert_relative_eq!(
            base.total,
            (base.mainline_sum + base.ramp_sum) * base.r,
            max_relative = 1e-12
        );
        let zero = MergeInputs { w_m: 0.0, w_r: 0.0, ..inp };
        assert_eq!(total_delay(&plan_2c(), &zero).unwrap().total, 0.0);
        let doubled = MergeInputs { w_m: 2.0, w_r: 2.0, ..inp };
        assert_relative_eq!(
            total_delay(&plan_2c(), &doubled).unwrap().total,
            2.0 * base.total,
            max_relative = 1e-12
        );
    }

    #[test]
    fn total_delay_propagates_constraint_identity() {
        let inp = inputs(1800.0, 500.0);
        let err = total_delay(&ControlPlan::new(40, kmh(82.25), 300.0), &inp).unwrap_err();
        assert_eq!(err.violated(), Some(Constraint::Kinematics));
        // v_c so low that state C carries less than the demand.
        let heavy = inputs(3000.0, 500.0);
        let err = total_delay(&ControlPlan::new(2, kmh(40.0), 300.0), &heavy).unwrap_err();
        assert_eq!(err.violated(), Some(Constraint::Compaction));
    }

    #[test]
    fn constraints_1a_with_demand_gap() {
        let inp = MergeInputs {
            initial_gap: InitialGap::Demand,
            ..inputs(1600.0, 300.0)
        };
        let rep = check_constraints(&plan_1a(), &inp);
        assert!(rep.gap_size.satisfied);
        assert_relative_eq!(rep.gap_size.margin, 1.174, epsilon = 1e-3);
        assert!(rep.acceleration.satisfied);
        assert_relative_eq!(rep.acceleration.margin, 2.75 - 1.431, epsilon = 1e-3);
    }

    #[test]
    fn constraints_1a_with_saturated_gap_bind() {
        // At the reference plan the created gap is (almost exactly) the
        // required one when the facilitating vehicle starts at minimum headway.
        let rep = check_constraints(&plan_1a(), &inputs(1600.0, 300.0));
        assert!(rep.gap_size.margin.abs() < 0.01);
    }

    #[test]
    fn constraints_2c_cycle_binding() {
        let rep = check_constraints(&plan_2c(), &inputs(1800.0, 500.0));
        assert!(rep.cycle_spacing.satisfied);
        assert!(rep.cycle_spacing.margin.abs() < 0.05);
        // The rounded reference plan sits on the gap bound as well.
        assert!(rep.gap_size.margin.abs() < 0.01, "{rep:?}");
        assert!(rep.critical_speed.satisfied && rep.acceleration.satisfied);
    }

    #[test]
    fn critical_speed_boundary() {
        let inp = inputs(1800.0, 500.0);
        let plan = ControlPlan::new(15, inp.fd.v_crit, 1266.0);
        let rep = check_constraints(&plan, &inp);
        assert!(rep.critical_speed.satisfied);
        assert_eq!(rep.critical_speed.margin, 0.0);
    }

    #[test]
    fn structural_violations() {
        let inp = inputs(1800.0, 500.0);
        let rep = check_constraints(&ControlPlan::new(0, kmh(90.0), 100.0), &inp);
        assert!(!rep.structural.satisfied);
        let rep = check_constraints(&ControlPlan::new(3, inp.v_o(), 100.0), &inp);
        assert!(!rep.structural.satisfied);
        assert!(rep.violated().contains(&Constraint::Structural));
    }

    #[test]
    fn inputs_validation() {
        assert!(MergeInputs::from_hourly(1800.0, 0.0).is_err());
        let mut inp = inputs(1800.0, 500.0);
        inp.d_prime = -1.0;
        assert!(inp.validate().is_err());
        let mut inp = inputs(1800.0, 500.0);
        inp.state_o.v = 20.0;
        assert!(inp.validate().is_err());
    }
}
