//! Longitudinal control: a relaxation towards an optimal-velocity speed whose
//! equilibrium spacing is `cc0 + L + cc1·v`, capped by two safe speeds.
//!
//! The comfortable cap keeps every vehicle able to stop behind its leader
//! braking at `b`; the hard cap does the same for the emergency rate and
//! is the only place decelerations beyond `b` can come from.

use comc_core::FDParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Driver {
    pub fd: FDParams,
    /// Speed relaxation time (s).
    pub tau: f64,
    pub a_max: f64,
    /// Comfortable deceleration (positive, m/s²).
    pub b_comf: f64,
    /// Emergency deceleration (positive, m/s²).
    pub b_emergency: f64,
}

impl Driver {
    pub fn new(fd: FDParams, a_max: f64, b_comf: f64) -> Self {
        Self {
            fd,
            tau: 0.4,
            a_max,
            b_comf,
            b_emergency: 6.0,
        }
    }
}

/// What a follower sees of something ahead in its lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    /// Rear bumper position (m).
    pub rear: f64,
    pub v: f64,
    /// Whether the optimal-velocity rule applies; vehicles in a coordinated
    /// platoon only respect the safety caps towards each other.
    pub spacing: bool,
}

impl Leader {
    pub fn vehicle(front: f64, v: f64, veh_len: f64) -> Self {
        Self {
            rear: front - veh_len,
            v,
            spacing: true,
        }
    }

    /// A stop line: the follower's front must stay at or behind `line`.
    pub fn stop_line(line: f64, cc0: f64) -> Self {
        Self {
            rear: line + cc0,
            v: 0.0,
            spacing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Relax towards this speed.
    Speed(f64),
    /// Apply this acceleration (before leader and safety limits).
    Accel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub a: f64,
    /// The speed lost this step exceeds what braking at the comfortable
    /// rate would remove.
    pub emergency: bool,
}

impl Driver {
    /// Speed the optimal-velocity rule assigns to net gap `gap`.
    pub fn optimal_speed(&self, gap: f64) -> f64 {
        ((gap - self.fd.cc0) / self.fd.cc1).max(0.0)
    }

    /// Largest speed at the end of the next step from which the follower can
    /// still stop behind the leader when both brake at `decel`. `leader` is
    /// the leader's state at the end of the step.
    pub fn safe_speed(&self, x: f64, v: f64, leader: &Leader, decel: f64, dt: f64) -> f64 {
        let reach = leader.rear - self.fd.cc0 + leader.v * leader.v / (2.0 * decel);
        let room = reach - x - 0.5 * v * dt;
        if room <= 0.0 {
            return 0.0;
        }
        let half = 0.5 * decel * dt;
        -half + (half * half + 2.0 * decel * room).sqrt()
    }

    /// Acceleration for the next step.
    pub fn accel(&self, x: f64, v: f64, target: Target, leaders: &[Leader], dt: f64) -> Command {
        let mut a = match target {
            Target::Speed(v_des) => (v_des - v) / self.tau,
            Target::Accel(a) => a,
        };
        // Leaders are seen at the end of the step, so the gap is measured
        // from where this vehicle would be without accelerating.
        for l in leaders.iter().filter(|l| l.spacing) {
            a = a.min((self.optimal_speed(l.rear - x - v * dt) - v) / self.tau);
        }
        a = a.clamp(-self.b_comf, self.a_max);

        for l in leaders {
            a = a.min((self.safe_speed(x, v, l, self.b_comf, dt) - v) / dt);
        }
        a = a.max(-self.b_comf);

        for l in leaders {
            a = a.min((self.safe_speed(x, v, l, self.b_emergency, dt) - v) / dt);
            a = a.min(stay_behind(v, l.rear - self.fd.cc0 - x, dt));
        }
        a = a.max(-self.b_emergency);
        Command {
            a,
            emergency: (-a * dt).min(v) > self.b_comf * dt + 1e-4,
        }
    }

    /// Car-following acceleration towards a single optional leader.
    pub fn car_following_accel(&self, x: f64, v: f64, v_link: f64, leader: Option<Leader>, dt: f64) -> f64 {
        let leaders: &[Leader] = match &leader {
            Some(l) => std::slice::from_ref(l),
            None => &[],
        };
        self.accel(x, v, Target::Speed(v_link), leaders, dt).a
    }

    /// Whether a vehicle at `(x, v)` can stop behind `leader` braking at the
    /// comfortable rate (both at the current instant).
    pub fn comfortably_behind(&self, x: f64, v: f64, leader: &Leader) -> bool {
        let b = self.b_comf;
        let limit = leader.rear - self.fd.cc0 + 1e-6;
        x + v * v / (2.0 * b) <= limit + leader.v * leader.v / (2.0 * b) && x <= limit
    }
}

/// Largest acceleration that keeps the end-of-step position within `room`.
fn stay_behind(v: f64, room: f64, dt: f64) -> f64 {
    if room >= 0.5 * v * dt {
        2.0 * (room - v * dt) / (dt * dt)
    } else if room > 0.0 {
        -v * v / (2.0 * room)
    } else {
        f64::NEG_INFINITY
    }
}

/// Advance one step at constant acceleration, stopping exactly at zero speed.
/// Returns `(x', v')`.
pub fn integrate(x: f64, v: f64, a: f64, dt: f64) -> (f64, f64) {
    let v_next = v + a * dt;
    if v_next >= 0.0 {
        (x + 0.5 * (v + v_next) * dt, v_next)
    } else {
        (x + v * v / (2.0 * -a), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const DT: f64 = 0.1;

    fn driver() -> Driver {
        Driver::new(FDParams::default(), 2.75, 2.75)
    }

    #[test]
    fn free_driving_at_design_speed_is_steady() {
        let d = driver();
        let v = d.fd.v_free;
        assert_eq!(d.car_following_accel(0.0, v, v, None, DT), 0.0);
    }

    #[test]
    fn standstill_equilibrium() {
        let d = driver();
        let leader = Leader::vehicle(d.fd.jam_spacing(), 0.0, d.fd.veh_len);
        let a = d.car_following_accel(0.0, 0.0, d.fd.v_free, Some(leader), DT);
        let (_, v) = integrate(0.0, 0.0, a, DT);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn equilibrium_spacing_is_steady() {
        let d = driver();
        for v in [5.0, 15.0, 25.0, 33.0] {
            // The leader is passed in its end-of-step state.
            let leader = Leader::vehicle(d.fd.spacing(v) + v * DT, v, d.fd.veh_len);
            let a = d.car_following_accel(0.0, v, d.fd.v_free, Some(leader), DT);
            assert!(a.abs() < 1e-9, "v {v}: a {a}");
        }
    }

    #[test]
    fn platoon_converges_to_equilibrium_spacing() {
        let d = driver();
        let v_lead = 22.0;
        let n = 10;
        let mut x: Vec<f64> = (0..n).map(|i| -(i as f64) * 60.0).collect();
        let mut v = vec![30.0; n];
        v[0] = v_lead;
        for _ in 0..6000 {
            for i in 0..n {
                let (a, vv) = if i == 0 {
                    (0.0, v_lead)
                } else {
                    let l = Leader::vehicle(x[i - 1], v[i - 1], d.fd.veh_len);
                    (d.car_following_accel(x[i], v[i], d.fd.v_free, Some(l), DT), v[i])
                };
                let (nx, nv) = integrate(x[i], vv, a, DT);
                x[i] = nx;
                v[i] = nv;
            }
        }
        let expected = d.fd.spacing(v_lead);
        for i in 1..n {
            let s = x[i - 1] - x[i];
            assert!((s - expected).abs() / expected < 0.01, "pair {i}: {s} vs {expected}");
        }
    }

    #[test]
    fn stops_at_stop_line() {
        let d = driver();
        let line = 200.0;
        let (mut x, mut v) = (0.0, 16.67);
        let mut max_decel: f64 = 0.0;
        for _ in 0..1000 {
            let l = Leader::stop_line(line, d.fd.cc0);
            let cmd = d.accel(x, v, Target::Speed(16.67), &[l], DT);
            assert!(!cmd.emergency);
            max_decel = max_decel.max(-cmd.a);
            (x, v) = integrate(x, v, cmd.a, DT);
        }
        assert!(x <= line + 1e-9);
        assert!(line - x < 0.5, "stopped {} m short", line - x);
        assert!(v < 1e-6);
        assert!(max_decel <= d.b_comf + 1e-9);
    }

    #[test]
    fn integrate_stops_within_step() {
        let (x, v) = integrate(0.0, 0.3, -6.0, DT);
        assert_eq!(v, 0.0);
        assert_relative_eq!(x, 0.3 * 0.3 / 12.0);
    }

    proptest! {
        #[test]
        fn no_collision_behind_hard_braking_leader(
            gap in 2.0f64..80.0, v_f in 0.0f64..35.0, v_l in 0.0f64..35.0, b_l in 0.0f64..6.0,
        ) {
            let d = driver();
            let len = d.fd.veh_len;
            // Start from a state the hard cap admits.
            let mut xl = gap + len;
            let mut vl = v_l;
            let mut xf = 0.0;
            let mut vf = v_f;
            let start = Leader::vehicle(xl, vl, len);
            prop_assume!(xf + vf * vf / (2.0 * d.b_emergency)
                <= start.rear - d.fd.cc0 + vl * vl / (2.0 * d.b_emergency));
            prop_assume!(gap >= d.fd.cc0);
            for _ in 0..400 {
                (xl, vl) = integrate(xl, vl, -b_l, DT);
                let l = Leader::vehicle(xl, vl, len);
                let cmd = d.accel(xf, vf, Target::Speed(d.fd.v_free), &[l], DT);
                (xf, vf) = integrate(xf, vf, cmd.a, DT);
                prop_assert!(xl - len - xf >= d.fd.cc0 - 1e-6, "gap {}", xl - len - xf);
                prop_assert!(vf >= 0.0);
            }
        }
    }
}
