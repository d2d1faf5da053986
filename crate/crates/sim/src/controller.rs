//! Pure pieces of the coordinative controller: where the facilitating
//! vehicle starts braking, when the platoon is released, and how each
//! platoon member accelerates.

use serde::{Deserialize, Serialize};

/// How the facilitating vehicle's finite deceleration is placed around SC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecelerationAnchor {
    /// Start braking early enough that the trajectory after braking matches
    /// an instantaneous speed change at SC; the MP arrival then agrees with
    /// the analytic `d/v_c`.
    #[default]
    CenteredOnSc,
    /// Start braking at SC and release the platoon at that instant; the
    /// facilitating vehicle then reaches MP early by
    /// `(v − v_c)²/(2·b·v_c)`.
    StartAtSc,
}

impl DecelerationAnchor {
    /// Distance before SC at which a vehicle at speed `v` starts braking.
    pub fn lead_distance(self, v: f64, v_c: f64, b: f64) -> f64 {
        match self {
            DecelerationAnchor::CenteredOnSc if v > v_c => v * (v - v_c) / (2.0 * b),
            _ => 0.0,
        }
    }

    /// Release time for braking that started at `(t_s, x_s)` with speed `v`.
    /// Braking starts on the first step past its trigger point, so both
    /// variants refer back to the moment that point was actually crossed.
    pub fn release_time(self, t_s: f64, x_s: f64, v: f64, v_c: f64, b: f64, sc: f64) -> f64 {
        match self {
            DecelerationAnchor::StartAtSc => t_s - (x_s - sc).max(0.0) / v,
            DecelerationAnchor::CenteredOnSc => {
                // Time at which the cruise-at-v_c asymptote of the braking
                // trajectory passes SC.
                let t_d = (v - v_c).max(0.0) / b;
                let s_d = 0.5 * (v + v_c) * t_d;
                t_s + t_d + (sc - x_s - s_d) / v_c
            }
        }
    }
}

/// Acceleration that brings a member from speed `v` to `v_c` and then
/// cruises, covering `dist` in `time_left`. Saturates at `a_max` when late.
pub fn member_accel(v: f64, v_c: f64, dist: f64, time_left: f64, a_max: f64) -> f64 {
    let dv = v_c - v;
    if dv <= 0.0 {
        return 0.0;
    }
    let room = v_c * time_left - dist;
    if room <= 1e-9 {
        return a_max;
    }
    (dv * dv / (2.0 * room)).min(a_max)
}

/// Scheduled MP arrival of member `j` (1-based) for release time `t_rel`.
pub fn member_target(t_rel: f64, d: f64, v_c: f64, n: u32, h_c: f64, j: u32) -> f64 {
    t_rel + d / v_c - n as f64 * h_c + (j - 1) as f64 * h_c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Time at which a vehicle braking at `b` from `v` to `v_c` from
    /// `(t_s, x_s)` and then cruising reaches `target`.
    fn arrival(t_s: f64, x_s: f64, v: f64, v_c: f64, b: f64, target: f64) -> f64 {
        let dt = 1e-4;
        let (mut t, mut x, mut s) = (t_s, x_s, v);
        while x < target {
            let a = if s > v_c { -b } else { 0.0 };
            let s1 = (s + a * dt).max(v_c);
            x += 0.5 * (s + s1) * dt;
            s = s1;
            t += dt;
        }
        t
    }

    #[test]
    fn centred_braking_hits_analytic_arrival() {
        let (v, v_c, b, sc, mp) = (120.0 / 3.6, 82.25 / 3.6, 2.75, 734.0, 2000.0);
        let anchor = DecelerationAnchor::CenteredOnSc;
        let x_s = sc - anchor.lead_distance(v, v_c, b);
        let t_rel = anchor.release_time(0.0, x_s, v, v_c, b, sc);
        assert_relative_eq!(t_rel, (sc - x_s) / v, epsilon = 1e-12);
        let t_mp = arrival(0.0, x_s, v, v_c, b, mp);
        assert!((t_mp - (t_rel + (mp - sc) / v_c)).abs() < 1e-3);
    }

    #[test]
    fn braking_at_sc_arrives_early() {
        let (v, v_c, b, sc, mp) = (120.0 / 3.6, 82.25 / 3.6, 2.75, 734.0, 2000.0);
        let anchor = DecelerationAnchor::StartAtSc;
        assert_eq!(anchor.lead_distance(v, v_c, b), 0.0);
        let t_rel = anchor.release_time(5.0, sc, v, v_c, b, sc);
        assert_eq!(t_rel, 5.0);
        let early = (v - v_c).powi(2) / (2.0 * b * v_c);
        let t_mp = arrival(5.0, sc, v, v_c, b, mp);
        assert!((t_rel + (mp - sc) / v_c - t_mp - early).abs() < 1e-3);
    }

    #[test]
    fn platoon_leader_uses_nominal_acceleration() {
        // From rest at s_wp = v_c·t_acc/2, arriving after t_acc: a = v_c/t_acc.
        let (v_c, t_acc) = (96.67 / 3.6, 18.76);
        let a = member_accel(0.0, v_c, v_c * t_acc / 2.0, t_acc, 2.75);
        assert_relative_eq!(a, v_c / t_acc, max_relative = 1e-12);
    }

    #[test]
    fn member_accel_limits() {
        assert_eq!(member_accel(30.0, 25.0, 100.0, 5.0, 2.75), 0.0);
        assert_eq!(member_accel(0.0, 25.0, 100.0, 1.0, 2.75), 2.75);
    }

    #[test]
    fn single_member_release_timing() {
        // n = 1: the only member is due at t_rel + d/v_c − h_c.
        let t = member_target(10.0, 600.0, 25.0, 1, 1.2, 1);
        assert_relative_eq!(t - 10.0, 600.0 / 25.0 - 1.2);
        let t3 = member_target(10.0, 600.0, 25.0, 4, 1.2, 3);
        assert_relative_eq!(t3 - 10.0, 24.0 - 4.8 + 2.4);
    }
}
