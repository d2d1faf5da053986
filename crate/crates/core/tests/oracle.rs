//! Cross-checks of the closed forms and the breakpoint solver against
//! straightforward re-derivations.

use comc_core::{
    brute_force_solve, check_constraints, cooperative_count, d_bounds, mainline_delay_sum,
    max_ramp_flow, ramp_delay_sum, solve, vc_trace, ControlPlan, MergeInputs,
};
use proptest::prelude::*;

fn kmh(v: f64) -> f64 {
    v / 3.6
}

/// Per-vehicle mainline delays summed one by one.
fn mainline_by_vehicle(plan: &ControlPlan, inp: &MergeInputs) -> f64 {
    let v_o = inp.v_o();
    let h_o = inp.h_o();
    let (_, omega) = inp.cooperation(plan.v_c).unwrap();
    let len = plan.d + inp.d_prime;
    let t_sw = len / omega;
    let t0 = len / v_o;
    let mut total = 0.0;
    let mut i = 1u32;
    loop {
        // Vehicle i would reach EM at (i−1)h_o + len/v_o undisturbed; it is
        // cooperative if that happens before the wave dissipates. The
        // facilitating vehicle (i = 1) always is.
        let passes_em = (i - 1) as f64 * h_o + t0;
        if i > 1 && passes_em >= t_sw {
            break;
        }
        let t_o = (i - 1) as f64 * omega * h_o / (v_o - omega);
        let t_c = (len - v_o * t_o) / plan.v_c;
        total += t_o + t_c - t0;
        i += 1;
    }
    total
}

/// Per-vehicle ramp delays summed one by one.
fn ramp_by_vehicle(plan: &ControlPlan, inp: &MergeInputs) -> f64 {
    let h_c = inp.fd.spacing(plan.v_c) / plan.v_c;
    let nf = plan.n as f64;
    let t_br = inp.v_r / inp.b;
    let s_br = inp.v_r * inp.v_r / (2.0 * inp.b);
    let t_acc = plan.d / plan.v_c - nf * h_c;
    let s = plan.v_c * t_acc / 2.0;
    let t_cr = inp.d_prime / plan.v_c;
    let t_ref = (s_br + s) / inp.v_r + inp.d_prime / inp.v_o();
    (1..=plan.n)
        .map(|j| {
            let t_wt = (plan.n - j) as f64 / inp.lambda;
            t_br + t_wt + t_acc + t_cr - t_ref
        })
        .sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 1000,
        max_global_rejects: 100_000,
        ..ProptestConfig::default()
    })]

    #[test]
    fn closed_forms_match_vehicle_sums(
        qm in 1200.0f64..2000.0,
        qr in 100.0f64..600.0,
        n in 1u32..30,
        vk in 75.0f64..119.5,
        frac in 0.0f64..1.0,
    ) {
        let inp = MergeInputs::from_hourly(qm, qr).unwrap();
        let v_c = kmh(vk);
        let b = d_bounds(n, v_c, &inp);
        prop_assume!(b.as_ref().is_ok_and(|b| b.is_feasible()));
        let b = b.unwrap();
        let plan = ControlPlan::new(n, v_c, b.lb + frac * (b.ub - b.lb));
        prop_assert!(check_constraints(&plan, &inp).min_margin() >= -1e-9);

        let closed = mainline_delay_sum(&plan, &inp).unwrap();
        let summed = mainline_by_vehicle(&plan, &inp);
        prop_assert!(rel_err(closed, summed) <= 1e-6, "mainline {closed} vs {summed}");

        let closed = ramp_delay_sum(&plan, &inp).unwrap();
        let summed = ramp_by_vehicle(&plan, &inp);
        prop_assert!(rel_err(closed, summed) <= 1e-6, "ramp {closed} vs {summed}");
    }

    #[test]
    fn mainline_delay_grows_with_distance(
        n in 1u32..20, vk in 76.0f64..118.0, d in 100.0f64..1500.0, dd in 1.0f64..300.0,
    ) {
        let inp = MergeInputs::from_hourly(1800.0, 500.0).unwrap();
        let a = mainline_delay_sum(&ControlPlan::new(n, kmh(vk), d), &inp).unwrap();
        let b = mainline_delay_sum(&ControlPlan::new(n, kmh(vk), d + dd), &inp).unwrap();
        prop_assert!(b > a);
    }
}

#[test]
fn cooperative_count_matches_vehicle_loop() {
    let inp = MergeInputs::from_hourly(1800.0, 500.0).unwrap();
    for (n, vk, d) in [(15, 82.25, 1266.0), (4, 96.67, 624.0), (2, 110.0, 300.0)] {
        let plan = ControlPlan::new(n, kmh(vk), d);
        let (_, omega) = inp.cooperation(plan.v_c).unwrap();
        let len = d + inp.d_prime;
        let count = (1u32..)
            .take_while(|&i| i == 1 || (i - 1) as f64 * inp.h_o() + len / inp.v_o() < len / omega)
            .count() as u32;
        assert_eq!(cooperative_count(&plan, &inp).unwrap(), count);
    }
}

const REFERENCE: [(f64, f64); 6] = [
    (1600.0, 300.0),
    (1600.0, 400.0),
    (1600.0, 500.0),
    (1800.0, 300.0),
    (1800.0, 400.0),
    (1800.0, 500.0),
];

#[test]
fn solver_agrees_with_exhaustive_search() {
    let mut seed = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut cases: Vec<(f64, f64)> = REFERENCE.to_vec();
    for _ in 0..50 {
        cases.push((1200.0 + 800.0 * next(), 100.0 + 500.0 * next()));
    }

    let mut compared = 0;
    let mut same_n = 0;
    for (qm, qr) in cases {
        let inp = MergeInputs::from_hourly(qm, qr).unwrap();
        let fast = solve(&inp);
        let slow = brute_force_solve(&inp, kmh(0.01), 50);
        match (fast, slow) {
            (Ok(f), Ok(s)) => {
                compared += 1;
                let err = rel_err(f.relaxed_objective, s.relaxed_objective);
                assert!(err <= 1e-3, "{qm:.1}/{qr:.1}: {} vs {}", f.relaxed_objective, s.relaxed_objective);
                // Refined breakpoints can only improve on the fixed grid.
                assert!(f.relaxed_objective <= s.relaxed_objective * (1.0 + 1e-9));
                if f.plan.n == s.plan.n {
                    same_n += 1;
                }
            }
            (Err(_), Err(_)) => {}
            (f, s) => panic!("{qm:.1}/{qr:.1}: feasibility disagrees: {f:?} / {s:?}"),
        }
    }
    assert!(compared >= 6);
    assert!(same_n as f64 >= 0.95 * compared as f64, "{same_n}/{compared}");
}

#[test]
fn objective_curve_shape() {
    let inp = MergeInputs::from_hourly(1800.0, 500.0).unwrap();
    let trace = vc_trace(&inp, kmh(0.01), 50);
    assert!(trace.len() > 100);
    let mut jumps = 0;
    for w in trace.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.n_opt == b.n_opt {
            assert!(b.objective <= a.objective * (1.0 + 1e-12), "{a:?} -> {b:?}");
        } else {
            assert!(b.n_opt > a.n_opt, "{a:?} -> {b:?}");
            assert!(b.objective > a.objective, "{a:?} -> {b:?}");
            jumps += 1;
        }
    }
    assert!(jumps >= 3);

    // The optimum sits at the right end of a constant-n segment: n is no
    // longer feasible just above it.
    let sol = solve(&inp).unwrap();
    let above = d_bounds(sol.plan.n, sol.plan.v_c + kmh(0.01), &inp).unwrap();
    assert!(!above.is_feasible());
    assert!(sol
        .breakpoints
        .iter()
        .any(|bp| (bp.v_c - sol.plan.v_c).abs() < 1e-9));
}

#[test]
fn ramp_capacity_decreases_with_mainline_flow() {
    let tmpl = MergeInputs::from_hourly(1800.0, 500.0).unwrap();
    let caps: Vec<f64> = [1200.0, 1400.0, 1600.0, 1800.0, 2000.0]
        .iter()
        .map(|&qm| max_ramp_flow(qm / 3600.0, &tmpl).unwrap() * 3600.0)
        .collect();
    for w in caps.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{caps:?}");
    }
    assert!(caps[2] >= 500.0 - 1e-9 && caps[3] >= 500.0 - 1e-9, "{caps:?}");
}

#[test]
fn ramp_capacity_is_tight() {
    let tmpl = MergeInputs::from_hourly(1800.0, 500.0).unwrap();
    let cap = (max_ramp_flow(0.5, &tmpl).unwrap() * 3600.0).round();
    assert!(solve(&tmpl.with_lambda(cap / 3600.0)).is_ok());
    assert!(solve(&tmpl.with_lambda((cap + 1.0) / 3600.0)).is_err());
}
