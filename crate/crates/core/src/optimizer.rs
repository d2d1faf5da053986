//! Search for the delay-minimising control plan.
//!
//! With the cooperative count relaxed to a real number the hourly delay is a
//! convex quadratic in `d` for fixed `(n, v_c)`, so `d` is the vertex clamped
//! into `[d_lb, d_ub]`. For fixed `v_c` every `n` up to a cap is checked.
//! Along `v_c` the optimum per speed decreases until the current `n` loses
//! feasibility and the next larger `n` takes over with a jump, so the global
//! optimum sits at the right end of one of these segments. [`solve`] locates
//! the segment ends on a coarse grid and refines them by bisection.

use serde::Serialize;

use crate::error::{ClosestCandidate, Constraint, ModelError};
use crate::model::{mainline_sum_for_count, total_delay, ControlPlan, DelayReport, MergeInputs};
use crate::units::{kmh_to_mps, vph_to_vps, SECONDS_PER_HOUR};

pub const DEFAULT_N_CAP: u32 = 50;

/// Relative tolerance under which two objective values count as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Coarse grid step along v_c (m/s).
    pub vc_step: f64,
    /// Width of the bracket at which breakpoint bisection stops (m/s).
    pub bisection_tol: f64,
    pub n_cap: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            vc_step: kmh_to_mps(0.05),
            bisection_tol: kmh_to_mps(1e-4),
            n_cap: DEFAULT_N_CAP,
        }
    }
}

/// Feasible range of `d` for a fixed `(n, v_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DBounds {
    pub lb: f64,
    pub ub: f64,
    /// Which lower bound is active: gap size or acceleration.
    pub binding_lower: Constraint,
}

impl DBounds {
    pub fn is_feasible(&self) -> bool {
        self.lb <= self.ub
    }
}

/// `D(d) = A·d² + B·d + C` for fixed `(n, v_c)`, with its admissible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticForm {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
    pub d_lb: f64,
    pub d_ub: f64,
}

impl QuadraticForm {
    pub fn eval(&self, d: f64) -> f64 {
        (self.a_coef * d + self.b_coef) * d + self.c_coef
    }

    pub fn vertex(&self) -> f64 {
        -self.b_coef / (2.0 * self.a_coef)
    }
}

/// Optimal `d` and relaxed objective for one `(n, v_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairOptimum {
    pub n: u32,
    pub v_c: f64,
    pub d: f64,
    pub objective: f64,
}

/// One point of the `(v_c, n_opt, D_opt)` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    pub v_c: f64,
    pub n_opt: u32,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub plan: ControlPlan,
    /// Delays with the exact integer cooperative count.
    pub report: DelayReport,
    /// Objective of the relaxed (quadratic) model used during the search.
    pub relaxed_objective: f64,
    pub breakpoints: Vec<Breakpoint>,
}

fn check_pair(n: u32, v_c: f64, inputs: &MergeInputs) -> Result<(), ModelError> {
    if n == 0 {
        return Err(ModelError::Domain {
            field: "n",
            reason: "platoon size must be at least 1".into(),
        });
    }
    if !(v_c > 0.0 && v_c < inputs.v_o()) {
        return Err(ModelError::Domain {
            field: "v_c",
            reason: format!("must lie in (0, v_o), got {v_c}"),
        });
    }
    Ok(())
}

/// Lower bound from gap size and acceleration, upper bound from cycle spacing.
pub fn d_bounds(n: u32, v_c: f64, inputs: &MergeInputs) -> Result<DBounds, ModelError> {
    check_pair(n, v_c, inputs)?;
    let (state_c, omega) = inputs.cooperation(v_c)?;
    let v_o = inputs.v_o();
    let nf = n as f64;
    let gap_lb =
        v_o * v_c / (v_o - v_c) * ((nf + 1.0) * state_c.h - inputs.initial_gap_headway());
    let accel_lb = v_c * v_c / inputs.a_max + nf * state_c.h * v_c;
    let (lb, binding_lower) = if gap_lb >= accel_lb {
        (gap_lb, Constraint::GapSize)
    } else {
        (accel_lb, Constraint::Acceleration)
    };
    Ok(DBounds {
        lb,
        ub: nf * omega / inputs.lambda - inputs.d_prime,
        binding_lower,
    })
}

/// Coefficients of the hourly delay as a quadratic in `d`, using the relaxed
/// cooperative count `m = (d + d′)/h_o · (1/ω − 1/v_o)`.
pub fn quadratic_form(n: u32, v_c: f64, inputs: &MergeInputs) -> Result<QuadraticForm, ModelError> {
    let bounds = d_bounds(n, v_c, inputs)?;
    let (state_c, omega) = inputs.cooperation(v_c)?;
    let v_o = inputs.v_o();
    let h_o = inputs.h_o();
    let h_c = state_c.h;
    let v_r = inputs.v_r;
    let lambda = inputs.lambda;
    let d_p = inputs.d_prime;
    let nf = n as f64;
    let rate = SECONDS_PER_HOUR * lambda;
    let denom = 2.0 * nf * v_o * v_o * v_c * omega * h_o;

    let w_m = inputs.w_m;
    let w_r = inputs.w_r;

    let a_coef = w_m * rate * (v_o - v_c) * (v_o - omega) / denom;
    let b_coef = w_m * rate * (v_o - v_c) * (2.0 * d_p * (v_o - omega) + v_o * omega * h_o) / denom
        + w_r * rate * (1.0 / v_c - 1.0 / (2.0 * v_r));

    // Constant term: the same expansion evaluated at d = 0.
    let kappa = (v_o - omega) / (omega * v_o * h_o);
    let mainline_c = (v_o - v_c) / (2.0 * v_o * v_c) * (kappa * d_p * d_p + d_p) / nf;
    let ramp_c = v_r / (2.0 * inputs.b) + d_p / v_c - nf * h_c + nf * h_c * v_c / (2.0 * v_r)
        - d_p / v_o
        + (nf - 1.0) / (2.0 * lambda);
    let c_coef = rate * (w_m * mainline_c + w_r * ramp_c);

    Ok(QuadraticForm {
        a_coef,
        b_coef,
        c_coef,
        d_lb: bounds.lb,
        d_ub: bounds.ub,
    })
}

/// The vertex of the quadratic clamped into `[d_lb, d_ub]`.
pub fn optimal_d(n: u32, v_c: f64, inputs: &MergeInputs) -> Result<f64, ModelError> {
    let qf = quadratic_form(n, v_c, inputs)?;
    clamp_vertex(n, v_c, &qf)
}

fn clamp_vertex(n: u32, v_c: f64, qf: &QuadraticForm) -> Result<f64, ModelError> {
    if qf.d_lb > qf.d_ub {
        return Err(ModelError::InfeasiblePair {
            n,
            v_c,
            d_lb: qf.d_lb,
            d_ub: qf.d_ub,
        });
    }
    let vertex = qf.vertex();
    Ok(if !(vertex > qf.d_lb) {
        qf.d_lb
    } else if vertex >= qf.d_ub {
        qf.d_ub
    } else {
        vertex
    })
}

/// Optimal `d` and its relaxed objective for one `(n, v_c)`.
pub fn pair_optimum(n: u32, v_c: f64, inputs: &MergeInputs) -> Result<PairOptimum, ModelError> {
    let qf = quadratic_form(n, v_c, inputs)?;
    let d = clamp_vertex(n, v_c, &qf)?;
    Ok(PairOptimum {
        n,
        v_c,
        d,
        objective: qf.eval(d),
    })
}

/// Relaxed hourly objective evaluated directly from the model's closed forms
/// (not the quadratic coefficients).
pub fn relaxed_objective(plan: &ControlPlan, inputs: &MergeInputs) -> Result<f64, ModelError> {
    let (_, omega) = inputs.cooperation(plan.v_c)?;
    let m = (plan.d + inputs.d_prime) / inputs.h_o() * (1.0 / omega - 1.0 / inputs.v_o());
    let mainline = mainline_sum_for_count(m, plan, inputs, omega);
    let ramp = crate::model::ramp_delay_sum(plan, inputs)?;
    let r = SECONDS_PER_HOUR * inputs.lambda / plan.n as f64;
    Ok((inputs.w_m * mainline + inputs.w_r * ramp) * r)
}

fn pair_feasible(n: u32, v_c: f64, inputs: &MergeInputs) -> bool {
    d_bounds(n, v_c, inputs).is_ok_and(|b| b.is_feasible())
}

fn best_pair(v_c: f64, inputs: &MergeInputs, n_cap: u32) -> Option<PairOptimum> {
    let mut best: Option<PairOptimum> = None;
    // Feasibility in n need not be contiguous; scan the whole range.
    for n in 1..=n_cap {
        let Ok(p) = pair_optimum(n, v_c, inputs) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => p.objective < b.objective && !tied(p.objective, b.objective),
        };
        if better {
            best = Some(p);
        }
    }
    best
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs())
}

/// Whether `cand` beats `incumbent`: lower objective, ties to larger v_c and
/// then smaller n.
fn improves(cand: &PairOptimum, incumbent: &PairOptimum) -> bool {
    if tied(cand.objective, incumbent.objective) {
        if cand.v_c != incumbent.v_c {
            return cand.v_c > incumbent.v_c;
        }
        return cand.n < incumbent.n;
    }
    cand.objective < incumbent.objective
}

/// Best platoon size at a fixed cooperative speed (ties to smaller n).
pub fn optimal_n_given_vc(v_c: f64, inputs: &MergeInputs) -> Result<PairOptimum, ModelError> {
    optimal_n_capped(v_c, inputs, DEFAULT_N_CAP)
}

pub fn optimal_n_capped(v_c: f64, inputs: &MergeInputs, n_cap: u32) -> Result<PairOptimum, ModelError> {
    best_pair(v_c, inputs, n_cap).ok_or(ModelError::InfeasibleSpeed { v_c })
}

fn speed_grid(inputs: &MergeInputs, step: f64) -> impl Iterator<Item = f64> {
    let start = inputs.fd.v_crit;
    let end = inputs.v_o();
    (0u64..)
        .map(move |k| start + k as f64 * step)
        .take_while(move |&v| v < end)
}

/// `(v_c, n_opt, D_opt)` at every point of a speed grid; infeasible speeds
/// are skipped.
pub fn vc_trace(inputs: &MergeInputs, vc_step: f64, n_cap: u32) -> Vec<Breakpoint> {
    speed_grid(inputs, vc_step)
        .filter_map(|v| best_pair(v, inputs, n_cap))
        .map(|p| Breakpoint {
            v_c: p.v_c,
            n_opt: p.n,
            objective: p.objective,
        })
        .collect()
}

/// Largest `v` in `[lo, hi]` (to `tol`) at which `n` is still feasible, given
/// that it is feasible at `lo` and not at `hi`.
fn feasibility_edge(n: u32, mut lo: f64, mut hi: f64, tol: f64, inputs: &MergeInputs) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pair_feasible(n, mid, inputs) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn solve(inputs: &MergeInputs) -> Result<Solution, ModelError> {
    solve_with(inputs, &SolverOptions::default())
}

pub fn solve_with(inputs: &MergeInputs, opts: &SolverOptions) -> Result<Solution, ModelError> {
    inputs.validate()?;
    let grid: Vec<(f64, Option<PairOptimum>)> = speed_grid(inputs, opts.vc_step)
        .map(|v| (v, best_pair(v, inputs, opts.n_cap)))
        .collect();

    let mut candidates: Vec<PairOptimum> = grid.iter().filter_map(|(_, p)| *p).collect();
    let mut breakpoints = Vec::new();

    for w in grid.windows(2) {
        let (Some(left), (v_right, right)) = (w[0].1, w[1]) else {
            continue;
        };
        if right.is_some_and(|r| r.n == left.n) || pair_feasible(left.n, v_right, inputs) {
            continue;
        }
        // `left.n` loses feasibility inside this bracket: the segment ends here.
        let edge = feasibility_edge(left.n, left.v_c, v_right, opts.bisection_tol, inputs);
        if let Some(p) = best_pair(edge, inputs, opts.n_cap) {
            breakpoints.push(Breakpoint {
                v_c: edge,
                n_opt: p.n,
                objective: p.objective,
            });
            candidates.push(p);
        }
    }

    let best = pick_best(&candidates).ok_or_else(|| infeasible(inputs, opts))?;
    finish(best, inputs, breakpoints)
}

fn pick_best(candidates: &[PairOptimum]) -> Option<PairOptimum> {
    candidates.iter().copied().fold(None, |acc, c| match acc {
        Some(b) if !improves(&c, &b) => Some(b),
        _ => Some(c),
    })
}

fn finish(
    best: PairOptimum,
    inputs: &MergeInputs,
    breakpoints: Vec<Breakpoint>,
) -> Result<Solution, ModelError> {
    let plan = ControlPlan::new(best.n, best.v_c, best.d);
    let report = total_delay(&plan, inputs)?;
    Ok(Solution {
        plan,
        report,
        relaxed_objective: best.objective,
        breakpoints,
    })
}

fn infeasible(inputs: &MergeInputs, opts: &SolverOptions) -> ModelError {
    let mut closest: Option<ClosestCandidate> = None;
    for v in speed_grid(inputs, opts.vc_step) {
        for n in 1..=opts.n_cap {
            let Ok(b) = d_bounds(n, v, inputs) else {
                continue;
            };
            let overlap = b.lb - b.ub;
            if closest.as_ref().is_none_or(|c| overlap < c.bound_overlap) {
                closest = Some(ClosestCandidate {
                    n,
                    v_c: v,
                    bound_overlap: overlap,
                    binding_lower: b.binding_lower,
                });
            }
        }
    }
    ModelError::ScenarioInfeasible {
        closest: closest.map(Box::new),
    }
}

/// Exhaustive grid search over `v_c` and all `n ≤ n_cap`; the independent
/// reference for [`solve`].
pub fn brute_force_solve(
    inputs: &MergeInputs,
    vc_step: f64,
    n_cap: u32,
) -> Result<Solution, ModelError> {
    if !(vc_step > 0.0) {
        return Err(ModelError::Domain {
            field: "vc_step",
            reason: format!("must be positive, got {vc_step}"),
        });
    }
    inputs.validate()?;
    let mut best: Option<PairOptimum> = None;
    for v in speed_grid(inputs, vc_step) {
        for n in 1..=n_cap {
            let Ok(p) = pair_optimum(n, v, inputs) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| improves(&p, b)) {
                best = Some(p);
            }
        }
    }
    let opts = SolverOptions {
        vc_step,
        n_cap,
        ..SolverOptions::default()
    };
    let best = best.ok_or_else(|| infeasible(inputs, &opts))?;
    finish(best, inputs, Vec::new())
}

/// Whether any `(n, v_c)` on the solver grid admits a non-empty `d` range.
pub fn is_solvable(inputs: &MergeInputs, opts: &SolverOptions) -> bool {
    speed_grid(inputs, opts.vc_step).any(|v| (1..=opts.n_cap).any(|n| pair_feasible(n, v, inputs)))
}

/// Largest ramp flow (veh/s, resolved to 1 veh/h) for which a plan exists at
/// mainline flow `q_main` (veh/s). Returns 0 when even 1 veh/h is infeasible.
pub fn max_ramp_flow(q_main: f64, template: &MergeInputs) -> Result<f64, ModelError> {
    max_ramp_flow_with(q_main, template, &SolverOptions::default())
}

pub fn max_ramp_flow_with(
    q_main: f64,
    template: &MergeInputs,
    opts: &SolverOptions,
) -> Result<f64, ModelError> {
    let base = template.with_mainline_flow(q_main)?;
    let feasible = |vph: u32| is_solvable(&base.with_lambda(vph_to_vps(vph as f64)), opts);

    if !feasible(1) {
        return Ok(0.0);
    }
    let mut lo = 1u32;
    let mut hi = 2u32;
    while feasible(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi >= 1 << 20 {
            return Ok(vph_to_vps(lo as f64));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(vph_to_vps(lo as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_constraints, InitialGap};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn kmh(v: f64) -> f64 {
        v / 3.6
    }

    fn inputs(q_main: f64, q_ramp: f64) -> MergeInputs {
        MergeInputs::from_hourly(q_main, q_ramp).unwrap()
    }

    #[test]
    fn bounds_1a_demand_gap() {
        let inp = MergeInputs {
            initial_gap: InitialGap::Demand,
            ..inputs(1600.0, 300.0)
        };
        let b = d_bounds(4, kmh(96.67), &inp).unwrap();
        assert_relative_eq!(b.lb, 461.7, epsilon = 0.05);
        assert_eq!(b.binding_lower, Constraint::GapSize);
        assert_relative_eq!(b.ub, 623.9, epsilon = 0.05);
    }

    #[test]
    fn bounds_1a_saturated_gap_meet() {
        let b = d_bounds(4, kmh(96.67), &inputs(1600.0, 300.0)).unwrap();
        assert_relative_eq!(b.ub, 623.9, epsilon = 0.05);
        assert!((b.lb - b.ub).abs() < 0.5);
    }

    #[test]
    fn bounds_2c_upper() {
        let b = d_bounds(15, kmh(82.25), &inputs(1800.0, 500.0)).unwrap();
        assert_relative_eq!(b.ub, 1266.3, epsilon = 0.05);
    }

    #[test]
    fn gap_bound_non_positive_falls_to_acceleration() {
        // (n+1)·h_c ≤ h_o when n = 1 and the demand headway is long.
        let inp = MergeInputs {
            initial_gap: InitialGap::Demand,
            ..inputs(1000.0, 300.0)
        };
        let v_c = kmh(100.0);
        let b = d_bounds(1, v_c, &inp).unwrap();
        let h_c = inp.fd.spacing(v_c) / v_c;
        assert!(2.0 * h_c <= inp.h_o());
        assert_eq!(b.binding_lower, Constraint::Acceleration);
        assert_relative_eq!(b.lb, v_c * v_c / inp.a_max + h_c * v_c, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_matches_model_with_relaxed_count() {
        let inp = inputs(1800.0, 500.0);
        for (n, vk) in [(15, 82.25), (8, 88.16), (3, 100.0)] {
            let qf = quadratic_form(n, kmh(vk), &inp).unwrap();
            assert!(qf.a_coef > 0.0);
            for d in [200.0, 700.0, 1266.0, 2000.0] {
                let plan = ControlPlan::new(n, kmh(vk), d);
                let Ok(direct) = relaxed_objective(&plan, &inp) else {
                    continue;
                };
                assert_relative_eq!(qf.eval(d), direct, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn quadratic_linear_term_at_ramp_speed() {
        // At v_c = v_r the ramp share of B is 3600λ·(1/v_c − 1/(2v_r)) = 3600λ/(2v_r).
        let inp = MergeInputs { w_m: 0.0, ..inputs(1600.0, 300.0) };
        let v_c = inp.v_r;
        let qf = quadratic_form(2, v_c, &inp).unwrap();
        assert_relative_eq!(qf.b_coef, 3600.0 * inp.lambda / (2.0 * inp.v_r), max_relative = 1e-12);
    }

    #[test]
    fn optimal_d_cases() {
        let inp = inputs(1600.0, 300.0);
        let d = optimal_d(4, kmh(96.67), &inp).unwrap();
        assert_relative_eq!(d, 623.9, epsilon = 0.05);
        let inp2 = inputs(1800.0, 500.0);
        let d = optimal_d(15, kmh(82.25), &inp2).unwrap();
        assert_relative_eq!(d, 1266.2, epsilon = 0.1);

        // Vertex below the lower bound: a heavy ramp weight makes larger d
        // cheaper for the ramp (its B term is negative), pushing the vertex up;
        // a heavy mainline weight pushes it down.
        let heavy_main = MergeInputs { w_m: 1.0, w_r: 0.0, ..inputs(1600.0, 100.0) };
        let qf = quadratic_form(3, kmh(95.0), &heavy_main).unwrap();
        assert!(qf.vertex() <= qf.d_lb);
        assert_eq!(optimal_d(3, kmh(95.0), &heavy_main).unwrap(), qf.d_lb);
    }

    #[test]
    fn optimal_d_infeasible_pair() {
        let inp = inputs(1800.0, 500.0);
        let err = optimal_d(1, kmh(82.25), &inp).unwrap_err();
        assert!(matches!(err, ModelError::InfeasiblePair { .. }));
    }

    #[test]
    fn optimal_n_reference_speeds() {
        assert_eq!(optimal_n_given_vc(kmh(96.67), &inputs(1600.0, 300.0)).unwrap().n, 4);
        assert_eq!(optimal_n_given_vc(kmh(82.25), &inputs(1800.0, 500.0)).unwrap().n, 15);
    }

    #[test]
    fn tiny_ramp_demand_only_lower_bound_matters() {
        let inp = inputs(1600.0, 0.001);
        let v_c = kmh(90.0);
        for n in 1..=10 {
            let b = d_bounds(n, v_c, &inp).unwrap();
            assert!(b.ub > 1e6);
            assert!(b.is_feasible());
        }
    }

    #[test]
    fn solve_reference_scenarios() {
        let cases = [
            (1600.0, 300.0, 4, 96.67, 624.0),
            (1600.0, 400.0, 7, 89.80, 794.0),
            (1600.0, 500.0, 12, 83.53, 1062.0),
            (1800.0, 300.0, 5, 99.61, 911.0),
            (1800.0, 400.0, 8, 88.16, 847.0),
            (1800.0, 500.0, 15, 82.25, 1266.0),
        ];
        for (qm, qr, n, vk, d) in cases {
            let inp = inputs(qm, qr);
            let sol = solve(&inp).unwrap();
            assert_eq!(sol.plan.n, n, "{qm}/{qr}");
            assert!((sol.plan.v_c * 3.6 - vk).abs() <= 0.5, "{qm}/{qr}: {}", sol.plan.v_c * 3.6);
            assert!((sol.plan.d - d).abs() <= (0.01 * d).max(10.0), "{qm}/{qr}: {}", sol.plan.d);
            let rep = check_constraints(&sol.plan, &inp);
            assert!(rep.min_margin() >= -1e-9, "{rep:?}");
        }
    }

    #[test]
    fn coarse_grid_is_no_better() {
        let inp = inputs(1800.0, 400.0);
        let sol = solve(&inp).unwrap();
        let coarse = brute_force_solve(&inp, kmh(1.0), 50).unwrap();
        assert!(coarse.relaxed_objective >= sol.relaxed_objective * (1.0 - 1e-12));
    }

    #[test]
    fn infeasible_scenario_reports_closest() {
        let inp = inputs(1800.0, 3000.0);
        match solve(&inp) {
            Err(ModelError::ScenarioInfeasible { closest: Some(c) }) => {
                assert!(c.bound_overlap > 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn brute_force_rejects_bad_step() {
        assert!(brute_force_solve(&inputs(1800.0, 500.0), 0.0, 50).is_err());
    }

    #[test]
    fn ramp_capacity_at_reference_flows() {
        let tmpl = inputs(1800.0, 500.0);
        for qm in [1600.0, 1800.0] {
            let cap = max_ramp_flow(vph_to_vps(qm), &tmpl).unwrap() * 3600.0;
            assert!(cap >= 500.0, "q_main {qm}: {cap}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn quadratic_coefficient_positive(n in 1u32..40, vk in 75.0f64..119.9) {
            let inp = inputs(1800.0, 500.0);
            if let Ok(qf) = quadratic_form(n, kmh(vk), &inp) {
                prop_assert!(qf.a_coef > 0.0);
            }
        }

        #[test]
        fn quadratic_agrees_with_model(n in 1u32..30, vk in 75.0f64..119.0, frac in 0.0f64..1.0,
                                       qm in 1200.0f64..2000.0, qr in 100.0f64..600.0) {
            let inp = inputs(qm, qr);
            if let Ok(qf) = quadratic_form(n, kmh(vk), &inp) {
                let lo = qf.d_lb.max(1.0);
                let d = lo + frac * 1500.0;
                let plan = ControlPlan::new(n, kmh(vk), d);
                if let Ok(direct) = relaxed_objective(&plan, &inp) {
                    prop_assert!((qf.eval(d) - direct).abs() <= 1e-6 * direct.abs().max(1.0));
                }
            }
        }
    }
}
