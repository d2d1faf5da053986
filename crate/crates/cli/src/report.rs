//! Per-run records and their aggregation across seeds.
//!
//! Every number is rounded before it is written: times and delays to 0.01 s,
//! distances to 0.01 m, speeds to 0.0001 (m/s) or 0.01 (km/h), flows to
//! 0.01 veh/h. Aggregates are computed from the rounded per-seed values so
//! they can be re-derived from the per-run files.

use comc_core::units::mps_to_kmh;
use comc_core::{ControlPlan, Solution};
use comc_sim::{ClassStats, Metrics, Mode, RunOutput};
use serde::{Deserialize, Serialize};

pub fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    // `+ 0.0` turns a rounded −0 into 0.
    (x * f).round() / f + 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub n: u32,
    pub v_c_kmh: f64,
    pub d_m: f64,
}

impl From<&ControlPlan> for PlanRecord {
    fn from(p: &ControlPlan) -> Self {
        Self {
            n: p.n,
            v_c_kmh: round_to(mps_to_kmh(p.v_c), 2),
            d_m: round_to(p.d, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassRecord {
    pub vehicles: usize,
    pub mean_travel_time_s: f64,
    pub mean_delay_s: f64,
}

impl From<&ClassStats> for ClassRecord {
    fn from(c: &ClassStats) -> Self {
        Self {
            vehicles: c.vehicles,
            mean_travel_time_s: round_to(c.mean_travel_time, 2),
            mean_delay_s: round_to(c.mean_delay, 2),
        }
    }
}

impl ClassRecord {
    /// Vehicle-weighted pooling.
    pub fn pool<'a>(items: impl IntoIterator<Item = &'a ClassRecord>) -> ClassRecord {
        let (mut n, mut tt, mut dl) = (0usize, 0.0, 0.0);
        for c in items {
            n += c.vehicles;
            tt += c.mean_travel_time_s * c.vehicles as f64;
            dl += c.mean_delay_s * c.vehicles as f64;
        }
        if n == 0 {
            return ClassRecord::default();
        }
        ClassRecord {
            vehicles: n,
            mean_travel_time_s: round_to(tt / n as f64, 2),
            mean_delay_s: round_to(dl / n as f64, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub cycles_measured: usize,
    pub within_half_second: usize,
    pub max_abs_error_s: f64,
    pub mean_analytic_bias_s: f64,
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub plan: Option<PlanRecord>,
    pub mainline: ClassRecord,
    pub ramp: ClassRecord,
    pub overall: ClassRecord,
    pub throughput_vph: f64,
    pub entered: u64,
    pub exited: u64,
    pub present_at_end: u64,
    pub backlog_at_end: u64,
    pub emergency_decelerations: u64,
    pub forced_merges: u64,
    pub min_net_gap_m: f64,
    pub equilibrium_samples: u64,
    pub equilibrium_max_rel_error: f64,
    pub cycles: usize,
    pub max_ramp_queue: usize,
    pub timing: Option<TimingRecord>,
}

impl RunRecord {
    pub fn new(scenario: &str, mode: Mode, seed: u64, plan: Option<&ControlPlan>, out: &RunOutput) -> Self {
        let m: &Metrics = &out.metrics;
        let mainline = ClassRecord::from(&m.mainline);
        let ramp = ClassRecord::from(&m.ramp);
        let errors: Vec<f64> = out.cycles.iter().filter_map(|c| c.timing_error).collect();
        let biases: Vec<f64> = out.cycles.iter().filter_map(|c| c.analytic_bias).collect();
        let timing = (mode == Mode::Comc).then(|| TimingRecord {
            cycles_measured: errors.len(),
            within_half_second: errors.iter().filter(|e| e.abs() <= 0.5).count(),
            max_abs_error_s: round_to(errors.iter().fold(0.0f64, |a, e| a.max(e.abs())), 4),
            mean_analytic_bias_s: if biases.is_empty() {
                0.0
            } else {
                round_to(biases.iter().sum::<f64>() / biases.len() as f64, 4)
            },
        });
        Self {
            scenario: scenario.to_string(),
            mode,
            seed,
            plan: plan.map(PlanRecord::from),
            mainline,
            ramp,
            overall: ClassRecord::pool([&mainline, &ramp]),
            throughput_vph: round_to(m.throughput_vph, 2),
            entered: m.entered,
            exited: m.exited,
            present_at_end: m.present_at_end,
            backlog_at_end: m.backlog_at_end,
            emergency_decelerations: m.emergency_decelerations,
            forced_merges: m.forced_merges,
            min_net_gap_m: round_to(m.min_net_gap, 2),
            equilibrium_samples: m.equilibrium_samples,
            equilibrium_max_rel_error: round_to(m.equilibrium_max_rel_error, 6),
            cycles: m.cycles,
            max_ramp_queue: m.max_ramp_queue,
            timing,
        }
    }
}

/// Across-seed aggregate of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub plan: Option<PlanRecord>,
    pub mainline: ClassRecord,
    pub ramp: ClassRecord,
    pub overall: ClassRecord,
    pub throughput_vph: f64,
    pub runs: Vec<RunRecord>,
}

impl ModeSummary {
    pub fn from_runs(mode: Mode, mut runs: Vec<RunRecord>) -> Self {
        runs.sort_by_key(|r| r.seed);
        let mainline = ClassRecord::pool(runs.iter().map(|r| &r.mainline));
        let ramp = ClassRecord::pool(runs.iter().map(|r| &r.ramp));
        let throughput = runs.iter().map(|r| r.throughput_vph).sum::<f64>() / runs.len().max(1) as f64;
        Self {
            mode,
            seeds: runs.iter().map(|r| r.seed).collect(),
            plan: runs.first().and_then(|r| r.plan),
            mainline,
            ramp,
            overall: ClassRecord::pool(runs.iter().map(|r| &r.overall)),
            throughput_vph: round_to(throughput, 2),
            runs,
        }
    }
}

/// Contents of `<scenario>/summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub q_main_vph: f64,
    pub q_ramp_vph: f64,
    pub warmup_s: f64,
    pub duration_s: f64,
    pub modes: Vec<ModeSummary>,
}

pub const SUMMARY_HEADER: &str = "scenario,mode,seeds,n,v_c_kmh,d_m,mainline_vehicles,mainline_travel_time_s,mainline_delay_s,ramp_vehicles,ramp_travel_time_s,ramp_delay_s,overall_vehicles,overall_travel_time_s,overall_delay_s,throughput_vph";

impl ComparisonReport {
    pub fn csv_rows(&self) -> Vec<String> {
        self.modes
            .iter()
            .map(|m| {
                let (n, v, d) = match m.plan {
                    Some(p) => (p.n.to_string(), format!("{:.2}", p.v_c_kmh), format!("{:.2}", p.d_m)),
                    None => Default::default(),
                };
                format!(
                    "{},{},{},{n},{v},{d},{},{:.2},{:.2},{},{:.2},{:.2},{},{:.2},{:.2},{:.2}",
                    self.scenario,
                    m.mode.as_str(),
                    m.seeds.len(),
                    m.mainline.vehicles,
                    m.mainline.mean_travel_time_s,
                    m.mainline.mean_delay_s,
                    m.ramp.vehicles,
                    m.ramp.mean_travel_time_s,
                    m.ramp.mean_delay_s,
                    m.overall.vehicles,
                    m.overall.mean_travel_time_s,
                    m.overall.mean_delay_s,
                    m.throughput_vph
                )
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        summary_csv(std::slice::from_ref(self))
    }
}

pub fn summary_csv(reports: &[ComparisonReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        for row in r.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// Contents of `<scenario>/plan.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub scenario: String,
    pub q_main_vph: f64,
    pub q_ramp_vph: f64,
    pub plan: PlanRecord,
    pub cooperative_vehicles: u32,
    pub shockwave_speed_kmh: f64,
    pub shockwave_duration_s: f64,
    pub cycle_interval_s: f64,
    pub cycles_per_hour: f64,
    pub mainline_delay_per_cycle_s: f64,
    pub ramp_delay_per_cycle_s: f64,
    pub total_delay_per_hour_s: f64,
    pub margins: Vec<MarginRecord>,
    pub oracle: Option<OracleReport>,
}

/// Distance to a constraint boundary; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRecord {
    pub constraint: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub plan: PlanRecord,
    pub objective_rel_deviation: f64,
    pub same_n: bool,
}

impl PlanReport {
    pub fn new(name: &str, q_main: f64, q_ramp: f64, sol: &Solution, inputs: &comc_core::MergeInputs) -> Self {
        let r = &sol.report;
        let checks = comc_core::check_constraints(&sol.plan, inputs);
        Self {
            scenario: name.to_string(),
            q_main_vph: q_main,
            q_ramp_vph: q_ramp,
            plan: PlanRecord::from(&sol.plan),
            cooperative_vehicles: r.m,
            shockwave_speed_kmh: round_to(mps_to_kmh(r.omega), 2),
            shockwave_duration_s: round_to(r.t_sw, 2),
            cycle_interval_s: round_to(r.cycle_interval, 2),
            cycles_per_hour: round_to(r.r, 4),
            mainline_delay_per_cycle_s: round_to(r.mainline_sum, 2),
            ramp_delay_per_cycle_s: round_to(r.ramp_sum, 2),
            total_delay_per_hour_s: round_to(r.total, 2),
            margins: checks
                .iter()
                .map(|(c, m)| MarginRecord {
                    constraint: c.to_string(),
                    margin: round_to(m.margin, 4),
                })
                .collect(),
            oracle: None,
        }
    }

    pub fn headline(&self) -> String {
        format!(
            "{}: n={}, v_c={:.2} km/h, d={:.0} m",
            self.scenario, self.plan.n, self.plan.v_c_kmh, self.plan.d_m
        )
    }
}
