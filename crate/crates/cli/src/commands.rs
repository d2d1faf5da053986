use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use comc_core::units::{kmh_to_mps, vph_to_vps, vps_to_vph};
use comc_core::{brute_force_solve, max_ramp_flow, solve, ControlPlan, MergeInputs, Solution};
use comc_sim::{run, Mode};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ResolvedScenario;
use crate::error::CliError;
use crate::report::{
    round_to, summary_csv, ComparisonReport, ModeSummary, OracleReport, PlanRecord, PlanReport,
    RunRecord,
};

/// Grid step and platoon cap used for the `--oracle` cross-check.
pub const ORACLE_STEP_KMH: f64 = 0.01;
pub const ORACLE_N_CAP: u32 = 50;

pub const DEFAULT_BOUNDARY_Q_MAIN: [f64; 5] = [1200.0, 1400.0, 1600.0, 1800.0, 2000.0];

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    write_file(path, text)
}

pub fn solve_scenario(s: &ResolvedScenario) -> Result<Solution, CliError> {
    solve(&s.inputs).map_err(|source| CliError::Infeasible {
        scenario: s.name.clone(),
        source: Box::new(source),
    })
}

pub fn plan_scenario(s: &ResolvedScenario, oracle: bool) -> Result<PlanReport, CliError> {
    let sol = solve_scenario(s)?;
    let mut report = PlanReport::new(&s.name, s.q_main_vph, s.q_ramp_vph, &sol, &s.inputs);
    if oracle {
        let slow = brute_force_solve(&s.inputs, kmh_to_mps(ORACLE_STEP_KMH), ORACLE_N_CAP).map_err(|source| {
            CliError::Infeasible {
                scenario: s.name.clone(),
                source: Box::new(source),
            }
        })?;
        let dev = (sol.relaxed_objective - slow.relaxed_objective).abs() / slow.relaxed_objective.abs().max(1e-12);
        report.oracle = Some(OracleReport {
            plan: PlanRecord::from(&slow.plan),
            objective_rel_deviation: dev,
            same_n: slow.plan.n == sol.plan.n,
        });
    }
    Ok(report)
}

/// Solves every scenario, prints a summary per scenario, and writes
/// `<out>/<scenario>/plan.json` when `out` is given.
pub fn cmd_plan(
    scenarios: &[ResolvedScenario],
    out: Option<&Path>,
    oracle: bool,
    mut log: impl Write,
) -> Result<Vec<PlanReport>, CliError> {
    let mut reports = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        let r = plan_scenario(s, oracle)?;
        let _ = writeln!(log, "{}", r.headline());
        let _ = writeln!(
            log,
            "    m={} omega={:.2} km/h T_sw={:.2} s cycle={:.2} s D={:.1} s/h (mainline {:.1} s, ramp {:.1} s per cycle)",
            r.cooperative_vehicles,
            r.shockwave_speed_kmh,
            r.shockwave_duration_s,
            r.cycle_interval_s,
            r.total_delay_per_hour_s,
            r.mainline_delay_per_cycle_s,
            r.ramp_delay_per_cycle_s
        );
        let margins: Vec<String> = r.margins.iter().map(|m| format!("{} {:.4}", m.constraint, m.margin)).collect();
        let _ = writeln!(log, "    margins: {}", margins.join(", "));
        if let Some(o) = &r.oracle {
            let _ = writeln!(
                log,
                "    oracle: n={} v_c={:.2} km/h d={:.0} m, objective deviation {:.3e}{}",
                o.plan.n,
                o.plan.v_c_kmh,
                o.plan.d_m,
                o.objective_rel_deviation,
                if o.same_n { "" } else { " (different n)" }
            );
        }
        if let Some(dir) = out {
            write_json(&dir.join(&s.name).join("plan.json"), &r)?;
        }
        reports.push(r);
    }
    Ok(reports)
}

pub fn run_dir(out: &Path, scenario: &str, mode: Mode, seed: u64) -> PathBuf {
    out.join(scenario).join(mode.as_str()).join(seed.to_string())
}

struct Job<'a> {
    scenario: &'a ResolvedScenario,
    plan: Option<ControlPlan>,
    mode: Mode,
    seed: u64,
}

fn run_job(job: &Job, out: &Path) -> Result<RunRecord, CliError> {
    let s = job.scenario;
    let dir = run_dir(out, &s.name, job.mode, job.seed);
    let sc = s.sim_scenario(job.plan);
    let cfg = s.run_config(job.mode, job.seed, true);
    let output = run(&sc, &cfg).map_err(|source| CliError::Simulation {
        scenario: s.name.clone(),
        mode: job.mode.as_str().to_string(),
        seed: job.seed,
        dir: dir.clone(),
        source: Box::new(source),
    })?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    if let Some(log) = &output.trajectory {
        let path = dir.join("trajectory.csv");
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        log.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
    }
    write_file(&dir.join("contour.csv"), output.contour.to_csv())?;
    let record = RunRecord::new(&s.name, job.mode, job.seed, job.plan.as_ref(), &output);
    write_json(&dir.join("metrics.json"), &record)?;
    if job.mode == Mode::Comc {
        write_json(&dir.join("cycles.json"), &output.cycles)?;
    }
    Ok(record)
}

/// Runs every (scenario, mode, seed) on up to `parallel` threads, writes
/// per-run files, then `<out>/<scenario>/summary.{json,csv}` and
/// `<out>/summary.{json,csv}`.
pub fn cmd_simulate(
    scenarios: &[ResolvedScenario],
    out: &Path,
    parallel: usize,
    mut log: impl Write,
) -> Result<Vec<ComparisonReport>, CliError> {
    let mut plans = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        plans.push(if s.modes.contains(&Mode::Comc) {
            Some(solve_scenario(s)?.plan)
        } else {
            None
        });
    }
    let jobs: Vec<Job> = scenarios
        .iter()
        .zip(&plans)
        .flat_map(|(s, plan)| {
            s.modes.iter().flat_map(move |&mode| {
                s.seeds.iter().map(move |&seed| Job {
                    scenario: s,
                    plan: if mode == Mode::Comc { *plan } else { None },
                    mode,
                    seed,
                })
            })
        })
        .collect();
    let _ = writeln!(log, "running {} simulations on {} threads", jobs.len(), parallel.max(1));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let records: Vec<RunRecord> =
        pool.install(|| jobs.par_iter().map(|j| run_job(j, out)).collect::<Result<_, _>>())?;

    let mut reports = Vec::with_capacity(scenarios.len());
    for s in scenarios {
        let modes = s
            .modes
            .iter()
            .map(|&mode| {
                let runs = records
                    .iter()
                    .filter(|r| r.scenario == s.name && r.mode == mode)
                    .cloned()
                    .collect();
                ModeSummary::from_runs(mode, runs)
            })
            .collect();
        let report = ComparisonReport {
            scenario: s.name.clone(),
            q_main_vph: s.q_main_vph,
            q_ramp_vph: s.q_ramp_vph,
            warmup_s: s.sim.warmup,
            duration_s: s.sim.duration,
            modes,
        };
        write_json(&out.join(&s.name).join("summary.json"), &report)?;
        write_file(&out.join(&s.name).join("summary.csv"), report.to_csv())?;
        for row in report.csv_rows() {
            let _ = writeln!(log, "{row}");
        }
        reports.push(report);
    }
    write_json(&out.join("summary.json"), &reports)?;
    write_file(&out.join("summary.csv"), summary_csv(&reports))?;
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub q_main_vph: f64,
    pub max_q_ramp_vph: f64,
}

pub const BOUNDARY_HEADER: &str = "q_main_vph,max_q_ramp_vph";

/// Largest feasible ramp flow for each mainline flow, ascending in `q_main`.
/// A result that increases with mainline flow is reported as a validation
/// error.
pub fn boundary(template: &MergeInputs, q_main: &[f64]) -> Result<Vec<BoundaryRow>, CliError> {
    if q_main.is_empty() {
        return Err(CliError::Config("boundary needs at least one q_main value".into()));
    }
    let mut flows = q_main.to_vec();
    if flows.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
        return Err(CliError::Config(format!("q_main values must be positive: {flows:?}")));
    }
    flows.sort_by(f64::total_cmp);
    flows.dedup();
    let rows: Vec<BoundaryRow> = flows
        .par_iter()
        .map(|&q| {
            max_ramp_flow(vph_to_vps(q), template)
                .map(|cap| BoundaryRow {
                    q_main_vph: q,
                    max_q_ramp_vph: round_to(vps_to_vph(cap), 2),
                })
                .map_err(|e| CliError::Config(format!("q_main {q}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    for w in rows.windows(2) {
        if w[1].max_q_ramp_vph > w[0].max_q_ramp_vph {
            return Err(CliError::Validation(format!(
                "ramp capacity rises from {:.2} to {:.2} veh/h between q_main {} and {}",
                w[0].max_q_ramp_vph, w[1].max_q_ramp_vph, w[0].q_main_vph, w[1].q_main_vph
            )));
        }
    }
    Ok(rows)
}

pub fn boundary_csv(rows: &[BoundaryRow]) -> String {
    let mut out = String::from(BOUNDARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:.2},{:.2}\n", r.q_main_vph, r.max_q_ramp_vph));
    }
    out
}

pub fn cmd_boundary(
    template: &MergeInputs,
    q_main: &[f64],
    out: Option<&Path>,
    mut log: impl Write,
) -> Result<Vec<BoundaryRow>, CliError> {
    let rows = boundary(template, q_main)?;
    let csv = boundary_csv(&rows);
    let _ = log.write_all(csv.as_bytes());
    if let Some(dir) = out {
        write_file(&dir.join("boundary.csv"), csv)?;
    }
    Ok(rows)
}
