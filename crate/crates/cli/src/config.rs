//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "defaults": { "seeds": [1, 2, 3], "duration_s": 3600 },
//!   "scenarios": [
//!     { "name": "1A", "q_main": 1600, "q_ramp": 300 },
//!     { "name": "2C", "q_main": 1800, "q_ramp": 500, "modes": ["comc"] }
//!   ]
//! }
//! ```
//!
//! Flows are in veh/h and speeds in km/h. Every key of [`Params`] may appear
//! in `defaults` or in a scenario; scenario values win.

use std::path::Path;

use comc_core::units::{kmh_to_mps, vph_to_vps};
use comc_core::{demand_state, FDParams, InitialGap, MergeInputs};
use comc_sim::{DecelerationAnchor, Mode, RoadGeometry, Scenario, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const DEFAULT_SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

/// Demand scenarios of the reference study: (name, q_main, q_ramp) in veh/h.
pub const REFERENCE_SCENARIOS: [(&str, f64, f64); 6] = [
    ("1A", 1600.0, 300.0),
    ("1B", 1600.0, 400.0),
    ("1C", 1600.0, 500.0),
    ("2A", 1800.0, 300.0),
    ("2B", 1800.0, 400.0),
    ("2C", 1800.0, 500.0),
];

/// Optional overrides; anything left out keeps the reference value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub v_o_kmh: Option<f64>,
    pub v_r_kmh: Option<f64>,
    pub v_crit_kmh: Option<f64>,
    pub d_prime_m: Option<f64>,
    pub b_mps2: Option<f64>,
    pub a_max_mps2: Option<f64>,
    pub cc0_m: Option<f64>,
    pub cc1_s: Option<f64>,
    pub veh_len_m: Option<f64>,
    pub w_m: Option<f64>,
    pub w_r: Option<f64>,
    pub initial_gap: Option<InitialGap>,

    pub mainline_upstream_m: Option<f64>,
    pub mainline_downstream_m: Option<f64>,
    pub ramp_len_m: Option<f64>,
    pub accel_lane_m: Option<f64>,

    pub tau_s: Option<f64>,
    pub b_emergency_mps2: Option<f64>,
    pub dt_s: Option<f64>,
    pub duration_s: Option<f64>,
    pub warmup_s: Option<f64>,
    pub yield_zone_m: Option<f64>,
    pub anchor: Option<DecelerationAnchor>,

    pub seeds: Option<Vec<u64>>,
    pub modes: Option<Vec<Mode>>,
}

macro_rules! overlay {
    ($self:ident, $base:ident, $($f:ident),*) => {
        Params { $($f: $self.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl Params {
    /// `self` with gaps filled from `base`.
    pub fn over(&self, base: &Params) -> Params {
        overlay!(
            self, base, v_o_kmh, v_r_kmh, v_crit_kmh, d_prime_m, b_mps2, a_max_mps2, cc0_m, cc1_s,
            veh_len_m, w_m, w_r, initial_gap, mainline_upstream_m, mainline_downstream_m,
            ramp_len_m, accel_lane_m, tau_s, b_emergency_mps2, dt_s, duration_s, warmup_s,
            yield_zone_m, anchor, seeds, modes
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// veh/h
    pub q_main: f64,
    /// veh/h
    pub q_ramp: f64,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub defaults: Params,
    pub scenarios: Vec<ScenarioConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    defaults: Params,
    scenarios: Vec<Map<String, Value>>,
}

impl ConfigFile {
    /// The six reference demand scenarios with all defaults.
    pub fn reference() -> Self {
        Self {
            defaults: Params::default(),
            scenarios: REFERENCE_SCENARIOS
                .iter()
                .map(|&(name, q_main, q_ramp)| ScenarioConfig {
                    name: name.to_string(),
                    q_main,
                    q_ramp,
                    params: Params::default(),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut scenarios = Vec::with_capacity(raw.scenarios.len());
        for (i, mut obj) in raw.scenarios.into_iter().enumerate() {
            let name = match obj.remove("name") {
                Some(Value::String(s)) if !s.is_empty() => s,
                Some(_) => return Err(CliError::Config(format!("scenarios[{i}].name: expected a non-empty string"))),
                None => return Err(CliError::Config(format!("scenarios[{i}]: missing field `name`"))),
            };
            let mut flow = |key: &str| match obj.remove(key) {
                Some(v) => v
                    .as_f64()
                    .ok_or_else(|| CliError::Config(format!("{name}.{key}: expected a number"))),
                None => Err(CliError::Config(format!("{name}: missing field `{key}`"))),
            };
            let q_main = flow("q_main")?;
            let q_ramp = flow("q_ramp")?;
            let params: Params = serde_json::from_value(Value::Object(obj))
                .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
            scenarios.push(ScenarioConfig {
                name,
                q_main,
                q_ramp,
                params,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for s in &scenarios {
            if !seen.insert(s.name.as_str()) {
                return Err(CliError::Config(format!("duplicate scenario name `{}`", s.name)));
            }
        }
        Ok(Self {
            defaults: raw.defaults,
            scenarios,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Resolved scenarios, restricted to `names` when non-empty.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<ResolvedScenario>, CliError> {
        for n in names {
            if !self.scenarios.iter().any(|s| &s.name == n) {
                return Err(CliError::Config(format!("no scenario named `{n}`")));
            }
        }
        self.scenarios
            .iter()
            .filter(|s| names.is_empty() || names.contains(&s.name))
            .map(|s| ResolvedScenario::new(s, &self.defaults))
            .collect()
    }
}

/// A scenario with every parameter settled, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub name: String,
    pub q_main_vph: f64,
    pub q_ramp_vph: f64,
    pub inputs: MergeInputs,
    pub geometry: RoadGeometry,
    pub tau: f64,
    pub b_emergency: f64,
    /// Template; seed and mode are set per run.
    pub sim: SimConfig,
    pub seeds: Vec<u64>,
    pub modes: Vec<Mode>,
}

impl ResolvedScenario {
    pub fn new(cfg: &ScenarioConfig, defaults: &Params) -> Result<Self, CliError> {
        let p = cfg.params.over(defaults);
        let name = cfg.name.clone();
        let bad = |msg: String| CliError::Config(format!("{name}: {msg}"));

        if !(cfg.q_main > 0.0 && cfg.q_main.is_finite()) {
            return Err(bad(format!("q_main must be positive, got {}", cfg.q_main)));
        }
        let modes = p.modes.clone().unwrap_or_else(|| vec![Mode::Base, Mode::Comc]);
        if modes.is_empty() {
            return Err(bad("modes must not be empty".into()));
        }
        if !(cfg.q_ramp > 0.0 && cfg.q_ramp.is_finite()) {
            return Err(bad(format!("q_ramp must be positive, got {}", cfg.q_ramp)));
        }
        let seeds = p.seeds.clone().unwrap_or_else(|| DEFAULT_SEEDS.to_vec());
        if seeds.is_empty() {
            return Err(bad("seeds must not be empty".into()));
        }

        let reference = FDParams::default();
        let fd = FDParams {
            cc0: p.cc0_m.unwrap_or(reference.cc0),
            cc1: p.cc1_s.unwrap_or(reference.cc1),
            veh_len: p.veh_len_m.unwrap_or(reference.veh_len),
            v_free: p.v_o_kmh.map(kmh_to_mps).unwrap_or(reference.v_free),
            v_crit: p.v_crit_kmh.map(kmh_to_mps).unwrap_or(reference.v_crit),
        };
        let base = MergeInputs::from_hourly(1800.0, 500.0).expect("reference inputs are valid");
        let inputs = MergeInputs {
            state_o: demand_state(vph_to_vps(cfg.q_main), fd.v_free).map_err(|e| bad(e.to_string()))?,
            fd,
            d_prime: p.d_prime_m.unwrap_or(base.d_prime),
            lambda: vph_to_vps(cfg.q_ramp),
            v_r: p.v_r_kmh.map(kmh_to_mps).unwrap_or(base.v_r),
            b: p.b_mps2.unwrap_or(base.b),
            a_max: p.a_max_mps2.unwrap_or(base.a_max),
            w_m: p.w_m.unwrap_or(base.w_m),
            w_r: p.w_r.unwrap_or(base.w_r),
            initial_gap: p.initial_gap.unwrap_or_default(),
        };
        inputs.validate().map_err(|e| bad(e.to_string()))?;

        let g = RoadGeometry::default();
        let geometry = RoadGeometry {
            mainline_upstream_len: p.mainline_upstream_m.unwrap_or(g.mainline_upstream_len),
            mainline_downstream_len: p.mainline_downstream_m.unwrap_or(g.mainline_downstream_len),
            ramp_len: p.ramp_len_m.unwrap_or(g.ramp_len),
            accel_lane_len: p.accel_lane_m.unwrap_or(g.accel_lane_len),
            ..g
        };
        geometry.validate().map_err(|e| bad(e.to_string()))?;

        let s = SimConfig::default();
        let sim = SimConfig {
            dt: p.dt_s.unwrap_or(s.dt),
            duration: p.duration_s.unwrap_or(s.duration),
            warmup: p.warmup_s.unwrap_or(s.warmup),
            yield_zone: p.yield_zone_m.unwrap_or(s.yield_zone),
            anchor: p.anchor.unwrap_or(s.anchor),
            ..s
        };
        sim.validate().map_err(|e| bad(e.to_string()))?;

        let tau = p.tau_s.unwrap_or(0.4);
        let b_emergency = p.b_emergency_mps2.unwrap_or(6.0);
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(bad(format!("tau_s must be positive, got {tau}")));
        }
        if !(b_emergency >= inputs.b && b_emergency.is_finite()) {
            return Err(bad(format!("b_emergency_mps2 must be at least b_mps2, got {b_emergency}")));
        }

        Ok(Self {
            name,
            q_main_vph: cfg.q_main,
            q_ramp_vph: cfg.q_ramp,
            inputs,
            geometry,
            tau,
            b_emergency,
            sim,
            seeds,
            modes,
        })
    }

    /// Simulator scenario for this configuration and an optional plan.
    pub fn sim_scenario(&self, plan: Option<comc_core::ControlPlan>) -> Scenario {
        let mut sc = Scenario::new(self.inputs, plan);
        sc.geometry = self.geometry;
        sc.driver.tau = self.tau;
        sc.driver.b_emergency = self.b_emergency;
        sc
    }

    pub fn run_config(&self, mode: Mode, seed: u64, record_trajectory: bool) -> SimConfig {
        SimConfig {
            mode,
            seed,
            record_trajectory,
            ..self.sim
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_overrides_keep_reference_values() {
        let cfg = ConfigFile::parse(r#"{"scenarios":[{"name":"x","q_main":1600,"q_ramp":300}]}"#).unwrap();
        let s = &cfg.resolve(&[]).unwrap()[0];
        assert_eq!(s.inputs, MergeInputs::from_hourly(1600.0, 300.0).unwrap());
        assert_eq!(s.geometry, RoadGeometry::default());
        assert_eq!(s.sim, SimConfig::default());
        assert_eq!(s.seeds, DEFAULT_SEEDS.to_vec());
        assert_eq!(s.modes, vec![Mode::Base, Mode::Comc]);
    }

    #[test]
    fn scenario_values_override_defaults() {
        let cfg = ConfigFile::parse(
            r#"{"defaults":{"v_r_kmh":50,"seeds":[4]},
                "scenarios":[{"name":"x","q_main":1600,"q_ramp":300,"v_r_kmh":40,"modes":["base"]}]}"#,
        )
        .unwrap();
        let s = &cfg.resolve(&[]).unwrap()[0];
        assert!((s.inputs.v_r - 40.0 / 3.6).abs() < 1e-12);
        assert_eq!(s.seeds, vec![4]);
        assert_eq!(s.modes, vec![Mode::Base]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ConfigFile::parse(r#"{"scenarios":[{"name":"x","q_main":1600,"q_ramp":300,"speed":1}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("unknown field `speed`"), "{err}");
        assert!(ConfigFile::parse(r#"{"scenarios":[],"extra":1}"#).is_err());
        assert!(ConfigFile::parse(r#"{"defaults":{"vo":1},"scenarios":[]}"#).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for body in [
            r#"{"name":"x","q_main":1600,"q_ramp":0}"#,
            r#"{"name":"x","q_main":1600,"q_ramp":300,"d_prime_m":-5}"#,
            r#"{"name":"x","q_main":1600,"q_ramp":300,"seeds":[]}"#,
            r#"{"name":"x","q_main":-1,"q_ramp":300}"#,
            r#"{"name":"x","q_main":1600,"q_ramp":300,"warmup_s":9000}"#,
        ] {
            let cfg = ConfigFile::parse(&format!(r#"{{"scenarios":[{body}]}}"#)).unwrap();
            let err = cfg.resolve(&[]).unwrap_err();
            assert_eq!(err.exit_code(), 3, "{body}: {err}");
        }
    }

    #[test]
    fn filters_by_name() {
        let cfg = ConfigFile::reference();
        let picked = cfg.resolve(&["2B".to_string()]).unwrap();
        assert_eq!(picked.len(), 1);
        assert_eq!(picked[0].q_ramp_vph, 400.0);
        assert!(cfg.resolve(&["9Z".to_string()]).is_err());
    }
}
