//! The simulation loop.
//!
//! Each step admits arrivals, updates the ramp lane and then the mainline
//! front to back (so every follower sees its leader's new state), processes
//! merges from the acceleration lane, and finally checks spacing and
//! vehicle bookkeeping.

use std::collections::VecDeque;

use comc_core::{
    equilibrium_state, platoon_kinematics, shockwave_duration, ControlPlan, MergeInputs,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arrivals::{generate_arrivals, ArrivalSchedule};
use crate::car_following::{integrate, Driver, Leader, Target};
use crate::controller::{member_accel, member_target, DecelerationAnchor};
use crate::error::SimError;
use crate::geometry::RoadGeometry;
use crate::metrics::{
    ClassStats, CycleRecord, Metrics, SpeedContour, TrajectoryLog, TrajectoryRow,
};
use crate::vehicle::{Control, Lane, Origin, Vehicle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Base,
    Comc,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Base => "base",
            Mode::Comc => "comc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Initial period excluded from all metrics (s).
    pub warmup: f64,
    pub seed: u64,
    pub mode: Mode,
    pub anchor: DecelerationAnchor,
    /// Keep per-second vehicle samples.
    pub record_trajectory: bool,
    /// Distance before the end of the acceleration lane within which an
    /// unmerged vehicle asks the mainline to yield (m).
    pub yield_zone: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            duration: 7200.0,
            warmup: 600.0,
            seed: 0,
            mode: Mode::Base,
            anchor: DecelerationAnchor::default(),
            record_trajectory: false,
            yield_zone: 50.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::config("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimError::config("duration", "must be positive"));
        }
        if !(self.warmup >= 0.0 && self.warmup < self.duration) {
            return Err(SimError::config("warmup", "must lie in [0, duration)"));
        }
        if !(self.yield_zone >= 0.0) {
            return Err(SimError::config("yield_zone", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub inputs: MergeInputs,
    pub geometry: RoadGeometry,
    pub driver: Driver,
    /// Required in coordinated mode.
    pub plan: Option<ControlPlan>,
}

impl Scenario {
    pub fn new(inputs: MergeInputs, plan: Option<ControlPlan>) -> Self {
        Self {
            driver: Driver::new(inputs.fd, inputs.a_max, inputs.b),
            inputs,
            geometry: RoadGeometry::default(),
            plan,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub contour: SpeedContour,
    pub cycles: Vec<CycleRecord>,
    pub trajectory: Option<TrajectoryLog>,
}

/// Plan-derived positions and timings used by the controller.
#[derive(Debug, Clone, Copy)]
struct Layout {
    plan: ControlPlan,
    h_c: f64,
    t_sw: f64,
    sc: f64,
    wp: f64,
}

#[derive(Debug, Default)]
struct Comc {
    queue: VecDeque<usize>,
    last_release: Option<f64>,
    /// Cycle whose facilitating vehicle has been appointed but whose
    /// platoon is not yet released.
    active: Option<usize>,
    release_at: Option<f64>,
    trigger_since: Option<f64>,
    skipped: Vec<u64>,
    cycles: Vec<CycleRecord>,
}

struct World<'a> {
    sc: &'a Scenario,
    cfg: &'a SimConfig,
    layout: Option<Layout>,
    vehicles: Vec<Vehicle>,
    /// Vehicle indices per lane, most downstream first.
    main: Vec<usize>,
    ramp: Vec<usize>,
    arrivals: ArrivalSchedule,
    next_main: usize,
    next_ramp: usize,
    backlog_main: VecDeque<f64>,
    backlog_ramp: VecDeque<f64>,
    /// (ramp vehicle, mainline vehicle asked to let it in)
    yields: Vec<(usize, usize)>,
    comc: Comc,
    time: f64,
    contour: SpeedContour,
    first_section: i64,
    trajectory: Option<TrajectoryLog>,
    entered: u64,
    exited: u64,
    em_crossings: u64,
    emergencies: u64,
    forced_merges: u64,
    min_gap: f64,
    max_speed: f64,
    eq_samples: u64,
    eq_max_err: f64,
    max_queue: usize,
}

/// Run one simulation. Deterministic for a given scenario and config.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput, SimError> {
    config.validate()?;
    scenario.inputs.validate()?;
    let mut rng_main = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rng_ramp = ChaCha8Rng::seed_from_u64(config.seed);
    rng_ramp.set_stream(1);
    let arrivals = generate_arrivals(
        &mut rng_main,
        &mut rng_ramp,
        scenario.inputs.state_o.q,
        scenario.inputs.lambda,
        scenario.inputs.fd.saturation_headway(),
        config.duration,
    )?;
    run_with_arrivals(scenario, config, arrivals)
}

/// Run with a given demand instead of one drawn from `config.seed`.
pub fn run_with_arrivals(
    scenario: &Scenario,
    config: &SimConfig,
    arrivals: ArrivalSchedule,
) -> Result<RunOutput, SimError> {
    config.validate()?;
    scenario.geometry.validate()?;
    scenario.inputs.validate()?;
    let layout = match config.mode {
        Mode::Base => None,
        Mode::Comc => Some(layout(scenario)?),
    };
    if scenario.inputs.d_prime >= scenario.geometry.mainline_downstream_len {
        return Err(SimError::config("d_prime", "EM lies beyond the network exit"));
    }

    let g = &scenario.geometry;
    let sections = g.sections();
    let first_section = (sections[0] / g.section_spacing).round() as i64;
    let mut world = World {
        sc: scenario,
        cfg: config,
        layout,
        vehicles: Vec::with_capacity(arrivals.mainline.len() + arrivals.ramp.len()),
        main: Vec::new(),
        ramp: Vec::new(),
        arrivals,
        next_main: 0,
        next_ramp: 0,
        backlog_main: VecDeque::new(),
        backlog_ramp: VecDeque::new(),
        yields: Vec::new(),
        comc: Comc::default(),
        time: 0.0,
        contour: SpeedContour::new(sections, g.contour_bin, config.duration),
        first_section,
        trajectory: config.record_trajectory.then(TrajectoryLog::default),
        entered: 0,
        exited: 0,
        em_crossings: 0,
        emergencies: 0,
        forced_merges: 0,
        min_gap: f64::INFINITY,
        max_speed: 0.0,
        eq_samples: 0,
        eq_max_err: 0.0,
        max_queue: 0,
    };

    let steps = (config.duration / config.dt).round() as u64;
    let sample_every = (1.0 / config.dt).round().max(1.0) as u64;
    for k in 0..steps {
        world.time = k as f64 * config.dt;
        world.step()?;
        if (k + 1) % sample_every == 0 {
            world.sample((k + 1) as f64 * config.dt);
        }
    }
    Ok(world.finish())
}

fn layout(sc: &Scenario) -> Result<Layout, SimError> {
    let plan = sc.plan.ok_or_else(|| SimError::config("plan", "coordinated mode needs a control plan"))?;
    let inputs = &sc.inputs;
    let g = &sc.geometry;
    let kin = platoon_kinematics(&plan, inputs)?;
    let h_c = equilibrium_state(plan.v_c, &inputs.fd)?.h;
    let t_sw = shockwave_duration(&plan, inputs)?;
    let sc_pos = g.mp() - plan.d;
    let lead = inputs.v_o() * (inputs.v_o() - plan.v_c) / (2.0 * inputs.b);
    if sc_pos - lead < 0.0 {
        return Err(SimError::config(
            "d",
            format!("SC at {sc_pos:.1} m leaves no room to brake on the modelled mainline"),
        ));
    }
    let wp = g.mp() - kin.s_wp;
    if wp - kin.s_br < g.ramp_entry() {
        return Err(SimError::config(
            "ramp_len",
            format!(
                "waiting position {:.1} m before MP plus braking distance {:.1} m exceeds the ramp",
                kin.s_wp, kin.s_br
            ),
        ));
    }
    Ok(Layout {
        plan,
        h_c,
        t_sw,
        sc: sc_pos,
        wp,
    })
}

impl World<'_> {
    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn step(&mut self) -> Result<(), SimError> {
        if self.layout.is_some() {
            self.control_cycles();
        }
        self.admit();
        self.update_lane(Lane::Ramp);
        self.update_lane(Lane::Main);
        self.merge();
        self.retire();
        self.refresh_yields();
        self.check()
    }

    // ---- coordinated control -------------------------------------------

    fn control_cycles(&mut self) {
        let lay = self.layout.expect("coordinated mode");
        let t = self.time;
        let (v_c, b) = (lay.plan.v_c, self.sc.inputs.b);

        if let Some(t_rel) = self.comc.release_at {
            if t >= t_rel - 1e-9 {
                self.release(t_rel);
            }
            return;
        }

        if let Some(cycle) = self.comc.active {
            let f = self.comc.cycles[cycle].facilitator as usize;
            let veh = &self.vehicles[f];
            let x_s = lay.sc - self.cfg.anchor.lead_distance(veh.v, v_c, b);
            if veh.x >= x_s {
                let t_rel = self.cfg.anchor.release_time(t, veh.x, veh.v, v_c, b, lay.sc);
                let rec = &mut self.comc.cycles[cycle];
                rec.decel_start_time = Some(t);
                rec.facilitator_start_speed = Some(veh.v);
                rec.release_time = Some(t_rel);
                self.vehicles[f].control = Control::Facilitating { cycle };
                self.comc.release_at = Some(t_rel);
                if t >= t_rel - 1e-9 {
                    self.release(t_rel);
                }
            }
            return;
        }

        let spaced = self.comc.last_release.is_none_or(|r| t - r >= lay.t_sw - 1e-9);
        if self.comc.queue.len() < lay.plan.n as usize || !spaced {
            return;
        }
        self.comc.trigger_since.get_or_insert(t);
        let mut chosen = None;
        for &i in &self.main {
            let veh = &self.vehicles[i];
            if veh.control != Control::Normal || veh.origin != Origin::Mainline {
                continue;
            }
            let x_s = lay.sc - self.cfg.anchor.lead_distance(veh.v, v_c, b);
            if veh.x >= x_s {
                continue;
            }
            if veh.v < v_c {
                if !self.comc.skipped.contains(&veh.id) {
                    self.comc.skipped.push(veh.id);
                }
                continue;
            }
            chosen = Some(i);
            break;
        }
        let Some(f) = chosen else { return };
        let cycle = self.comc.cycles.len();
        self.comc.cycles.push(CycleRecord {
            index: cycle,
            trigger_time: self.comc.trigger_since.take().unwrap_or(t),
            facilitator: self.vehicles[f].id,
            deferrals: self.comc.skipped.len() as u32,
            decel_start_time: None,
            facilitator_start_speed: None,
            release_time: None,
            members: Vec::new(),
            leader_mp_time: None,
            facilitator_mp_time: None,
            timing_error: None,
            analytic_bias: None,
        });
        self.comc.skipped.clear();
        self.comc.active = Some(cycle);
        self.vehicles[f].control = Control::Assigned { cycle };
    }

    fn release(&mut self, t_rel: f64) {
        let lay = self.layout.expect("coordinated mode");
        let cycle = self.comc.active.take().expect("release without a cycle");
        self.comc.release_at = None;
        self.comc.last_release = Some(t_rel);
        let n = lay.plan.n;
        let mut ids = Vec::with_capacity(n as usize);
        for j in 1..=n {
            let Some(i) = self.comc.queue.pop_front() else { break };
            let target = member_target(t_rel, lay.plan.d, lay.plan.v_c, n, lay.h_c, j);
            self.vehicles[i].control = Control::Member { cycle, target };
            ids.push(self.vehicles[i].id);
        }
        self.comc.cycles[cycle].members = ids;
    }

    // ---- demand --------------------------------------------------------

    fn admit(&mut self) {
        let t = self.time;
        while self.next_main < self.arrivals.mainline.len() && self.arrivals.mainline[self.next_main] <= t {
            self.backlog_main.push_back(self.arrivals.mainline[self.next_main]);
            self.next_main += 1;
        }
        while self.next_ramp < self.arrivals.ramp.len() && self.arrivals.ramp[self.next_ramp] <= t {
            self.backlog_ramp.push_back(self.arrivals.ramp[self.next_ramp]);
            self.next_ramp += 1;
        }
        while let Some(&sched) = self.backlog_main.front() {
            if !self.try_admit(Lane::Main, sched) {
                break;
            }
            self.backlog_main.pop_front();
        }
        while let Some(&sched) = self.backlog_ramp.front() {
            if !self.try_admit(Lane::Ramp, sched) {
                break;
            }
            self.backlog_ramp.pop_front();
        }
    }

    fn try_admit(&mut self, lane: Lane, sched: f64) -> bool {
        let g = &self.sc.geometry;
        let d = &self.sc.driver;
        let (entry, v_link, origin) = match lane {
            Lane::Main => (0.0, self.sc.inputs.v_o(), Origin::Mainline),
            Lane::Ramp => (g.ramp_entry(), self.sc.inputs.v_r, Origin::Ramp),
        };
        let list = match lane {
            Lane::Main => &self.main,
            Lane::Ramp => &self.ramp,
        };
        let elapsed = (self.time - sched).clamp(0.0, self.cfg.dt);
        let leader = list.last().map(|&i| {
            let l = &self.vehicles[i];
            Leader::vehicle(l.x, l.v, d.fd.veh_len)
        });

        let mut v0 = v_link;
        if let Some(l) = &leader {
            let room = l.rear - d.fd.cc0 - entry;
            if room < 0.0 {
                return false;
            }
            v0 = v0.min((2.0 * d.b_comf * room + l.v * l.v).sqrt());
        }
        let fits = |x: f64| leader.as_ref().is_none_or(|l| d.comfortably_behind(x, v0, l));
        let x0 = if fits(entry + v0 * elapsed) {
            entry + v0 * elapsed
        } else if fits(entry) {
            entry
        } else {
            return false;
        };
        let entered = if v0 > 0.0 { self.time - (x0 - entry) / v0 } else { self.time };
        let control = match (lane, self.cfg.mode) {
            (Lane::Ramp, Mode::Comc) => Control::Approaching,
            _ => Control::Normal,
        };
        let idx = self.vehicles.len();
        self.vehicles.push(Vehicle {
            id: idx as u64,
            origin,
            lane,
            control,
            x: x0,
            v: v0,
            a: 0.0,
            scheduled: sched,
            entered: entered.max(sched),
            t_measure_start: None,
            t_measure_end: None,
            exited: None,
        });
        match lane {
            Lane::Main => self.main.push(idx),
            Lane::Ramp => self.ramp.push(idx),
        }
        self.entered += 1;
        true
    }

    // ---- motion --------------------------------------------------------

    fn target_for(&self, veh: &Vehicle) -> Target {
        let inputs = &self.sc.inputs;
        let g = &self.sc.geometry;
        match veh.control {
            Control::Normal | Control::Assigned { .. } => match veh.lane {
                Lane::Ramp if veh.x < g.mp() => Target::Speed(inputs.v_r),
                _ => Target::Speed(inputs.v_o()),
            },
            Control::Approaching | Control::Waiting => Target::Speed(inputs.v_r),
            Control::Member { target, .. } => {
                let v_c = self.layout.expect("coordinated mode").plan.v_c;
                if veh.lane == Lane::Ramp && veh.x < g.mp() && veh.v < v_c - 1e-6 {
                    let a = member_accel(veh.v, v_c, g.mp() - veh.x, target - self.time, inputs.a_max);
                    Target::Accel(a)
                } else {
                    Target::Speed(v_c)
                }
            }
            Control::Facilitating { .. } => {
                let v_c = self.layout.expect("coordinated mode").plan.v_c;
                if veh.v > v_c {
                    Target::Accel((-inputs.b).max((v_c - veh.v) / self.dt()))
                } else {
                    Target::Speed(v_c)
                }
            }
        }
    }

    fn leaders_for(&self, lane: Lane, pos: usize, idx: usize, out: &mut Vec<Leader>) {
        out.clear();
        let d = &self.sc.driver;
        let g = &self.sc.geometry;
        let veh = &self.vehicles[idx];
        let list = match lane {
            Lane::Main => &self.main,
            Lane::Ramp => &self.ramp,
        };
        if pos > 0 {
            let l = &self.vehicles[list[pos - 1]];
            let mut leader = Leader::vehicle(l.x, l.v, d.fd.veh_len);
            if let (Control::Member { cycle: a, .. }, Control::Member { cycle: b, .. }) = (veh.control, l.control) {
                leader.spacing = a != b;
            }
            out.push(leader);
        }
        match lane {
            Lane::Ramp => {
                out.push(Leader::stop_line(g.lane_end(), d.fd.cc0));
                if matches!(veh.control, Control::Approaching | Control::Waiting) {
                    let wp = self.layout.expect("coordinated mode").wp;
                    out.push(Leader::stop_line(wp, d.fd.cc0));
                }
            }
            Lane::Main => {
                for &(r, y) in &self.yields {
                    if y == idx {
                        let rv = &self.vehicles[r];
                        out.push(Leader::vehicle(rv.x, rv.v, d.fd.veh_len));
                    }
                }
            }
        }
    }

    fn update_lane(&mut self, lane: Lane) {
        let dt = self.dt();
        let t0 = self.time;
        let mut leaders = Vec::with_capacity(4);
        let len = match lane {
            Lane::Main => self.main.len(),
            Lane::Ramp => self.ramp.len(),
        };
        for pos in 0..len {
            let idx = match lane {
                Lane::Main => self.main[pos],
                Lane::Ramp => self.ramp[pos],
            };
            self.leaders_for(lane, pos, idx, &mut leaders);
            let veh = &self.vehicles[idx];
            let target = self.target_for(veh);
            let cmd = self.sc.driver.accel(veh.x, veh.v, target, &leaders, dt);
            if cmd.emergency {
                self.emergencies += 1;
            }
            let (x0, v0) = (veh.x, veh.v);
            let (x1, v1) = integrate(x0, v0, cmd.a, dt);
            {
                let veh = &mut self.vehicles[idx];
                veh.x = x1;
                veh.v = v1;
                veh.a = cmd.a;
            }
            self.max_speed = self.max_speed.max(v1);
            self.crossings(idx, lane, t0, x0, v0, x1, v1);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn crossings(&mut self, idx: usize, lane: Lane, t0: f64, x0: f64, v0: f64, x1: f64, v1: f64) {
        if x1 <= x0 {
            return;
        }
        let dt = self.dt();
        let at = |p: f64| {
            let f = (p - x0) / (x1 - x0);
            (t0 + f * dt, v0 + f * (v1 - v0))
        };
        let crosses = |p: f64| x0 < p && p <= x1;
        let g = &self.sc.geometry;
        let entry = match self.vehicles[idx].origin {
            Origin::Mainline => 0.0,
            Origin::Ramp => g.ramp_entry(),
        };
        let (m_start, m_end, mp) = (g.measure_start(entry), g.measure_end(), g.mp());
        let em = mp + self.sc.inputs.d_prime;

        if crosses(m_start) {
            self.vehicles[idx].t_measure_start = Some(at(m_start).0);
        }
        if crosses(m_end) {
            self.vehicles[idx].t_measure_end = Some(at(m_end).0);
        }
        if crosses(mp) {
            self.record_mp(idx, at(mp).0);
        }
        if crosses(em) {
            if at(em).0 >= self.cfg.warmup {
                self.em_crossings += 1;
            }
            let veh = &mut self.vehicles[idx];
            if matches!(veh.control, Control::Member { .. } | Control::Facilitating { .. }) {
                veh.control = Control::Normal;
            }
        }
        if lane == Lane::Main {
            let spacing = g.section_spacing;
            let k_lo = (x0 / spacing).floor() as i64 + 1;
            let k_hi = (x1 / spacing).floor() as i64;
            for k in k_lo..=k_hi {
                let s = k - self.first_section;
                if s >= 0 && (s as usize) < self.contour.sections.len() {
                    let (t, v) = at(k as f64 * spacing);
                    self.contour.record(s as usize, t, v);
                }
            }
        }
    }

    fn record_mp(&mut self, idx: usize, t: f64) {
        let Some(lay) = self.layout else { return };
        let veh = &self.vehicles[idx];
        let cycle = match veh.control {
            Control::Member { cycle, .. } | Control::Facilitating { cycle } => cycle,
            _ => return,
        };
        let id = veh.id;
        let is_facilitator = matches!(veh.control, Control::Facilitating { .. });
        let rec = &mut self.comc.cycles[cycle];
        if is_facilitator {
            rec.facilitator_mp_time = Some(t);
            if let Some(t_rel) = rec.release_time {
                rec.analytic_bias = Some(t - (t_rel + lay.plan.d / lay.plan.v_c));
            }
        } else if rec.members.first() == Some(&id) {
            rec.leader_mp_time = Some(t);
        }
        if let (Some(f), Some(l)) = (rec.facilitator_mp_time, rec.leader_mp_time) {
            rec.timing_error = Some(f - l - rec.members.len() as f64 * lay.h_c);
        }
    }

    // ---- lane changes --------------------------------------------------

    fn merge(&mut self) {
        let g = &self.sc.geometry;
        let d = &self.sc.driver;
        let len = d.fd.veh_len;
        let mut j = 0;
        while j < self.ramp.len() {
            let r = self.ramp[j];
            let rv = &self.vehicles[r];
            if rv.x < g.mp() || matches!(rv.control, Control::Approaching | Control::Waiting) {
                j += 1;
                continue;
            }
            let k = self.main.partition_point(|&i| self.vehicles[i].x > rv.x);
            let coordinated = matches!(rv.control, Control::Member { .. });
            let me = Leader::vehicle(rv.x, rv.v, len);
            let leader_ok = k == 0 || {
                let l = &self.vehicles[self.main[k - 1]];
                d.comfortably_behind(rv.x, rv.v, &Leader::vehicle(l.x, l.v, len))
                    && (coordinated || l.x - rv.x >= d.fd.spacing(rv.v) - 1e-6)
            };
            let follower_ok = k == self.main.len() || {
                let f = &self.vehicles[self.main[k]];
                d.comfortably_behind(f.x, f.v, &me) && (coordinated || rv.x - f.x >= d.fd.spacing(f.v) - 1e-6)
            };
            if leader_ok && follower_ok {
                self.ramp.remove(j);
                self.main.insert(k, r);
                self.vehicles[r].lane = Lane::Main;
                let before = self.yields.len();
                self.yields.retain(|&(rr, _)| rr != r);
                if self.yields.len() != before {
                    self.forced_merges += 1;
                }
            } else {
                j += 1;
            }
        }
    }

    fn refresh_yields(&mut self) {
        let g = &self.sc.geometry;
        let d = &self.sc.driver;
        let len = d.fd.veh_len;
        let zone_start = g.lane_end() - self.cfg.yield_zone;
        let mut yields = Vec::new();
        for &r in &self.ramp {
            let rv = &self.vehicles[r];
            if rv.x < zone_start || rv.x < g.mp() {
                continue;
            }
            let me = Leader::vehicle(rv.x, rv.v, len);
            let keep = self.yields.iter().find(|&&(rr, _)| rr == r).map(|&(_, y)| y).filter(|&y| {
                let yv = &self.vehicles[y];
                yv.lane == Lane::Main && yv.exited.is_none() && yv.x <= me.rear - d.fd.cc0
            });
            let yielder = keep.or_else(|| {
                let k = self.main.partition_point(|&i| self.vehicles[i].x > rv.x);
                self.main[k..].iter().copied().find(|&i| {
                    let v = &self.vehicles[i];
                    d.comfortably_behind(v.x, v.v, &me)
                })
            });
            if let Some(y) = yielder {
                yields.push((r, y));
            }
        }
        self.yields = yields;
    }

    fn retire(&mut self) {
        let end = self.sc.geometry.mainline_len();
        while let Some(&i) = self.main.first() {
            if self.vehicles[i].x < end {
                break;
            }
            self.main.remove(0);
            self.vehicles[i].exited = Some(self.time + self.dt());
            self.exited += 1;
        }
        if self.layout.is_some() {
            for &i in &self.ramp {
                let v = &mut self.vehicles[i];
                if v.control == Control::Approaching && v.v < 0.1 {
                    v.control = Control::Waiting;
                    self.comc.queue.push_back(i);
                }
            }
            self.max_queue = self.max_queue.max(self.comc.queue.len());
        }
    }

    // ---- invariants ----------------------------------------------------

    fn check(&mut self) -> Result<(), SimError> {
        let t = self.time + self.dt();
        let present = (self.main.len() + self.ramp.len()) as u64;
        if self.entered != self.exited + present {
            return Err(SimError::Conservation {
                time: t,
                detail: format!(
                    "entered {} != exited {} + present {present}",
                    self.entered, self.exited
                ),
            });
        }
        let fd = self.sc.driver.fd;
        let sample = t >= self.cfg.warmup;
        for lane in [Lane::Main, Lane::Ramp] {
            let list = match lane {
                Lane::Main => &self.main,
                Lane::Ramp => &self.ramp,
            };
            for w in list.windows(2) {
                let (l, f) = (&self.vehicles[w[0]], &self.vehicles[w[1]]);
                let gap = l.x - fd.veh_len - f.x;
                self.min_gap = self.min_gap.min(gap);
                if gap < fd.cc0 - 1e-6 {
                    return Err(SimError::Collision {
                        time: t,
                        leader: l.id,
                        follower: f.id,
                        net_gap: gap,
                    });
                }
                if sample
                    && lane == Lane::Main
                    && l.control == Control::Normal
                    && f.control == Control::Normal
                    && f.v > 1.0
                    && f.a.abs() < 0.01
                    && (f.v - l.v).abs() < 0.01
                    && self.sc.driver.optimal_speed(gap) < self.sc.inputs.v_o() - 0.5
                {
                    let s_eq = fd.spacing(f.v);
                    let err = ((l.x - f.x) - s_eq).abs() / s_eq;
                    self.eq_samples += 1;
                    self.eq_max_err = self.eq_max_err.max(err);
                }
            }
        }
        Ok(())
    }

    fn sample(&mut self, t: f64) {
        let Some(log) = self.trajectory.as_mut() else { return };
        let ramp_entry = self.sc.geometry.ramp_entry();
        let mut rows: Vec<TrajectoryRow> = self
            .main
            .iter()
            .chain(self.ramp.iter())
            .map(|&i| {
                let v = &self.vehicles[i];
                TrajectoryRow {
                    time: t,
                    vehicle_id: v.id,
                    origin: v.origin,
                    role: v.control.role(),
                    pos: match v.lane {
                        Lane::Main => v.x,
                        Lane::Ramp => v.x - ramp_entry,
                    },
                    speed: v.v,
                    accel: v.a,
                }
            })
            .collect();
        rows.sort_by_key(|r| r.vehicle_id);
        log.rows.extend(rows);
    }

    fn finish(self) -> RunOutput {
        let g = &self.sc.geometry;
        let v_o = self.sc.inputs.v_o();
        let v_r = self.sc.inputs.v_r;
        let main_ideal = (g.measure_end() - g.measure_start(0.0)) / v_o;
        let ramp_ideal = (g.mp() - g.measure_start(g.ramp_entry())) / v_r + (g.measure_end() - g.mp()) / v_o;
        let mut main_samples = Vec::new();
        let mut ramp_samples = Vec::new();
        for v in &self.vehicles {
            let (Some(t0), Some(t1)) = (v.t_measure_start, v.t_measure_end) else {
                continue;
            };
            if t0 < self.cfg.warmup {
                continue;
            }
            let travel = t1 - t0 + v.entry_delay();
            match v.origin {
                Origin::Mainline => main_samples.push((travel, travel - main_ideal)),
                Origin::Ramp => ramp_samples.push((travel, travel - ramp_ideal)),
            }
        }
        let mainline = ClassStats::from_samples(&main_samples);
        let ramp = ClassStats::from_samples(&ramp_samples);
        let span = self.cfg.duration - self.cfg.warmup;
        let metrics = Metrics {
            mainline,
            ramp,
            overall: ClassStats::combine(&mainline, &ramp),
            throughput_vph: self.em_crossings as f64 * 3600.0 / span,
            entered: self.entered,
            exited: self.exited,
            present_at_end: (self.main.len() + self.ramp.len()) as u64,
            backlog_at_end: (self.backlog_main.len() + self.backlog_ramp.len()) as u64,
            emergency_decelerations: self.emergencies,
            min_net_gap: self.min_gap,
            max_speed: self.max_speed,
            equilibrium_samples: self.eq_samples,
            equilibrium_max_rel_error: self.eq_max_err,
            forced_merges: self.forced_merges,
            max_ramp_queue: self.max_queue,
            cycles: self.comc.cycles.len(),
        };
        RunOutput {
            metrics,
            contour: self.contour,
            cycles: self.comc.cycles,
            trajectory: self.trajectory,
        }
    }
}
