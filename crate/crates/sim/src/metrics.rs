//! Run outputs: trajectory samples, speed contour, delay statistics.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use crate::vehicle::{Origin, Role};

pub const TRAJECTORY_HEADER: &str = "time_s,vehicle_id,origin,role,pos_m,speed_mps,accel_mps2";
pub const CONTOUR_HEADER: &str = "section_m,bin_start_s,mean_speed_mps,count";

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    pub vehicle_id: u64,
    pub origin: Origin,
    pub role: Role,
    pub pos: f64,
    pub speed: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    pub fn to_csv(&self) -> String {
        let mut out = Vec::with_capacity(self.rows.len() * 48 + 64);
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii output")
    }

    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.2},{},{},{},{:.2},{:.4},{:.4}",
                r.time,
                r.vehicle_id,
                r.origin.as_str(),
                r.role.as_str(),
                r.pos,
                r.speed,
                r.accel
            )?;
        }
        Ok(())
    }
}

/// Time-mean spot speeds of mainline-lane vehicles per cross-section and
/// time bin. Cells nobody crossed are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedContour {
    pub sections: Vec<f64>,
    pub bin: f64,
    pub n_bins: usize,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl SpeedContour {
    pub fn new(sections: Vec<f64>, bin: f64, duration: f64) -> Self {
        let n_bins = (duration / bin).ceil() as usize;
        let cells = sections.len() * n_bins;
        Self {
            sections,
            bin,
            n_bins,
            sum: vec![0.0; cells],
            count: vec![0; cells],
        }
    }

    pub(crate) fn record(&mut self, section: usize, time: f64, speed: f64) {
        let b = ((time / self.bin) as usize).min(self.n_bins.saturating_sub(1));
        let i = section * self.n_bins + b;
        self.sum[i] += speed;
        self.count[i] += 1;
    }

    pub fn mean(&self, section: usize, bin: usize) -> Option<f64> {
        let i = section * self.n_bins + bin;
        (self.count[i] > 0).then(|| self.sum[i] / self.count[i] as f64)
    }

    pub fn count(&self, section: usize, bin: usize) -> u32 {
        self.count[section * self.n_bins + bin]
    }

    pub fn bin_start(&self, bin: usize) -> f64 {
        bin as f64 * self.bin
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CONTOUR_HEADER);
        out.push('\n');
        for (s, &pos) in self.sections.iter().enumerate() {
            for b in 0..self.n_bins {
                let mean = match self.mean(s, b) {
                    Some(m) => format!("{m:.4}"),
                    None => String::new(),
                };
                let _ = writeln!(
                    out,
                    "{:.2},{:.2},{},{}",
                    pos,
                    self.bin_start(b),
                    mean,
                    self.count(s, b)
                );
            }
        }
        out
    }
}

/// Cell-wise mean over several contours with the same grid; a cell is empty
/// only if it is empty in every input.
pub fn average_contours(contours: &[&SpeedContour]) -> Option<Vec<Vec<Option<f64>>>> {
    let first = contours.first()?;
    let mut grid = vec![vec![None; first.n_bins]; first.sections.len()];
    for (s, row) in grid.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let vals: Vec<f64> = contours.iter().filter_map(|c| c.mean(s, b)).collect();
            if !vals.is_empty() {
                *cell = Some(vals.iter().sum::<f64>() / vals.len() as f64);
            }
        }
    }
    Some(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassStats {
    pub vehicles: usize,
    pub mean_travel_time: f64,
    pub mean_delay: f64,
}

impl ClassStats {
    pub(crate) fn from_samples(samples: &[(f64, f64)]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        Self {
            vehicles: samples.len(),
            mean_travel_time: samples.iter().map(|s| s.0).sum::<f64>() / n,
            mean_delay: samples.iter().map(|s| s.1).sum::<f64>() / n,
        }
    }

    /// Vehicle-weighted combination of two classes.
    pub fn combine(a: &Self, b: &Self) -> Self {
        let n = a.vehicles + b.vehicles;
        if n == 0 {
            return Self::default();
        }
        let w = |x: f64, y: f64| (x * a.vehicles as f64 + y * b.vehicles as f64) / n as f64;
        Self {
            vehicles: n,
            mean_travel_time: w(a.mean_travel_time, b.mean_travel_time),
            mean_delay: w(a.mean_delay, b.mean_delay),
        }
    }
}

/// One coordinated merging cycle as executed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub index: usize,
    /// Time the queue and spacing conditions were first met.
    pub trigger_time: f64,
    pub facilitator: u64,
    /// Mainline vehicles passed over because they were already below v_c.
    pub deferrals: u32,
    pub decel_start_time: Option<f64>,
    pub facilitator_start_speed: Option<f64>,
    /// Time the facilitating vehicle would have crossed SC at its approach
    /// speed; the platoon is released then.
    pub release_time: Option<f64>,
    pub members: Vec<u64>,
    pub leader_mp_time: Option<f64>,
    pub facilitator_mp_time: Option<f64>,
    /// `t_F − t_L − n·h_c` at MP.
    pub timing_error: Option<f64>,
    /// Facilitator MP arrival minus the analytic `release + d/v_c`.
    pub analytic_bias: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub mainline: ClassStats,
    pub ramp: ClassStats,
    pub overall: ClassStats,
    /// Vehicles crossing EM per hour after warmup.
    pub throughput_vph: f64,
    pub entered: u64,
    pub exited: u64,
    pub present_at_end: u64,
    pub backlog_at_end: u64,
    pub emergency_decelerations: u64,
    pub min_net_gap: f64,
    pub max_speed: f64,
    pub equilibrium_samples: u64,
    /// Largest relative deviation of steady car-following spacing from
    /// `cc0 + L + cc1·v`.
    pub equilibrium_max_rel_error: f64,
    pub forced_merges: u64,
    pub max_ramp_queue: usize,
    pub cycles: usize,
}
