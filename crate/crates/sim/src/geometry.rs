//! Road layout. Every position is a single longitudinal coordinate `x`
//! measured from the mainline entry; the on-ramp lane shares it, so a ramp
//! vehicle abreast of a mainline vehicle has the same `x`.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoadGeometry {
    /// Mainline length from entry to MP (m).
    pub mainline_upstream_len: f64,
    /// Mainline length from MP to the network exit (m).
    pub mainline_downstream_len: f64,
    /// Ramp length from its entry to MP (m).
    pub ramp_len: f64,
    /// Acceleration lane length downstream of MP (m).
    pub accel_lane_len: f64,
    /// Distance excluded from travel-time measurement at both ends (m).
    pub measure_margin: f64,
    /// Spacing of speed cross-sections (m).
    pub section_spacing: f64,
    /// Width of a speed-contour time bin (s).
    pub contour_bin: f64,
}

impl Default for RoadGeometry {
    fn default() -> Self {
        Self {
            mainline_upstream_len: 2000.0,
            mainline_downstream_len: 500.0,
            ramp_len: 700.0,
            accel_lane_len: 240.0,
            measure_margin: 100.0,
            section_spacing: 100.0,
            contour_bin: 300.0,
        }
    }
}

impl RoadGeometry {
    pub fn validate(&self) -> Result<(), SimError> {
        for (field, value) in [
            ("mainline_upstream_len", self.mainline_upstream_len),
            ("mainline_downstream_len", self.mainline_downstream_len),
            ("ramp_len", self.ramp_len),
            ("accel_lane_len", self.accel_lane_len),
            ("section_spacing", self.section_spacing),
            ("contour_bin", self.contour_bin),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::config(field, format!("must be positive, got {value}")));
            }
        }
        if !(self.measure_margin >= 0.0 && 2.0 * self.measure_margin < self.mainline_len()) {
            return Err(SimError::config("measure_margin", "leaves no measured span"));
        }
        if self.measure_margin >= self.ramp_len {
            return Err(SimError::config("measure_margin", "exceeds the ramp length"));
        }
        if self.accel_lane_len >= self.mainline_downstream_len {
            return Err(SimError::config(
                "accel_lane_len",
                "acceleration lane must end before the network exit",
            ));
        }
        Ok(())
    }

    pub fn mp(&self) -> f64 {
        self.mainline_upstream_len
    }

    pub fn mainline_len(&self) -> f64 {
        self.mainline_upstream_len + self.mainline_downstream_len
    }

    pub fn ramp_entry(&self) -> f64 {
        self.mp() - self.ramp_len
    }

    pub fn lane_end(&self) -> f64 {
        self.mp() + self.accel_lane_len
    }

    /// Start of the measured span for vehicles entering at `entry`.
    pub fn measure_start(&self, entry: f64) -> f64 {
        entry + self.measure_margin
    }

    pub fn measure_end(&self) -> f64 {
        self.mainline_len() - self.measure_margin
    }

    /// Cross-section positions of the speed contour.
    pub fn sections(&self) -> Vec<f64> {
        let first = (self.measure_margin / self.section_spacing).ceil() as i64;
        let last = (self.measure_end() / self.section_spacing).floor() as i64;
        (first.max(1)..=last)
            .map(|k| k as f64 * self.section_spacing)
            .collect()
    }

    /// Position on the lane-local coordinate used in trajectory output:
    /// mainline `x`, or distance from the ramp entry for ramp-lane vehicles.
    pub fn ramp_coordinate(&self, x: f64) -> f64 {
        x - self.ramp_entry()
    }
}
