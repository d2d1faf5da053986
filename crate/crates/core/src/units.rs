//! Unit conversions used at configuration and report boundaries.

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[inline]
pub fn kmh_to_mps(v: f64) -> f64 {
    v / 3.6
}

#[inline]
pub fn mps_to_kmh(v: f64) -> f64 {
    v * 3.6
}

#[inline]
pub fn vph_to_vps(q: f64) -> f64 {
    q / SECONDS_PER_HOUR
}

#[inline]
pub fn vps_to_vph(q: f64) -> f64 {
    q * SECONDS_PER_HOUR
}
