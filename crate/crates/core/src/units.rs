//! Frequency conventions.
//!
//! User-facing rates are ordinary frequencies in MHz (E/h). Matrix elements
//! are angular frequencies in rad/us, so time is in microseconds throughout.

use std::f64::consts::PI;

/// MHz to rad/us.
#[inline]
pub fn angular(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

/// rad/us to MHz.
#[inline]
pub fn ordinary(rad_per_us: f64) -> f64 {
    rad_per_us / (2.0 * PI)
}
