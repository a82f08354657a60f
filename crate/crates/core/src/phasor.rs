//! Complex per-unit quantities and angle helpers.

use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

pub use num_complex::Complex64;

/// Complex per-unit phasor. All electrical signals are carried as phasors in
/// a frame rotating at nominal frequency.
pub type Phasor = Complex64;

pub const J: Phasor = Complex64 { re: 0.0, im: 1.0 };

pub fn polar(mag: f64, angle: f64) -> Phasor {
    Complex64::from_polar(mag, angle)
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Continues `angle` (any branch) from a previous unwrapped value so that
/// the jump is the smallest one consistent with the wrapped input.
pub fn unwrap_from(previous: f64, angle: f64) -> f64 {
    previous + wrap_angle(angle - previous)
}

/// Unwraps a sequence of phasors into a continuous phase trajectory.
pub fn unwrap_phases(samples: impl IntoIterator<Item = Phasor>) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::new();
    for z in samples {
        let a = z.arg();
        let next = match out.last() {
            Some(&prev) => unwrap_from(prev, a),
            None => a,
        };
        out.push(next);
    }
    out
}
