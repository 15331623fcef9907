use std::f64::consts::PI;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quantum::tsirelson_envelope;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeScan {
    pub resolution: usize,
    /// `(θ1, θ2, value)`, `θ1` varying slowest.
    pub points: Vec<(f64, f64, f64)>,
    pub max: f64,
    /// First maximizer in scan order.
    pub argmax: (f64, f64),
}

/// Angle `i` of a periodic grid over `[−π, π)` with `resolution` points.
pub fn grid_angle(i: usize, resolution: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / resolution as f64
}

/// Evaluates the envelope on the `resolution × resolution` grid.
/// Panics if `resolution < 2`.
pub fn scan_envelope(resolution: usize) -> EnvelopeScan {
    assert!(resolution >= 2, "resolution must be at least 2");
    let points: Vec<(f64, f64, f64)> = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (t1, t2) = (grid_angle(k / resolution, resolution), grid_angle(k % resolution, resolution));
            (t1, t2, tsirelson_envelope(t1, t2))
        })
        .collect();
    let mut best = 0;
    for (k, p) in points.iter().enumerate() {
        if p.2 > points[best].2 {
            best = k;
        }
    }
    EnvelopeScan {
        resolution,
        max: points[best].2,
        argmax: (points[best].0, points[best].1),
        points,
    }
}

impl EnvelopeScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 48);
        out.push_str("theta1,theta2,value\n");
        for (a, b, v) in &self.points {
            let _ = writeln!(out, "{a:.12},{b:.12},{v:.15}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn coarse_grid_is_bounded() {
        let s = scan_envelope(2);
        assert_eq!(s.points.len(), 4);
        assert!(s.max <= 2.0 * SQRT_2 + 1e-12);
        assert!(s.to_csv().starts_with("theta1,theta2,value\n"));
        assert_eq!(s.to_csv().lines().count(), 5);
    }

    #[test]
    fn fine_grid_hits_the_optimum() {
        let s = scan_envelope(1000);
        assert!((s.max - 2.0 * SQRT_2).abs() < 1e-5);
        assert!(s.points.iter().all(|p| p.2 <= 2.0 * SQRT_2 + 1e-12));
        // (−π/4, π/4) precedes (π/4, −π/4) in scan order.
        assert!((s.argmax.0.abs() - FRAC_PI_4).abs() < 1e-12);
        assert!((s.argmax.0 + s.argmax.1).abs() < 1e-12);
    }
}
