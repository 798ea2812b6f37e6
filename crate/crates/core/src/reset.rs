//! Partial reset functions.
//!
//! A partial reset function `R` is monotonically increasing with
//! `R(0) = 0`. When an oscillator fires after receiving supra-threshold
//! input charge `zeta = u - 1`, its potential is reset to `R(zeta)`
//! instead of the bare reset value. `R = 0` is the absorption rule,
//! `R(zeta) = zeta` conserves the whole surplus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartialReset {
    /// `R_c(zeta) = c * zeta` with `c >= 0`. `c = 0` recovers the
    /// absorption rule, `c = 1` total charge conservation, `c > 1` is
    /// expansive (allowed but flagged by [`PartialReset::is_expansive`]).
    Linear { c: f64 },
    /// Piecewise-linear interpolation through `(0, 0)` and the given
    /// knots; extrapolates with the last slope.
    Table { points: Vec<(f64, f64)> },
}

impl PartialReset {
    pub fn linear(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "c",
                value: c,
                requirement: "0 <= c < inf",
            });
        }
        Ok(PartialReset::Linear { c })
    }

    /// The absorption rule `R = 0`.
    pub fn absorption() -> Self {
        PartialReset::Linear { c: 0.0 }
    }

    /// Builds a tabulated reset from `(zeta, R(zeta))` knots.
    /// Knots must be strictly increasing in `zeta`, non-decreasing in
    /// `R`, start at positive `zeta`, and the implied curve through the
    /// origin must stay monotone.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter {
                name: "points",
                value: 0.0,
                requirement: "at least one knot",
            });
        }
        let mut prev = (0.0_f64, 0.0_f64);
        for &(z, r) in &points {
            if !(z > prev.0) {
                return Err(Error::InvalidParameter {
                    name: "points.zeta",
                    value: z,
                    requirement: "strictly increasing, > 0",
                });
            }
            if !(r >= prev.1) {
                return Err(Error::InvalidParameter {
                    name: "points.r",
                    value: r,
                    requirement: "non-decreasing with R(0) = 0",
                });
            }
            prev = (z, r);
        }
        Ok(PartialReset::Table { points })
    }

    /// `R(zeta)`.
    pub fn evaluate(&self, zeta: f64) -> f64 {
        match self {
            PartialReset::Linear { c } => c * zeta,
            PartialReset::Table { points } => {
                let mut lo = (0.0, 0.0);
                for &(z, r) in points {
                    if zeta <= z {
                        let t = (zeta - lo.0) / (z - lo.0);
                        return lo.1 + t * (r - lo.1);
                    }
                    lo = (z, r);
                }
                // extrapolate with the last segment's slope
                let n = points.len();
                let (z1, r1) = points[n - 1];
                let (z0, r0) = if n >= 2 { points[n - 2] } else { (0.0, 0.0) };
                let slope = (r1 - r0) / (z1 - z0);
                r1 + slope * (zeta - z1)
            }
        }
    }

    /// `R'(zeta)`. For tabulated resets this is the slope of the segment
    /// containing `zeta` (right-continuous at knots).
    pub fn derivative(&self, zeta: f64) -> f64 {
        match self {
            PartialReset::Linear { c } => *c,
            PartialReset::Table { points } => {
                let mut lo = (0.0, 0.0);
                for &(z, r) in points {
                    if zeta < z {
                        return (r - lo.1) / (z - lo.0);
                    }
                    lo = (z, r);
                }
                let n = points.len();
                let (z1, r1) = points[n - 1];
                let (z0, r0) = if n >= 2 { points[n - 2] } else { (0.0, 0.0) };
                (r1 - r0) / (z1 - z0)
            }
        }
    }

    /// `0 <= R(zeta) <= zeta` on a sampled grid over `[0, zeta_max]`.
    /// Neuronal resets never amplify supra-threshold charge.
    pub fn is_neuronal(&self, zeta_max: f64, samples: usize) -> bool {
        match self {
            PartialReset::Linear { c } => (0.0..=1.0).contains(c),
            PartialReset::Table { .. } => (0..=samples).all(|i| {
                let z = zeta_max * i as f64 / samples as f64;
                let r = self.evaluate(z);
                (0.0..=z + 1e-15).contains(&r)
            }),
        }
    }

    /// `R' > 1` somewhere on a sampled grid over `[0, zeta_max]`.
    pub fn is_expansive(&self, zeta_max: f64, samples: usize) -> bool {
        match self {
            PartialReset::Linear { c } => *c > 1.0,
            PartialReset::Table { .. } => (0..samples).any(|i| {
                let z = zeta_max * (i as f64 + 0.5) / samples as f64;
                self.derivative(z) > 1.0
            }),
        }
    }
}
