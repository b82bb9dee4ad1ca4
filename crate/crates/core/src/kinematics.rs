//! Lorentz factor and the boosted azimuth maps.
//!
//! A boost along `x` contracts detector coordinates as `(x, y) -> (x/γ, y)`,
//! which sends an azimuth `φ` to `arctan(γ tan φ)`. Every amplitude integrand
//! is built from the continuous branch of that map, its inverse (γ -> 1/γ) and
//! the derivative of the inverse.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("Lorentz factor must be finite and >= 1 (got {0})")]
    InvalidGamma(f64),
}

/// Dimensionless Lorentz factor, `γ >= 1`.
///
/// The light-cone limit is approached with large finite values; the velocity
/// itself is never needed.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LorentzFactor(f64);

impl LorentzFactor {
    pub const REST: LorentzFactor = LorentzFactor(1.0);

    pub fn new(gamma: f64) -> Result<Self, KinematicsError> {
        if gamma.is_finite() && gamma >= 1.0 {
            Ok(LorentzFactor(gamma))
        } else {
            Err(KinematicsError::InvalidGamma(gamma))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_rest(self) -> bool {
        self.0 == 1.0
    }

    #[inline]
    pub fn reciprocal(self) -> f64 {
        1.0 / self.0
    }
}

impl TryFrom<f64> for LorentzFactor {
    type Error = KinematicsError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        LorentzFactor::new(value)
    }
}

impl From<LorentzFactor> for f64 {
    fn from(g: LorentzFactor) -> f64 {
        g.0
    }
}

impl fmt::Display for LorentzFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which branch of `arctan(γ tan φ)` the integrands use.
///
/// `Continuous` is the monotone unwrapped branch on `[0, 2π)` and is the
/// default everywhere. `Principal` is the raw `atan` value in `(-π/2, π/2)`,
/// kept for comparing against numbers produced with that convention; it is
/// discontinuous at `π/2` and `3π/2` and does not reduce to the identity at
/// `γ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseBranch {
    #[default]
    Continuous,
    Principal,
}

impl PhaseBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseBranch::Continuous => "continuous",
            PhaseBranch::Principal => "principal",
        }
    }
}

/// Reduces any real angle into `[0, 2π)`.
#[inline]
pub fn reduce_azimuth(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Continuous branch of `arctan(scale · tan φ)` on `[0, 2π)`.
///
/// The angle is split as `φ = qπ + d` with `d ∈ [-π/2, π/2]`; on that half
/// period `arctan(scale · tan d) = atan2(scale · sin d, cos d)` because
/// `cos d >= 0`, which stays finite at the quadrant boundaries where `tan`
/// overflows.
#[inline]
fn unwrapped_map(phi: f64, scale: f64) -> f64 {
    let phi = reduce_azimuth(phi);
    let q = (phi / PI).round();
    let d = phi - q * PI;
    let (s, c) = d.sin_cos();
    q * PI + (scale * s).atan2(c.max(0.0))
}

/// Boosted azimuth `φ'(φ)` on the continuous branch.
///
/// Strictly increasing on `[0, 2π)`, fixes `0`, `π/2`, `π` and `3π/2`, and
/// tends to `2π` from below.
pub fn boost_angle(phi: f64, gamma: LorentzFactor) -> f64 {
    if gamma.is_rest() {
        return reduce_azimuth(phi);
    }
    unwrapped_map(phi, gamma.value())
}

/// Inverse of [`boost_angle`]: the same map with `γ -> 1/γ`.
pub fn inverse_boost_angle(phi: f64, gamma: LorentzFactor) -> f64 {
    if gamma.is_rest() {
        return reduce_azimuth(phi);
    }
    unwrapped_map(phi, gamma.reciprocal())
}

/// `d/dφ` of [`inverse_boost_angle`] evaluated at the original angle:
/// `γ / ((γ² - 1) cos² φ + 1)`.
#[inline]
pub fn boost_jacobian(phi: f64, gamma: LorentzFactor) -> f64 {
    let g = gamma.value();
    let c = phi.cos();
    g / ((g * g - 1.0) * c * c + 1.0)
}

/// `arctan(scale · tan φ)` on the requested branch.
pub fn boost_angle_on(branch: PhaseBranch, phi: f64, gamma: LorentzFactor) -> f64 {
    match branch {
        PhaseBranch::Continuous => boost_angle(phi, gamma),
        PhaseBranch::Principal => (gamma.value() * phi.tan()).atan(),
    }
}

/// `arctan(tan φ / γ)` on the requested branch.
pub fn inverse_boost_angle_on(branch: PhaseBranch, phi: f64, gamma: LorentzFactor) -> f64 {
    match branch {
        PhaseBranch::Continuous => inverse_boost_angle(phi, gamma),
        PhaseBranch::Principal => (phi.tan() / gamma.value()).atan(),
    }
}

/// Angles at which the boosted maps change fastest.
pub const TRANSITION_ANGLES: [f64; 2] = [FRAC_PI_2, 3.0 * FRAC_PI_2];
