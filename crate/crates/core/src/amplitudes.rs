//! Joint OAM amplitude matrices `A(k, m)` for the three detector-motion
//! models.
//!
//! * Zero RM: both detectors co-move; `(1/2π)∫ J(φ) e^{-i(k+m)φ} dφ` with
//!   `J = γ/((γ²-1)cos²φ + 1)`.
//! * Non-Zero RM1: one detector moves, evaluated in the rest frame;
//!   `(1/2π)∫ e^{-ikφ} e^{-im φ'(φ)} dφ`.
//! * Non-Zero RM2: same motion, evaluated in the moving frame;
//!   `(1/2π)∫ e^{-ik φ'^{-1}(φ)} e^{-imφ} dφ`.
//!
//! Zero RM has the closed form `A = r^{|s|/2}` for even `s = k+m` with
//! `r = -(γ-1)/(γ+1)` (Fourier coefficients of `1/(a + b cos 2φ)`), and the
//! `m = 0` column of Non-Zero RM2 is `((γ-1)/(γ+1))^{|k|/2}` for even `k`.
//! Both are kept as oracles next to the quadrature path.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    boost_angle_on, boost_jacobian, inverse_boost_angle_on, LorentzFactor, PhaseBranch,
};
use crate::quadrature::{Integrator, QuadratureError, QuadratureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmplitudeError {
    #[error("mode index out of range: |{index}| > l_max = {l_max}")]
    ModeOutOfRange { index: i32, l_max: u32 },
    #[error("amplitude A({k},{m}): {source}")]
    Quadrature {
        k: i32,
        m: i32,
        #[source]
        source: QuadratureError,
    },
    #[error(transparent)]
    Spec(QuadratureError),
    #[error("unknown model {0:?} (expected zero-rm, non-zero-rm1 or non-zero-rm2)")]
    UnknownModel(String),
}

/// Detector-motion model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoostModel {
    #[serde(rename = "zero-rm")]
    ZeroRm,
    #[serde(rename = "non-zero-rm1")]
    NonZeroRm1,
    #[serde(rename = "non-zero-rm2")]
    NonZeroRm2,
}

impl BoostModel {
    pub const ALL: [BoostModel; 3] = [
        BoostModel::ZeroRm,
        BoostModel::NonZeroRm1,
        BoostModel::NonZeroRm2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoostModel::ZeroRm => "zero-rm",
            BoostModel::NonZeroRm1 => "non-zero-rm1",
            BoostModel::NonZeroRm2 => "non-zero-rm2",
        }
    }

    /// Column heading used in tables.
    pub fn label(self) -> &'static str {
        match self {
            BoostModel::ZeroRm => "Zero RM",
            BoostModel::NonZeroRm1 => "Non-Zero RM1",
            BoostModel::NonZeroRm2 => "Non-Zero RM2",
        }
    }
}

impl fmt::Display for BoostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoostModel {
    type Err = AmplitudeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "zero-rm" | "zero" | "zrm" => Ok(BoostModel::ZeroRm),
            "non-zero-rm1" | "nonzero-rm1" | "rm1" | "nz1" => Ok(BoostModel::NonZeroRm1),
            "non-zero-rm2" | "nonzero-rm2" | "rm2" | "nz2" => Ok(BoostModel::NonZeroRm2),
            _ => Err(AmplitudeError::UnknownModel(s.to_string())),
        }
    }
}

/// OAM truncation: indices run over `-l_max..=l_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeRange {
    pub l_max: u32,
}

impl ModeRange {
    pub const DEFAULT: ModeRange = ModeRange { l_max: 20 };

    pub fn new(l_max: u32) -> Self {
        ModeRange { l_max }
    }

    #[inline]
    pub fn dim(self) -> usize {
        2 * self.l_max as usize + 1
    }

    pub fn indices(self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let l = self.l_max as i32;
        -l..=l
    }

    #[inline]
    pub fn contains(self, index: i32) -> bool {
        index.unsigned_abs() <= self.l_max
    }

    /// Storage offset of a mode index.
    #[inline]
    pub fn offset(self, index: i32) -> usize {
        debug_assert!(self.contains(index));
        (index + self.l_max as i32) as usize
    }

    fn check(self, index: i32) -> Result<(), AmplitudeError> {
        if self.contains(index) {
            Ok(())
        } else {
            Err(AmplitudeError::ModeOutOfRange {
                index,
                l_max: self.l_max,
            })
        }
    }
}

impl Default for ModeRange {
    fn default() -> Self {
        ModeRange::DEFAULT
    }
}

/// Dense `D×D` amplitude matrix stored row-major at `(k + l_max, m + l_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMatrix {
    pub model: BoostModel,
    pub gamma: LorentzFactor,
    pub lmax: ModeRange,
    pub branch: PhaseBranch,
    entries: Vec<Complex64>,
}

impl AmplitudeMatrix {
    /// Wraps raw row-major entries; `entries.len()` must be `D²`.
    pub fn from_entries(
        model: BoostModel,
        gamma: LorentzFactor,
        lmax: ModeRange,
        branch: PhaseBranch,
        entries: Vec<Complex64>,
    ) -> Self {
        assert_eq!(entries.len(), lmax.dim() * lmax.dim());
        AmplitudeMatrix {
            model,
            gamma,
            lmax,
            branch,
            entries,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lmax.dim()
    }

    #[inline]
    pub fn get(&self, k: i32, m: i32) -> Complex64 {
        self.entries[self.lmax.offset(k) * self.dim() + self.lmax.offset(m)]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Closed-form Zero RM amplitude as a function of `s = k + m`.
pub fn zero_rm_closed_form(gamma: LorentzFactor, s: i32) -> Complex64 {
    if s % 2 != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let g = gamma.value();
    let r = -(g - 1.0) / (g + 1.0);
    Complex64::new(power(r, s.unsigned_abs() / 2), 0.0)
}

/// Closed-form Non-Zero RM2 amplitude on the `m = 0` column.
pub fn nz2_axis_closed_form(gamma: LorentzFactor, k: i32) -> Complex64 {
    if k % 2 != 0 {
        return Complex64::new(0.0, 0.0);
    }
    let g = gamma.value();
    Complex64::new(power((g - 1.0) / (g + 1.0), k.unsigned_abs() / 2), 0.0)
}

// 0^0 = 1 so the rest frame gives a Kronecker delta
fn power(base: f64, exp: u32) -> f64 {
    if exp == 0 {
        1.0
    } else {
        base.powi(exp as i32)
    }
}

/// Whether `A(k, m)` vanishes identically by the π-shift symmetry.
///
/// On the continuous branch every integrand picks up `(-1)^{k+m}` under
/// `φ -> φ + π`. The principal-branch phases are π-periodic instead, so only
/// the parity of the plain `e^{-i·φ}` factor matters.
pub fn is_parity_zero(model: BoostModel, branch: PhaseBranch, k: i32, m: i32) -> bool {
    match (model, branch) {
        (BoostModel::ZeroRm, _) | (_, PhaseBranch::Continuous) => (k + m) % 2 != 0,
        (BoostModel::NonZeroRm1, PhaseBranch::Principal) => k % 2 != 0,
        (BoostModel::NonZeroRm2, PhaseBranch::Principal) => m % 2 != 0,
    }
}

/// Integrand of `A(k, m)` as a function of the rest-frame azimuth.
pub fn integrand(
    model: BoostModel,
    branch: PhaseBranch,
    gamma: LorentzFactor,
    k: i32,
    m: i32,
) -> impl Fn(f64) -> Complex64 {
    let (kf, mf) = (k as f64, m as f64);
    move |phi: f64| match model {
        BoostModel::ZeroRm => Complex64::from_polar(boost_jacobian(phi, gamma), -(kf + mf) * phi),
        BoostModel::NonZeroRm1 => {
            let boosted = boost_angle_on(branch, phi, gamma);
            Complex64::from_polar(1.0, -(kf * phi + mf * boosted))
        }
        BoostModel::NonZeroRm2 => {
            let unboosted = inverse_boost_angle_on(branch, phi, gamma);
            Complex64::from_polar(1.0, -(kf * unboosted + mf * phi))
        }
    }
}

fn integrate_cell(
    integrator: &Integrator,
    model: BoostModel,
    branch: PhaseBranch,
    gamma: LorentzFactor,
    k: i32,
    m: i32,
) -> Result<Complex64, AmplitudeError> {
    let f = integrand(model, branch, gamma, k, m);
    integrator
        .integrate(&f, gamma)
        .map_err(|source| AmplitudeError::Quadrature { k, m, source })
}

/// Single amplitude `A(k, m)` on the continuous branch.
pub fn amplitude(
    model: BoostModel,
    gamma: LorentzFactor,
    k: i32,
    m: i32,
    spec: &QuadratureSpec,
) -> Result<Complex64, AmplitudeError> {
    amplitude_on(model, PhaseBranch::Continuous, gamma, k, m, spec)
}

/// Single amplitude `A(k, m)` on an explicit branch.
pub fn amplitude_on(
    model: BoostModel,
    branch: PhaseBranch,
    gamma: LorentzFactor,
    k: i32,
    m: i32,
    spec: &QuadratureSpec,
) -> Result<Complex64, AmplitudeError> {
    let integrator = Integrator::new(*spec).map_err(AmplitudeError::Spec)?;
    integrate_cell(&integrator, model, branch, gamma, k, m)
}

/// Full matrix on the continuous branch.
pub fn build_matrix(
    model: BoostModel,
    gamma: LorentzFactor,
    lmax: ModeRange,
    spec: &QuadratureSpec,
) -> Result<AmplitudeMatrix, AmplitudeError> {
    build_matrix_on(model, PhaseBranch::Continuous, gamma, lmax, spec)
}

/// Full matrix on an explicit branch.
///
/// Only one cell of each conjugate pair `(k,m)`, `(-k,-m)` is integrated and
/// parity zeros are never integrated. Zero RM integrates one value per even
/// `s = k + m >= 0`. Cells are evaluated in parallel and written by index, so
/// the result does not depend on the thread count.
pub fn build_matrix_on(
    model: BoostModel,
    branch: PhaseBranch,
    gamma: LorentzFactor,
    lmax: ModeRange,
    spec: &QuadratureSpec,
) -> Result<AmplitudeMatrix, AmplitudeError> {
    let integrator = Integrator::new(*spec).map_err(AmplitudeError::Spec)?;
    let dim = lmax.dim();
    let l = lmax.l_max as i32;
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];

    if model == BoostModel::ZeroRm {
        let shifts: Vec<i32> = (0..=2 * l).step_by(2).collect();
        let values: Vec<Result<Complex64, AmplitudeError>> = shifts
            .par_iter()
            .map(|&s| integrate_cell(&integrator, model, branch, gamma, s, 0))
            .collect();
        let mut by_shift = vec![Complex64::new(0.0, 0.0); 4 * l as usize + 1];
        for (&s, v) in shifts.iter().zip(values) {
            let v = v?;
            by_shift[(2 * l + s) as usize] = v;
            by_shift[(2 * l - s) as usize] = v.conj();
        }
        for k in lmax.indices() {
            for m in lmax.indices() {
                entries[lmax.offset(k) * dim + lmax.offset(m)] = by_shift[(2 * l + k + m) as usize];
            }
        }
    } else {
        // canonical half: (k, m) with (k, m) >= (-k, -m) lexicographically
        let cells: Vec<(i32, i32)> = lmax
            .indices()
            .flat_map(|k| lmax.indices().map(move |m| (k, m)))
            .filter(|&(k, m)| k > 0 || (k == 0 && m >= 0))
            .filter(|&(k, m)| !is_parity_zero(model, branch, k, m))
            .collect();
        let values: Vec<Result<Complex64, AmplitudeError>> = cells
            .par_iter()
            .map(|&(k, m)| integrate_cell(&integrator, model, branch, gamma, k, m))
            .collect();
        for (&(k, m), v) in cells.iter().zip(values) {
            let v = v?;
            entries[lmax.offset(k) * dim + lmax.offset(m)] = v;
            entries[lmax.offset(-k) * dim + lmax.offset(-m)] = v.conj();
        }
        // A(0,0) is its own conjugate partner; the integral is real up to roundoff
        if !is_parity_zero(model, branch, 0, 0) {
            let c = lmax.offset(0);
            let z = entries[c * dim + c];
            entries[c * dim + c] = Complex64::new(z.re, 0.0);
        }
    }

    Ok(AmplitudeMatrix::from_entries(
        model, gamma, lmax, branch, entries,
    ))
}

/// Checked accessor used by the CLI.
pub fn lookup(matrix: &AmplitudeMatrix, k: i32, m: i32) -> Result<Complex64, AmplitudeError> {
    matrix.lmax.check(k)?;
    matrix.lmax.check(m)?;
    Ok(matrix.get(k, m))
}
