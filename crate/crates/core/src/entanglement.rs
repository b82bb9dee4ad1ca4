//! Bipartite pure-state metrics derived from an amplitude matrix.
//!
//! The matrix `A(k, m)` is read as the coefficient matrix `ψ` of
//! `|ψ⟩ = Σ A(k,m) |k⟩⊗|m⟩`. After Frobenius normalization the Schmidt
//! probabilities `p_i` are the squared singular values of `ψ`; the reduced
//! density matrices `ψψ†` and `ψᵀψ̄` share them as eigenvalues. Entropies are
//! in bits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitudes::AmplitudeMatrix;

/// Norms below this are treated as the zero vector.
pub const ZERO_STATE_NORM: f64 = 1e-300;
/// Reduced-density eigenvalues in `[-CLIP_TOL, 0)` are roundoff.
pub const CLIP_TOL: f64 = 1e-12;
/// Eigenvalues below `-NEGATIVE_FAIL` mean something is broken.
pub const NEGATIVE_FAIL: f64 = 1e-8;
/// Schmidt probabilities at or below this are omitted from reports.
pub const REPORT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntanglementError {
    #[error("state has zero norm ({0:e})")]
    ZeroState(f64),
    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

/// Unit-norm coefficient matrix of a two-photon pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    psi: DMatrix<Complex64>,
}

impl BipartiteState {
    /// Normalizes an arbitrary square coefficient matrix.
    pub fn from_matrix(psi: DMatrix<Complex64>) -> Result<Self, EntanglementError> {
        if psi.nrows() != psi.ncols() {
            return Err(EntanglementError::NotSquare {
                rows: psi.nrows(),
                cols: psi.ncols(),
            });
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm < ZERO_STATE_NORM {
            return Err(EntanglementError::ZeroState(norm));
        }
        Ok(BipartiteState {
            psi: psi.unscale(norm),
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.psi
    }

    pub fn dim(&self) -> usize {
        self.psi.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `ρ_A = ψψ†`.
    pub fn reduced_density_a(&self) -> DMatrix<Complex64> {
        &self.psi * self.psi.adjoint()
    }

    /// `ρ_B = Tr_A ρ = ψᵀψ̄`.
    pub fn reduced_density_b(&self) -> DMatrix<Complex64> {
        self.psi.transpose() * self.psi.conjugate()
    }

    /// `vec(ψ)` with the first subsystem index running slowest.
    pub fn state_vector(&self) -> DVector<Complex64> {
        let d = self.dim();
        DVector::from_fn(d * d, |i, _| self.psi[(i / d, i % d)])
    }
}

/// `A / ‖A‖_F` as a bipartite state.
pub fn normalize(matrix: &AmplitudeMatrix) -> Result<BipartiteState, EntanglementError> {
    let d = matrix.dim();
    let psi = DMatrix::from_row_slice(d, d, matrix.entries());
    BipartiteState::from_matrix(psi)
}

/// Singular values and Schmidt probabilities, largest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub singular_values: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Builds a spectrum from unsorted non-negative singular values.
    pub fn from_singular_values(mut singular_values: Vec<f64>) -> Self {
        singular_values.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = singular_values.iter().map(|s| s * s).sum();
        let probabilities: Vec<f64> = singular_values.iter().map(|s| s * s / total).collect();
        let cumulative = probabilities
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        SchmidtSpectrum {
            singular_values,
            probabilities,
            cumulative,
        }
    }

    /// Probabilities above [`REPORT_FLOOR`].
    pub fn reported(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.probabilities
            .iter()
            .copied()
            .zip(self.cumulative.iter().copied())
            .filter(|(p, _)| *p > REPORT_FLOOR)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// Schmidt decomposition via SVD of the coefficient matrix.
pub fn schmidt(state: &BipartiteState) -> Result<SchmidtSpectrum, EntanglementError> {
    let svd = state
        .psi
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| EntanglementError::DecompositionFailure("SVD did not converge".into()))?;
    Ok(SchmidtSpectrum::from_singular_values(
        svd.singular_values.iter().copied().collect(),
    ))
}

/// Eigenvalues of a Hermitian density matrix, descending, with roundoff
/// negatives clipped to zero.
pub fn density_spectrum(rho: &DMatrix<Complex64>) -> Result<Vec<f64>, EntanglementError> {
    let mut eig = hermitian_eigenvalues(rho)?;
    for e in eig.iter_mut() {
        if *e < -NEGATIVE_FAIL {
            return Err(EntanglementError::DecompositionFailure(format!(
                "density matrix eigenvalue {e:e} is negative"
            )));
        }
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>, EntanglementError> {
    if m.nrows() != m.ncols() {
        return Err(EntanglementError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    // symmetrize so the solver sees an exactly Hermitian input
    let h = (m + m.adjoint()).scale(0.5);
    let eig = nalgebra::linalg::SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or_else(|| {
        EntanglementError::DecompositionFailure("Hermitian eigensolver did not converge".into())
    })?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Von Neumann entropy of either reduced state, `-Σ p log₂ p`.
pub fn entropy_bits(spectrum: &SchmidtSpectrum) -> f64 {
    let s: f64 = spectrum
        .probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    s.max(0.0)
}

/// `Tr ρ_A² = Σ p²`.
pub fn purity(spectrum: &SchmidtSpectrum) -> f64 {
    spectrum.probabilities.iter().map(|p| p * p).sum()
}

/// `S(ρ_A) + S(ρ_B) - S(ρ)`; the global state is pure so this is `2 S(ρ_A)`.
pub fn mutual_information_bits(spectrum: &SchmidtSpectrum) -> f64 {
    2.0 * entropy_bits(spectrum)
}

/// Negativity from the Schmidt coefficients: `((Σ √p)² - 1) / 2`.
pub fn negativity(spectrum: &SchmidtSpectrum) -> f64 {
    let sum_sqrt: f64 = spectrum.probabilities.iter().map(|p| p.max(0.0).sqrt()).sum();
    ((sum_sqrt * sum_sqrt - 1.0) / 2.0).max(0.0)
}

/// Partial transpose over the second subsystem of `|ψ⟩⟨ψ|`.
pub fn partial_transpose(state: &BipartiteState) -> DMatrix<Complex64> {
    let d = state.dim();
    let psi = &state.psi;
    DMatrix::from_fn(d * d, d * d, |row, col| {
        let (k, m) = (row / d, row % d);
        let (kp, mp) = (col / d, col % d);
        psi[(k, mp)] * psi[(kp, m)].conj()
    })
}

/// Negativity as the sum of `|λ|` over negative eigenvalues of the partial
/// transpose. Independent of [`negativity`]; cost grows as `D⁶`.
pub fn negativity_partial_transpose(state: &BipartiteState) -> Result<f64, EntanglementError> {
    let eig = hermitian_eigenvalues(&partial_transpose(state))?;
    Ok(eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

/// Inverse participation ratio `1 / Σ p²`.
pub fn effective_dimensionality(spectrum: &SchmidtSpectrum) -> f64 {
    1.0 / purity(spectrum)
}

/// The five metrics for one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementMetrics {
    pub entropy_bits: f64,
    pub purity: f64,
    pub mutual_info_bits: f64,
    pub negativity: f64,
    pub d_eff: f64,
}

impl EntanglementMetrics {
    pub fn from_spectrum(spectrum: &SchmidtSpectrum) -> Self {
        EntanglementMetrics {
            entropy_bits: entropy_bits(spectrum),
            purity: purity(spectrum),
            mutual_info_bits: mutual_information_bits(spectrum),
            negativity: negativity(spectrum),
            d_eff: effective_dimensionality(spectrum),
        }
    }
}

/// `P(k, m) = |A(k, m)|² / ‖A‖²_F`, row-major over `(k, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointProbability {
    pub dim: usize,
    pub entries: Vec<f64>,
    pub normalized: bool,
}

impl JointProbability {
    pub fn from_amplitudes(matrix: &AmplitudeMatrix) -> Result<Self, EntanglementError> {
        let total: f64 = matrix.entries().iter().map(|z| z.norm_sqr()).sum();
        if total.is_nan() || total.sqrt() < ZERO_STATE_NORM {
            return Err(EntanglementError::ZeroState(total.sqrt()));
        }
        Ok(JointProbability {
            dim: matrix.dim(),
            entries: matrix.entries().iter().map(|z| z.norm_sqr() / total).collect(),
            normalized: true,
        })
    }

    /// Unnormalized `|A(k,m)|²`.
    pub fn raw(matrix: &AmplitudeMatrix) -> Self {
        JointProbability {
            dim: matrix.dim(),
            entries: matrix.entries().iter().map(|z| z.norm_sqr()).collect(),
            normalized: false,
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    /// Row-major `(row, col)` of the largest cell; first one wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &p) in self.entries.iter().enumerate() {
            if p > self.entries[best] {
                best = i;
            }
        }
        (best / self.dim, best % self.dim)
    }
}

/// Single-photon OAM spectra `(P(k), P(m))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub p_k: Vec<f64>,
    pub p_m: Vec<f64>,
}

/// Row and column sums of the joint probability.
pub fn marginals(joint: &JointProbability) -> Marginals {
    let mut p_m = vec![0.0; joint.dim];
    let p_k = joint
        .entries
        .chunks(joint.dim)
        .map(|row| {
            for (acc, p) in p_m.iter_mut().zip(row) {
                *acc += p;
            }
            row.iter().sum()
        })
        .collect();
    Marginals { p_k, p_m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{build_matrix, BoostModel, ModeRange};
    use crate::kinematics::LorentzFactor;
    use crate::quadrature::QuadratureSpec;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn product_state(d: usize) -> BipartiteState {
        let mut m = DMatrix::from_element(d, d, c(0.0));
        m[(d / 2, d / 2)] = c(3.0);
        BipartiteState::from_matrix(m).unwrap()
    }

    fn anti_diagonal(d: usize) -> BipartiteState {
        let m = DMatrix::from_fn(d, d, |r, col| if r + col == d - 1 { c(1.0) } else { c(0.0) });
        BipartiteState::from_matrix(m).unwrap()
    }

    #[test]
    fn normalization() {
        let s = anti_diagonal(41);
        let v = 1.0 / 41f64.sqrt();
        assert!((s.matrix()[(0, 40)].re - v).abs() < 1e-15);
        assert!((s.frobenius_norm() - 1.0).abs() < 1e-14);
        let again = BipartiteState::from_matrix(s.matrix().clone()).unwrap();
        assert!((again.matrix() - s.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_state_rejected() {
        let z = DMatrix::from_element(3, 3, c(0.0));
        assert!(matches!(
            BipartiteState::from_matrix(z),
            Err(EntanglementError::ZeroState(_))
        ));
        let rect = DMatrix::from_element(2, 3, c(1.0));
        assert!(matches!(
            BipartiteState::from_matrix(rect),
            Err(EntanglementError::NotSquare { .. })
        ));
    }

    #[test]
    fn maximally_entangled_metrics() {
        let spec = schmidt(&anti_diagonal(41)).unwrap();
        assert_eq!(spec.len(), 41);
        for p in &spec.probabilities {
            assert!((p - 1.0 / 41.0).abs() < 1e-14);
        }
        let m = EntanglementMetrics::from_spectrum(&spec);
        assert!((m.entropy_bits - 41f64.log2()).abs() < 1e-12);
        assert!((m.entropy_bits - 5.3576).abs() < 1e-4);
        assert!((m.purity - 0.0244).abs() < 1e-4);
        assert!((m.mutual_info_bits - 10.7151).abs() < 1e-3);
        assert!((m.negativity - 20.0).abs() < 1e-10);
        assert!((m.d_eff - 41.0).abs() < 1e-9);
    }

    #[test]
    fn product_state_metrics() {
        let spec = schmidt(&product_state(5)).unwrap();
        assert!((spec.probabilities[0] - 1.0).abs() < 1e-15);
        assert_eq!(spec.reported().count(), 1);
        let m = EntanglementMetrics::from_spectrum(&spec);
        assert_eq!(m.entropy_bits, 0.0);
        assert_eq!(m.mutual_info_bits, 0.0);
        assert!((m.purity - 1.0).abs() < 1e-15);
        assert!(m.negativity.abs() < 1e-15);
        assert!((m.d_eff - 1.0).abs() < 1e-15);
        assert!(negativity_partial_transpose(&product_state(5)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn two_equal_modes_is_one_bit() {
        let spec = SchmidtSpectrum::from_singular_values(vec![1.0, 0.0, 1.0]);
        assert_eq!(entropy_bits(&spec), 1.0);
        assert_eq!(spec.singular_values, vec![1.0, 1.0, 0.0]);
        assert_eq!(*spec.cumulative.last().unwrap(), 1.0);
    }

    #[test]
    fn dual_path_negativity_small() {
        let spec = QuadratureSpec::default();
        let g = LorentzFactor::new(5.0).unwrap();
        let a = build_matrix(BoostModel::NonZeroRm1, g, ModeRange::new(3), &spec).unwrap();
        let state = normalize(&a).unwrap();
        let short = negativity(&schmidt(&state).unwrap());
        let long = negativity_partial_transpose(&state).unwrap();
        assert!((short - long).abs() < 1e-10, "{short} vs {long}");
    }

    #[test]
    fn reduced_densities_share_spectrum() {
        let spec = QuadratureSpec::default();
        let g = LorentzFactor::new(20.0).unwrap();
        let a = build_matrix(BoostModel::NonZeroRm2, g, ModeRange::new(4), &spec).unwrap();
        let state = normalize(&a).unwrap();
        let sch = schmidt(&state).unwrap();
        let ea = density_spectrum(&state.reduced_density_a()).unwrap();
        let eb = density_spectrum(&state.reduced_density_b()).unwrap();
        for i in 0..sch.len() {
            assert!((ea[i] - sch.probabilities[i]).abs() < 1e-10);
            assert!((eb[i] - sch.probabilities[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn density_spectrum_rejects_negative() {
        let rho = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.1), c(-0.1)]));
        assert!(matches!(
            density_spectrum(&rho),
            Err(EntanglementError::DecompositionFailure(_))
        ));
        let rho = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1e-13)]));
        assert_eq!(density_spectrum(&rho).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn marginals_of_anti_diagonal_and_column() {
        let spec = QuadratureSpec::default();
        let a = build_matrix(
            BoostModel::ZeroRm,
            LorentzFactor::REST,
            ModeRange::new(20),
            &spec,
        )
        .unwrap();
        let joint = JointProbability::from_amplitudes(&a).unwrap();
        assert!((joint.entries.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mg = marginals(&joint);
        for p in mg.p_k.iter().chain(&mg.p_m) {
            assert!((p - 1.0 / 41.0).abs() < 1e-12);
        }

        // single column at m = 0
        let d = 5;
        let mut col = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            col[r * d + 2] = c(r as f64 + 1.0);
        }
        let a = AmplitudeMatrix::from_entries(
            BoostModel::ZeroRm,
            LorentzFactor::REST,
            ModeRange::new(2),
            Default::default(),
            col,
        );
        let mg = marginals(&JointProbability::from_amplitudes(&a).unwrap());
        assert_eq!(mg.p_m, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((mg.p_k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
