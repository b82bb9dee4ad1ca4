//! Adaptive Gauss–Legendre integration of complex 2π-periodic integrands.
//!
//! Boosted integrands have a local frequency of order `l_max · γ` inside a
//! window of width `~1/γ` around `π/2` and `3π/2`, and are smooth elsewhere.
//! The initial mesh therefore always splits at the four quadrant boundaries
//! and adds geometrically graded breakpoints (`2^j / γ`) on both sides of the
//! two transition angles. Each panel is evaluated with an `n`-point and a
//! `2n`-point rule; the difference of the two is the panel error estimate and
//! panels that miss their share of the tolerance are bisected.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{LorentzFactor, TRANSITION_ANGLES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error(
        "tolerance {tol:e} not reached after max depth; estimated error {estimate:e} (value {value})"
    )]
    ToleranceNotReached {
        value: Complex64,
        estimate: f64,
        tol: f64,
    },
}

/// Accuracy controls for one integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Target absolute error of the normalized integral `(1/2π)∫`.
    pub abs_tol: f64,
    /// Bisection levels allowed below a seed panel.
    pub max_depth: u32,
    /// Nodes of the low-order rule; the high-order rule uses twice as many.
    pub base_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            max_depth: 24,
            base_order: 16,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(QuadratureError::InvalidSpec(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_depth < 1 {
            return Err(QuadratureError::InvalidSpec("max_depth must be >= 1".into()));
        }
        if self.base_order < 2 {
            return Err(QuadratureError::InvalidSpec("base_order must be >= 2".into()));
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_lo^hi f`, summed in node order.
    #[inline]
    pub fn apply<F>(&self, f: &F, lo: f64, hi: f64) -> Complex64
    where
        F: Fn(f64) -> Complex64 + ?Sized,
    {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// One seed or refined interval of the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub nodes: usize,
}

impl Panel {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Initial mesh for a given boost: quadrant boundaries plus breakpoints at
/// `π/2 ± 2^j/γ` and `3π/2 ± 2^j/γ` while the offset stays below `π/4`.
pub fn seed_panels(gamma: LorentzFactor, base_order: usize) -> Vec<Panel> {
    let mut cuts = vec![0.0, PI / 2.0, PI, 1.5 * PI, TAU];
    if !gamma.is_rest() {
        let mut offset = 0.5 / gamma.value();
        while offset < FRAC_PI_4 {
            for &t in &TRANSITION_ANGLES {
                cuts.push(t - offset);
                cuts.push(t + offset);
            }
            offset *= 2.0;
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    cuts.windows(2)
        .map(|w| Panel {
            lo: w[0],
            hi: w[1],
            nodes: base_order,
        })
        .collect()
}

/// Outcome of one adaptive run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Reusable pair of rules for a fixed [`QuadratureSpec`].
#[derive(Debug, Clone)]
pub struct Integrator {
    spec: QuadratureSpec,
    low: GaussLegendre,
    high: GaussLegendre,
}

impl Integrator {
    pub fn new(spec: QuadratureSpec) -> Result<Self, QuadratureError> {
        spec.validate()?;
        Ok(Integrator {
            spec,
            low: GaussLegendre::new(spec.base_order),
            high: GaussLegendre::new(2 * spec.base_order),
        })
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// `(1/2π)∫_0^{2π} f`, failing if the error estimate stays above the
    /// tolerance once `max_depth` is exhausted.
    pub fn integrate<F>(&self, f: &F, gamma: LorentzFactor) -> Result<Complex64, QuadratureError>
    where
        F: Fn(f64) -> Complex64 + ?Sized,
    {
        let est = self.estimate(f, gamma, self.spec.max_depth);
        if est.converged || est.error <= self.spec.abs_tol {
            Ok(est.value)
        } else {
            Err(QuadratureError::ToleranceNotReached {
                value: est.value,
                estimate: est.error,
                tol: self.spec.abs_tol,
            })
        }
    }

    /// Adaptive run with an explicit depth cap; never fails.
    pub fn estimate<F>(&self, f: &F, gamma: LorentzFactor, max_depth: u32) -> Estimate
    where
        F: Fn(f64) -> Complex64 + ?Sized,
    {
        let scale = 1.0 / TAU;
        let mut value = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        let mut panels = 0;
        let mut converged = true;
        // depth-first, left to right: fixed summation order
        let mut stack: Vec<(f64, f64, u32)> = Vec::new();
        for seed in seed_panels(gamma, self.spec.base_order).into_iter().rev() {
            stack.push((seed.lo, seed.hi, 0));
        }
        while let Some((lo, hi, depth)) = stack.pop() {
            let coarse = self.low.apply(f, lo, hi) * scale;
            let fine = self.high.apply(f, lo, hi) * scale;
            let err = (fine - coarse).norm();
            let budget = self.spec.abs_tol * (hi - lo) * scale;
            let mid = 0.5 * (lo + hi);
            let splittable = mid > lo && mid < hi;
            if err <= budget || depth >= max_depth || !splittable {
                if err > budget {
                    converged = false;
                }
                value += fine;
                error += err;
                panels += 1;
            } else {
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        Estimate {
            value,
            error,
            panels,
            converged,
        }
    }
}

/// `(1/2π)∫_0^{2π} f(φ) dφ` on a γ-aware adaptive mesh.
pub fn integrate_periodic<F>(
    f: F,
    gamma: LorentzFactor,
    spec: &QuadratureSpec,
) -> Result<Complex64, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    Integrator::new(*spec)?.integrate(&f, gamma)
}

/// One row of a [`convergence_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStep {
    pub depth: u32,
    pub error_estimate: f64,
    pub value: Complex64,
    pub panels: usize,
}

/// Re-runs the integral with depth caps `1, 2, …` until the estimate meets
/// the tolerance or `max_depth` is reached.
pub fn convergence_report<F>(
    f: F,
    gamma: LorentzFactor,
    spec: &QuadratureSpec,
) -> Result<Vec<ConvergenceStep>, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    let integrator = Integrator::new(*spec)?;
    let mut steps = Vec::new();
    for depth in 1..=spec.max_depth {
        let est = integrator.estimate(&f, gamma, depth);
        steps.push(ConvergenceStep {
            depth,
            error_estimate: est.error,
            value: est.value,
            panels: est.panels,
        });
        if est.converged {
            break;
        }
    }
    Ok(steps)
}
