//! Sweeps over models and Lorentz factors.
//!
//! Each `(model, γ)` point builds its amplitude matrix once (through a shared
//! cache) and derives the Schmidt spectrum, metrics and marginals from it.
//! Points run on a bounded rayon pool; results are assembled by point index
//! so completion order never leaks into the output.

use std::collections::HashMap;
use std::sync::{mpsc, Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amplitudes::{build_matrix_on, AmplitudeError, AmplitudeMatrix, BoostModel, ModeRange};
use crate::entanglement::{
    marginals, normalize, schmidt, EntanglementError, EntanglementMetrics, JointProbability,
    Marginals, SchmidtSpectrum,
};
use crate::kinematics::{LorentzFactor, PhaseBranch};
use crate::quadrature::QuadratureSpec;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "RELBOOST_THREADS";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid sweep request: {0}")]
    InvalidRequest(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error(transparent)]
    Amplitude(#[from] AmplitudeError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRequest {
    pub models: Vec<BoostModel>,
    pub gamma_grid: Vec<LorentzFactor>,
    pub lmax: ModeRange,
    pub spec: QuadratureSpec,
    #[serde(default)]
    pub branch: PhaseBranch,
    /// Keep the full `P(k, m)` grid in each record.
    #[serde(default)]
    pub keep_joint: bool,
}

impl SweepRequest {
    pub fn new(models: Vec<BoostModel>, gamma_grid: Vec<LorentzFactor>, lmax: ModeRange) -> Self {
        SweepRequest {
            models,
            gamma_grid,
            lmax,
            spec: QuadratureSpec::default(),
            branch: PhaseBranch::Continuous,
            keep_joint: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.models.is_empty() {
            return Err(EngineError::InvalidRequest("model set is empty".into()));
        }
        if self.gamma_grid.is_empty() {
            return Err(EngineError::InvalidRequest("gamma grid is empty".into()));
        }
        if self
            .gamma_grid
            .windows(2)
            .any(|w| w[0].value() >= w[1].value())
        {
            return Err(EngineError::InvalidRequest(
                "gamma grid must be strictly ascending".into(),
            ));
        }
        self.spec
            .validate()
            .map_err(|e| EngineError::InvalidRequest(e.to_string()))
    }

    /// Points in output order: model-major, then ascending γ.
    pub fn points(&self) -> Vec<(BoostModel, LorentzFactor)> {
        self.models
            .iter()
            .flat_map(|&m| self.gamma_grid.iter().map(move |&g| (m, g)))
            .collect()
    }
}

/// Everything derived for one `(model, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub metrics: EntanglementMetrics,
    pub schmidt: SchmidtSpectrum,
    pub marginals: Marginals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointProbability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub model: BoostModel,
    pub gamma: LorentzFactor,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PointData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PointRecord {
    pub fn is_ok(&self) -> bool {
        self.data.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub crate_version: String,
    pub lmax: ModeRange,
    pub spec: QuadratureSpec,
    pub branch: PhaseBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<PointRecord>,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &PointRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }

    pub fn get(&self, model: BoostModel, gamma: f64) -> Option<&PointRecord> {
        self.records
            .iter()
            .find(|r| r.model == model && r.gamma.value() == gamma)
    }
}

/// Emitted once per finished point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
    pub model: BoostModel,
    pub gamma: LorentzFactor,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    model: BoostModel,
    gamma_bits: u64,
    lmax: ModeRange,
    branch: PhaseBranch,
    tol_bits: u64,
    max_depth: u32,
    base_order: usize,
}

impl CacheKey {
    fn new(
        model: BoostModel,
        gamma: LorentzFactor,
        lmax: ModeRange,
        branch: PhaseBranch,
        spec: &QuadratureSpec,
    ) -> Self {
        CacheKey {
            model,
            gamma_bits: gamma.value().to_bits(),
            lmax,
            branch,
            tol_bits: spec.abs_tol.to_bits(),
            max_depth: spec.max_depth,
            base_order: spec.base_order,
        }
    }
}

/// Memoizes amplitude matrices across sweeps.
#[derive(Debug, Default)]
pub struct MatrixCache {
    inner: Mutex<HashMap<CacheKey, Arc<AmplitudeMatrix>>>,
}

impl MatrixCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_or_build(
        &self,
        model: BoostModel,
        gamma: LorentzFactor,
        lmax: ModeRange,
        branch: PhaseBranch,
        spec: &QuadratureSpec,
    ) -> Result<Arc<AmplitudeMatrix>, AmplitudeError> {
        let key = CacheKey::new(model, gamma, lmax, branch, spec);
        if let Some(hit) = self.inner.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        // built outside the lock; a racing duplicate is identical anyway
        let built = Arc::new(build_matrix_on(model, branch, gamma, lmax, spec)?);
        let mut map = self.inner.lock().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }
}

/// Derives all per-point quantities from a matrix.
pub fn analyze(matrix: &AmplitudeMatrix, keep_joint: bool) -> Result<PointData, PointError> {
    let state = normalize(matrix)?;
    let spectrum = schmidt(&state)?;
    let metrics = EntanglementMetrics::from_spectrum(&spectrum);
    let joint = JointProbability::from_amplitudes(matrix)?;
    let marg = marginals(&joint);
    Ok(PointData {
        metrics,
        schmidt: spectrum,
        marginals: marg,
        joint: keep_joint.then_some(joint),
    })
}

/// Worker count: explicit value, else `RELBOOST_THREADS`, else rayon's default.
pub fn resolve_threads(explicit: Option<usize>) -> Option<usize> {
    explicit.filter(|&n| n > 0).or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Sweep runner owning a worker pool and a matrix cache.
pub struct Engine {
    pool: rayon::ThreadPool,
    cache: MatrixCache,
}

impl Engine {
    pub fn new(threads: Option<usize>) -> Result<Self, EngineError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = resolve_threads(threads) {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| EngineError::Pool(e.to_string()))?;
        Ok(Engine {
            pool,
            cache: MatrixCache::new(),
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn cache(&self) -> &MatrixCache {
        &self.cache
    }

    pub fn matrix(
        &self,
        model: BoostModel,
        gamma: LorentzFactor,
        lmax: ModeRange,
        branch: PhaseBranch,
        spec: &QuadratureSpec,
    ) -> Result<Arc<AmplitudeMatrix>, AmplitudeError> {
        self.pool
            .install(|| self.cache.get_or_build(model, gamma, lmax, branch, spec))
    }

    /// Runs every point of the request. Point failures are recorded in the
    /// result rather than aborting the sweep.
    pub fn run_sweep<S>(&self, req: &SweepRequest, mut sink: S) -> Result<SweepResult, EngineError>
    where
        S: FnMut(Progress),
    {
        req.validate()?;
        let points = req.points();
        let total = points.len();
        let (tx, rx) = mpsc::channel::<(BoostModel, LorentzFactor, bool)>();

        let records = std::thread::scope(|scope| {
            let worker = scope.spawn(|| {
                self.pool.install(|| {
                    points
                        .par_iter()
                        .map_with(tx, |tx, &(model, gamma)| {
                            let outcome = self
                                .cache
                                .get_or_build(model, gamma, req.lmax, req.branch, &req.spec)
                                .map_err(PointError::from)
                                .and_then(|m| analyze(&m, req.keep_joint));
                            let _ = tx.send((model, gamma, outcome.is_ok()));
                            match outcome {
                                Ok(data) => PointRecord {
                                    model,
                                    gamma,
                                    data: Some(data),
                                    error: None,
                                },
                                Err(e) => PointRecord {
                                    model,
                                    gamma,
                                    data: None,
                                    error: Some(e.to_string()),
                                },
                            }
                        })
                        .collect::<Vec<_>>()
                })
            });
            for (completed, (model, gamma, ok)) in rx.iter().enumerate() {
                sink(Progress {
                    completed: completed + 1,
                    total,
                    model,
                    gamma,
                    ok,
                });
            }
            worker.join().expect("sweep worker panicked")
        });

        Ok(SweepResult {
            records,
            provenance: Provenance {
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                lmax: req.lmax,
                spec: req.spec,
                branch: req.branch,
            },
        })
    }
}

/// One-shot sweep on a fresh engine.
pub fn run_sweep<S>(req: &SweepRequest, threads: Option<usize>, sink: S) -> Result<SweepResult, EngineError>
where
    S: FnMut(Progress),
{
    Engine::new(threads)?.run_sweep(req, sink)
}

/// `n` log-spaced Lorentz factors from 1 to 10⁴, endpoints included.
pub fn default_gamma_grid(n: usize) -> Vec<LorentzFactor> {
    const DECADES: f64 = 4.0;
    match n {
        0 => Vec::new(),
        1 => vec![LorentzFactor::REST],
        _ => (0..n)
            .map(|i| {
                let e = DECADES * i as f64 / (n - 1) as f64;
                let g = if e.fract() == 0.0 {
                    10f64.powi(e as i32)
                } else {
                    10f64.powf(e)
                };
                LorentzFactor::new(g).expect("grid values are >= 1")
            })
            .collect(),
    }
}

/// Lorentz factors tabulated for the reference comparison.
pub const TABLE_GAMMAS: [f64; 7] = [1.0, 5.0, 20.0, 100.0, 200.0, 2000.0, 10000.0];

/// Points per model on the default plotting grid.
pub const DEFAULT_GRID_POINTS: usize = 25;
