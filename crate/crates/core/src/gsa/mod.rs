//! Variance-based sensitivity analysis of deterministic and frozen-noise
//! stochastic QoIs.
//!
//! Evaluations run on the ambient rayon pool. Values are collected in design
//! order and every reduction runs sequentially over that order, so results do
//! not depend on the number of worker threads.

mod estimator;

pub use estimator::{estimate_indices, percentile, Degenerate, SaltelliDesign, SobolEstimate, INDEX_CLAMP};

use rayon::prelude::*;
use thiserror::Error;

use crate::deterministic::{deterministic_qoi, DetError, SolverOptions};
use crate::network::{ParameterSpec, ReactionNetwork};
use crate::stochastic::{stochastic_qoi, QoiSpec, SimError};
use crate::streams::SeedSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsaError {
    #[error(transparent)]
    Degenerate(#[from] Degenerate),
    #[error("deterministic QoI failed at design point {point}: {source}")]
    Deterministic { point: usize, source: DetError },
    #[error("stochastic QoI failed at design point {point}, omega {omega}: {source}")]
    Stochastic { point: usize, omega: u64, source: SimError },
    #[error("{0}")]
    InvalidArgument(String),
}

fn check_design_args(p: usize, n_s: usize) -> Result<(), GsaError> {
    if p == 0 {
        return Err(GsaError::InvalidArgument("no uncertain parameters declared".into()));
    }
    if n_s < 2 {
        return Err(GsaError::InvalidArgument(format!("N_s must be at least 2, got {n_s}")));
    }
    Ok(())
}

/// Evaluate `f` at every design point, in parallel, returning values in point order.
pub fn evaluate_design<F, E>(design: &SaltelliDesign, f: F) -> Result<Vec<f64>, E>
where
    F: Fn(usize, &[f64]) -> Result<f64, E> + Sync,
    E: Send,
{
    (0..design.n_points())
        .into_par_iter()
        .map(|k| f(k, &design.point(k)))
        .collect()
}

pub fn estimate_from_values(design: &SaltelliDesign, values: &[f64]) -> Result<SobolEstimate, Degenerate> {
    let (fa, fb, fab) = design.split(values);
    estimate_indices(fa, fb, &fab)
}

/// QoI samples of the deterministic model over a fresh design.
pub fn deterministic_samples(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    q: &QoiSpec,
    design: &SaltelliDesign,
    opts: &SolverOptions,
) -> Result<Vec<f64>, GsaError> {
    evaluate_design(design, |point, theta| {
        deterministic_qoi(net, theta, spec, q, opts).map_err(|source| GsaError::Deterministic { point, source })
    })
}

pub fn deterministic_sobol(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    q: &QoiSpec,
    n_s: usize,
    design_seed: u64,
    opts: &SolverOptions,
) -> Result<SobolEstimate, GsaError> {
    check_design_args(spec.len(), n_s)?;
    let design = SaltelliDesign::new(spec.len(), n_s, design_seed);
    let values = deterministic_samples(net, spec, q, &design, opts)?;
    Ok(estimate_from_values(&design, &values)?)
}

/// Per-parameter summary of an ensemble of (clamped) indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub mean_t: f64,
    pub p5_t: f64,
    pub p95_t: f64,
    pub sd_t: f64,
    pub mean_s: f64,
}

/// Stochastic indices `T_i^V(omega)` over `omega_count` frozen realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEnsemble {
    pub v: f64,
    pub m: f64,
    pub omega_count: usize,
    /// `(omega_index, estimate)`; degenerate realizations are kept as `Err`.
    pub per_omega: Vec<(u64, Result<SobolEstimate, Degenerate>)>,
    /// One entry per parameter; `None` when every realization was degenerate.
    pub summary: Option<Vec<ParamSummary>>,
    pub degenerate_count: usize,
}

impl IndexEnsemble {
    /// Build from per-realization samples listed in design order.
    pub fn from_samples(v: f64, m: f64, design: &SaltelliDesign, samples: &[(u64, Vec<f64>)]) -> Self {
        let per_omega: Vec<_> = samples
            .iter()
            .map(|(omega, values)| (*omega, estimate_from_values(design, values)))
            .collect();
        Self::from_estimates(v, m, design.p, per_omega)
    }

    pub fn from_estimates(v: f64, m: f64, p: usize, per_omega: Vec<(u64, Result<SobolEstimate, Degenerate>)>) -> Self {
        let good: Vec<&SobolEstimate> = per_omega.iter().filter_map(|(_, e)| e.as_ref().ok()).collect();
        let degenerate_count = per_omega.len() - good.len();
        let summary = (!good.is_empty()).then(|| {
            let totals: Vec<Vec<f64>> = good.iter().map(|e| e.total_clamped()).collect();
            let firsts: Vec<Vec<f64>> = good.iter().map(|e| e.first_order_clamped()).collect();
            (0..p)
                .map(|i| {
                    let mut t: Vec<f64> = totals.iter().map(|row| row[i]).collect();
                    let n = t.len() as f64;
                    let mean_t = t.iter().sum::<f64>() / n;
                    let sd_t = if t.len() > 1 {
                        (t.iter().map(|x| (x - mean_t).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                    t.sort_by(f64::total_cmp);
                    ParamSummary {
                        mean_t,
                        p5_t: percentile(&t, 0.05),
                        p95_t: percentile(&t, 0.95),
                        sd_t,
                        mean_s: firsts.iter().map(|row| row[i]).sum::<f64>() / n,
                    }
                })
                .collect()
        });
        Self {
            v,
            m,
            omega_count: per_omega.len(),
            per_omega,
            summary,
            degenerate_count,
        }
    }
}

/// Samples of `f(theta, seed)` over the design for realizations `0..m_s`; every
/// design point of realization `i` shares `SeedSpec(master_seed, i)`.
pub fn frozen_noise_samples<F>(
    design: &SaltelliDesign,
    m_s: usize,
    master_seed: u64,
    f: F,
) -> Result<Vec<(u64, Vec<f64>)>, GsaError>
where
    F: Fn(usize, &[f64], SeedSpec) -> Result<f64, GsaError> + Sync,
{
    let n = design.n_points();
    // flatten (omega, point) so that small ensembles still use every worker
    let flat: Vec<f64> = (0..m_s * n)
        .into_par_iter()
        .map(|idx| {
            let (omega, point) = (idx / n, idx % n);
            f(point, &design.point(point), SeedSpec::new(master_seed, omega as u64))
        })
        .collect::<Result<_, _>>()?;
    Ok(flat
        .chunks(n.max(1))
        .take(m_s)
        .enumerate()
        .map(|(omega, chunk)| (omega as u64, chunk.to_vec()))
        .collect())
}

pub fn stochastic_samples(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    q: &QoiSpec,
    v: f64,
    design: &SaltelliDesign,
    m_s: usize,
    master_seed: u64,
) -> Result<Vec<(u64, Vec<f64>)>, GsaError> {
    frozen_noise_samples(design, m_s, master_seed, |point, theta, seed| {
        stochastic_qoi(net, v, theta, spec, q, seed).map_err(|source| GsaError::Stochastic {
            point,
            omega: seed.omega_index,
            source,
        })
    })
}

/// Ensemble of stochastic indices at system size `m * V_nom`.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_sobol(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    q: &QoiSpec,
    m: f64,
    n_s: usize,
    m_s: usize,
    design_seed: u64,
    master_seed: u64,
) -> Result<IndexEnsemble, GsaError> {
    check_design_args(spec.len(), n_s)?;
    if m_s == 0 {
        return Err(GsaError::InvalidArgument("M_s must be at least 1".into()));
    }
    let design = SaltelliDesign::new(spec.len(), n_s, design_seed);
    let v = m * net.v_nom;
    let samples = stochastic_samples(net, spec, q, v, &design, m_s, master_seed)?;
    Ok(IndexEnsemble::from_samples(v, m, &design, &samples))
}

/// One ensemble per `V_m = m * V_nom`, all sharing the design and master seeds.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    q: &QoiSpec,
    m_list: &[f64],
    n_s: usize,
    m_s: usize,
    design_seed: u64,
    master_seed: u64,
) -> Result<Vec<IndexEnsemble>, GsaError> {
    check_m_list(m_list)?;
    m_list
        .iter()
        .map(|&m| stochastic_sobol(net, spec, q, m, n_s, m_s, design_seed, master_seed))
        .collect()
}

pub fn check_m_list(m_list: &[f64]) -> Result<(), GsaError> {
    if m_list.is_empty() {
        return Err(GsaError::InvalidArgument("m list is empty".into()));
    }
    if m_list.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
        return Err(GsaError::InvalidArgument("system-size multipliers must be positive".into()));
    }
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GsaError::InvalidArgument("m list must be strictly increasing".into()));
    }
    Ok(())
}
