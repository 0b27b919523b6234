//! Reaction rate equations `z' = F(z)`, `z(0) = x0`, and QoIs of their solution.

mod integrate;
mod system;

pub use integrate::{integrate, IntegrationStats, Interpolant, Method, Segment, SolverError, SolverOptions};
pub use system::{rre_rhs, OdeSystem, RreSystem};

use thiserror::Error;

use crate::network::{map_parameters, ParameterError, ParameterSpec, ReactionNetwork};
use crate::stochastic::{QoiError, QoiKind, QoiSpec, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error(transparent)]
    Qoi(#[from] QoiError),
    #[error("expected {expected} rate constants, got {found}")]
    RateDimension { expected: usize, found: usize },
}

/// Dense RRE solution on `[0, t_final]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub segments: Vec<Segment>,
    pub x0: Vec<f64>,
    pub t_final: f64,
    pub options: SolverOptions,
    pub stats: IntegrationStats,
}

impl OdeSolution {
    /// Accepted step times, starting at 0.
    pub fn grid(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.segments.iter().map(|s| s.t1)).collect()
    }

    /// States at [`Self::grid`].
    pub fn values(&self) -> Vec<&[f64]> {
        std::iter::once(self.x0.as_slice())
            .chain(self.segments.iter().map(|s| s.y1.as_slice()))
            .collect()
    }

    /// `Z(t)` for `t` in `[0, t_final]`; grid points return the stored states.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = self.x0.clone();
        if t <= 0.0 || self.segments.is_empty() {
            return out;
        }
        let t = t.min(self.t_final);
        let idx = self.segments.partition_point(|s| s.t1 < t).min(self.segments.len() - 1);
        self.segments[idx].eval(t, &mut out);
        out
    }
}

fn check_rates(net: &ReactionNetwork, rates: &[f64]) -> Result<(), DetError> {
    if rates.len() != net.n_reactions() {
        return Err(DetError::RateDimension {
            expected: net.n_reactions(),
            found: rates.len(),
        });
    }
    Ok(())
}

pub fn solve_rre(
    net: &ReactionNetwork,
    rates: &[f64],
    t_final: f64,
    opts: &SolverOptions,
) -> Result<OdeSolution, DetError> {
    check_rates(net, rates)?;
    let sys = RreSystem::new(net, rates);
    let mut segments = Vec::new();
    let (_, stats) = integrate(&sys, &net.x0, t_final, opts, true, &mut |s| segments.push(s))?;
    Ok(OdeSolution {
        segments,
        x0: net.x0.clone(),
        t_final,
        options: *opts,
        stats,
    })
}

/// `f(theta)` at rates `rates`. Concentrations below zero by solver noise are clipped.
pub fn deterministic_qoi_at_rates(
    net: &ReactionNetwork,
    rates: &[f64],
    q: &QoiSpec,
    opts: &SolverOptions,
) -> Result<f64, DetError> {
    check_rates(net, rates)?;
    if q.species >= net.n_species() {
        return Err(QoiError::SpeciesOutOfRange {
            index: q.species,
            n_species: net.n_species(),
        }
        .into());
    }
    let value = match q.kind {
        QoiKind::TimeAverage => {
            let sys = RreSystem::new(net, rates).with_quadrature(q.species, 1.0 / q.horizon);
            let mut y0 = net.x0.clone();
            y0.push(0.0);
            let (y, _) = integrate(&sys, &y0, q.horizon, opts, false, &mut |_| {})?;
            y[net.n_species()]
        }
        QoiKind::Endpoint { t_star } => {
            if t_star <= 0.0 {
                net.x0[q.species]
            } else {
                let sys = RreSystem::new(net, rates);
                let mut out = vec![0.0; net.n_species()];
                let mut hit = None;
                integrate(&sys, &net.x0, q.horizon, opts, true, &mut |s| {
                    if hit.is_none() && s.t0 < t_star && t_star <= s.t1 {
                        s.eval(t_star, &mut out);
                        hit = Some(out[q.species]);
                    }
                })?;
                hit.unwrap_or(net.x0[q.species])
            }
        }
    };
    Ok(value.max(0.0))
}

/// `f(theta)`: the QoI of the RRE solution at rates `k(theta)`.
pub fn deterministic_qoi(
    net: &ReactionNetwork,
    theta: &[f64],
    spec: &ParameterSpec,
    q: &QoiSpec,
    opts: &SolverOptions,
) -> Result<f64, DetError> {
    let rates = map_parameters(net, spec, theta)?;
    deterministic_qoi_at_rates(net, &rates, q, opts)
}

/// `sup_t max_i |Z^V_i(t) - Z_i(t)|`, evaluated at every jump (both one-sided
/// limits) and every solver grid point.
pub fn sup_gap(traj: &Trajectory, sol: &OdeSolution) -> f64 {
    let n = traj.n_species;
    let horizon = traj.t_final.min(sol.t_final);
    let conc = |k: usize| -> Vec<f64> { traj.state(k).iter().map(|&x| x as f64 / traj.v).collect() };
    let dist = |a: &[f64], b: &[f64]| (0..n).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);

    let mut gap = 0.0f64;
    let mut k = 0usize;
    let mut zk = conc(0);
    let check_until = |t: f64, gap: &mut f64, k: &mut usize, zk: &mut Vec<f64>| {
        // consume jumps up to t
        while *k + 1 < traj.len() && traj.times[*k + 1] <= t {
            let tj = traj.times[*k + 1];
            let z = sol.eval(tj);
            *gap = gap.max(dist(zk, &z));
            *k += 1;
            *zk = conc(*k);
            *gap = gap.max(dist(zk, &z));
        }
        *gap = gap.max(dist(zk, &sol.eval(t)));
    };
    for t in sol.grid() {
        if t > horizon {
            break;
        }
        check_until(t, &mut gap, &mut k, &mut zk);
    }
    check_until(horizon, &mut gap, &mut k, &mut zk);
    gap
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_model;

    fn model(text: &str) -> crate::network::Model {
        parse_model(text).unwrap()
    }

    #[test]
    fn exponential_decay_endpoint_and_average() {
        let m = model("species: A\nx0: 1\nvnom: 1\ntfinal: 1\nreaction k: A -> 0\nrate k = 1\nqoi: timeavg A\n");
        let opts = SolverOptions::default();
        let sol = solve_rre(&m.network, &[1.0], 1.0, &opts).unwrap();
        assert!((sol.eval(1.0)[0] - (-1.0f64).exp()).abs() < 10.0 * opts.rtol);
        let avg = deterministic_qoi(&m.network, &[], &m.params, &m.qoi, &opts).unwrap();
        assert!((avg - (1.0 - (-1.0f64).exp())).abs() < 10.0 * opts.rtol, "{avg}");
        let end = QoiSpec {
            kind: QoiKind::Endpoint { t_star: 0.5 },
            ..m.qoi
        };
        let z = deterministic_qoi(&m.network, &[], &m.params, &end, &opts).unwrap();
        assert!((z - (-0.5f64).exp()).abs() < 1e-7, "{z}");
    }

    #[test]
    fn zero_order_source_grows_linearly() {
        let m = model("species: A\nx0: 0.5\nvnom: 1\ntfinal: 4\nreaction k0: -> A\nrate k0 = 0.25\nqoi: endpoint A @ 4\n");
        let z = deterministic_qoi(&m.network, &[], &m.params, &m.qoi, &SolverOptions::default()).unwrap();
        assert!((z - 1.5).abs() < 1e-12, "{z}");
    }

    #[test]
    fn untouched_species_average_is_initial_value() {
        let m = model(
            "species: A B\nx0: 1 0.3\nvnom: 1\ntfinal: 2\nreaction k: A -> 0\nrate k = 1\nqoi: timeavg B\n",
        );
        let z = deterministic_qoi(&m.network, &[], &m.params, &m.qoi, &SolverOptions::default()).unwrap();
        assert!((z - 0.3).abs() < 1e-12);
    }

    #[test]
    fn grid_evaluation_is_exact() {
        let m = model("species: A\nx0: 1\nvnom: 1\ntfinal: 3\nreaction k: A -> 0\nrate k = 1\nqoi: timeavg A\n");
        let sol = solve_rre(&m.network, &[1.0], 3.0, &SolverOptions::default()).unwrap();
        for (t, v) in sol.grid().into_iter().zip(sol.values()) {
            assert_eq!(sol.eval(t), v.to_vec());
        }
    }

    #[test]
    fn rate_dimension_is_checked() {
        let m = model("species: A\nx0: 1\nvnom: 1\ntfinal: 1\nreaction k: A -> 0\nrate k = 1\nqoi: timeavg A\n");
        assert!(matches!(
            solve_rre(&m.network, &[1.0, 2.0], 1.0, &SolverOptions::default()),
            Err(DetError::RateDimension { .. })
        ));
    }

    #[test]
    fn sup_gap_of_exact_path_is_small() {
        // no reactions fire: the jump path coincides with the constant RRE solution
        let m = model("species: A B\nx0: 0 1\nvnom: 10\ntfinal: 1\nreaction k: A -> B\nrate k = 1\nqoi: timeavg B\n");
        let sol = solve_rre(&m.network, &[1.0], 1.0, &SolverOptions::default()).unwrap();
        let traj = crate::stochastic::nrm_simulate(&m.network, 10.0, &[1.0], 1.0, crate::streams::SeedSpec::new(0, 0))
            .unwrap();
        assert_eq!(sup_gap(&traj, &sol), 0.0);
    }
}
