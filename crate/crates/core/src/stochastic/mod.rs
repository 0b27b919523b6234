//! Exact sample paths via the modified next reaction method.
//!
//! Each channel `j` carries an internal time `tau_j = int_0^t a_j(X(s)) ds` and
//! the internal time `tau_plus_j` of its next firing. Propensities are constant
//! between events, so advancing `tau_j += a_j * dt` is exact. Exponential
//! increments for channel `j` come from its own stream (see [`crate::streams`]).

mod qoi;

pub use qoi::{evaluate_qoi, QoiAccumulator, QoiError, QoiKind, QoiSpec};

use std::io::{self, Write};

use thiserror::Error;

use crate::network::{map_parameters, propensity_v, ParameterError, ParameterSpec, ReactionNetwork};
use crate::streams::{ChannelStream, SeedSpec};

/// Relative tolerance on the integrality of `V * x0`.
pub const INTEGRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("V*x0[{species}] = {value} is not an integer (V = {v})")]
    NonIntegralInitialState { species: usize, value: f64, v: f64 },
    #[error("propensity of reaction {reaction} is not finite at t = {time}")]
    NonFinitePropensity { reaction: usize, time: f64 },
    #[error("expected {expected} rate constants, got {found}")]
    RateDimension { expected: usize, found: usize },
    #[error("rate constant {index} = {value} must be positive")]
    NonPositiveRate { index: usize, value: f64 },
    #[error(transparent)]
    Parameter(#[from] ParameterError),
    #[error(transparent)]
    Qoi(#[from] QoiError),
}

/// `round(V * x0)`, rejecting systems sizes that make `V * x0` non-integral.
pub fn initial_state(net: &ReactionNetwork, v: f64) -> Result<Vec<u64>, SimError> {
    net.x0
        .iter()
        .enumerate()
        .map(|(species, &x)| {
            let value = v * x;
            let rounded = value.round();
            if (value - rounded).abs() > INTEGRALITY_TOL * v || !(0.0..1.8e19).contains(&rounded) {
                Err(SimError::NonIntegralInitialState { species, value, v })
            } else {
                Ok(rounded as u64)
            }
        })
        .collect()
}

/// Physical time until each channel fires: `(tau_plus - tau) / a`, infinite when `a = 0`.
pub fn next_firing_deltas(tau: &[f64], tau_plus: &[f64], a: &[f64]) -> Vec<f64> {
    tau.iter()
        .zip(tau_plus)
        .zip(a)
        .map(|((&t, &tp), &aj)| if aj > 0.0 { (tp - t) / aj } else { f64::INFINITY })
        .collect()
}

/// Receives the events of a simulated path.
pub trait PathObserver {
    fn start(&mut self, state: &[u64]);
    fn event(&mut self, t: f64, channel: usize, state: &[u64]);
    fn finish(&mut self, t_final: f64);
}

/// Piecewise-constant jump path with its full event log.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Event times; `times[0] = 0`.
    pub times: Vec<f64>,
    /// Row-major copy numbers, one row per entry of `times`.
    pub states: Vec<u64>,
    /// Channel fired at each event (one shorter than `times`).
    pub channels: Vec<usize>,
    pub n_species: usize,
    pub t_final: f64,
    pub v: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u64] {
        &self.states[i * self.n_species..(i + 1) * self.n_species]
    }

    pub fn final_state(&self) -> &[u64] {
        self.state(self.len() - 1)
    }

    /// Number of firings of each channel.
    pub fn firing_counts(&self, n_reactions: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n_reactions];
        for &c in &self.channels {
            counts[c] += 1;
        }
        counts
    }

    /// CSV with header `t,<species...>` and concentrations `X / V`, one row per event.
    pub fn write_csv<W: Write>(&self, mut out: W, species: &[String]) -> io::Result<()> {
        writeln!(out, "t,{}", species.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t}")?;
            for &x in self.state(i) {
                write!(out, ",{}", x as f64 / self.v)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Observer that stores every event.
#[derive(Debug)]
pub struct TrajectoryRecorder {
    traj: Trajectory,
}

impl TrajectoryRecorder {
    pub fn new(n_species: usize, v: f64) -> Self {
        Self {
            traj: Trajectory {
                times: Vec::new(),
                states: Vec::new(),
                channels: Vec::new(),
                n_species,
                t_final: 0.0,
                v,
            },
        }
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.traj
    }
}

impl PathObserver for TrajectoryRecorder {
    fn start(&mut self, state: &[u64]) {
        self.traj.times.push(0.0);
        self.traj.states.extend_from_slice(state);
    }

    fn event(&mut self, t: f64, channel: usize, state: &[u64]) {
        self.traj.times.push(t);
        self.traj.channels.push(channel);
        self.traj.states.extend_from_slice(state);
    }

    fn finish(&mut self, t_final: f64) {
        self.traj.t_final = t_final;
    }
}

struct Channel {
    /// `k * V^(1 - order)`
    scale: f64,
    reactants: Vec<(usize, u32)>,
    change: Vec<(usize, i64)>,
}

fn channels(net: &ReactionNetwork, v: f64, rates: &[f64]) -> Result<Vec<Channel>, SimError> {
    if rates.len() != net.n_reactions() {
        return Err(SimError::RateDimension {
            expected: net.n_reactions(),
            found: rates.len(),
        });
    }
    net.reactions
        .iter()
        .zip(rates)
        .enumerate()
        .map(|(index, (r, &k))| {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SimError::NonPositiveRate { index, value: k });
            }
            Ok(Channel {
                scale: k * v.powi(1 - r.order() as i32),
                reactants: r.reactants().collect(),
                change: r
                    .net_change()
                    .into_iter()
                    .enumerate()
                    .filter(|(_, d)| *d != 0)
                    .collect(),
            })
        })
        .collect()
}

fn channel_propensity(ch: &Channel, x: &[u64]) -> f64 {
    let mut a = ch.scale;
    for &(i, c) in &ch.reactants {
        let xi = x[i];
        a *= match c {
            1 => xi as f64,
            2 => {
                if xi < 2 {
                    return 0.0;
                }
                (xi * (xi - 1) / 2) as f64
            }
            _ => unreachable!("orders above two are rejected at validation"),
        };
    }
    a
}

/// Simulate one path on `[0, t_final]`, reporting events to `observer`.
/// Returns the number of events.
pub fn nrm_run<O: PathObserver>(
    net: &ReactionNetwork,
    v: f64,
    rates: &[f64],
    t_final: f64,
    seed: SeedSpec,
    observer: &mut O,
) -> Result<u64, SimError> {
    let chans = channels(net, v, rates)?;
    let m = chans.len();
    let mut x = initial_state(net, v)?;
    let mut streams: Vec<ChannelStream> = (0..m).map(|j| seed.channel_stream(j)).collect();
    let mut tau = vec![0.0f64; m];
    let mut tau_plus: Vec<f64> = streams.iter_mut().map(ChannelStream::exp1).collect();
    let mut a = vec![0.0f64; m];
    let mut t = 0.0f64;
    let mut events = 0u64;
    observer.start(&x);

    loop {
        let mut next: Option<(usize, f64)> = None;
        for (j, ch) in chans.iter().enumerate() {
            let aj = channel_propensity(ch, &x);
            if !aj.is_finite() {
                return Err(SimError::NonFinitePropensity { reaction: j, time: t });
            }
            a[j] = aj;
            if aj > 0.0 {
                let dt = (tau_plus[j] - tau[j]) / aj;
                // strict comparison: the lowest index wins ties
                if next.is_none_or(|(_, best)| dt < best) {
                    next = Some((j, dt));
                }
            }
        }
        let Some((l, dt)) = next else { break };
        let t_next = t + dt;
        if t_next > t_final {
            break;
        }
        t = t_next;
        for &(i, d) in &chans[l].change {
            x[i] = x[i].wrapping_add_signed(d);
        }
        for j in 0..m {
            tau[j] += a[j] * dt;
        }
        tau[l] = tau_plus[l];
        tau_plus[l] += streams[l].exp1();
        events += 1;
        observer.event(t, l, &x);
    }
    observer.finish(t_final);
    Ok(events)
}

/// Full event log of one path.
pub fn nrm_simulate(
    net: &ReactionNetwork,
    v: f64,
    rates: &[f64],
    t_final: f64,
    seed: SeedSpec,
) -> Result<Trajectory, SimError> {
    let mut rec = TrajectoryRecorder::new(net.n_species(), v);
    nrm_run(net, v, rates, t_final, seed, &mut rec)?;
    Ok(rec.into_trajectory())
}

/// `f_V(theta, omega)`: one path at rates `k(theta)`, QoI computed while streaming.
pub fn stochastic_qoi(
    net: &ReactionNetwork,
    v: f64,
    theta: &[f64],
    spec: &ParameterSpec,
    q: &QoiSpec,
    seed: SeedSpec,
) -> Result<f64, SimError> {
    let rates = map_parameters(net, spec, theta)?;
    stochastic_qoi_at_rates(net, v, &rates, q, seed)
}

pub fn stochastic_qoi_at_rates(
    net: &ReactionNetwork,
    v: f64,
    rates: &[f64],
    q: &QoiSpec,
    seed: SeedSpec,
) -> Result<f64, SimError> {
    let mut acc = QoiAccumulator::new(q, net.n_species(), v)?;
    nrm_run(net, v, rates, q.horizon, seed, &mut acc)?;
    Ok(acc.value())
}

/// Copy-number propensities of every channel at state `x`.
pub fn propensities(net: &ReactionNetwork, x: &[u64], v: f64, rates: &[f64]) -> Vec<f64> {
    net.reactions
        .iter()
        .zip(rates)
        .map(|(r, &k)| propensity_v(r, x, v, k))
        .collect()
}
