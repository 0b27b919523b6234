use thiserror::Error;

use super::{PathObserver, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QoiKind {
    /// `(1/T) int_0^T z_i(t) dt`
    TimeAverage,
    /// `z_i(t_star)`
    Endpoint { t_star: f64 },
}

/// Scalar functional of one species' concentration path on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiSpec {
    pub kind: QoiKind,
    pub species: usize,
    pub horizon: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QoiError {
    #[error("species index {index} out of range for {n_species} species")]
    SpeciesOutOfRange { index: usize, n_species: usize },
    #[error("trajectory ends at {t_final} but the QoI needs [0, {horizon}]")]
    ShortTrajectory { t_final: f64, horizon: f64 },
}

/// Streaming evaluation of a QoI on a jump path, so long paths need not be stored.
#[derive(Debug, Clone)]
pub struct QoiAccumulator {
    spec: QoiSpec,
    v: f64,
    last_t: f64,
    last_x: u64,
    integral: f64,
    value: f64,
}

impl QoiAccumulator {
    pub fn new(spec: &QoiSpec, n_species: usize, v: f64) -> Result<Self, QoiError> {
        if spec.species >= n_species {
            return Err(QoiError::SpeciesOutOfRange {
                index: spec.species,
                n_species,
            });
        }
        Ok(Self {
            spec: *spec,
            v,
            last_t: 0.0,
            last_x: 0,
            integral: 0.0,
            value: f64::NAN,
        })
    }

    fn advance(&mut self, t: f64) {
        let t = t.min(self.spec.horizon);
        if t > self.last_t {
            self.integral += self.last_x as f64 * (t - self.last_t);
            self.last_t = t;
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl PathObserver for QoiAccumulator {
    fn start(&mut self, state: &[u64]) {
        self.last_x = state[self.spec.species];
        self.last_t = 0.0;
        self.integral = 0.0;
    }

    fn event(&mut self, t: f64, _channel: usize, state: &[u64]) {
        match self.spec.kind {
            QoiKind::TimeAverage => self.advance(t),
            QoiKind::Endpoint { t_star } => {
                if t > t_star {
                    return;
                }
            }
        }
        self.last_x = state[self.spec.species];
    }

    fn finish(&mut self, _t_final: f64) {
        self.value = match self.spec.kind {
            QoiKind::TimeAverage => {
                self.advance(self.spec.horizon);
                self.integral / self.v / self.spec.horizon
            }
            QoiKind::Endpoint { .. } => self.last_x as f64 / self.v,
        };
    }
}

/// QoI of a recorded path; the time average is the exact integral of the
/// piecewise-constant concentration.
pub fn evaluate_qoi(traj: &Trajectory, q: &QoiSpec) -> Result<f64, QoiError> {
    if traj.t_final < q.horizon {
        return Err(QoiError::ShortTrajectory {
            t_final: traj.t_final,
            horizon: q.horizon,
        });
    }
    let mut acc = QoiAccumulator::new(q, traj.n_species, traj.v)?;
    acc.start(traj.state(0));
    for i in 1..traj.len() {
        acc.event(traj.times[i], traj.channels[i - 1], traj.state(i));
    }
    acc.finish(traj.t_final);
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(times: &[f64], xs: &[u64], t_final: f64) -> Trajectory {
        Trajectory {
            times: times.to_vec(),
            states: xs.to_vec(),
            channels: vec![0; times.len().saturating_sub(1)],
            n_species: 1,
            t_final,
            v: 2.0,
        }
    }

    fn avg(horizon: f64) -> QoiSpec {
        QoiSpec {
            kind: QoiKind::TimeAverage,
            species: 0,
            horizon,
        }
    }

    #[test]
    fn constant_path_average() {
        let p = path(&[0.0], &[6], 4.0);
        assert_eq!(evaluate_qoi(&p, &avg(4.0)).unwrap(), 3.0);
    }

    #[test]
    fn two_piece_average() {
        // z = 0 on [0, 2), 1 on [2, 4]
        let p = path(&[0.0, 2.0], &[0, 2], 4.0);
        assert_eq!(evaluate_qoi(&p, &avg(4.0)).unwrap(), 0.5);
    }

    #[test]
    fn endpoint_uses_last_event_before_t_star() {
        let p = path(&[0.0, 1.0, 3.0], &[4, 6, 8], 4.0);
        let at = |t| QoiSpec {
            kind: QoiKind::Endpoint { t_star: t },
            species: 0,
            horizon: 4.0,
        };
        assert_eq!(evaluate_qoi(&p, &at(0.0)).unwrap(), 2.0);
        assert_eq!(evaluate_qoi(&p, &at(2.0)).unwrap(), 3.0);
        assert_eq!(evaluate_qoi(&p, &at(3.0)).unwrap(), 4.0);
    }

    #[test]
    fn errors() {
        let p = path(&[0.0], &[1], 1.0);
        assert!(matches!(
            evaluate_qoi(&p, &QoiSpec { species: 3, ..avg(1.0) }),
            Err(QoiError::SpeciesOutOfRange { .. })
        ));
        assert!(matches!(evaluate_qoi(&p, &avg(2.0)), Err(QoiError::ShortTrajectory { .. })));
    }
}
