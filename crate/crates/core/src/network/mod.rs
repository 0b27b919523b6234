//! Chemical reaction networks under mass-action kinetics.
//!
//! A network holds species, reactions with reactant (`consumed`) and product
//! (`created`) stoichiometries, named rate constants, the initial concentration
//! vector `x0` and the nominal system size `v_nom`. Rate constants are on the
//! concentration scale; copy-number propensities at system size `V` are derived
//! from them by the usual volume scaling.

mod conservation;
mod parse;

pub use conservation::{find_conservation_vector, search_bounded, search_lp, DEFAULT_ALPHA_MAX};
pub use parse::{parse_model, Model, ParseError, ParseErrorKind};

use thiserror::Error;

/// Highest total reactant order accepted for a single reaction.
pub const MAX_ORDER: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RateConstant {
    pub name: String,
    pub nominal: f64,
}

/// One mass-action reaction channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    /// Reactant stoichiometry, one entry per species.
    pub consumed: Vec<u32>,
    /// Product stoichiometry, one entry per species.
    pub created: Vec<u32>,
    /// Rate label as written in the model file, e.g. `k1` or `alpha_a*alpha_A`.
    pub rate_name: String,
    /// Indices into [`ReactionNetwork::constants`]; the rate constant is their product.
    pub rate_factors: Vec<usize>,
    pub k_nominal: f64,
}

impl Reaction {
    /// Total reactant order.
    pub fn order(&self) -> u32 {
        self.consumed.iter().sum()
    }

    /// Net stoichiometric change `created - consumed`.
    pub fn net_change(&self) -> Vec<i64> {
        self.created
            .iter()
            .zip(&self.consumed)
            .map(|(&c, &r)| i64::from(c) - i64::from(r))
            .collect()
    }

    /// `(species, coefficient)` for every species with a nonzero reactant coefficient.
    pub fn reactants(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.consumed
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
    pub constants: Vec<RateConstant>,
    /// Initial concentrations (amount per unit system size).
    pub x0: Vec<f64>,
    /// Nominal system size (volume times Avogadro's number).
    pub v_nom: f64,
    pub t_final: f64,
}

impl ReactionNetwork {
    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|c| c.name == name)
    }

    /// Nominal rate constant of every reaction.
    pub fn nominal_rates(&self) -> Vec<f64> {
        self.reactions.iter().map(|r| r.k_nominal).collect()
    }

    /// Reaction rates from a vector of named-constant values.
    pub fn rates_from_constants(&self, constants: &[f64]) -> Vec<f64> {
        self.reactions
            .iter()
            .map(|r| r.rate_factors.iter().map(|&f| constants[f]).product())
            .collect()
    }

    /// N x M stoichiometric matrix, row-major by species.
    pub fn stoich_matrix(&self) -> Vec<Vec<i64>> {
        let columns: Vec<Vec<i64>> = self.reactions.iter().map(Reaction::net_change).collect();
        (0..self.n_species())
            .map(|i| columns.iter().map(|col| col[i]).collect())
            .collect()
    }

    /// Structural checks shared by the parser and programmatic construction.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let n = self.n_species();
        if n == 0 {
            return Err(NetworkError::NoSpecies);
        }
        for (i, s) in self.species.iter().enumerate() {
            if self.species[..i].contains(s) {
                return Err(NetworkError::DuplicateSpecies(s.clone()));
            }
        }
        if self.x0.len() != n {
            return Err(NetworkError::DimensionMismatch {
                what: "x0",
                expected: n,
                found: self.x0.len(),
            });
        }
        if let Some(v) = self.x0.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(NetworkError::InvalidValue(format!(
                "initial concentration {v} must be finite and nonnegative"
            )));
        }
        if !(self.v_nom.is_finite() && self.v_nom > 0.0) {
            return Err(NetworkError::InvalidValue(format!(
                "nominal system size {} must be positive",
                self.v_nom
            )));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(NetworkError::InvalidValue(format!(
                "final time {} must be positive",
                self.t_final
            )));
        }
        for c in &self.constants {
            if !(c.nominal.is_finite() && c.nominal > 0.0) {
                return Err(NetworkError::InvalidValue(format!(
                    "rate constant {} = {} must be positive",
                    c.name, c.nominal
                )));
            }
        }
        for (j, r) in self.reactions.iter().enumerate() {
            if r.consumed.len() != n || r.created.len() != n {
                return Err(NetworkError::DimensionMismatch {
                    what: "stoichiometry",
                    expected: n,
                    found: r.consumed.len().min(r.created.len()),
                });
            }
            if r.order() > MAX_ORDER {
                return Err(NetworkError::UnsupportedOrder {
                    reaction: j,
                    order: r.order(),
                });
            }
            if r.consumed == r.created {
                return Err(NetworkError::NoNetChange(j));
            }
            if r.rate_factors.is_empty() || r.rate_factors.iter().any(|&f| f >= self.constants.len()) {
                return Err(NetworkError::InvalidValue(format!(
                    "reaction {j} has an invalid rate reference"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network has no species")]
    NoSpecies,
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("reaction {reaction} has order {order}; only orders 0, 1 and 2 are supported")]
    UnsupportedOrder { reaction: usize, order: u32 },
    #[error("reaction {0} has no net stoichiometric change")]
    NoNetChange(usize),
    #[error("{0}")]
    InvalidValue(String),
}

fn binomial_small(x: u64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => x as f64,
        2 => {
            if x < 2 {
                0.0
            } else {
                // x(x-1)/2 is exact in u64 for any realistic copy number
                (x * (x - 1) / 2) as f64
            }
        }
        _ => {
            let mut acc = 1.0;
            for i in 0..u64::from(k) {
                if x < i + 1 {
                    return 0.0;
                }
                acc *= (x - i) as f64 / (i + 1) as f64;
            }
            acc
        }
    }
}

/// Copy-number propensity at system size `v`:
/// `k * v^(1 - order) * prod_i C(x_i, consumed_i)`.
pub fn propensity_v(reaction: &Reaction, x: &[u64], v: f64, k: f64) -> f64 {
    let mut comb = 1.0;
    for (i, c) in reaction.reactants() {
        comb *= binomial_small(x[i], c);
        if comb == 0.0 {
            return 0.0;
        }
    }
    k * v.powi(1 - reaction.order() as i32) * comb
}

/// Thermodynamic-limit propensity `lim a^V(V z) / V`.
pub fn limiting_propensity(reaction: &Reaction, z: &[f64], k: f64) -> f64 {
    let mut a = k;
    for (i, c) in reaction.reactants() {
        a *= match c {
            1 => z[i],
            2 => 0.5 * z[i] * z[i],
            _ => z[i].powi(c as i32) / (1..=c).product::<u32>() as f64,
        };
    }
    a
}

/// One uncertain named constant: `k(theta) = nominal * (1 + half_width * theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainParameter {
    pub name: String,
    /// Index into [`ReactionNetwork::constants`].
    pub constant: usize,
    pub nominal: f64,
    /// Relative half-width, in `[0, 1)`.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSpec {
    pub entries: Vec<UncertainParameter>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParameterError {
    #[error("expected {expected} parameter coordinates, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("theta[{index}] = {value} lies outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
}

impl ParameterSpec {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    /// Values of every named constant of `net` at parameter point `theta`.
    pub fn constants_at(&self, net: &ReactionNetwork, theta: &[f64]) -> Result<Vec<f64>, ParameterError> {
        if theta.len() != self.entries.len() {
            return Err(ParameterError::Dimension {
                expected: self.entries.len(),
                found: theta.len(),
            });
        }
        let mut values: Vec<f64> = net.constants.iter().map(|c| c.nominal).collect();
        for (index, (entry, &t)) in self.entries.iter().zip(theta).enumerate() {
            if !(-1.0..=1.0).contains(&t) {
                return Err(ParameterError::OutOfRange { index, value: t });
            }
            values[entry.constant] = entry.nominal * (1.0 + entry.half_width * t);
        }
        Ok(values)
    }
}

/// Rate constant of every reaction at parameter point `theta`; constants not
/// listed in `spec` stay at their nominal values.
pub fn map_parameters(
    net: &ReactionNetwork,
    spec: &ParameterSpec,
    theta: &[f64],
) -> Result<Vec<f64>, ParameterError> {
    Ok(net.rates_from_constants(&spec.constants_at(net, theta)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reaction(consumed: &[u32], created: &[u32]) -> Reaction {
        Reaction {
            consumed: consumed.to_vec(),
            created: created.to_vec(),
            rate_name: "k".into(),
            rate_factors: vec![0],
            k_nominal: 1.0,
        }
    }

    #[test]
    fn second_order_propensity() {
        let r = reaction(&[1, 1, 0], &[0, 0, 1]);
        assert_eq!(propensity_v(&r, &[10, 5, 0], 4.0, 2.0), 25.0);
    }

    #[test]
    fn dimerization_propensity() {
        let r = reaction(&[2, 0], &[0, 1]);
        assert_eq!(propensity_v(&r, &[10, 0], 4.0, 2.0), 22.5);
        assert_eq!(propensity_v(&r, &[1, 0], 4.0, 2.0), 0.0);
    }

    #[test]
    fn zero_and_first_order_scaling() {
        let source = reaction(&[0], &[1]);
        assert_eq!(propensity_v(&source, &[0], 10.0, 3.0), 30.0);
        assert_eq!(limiting_propensity(&source, &[0.0], 3.0), 3.0);
        let decay = reaction(&[1], &[0]);
        assert_eq!(propensity_v(&decay, &[7], 10.0, 3.0), 21.0);
    }

    #[test]
    fn limiting_propensities() {
        let dimer = reaction(&[2, 0], &[0, 1]);
        assert_eq!(limiting_propensity(&dimer, &[3.0, 0.0], 2.0), 9.0);
        let bi = reaction(&[1, 1], &[0, 0]);
        assert_eq!(limiting_propensity(&bi, &[2.0, 5.0], 1.0), 10.0);
        assert_eq!(limiting_propensity(&bi, &[0.0, 0.0], 1.0), 0.0);
    }

    #[test]
    fn single_reaction_stoich_column() {
        let net = ReactionNetwork {
            species: vec!["S1".into(), "S2".into(), "S3".into()],
            reactions: vec![reaction(&[1, 1, 0], &[0, 0, 1])],
            constants: vec![RateConstant { name: "k".into(), nominal: 1.0 }],
            x0: vec![1.0, 1.0, 0.0],
            v_nom: 1.0,
            t_final: 1.0,
        };
        assert_eq!(net.stoich_matrix(), vec![vec![-1], vec![-1], vec![1]]);
        let catalytic = reaction(&[1, 0], &[1, 1]);
        assert_eq!(catalytic.net_change(), vec![0, 1]);
    }

    #[test]
    fn validation_rejects_bad_networks() {
        let mut net = ReactionNetwork {
            species: vec!["A".into(), "A".into()],
            reactions: vec![],
            constants: vec![],
            x0: vec![0.0, 0.0],
            v_nom: 1.0,
            t_final: 1.0,
        };
        assert_eq!(net.validate(), Err(NetworkError::DuplicateSpecies("A".into())));
        net.species[1] = "B".into();
        net.constants.push(RateConstant { name: "k".into(), nominal: 1.0 });
        net.reactions.push(reaction(&[1, 0], &[1, 0]));
        assert_eq!(net.validate(), Err(NetworkError::NoNetChange(0)));
        net.reactions[0] = reaction(&[2, 1], &[0, 0]);
        assert!(matches!(net.validate(), Err(NetworkError::UnsupportedOrder { order: 3, .. })));
    }
}
