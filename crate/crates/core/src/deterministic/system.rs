use crate::network::ReactionNetwork;

/// Autonomous ODE `y' = f(y)` with an analytic Jacobian.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, y: &[f64], dy: &mut [f64]);
    /// Row-major `dim x dim` Jacobian, fully overwritten.
    fn jacobian(&self, y: &[f64], jac: &mut [f64]);
}

struct Term {
    k: f64,
    reactants: Vec<(usize, u32)>,
    change: Vec<(usize, f64)>,
}

/// Reaction rate equations `z' = sum_j nu_j abar_j(z)`, optionally augmented with
/// a quadrature state `w' = weight * z_i`.
pub struct RreSystem {
    n: usize,
    terms: Vec<Term>,
    quadrature: Option<(usize, f64)>,
}

impl RreSystem {
    pub fn new(net: &ReactionNetwork, rates: &[f64]) -> Self {
        let terms = net
            .reactions
            .iter()
            .zip(rates)
            .map(|(r, &k)| Term {
                k,
                reactants: r.reactants().collect(),
                change: r
                    .net_change()
                    .into_iter()
                    .enumerate()
                    .filter(|(_, d)| *d != 0)
                    .map(|(i, d)| (i, d as f64))
                    .collect(),
            })
            .collect();
        Self {
            n: net.n_species(),
            terms,
            quadrature: None,
        }
    }

    /// Append `w' = weight * z_species` as the last state component.
    pub fn with_quadrature(mut self, species: usize, weight: f64) -> Self {
        self.quadrature = Some((species, weight));
        self
    }

    fn rate(term: &Term, z: &[f64]) -> f64 {
        let mut a = term.k;
        for &(i, c) in &term.reactants {
            a *= if c == 2 { 0.5 * z[i] * z[i] } else { z[i] };
        }
        a
    }
}

impl OdeSystem for RreSystem {
    fn dim(&self) -> usize {
        self.n + usize::from(self.quadrature.is_some())
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        dy.fill(0.0);
        for term in &self.terms {
            let a = Self::rate(term, y);
            for &(i, d) in &term.change {
                dy[i] += d * a;
            }
        }
        if let Some((species, weight)) = self.quadrature {
            dy[self.n] = weight * y[species];
        }
    }

    fn jacobian(&self, y: &[f64], jac: &mut [f64]) {
        let dim = self.dim();
        jac.fill(0.0);
        for term in &self.terms {
            // d abar / d z_m for each reactant m
            for (pos, &(m, c)) in term.reactants.iter().enumerate() {
                let mut da = term.k;
                for (other, &(i, ci)) in term.reactants.iter().enumerate() {
                    if other == pos {
                        da *= if c == 2 { y[m] } else { 1.0 };
                    } else {
                        da *= if ci == 2 { 0.5 * y[i] * y[i] } else { y[i] };
                    }
                }
                for &(i, d) in &term.change {
                    jac[i * dim + m] += d * da;
                }
            }
        }
        if let Some((species, weight)) = self.quadrature {
            jac[self.n * dim + species] = weight;
        }
    }
}

/// `F(z)` at rate vector `rates`.
pub fn rre_rhs(net: &ReactionNetwork, z: &[f64], rates: &[f64]) -> Vec<f64> {
    let sys = RreSystem::new(net, rates);
    let mut dy = vec![0.0; sys.dim()];
    sys.rhs(z, &mut dy);
    dy
}
