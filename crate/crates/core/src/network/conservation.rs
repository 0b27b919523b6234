//! Boundedness certificates: nonnegative integer vectors `alpha` with
//! `alpha^T nu_j <= 0` for every reaction and `alpha_i > 0` on a support set.
//! Such a vector bounds `X_i(t) <= alpha^T X(0) / alpha_i` along every path.

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use super::ReactionNetwork;

pub const DEFAULT_ALPHA_MAX: u32 = 4;

/// Networks up to this many species use the bounded integer search.
const EXHAUSTIVE_MAX_SPECIES: usize = 12;

fn certifies(columns: &[Vec<i64>], support: &[usize], alpha: &[u32]) -> bool {
    support.iter().all(|&i| alpha[i] > 0)
        && columns.iter().all(|col| {
            col.iter()
                .zip(alpha)
                .map(|(&nu, &a)| nu * i64::from(a))
                .sum::<i64>()
                <= 0
        })
}

/// Next composition of `total` into `alpha.len()` parts bounded by `max`, in
/// lexicographically decreasing order of the leading entries.
fn next_composition(alpha: &mut [u32], max: u32) -> bool {
    let n = alpha.len();
    // find rightmost position i < n-1 with alpha[i] > 0 and room to the right
    let mut tail: u32 = alpha[n - 1];
    for i in (0..n - 1).rev() {
        let room = (n - 1 - i) as u32 * max;
        if alpha[i] > 0 && tail < room {
            alpha[i] -= 1;
            let mut rest = tail + 1;
            for slot in alpha.iter_mut().skip(i + 1) {
                let take = rest.min(max);
                *slot = take;
                rest -= take;
            }
            return true;
        }
        tail += alpha[i];
    }
    false
}

/// Exhaustive search over `alpha` in `{0..=alpha_max}^N`, visiting vectors in
/// order of increasing entry sum. Returns the first certificate found.
pub fn search_bounded(net: &ReactionNetwork, support: &[usize], alpha_max: u32) -> Option<Vec<u32>> {
    let n = net.n_species();
    let columns: Vec<Vec<i64>> = net.reactions.iter().map(|r| r.net_change()).collect();
    let min_total = support.len() as u32;
    for total in min_total.max(1)..=(n as u32 * alpha_max) {
        let mut alpha = vec![0u32; n];
        let mut rest = total;
        for slot in alpha.iter_mut() {
            let take = rest.min(alpha_max);
            *slot = take;
            rest -= take;
        }
        loop {
            if certifies(&columns, support, &alpha) {
                return Some(alpha);
            }
            if !next_composition(&mut alpha, alpha_max) {
                break;
            }
        }
    }
    None
}

/// Exact rational phase-one simplex on
/// `{alpha >= 0, nu^T alpha <= 0, alpha_i >= 1 (i in support)}`.
/// A rational solution is scaled to the smallest integer multiple.
pub fn search_lp(net: &ReactionNetwork, support: &[usize]) -> Option<Vec<u32>> {
    let n = net.n_species();
    let m = net.n_reactions();
    let s = support.len();
    // columns: alpha (n) | slack (m) | surplus (s) | artificial (s) | rhs
    let cols = n + m + 2 * s;
    let rows = m + s;
    let zero = BigRational::zero;
    let mut tab: Vec<Vec<BigRational>> = vec![vec![zero(); cols + 1]; rows];
    let mut basis = vec![0usize; rows];
    for (j, r) in net.reactions.iter().enumerate() {
        for (i, d) in r.net_change().into_iter().enumerate() {
            tab[j][i] = BigRational::from_integer(BigInt::from(d));
        }
        tab[j][n + j] = BigRational::one();
        basis[j] = n + j;
    }
    for (k, &i) in support.iter().enumerate() {
        let row = m + k;
        tab[row][i] = BigRational::one();
        tab[row][n + m + k] = -BigRational::one();
        tab[row][n + m + s + k] = BigRational::one();
        tab[row][cols] = BigRational::one();
        basis[row] = n + m + s + k;
    }
    // reduced costs of the phase-one objective: minimise the sum of artificials
    let mut cost = vec![zero(); cols + 1];
    for row in tab.iter().skip(m) {
        for (c, v) in cost.iter_mut().zip(row) {
            *c -= v;
        }
    }
    for k in 0..s {
        cost[n + m + s + k] = zero();
    }

    loop {
        // Bland's rule: smallest index with negative reduced cost
        let Some(enter) = (0..cols).find(|&c| cost[c].is_negative()) else {
            break;
        };
        let mut leave: Option<(usize, BigRational)> = None;
        for (r, row) in tab.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = &row[cols] / &row[enter];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // the phase-one objective is bounded below by zero, so a leaving row exists
        let (pr, _) = leave?;
        let pivot = tab[pr][enter].clone();
        for v in tab[pr].iter_mut() {
            *v /= &pivot;
        }
        let pivot_row = tab[pr].clone();
        for (r, row) in tab.iter_mut().enumerate() {
            if r != pr && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        let f = cost[enter].clone();
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            *v -= &f * p;
        }
        basis[pr] = enter;
    }

    // objective value is -cost[rhs]
    if !cost[cols].is_zero() {
        return None;
    }
    let mut alpha = vec![zero(); n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            alpha[b] = tab[r][cols].clone();
        }
    }
    let lcm = alpha
        .iter()
        .fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let ints: Vec<BigInt> = alpha.iter().map(|a| (a * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    let gcd = if gcd.is_zero() { BigInt::one() } else { gcd };
    ints.iter()
        .map(|v| u32::try_from(v / &gcd).ok())
        .collect()
}

/// Boundedness certificate for the species in `support`, or `None`.
///
/// Networks with at most 12 species use [`search_bounded`] with entries up to
/// `alpha_max`; larger networks use [`search_lp`].
pub fn find_conservation_vector(net: &ReactionNetwork, support: &[usize], alpha_max: u32) -> Option<Vec<u32>> {
    if net.n_species() <= EXHAUSTIVE_MAX_SPECIES {
        // infeasible systems would otherwise exhaust the whole box
        search_lp(net, support)?;
        search_bounded(net, support, alpha_max)
    } else {
        search_lp(net, support)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{RateConstant, Reaction};

    fn net(species: usize, reactions: &[(&[u32], &[u32])]) -> ReactionNetwork {
        ReactionNetwork {
            species: (0..species).map(|i| format!("X{i}")).collect(),
            reactions: reactions
                .iter()
                .map(|(c, p)| Reaction {
                    consumed: c.to_vec(),
                    created: p.to_vec(),
                    rate_name: "k".into(),
                    rate_factors: vec![0],
                    k_nominal: 1.0,
                })
                .collect(),
            constants: vec![RateConstant { name: "k".into(), nominal: 1.0 }],
            x0: vec![0.0; species],
            v_nom: 1.0,
            t_final: 1.0,
        }
    }

    fn michaelis_menten() -> ReactionNetwork {
        net(
            4,
            &[
                (&[1, 1, 0, 0], &[0, 0, 1, 0]),
                (&[0, 0, 1, 0], &[1, 1, 0, 0]),
                (&[0, 0, 1, 0], &[0, 1, 0, 1]),
            ],
        )
    }

    #[test]
    fn michaelis_menten_certificates() {
        let mm = michaelis_menten();
        assert_eq!(find_conservation_vector(&mm, &[3], 4), Some(vec![1, 0, 1, 1]));
        assert_eq!(find_conservation_vector(&mm, &[1], 4), Some(vec![0, 1, 1, 0]));
        let lp = search_lp(&mm, &[3]).unwrap();
        assert!(certifies(&mm.reactions.iter().map(|r| r.net_change()).collect::<Vec<_>>(), &[3], &lp));
    }

    #[test]
    fn pure_birth_has_no_certificate() {
        let birth = net(1, &[(&[0], &[1])]);
        assert_eq!(find_conservation_vector(&birth, &[0], 4), None);
        assert_eq!(search_bounded(&birth, &[0], 4), None);
        assert_eq!(search_lp(&birth, &[0]), None);
    }

    #[test]
    fn dimerization_certificates() {
        // 2A -> B
        let dimer = net(2, &[(&[2, 0], &[0, 1])]);
        assert_eq!(search_bounded(&dimer, &[1], 4), Some(vec![1, 1]));
        let lp = search_lp(&dimer, &[1]).unwrap();
        assert!(certifies(&[vec![-2, 1]], &[1], &lp));
    }

    #[test]
    fn compositions_enumerate_all_vectors() {
        // number of compositions of 3 into 3 parts bounded by 2 is 7
        let mut alpha = vec![2, 1, 0];
        let mut count = 1;
        while next_composition(&mut alpha, 2) {
            assert_eq!(alpha.iter().sum::<u32>(), 3);
            assert!(alpha.iter().all(|&a| a <= 2));
            count += 1;
        }
        assert_eq!(count, 7);
    }
}
