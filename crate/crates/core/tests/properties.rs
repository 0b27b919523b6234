use proptest::prelude::*;

use crn_sobol::gsa::SaltelliDesign;
use crn_sobol::network::{
    limiting_propensity, map_parameters, parse_model, propensity_v, search_bounded, search_lp, Reaction,
};
use crn_sobol::stochastic::{nrm_simulate, stochastic_qoi_at_rates};
use crn_sobol::streams::SeedSpec;

const MM: &str = include_str!("../models/michaelis_menten.model");

fn reaction(consumed: Vec<u32>) -> Reaction {
    let n = consumed.len();
    Reaction {
        consumed,
        created: vec![0; n],
        rate_name: "k".into(),
        rate_factors: vec![0],
        k_nominal: 1.0,
    }
}

fn consumed_vec() -> impl Strategy<Value = Vec<u32>> {
    // at most second order in total
    (0usize..3, 0usize..3, 0u32..3).prop_map(|(i, j, kind)| {
        let mut c = vec![0u32; 3];
        match kind {
            0 => {}
            1 => c[i] += 1,
            _ => {
                c[i] += 1;
                c[j] += 1;
            }
        }
        c
    })
}

proptest! {
    #[test]
    fn propensity_is_nonnegative_and_vanishes_only_without_reactants(
        consumed in consumed_vec(),
        x in prop::collection::vec(0u64..6, 3),
        v in 0.1f64..1e4,
        k in 1e-6f64..1e3,
    ) {
        let r = reaction(consumed.clone());
        let a = propensity_v(&r, &x, v, k);
        prop_assert!(a >= 0.0);
        let short = consumed.iter().zip(&x).any(|(&c, &n)| u64::from(c) > n);
        prop_assert_eq!(a == 0.0, short);
    }

    #[test]
    fn propensity_approaches_its_limit(
        consumed in consumed_vec(),
        z in prop::collection::vec(0.1f64..10.0, 3),
        k in 0.01f64..100.0,
    ) {
        let r = reaction(consumed);
        let limit = limiting_propensity(&r, &z, k);
        let mut prev = f64::INFINITY;
        for v in [1e2, 1e4, 1e6] {
            let x: Vec<u64> = z.iter().map(|zi| (zi * v).round() as u64).collect();
            let zv: Vec<f64> = x.iter().map(|&n| n as f64 / v).collect();
            // compare on the lattice point so that rounding of V z does not dominate
            let err = (propensity_v(&r, &x, v, k) / v - limiting_propensity(&r, &zv, k)).abs();
            prop_assert!(err <= 10.0 * limit.max(1e-300) / v + 1e-12, "v={} err={}", v, err);
            prop_assert!(err <= prev * 1.0001 || err < 1e-12);
            prev = err;
        }
    }

    #[test]
    fn parameter_map_is_affine_per_coordinate(t in prop::collection::vec(-1.0f64..=1.0, 3)) {
        let m = parse_model(MM).unwrap();
        let net = &m.network;
        let got = map_parameters(net, &m.params, &t).unwrap();
        let nominal = net.nominal_rates();
        for (j, e) in m.params.entries.iter().enumerate() {
            let want = e.nominal * (1.0 + e.half_width * t[j]);
            prop_assert!((got[j] - want).abs() <= 1e-15 * want.abs());
            prop_assert!((got[j] - nominal[j] * (1.0 + 0.1 * t[j])).abs() <= 1e-15 * nominal[j]);
        }
    }

    #[test]
    fn design_is_reproducible_and_in_the_cube(seed in any::<u64>(), p in 1usize..6, n in 1usize..20) {
        let a = SaltelliDesign::new(p, n, seed);
        let b = SaltelliDesign::new(p, n, seed);
        prop_assert_eq!(a.n_points(), n * (p + 2));
        for k in 0..a.n_points() {
            let pt = a.point(k);
            prop_assert_eq!(&pt, &b.point(k));
            prop_assert!(pt.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn replaying_events_reproduces_the_final_state(seed in any::<u64>(), omega in 0u64..1000) {
        let m = parse_model(MM).unwrap();
        let net = &m.network;
        let traj = nrm_simulate(net, net.v_nom, &net.nominal_rates(), 5.0, SeedSpec::new(seed, omega)).unwrap();
        let mut x = traj.state(0).to_vec();
        let deltas: Vec<Vec<i64>> = net.reactions.iter().map(|r| r.net_change()).collect();
        for &c in &traj.channels {
            for (xi, d) in x.iter_mut().zip(&deltas[c]) {
                *xi = (*xi as i64 + d) as u64;
            }
        }
        prop_assert_eq!(x.as_slice(), traj.final_state());
        prop_assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn stoichiometry_columns_match_the_model() {
    let m = parse_model(MM).unwrap();
    let cols: Vec<Vec<i64>> = m.network.reactions.iter().map(|r| r.net_change()).collect();
    assert_eq!(cols, vec![vec![-1, -1, 1, 0], vec![1, 1, -1, 0], vec![0, 1, -1, 1]]);
}

#[test]
fn bounded_search_and_lp_agree_on_supports() {
    let m = parse_model(MM).unwrap();
    let net = &m.network;
    for support in [vec![0], vec![1], vec![2], vec![3], vec![0, 1], vec![1, 3]] {
        let bounded = search_bounded(net, &support, 4);
        let lp = search_lp(net, &support);
        assert_eq!(bounded.is_some(), lp.is_some(), "support {support:?}");
    }
}

#[test]
fn pure_decay_endpoint_mean() {
    // E[X(5)] = 100 exp(-0.05 * 5)
    let m = parse_model("species: X\nx0: 100\nvnom: 1\ntfinal: 5\nreaction k: X -> 0\nrate k = 0.05\nqoi: endpoint X @ 5\n")
        .unwrap();
    let n = 20_000u64;
    let mean: f64 = (0..n)
        .map(|i| stochastic_qoi_at_rates(&m.network, 1.0, &[0.05], &m.qoi, SeedSpec::new(9, i)).unwrap())
        .sum::<f64>()
        / n as f64;
    let want = 100.0 * (-0.25f64).exp();
    // sd of one sample is sqrt(100 p (1 - p)) ~ 4.4
    assert!((mean - want).abs() < 4.0 * 4.4 / (n as f64).sqrt(), "mean {mean} vs {want}");
}
