mod common;

use proptest::prelude::*;
use sdde::kernels::{
    check_assumptions, compute_aj, double_shuffle_map, h_kernel, h_tilde_kernel, malliavin_bounds, shuffles, simplex_integral_closed,
    simplex_integral_quadrature, AssumptionInput, Regime, SimplexSpec,
};
use sdde::segment::build_basis;
use sdde::SddeError;

use common::{nested_simplex_gl, simplex_oracle};

fn input() -> AssumptionInput {
    AssumptionInput {
        epsilon: 1.0,
        delta_h: 0.05,
        delta_t: 0.05,
        r: 0.5,
        horizon: 0.2,
        hurst: vec![0.3, 0.2],
        weights: vec![1.0, 0.7],
        l1_norms: vec![1e-4, 5e-5],
        sln: vec![0.6, 0.8],
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn shuffle_maps_are_block_increasing_permutations() {
    for m in 1..=4 {
        for n in 1..=4 {
            let set = shuffles(m, n).unwrap();
            assert_eq!(set.len(), binomial(m + n, m));
            for s in &set.maps {
                let mut sorted = s.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, (1..=m + n).collect::<Vec<_>>());
                assert!(s[..m].windows(2).all(|w| w[0] < w[1]));
                assert!(s[m..].windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}

#[test]
fn double_map_sends_blocks_to_their_simplices() {
    // positions of the first block land in 1..=2m, the rest above
    for (m, n) in [(1, 1), (2, 1), (1, 3), (3, 2)] {
        for sigma in &shuffles(m, m).unwrap().maps {
            for tau in &shuffles(n, n).unwrap().maps {
                let map = double_shuffle_map(sigma, tau, m, n);
                for (pos, &v) in map.iter().enumerate() {
                    let p = pos + 1;
                    let first = p <= m || (m + n < p && p <= 2 * m + n);
                    assert_eq!(first, v <= 2 * m, "m={m} n={n} map={map:?}");
                }
            }
        }
    }
}

#[test]
fn simplex_volume_matches_factorial() {
    for m in 1..=6 {
        let spec = SimplexSpec::new(0.25, 1.75, vec![0.0; m]).unwrap();
        let expected = 1.5_f64.powi(m as i32) / (1..=m).product::<usize>() as f64;
        let got = simplex_integral_closed(&spec);
        assert!((got - expected).abs() <= 1e-14 * expected, "m={m}: {got} vs {expected}");
    }
}

#[test]
fn simplex_closed_form_agrees_with_both_quadratures() {
    for a in [vec![-0.6, -0.6], vec![0.5, -0.2, 1.0], vec![-0.9, 0.0, -0.3, 0.4]] {
        let spec = SimplexSpec::new(0.1, 0.9, a.clone()).unwrap();
        let closed = simplex_integral_closed(&spec);
        let library = simplex_integral_quadrature(&spec, 1e-12);
        let oracle = simplex_oracle(&a, 0.1, 0.9);
        assert!((closed - library).abs() <= 1e-8 * closed, "{a:?}");
        assert!((closed - oracle).abs() <= 1e-8 * closed, "{a:?}");
    }
}

#[test]
fn simplex_with_integer_exponents_matches_gauss_legendre() {
    let a = [1.0, 2.0, 0.0];
    let f = |s: &[f64]| (s[0] - s[1]) * (s[1] - s[2]).powi(2);
    let gl = nested_simplex_gl(&f, 3, 0.0, 1.0, 6);
    let closed = simplex_integral_closed(&SimplexSpec::new(0.0, 1.0, a.to_vec()).unwrap());
    assert!((gl - closed).abs() < 1e-14);
}

#[test]
fn simplex_spec_rejects_bad_input() {
    assert!(SimplexSpec::new(1.0, 0.5, vec![0.0]).is_err());
    assert!(SimplexSpec::new(0.0, 1.0, vec![]).is_err());
    assert!(SimplexSpec::new(0.0, 1.0, vec![-1.0]).is_err());
}

#[test]
fn kernel_rejects_unordered_points() {
    let basis = build_basis(0.5, 3, 10).unwrap();
    assert!(h_kernel(&[1, 2], &[0.2, 0.4], 0.0, &basis).is_err());
    assert!(h_kernel(&[1], &[0.2], 0.3, &basis).is_err());
    assert!(h_kernel(&[4], &[0.5], 0.0, &basis).is_err());
}

#[test]
fn tilde_kernel_vanishes_when_thetas_coincide() {
    let basis = build_basis(0.5, 3, 10).unwrap();
    let v = h_tilde_kernel(&[2, 3], &[0.9, 0.6], 0.3, 0.3, &basis).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn inadmissible_inputs_are_refused() {
    let mut i = input();
    i.hurst[0] = 0.4;
    match malliavin_bounds(&i, 0.2, 0.0, 0.1, 1.0, None) {
        Err(SddeError::Inadmissible(msg)) => assert!(!msg.is_empty()),
        other => panic!("expected refusal, got {other:?}"),
    }
}

/// `A` tuned so that the geometric ratio at `(θ, t) = (0, T)` is exactly ½.
fn half_ratio_input() -> AssumptionInput {
    let mut i = input();
    i.hurst = vec![0.3];
    i.weights = vec![1.0];
    i.sln = vec![1.0];
    i.l1_norms = vec![1.0];
    let per_unit = compute_aj(&i, 1).unwrap();
    i.l1_norms = vec![0.5 / i.horizon.powf(i.delta_h) / per_unit];
    i
}

#[test]
fn geometric_series_at_half_ratio_equals_prefactor() {
    let i = half_ratio_input();
    let b = malliavin_bounds(&i, i.horizon, 0.0, 0.0, 0.8, None).unwrap();
    assert!((b.ratio - 0.5).abs() < 1e-14);
    let series: f64 = (1..=60).map(|m| b.ratio.powi(m)).sum::<f64>().powi(2) * b.prefactor;
    assert!((series - b.prefactor).abs() <= 1e-12 * b.prefactor);
    assert!((b.geometric - b.prefactor).abs() <= 1e-12 * b.prefactor);
}

#[test]
fn holder_bound_dominates_integrated_pointwise_terms() {
    let i = input();
    let b = malliavin_bounds(&i, 0.2, 0.05, 0.15, 1.0, None).unwrap();
    assert!(b.holder > 0.0 && b.holder.is_finite());
    assert!(b.difference >= 3.0 * b.i1);
    assert!(b.i1 > 0.0 && b.i2 > 0.0 && b.i3 > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_max_increases_with_epsilon(e1 in 0.5f64..1.0, bump in 0.0f64..0.4, dt in 0.01f64..0.1) {
        let e2 = (e1 + bump).min(1.0);
        let mut a = input();
        a.epsilon = e1;
        a.delta_t = dt;
        let mut b = a.clone();
        b.epsilon = e2;
        let ta = check_assumptions(&a, Regime::Finite).unwrap().t_max;
        let tb = check_assumptions(&b, Regime::Finite).unwrap().t_max;
        if let (Some(x), Some(y)) = (ta, tb) {
            prop_assert!(y >= x);
        } else {
            prop_assert!(ta.is_none());
        }
    }

    #[test]
    fn t_max_decreases_with_delta_t(d1 in 0.01f64..0.9, bump in 0.0f64..0.5) {
        let mut a = input();
        a.delta_t = d1;
        let mut b = a.clone();
        b.delta_t = d1 + bump;
        let ta = check_assumptions(&a, Regime::Finite).unwrap().t_max;
        let tb = check_assumptions(&b, Regime::Finite).unwrap().t_max;
        match (ta, tb) {
            (Some(x), Some(y)) => prop_assert!(y <= x),
            (Some(_), None) | (None, None) => {}
            (None, Some(_)) => prop_assert!(false, "larger δ_T gained a horizon"),
        }
    }

    #[test]
    fn a_sum_decreases_in_sln_and_weights(c in 0.1f64..1.0, dc in 0.0f64..1.0, w in 0.2f64..2.0, dw in 0.0f64..1.0) {
        let mut a = input();
        a.sln[0] = c;
        a.weights[0] = w;
        let base = check_assumptions(&a, Regime::Finite).unwrap().a_sum;
        let mut b = a.clone();
        b.sln[0] = (c + dc).min(1.0);
        prop_assert!(check_assumptions(&b, Regime::Finite).unwrap().a_sum <= base);
        let mut b = a.clone();
        b.weights[0] = w + dw;
        prop_assert!(check_assumptions(&b, Regime::Finite).unwrap().a_sum <= base);
    }

    #[test]
    fn kernel_bounds_hold(seed in any::<u64>(), m in 1usize..=4) {
        let r = 0.5;
        let basis = build_basis(r, 4, 10).unwrap();
        let mut state = seed | 1;
        let mut uniform = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let theta = uniform();
        let t = theta + 1.5 * uniform();
        let mut s: Vec<f64> = (0..m).map(|_| theta + (t - theta) * uniform()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let j: Vec<usize> = (0..m).map(|_| 1 + (uniform() * 3.999) as usize).collect();
        let theta_p = t * uniform();
        let h = h_kernel(&j, &s, theta, &basis).unwrap();
        let ht = h_tilde_kernel(&j, &s, theta, theta_p, &basis).unwrap();
        prop_assert!(h.abs() <= (1.0 + r).powi(m as i32));
        prop_assert!(ht.abs() <= (1.0 + r).powi(m as i32 - 1) * (theta - theta_p).abs().sqrt() + 1e-14);
    }

    #[test]
    fn pointwise_bound_vanishes_on_the_diagonal_and_grows(theta in 0.0f64..0.2, frac in 0.0f64..1.0) {
        let i = input();
        let t = theta + (0.2 - theta) * frac;
        let b = malliavin_bounds(&i, t, theta, theta, 1.0, None).unwrap();
        let later = malliavin_bounds(&i, 0.2, theta, theta, 1.0, None).unwrap();
        prop_assert!(b.pointwise <= later.pointwise * (1.0 + 1e-12));
        if t == theta {
            prop_assert_eq!(b.pointwise, 0.0);
        }
    }
}
