use proptest::prelude::*;

use trimboot::bootstrap::quantile_type1;
use trimboot::experiments::{dkw_band, two_sample_ks};
use trimboot::gaussian::NormSpecFinite;
use trimboot::vecmean::minimax_mean;
use trimboot::Stream;

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-5.0f64..5.0, Just(0.0), Just(1.0)], 1..80)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ks_is_a_symmetric_distance(a in sample(), b in sample()) {
        let ab = two_sample_ks(&a, &b);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, two_sample_ks(&b, &a));
        prop_assert_eq!(two_sample_ks(&a, &a), 0.0);
    }

    #[test]
    fn ks_ignores_input_order(a in sample(), b in sample()) {
        let mut r = a.clone();
        r.reverse();
        prop_assert_eq!(two_sample_ks(&a, &b), two_sample_ks(&r, &b));
    }

    #[test]
    fn dkw_band_shrinks_with_replications(r1 in 1usize..100_000, r2 in 1usize..100_000) {
        prop_assert!(dkw_band(r1, r2) >= dkw_band(r1 + 1, r2 + 1));
        prop_assert_eq!(dkw_band(r1, r2), dkw_band(r2, r1));
    }

    #[test]
    fn quantile_is_a_sample_point_and_monotone(v in sample(), a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let qa = quantile_type1(&v, lo).unwrap();
        let qb = quantile_type1(&v, hi).unwrap();
        prop_assert!(v.contains(&qa));
        prop_assert!(qa <= qb);
    }

    #[test]
    fn minimax_beats_every_candidate(
        d in 1usize..4,
        raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..10),
        t in prop::collection::vec(-3.0f64..3.0, 13),
        cand in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let mut vectors: Vec<Vec<f64>> = (0..d).map(|j| (0..d).map(|i| (i == j) as u8 as f64).collect()).collect();
        vectors.extend(raw.iter().map(|v| v[..d].to_vec()).filter(|v| v.iter().any(|x| x.abs() > 1e-3)));
        let half = vectors.len();
        let mut tvals = t[..half].to_vec();
        for i in 0..half {
            let neg: Vec<f64> = vectors[i].iter().map(|x| -x).collect();
            vectors.push(neg);
            tvals.push(-t[i]);
        }
        let s = NormSpecFinite::new(vectors.clone()).unwrap();
        let tvals = &tvals[..];
        let sol = minimax_mean(tvals, &s).unwrap();
        let resid = |mu: &[f64]| vectors.iter().zip(tvals).map(|(v, tv)| (tv - v.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>()).abs()).fold(0.0, f64::max);
        prop_assert!((resid(&sol.mu_hat) - sol.objective).abs() <= 1e-9 * (1.0 + sol.objective));
        prop_assert!(sol.objective <= resid(&cand[..d]) + 1e-9);
    }

    #[test]
    fn streams_are_reproducible_and_separated(seed in any::<u64>(), i in 0u64..1000) {
        use rand::Rng;
        let a: u64 = Stream::new(seed).substream(i).rng().random();
        let b: u64 = Stream::new(seed).substream(i).rng().random();
        let c: u64 = Stream::new(seed).substream(i + 1).rng().random();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
    }
}
