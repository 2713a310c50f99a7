use bigpolar::behavior::undecodable_mask;
use bigpolar::numeric::binomial;
use bigpolar::{exact_behavior, mc_behavior, Kernel, Seed};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_count_invariants(ell in 1usize..=12, seed in any::<u64>()) {
        let b = exact_behavior(&Kernel::sample(ell, Seed::new(seed)).unwrap()).unwrap();
        for s in 0..=ell {
            let total = binomial(ell, s) as u64;
            prop_assert_eq!(b.patterns(s), total);
            let sum: u64 = (1..=ell).map(|i| b.count(i, s)).sum();
            prop_assert_eq!(sum, s as u64 * total);
            for i in 1..=ell {
                prop_assert!(b.count(i, s) <= total);
            }
        }
        for i in 1..=ell {
            prop_assert_eq!(b.count(i, 0), 0);
            prop_assert_eq!(b.count(i, ell), 1);
        }
    }

    #[test]
    fn every_pattern_leaves_exactly_its_weight_undecodable(ell in 1usize..=16, seed in any::<u64>(), mask in any::<u64>()) {
        let k = Kernel::sample(ell, Seed::new(seed)).unwrap();
        let m = if ell == 64 { mask } else { mask & ((1 << ell) - 1) };
        prop_assert_eq!(undecodable_mask(&k, m).count_ones(), m.count_ones());
    }
}

#[test]
fn behavior_is_monotone_in_z() {
    for seed in 0..20u64 {
        let ell = 2 + (seed as usize % 11);
        let k = Kernel::sample(ell, Seed::new(seed)).unwrap();
        let b = exact_behavior(&k).unwrap();
        for i in 1..=ell {
            let mut prev = b.eval_pair(i, 0.0, 1.0);
            for g in 1..=1000 {
                let z = g as f64 / 1000.0;
                let cur = b.eval_pair(i, z, 1.0 - z);
                // renormalised weights move a value near 1 by an ulp or two
                let tol = |a: f64, b: f64| 4.0 * f64::EPSILON * a.max(b);
                assert!(cur.0 >= prev.0 - tol(cur.0, prev.0) && cur.1 <= prev.1 + tol(cur.1, prev.1), "seed={seed} i={i} z={z}");
                if k.is_polarizing() && g < 1000 {
                    assert!(cur.0 > prev.0 + tol(cur.0, prev.0) || cur.1 < prev.1 - tol(cur.1, prev.1), "not strict: seed={seed} i={i} z={z}");
                }
                prev = cur;
            }
        }
    }
}

#[test]
fn larger_patterns_dominate() {
    for seed in 0..20u64 {
        let ell = 2 + (seed as usize % 7);
        let k = Kernel::sample(ell, Seed::new(seed)).unwrap();
        for mask in 0u64..1 << ell {
            let under = undecodable_mask(&k, mask);
            for j in 0..ell {
                let bigger = undecodable_mask(&k, mask | 1 << j);
                assert_eq!(under & !bigger, 0, "seed={seed} mask={mask:#b} j={j}");
            }
        }
    }
}

#[test]
fn sampled_behavior_agrees_with_exact() {
    for (ell, samples) in [(8usize, 30u64), (12, 300), (16, 10_000)] {
        for seed in 0..3u64 {
            let k = Kernel::sample(ell, Seed::new(seed)).unwrap();
            let exact = exact_behavior(&k).unwrap();
            let mc = mc_behavior(&k, samples, Seed::new(100 + seed)).unwrap();
            for s in 0..=ell {
                let n = mc.patterns(s) as f64;
                for i in 1..=ell {
                    let (q, qh) = (exact.q(i, s), mc.q(i, s));
                    if q == 0.0 || q == 1.0 {
                        assert_eq!(qh, q, "ell={ell} i={i} s={s}");
                    } else {
                        let se = (q * (1.0 - q) / n).sqrt();
                        assert!((q - qh).abs() <= 5.0 * se + 1e-12, "ell={ell} i={i} s={s}: {qh} vs {q}");
                    }
                }
            }
        }
    }
}

#[test]
fn sampled_arikan_first_index() {
    let mc = mc_behavior(&Kernel::arikan(), 100_000, Seed::new(1)).unwrap();
    assert_eq!(mc.q(1, 1), 1.0);
    assert_eq!(mc.count(1, 0), 0);
}

#[test]
fn same_seed_same_counts() {
    let k = Kernel::sample(20, Seed::new(5)).unwrap();
    let a = mc_behavior(&k, 2000, Seed::new(9)).unwrap();
    let b = mc_behavior(&k, 2000, Seed::new(9)).unwrap();
    assert_eq!(a.counts(), b.counts());
}
