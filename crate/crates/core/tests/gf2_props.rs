use bigpolar::gf2::{sample_nonsingular, sample_nonsingular_counted};
use bigpolar::{BitMatrix, BitVec, Seed};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, words: &[u64]) -> BitMatrix {
    let mask = if cols == 64 { u64::MAX } else { (1u64 << cols) - 1 };
    let r: Vec<u64> = words.iter().take(rows).map(|w| w & mask).collect();
    BitMatrix::from_row_words(cols, &r).unwrap()
}

/// Every vector in the column span, by enumerating subsets of columns.
fn span(m: &BitMatrix) -> Vec<BitVec> {
    let cols: Vec<BitVec> = (0..m.cols()).map(|j| m.column(j)).collect();
    (0u32..1 << cols.len())
        .map(|sel| {
            let mut v = BitVec::zeros(m.rows());
            for (j, c) in cols.iter().enumerate() {
                if sel >> j & 1 == 1 {
                    v.xor_assign(c);
                }
            }
            v
        })
        .collect()
}

proptest! {
    #[test]
    fn rank_equals_transpose_rank(words in proptest::collection::vec(any::<u64>(), 8)) {
        let m = matrix(8, 8, &words);
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn column_space_matches_span(rows in 1usize..=16, cols in 1usize..=12, words in proptest::collection::vec(any::<u64>(), 16), probe in any::<u64>()) {
        // rows ≤ 16 with ≤ 12 columns, so at most 2^12 span elements
        let m = matrix(rows, cols, &words).transpose();
        let m = matrix(m.rows(), m.cols(), &(0..m.rows()).map(|i| m.row_words(i)[0]).collect::<Vec<_>>());
        let all = span(&m);
        let v = BitVec::from_bools(&(0..m.rows()).map(|i| probe >> i & 1 == 1).collect::<Vec<_>>());
        prop_assert_eq!(m.in_column_space(&v).unwrap(), all.contains(&v));
        for w in all.iter().take(8) {
            prop_assert!(m.in_column_space(w).unwrap());
        }
    }

    #[test]
    fn prefix_dims_grow_by_at_most_one(rows in 1usize..=20, cols in 1usize..=20, words in proptest::collection::vec(any::<u64>(), 20)) {
        let m = matrix(rows, cols, &words);
        let d = m.prefix_intersection_dims();
        let d = d.as_slice();
        prop_assert_eq!(d.len(), rows + 1);
        prop_assert_eq!(d[0], 0);
        for w in d.windows(2) {
            prop_assert!(w[1] >= w[0] && w[1] - w[0] <= 1);
        }
        prop_assert_eq!(d[rows], m.rank());
    }

    #[test]
    fn kron_powers_compose(words in proptest::collection::vec(any::<u64>(), 3), ell in 2usize..=3, a in 1usize..=2, b in 1usize..=2) {
        let k = matrix(ell, ell, &words);
        let whole = k.kron_power(a + b).unwrap();
        let split = k.kron_power(a).unwrap().kron(&k.kron_power(b).unwrap()).unwrap();
        prop_assert_eq!(whole, split);
    }

    #[test]
    fn samples_are_nonsingular(ell in 1usize..=64, seed in any::<u64>()) {
        let m = sample_nonsingular(ell, Seed::new(seed)).unwrap();
        prop_assert_eq!(m.rank(), ell);
        prop_assert_eq!(&m, &sample_nonsingular(ell, Seed::new(seed)).unwrap());
    }
}

#[test]
fn rejection_acceptance_rate() {
    for ell in [8usize, 16, 64] {
        let draws = 20_000u64;
        let attempts: usize = (0..draws).map(|t| sample_nonsingular_counted(ell, Seed::new(ell as u64).child(t)).unwrap().1).sum();
        let rate = draws as f64 / attempts as f64;
        assert!(rate >= 0.28, "ell={ell}: acceptance {rate}");
    }
}

#[test]
fn gl2_draws_are_uniform() {
    let draws = 60_000u64;
    let mut counts = std::collections::HashMap::new();
    for t in 0..draws {
        let m = sample_nonsingular(2, Seed::new(77).child(t)).unwrap();
        *counts.entry(m.to_kernel_text()).or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), 6);
    let expect = draws as f64 / 6.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    // 5 degrees of freedom; 20.5 is the 0.999 quantile
    assert!(chi2 < 20.5, "chi2 = {chi2}");
}
