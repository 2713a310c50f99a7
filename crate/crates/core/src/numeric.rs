//! Small numeric helpers shared by the analysis modules.

/// Above this kernel size binomial weights are formed in the log domain.
pub(crate) const LOG_DOMAIN_THRESHOLD: usize = 40;

/// Exact binomial coefficient; exact for every `n <= 64`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
    }
    u64::try_from(acc).expect("binomial coefficient exceeds u64")
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|j| ((n - j) as f64).ln() - ((j + 1) as f64).ln()).sum()
}

/// Binomial(ℓ, z) probability masses `P{S = s}` for `s = 0..=ℓ`, with the
/// complement `1 − z` passed separately so it keeps full precision near 1.
///
/// The masses are renormalised to sum to one. Without this a rounding excess
/// in `z + (1 − z)` is raised to the ℓ-th power at every step of a recursion
/// and accumulates into a one-sided bias.
pub fn binomial_pmf(ell: usize, z: f64, zc: f64) -> Vec<f64> {
    let mut w = vec![0.0; ell + 1];
    if z <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if zc <= 0.0 {
        w[ell] = 1.0;
        return w;
    }
    if ell <= LOG_DOMAIN_THRESHOLD {
        for (s, ws) in w.iter_mut().enumerate() {
            *ws = binomial(ell, s) as f64 * z.powi(s as i32) * zc.powi((ell - s) as i32);
        }
    } else {
        let (lz, lzc) = (z.ln(), zc.ln());
        for (s, ws) in w.iter_mut().enumerate() {
            *ws = (ln_binomial(ell, s) + s as f64 * lz + (ell - s) as f64 * lzc).exp();
        }
    }
    let total = neumaier_sum(w.iter().copied());
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log2(1 − 2^x)` for `x < 0`.
#[inline]
pub(crate) fn log2_one_minus_pow2(x: i64) -> f64 {
    debug_assert!(x < 0);
    (-(2f64).powi(x as i32)).ln_1p() / std::f64::consts::LN_2
}
