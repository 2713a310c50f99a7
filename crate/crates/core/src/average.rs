//! Polarization behavior averaged over a uniformly random nonsingular kernel.
//!
//! Under a random kernel the unerased columns span a uniform `(ℓ−s)`-dimensional
//! subspace `A`, so `p_{i|s} = P{A ∩ (E_i \ E_{i−1}) = ∅}`. Splitting by
//! `t = dim(A ∩ E_{i−1})` gives
//!
//! ```text
//! p_{i|s} = Σ_t Γ(t) / Δ,   Γ(t) = [i−1, t]₂ · Π_{j<ℓ−s−t} (2^ℓ − 2^{i+j}) / (2^{ℓ−s} − 2^{t+j}),
//! ```
//!
//! with `Δ = [ℓ, ℓ−s]₂`. The complementary event (`A` meets the new
//! direction) has its own positive sum, `Γ'(t) = [i−1, t]₂ · 2^{i−1−t} ·
//! Π_{j<ℓ−s−t−1} (2^ℓ − 2^{i+j}) / (2^{ℓ−s} − 2^{t+1+j})`, which lets both
//! `p` and `1 − p` be formed without cancellation.
//!
//! Everything is evaluated in log₂. Each factor `2^a − 2^b` contributes
//! exactly `a` to the integer part and `log₂(1 − 2^{b−a})` to the rest, so
//! `log₂ Γ(t)/Δ = t(i−1−t−s) + (small correction)` and
//! `log₂ Γ'(t)/Δ = (t+1)(i−1−t−s) + (small correction)`.

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::behavior::check_probability;
use crate::error::{Error, Result};
use crate::numeric::{binomial_pmf, log2_one_minus_pow2};

const MAX_ELL: usize = 64;

/// `S[k] = Σ_{y=1}^{k} log₂(1 − 2^{−y})`.
fn prefix() -> &'static [f64; MAX_ELL + 1] {
    static TABLE: OnceLock<[f64; MAX_ELL + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut s = [0.0; MAX_ELL + 1];
        for k in 1..=MAX_ELL {
            s[k] = s[k - 1] + log2_one_minus_pow2(-(k as i64));
        }
        s
    })
}

/// `Σ_{x=a}^{b} log₂(1 − 2^x)` for `−64 ≤ a`, `b ≤ −1`; zero when `a > b`.
#[inline]
fn range_sum(a: i64, b: i64) -> f64 {
    if a > b {
        return 0.0;
    }
    debug_assert!(a >= -(MAX_ELL as i64) && b <= -1);
    let s = prefix();
    s[(-a) as usize] - s[(-b - 1) as usize]
}

/// Non-integer part of `log₂ [n, k]₂`.
#[inline]
fn gauss_frac(n: i64, k: i64) -> f64 {
    range_sum(-n, k - 1 - n) - range_sum(-k, -1)
}

/// `log₂` of the Gaussian binomial `[n, k]₂`, the number of `k`-dimensional
/// subspaces of `F₂^n`.
pub fn gaussian_binomial_log2(n: usize, k: usize) -> Result<f64> {
    if n > MAX_ELL {
        return Err(Error::KernelSize(n));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    let (n, k) = (n as i64, k as i64);
    Ok((k * (n - k)) as f64 + gauss_frac(n, k))
}

/// Exact `[n, k]₂` when it fits in a `u128`.
pub fn gaussian_binomial_exact(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return None;
    }
    // Pascal-type recurrence [n,k] = [n−1,k−1] + 2^k [n−1,k].
    let mut row = vec![1u128];
    for m in 1..=n {
        let mut next = vec![1u128; m + 1];
        for j in 1..m {
            let shifted = row[j].checked_mul(1u128.checked_shl(j as u32)?)?;
            next[j] = row[j - 1].checked_add(shifted)?;
        }
        row = next;
    }
    Some(row[k])
}

fn check_index(ell: usize, i: usize, s: usize) -> Result<()> {
    if ell == 0 || ell > MAX_ELL {
        return Err(Error::KernelSize(ell));
    }
    if i == 0 || i > ell {
        return Err(Error::IndexOutOfRange { index: i, len: ell });
    }
    if s > ell {
        return Err(Error::IndexOutOfRange { index: s, len: ell + 1 });
    }
    Ok(())
}

fn sum_exp2(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return 0.0;
    }
    let scaled: f64 = crate::numeric::neumaier_sum(terms.iter().map(|t| (t - max).exp2()));
    scaled * max.exp2()
}

/// `(p_{i|s}, 1 − p_{i|s})`, each summed directly from positive terms.
pub fn p_given_s_pair(ell: usize, i: usize, s: usize) -> Result<(f64, f64)> {
    check_index(ell, i, s)?;
    let (l, i, s) = (ell as i64, i as i64, s as i64);
    let delta = gauss_frac(l, l - s);

    let t_lo = (i - s).max(0);
    let t_hi = (l - s).min(i - 1);
    debug_assert!(t_lo <= t_hi || s == 0, "empty range only at s = 0");
    let p = sum_exp2((t_lo..=t_hi).map(|t| {
        (t * (i - 1 - t - s)) as f64 + gauss_frac(i - 1, t) + range_sum(i - l, i - s - t - 1)
            - range_sum(t + s - l, -1)
            - delta
    }));

    let u_lo = (i - s - 1).max(0);
    let u_hi = (l - s - 1).min(i - 1);
    debug_assert!(u_lo <= u_hi || s == l, "empty range only at s = ℓ");
    let pc = sum_exp2((u_lo..=u_hi).map(|t| {
        ((t + 1) * (i - 1 - t - s)) as f64 + gauss_frac(i - 1, t) + range_sum(i - l, i - s - t - 2)
            - range_sum(t + 1 + s - l, -1)
            - delta
    }));
    Ok((p, pc))
}

/// Average conditional erasure probability `p_{i|s}` (1-based `i`).
///
/// Values above ½ are returned as `1 − (1 − p)` from the directly summed
/// complement, which keeps them correctly ordered against bounds of the form
/// `1 − 2^{−k}`.
pub fn p_given_s(ell: usize, i: usize, s: usize) -> Result<f64> {
    let (p, pc) = p_given_s_pair(ell, i, s)?;
    Ok(if p > 0.5 { 1.0 - pc } else { p })
}

/// Table of `p_{i|s}` and its complement for one `ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AvgConditionalTable {
    ell: usize,
    p: Vec<f64>,
    pc: Vec<f64>,
}

impl AvgConditionalTable {
    pub fn new(ell: usize) -> Result<Self> {
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::KernelSize(ell));
        }
        let mut p = Vec::with_capacity(ell * (ell + 1));
        let mut pc = Vec::with_capacity(ell * (ell + 1));
        for i in 1..=ell {
            for s in 0..=ell {
                let (a, b) = p_given_s_pair(ell, i, s)?;
                p.push(a);
                pc.push(b);
            }
        }
        Ok(AvgConditionalTable { ell, p, pc })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// `p_{i|s}` with the same rounding rule as [`p_given_s`].
    pub fn p(&self, i: usize, s: usize) -> f64 {
        let k = (i - 1) * (self.ell + 1) + s;
        if self.p[k] > 0.5 {
            1.0 - self.pc[k]
        } else {
            self.p[k]
        }
    }

    pub fn complement(&self, i: usize, s: usize) -> f64 {
        self.pc[(i - 1) * (self.ell + 1) + s]
    }

    /// `(F_i(z), 1 − F_i(z))`.
    pub fn eval_pair(&self, i: usize, z: f64) -> Result<(f64, f64)> {
        check_probability(z)?;
        if i == 0 || i > self.ell {
            return Err(Error::IndexOutOfRange { index: i, len: self.ell });
        }
        let w = binomial_pmf(self.ell, z, 1.0 - z);
        let row = (i - 1) * (self.ell + 1)..i * (self.ell + 1);
        let f = w.iter().zip(&self.p[row.clone()]).map(|(a, b)| a * b).sum();
        let fc = w.iter().zip(&self.pc[row]).map(|(a, b)| a * b).sum();
        Ok((f, fc))
    }

    pub fn eval(&self, i: usize, z: f64) -> Result<f64> {
        self.eval_pair(i, z).map(|(f, _)| f)
    }

    /// CSV with header `i,s,p`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,s,p")?;
        for i in 1..=self.ell {
            for s in 0..=self.ell {
                writeln!(out, "{},{},{:e}", i, s, self.p(i, s))?;
            }
        }
        Ok(())
    }

    /// CSV with header `i,z,F` over the given grid.
    pub fn write_eval_csv<W: Write>(&self, grid: &[f64], mut out: W) -> Result<()> {
        writeln!(out, "i,z,F")?;
        for i in 1..=self.ell {
            for &z in grid {
                writeln!(out, "{},{},{:e}", i, z, self.eval(i, z)?)?;
            }
        }
        Ok(())
    }
}

/// Average erasure probability `F_i(z) = Σ_s C(ℓ,s) z^s (1−z)^{ℓ−s} p_{i|s}`.
pub fn avg_f(ell: usize, i: usize, z: f64) -> Result<f64> {
    check_probability(z)?;
    check_index(ell, i, 0)?;
    let w = binomial_pmf(ell, z, 1.0 - z);
    let mut acc = 0.0;
    for (s, ws) in w.iter().enumerate() {
        acc += ws * p_given_s(ell, i, s)?;
    }
    Ok(acc)
}

/// `max(0, 1 − 2^{−(s−i)})`: nonvacuous only when `s > i`.
pub fn bound_p_lower(ell: usize, i: usize, s: usize) -> Result<f64> {
    check_index(ell, i, s)?;
    Ok((1.0 - (-(s as f64 - i as f64)).exp2()).max(0.0))
}

/// `min(1, 2 (2/3)^{i−s−1})`: nonvacuous only when `s < i − 1`.
pub fn bound_p_upper(ell: usize, i: usize, s: usize) -> Result<f64> {
    check_index(ell, i, s)?;
    Ok((2.0 * (2.0f64 / 3.0).powi(i as i32 - s as i32 - 1)).min(1.0))
}

/// Parameters of the two average-behavior bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub ell: usize,
    pub beta: f64,
    pub delta: f64,
    /// `⌊(δ log₂ℓ + log₂6) / (log₂3 − 1)⌋`.
    pub g_of_delta: u64,
}

impl BoundSpec {
    pub fn new(ell: usize, beta: f64, delta: f64) -> Result<Self> {
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::KernelSize(ell));
        }
        if !(beta > 0.0 && beta.is_finite() && delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta = {beta} and delta = {delta} must be positive")));
        }
        let g = ((delta * (ell as f64).log2() + 6f64.log2()) / (3f64.log2() - 1.0)).floor() as u64;
        Ok(BoundSpec { ell, beta, delta, g_of_delta: g })
    }

    fn hoeffding(&self) -> f64 {
        let l = self.ell as f64;
        (self.beta * l.ln() / (2.0 * l)).sqrt()
    }

    /// Smallest `z` above which the lower bound applies to index `i`.
    pub fn lower_threshold(&self, i: usize) -> f64 {
        let l = self.ell as f64;
        i as f64 / l + (self.delta * l.log2()).ceil() / l + self.hoeffding()
    }

    /// Largest `z` below which the upper bound applies to index `i`.
    pub fn upper_threshold(&self, i: usize) -> f64 {
        let l = self.ell as f64;
        i as f64 / l - self.g_of_delta as f64 / l - self.hoeffding()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    /// `F_i(z) > bound`.
    Lower,
    /// `F_i(z) < bound`.
    Upper,
    /// `z` lies in the transition window; neither bound applies.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundOutcome {
    pub side: BoundSide,
    pub bound: f64,
    pub applicable: bool,
}

/// Which average-behavior bound, if any, applies to `F_i(z)`.
pub fn bound_f(i: usize, z: f64, spec: &BoundSpec) -> Result<BoundOutcome> {
    check_index(spec.ell, i, 0)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Probability(z));
    }
    let l = spec.ell as f64;
    if z > spec.lower_threshold(i) {
        let bound = (1.0 - l.powf(-spec.beta)) * (1.0 - l.powf(-spec.delta));
        Ok(BoundOutcome { side: BoundSide::Lower, bound, applicable: true })
    } else if z < spec.upper_threshold(i) {
        let bound = l.powf(-spec.beta) + l.powf(-spec.delta);
        Ok(BoundOutcome { side: BoundSide::Upper, bound, applicable: true })
    } else {
        Ok(BoundOutcome { side: BoundSide::None, bound: f64::NAN, applicable: false })
    }
}
