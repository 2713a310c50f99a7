//! Polarization behavior of a single kernel on the erasure channel.
//!
//! With input `u` and output `x = u·K`, erasing the outputs in a pattern `P`
//! leaves the columns of `K` outside `P`. Bit `u_i` is recoverable by
//! successive cancellation iff the span `V` of those columns meets
//! `E_i \ E_{i-1}`, i.e. iff `dim(V ∩ E_i) > dim(V ∩ E_{i-1})`. With an
//! echelon basis keyed by top coordinate that is just "`i − 1` is a pivot",
//! so a weight-`s` pattern leaves exactly `ℓ − dim V = s` undecodable bits.

use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::{sample_nonsingular, BitMatrix, WordBasis};
use crate::numeric::{binomial, binomial_pmf};
use crate::seed::Seed;

/// Largest kernel accepted by [`exact_behavior`] unless a cap is given.
pub const DEFAULT_EXACT_CAP: usize = 24;

/// A nonsingular ℓ×ℓ binary kernel, ℓ ≤ 64.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Kernel {
    matrix: BitMatrix,
    columns: Vec<u64>,
    polarizing: bool,
    id: String,
}

impl Kernel {
    pub fn new(matrix: BitMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        if matrix.rows() > 64 {
            return Err(Error::KernelSize(matrix.rows()));
        }
        let polarizing = matrix.is_polarizing()?;
        let columns = matrix.column_words()?;
        let digest = Sha256::digest(matrix.to_kernel_text().as_bytes());
        let id = hex::encode(&digest[..8]);
        Ok(Kernel { matrix, columns, polarizing, id })
    }

    /// The 2×2 kernel `[[1,0],[1,1]]`.
    pub fn arikan() -> Self {
        Kernel::new(BitMatrix::from_digits(&[&[1, 0], &[1, 1]]).expect("static")).expect("nonsingular")
    }

    pub fn identity(ell: usize) -> Result<Self> {
        Kernel::new(BitMatrix::identity(ell)?)
    }

    /// Uniformly random element of GL(ℓ, F₂).
    pub fn sample(ell: usize, seed: Seed) -> Result<Self> {
        Kernel::new(sample_nonsingular(ell, seed)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Kernel::new(BitMatrix::parse_kernel_text(text)?)
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// Column `j` packed as a word, bit `r` = entry `(r, j)`.
    pub fn columns(&self) -> &[u64] {
        &self.columns
    }

    pub fn is_polarizing(&self) -> bool {
        self.polarizing
    }

    /// Short content hash of the kernel text.
    pub fn id(&self) -> &str {
        &self.id
    }

    fn full_mask(&self) -> u64 {
        full_mask(self.size())
    }
}

#[inline]
fn full_mask(ell: usize) -> u64 {
    if ell == 64 {
        u64::MAX
    } else {
        (1u64 << ell) - 1
    }
}

/// Set of erased output positions (bit `j` = output `j + 1` erased).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ErasurePattern {
    mask: u64,
}

impl ErasurePattern {
    pub fn new(ell: usize, mask: u64) -> Result<Self> {
        if mask & !full_mask(ell) != 0 {
            return Err(Error::InvalidArgument(format!("pattern {mask:#x} exceeds {ell} positions")));
        }
        Ok(ErasurePattern { mask })
    }

    /// Pattern from 1-based output positions.
    pub fn from_positions(ell: usize, positions: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &p in positions {
            if p == 0 || p > ell {
                return Err(Error::IndexOutOfRange { index: p, len: ell });
            }
            mask |= 1 << (p - 1);
        }
        Ok(ErasurePattern { mask })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn weight(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

/// Bitmask of input indices (bit `i − 1` for `u_i`) that successive
/// cancellation cannot recover under the given erasure mask.
pub fn undecodable_mask(kernel: &Kernel, erased: u64) -> u64 {
    let mut basis = WordBasis::new();
    let mut kept = kernel.full_mask() & !erased;
    while kept != 0 {
        let j = kept.trailing_zeros() as usize;
        kept &= kept - 1;
        basis.insert(kernel.columns[j]);
    }
    kernel.full_mask() & !basis.pivots()
}

/// Whether `u_i` (1-based) is recoverable given the unerased outputs and
/// `u_1..u_{i-1}`.
pub fn is_decodable(kernel: &Kernel, i: usize, pattern: ErasurePattern) -> Result<bool> {
    if i == 0 || i > kernel.size() {
        return Err(Error::IndexOutOfRange { index: i, len: kernel.size() });
    }
    Ok(undecodable_mask(kernel, pattern.mask) >> (i - 1) & 1 == 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BehaviorMode {
    Exact,
    MonteCarlo { samples_per_weight: u64 },
}

impl std::fmt::Display for BehaviorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BehaviorMode::Exact => write!(f, "exact"),
            BehaviorMode::MonteCarlo { samples_per_weight } => write!(f, "mc:{samples_per_weight}"),
        }
    }
}

/// Undecodable-pattern counts `c[i][s]` for each input index and erasure
/// weight, plus the number of weight-`s` patterns examined.
///
/// In exact mode `patterns[s] = C(ℓ, s)` and `c[i][s]` is the exact count.
/// In Monte-Carlo mode each stratum holds hit counts over the sampled
/// patterns; `q_{i|s} = c[i][s] / patterns[s]` is the estimate either way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizationBehavior {
    ell: usize,
    undecodable: Vec<u64>,
    patterns: Vec<u64>,
    mode: BehaviorMode,
    kernel_id: String,
}

impl PolarizationBehavior {
    /// Exact behavior from a count table `counts[i-1][s]`.
    pub fn from_exact_counts(counts: &[Vec<u64>], kernel_id: impl Into<String>) -> Result<Self> {
        let ell = counts.len();
        if ell == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut undecodable = Vec::with_capacity(ell * (ell + 1));
        for row in counts {
            if row.len() != ell + 1 {
                return Err(Error::DimensionMismatch { expected: ell + 1, actual: row.len() });
            }
            for (s, &c) in row.iter().enumerate() {
                if c > binomial(ell, s) {
                    return Err(Error::InvalidArgument(format!("count {c} exceeds C({ell},{s})")));
                }
            }
            undecodable.extend_from_slice(row);
        }
        let patterns = (0..=ell).map(|s| binomial(ell, s)).collect();
        Ok(PolarizationBehavior { ell, undecodable, patterns, mode: BehaviorMode::Exact, kernel_id: kernel_id.into() })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn mode(&self) -> BehaviorMode {
        self.mode
    }

    pub fn kernel_id(&self) -> &str {
        &self.kernel_id
    }

    /// Raw count for `u_i` (1-based) and weight `s`.
    pub fn count(&self, i: usize, s: usize) -> u64 {
        self.undecodable[(i - 1) * (self.ell + 1) + s]
    }

    pub fn patterns(&self, s: usize) -> u64 {
        self.patterns[s]
    }

    /// `q_{i|s}`: fraction of weight-`s` patterns leaving `u_i` undecodable.
    pub fn q(&self, i: usize, s: usize) -> f64 {
        self.count(i, s) as f64 / self.patterns[s] as f64
    }

    /// Count table as rows `counts[i-1][s]`.
    pub fn counts(&self) -> Vec<Vec<u64>> {
        self.undecodable.chunks(self.ell + 1).map(|c| c.to_vec()).collect()
    }

    /// `f_{K,i}(z)`.
    pub fn eval_f(&self, i: usize, z: f64) -> Result<f64> {
        check_probability(z)?;
        if i == 0 || i > self.ell {
            return Err(Error::IndexOutOfRange { index: i, len: self.ell });
        }
        Ok(self.eval_pair(i, z, 1.0 - z).0)
    }

    /// `(f_{K,i}(z), 1 − f_{K,i}(z))` with `zc = 1 − z` supplied separately;
    /// the complement is summed directly so neither side loses precision.
    pub fn eval_pair(&self, i: usize, z: f64, zc: f64) -> (f64, f64) {
        let w = binomial_pmf(self.ell, z, zc);
        self.pair_from_weights(i, &w)
    }

    /// `(f, 1 − f)` for every index from one set of binomial weights.
    pub fn eval_all(&self, z: f64, zc: f64) -> Vec<(f64, f64)> {
        let w = binomial_pmf(self.ell, z, zc);
        (1..=self.ell).map(|i| self.pair_from_weights(i, &w)).collect()
    }

    #[inline]
    fn pair_from_weights(&self, i: usize, w: &[f64]) -> (f64, f64) {
        let row = &self.undecodable[(i - 1) * (self.ell + 1)..i * (self.ell + 1)];
        let mut f = 0.0;
        let mut fc = 0.0;
        for ((&c, &n), &ws) in row.iter().zip(&self.patterns).zip(w) {
            let n = n as f64;
            let c = c as f64;
            f += ws * (c / n);
            fc += ws * ((n - c) / n);
        }
        (f, fc)
    }

    /// CSV with header `i,s,count,total_patterns,mode`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,s,count,total_patterns,mode")?;
        for i in 1..=self.ell {
            for s in 0..=self.ell {
                writeln!(out, "{},{},{},{},{}", i, s, self.count(i, s), self.patterns[s], self.mode)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_probability(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::Probability(z))
    }
}

/// Exact behavior by enumerating all `2^ℓ` erasure patterns (ℓ ≤ 24).
pub fn exact_behavior(kernel: &Kernel) -> Result<PolarizationBehavior> {
    exact_behavior_capped(kernel, DEFAULT_EXACT_CAP)
}

/// Exact enumeration with a caller-chosen size cap.
///
/// Patterns are visited depth-first over columns, each level inserting one
/// column into an incremental echelon basis and undoing it on the way back,
/// so every pattern costs O(ℓ) word operations instead of a fresh elimination.
pub fn exact_behavior_capped(kernel: &Kernel, cap: usize) -> Result<PolarizationBehavior> {
    let ell = kernel.size();
    if ell > cap.min(63) {
        return Err(Error::ExactCapExceeded { ell, cap });
    }
    let stride = ell + 1;
    let split = if ell >= 14 { 8.min(ell) } else { 0 };

    let run_prefix = |prefix: u64| -> Vec<u64> {
        let mut counts = vec![0u64; ell * stride];
        let mut basis = WordBasis::new();
        for j in 0..split {
            if prefix >> j & 1 == 0 {
                basis.insert(kernel.columns[j]);
            }
        }
        let mut walker = Walker { cols: &kernel.columns, ell, full: kernel.full_mask(), counts: &mut counts };
        walker.descend(split, prefix, &mut basis);
        counts
    };

    let counts = if split == 0 {
        run_prefix(0)
    } else {
        (0..1u64 << split)
            .into_par_iter()
            .map(run_prefix)
            .reduce(|| vec![0u64; ell * stride], |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            })
    };
    Ok(PolarizationBehavior {
        ell,
        undecodable: counts,
        patterns: (0..=ell).map(|s| binomial(ell, s)).collect(),
        mode: BehaviorMode::Exact,
        kernel_id: kernel.id.clone(),
    })
}

struct Walker<'a> {
    cols: &'a [u64],
    ell: usize,
    full: u64,
    counts: &'a mut [u64],
}

impl Walker<'_> {
    fn descend(&mut self, j: usize, erased: u64, basis: &mut WordBasis) {
        if j == self.ell {
            let s = erased.count_ones() as usize;
            let mut und = self.full & !basis.pivots();
            while und != 0 {
                let i = und.trailing_zeros() as usize;
                und &= und - 1;
                self.counts[i * (self.ell + 1) + s] += 1;
            }
            return;
        }
        match basis.insert(self.cols[j]) {
            Some(t) => {
                self.descend(j + 1, erased, basis);
                basis.remove_slot(t);
            }
            None => self.descend(j + 1, erased, basis),
        }
        self.descend(j + 1, erased | 1 << j, basis);
    }
}

/// Monte-Carlo behavior: for each weight `s`, draw `samples_per_weight`
/// uniform weight-`s` patterns. Strata with at most that many patterns are
/// enumerated exactly instead. Stratum `s` uses seed `seed.child(s)`, so the
/// result does not depend on thread count.
pub fn mc_behavior(kernel: &Kernel, samples_per_weight: u64, seed: Seed) -> Result<PolarizationBehavior> {
    if samples_per_weight == 0 {
        return Err(Error::InvalidArgument("samples_per_weight must be at least 1".into()));
    }
    let ell = kernel.size();
    let full = kernel.full_mask();
    let strata: Vec<(Vec<u64>, u64)> = (0..=ell)
        .into_par_iter()
        .map(|s| {
            let mut hits = vec![0u64; ell];
            let mut tally = |erased: u64| {
                let mut und = undecodable_mask(kernel, erased);
                while und != 0 {
                    hits[und.trailing_zeros() as usize] += 1;
                    und &= und - 1;
                }
            };
            let total = binomial(ell, s);
            if total <= samples_per_weight {
                for_each_weight_mask(ell, s, &mut tally);
                (hits, total)
            } else {
                let mut rng = seed.child(s as u64).rng();
                for _ in 0..samples_per_weight {
                    let erased = index::sample(&mut rng, ell, s).iter().fold(0u64, |m, j| m | 1 << j);
                    tally(erased & full);
                }
                (hits, samples_per_weight)
            }
        })
        .collect();

    let stride = ell + 1;
    let mut undecodable = vec![0u64; ell * stride];
    let mut patterns = vec![0u64; stride];
    for (s, (hits, total)) in strata.into_iter().enumerate() {
        patterns[s] = total;
        for (i, h) in hits.into_iter().enumerate() {
            undecodable[i * stride + s] = h;
        }
    }
    Ok(PolarizationBehavior {
        ell,
        undecodable,
        patterns,
        mode: BehaviorMode::MonteCarlo { samples_per_weight },
        kernel_id: kernel.id.clone(),
    })
}

/// Visits every `ell`-bit mask of weight `s` (Gosper's hack).
fn for_each_weight_mask(ell: usize, s: usize, mut visit: impl FnMut(u64)) {
    if s == 0 {
        visit(0);
        return;
    }
    let limit: u128 = 1u128 << ell;
    let mut v: u128 = (1u128 << s) - 1;
    while v < limit {
        visit(v as u64);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
}

/// Behavior from the best available route: exact up to the cap, sampled above.
pub fn behavior_auto(kernel: &Kernel, samples_per_weight: u64, seed: Seed) -> Result<PolarizationBehavior> {
    if kernel.size() <= DEFAULT_EXACT_CAP {
        exact_behavior(kernel)
    } else {
        mc_behavior(kernel, samples_per_weight, seed)
    }
}
