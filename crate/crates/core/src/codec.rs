//! Polar codes on the erasure channel: construction from exact bit-channel
//! erasure probabilities, the Kronecker encoder, and successive-cancellation
//! decoding with trit messages.
//!
//! Indexing: `x = u · K^{⊗m}` with `K^{⊗m} = K ⊗ K^{⊗(m−1)}`. Writing
//! `u = (u^(0), …, u^(ℓ−1))` in blocks of `N = ℓ^{m−1}` and
//! `c^(r) = u^(r) · K^{⊗(m−1)}`, block `j` of `x` is `Σ_r K[r][j] c^(r)`, so
//! the outer kernel acts position-wise on `(c^(0)_t, …, c^(ℓ−1)_t)`. The most
//! significant base-ℓ digit of an index therefore selects the first
//! polarization step, matching [`crate::scaling::exact_bitchannel_erasures`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::{exact_behavior, Kernel, PolarizationBehavior};
use crate::error::{Error, Result};
use crate::gf2::{BitVec, WordBasis};
use crate::numeric::neumaier_sum;
use crate::scaling::{beta_constant, block_length, exact_bitchannel_pairs, DEFAULT_RECURSION_CAP};
use crate::seed::Seed;

/// Erasure-channel output symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

impl Symbol {
    pub fn known(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erased => None,
        }
    }
}

/// Symbols from two hex bitmaps (values, erasures); erased positions ignore
/// their value bit.
pub fn symbols_from_hex(n: usize, values: &str, erasures: &str) -> Result<Vec<Symbol>> {
    let v = BitVec::from_hex(n, values)?;
    let e = BitVec::from_hex(n, erasures)?;
    Ok((0..n).map(|i| if e.get(i) { Symbol::Erased } else { Symbol::known(v.get(i)) }).collect())
}

/// Inverse of [`symbols_from_hex`].
pub fn symbols_to_hex(y: &[Symbol]) -> (String, String) {
    let values: Vec<bool> = y.iter().map(|s| *s == Symbol::One).collect();
    let erased: Vec<bool> = y.iter().map(|s| *s == Symbol::Erased).collect();
    (BitVec::from_bools(&values).to_hex(), BitVec::from_bools(&erased).to_hex())
}

/// A polar code `(K, m, frozen set)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarCode {
    kernel: Kernel,
    m: u32,
    n: usize,
    frozen: BitVec,
    design_z: f64,
    target_pe: f64,
    p_digest: Option<String>,
}

impl PolarCode {
    /// Code from an explicit frozen mask (bit `i` set = `u_{i+1}` frozen to 0).
    pub fn new(kernel: Kernel, m: u32, frozen: BitVec, design_z: f64, target_pe: f64) -> Result<Self> {
        let n = block_length(kernel.size(), m, DEFAULT_RECURSION_CAP)?;
        if frozen.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: frozen.len() });
        }
        Ok(PolarCode { kernel, m, n, frozen, design_z, target_pe, p_digest: None })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frozen(&self) -> &BitVec {
        &self.frozen
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen.get(i)
    }

    pub fn design_z(&self) -> f64 {
        self.design_z
    }

    pub fn target_pe(&self) -> f64 {
        self.target_pe
    }

    /// Number of information bits.
    pub fn k(&self) -> usize {
        self.n - self.frozen.count_ones()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// 0-based indices of the unfrozen positions.
    pub fn info_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| !self.frozen.get(i)).collect()
    }

    pub fn p_digest(&self) -> Option<&str> {
        self.p_digest.as_deref()
    }

    pub fn to_file(&self) -> CodeFile {
        CodeFile {
            kernel: self.kernel.matrix().to_kernel_text(),
            m: self.m,
            n: self.n,
            frozen: self.frozen.to_hex(),
            design_z: self.design_z,
            target_pe: self.target_pe,
            p_digest: self.p_digest.clone(),
        }
    }

    pub fn from_file(file: &CodeFile) -> Result<Self> {
        let kernel = Kernel::parse(&file.kernel)?;
        let n = block_length(kernel.size(), file.m, DEFAULT_RECURSION_CAP)?;
        if n != file.n {
            return Err(Error::DimensionMismatch { expected: n, actual: file.n });
        }
        let frozen = BitVec::from_hex(n, &file.frozen)?;
        let mut code = PolarCode::new(kernel, file.m, frozen, file.design_z, file.target_pe)?;
        code.p_digest = file.p_digest.clone();
        Ok(code)
    }
}

/// On-disk form of a [`PolarCode`] (`code.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub kernel: String,
    pub m: u32,
    pub n: usize,
    /// Frozen mask, LSB-first hex.
    pub frozen: String,
    pub design_z: f64,
    pub target_pe: f64,
    /// SHA-256 of the little-endian bit-channel erasure probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionReport {
    pub p: Vec<f64>,
    pub union_bound: f64,
    pub rate: f64,
    pub gap: f64,
    pub beta: f64,
}

fn p_digest(p: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in p {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn finish(
    kernel: &Kernel,
    m: u32,
    p: Vec<f64>,
    frozen: BitVec,
    design_z: f64,
    target_pe: f64,
) -> Result<(PolarCode, ConstructionReport)> {
    let mut code = PolarCode::new(kernel.clone(), m, frozen, design_z, target_pe)?;
    code.p_digest = Some(p_digest(&p));
    let union_bound = neumaier_sum(code.info_indices().into_iter().map(|i| p[i]));
    let rate = code.rate();
    let report = ConstructionReport { p, union_bound, rate, gap: (1.0 - design_z) - rate, beta: beta_constant(target_pe) };
    Ok((code, report))
}

fn check_design(design_z: f64, target_pe: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&design_z) {
        return Err(Error::Probability(design_z));
    }
    if !(target_pe > 0.0) {
        return Err(Error::InvalidArgument(format!("target error probability {target_pe} must be positive")));
    }
    Ok(())
}

/// Union-bound construction: freeze every index with `p_i > P_e / n`, where
/// `p` is the exact bit-channel erasure vector at `design_z`.
pub fn construct_code(kernel: &Kernel, m: u32, design_z: f64, target_pe: f64) -> Result<(PolarCode, ConstructionReport)> {
    let b = exact_behavior(kernel)?;
    construct_code_with(kernel, &b, m, design_z, target_pe)
}

/// As [`construct_code`] with a precomputed behavior.
pub fn construct_code_with(
    kernel: &Kernel,
    behavior: &PolarizationBehavior,
    m: u32,
    design_z: f64,
    target_pe: f64,
) -> Result<(PolarCode, ConstructionReport)> {
    check_design(design_z, target_pe)?;
    let p: Vec<f64> = exact_bitchannel_pairs(behavior, design_z, m, DEFAULT_RECURSION_CAP)?.into_iter().map(|x| x.0).collect();
    let threshold = target_pe / p.len() as f64;
    let frozen: Vec<bool> = p.iter().map(|&v| v > threshold).collect();
    finish(kernel, m, p, BitVec::from_bools(&frozen), design_z, target_pe)
}

/// Fixed-rate construction: keep the `k` indices with the smallest `p_i`,
/// ties broken by lower index.
pub fn construct_fixed_rate(kernel: &Kernel, m: u32, design_z: f64, k: usize) -> Result<(PolarCode, ConstructionReport)> {
    let b = exact_behavior(kernel)?;
    check_design(design_z, 1.0)?;
    let p: Vec<f64> = exact_bitchannel_pairs(&b, design_z, m, DEFAULT_RECURSION_CAP)?.into_iter().map(|x| x.0).collect();
    if k > p.len() {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {}", p.len())));
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut frozen = vec![true; p.len()];
    for &i in &order[..k] {
        frozen[i] = false;
    }
    let pe = neumaier_sum(order[..k].iter().map(|&i| p[i]));
    finish(kernel, m, p, BitVec::from_bools(&frozen), design_z, pe.max(f64::MIN_POSITIVE))
}

/// `u · K^{⊗m}` computed axis by axis, never forming `K^{⊗m}`.
pub fn transform(kernel: &Kernel, m: u32, u: &BitVec) -> Result<BitVec> {
    let ell = kernel.size();
    let n = block_length(ell, m, usize::MAX)?;
    if u.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: u.len() });
    }
    let mut x = u.clone();
    let cols = kernel.columns();
    let mut stride = 1usize;
    for _ in 0..m {
        if stride.is_multiple_of(64) {
            apply_axis_words(x.words_mut(), cols, ell, stride / 64);
        } else {
            apply_axis_bits(&mut x, cols, ell, stride);
        }
        stride *= ell;
    }
    Ok(x)
}

/// Kernel along an axis whose stride is a whole number of words.
fn apply_axis_words(words: &mut [u64], cols: &[u64], ell: usize, stride_words: usize) {
    let group = ell * stride_words;
    let mut old = vec![0u64; ell];
    for block in words.chunks_mut(group) {
        for w in 0..stride_words {
            for (r, o) in old.iter_mut().enumerate() {
                *o = block[r * stride_words + w];
            }
            for (j, &col) in cols.iter().enumerate() {
                let mut acc = 0u64;
                let mut c = col;
                while c != 0 {
                    acc ^= old[c.trailing_zeros() as usize];
                    c &= c - 1;
                }
                block[j * stride_words + w] = acc;
            }
        }
    }
}

/// Kernel along an axis with a sub-word stride, one group at a time.
fn apply_axis_bits(x: &mut BitVec, cols: &[u64], ell: usize, stride: usize) {
    let n = x.len();
    let group = ell * stride;
    for base in (0..n).step_by(group) {
        for off in 0..stride {
            let mut v = 0u64;
            for r in 0..ell {
                v |= (x.get(base + r * stride + off) as u64) << r;
            }
            for (j, &col) in cols.iter().enumerate() {
                x.set(base + j * stride + off, (v & col).count_ones() & 1 == 1);
            }
        }
    }
}

/// Scatters `info` into the unfrozen positions (frozen = 0) and encodes.
pub fn encode(code: &PolarCode, info: &BitVec) -> Result<BitVec> {
    let k = code.k();
    if info.len() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: info.len() });
    }
    let mut u = BitVec::zeros(code.n);
    for (bit, i) in info.iter().zip(code.info_indices()) {
        if bit {
            u.set(i, true);
        }
    }
    transform(&code.kernel, code.m, &u)
}

/// Passes `x` through BEC(z): each position erased independently.
pub fn transmit_bec(x: &BitVec, z: f64, seed: Seed) -> Result<Vec<Symbol>> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Probability(z));
    }
    let mut rng = seed.rng();
    Ok(x.iter().map(|b| if rng.gen::<f64>() < z { Symbol::Erased } else { Symbol::known(b) }).collect())
}

/// Per-index decoder status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitStatus {
    Decoded,
    Erased,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    /// Estimated `u`; positions marked erased hold 0 (or the genie value).
    pub u: BitVec,
    pub status: Vec<BitStatus>,
    /// True iff every unfrozen index was decoded.
    pub success: bool,
}

impl DecodeOutcome {
    /// Information bits when decoding succeeded.
    pub fn info(&self, code: &PolarCode) -> Option<BitVec> {
        self.success.then(|| BitVec::from_bools(&code.info_indices().into_iter().map(|i| self.u.get(i)).collect::<Vec<_>>()))
    }
}

struct Decoder<'a> {
    cols: &'a [u64],
    ell: usize,
    frozen: &'a BitVec,
    genie: Option<&'a BitVec>,
    u: Vec<bool>,
    status: Vec<BitStatus>,
    failed: bool,
}

impl Decoder<'_> {
    /// Decodes `u[offset .. offset + y.len()]` from its channel messages and
    /// returns the re-encoded node output `c = u_block · K^{⊗level}`.
    fn node(&mut self, y: &[Symbol], offset: usize, level: u32) -> Vec<bool> {
        if level == 0 {
            let i = offset;
            let (bit, st) = if self.frozen.get(i) {
                (false, BitStatus::Decoded)
            } else if self.failed {
                (false, BitStatus::Erased)
            } else {
                match (y[0].value(), self.genie) {
                    (Some(b), _) => (b, BitStatus::Decoded),
                    (None, Some(truth)) => (truth.get(i), BitStatus::Erased),
                    (None, None) => {
                        self.failed = true;
                        (false, BitStatus::Erased)
                    }
                }
            };
            self.u[i] = bit;
            self.status[i] = st;
            return vec![bit];
        }
        let ell = self.ell;
        let half = y.len() / ell;
        // Per position: echelon basis of the unerased kernel columns, each
        // slot tagged with the set of outputs that sum to it.
        let mut slots = vec![(0u64, 0u64); half * ell];
        let mut occupied = vec![0u64; half];
        let mut xbits = vec![0u64; half];
        for t in 0..half {
            let mut basis = WordBasis::new();
            for j in 0..ell {
                if let Some(b) = y[j * half + t].value() {
                    xbits[t] |= (b as u64) << j;
                    basis.insert_tagged(self.cols[j], 1 << j);
                }
            }
            occupied[t] = basis.pivots();
            for r in 0..ell {
                if let Some(s) = basis.slot(r) {
                    slots[t * ell + r] = s;
                }
            }
        }
        let mut cbits = vec![0u64; half];
        let mut msg = vec![Symbol::Erased; half];
        for r in 0..ell {
            let low = (1u64 << r) - 1;
            for t in 0..half {
                msg[t] = if occupied[t] >> r & 1 == 1 {
                    let (vec, combo) = slots[t * ell + r];
                    let parity = (combo & xbits[t]).count_ones() + (vec & low & cbits[t]).count_ones();
                    Symbol::known(parity & 1 == 1)
                } else {
                    Symbol::Erased
                };
            }
            let c = self.node(&msg, offset + r * half, level - 1);
            for (t, &b) in c.iter().enumerate() {
                cbits[t] |= (b as u64) << r;
            }
        }
        let mut out = vec![false; y.len()];
        for (j, &col) in self.cols.iter().enumerate() {
            for t in 0..half {
                out[j * half + t] = (cbits[t] & col).count_ones() & 1 == 1;
            }
        }
        out
    }
}

fn run_decoder(code: &PolarCode, y: &[Symbol], genie: Option<&BitVec>) -> Result<DecodeOutcome> {
    if y.len() != code.n {
        return Err(Error::DimensionMismatch { expected: code.n, actual: y.len() });
    }
    if let Some(t) = genie {
        if t.len() != code.n {
            return Err(Error::DimensionMismatch { expected: code.n, actual: t.len() });
        }
    }
    let mut dec = Decoder {
        cols: code.kernel.columns(),
        ell: code.kernel.size(),
        frozen: &code.frozen,
        genie,
        u: vec![false; code.n],
        status: vec![BitStatus::Decoded; code.n],
        failed: false,
    };
    dec.node(y, 0, code.m);
    let success = (0..code.n).all(|i| code.frozen.get(i) || dec.status[i] == BitStatus::Decoded);
    Ok(DecodeOutcome { u: BitVec::from_bools(&dec.u), status: dec.status, success })
}

/// Successive-cancellation decoding. Stops at the first erased information
/// bit; every later information bit is then reported erased.
pub fn sc_decode(code: &PolarCode, y: &[Symbol]) -> Result<DecodeOutcome> {
    run_decoder(code, y, None)
}

/// Decoding where each erased information bit is reported as erased but then
/// replaced by its true value before continuing, so every index is judged
/// with all preceding bits known.
pub fn sc_decode_genie(code: &PolarCode, y: &[Symbol], truth: &BitVec) -> Result<DecodeOutcome> {
    run_decoder(code, y, Some(truth))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FerEstimate {
    pub trials: u64,
    pub failures: u64,
    pub fer: f64,
    /// Standard error of `fer`.
    pub se: f64,
    /// Decoded information bits that disagreed with the transmitted ones.
    pub wrong_bits: u64,
}

const FER_CHUNK: u64 = 4096;

/// Frame-erasure rate of [`sc_decode`] over BEC(z), transmitting the
/// all-zero codeword. Trial `t` uses `seed.child(t)`.
pub fn simulate_fer(code: &PolarCode, z: f64, trials: u64, seed: Seed) -> Result<FerEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Probability(z));
    }
    let zero = BitVec::zeros(code.n);
    let chunks = trials.div_ceil(FER_CHUNK);
    let parts: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut fail, mut wrong) = (0u64, 0u64);
            for t in c * FER_CHUNK..((c + 1) * FER_CHUNK).min(trials) {
                let y = transmit_bec(&zero, z, seed.child(t)).expect("z checked");
                let out = sc_decode(code, &y).expect("length matches");
                if !out.success {
                    fail += 1;
                }
                wrong += (0..code.n).filter(|&i| out.status[i] == BitStatus::Decoded && out.u.get(i)).count() as u64;
            }
            (fail, wrong)
        })
        .collect();
    let failures: u64 = parts.iter().map(|p| p.0).sum();
    let wrong_bits = parts.iter().map(|p| p.1).sum();
    let fer = failures as f64 / trials as f64;
    Ok(FerEstimate { trials, failures, fer, se: (fer * (1.0 - fer) / trials as f64).sqrt(), wrong_bits })
}

/// Per-index erasure frequency under genie-aided decoding with random
/// information bits; estimates the bit-channel erasure probabilities.
pub fn genie_erasure_rates(code: &PolarCode, z: f64, trials: u64, seed: Seed) -> Result<Vec<f64>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let n = code.n;
    let chunks = trials.div_ceil(FER_CHUNK);
    let parts: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = vec![0u64; n];
            for t in c * FER_CHUNK..((c + 1) * FER_CHUNK).min(trials) {
                let child = seed.child(t);
                let mut rng = child.child(1).rng();
                let info: Vec<bool> = (0..code.k()).map(|_| rng.gen()).collect();
                let info = BitVec::from_bools(&info);
                let mut u = BitVec::zeros(n);
                for (b, i) in info.iter().zip(code.info_indices()) {
                    u.set(i, b);
                }
                let x = encode(code, &info).expect("sizes match");
                let y = transmit_bec(&x, z, child).expect("z checked");
                let out = sc_decode_genie(code, &y, &u).expect("sizes match");
                for (i, st) in out.status.iter().enumerate() {
                    if *st == BitStatus::Erased {
                        counts[i] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0u64; n];
    for p in parts {
        total.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    Ok(total.into_iter().map(|c| c as f64 / trials as f64).collect())
}
