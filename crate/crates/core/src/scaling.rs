//! Scaling-exponent machinery: `g_α`, the contraction factor `λ_{α,K}(z)`
//! and its supremum, the erasure process `Z_m`, the exact bit-channel
//! recursion, and three estimators of the scaling exponent `μ`.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::behavior::PolarizationBehavior;
use crate::error::{Error, Result};
use crate::numeric::neumaier_sum;
use crate::seed::Seed;

/// Default cap on `ℓ^m` for the exact recursion.
pub const DEFAULT_RECURSION_CAP: usize = 1 << 24;

/// `g_α(z) = z^α (1 − z)^α`.
pub fn g_alpha(z: f64, alpha: f64) -> f64 {
    g_alpha_pair(z, 1.0 - z, alpha)
}

/// `g_α` from a `(z, 1 − z)` pair.
pub fn g_alpha_pair(z: f64, zc: f64, alpha: f64) -> f64 {
    if z <= 0.0 || zc <= 0.0 {
        0.0
    } else {
        (alpha * (z.ln() + zc.ln())).exp()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// `λ_{α,K}(z) = (1/ℓ) Σ_i g_α(f_i(z)) / g_α(z)` for `z ∈ (0, 1)`.
pub fn lambda_at(b: &PolarizationBehavior, alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Probability(z));
    }
    Ok(lambda_pair(b, alpha, z, 1.0 - z))
}

/// As [`lambda_at`] with `1 − z` supplied, for points very close to 1.
fn lambda_pair(b: &PolarizationBehavior, alpha: f64, z: f64, zc: f64) -> f64 {
    let base = z.ln() + zc.ln();
    let terms = b.eval_all(z, zc).into_iter().map(|(f, fc)| {
        if f <= 0.0 || fc <= 0.0 {
            0.0
        } else {
            (alpha * (f.ln() + fc.ln() - base)).exp()
        }
    });
    neumaier_sum(terms) / b.ell() as f64
}

/// Supremum search settings for [`lambda_star`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Uniform interior points.
    pub interior: usize,
    /// Geometric points in each of `(0, ℓ^{−2})` and `(1 − ℓ^{−2}, 1)`.
    pub tail_points: usize,
    /// Smallest distance to an endpoint probed by the tail grids.
    pub tail_floor: f64,
    /// Golden-section stopping width.
    pub refine_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { interior: 4096, tail_points: 128, tail_floor: 1e-14, refine_tol: 1e-10 }
    }
}

/// A point of a λ scan, stored as `(z, 1 − z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Probe {
    z: f64,
    zc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaScan {
    pub alpha: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda_star: f64,
    pub argmax_z: f64,
}

impl LambdaScan {
    /// CSV with header `z,lambda`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z,lambda")?;
        for (z, l) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{z:e},{l:e}")?;
        }
        Ok(())
    }
}

/// `λ*_{α,K} = sup_{z∈(0,1)} λ_{α,K}(z)`, by a uniform grid, geometric tail
/// grids and golden-section refinement around the best grid point.
pub fn lambda_star(b: &PolarizationBehavior, alpha: f64, spec: &GridSpec) -> Result<LambdaScan> {
    check_alpha(alpha)?;
    if spec.interior < 2 || !(spec.tail_floor > 0.0) {
        return Err(Error::InvalidArgument("grid needs at least 2 interior points and a positive tail floor".into()));
    }
    let ell = b.ell() as f64;
    let edge = (1.0 / (ell * ell)).min(0.25);
    let mut probes = Vec::with_capacity(spec.interior + 2 * spec.tail_points);
    if spec.tail_points > 0 && spec.tail_floor < edge {
        let (lo, hi) = (spec.tail_floor.ln(), edge.ln());
        for k in 0..spec.tail_points {
            let w = (lo + (hi - lo) * k as f64 / spec.tail_points as f64).exp();
            probes.push(Probe { z: w, zc: 1.0 - w });
            probes.push(Probe { z: 1.0 - w, zc: w });
        }
    }
    let n = spec.interior;
    for k in 1..=n {
        let z = k as f64 / (n + 1) as f64;
        probes.push(Probe { z, zc: 1.0 - z });
    }
    probes.sort_by(|a, b| a.z.total_cmp(&b.z).then(b.zc.total_cmp(&a.zc)));

    let values: Vec<f64> = probes.par_iter().map(|p| lambda_pair(b, alpha, p.z, p.zc)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |acc, (k, v)| if *v > values[acc] { k } else { acc });

    let mut star = values[best];
    let mut arg = probes[best];
    let left = if best > 0 { probes[best - 1] } else { Probe { z: probes[0].z * 0.5, zc: 1.0 - probes[0].z * 0.5 } };
    let right = if best + 1 < probes.len() {
        probes[best + 1]
    } else {
        let w = probes[best].zc * 0.5;
        Probe { z: 1.0 - w, zc: w }
    };
    let refined = golden_max(b, alpha, left, right, spec.refine_tol);
    if refined.1 > star {
        arg = refined.0;
        star = refined.1;
    }
    Ok(LambdaScan {
        alpha,
        grid: probes.iter().map(|p| p.z).collect(),
        values,
        lambda_star: star,
        argmax_z: arg.z,
    })
}

/// Golden-section search for a maximum of λ between two probes. Works in the
/// `z` coordinate on the lower half and in `1 − z` on the upper half.
fn golden_max(b: &PolarizationBehavior, alpha: f64, a: Probe, c: Probe, tol: f64) -> (Probe, f64) {
    let upper = a.z > 0.5;
    let (mut lo, mut hi) = if upper { (c.zc, a.zc) } else { (a.z, c.z) };
    let probe = |x: f64| if upper { Probe { z: 1.0 - x, zc: x } } else { Probe { z: x, zc: 1.0 - x } };
    let eval = |x: f64| {
        let p = probe(x);
        lambda_pair(b, alpha, p.z, p.zc)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let mut iters = 0;
    while (hi - lo) > tol * lo.abs().max(1e-300).max(tol) && iters < 200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        }
        iters += 1;
    }
    if f1 >= f2 {
        (probe(x1), f1)
    } else {
        (probe(x2), f2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMethod {
    LambdaBound,
    PowerIteration,
    EmpiricalFit,
}

/// One row of an empirical fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub m: u32,
    pub n: u64,
    pub rate: f64,
    pub gap: f64,
    pub union_bound: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MuDiagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub rows: Vec<FitRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub method: MuMethod,
    pub mu: f64,
    pub diagnostics: MuDiagnostics,
}

/// `β = (1 + 2 P_e^{−0.01})³`.
pub fn beta_constant(pe: f64) -> f64 {
    (1.0 + 2.0 * pe.powf(-0.01)).powi(3)
}

/// `μ = 1 / (ρ − α)` with `ρ = −log_ℓ λ*`. `pe`, when given, adds the
/// constants `c₁ = 2 P_e^{−α} + P_e` and `β` to the diagnostics.
pub fn mu_from_lambda(lambda_star: f64, alpha: f64, ell: usize, pe: Option<f64>) -> Result<MuEstimate> {
    check_alpha(alpha)?;
    if ell < 2 {
        return Err(Error::KernelSize(ell));
    }
    if !(lambda_star > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda* = {lambda_star} must be positive")));
    }
    let rho = -lambda_star.ln() / (ell as f64).ln();
    if rho <= alpha {
        return Err(Error::VacuousBound { rho, alpha });
    }
    let diagnostics = MuDiagnostics {
        lambda: Some(lambda_star),
        rho: Some(rho),
        alpha: Some(alpha),
        c1: pe.map(|p| 2.0 * p.powf(-alpha) + p),
        beta: pe.map(beta_constant),
        ..Default::default()
    };
    Ok(MuEstimate { method: MuMethod::LambdaBound, mu: 1.0 / (rho - alpha), diagnostics })
}

const POWER_MAX_ITERS: usize = 20_000;

/// Dominant eigenvalue of `(T h)(z) = (1/ℓ) Σ_i h(f_i(z))` on functions
/// vanishing at 0 and 1, by power iteration; `μ = −ln ℓ / ln λ`.
///
/// `h` lives on the Chebyshev–Lobatto grid `z_k = (1 − cos(πk/N))/2`, which
/// clusters points at the endpoints where the eigenfunction is steep, and is
/// evaluated between nodes by linear interpolation. The iteration starts from
/// `√(z(1−z))` and renormalises by the sup norm each step.
pub fn mu_power_iteration(b: &PolarizationBehavior, grid_size: usize, tol: f64) -> Result<MuEstimate> {
    if grid_size < 2048 {
        return Err(Error::InvalidArgument(format!("grid_size = {grid_size} below the minimum 2048")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let ell = b.ell();
    if ell < 2 {
        return Err(Error::KernelSize(ell));
    }
    let n = grid_size;
    let pi = std::f64::consts::PI;
    let theta = |k: usize| pi * k as f64 / n as f64;
    let nodes: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let s = (theta(k) / 2.0).sin();
            let c = (theta(k) / 2.0).cos();
            (s * s, c * c)
        })
        .collect();

    // (left node, weight of right node) for every (k, i).
    let locate = |f: f64, fc: f64| -> (usize, f64) {
        let t = if f <= 0.5 { 2.0 * f.max(0.0).sqrt().asin() } else { pi - 2.0 * fc.max(0.0).sqrt().asin() };
        let pos = (t / pi * n as f64).clamp(0.0, n as f64);
        let j = (pos.floor() as usize).min(n - 1);
        let (zl, zr) = (nodes[j].0, nodes[j + 1].0);
        let w = if zr > zl { ((f - zl) / (zr - zl)).clamp(0.0, 1.0) } else { 0.0 };
        (j, w)
    };
    let interp: Vec<(usize, f64)> = nodes
        .par_iter()
        .flat_map_iter(|&(z, zc)| b.eval_all(z, zc).into_iter().map(|(f, fc)| locate(f, fc)).collect::<Vec<_>>())
        .collect();

    let mut h: Vec<f64> = nodes.iter().map(|&(z, zc)| (z * zc).sqrt()).collect();
    let mut next = vec![0.0; n + 1];
    let mut lambda = f64::NAN;
    let mut step = f64::INFINITY;
    for iter in 1..=POWER_MAX_ITERS {
        for k in 1..n {
            let row = &interp[k * ell..(k + 1) * ell];
            let acc: f64 = row.iter().map(|&(j, w)| h[j] * (1.0 - w) + h[j + 1] * w).sum();
            next[k] = acc / ell as f64;
        }
        next[0] = 0.0;
        next[n] = 0.0;
        let sup = next.iter().copied().fold(0.0, f64::max);
        if !(sup > 0.0) {
            return Err(Error::NoConvergence { iterations: iter, last_step: f64::NAN });
        }
        // h is sup-normalised, so the growth factor is just the new sup.
        let new_lambda = sup;
        step = (new_lambda - lambda).abs();
        lambda = new_lambda;
        for (dst, src) in h.iter_mut().zip(&next) {
            *dst = src / sup;
        }
        if step < tol {
            if lambda >= 1.0 - 1e-9 {
                return Err(Error::NotPolarizing(lambda));
            }
            let mu = -(ell as f64).ln() / lambda.ln();
            let diagnostics = MuDiagnostics {
                lambda: Some(lambda),
                iterations: Some(iter),
                grid_size: Some(n),
                ..Default::default()
            };
            return Ok(MuEstimate { method: MuMethod::PowerIteration, mu, diagnostics });
        }
    }
    if lambda >= 1.0 - 1e-9 {
        return Err(Error::NotPolarizing(lambda));
    }
    Err(Error::NoConvergence { iterations: POWER_MAX_ITERS, last_step: step })
}

/// Statistics of `Z_m` at one depth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessStats {
    pub m: u32,
    pub trials: u64,
    pub z0: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub mean_z: f64,
    /// Standard error of `mean_z`.
    pub se_z: f64,
    pub mean_g: f64,
    /// Standard error of `mean_g`.
    pub se_g: f64,
    /// Fraction with `Z_m < ε`.
    pub tail_low: f64,
    /// Fraction with `ε ≤ Z_m ≤ 1 − ε`.
    pub tail_mid: f64,
    /// Fraction with `Z_m > 1 − ε`.
    pub tail_high: f64,
}

impl ProcessStats {
    /// Standard error of a tail fraction `p`.
    pub fn fraction_se(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Settings for [`simulate_process`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub z0: f64,
    pub m: u32,
    pub trials: u64,
    pub alpha: f64,
    pub epsilon: f64,
}

#[derive(Clone, Default)]
struct Accum {
    sum_z: Vec<f64>,
    sq_z: Vec<f64>,
    sum_g: Vec<f64>,
    sq_g: Vec<f64>,
    low: Vec<u64>,
    high: Vec<u64>,
}

impl Accum {
    fn new(steps: usize) -> Self {
        Accum {
            sum_z: vec![0.0; steps],
            sq_z: vec![0.0; steps],
            sum_g: vec![0.0; steps],
            sq_g: vec![0.0; steps],
            low: vec![0; steps],
            high: vec![0; steps],
        }
    }

    fn add(&mut self, other: &Accum) {
        for k in 0..self.sum_z.len() {
            self.sum_z[k] += other.sum_z[k];
            self.sq_z[k] += other.sq_z[k];
            self.sum_g[k] += other.sum_g[k];
            self.sq_g[k] += other.sq_g[k];
            self.low[k] += other.low[k];
            self.high[k] += other.high[k];
        }
    }
}

const PROCESS_CHUNK: u64 = 1024;

/// Simulates `Z_{m+1} = f_{K,B_m}(Z_m)` with `B_m` uniform on `[ℓ]` and
/// returns statistics for every depth `0..=m`. Trial `t` draws from
/// `seed.child(t)`, and chunks are merged in a fixed order, so results do
/// not depend on the thread count.
pub fn simulate_process(b: &PolarizationBehavior, cfg: &ProcessConfig, seed: Seed) -> Result<Vec<ProcessStats>> {
    check_alpha(cfg.alpha)?;
    if !(cfg.z0 > 0.0 && cfg.z0 < 1.0) {
        return Err(Error::Probability(cfg.z0));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(cfg.epsilon >= 0.0 && cfg.epsilon < 0.5) {
        return Err(Error::InvalidArgument(format!("epsilon = {} must lie in [0, 1/2)", cfg.epsilon)));
    }
    let steps = cfg.m as usize + 1;
    let ell = b.ell();
    let chunks = cfg.trials.div_ceil(PROCESS_CHUNK);
    let parts: Vec<Accum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accum::new(steps);
            let end = ((c + 1) * PROCESS_CHUNK).min(cfg.trials);
            for t in c * PROCESS_CHUNK..end {
                let mut rng = seed.child(t).rng();
                let (mut z, mut zc) = (cfg.z0, 1.0 - cfg.z0);
                for k in 0..steps {
                    if k > 0 {
                        let i = rng.gen_range(1..=ell);
                        (z, zc) = b.eval_pair(i, z, zc);
                    }
                    let g = g_alpha_pair(z, zc, cfg.alpha);
                    acc.sum_z[k] += z;
                    acc.sq_z[k] += z * z;
                    acc.sum_g[k] += g;
                    acc.sq_g[k] += g * g;
                    if z < cfg.epsilon {
                        acc.low[k] += 1;
                    } else if zc < cfg.epsilon {
                        acc.high[k] += 1;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = Accum::new(steps);
    for p in &parts {
        total.add(p);
    }
    let n = cfg.trials as f64;
    let se = |sum: f64, sq: f64| {
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0) / n).sqrt()
    };
    Ok((0..steps)
        .map(|k| {
            let low = total.low[k] as f64 / n;
            let high = total.high[k] as f64 / n;
            ProcessStats {
                m: k as u32,
                trials: cfg.trials,
                z0: cfg.z0,
                alpha: cfg.alpha,
                epsilon: cfg.epsilon,
                mean_z: total.sum_z[k] / n,
                se_z: se(total.sum_z[k], total.sq_z[k]),
                mean_g: total.sum_g[k] / n,
                se_g: se(total.sum_g[k], total.sq_g[k]),
                tail_low: low,
                tail_mid: (cfg.trials - total.low[k] - total.high[k]) as f64 / n,
                tail_high: high,
            }
        })
        .collect())
}

/// CSV with header `m,mean_g,tail_low,tail_mid,tail_high,ci`, where `ci` is
/// the 95% normal radius `1.96 · se` of `mean_g`.
pub fn write_process_csv<W: Write>(stats: &[ProcessStats], mut out: W) -> std::io::Result<()> {
    writeln!(out, "m,mean_g,tail_low,tail_mid,tail_high,ci")?;
    for s in stats {
        writeln!(out, "{},{:e},{},{},{},{:e}", s.m, s.mean_g, s.tail_low, s.tail_mid, s.tail_high, 1.96 * s.se_g)?;
    }
    Ok(())
}

/// `ℓ^m` if it is at most `cap`.
pub fn block_length(ell: usize, m: u32, cap: usize) -> Result<usize> {
    let n = (ell as u128).checked_pow(m).filter(|&n| n <= cap as u128);
    n.map(|n| n as usize).ok_or(Error::SizeOverflow {
        size: (ell as u128).checked_pow(m).unwrap_or(u128::MAX),
        cap: cap as u128,
    })
}

/// One level of the recursion: entry `a·ℓ + k` of the output is
/// `f_{k+1}` applied to entry `a` of the input.
fn recursion_level(b: &PolarizationBehavior, cur: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let ell = b.ell();
    let mut next = vec![(0.0, 0.0); cur.len() * ell];
    next.par_chunks_mut(ell)
        .zip(cur.par_iter())
        .with_min_len(256)
        .for_each(|(dst, &(z, zc))| dst.copy_from_slice(&b.eval_all(z, zc)));
    next
}

/// Exact bit-channel erasure probabilities as `(p, 1 − p)` pairs.
///
/// Entry `i` (0-based) applies `f_{d_1+1}, …, f_{d_m+1}` to `z₀` in that
/// order, where `d_1 … d_m` are the base-ℓ digits of `i`, most significant
/// first.
pub fn exact_bitchannel_pairs(b: &PolarizationBehavior, z0: f64, m: u32, cap: usize) -> Result<Vec<(f64, f64)>> {
    if !(0.0..=1.0).contains(&z0) {
        return Err(Error::Probability(z0));
    }
    block_length(b.ell(), m, cap)?;
    let mut cur = vec![(z0, 1.0 - z0)];
    for _ in 0..m {
        cur = recursion_level(b, &cur);
    }
    Ok(cur)
}

/// Exact bit-channel erasure probabilities for block length `ℓ^m`, capped at
/// [`DEFAULT_RECURSION_CAP`].
pub fn exact_bitchannel_erasures(b: &PolarizationBehavior, z0: f64, m: u32) -> Result<Vec<f64>> {
    Ok(exact_bitchannel_pairs(b, z0, m, DEFAULT_RECURSION_CAP)?.into_iter().map(|(p, _)| p).collect())
}

fn fit_row(p: &[(f64, f64)], m: u32, z0: f64, pe: f64) -> FitRow {
    let n = p.len();
    let threshold = pe / n as f64;
    let good: Vec<f64> = p.iter().filter(|(q, _)| *q <= threshold).map(|(q, _)| *q).collect();
    let rate = good.len() as f64 / n as f64;
    FitRow { m, n: n as u64, rate, gap: (1.0 - z0) - rate, union_bound: neumaier_sum(good) }
}

/// Fits `ln n ≈ μ · ln(1/gap) + c` by least squares over the given depths,
/// where `gap = (1 − z₀) − R(m)` and `R(m)` is the fraction of bit-channels
/// with erasure probability at most `P_e / n`.
pub fn empirical_mu_fit(b: &PolarizationBehavior, z0: f64, pe: f64, ms: RangeInclusive<u32>) -> Result<MuEstimate> {
    if !(z0 > 0.0 && z0 < 1.0) {
        return Err(Error::Probability(z0));
    }
    if !(pe > 0.0) {
        return Err(Error::InvalidArgument(format!("target error probability {pe} must be positive")));
    }
    let (lo, hi) = (*ms.start(), *ms.end());
    if lo > hi || hi - lo < 1 {
        return Err(Error::DegenerateFit("need at least two depths".into()));
    }
    block_length(b.ell(), hi, DEFAULT_RECURSION_CAP)?;
    let mut rows = Vec::new();
    let mut cur = vec![(z0, 1.0 - z0)];
    for m in 1..=hi {
        cur = recursion_level(b, &cur);
        if m >= lo {
            rows.push(fit_row(&cur, m, z0, pe));
        }
    }
    fit_rows(rows)
}

/// Least-squares slope of `ln n` against `ln(1/gap)`.
pub fn fit_rows(rows: Vec<FitRow>) -> Result<MuEstimate> {
    if let Some(r) = rows.iter().find(|r| !(r.gap > 0.0)) {
        return Err(Error::DegenerateFit(format!("gap {} at m = {} is not positive", r.gap, r.m)));
    }
    let xs: Vec<f64> = rows.iter().map(|r| -r.gap.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::DegenerateFit("gap does not vary with m".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    Ok(MuEstimate {
        method: MuMethod::EmpiricalFit,
        mu: slope,
        diagnostics: MuDiagnostics { rows, residuals, ..Default::default() },
    })
}
