//! Seeded experiment drivers: kernel-sampling campaigns for the
//! concentration of λ*, sharpness reports, and scaling-exponent fits.
//!
//! Drivers return in-memory tables; `*_csv` renderers produce the artifacts.
//! Every CSV row carries the run seed and a hash of the configuration so a
//! file can be traced back to the run that produced it.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behavior::{behavior_auto, Kernel, PolarizationBehavior};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::scaling::{empirical_mu_fit, lambda_star, mu_from_lambda, mu_power_iteration, GridSpec, MuEstimate};
use crate::seed::Seed;

/// Largest ℓ for which every nonsingular matrix can be enumerated.
pub const EXHAUSTIVE_MAX_ELL: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub ells: Vec<usize>,
    pub kernels_per_ell: usize,
    pub alpha: f64,
    /// Sampled patterns per weight for kernels above the exact cap.
    pub mc_samples: u64,
    pub grid: GridSpec,
    /// Inclusive range of m for scaling fits.
    pub m_range: (u32, u32),
    pub pe: f64,
    pub seed: u64,
    /// Use every nonsingular matrix instead of sampling (ℓ ≤ 4).
    pub exhaustive: bool,
    /// Kernel text for scaling fits; Arıkan's kernel when absent.
    pub kernel: Option<String>,
    /// Channel erasure probability for scaling fits.
    pub z0: f64,
    /// Not part of the hashed configuration.
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "concentration".into(),
            ells: vec![8, 16, 32, 64],
            kernels_per_ell: 50,
            alpha: 0.0625,
            mc_samples: 10_000,
            grid: GridSpec::default(),
            m_range: (7, 14),
            pe: 0.01,
            seed: 0,
            exhaustive: false,
            kernel: None,
            z0: 0.5,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.ells.is_empty() {
            return bad("ℓ-list is empty".into());
        }
        if let Some(&ell) = self.ells.iter().find(|&&l| !(2..=64).contains(&l)) {
            return Err(Error::KernelSize(ell));
        }
        if self.exhaustive {
            if let Some(&ell) = self.ells.iter().find(|&&l| l > EXHAUSTIVE_MAX_ELL) {
                return bad(format!("exhaustive enumeration needs ℓ ≤ {EXHAUSTIVE_MAX_ELL}, got {ell}"));
            }
        }
        if self.kernels_per_ell == 0 || self.mc_samples == 0 {
            return bad("kernel and sample counts must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} outside (0, 1)", self.alpha));
        }
        if self.grid.interior < 2 || self.grid.tail_points == 0 {
            return bad("z-grid needs at least 2 interior and 1 tail point".into());
        }
        if self.m_range.0 > self.m_range.1 {
            return bad(format!("empty m-range {}..={}", self.m_range.0, self.m_range.1));
        }
        if !(self.pe > 0.0 && self.pe < 1.0) {
            return bad(format!("P_e = {} outside (0, 1)", self.pe));
        }
        if !(0.0..=1.0).contains(&self.z0) {
            return Err(Error::Probability(self.z0));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the configuration JSON, with the
    /// output directory cleared.
    pub fn config_hash(&self) -> String {
        let mut canon = self.clone();
        canon.out_dir = None;
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

/// Sharpness of one kernel's behavior at the window points
/// `a_i = i/ℓ + 5ℓ^{−1/2}log₂ℓ` and `b_i = i/ℓ − 5ℓ^{−1/2}log₂ℓ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub ell: usize,
    pub kernel_id: String,
    pub threshold: f64,
    pub rows: Vec<SharpnessRow>,
    /// Fraction of the 2ℓ checks that fail.
    pub failure_fraction: f64,
    /// Checks whose window point lies strictly inside (0, 1).
    pub nonvacuous: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessRow {
    pub i: usize,
    /// Window points after clamping to `[0, 1]`.
    pub a: f64,
    pub b: f64,
    /// `1 − f_i(a_i)`.
    pub upper_tail: f64,
    /// `f_i(b_i)`.
    pub lower_tail: f64,
    pub pass_a: bool,
    pub pass_b: bool,
    /// The unclamped point fell outside (0, 1).
    pub vacuous_a: bool,
    pub vacuous_b: bool,
}

impl SharpnessReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass_a && r.pass_b)
    }
}

/// Half-width `5ℓ^{−1/2}log₂ℓ` of the transition window.
pub fn sharpness_window(ell: usize) -> f64 {
    5.0 * (ell as f64).log2() / (ell as f64).sqrt()
}

/// Threshold `ℓ^{−(2 + log₂ℓ)}`.
pub fn sharpness_threshold(ell: usize) -> f64 {
    let l = ell as f64;
    l.powf(-(2.0 + l.log2()))
}

/// Points outside (0, 1) are clamped to the boundary, where the behavior is
/// exactly 0 or 1 and the check passes.
pub fn sharpness_report(b: &PolarizationBehavior) -> SharpnessReport {
    let ell = b.ell();
    let w = sharpness_window(ell);
    let threshold = sharpness_threshold(ell);
    let rows: Vec<SharpnessRow> = (1..=ell)
        .map(|i| {
            let centre = i as f64 / ell as f64;
            let (ra, rb) = (centre + w, centre - w);
            let a = ra.clamp(0.0, 1.0);
            let bz = rb.clamp(0.0, 1.0);
            let upper_tail = b.eval_pair(i, a, 1.0 - a).1;
            let lower_tail = b.eval_pair(i, bz, 1.0 - bz).0;
            SharpnessRow {
                i,
                a,
                b: bz,
                upper_tail,
                lower_tail,
                pass_a: upper_tail <= threshold,
                pass_b: lower_tail <= threshold,
                vacuous_a: !(ra > 0.0 && ra < 1.0),
                vacuous_b: !(rb > 0.0 && rb < 1.0),
            }
        })
        .collect();
    let fails = rows.iter().map(|r| (!r.pass_a) as usize + (!r.pass_b) as usize).sum::<usize>();
    let nonvacuous = rows.iter().map(|r| (!r.vacuous_a) as usize + (!r.vacuous_b) as usize).sum();
    SharpnessReport {
        ell,
        kernel_id: b.kernel_id().to_string(),
        threshold,
        failure_fraction: fails as f64 / (2 * ell) as f64,
        nonvacuous,
        rows,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub ell: usize,
    pub kernel_index: usize,
    pub kernel_id: String,
    pub mode: String,
    pub polarizing: bool,
    pub lambda_star: f64,
    pub argmax_z: f64,
    pub log_ell_lambda: f64,
    pub sharp_failure_fraction: f64,
    pub sharp: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub ell: usize,
    pub kernels: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Fraction with `log_ℓ λ* ≤ −1/2 + 5α`.
    pub frac_bound: f64,
    /// Fraction passing every sharpness check.
    pub frac_sharp: f64,
    pub nonvacuous_checks: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationOutput {
    pub config_hash: String,
    pub seed: u64,
    pub alpha: f64,
    pub rows: Vec<ConcentrationRow>,
    pub summary: Vec<ConcentrationSummary>,
    pub sharpness: Vec<SharpnessReport>,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Every nonsingular ℓ×ℓ matrix, in row-word order.
pub fn all_kernels(ell: usize) -> Result<Vec<Kernel>> {
    if !(1..=EXHAUSTIVE_MAX_ELL).contains(&ell) {
        return Err(Error::KernelSize(ell));
    }
    let mut out = Vec::new();
    for bits in 0u64..1 << (ell * ell) {
        let rows: Vec<u64> = (0..ell).map(|r| bits >> (r * ell) & ((1 << ell) - 1)).collect();
        let m = BitMatrix::from_row_words(ell, &rows)?;
        if m.is_nonsingular() {
            out.push(Kernel::new(m)?);
        }
    }
    Ok(out)
}

/// Samples kernels per ℓ (kernel `k` of size ℓ from `seed.child(ℓ).child(k)`),
/// computes behaviors (exact up to the cap, sampled above), λ* and the
/// sharpness report. Rows are sorted by ℓ, then kernel hash, then index.
pub fn run_concentration(cfg: &ExperimentConfig) -> Result<ConcentrationOutput> {
    cfg.validate()?;
    let root = Seed::new(cfg.seed);
    let mut jobs: Vec<(usize, usize, Kernel)> = Vec::new();
    for &ell in &cfg.ells {
        if cfg.exhaustive {
            jobs.extend(all_kernels(ell)?.into_iter().enumerate().map(|(k, kern)| (ell, k, kern)));
        } else {
            for k in 0..cfg.kernels_per_ell {
                jobs.push((ell, k, Kernel::sample(ell, root.child(ell as u64).child(k as u64))?));
            }
        }
    }
    let results: Vec<(ConcentrationRow, SharpnessReport)> = jobs
        .into_par_iter()
        .map(|(ell, k, kernel)| {
            let mc_seed = root.child(ell as u64).child(k as u64).child(1);
            let b = behavior_auto(&kernel, cfg.mc_samples, mc_seed)?;
            let scan = lambda_star(&b, cfg.alpha, &cfg.grid)?;
            let sharp = sharpness_report(&b);
            let row = ConcentrationRow {
                ell,
                kernel_index: k,
                kernel_id: kernel.id().to_string(),
                mode: b.mode().to_string(),
                polarizing: kernel.is_polarizing(),
                lambda_star: scan.lambda_star,
                argmax_z: scan.argmax_z,
                log_ell_lambda: scan.lambda_star.ln() / (ell as f64).ln(),
                sharp_failure_fraction: sharp.failure_fraction,
                sharp: sharp.all_pass(),
            };
            Ok((row, sharp))
        })
        .collect::<Result<_>>()?;
    let mut results = results;
    results.sort_by(|x, y| (x.0.ell, &x.0.kernel_id, x.0.kernel_index).cmp(&(y.0.ell, &y.0.kernel_id, y.0.kernel_index)));
    let (rows, sharpness): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = summarize(&rows, &sharpness, cfg.alpha);
    Ok(ConcentrationOutput { config_hash: cfg.config_hash(), seed: cfg.seed, alpha: cfg.alpha, rows, summary, sharpness })
}

/// Per-ℓ summary recomputed from the per-kernel rows.
pub fn summarize(rows: &[ConcentrationRow], sharpness: &[SharpnessReport], alpha: f64) -> Vec<ConcentrationSummary> {
    let mut ells: Vec<usize> = rows.iter().map(|r| r.ell).collect();
    ells.dedup();
    ells.into_iter()
        .map(|ell| {
            let of: Vec<&ConcentrationRow> = rows.iter().filter(|r| r.ell == ell).collect();
            let mut logs: Vec<f64> = of.iter().map(|r| r.log_ell_lambda).collect();
            logs.sort_by(f64::total_cmp);
            let n = of.len() as f64;
            ConcentrationSummary {
                ell,
                kernels: of.len(),
                median: quantile(&logs, 0.5),
                q1: quantile(&logs, 0.25),
                q3: quantile(&logs, 0.75),
                frac_bound: of.iter().filter(|r| r.log_ell_lambda <= -0.5 + 5.0 * alpha).count() as f64 / n,
                frac_sharp: of.iter().filter(|r| r.sharp).count() as f64 / n,
                nonvacuous_checks: sharpness.iter().filter(|s| s.ell == ell).map(|s| s.nonvacuous).sum(),
            }
        })
        .collect()
}

impl ConcentrationOutput {
    pub fn rows_csv(&self) -> String {
        let mut s = String::from(
            "ell,kernel_index,kernel_id,mode,polarizing,lambda_star,argmax_z,log_ell_lambda,sharp_failure_fraction,sharp,seed,config_hash\n",
        );
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{:e},{:e},{:e},{:e},{},{},{}",
                r.ell,
                r.kernel_index,
                r.kernel_id,
                r.mode,
                r.polarizing,
                r.lambda_star,
                r.argmax_z,
                r.log_ell_lambda,
                r.sharp_failure_fraction,
                r.sharp,
                self.seed,
                self.config_hash
            )
            .unwrap();
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("ell,kernels,median,q1,q3,frac_bound,frac_sharp,nonvacuous_checks,alpha,seed,config_hash\n");
        for r in &self.summary {
            writeln!(
                s,
                "{},{},{:e},{:e},{:e},{},{},{},{},{},{}",
                r.ell,
                r.kernels,
                r.median,
                r.q1,
                r.q3,
                r.frac_bound,
                r.frac_sharp,
                r.nonvacuous_checks,
                self.alpha,
                self.seed,
                self.config_hash
            )
            .unwrap();
        }
        s
    }

    pub fn sharpness_csv(&self) -> String {
        let mut s = String::from(
            "ell,kernel_id,i,a,b,upper_tail,lower_tail,pass_a,pass_b,vacuous_a,vacuous_b,threshold,seed,config_hash\n",
        );
        for rep in &self.sharpness {
            for r in &rep.rows {
                writeln!(
                    s,
                    "{},{},{},{:e},{:e},{:e},{:e},{},{},{},{},{:e},{},{}",
                    rep.ell,
                    rep.kernel_id,
                    r.i,
                    r.a,
                    r.b,
                    r.upper_tail,
                    r.lower_tail,
                    r.pass_a,
                    r.pass_b,
                    r.vacuous_a,
                    r.vacuous_b,
                    rep.threshold,
                    self.seed,
                    self.config_hash
                )
                .unwrap();
            }
        }
        s
    }
}

/// Side-by-side scaling-exponent estimates for one kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFitReport {
    pub config_hash: String,
    pub seed: u64,
    pub kernel_id: String,
    pub z0: f64,
    pub pe: f64,
    pub fit: MuEstimate,
    pub power_iteration: Option<MuEstimate>,
    /// Why power iteration produced no estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_iteration_error: Option<String>,
    /// Smallest valid bound over the α grid, or null if every α is vacuous.
    pub lambda_bound: Option<MuEstimate>,
}

const BOUND_ALPHAS: usize = 64;

/// Rate/gap rows over the m-range, the least-squares μ̂, the power-iteration
/// μ and the best bound-derived μ over `α = k/64`, `k = 1..63`.
pub fn run_scaling_fit(cfg: &ExperimentConfig) -> Result<ScalingFitReport> {
    cfg.validate()?;
    let kernel = match &cfg.kernel {
        Some(text) => Kernel::parse(text)?,
        None => Kernel::arikan(),
    };
    let b = behavior_auto(&kernel, cfg.mc_samples, Seed::new(cfg.seed))?;
    let fit = empirical_mu_fit(&b, cfg.z0, cfg.pe, cfg.m_range.0..=cfg.m_range.1)?;
    let (power_iteration, power_iteration_error) = match mu_power_iteration(&b, 4096, 1e-12) {
        Ok(est) => (Some(est), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut lambda_bound: Option<MuEstimate> = None;
    for k in 1..BOUND_ALPHAS {
        let alpha = k as f64 / BOUND_ALPHAS as f64;
        let star = lambda_star(&b, alpha, &cfg.grid)?.lambda_star;
        if let Ok(est) = mu_from_lambda(star, alpha, kernel.size(), Some(cfg.pe)) {
            if lambda_bound.as_ref().is_none_or(|best| est.mu < best.mu) {
                lambda_bound = Some(est);
            }
        }
    }
    Ok(ScalingFitReport {
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        kernel_id: kernel.id().to_string(),
        z0: cfg.z0,
        pe: cfg.pe,
        fit,
        power_iteration,
        power_iteration_error,
        lambda_bound,
    })
}

impl ScalingFitReport {
    pub fn rows_csv(&self) -> String {
        let mut s = String::from("m,n,rate,gap,union_bound,seed,config_hash\n");
        for r in &self.fit.diagnostics.rows {
            writeln!(s, "{},{},{},{:e},{:e},{},{}", r.m, r.n, r.rate, r.gap, r.union_bound, self.seed, self.config_hash).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
