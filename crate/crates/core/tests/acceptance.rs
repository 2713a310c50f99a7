//! Acceptance suite: one test per criterion. Each prints a `PASS`/`FAIL`
//! line with the measured value, tolerance and wall time, then asserts.

use std::time::{Duration, Instant};

use bigpolar::average::{avg_f, bound_p_lower, bound_p_upper, p_given_s};
use bigpolar::behavior::undecodable_mask;
use bigpolar::codec::{
    construct_code, sc_decode, sc_decode_genie, simulate_fer, transform, BitStatus, PolarCode, Symbol,
};
use bigpolar::experiment::{all_kernels, run_concentration, ExperimentConfig};
use bigpolar::numeric::neumaier_sum;
use bigpolar::scaling::{
    empirical_mu_fit, g_alpha, lambda_star, mu_power_iteration, simulate_process, GridSpec, ProcessConfig,
};
use bigpolar::{exact_behavior, is_decodable, BitVec, ErasurePattern, Kernel, Seed};
use rand::Rng;

fn report(id: u32, name: &str, ok: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let timely = elapsed <= limit;
    let verdict = if ok && timely { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {id:>2} [{name}] {detail}; time {elapsed:.3?} (limit {limit:?})");
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(timely, "criterion {id} exceeded its time limit: {elapsed:?} > {limit:?}");
}

fn arikan_squared() -> Kernel {
    Kernel::new(Kernel::arikan().matrix().kron_power(2).unwrap()).unwrap()
}

#[test]
fn criterion_01_arikan_behavior() {
    let k = Kernel::arikan();
    exact_behavior(&k).unwrap();
    let start = Instant::now();
    let b = exact_behavior(&k).unwrap();
    let elapsed = start.elapsed();
    let counts = b.counts();
    let mut ok = counts == vec![vec![0, 2, 1], vec![0, 0, 1]];
    for z in [0.0, 0.2, 0.5, 0.9, 1.0] {
        ok &= b.eval_f(1, z).unwrap() == 2.0 * z - z * z || (b.eval_f(1, z).unwrap() - (2.0 * z - z * z)).abs() < 1e-15;
        ok &= (b.eval_f(2, z).unwrap() - z * z).abs() < 1e-15;
    }
    report(1, "Arikan behavior exact", ok, elapsed, Duration::from_millis(1), &format!("counts {counts:?}"));
}

#[test]
fn criterion_02_per_pattern_identity() {
    let start = Instant::now();
    let mut violations = 0u64;
    let mut checked = 0u64;
    for k in 0..100u64 {
        let ell = 2 + (k as usize % 9);
        let kernel = Kernel::sample(ell, Seed::new(0xC2).child(k)).unwrap();
        for mask in 0u64..1 << ell {
            checked += 1;
            if undecodable_mask(&kernel, mask).count_ones() != mask.count_ones() {
                violations += 1;
            }
        }
    }
    report(
        2,
        "per-pattern identity",
        violations == 0,
        start.elapsed(),
        Duration::from_secs(30),
        &format!("{checked} patterns over 100 kernels, {violations} violations"),
    );
}

#[test]
fn criterion_03_average_over_gl() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for ell in [2usize, 3] {
        let group = all_kernels(ell).unwrap();
        let behaviors: Vec<_> = group.iter().map(|k| exact_behavior(k).unwrap()).collect();
        for i in 1..=ell {
            for s in 0..=ell {
                let avg = behaviors.iter().map(|b| b.q(i, s)).sum::<f64>() / group.len() as f64;
                worst = worst.max((avg - p_given_s(ell, i, s).unwrap()).abs());
            }
        }
    }
    report(3, "closed form vs GL(2), GL(3)", worst <= 1e-12, start.elapsed(), Duration::from_secs(10), &format!("max |diff| = {worst:e} (tol 1e-12)"));
}

#[test]
fn criterion_04_average_value() {
    let start = Instant::now();
    let f1 = avg_f(2, 1, 0.5).unwrap();
    let f2 = avg_f(2, 2, 0.5).unwrap();
    let ok = (f1 - 7.0 / 12.0).abs() <= 1e-12 && (f2 - 5.0 / 12.0).abs() <= 1e-12 && (f1 + f2 - 1.0).abs() <= 1e-12;
    report(4, "average value at l=2", ok, start.elapsed(), Duration::from_secs(1), &format!("F1 = {f1}, F2 = {f2} (tol 1e-12)"));
}

#[test]
fn criterion_05_bound_sandwich() {
    let start = Instant::now();
    let (mut checks, mut violations) = (0usize, 0usize);
    for ell in 4..=64 {
        for i in 1..=ell {
            for s in 0..=ell {
                let p = p_given_s(ell, i, s).unwrap();
                if s > i {
                    checks += 1;
                    violations += (bound_p_lower(ell, i, s).unwrap() > p) as usize;
                }
                if s + 1 < i {
                    checks += 1;
                    violations += (p > bound_p_upper(ell, i, s).unwrap()) as usize;
                }
            }
        }
    }
    report(5, "bound sandwich", violations == 0, start.elapsed(), Duration::from_secs(10), &format!("{checks} nonvacuous checks, {violations} violations"));
}

#[test]
fn criterion_06_lambda_closed_form() {
    let b = exact_behavior(&Kernel::arikan()).unwrap();
    let start = Instant::now();
    let scan = lambda_star(&b, 0.5, &GridSpec::default()).unwrap();
    let elapsed = start.elapsed();
    let want = 3f64.sqrt() / 2.0;
    let ok = (scan.lambda_star - want).abs() <= 1e-6 && (scan.argmax_z - 0.5).abs() <= 1e-3;
    report(
        6,
        "lambda* of Arikan",
        ok,
        elapsed,
        Duration::from_secs(1),
        &format!("lambda* = {:.9} (want {want:.9} +- 1e-6), argmax z = {:.6} (+- 1e-3)", scan.lambda_star, scan.argmax_z),
    );
}

#[test]
fn criterion_07_power_iteration() {
    let start = Instant::now();
    let a = mu_power_iteration(&exact_behavior(&Kernel::arikan()).unwrap(), 4096, 1e-12).unwrap();
    let b = mu_power_iteration(&exact_behavior(&arikan_squared()).unwrap(), 4096, 1e-12).unwrap();
    let ok = (a.mu - 3.627).abs() <= 0.01 && (b.mu - 3.627).abs() <= 0.01 && (a.mu - b.mu).abs() <= 0.01;
    report(7, "heuristic scaling exponent", ok, start.elapsed(), Duration::from_secs(30), &format!("mu(K) = {:.4}, mu(K x K) = {:.4} (want 3.627 +- 0.01)", a.mu, b.mu));
}

#[test]
fn criterion_08_supermartingale() {
    let start = Instant::now();
    let arikan = exact_behavior(&Kernel::arikan()).unwrap();
    let mut cases = vec![(arikan.clone(), 0.25), (arikan, 0.5)];
    for k in 0..3 {
        cases.push((exact_behavior(&Kernel::sample(8, Seed::new(0xC8).child(k)).unwrap()).unwrap(), 0.0625));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for (idx, (b, alpha)) in cases.iter().enumerate() {
        let star = lambda_star(b, *alpha, &GridSpec::default()).unwrap().lambda_star;
        let cfg = ProcessConfig { z0: 0.5, m: 20, trials: 100_000, alpha: *alpha, epsilon: 0.01 };
        let stats = simulate_process(b, &cfg, Seed::new(0xC8).child(100 + idx as u64)).unwrap();
        for s in &stats {
            let bound = star.powi(s.m as i32) * g_alpha(0.5, *alpha);
            let excess = (s.mean_g - bound * (1.0 + 1e-12) - 4.0 * s.se_g) / bound;
            worst = worst.max(excess);
            ok &= excess <= 0.0;
        }
    }
    report(8, "supermartingale bound", ok, start.elapsed(), Duration::from_secs(120), &format!("5 (kernel, alpha) cases, m <= 20, 1e5 trials; max relative excess over bound + 4 sigma = {worst:.3e}"));
}

#[test]
fn criterion_09_construction_and_fer() {
    let start = Instant::now();
    let (code, report_) = construct_code(&Kernel::arikan(), 3, 0.5, 0.1).unwrap();
    let est = simulate_fer(&code, 0.5, 1_000_000, Seed::new(0xC9)).unwrap();
    let ok = code.rate() == 0.125
        && report_.union_bound == 0.00390625
        && est.wrong_bits == 0
        && est.fer <= report_.union_bound + 4.0 * est.se;
    report(
        9,
        "construction and FER",
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("R = {}, union bound = {}, FER = {:.6} +- {:.6} over 1e6 frames, wrong bits = {}", code.rate(), report_.union_bound, est.fer, est.se, est.wrong_bits),
    );
}

/// Genie and plain decoding agree with the decodability condition on
/// `K^{⊗m}` for every erasure pattern.
fn equivalence_mismatches(kernel: &Kernel, m: u32) -> (u64, u64) {
    let big = Kernel::new(kernel.matrix().kron_power(m as usize).unwrap()).unwrap();
    let n = big.size();
    let code = PolarCode::new(kernel.clone(), m, BitVec::zeros(n), 0.5, 1.0).unwrap();
    let mut rng = Seed::new(0xCA).child(n as u64).rng();
    let (mut checked, mut bad) = (0u64, 0u64);
    for mask in 0u64..1 << n {
        let u = BitVec::from_bools(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>());
        let x = transform(kernel, m, &u).unwrap();
        let y: Vec<Symbol> = x.iter().enumerate().map(|(j, b)| if mask >> j & 1 == 1 { Symbol::Erased } else { Symbol::known(b) }).collect();
        let genie = sc_decode_genie(&code, &y, &u).unwrap();
        let plain = sc_decode(&code, &y).unwrap();
        let pattern = ErasurePattern::new(n, mask).unwrap();
        let mut all_before = true;
        for i in 0..n {
            checked += 1;
            let dec = is_decodable(&big, i + 1, pattern).unwrap();
            let genie_ok = genie.status[i] == BitStatus::Decoded && genie.u.get(i) == u.get(i);
            // plain decoding recovers u_i iff it and every earlier bit are decodable
            all_before &= dec;
            let plain_ok = plain.status[i] == BitStatus::Decoded;
            if genie_ok != dec || plain_ok != all_before || (plain_ok && plain.u.get(i) != u.get(i)) {
                bad += 1;
            }
        }
        if plain.success != all_before {
            bad += 1;
        }
    }
    (checked, bad)
}

#[test]
fn criterion_10_sc_equivalence() {
    let start = Instant::now();
    let (c1, b1) = equivalence_mismatches(&Kernel::arikan(), 3);
    let (c2, b2) = equivalence_mismatches(&Kernel::sample(3, Seed::new(0xCA)).unwrap(), 2);
    report(
        10,
        "SC equivalence",
        b1 + b2 == 0,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("n=8: {c1} bit checks, {b1} mismatches; n=9: {c2} bit checks, {b2} mismatches"),
    );
}

#[test]
fn criterion_11_capacity_conservation() {
    let start = Instant::now();
    let mut worst_code = 0.0f64;
    let mut codes = 0;
    let mut cases: Vec<(Kernel, u32)> = (1..=20).map(|m| (Kernel::arikan(), m)).collect();
    cases.extend((1..=12).map(|m| (Kernel::sample(3, Seed::new(0xCB)).unwrap(), m)));
    cases.extend((1..=10).map(|m| (Kernel::sample(4, Seed::new(0xCB)).unwrap(), m)));
    cases.extend((1..=6).map(|m| (Kernel::sample(8, Seed::new(0xCB)).unwrap(), m)));
    cases.extend((1..=5).map(|m| (Kernel::sample(16, Seed::new(0xCB)).unwrap(), m)));
    for (kernel, m) in &cases {
        let b = exact_behavior(kernel).unwrap();
        for z in [0.1, 0.5, 0.77] {
            let (code, rep) = bigpolar::codec::construct_code_with(kernel, &b, *m, z, 0.01).unwrap();
            let total = neumaier_sum(rep.p.iter().copied());
            worst_code = worst_code.max((total - code.n() as f64 * z).abs());
            codes += 1;
        }
    }
    let mut worst_kernel = 0.0f64;
    for k in 0..50u64 {
        let ell = 2 + (k as usize % 15);
        let b = exact_behavior(&Kernel::sample(ell, Seed::new(0xCB).child(k)).unwrap()).unwrap();
        for j in 0..=100 {
            let z = j as f64 / 100.0;
            let total: f64 = (1..=ell).map(|i| b.eval_f(i, z).unwrap()).sum();
            worst_kernel = worst_kernel.max((total - ell as f64 * z).abs());
        }
    }
    report(
        11,
        "capacity conservation",
        worst_code <= 1e-9 && worst_kernel <= 1e-12,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{codes} codes up to n = 2^20: max |sum p - nz| = {worst_code:e} (tol 1e-9); 50 kernels: max |sum f - lz| = {worst_kernel:e} (tol 1e-12)"),
    );
}

#[test]
fn criterion_12_concentration_trend() {
    let start = Instant::now();
    let cfg = ExperimentConfig { seed: 0xCC, ..Default::default() };
    let out = run_concentration(&cfg).unwrap();
    let medians: Vec<(usize, f64)> = out.summary.iter().map(|s| (s.ell, s.median)).collect();
    let decreasing = medians.windows(2).all(|w| w[1].1 < w[0].1);
    let at64 = out.summary.iter().find(|s| s.ell == 64).unwrap();
    let ok = decreasing && at64.frac_sharp >= 0.6;
    let detail = format!(
        "medians of log_l lambda* {:?}; sharp fraction at l=64 = {} ({} nonvacuous checks); bound fraction at l=64 = {}",
        medians.iter().map(|(l, m)| format!("{l}:{m:.4}")).collect::<Vec<_>>(),
        at64.frac_sharp,
        at64.nonvacuous_checks,
        at64.frac_bound
    );
    report(12, "concentration trend", ok, start.elapsed(), Duration::from_secs(15 * 60), &detail);
}

#[test]
fn criterion_13_empirical_fit() {
    let start = Instant::now();
    let est = empirical_mu_fit(&exact_behavior(&Kernel::arikan()).unwrap(), 0.5, 0.01, 7..=14).unwrap();
    report(13, "empirical fit", (3.3..=3.9).contains(&est.mu), start.elapsed(), Duration::from_secs(120), &format!("mu_hat = {:.4} (window [3.3, 3.9])", est.mu));
}

#[test]
fn criterion_14_encoder_performance() {
    let k = Kernel::arikan();
    let n = 1usize << 20;
    let mut rng = Seed::new(0xCE).rng();
    let u = BitVec::from_bools(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>());
    let start = Instant::now();
    let x = transform(&k, 20, &u).unwrap();
    let elapsed = start.elapsed();
    let mut ok = transform(&k, 20, &x).unwrap() == u;
    let mut dense_checks = 0;
    for (kernel, m) in [(Kernel::arikan(), 6), (Kernel::sample(3, Seed::new(0xCE)).unwrap(), 3), (Kernel::sample(8, Seed::new(0xCE)).unwrap(), 2)] {
        let dense = kernel.matrix().kron_power(m as usize).unwrap();
        for _ in 0..50 {
            let v = BitVec::from_bools(&(0..dense.rows()).map(|_| rng.gen()).collect::<Vec<bool>>());
            ok &= transform(&kernel, m, &v).unwrap() == dense.vec_mul(&v).unwrap();
            dense_checks += 1;
        }
    }
    report(14, "encoder performance", ok, elapsed, Duration::from_secs(2), &format!("n = 2^20 encode; {dense_checks} dense-oracle checks at n <= 64"));
}
