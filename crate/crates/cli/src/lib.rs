//! Command-line surface for the `bigpolar` library.
//!
//! Every successful command writes its artifacts plus a JSON manifest
//! (command, argv, config echo, seed, start time, duration, artifact hashes)
//! into the output directory: `--out-dir`, else `$BIGPOLAR_OUT_DIR`, else
//! `./bigpolar-out`. Exit status is 0 on success, 1 on a domain error and 2
//! on a usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bigpolar::average::AvgConditionalTable;
use bigpolar::codec::{
    construct_code, construct_fixed_rate, encode, sc_decode, simulate_fer, symbols_from_hex, BitStatus, CodeFile,
    PolarCode,
};
use bigpolar::experiment::{run_concentration, run_scaling_fit, ExperimentConfig};
use bigpolar::scaling::{
    empirical_mu_fit, lambda_star, mu_from_lambda, mu_power_iteration, simulate_process, write_process_csv, GridSpec,
    ProcessConfig,
};
use bigpolar::{behavior_auto, exact_behavior, mc_behavior, BitMatrix, BitVec, Kernel, PolarizationBehavior, Seed};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const OUT_DIR_ENV: &str = "BIGPOLAR_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "bigpolar-out";

#[derive(Parser, Debug, Serialize)]
#[command(name = "bigpolar", version, about = "Large-kernel polar codes on the binary erasure channel")]
pub struct Cli {
    /// Directory for artifacts and manifests.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Sample or inspect kernels.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Polarization behavior of one kernel.
    #[command(subcommand)]
    Behavior(BehaviorCmd),
    /// Behavior averaged over all nonsingular kernels.
    #[command(subcommand)]
    Avg(AvgCmd),
    /// λ*, scaling exponents and the erasure process.
    #[command(subcommand)]
    Scaling(ScalingCmd),
    /// Construct, encode, decode and simulate codes.
    #[command(subcommand)]
    Code(CodeCmd),
    /// Batch experiments.
    #[command(subcommand)]
    Exp(ExpCmd),
}

#[derive(Subcommand, Debug, Serialize)]
pub enum KernelCmd {
    /// Uniformly random nonsingular kernel.
    Sample {
        #[arg(long = "l")]
        ell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel file to write (default: <out-dir>/kernel.k).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report nonsingularity and polarization.
    Check {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum BehaviorCmd {
    /// Exhaustive enumeration (ℓ ≤ 24).
    Exact {
        #[arg(long)]
        file: PathBuf,
    },
    /// Stratified Monte Carlo.
    Mc {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum AvgCmd {
    /// Conditional probabilities p_{i|s}.
    Table {
        #[arg(long = "l")]
        ell: usize,
    },
    /// Average behavior on a uniform z-grid.
    Eval {
        #[arg(long = "l")]
        ell: usize,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct KernelSource {
    /// Kernel file; Arıkan's kernel when absent.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Patterns per weight when the kernel exceeds the exact cap.
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMethodArg {
    LambdaBound,
    PowerIteration,
    EmpiricalFit,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum ScalingCmd {
    /// λ_α(z) scan and its supremum.
    Lambda {
        #[command(flatten)]
        kernel: KernelSource,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Scaling exponent estimate.
    Mu {
        #[command(flatten)]
        kernel: KernelSource,
        #[arg(long, value_enum, default_value_t = MuMethodArg::PowerIteration)]
        method: MuMethodArg,
        #[arg(long, default_value_t = 0.0625)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        pe: f64,
        #[arg(long, default_value_t = 0.5)]
        z0: f64,
        #[arg(long, default_value_t = 7)]
        m_min: u32,
        #[arg(long, default_value_t = 14)]
        m_max: u32,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Simulated erasure process statistics per step.
    Process {
        #[command(flatten)]
        kernel: KernelSource,
        #[arg(long, default_value_t = 0.5)]
        z0: f64,
        #[arg(short, long, default_value_t = 10)]
        m: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum CodeCmd {
    /// Union-bound (or fixed-rate) construction.
    Construct {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(short, long)]
        m: u32,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 0.01)]
        pe: f64,
        /// Keep exactly this many information bits instead.
        #[arg(long)]
        k: Option<usize>,
        /// Code file to write (default: <out-dir>/code.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode information bits given as LSB-first hex.
    Encode {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        info: String,
    },
    /// Successive-cancellation decoding of a received word.
    Decode {
        #[arg(long)]
        code: PathBuf,
        /// Received values, LSB-first hex.
        #[arg(long)]
        values: String,
        /// Erased positions, LSB-first hex.
        #[arg(long)]
        erasures: String,
    },
    /// Frame-erasure rate over BEC(z).
    Fer {
        #[arg(long)]
        code: PathBuf,
        #[arg(long)]
        z: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug, Serialize)]
pub enum ExpCmd {
    /// λ* campaign over sampled kernels.
    Concentration {
        /// Kernel sizes (repeat or comma-separate).
        #[arg(long = "l", value_delimiter = ',', default_values_t = vec![8usize, 16, 32, 64])]
        ells: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        kernels: usize,
        #[arg(long, default_value_t = 0.0625)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumerate every nonsingular kernel (ℓ ≤ 4).
        #[arg(long)]
        exhaustive: bool,
    },
    /// Rate/gap fit against the power-iteration and bound estimates.
    ScalingFit {
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        z0: f64,
        #[arg(long, default_value_t = 0.01)]
        pe: f64,
        #[arg(long, default_value_t = 7)]
        m_min: u32,
        #[arg(long, default_value_t = 14)]
        m_max: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug)]
enum Failure {
    Domain(bigpolar::Error),
    Io(String),
}

impl From<bigpolar::Error> for Failure {
    fn from(e: bigpolar::Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Domain(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct ArtifactEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: String,
    argv: Vec<String>,
    config: &'a Cli,
    seed: Option<u64>,
    start: String,
    duration: f64,
    versions: serde_json::Value,
    artifacts: Vec<ArtifactEntry>,
}

/// Collects artifacts written by one command.
struct Run {
    out_dir: PathBuf,
    artifacts: Vec<PathBuf>,
    seed: Option<u64>,
}

impl Run {
    fn write(&mut self, name: &str, contents: &str) -> CmdResult<PathBuf> {
        let path = self.out_dir.join(name);
        self.write_at(path, contents)
    }

    fn write_at(&mut self, path: PathBuf, contents: &str) -> CmdResult<PathBuf> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.artifacts.push(path.clone());
        Ok(path)
    }
}

fn sha256_file(path: &Path) -> CmdResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Kernel(KernelCmd::Sample { .. }) => "kernel sample",
        Command::Kernel(KernelCmd::Check { .. }) => "kernel check",
        Command::Behavior(BehaviorCmd::Exact { .. }) => "behavior exact",
        Command::Behavior(BehaviorCmd::Mc { .. }) => "behavior mc",
        Command::Avg(AvgCmd::Table { .. }) => "avg table",
        Command::Avg(AvgCmd::Eval { .. }) => "avg eval",
        Command::Scaling(ScalingCmd::Lambda { .. }) => "scaling lambda",
        Command::Scaling(ScalingCmd::Mu { .. }) => "scaling mu",
        Command::Scaling(ScalingCmd::Process { .. }) => "scaling process",
        Command::Code(CodeCmd::Construct { .. }) => "code construct",
        Command::Code(CodeCmd::Encode { .. }) => "code encode",
        Command::Code(CodeCmd::Decode { .. }) => "code decode",
        Command::Code(CodeCmd::Fer { .. }) => "code fer",
        Command::Exp(ExpCmd::Concentration { .. }) => "exp concentration",
        Command::Exp(ExpCmd::ScalingFit { .. }) => "exp scaling-fit",
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let start_wall = chrono::Utc::now();
    let start = Instant::now();
    let mut run = Run { out_dir, artifacts: Vec::new(), seed: None };
    let result = dispatch(&cli.command, &mut run).and_then(|()| {
        let name = command_name(&cli.command);
        let artifacts = run
            .artifacts
            .iter()
            .map(|p| Ok(ArtifactEntry { path: p.display().to_string(), sha256: sha256_file(p)? }))
            .collect::<CmdResult<Vec<_>>>()?;
        let manifest = Manifest {
            command: name.to_string(),
            argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            config: &cli,
            seed: run.seed,
            start: start_wall.to_rfc3339(),
            duration: start.elapsed().as_secs_f64(),
            versions: serde_json::json!({ "bigpolar": env!("CARGO_PKG_VERSION") }),
            artifacts,
        };
        let file = format!("{}.manifest.json", name.replace(' ', "-"));
        fs::create_dir_all(&run.out_dir)?;
        fs::write(run.out_dir.join(file), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read_kernel(path: &Path) -> CmdResult<Kernel> {
    Ok(Kernel::parse(&fs::read_to_string(path)?)?)
}

fn load_source(src: &KernelSource) -> CmdResult<(Kernel, PolarizationBehavior)> {
    let kernel = match &src.file {
        Some(p) => read_kernel(p)?,
        None => Kernel::arikan(),
    };
    let b = behavior_auto(&kernel, src.samples, Seed::new(src.seed))?;
    Ok((kernel, b))
}

fn read_code(path: &Path) -> CmdResult<PolarCode> {
    let file: CodeFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(PolarCode::from_file(&file)?)
}

fn grid_spec(interior: usize) -> GridSpec {
    GridSpec { interior, ..GridSpec::default() }
}

fn behavior_csv(b: &PolarizationBehavior) -> CmdResult<String> {
    let mut buf = Vec::new();
    b.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii csv"))
}

fn dispatch(cmd: &Command, run: &mut Run) -> CmdResult<()> {
    match cmd {
        Command::Kernel(KernelCmd::Sample { ell, seed, out }) => {
            run.seed = Some(*seed);
            let k = Kernel::sample(*ell, Seed::new(*seed))?;
            let text = k.matrix().to_kernel_text();
            let path = match out {
                Some(p) => run.write_at(p.clone(), &text)?,
                None => run.write("kernel.k", &text)?,
            };
            print!("{text}");
            println!("wrote {} (id {})", path.display(), k.id());
        }
        Command::Kernel(KernelCmd::Check { file }) => {
            let m = BitMatrix::parse_kernel_text(&fs::read_to_string(file)?)?;
            let nonsingular = m.is_nonsingular();
            let polarizing = nonsingular && m.is_polarizing()?;
            println!("nonsingular={nonsingular} polarizing={polarizing}");
        }
        Command::Behavior(BehaviorCmd::Exact { file }) => {
            let b = exact_behavior(&read_kernel(file)?)?;
            let csv = behavior_csv(&b)?;
            run.write("behavior.csv", &csv)?;
            print!("{csv}");
        }
        Command::Behavior(BehaviorCmd::Mc { file, samples, seed }) => {
            run.seed = Some(*seed);
            let b = mc_behavior(&read_kernel(file)?, *samples, Seed::new(*seed))?;
            let csv = behavior_csv(&b)?;
            run.write("behavior.csv", &csv)?;
            print!("{csv}");
        }
        Command::Avg(AvgCmd::Table { ell }) => {
            let t = AvgConditionalTable::new(*ell)?;
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            let csv = String::from_utf8(buf).expect("ascii csv");
            run.write("avg_table.csv", &csv)?;
            print!("{csv}");
        }
        Command::Avg(AvgCmd::Eval { ell, points }) => {
            if *points < 2 {
                return Err(bigpolar::Error::InvalidArgument("need at least 2 grid points".into()).into());
            }
            let t = AvgConditionalTable::new(*ell)?;
            let grid: Vec<f64> = (0..*points).map(|k| k as f64 / (*points - 1) as f64).collect();
            let mut buf = Vec::new();
            t.write_eval_csv(&grid, &mut buf)?;
            let csv = String::from_utf8(buf).expect("ascii csv");
            let path = run.write("avg_eval.csv", &csv)?;
            println!("wrote {}", path.display());
        }
        Command::Scaling(ScalingCmd::Lambda { kernel, alpha, grid }) => {
            run.seed = Some(kernel.seed);
            let (_, b) = load_source(kernel)?;
            let scan = lambda_star(&b, *alpha, &grid_spec(*grid))?;
            let mut buf = Vec::new();
            scan.write_csv(&mut buf)?;
            let path = run.write("lambda.csv", &String::from_utf8(buf).expect("ascii csv"))?;
            println!("lambda_star={} argmax_z={} (scan in {})", scan.lambda_star, scan.argmax_z, path.display());
        }
        Command::Scaling(ScalingCmd::Mu { kernel, method, alpha, pe, z0, m_min, m_max, grid }) => {
            run.seed = Some(kernel.seed);
            let (k, b) = load_source(kernel)?;
            let est = match method {
                MuMethodArg::LambdaBound => {
                    let star = lambda_star(&b, *alpha, &grid_spec(*grid))?.lambda_star;
                    mu_from_lambda(star, *alpha, k.size(), Some(*pe))?
                }
                MuMethodArg::PowerIteration => mu_power_iteration(&b, *grid, 1e-12)?,
                MuMethodArg::EmpiricalFit => empirical_mu_fit(&b, *z0, *pe, *m_min..=*m_max)?,
            };
            let json = serde_json::to_string_pretty(&est)?;
            run.write("mu.json", &json)?;
            println!("mu={}", est.mu);
        }
        Command::Scaling(ScalingCmd::Process { kernel, z0, m, trials, alpha, epsilon }) => {
            run.seed = Some(kernel.seed);
            let (_, b) = load_source(kernel)?;
            let cfg = ProcessConfig { z0: *z0, m: *m, trials: *trials, alpha: *alpha, epsilon: *epsilon };
            let stats = simulate_process(&b, &cfg, Seed::new(kernel.seed))?;
            let mut buf = Vec::new();
            write_process_csv(&stats, &mut buf)?;
            let path = run.write("process.csv", &String::from_utf8(buf).expect("ascii csv"))?;
            println!("wrote {}", path.display());
        }
        Command::Code(CodeCmd::Construct { kernel, m, z, pe, k, out }) => {
            let kern = read_kernel(kernel)?;
            let (code, report) = match k {
                Some(k) => construct_fixed_rate(&kern, *m, *z, *k)?,
                None => construct_code(&kern, *m, *z, *pe)?,
            };
            let json = serde_json::to_string_pretty(&code.to_file())?;
            let path = match out {
                Some(p) => run.write_at(p.clone(), &json)?,
                None => run.write("code.json", &json)?,
            };
            let summary = serde_json::json!({
                "n": code.n(), "k": code.k(), "rate": report.rate, "union_bound": report.union_bound,
                "gap": report.gap, "beta": report.beta,
            });
            run.write("construction.json", &serde_json::to_string_pretty(&summary)?)?;
            println!("n={} k={} rate={} union_bound={:e} gap={} -> {}", code.n(), code.k(), report.rate, report.union_bound, report.gap, path.display());
        }
        Command::Code(CodeCmd::Encode { code, info }) => {
            let code = read_code(code)?;
            let info = BitVec::from_hex(code.k(), info)?;
            println!("{}", encode(&code, &info)?.to_hex());
        }
        Command::Code(CodeCmd::Decode { code, values, erasures }) => {
            let code = read_code(code)?;
            let y = symbols_from_hex(code.n(), values, erasures)?;
            let out = sc_decode(&code, &y)?;
            let status: String = out.status.iter().map(|s| if *s == BitStatus::Decoded { 'd' } else { 'e' }).collect();
            match out.info(&code) {
                Some(info) => println!("decoded {}", info.to_hex()),
                None => println!("erased"),
            }
            println!("status {status}");
        }
        Command::Code(CodeCmd::Fer { code, z, trials, seed }) => {
            run.seed = Some(*seed);
            let code = read_code(code)?;
            let est = simulate_fer(&code, *z, *trials, Seed::new(*seed))?;
            run.write("fer.json", &serde_json::to_string_pretty(&est)?)?;
            println!("fer={} se={} failures={} trials={} wrong_bits={}", est.fer, est.se, est.failures, est.trials, est.wrong_bits);
        }
        Command::Exp(ExpCmd::Concentration { ells, kernels, alpha, samples, grid, seed, exhaustive }) => {
            run.seed = Some(*seed);
            let cfg = ExperimentConfig {
                name: "concentration".into(),
                ells: ells.clone(),
                kernels_per_ell: *kernels,
                alpha: *alpha,
                mc_samples: *samples,
                grid: grid_spec(*grid),
                seed: *seed,
                exhaustive: *exhaustive,
                out_dir: Some(run.out_dir.clone()),
                ..Default::default()
            };
            let out = run_concentration(&cfg)?;
            run.write("concentration_kernels.csv", &out.rows_csv())?;
            run.write("concentration_sharpness.csv", &out.sharpness_csv())?;
            let summary = out.summary_csv();
            run.write("concentration_summary.csv", &summary)?;
            print!("{summary}");
        }
        Command::Exp(ExpCmd::ScalingFit { kernel, z0, pe, m_min, m_max, samples, seed }) => {
            run.seed = Some(*seed);
            let text = kernel.as_ref().map(fs::read_to_string).transpose()?;
            let cfg = ExperimentConfig {
                name: "scaling-fit".into(),
                kernel: text,
                z0: *z0,
                pe: *pe,
                m_range: (*m_min, *m_max),
                mc_samples: *samples,
                seed: *seed,
                out_dir: Some(run.out_dir.clone()),
                ..Default::default()
            };
            let rep = run_scaling_fit(&cfg)?;
            run.write("scaling_fit.csv", &rep.rows_csv())?;
            run.write("scaling_fit.json", &rep.to_json())?;
            let fmt = |e: &Option<bigpolar::scaling::MuEstimate>| e.as_ref().map_or("null".to_string(), |e| e.mu.to_string());
            println!("fit_mu={} power_iteration_mu={} lambda_bound_mu={}", rep.fit.mu, fmt(&rep.power_iteration), fmt(&rep.lambda_bound));
        }
    }
    Ok(())
}
