use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nusfft::io::{load_representation, load_samples, save_representation, save_samples};
use nusfft::oracle::relative_coefficient_error;
use nusfft::pursuit::recover;
use nusfft::rng::from_seed;
use nusfft::signal::{bernoulli_mask, synthesize};
use nusfft::{Complex64, ModeSpec, NormMode, PursuitConfig, Representation, SampledSignal};
use nusfft_cli::bench::{run_table, ExperimentSpec, TableId};
use nusfft_cli::lemmas::{run_suite, LemmaParams};

#[derive(Parser)]
#[command(name = "nusfft", version, about = "Sparse Fourier recovery from nonequispaced samples")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "NUSFFT_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a signal, drop unavailable samples and write the rest.
    Generate(GenerateArgs),
    /// Recover a sparse representation from a sample file.
    Recover(RecoverArgs),
    /// Run one of the benchmark tables and write it as CSV.
    Bench(BenchArgs),
    /// Monte-Carlo checks of the estimator guarantees.
    VerifyLemmas(LemmaArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: u64,
    /// Planted modes as `freq:re+imi`, comma separated.
    #[arg(long)]
    modes: String,
    /// Probability that a sample is available.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Noise level; the noise has total energy `σ²`.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    /// Sample file written by `generate` or by hand.
    input: PathBuf,
    #[arg(short = 'B', long = "b")]
    b: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = NormMode::Greedy)]
    mode: NormMode,
    /// Stop once the residual energy falls below this fraction of the input's.
    #[arg(long)]
    stop_relative: Option<f64>,
    #[arg(long)]
    iteration_cap: Option<usize>,
    /// Where to write the representation; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Planted modes to score against; defaults to `<input>.truth` if present.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// T1-scaling, T3-modes, T4-availability, T5-noise or T6-shapes.
    #[arg(long)]
    table: TableId,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mode: Option<Vec<NormMode>>,
    #[arg(long)]
    runs: Option<usize>,
    /// Leave out wall-clock columns so the output is reproducible.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 10_000)]
    masks: usize,
    /// Failure probability for the estimator checks.
    #[arg(long)]
    delta: Option<f64>,
}

fn parse_modes(text: &str) -> Result<Vec<ModeSpec>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (f, c) = item
                .split_once(':')
                .with_context(|| format!("mode `{item}` is not `freq:coefficient`"))?;
            let f: u64 = f.trim().parse().with_context(|| format!("bad frequency in `{item}`"))?;
            let c: Complex64 = c.trim().parse().map_err(|e| anyhow::anyhow!("bad coefficient in `{item}`: {e}"))?;
            Ok(ModeSpec::new(f, c))
        })
        .collect()
}

fn truth_path(samples: &Path) -> PathBuf {
    let mut s = samples.as_os_str().to_owned();
    s.push(".truth");
    PathBuf::from(s)
}

fn generate(args: GenerateArgs, seed: u64) -> Result<()> {
    let modes = parse_modes(&args.modes)?;
    if let Some(m) = modes.iter().find(|m| m.frequency >= args.n) {
        bail!("frequency {} out of range for n = {}", m.frequency, args.n);
    }
    let mut rng = from_seed(seed);
    let full = synthesize(&modes, args.n, args.sigma, &mut rng)?;
    let mask = bernoulli_mask(args.n, args.p, &mut rng)?;
    let data = SampledSignal::from_full(&full, mask)?;
    save_samples(&args.out, &data).with_context(|| format!("writing {}", args.out.display()))?;
    let truth = Representation::from_terms(args.n, modes.iter().map(|m| (m.frequency, m.amplitude)).collect())?;
    save_representation(&truth_path(&args.out), &truth)?;
    eprintln!(
        "wrote {} of {} samples to {}",
        data.mask().available_count(),
        args.n,
        args.out.display()
    );
    Ok(())
}

fn recover_cmd(args: RecoverArgs, seed: u64) -> Result<()> {
    let data = load_samples(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let mut cfg = PursuitConfig::new(args.b, args.epsilon, args.delta, args.mode);
    if let Some(r) = args.stop_relative {
        cfg.stop_relative = r;
    }
    cfg.iteration_cap = args.iteration_cap;
    cfg.validate()?;
    let report = recover(&data, &cfg, &mut from_seed(seed))?;
    let rep = &report.representation;
    match &args.out {
        Some(path) => save_representation(path, rep)?,
        None => nusfft::io::write_representation(std::io::stdout().lock(), rep)?,
    }
    let mut line = format!(
        "terms={} iterations={} samples_touched={} time_total={:.6}s time_wo_sampling={:.6}s converged={}",
        rep.len(),
        report.iterations,
        report.samples_touched,
        report.time_total.as_secs_f64(),
        report.time_wo_sampling.as_secs_f64(),
        report.converged
    );
    let truth = args.truth.clone().or_else(|| {
        let p = truth_path(&args.input);
        p.exists().then_some(p)
    });
    if let Some(path) = truth {
        let truth = load_representation(&path)?;
        let success = truth.terms().iter().all(|&(f, _)| rep.coefficient(f).is_some());
        line += &format!(
            " success={success} relative_error={:.3e}",
            relative_coefficient_error(&truth, rep)
        );
    }
    eprintln!("{line}");
    Ok(())
}

fn bench(args: BenchArgs, seed: u64) -> Result<()> {
    let mut spec = ExperimentSpec::preset(args.table);
    spec.seed = seed;
    if let Some(v) = args.n {
        spec.ns = v;
    }
    if let Some(v) = args.b {
        spec.bs = v;
    }
    if let Some(v) = args.p {
        spec.ps = v;
    }
    if let Some(v) = args.sigma {
        spec.sigmas = v;
    }
    if let Some(v) = args.mode {
        spec.modes = v;
    }
    if let Some(v) = args.runs {
        spec.runs = v;
    }
    if let Some(v) = args.jobs {
        spec.jobs = v.max(1);
    }
    spec.timing = !args.no_timing;
    let csv = run_table(&spec)?;
    match args.out {
        Some(path) => fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn verify_lemmas(args: LemmaArgs, seed: u64) -> Result<bool> {
    let params = LemmaParams { seed, trials: args.trials, masks: args.masks, delta: args.delta };
    let checks = run_suite(&params)?;
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a, cli.seed).map(|_| true),
        Command::Recover(a) => recover_cmd(a, cli.seed).map(|_| true),
        Command::Bench(a) => bench(a, cli.seed).map(|_| true),
        Command::VerifyLemmas(a) => verify_lemmas(a, cli.seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks were violated");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
