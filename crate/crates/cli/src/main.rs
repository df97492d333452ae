mod config;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use htspec::experiments::{
    default_law, parse_grid, run_edge_experiment, run_hermitian_experiment, run_phase_sweep, run_poisson_experiment,
    run_truncation_experiment, ExperimentConfig, ExperimentReport, SweepConfig, TruncationParams,
};
use htspec::spectral::{eig_dense_symmetric, spectral_dense, top_eigs};
use htspec::verify::{run_verify, VerifyConfig};
use htspec::{sample_matrix, EnsembleSpec, Error, LanczosOptions, Shape, SparseMatrix, SparsitySpec, TailLaw};

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "htspec", version, about = "Sparse heavy-tailed random matrices: sampling, spectra and limit-law experiments")]
struct Cli {
    /// `key = value` file with optional `[subcommand]` sections; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw one matrix and write it as `i,j,value` CSV.
    Sample(SampleArgs),
    /// Top eigenpairs of a matrix read from CSV.
    Spectrum(SpectrumArgs),
    /// Monte Carlo experiment with pass/fail verdicts.
    Experiment(ExperimentArgs),
    /// Summary statistics over an (alpha, mu) grid.
    Sweep(SweepArgs),
    /// Exact invariants on randomized small instances.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Aspect ratio p / n (ignored with --hermitian).
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Symmetric n x n matrix; only the upper triangle is written.
    #[arg(long)]
    hermitian: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long)]
    topk: Option<usize>,
    /// Full dense eigensolver instead of Lanczos.
    #[arg(long)]
    dense: bool,
    /// Input holds the upper triangle of a symmetric matrix.
    #[arg(long)]
    hermitian: bool,
    /// Row count when trailing rows are empty.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON summary file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Eigenvector CSV, one column per eigenvector.
    #[arg(long, value_name = "FILE")]
    vectors: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Poisson,
    Edge,
    Hermitian,
    Truncation,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Largest dimension solved densely.
    #[arg(long)]
    dense_limit: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated levels for the point-process counts.
    #[arg(long)]
    thresholds: Option<String>,
    /// Comma-separated exponents for the delocalization scan.
    #[arg(long)]
    betas: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gamma_prime: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// JSON report file; verdicts are always printed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-replicate CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// `lo:hi:step` or a single value.
    #[arg(long)]
    alpha_grid: Option<String>,
    #[arg(long)]
    mu_grid: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV table; printed to stdout when neither output is given.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    bound_instances: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Bad flags, config or input; exit 1.
    Usage(String),
    /// A verdict or invariant failed; exit 2.
    Verdict(String),
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Library errors, prefixed with the flag or step they came from.
fn lib<T>(context: &str, r: htspec::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::Invariant { .. } => Failure::Verdict(format!("{context}: {e}")),
        e => Failure::Usage(format!("{context}: {e}")),
    })
}

fn io<T>(path: &Path, r: io::Result<T>) -> CliResult<T> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Config-file values for one subcommand.
struct Overlay {
    values: BTreeMap<String, String>,
}

impl Overlay {
    fn new(file: Option<&ConfigFile>, section: &str) -> CliResult<Self> {
        let values = file.map(|f| f.values_for(section)).unwrap_or_default();
        let cmd = Cli::command();
        let sub = cmd.find_subcommand(section).expect("known subcommand");
        let known: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).collect();
        if let Some(bad) = values.keys().find(|k| !known.contains(&k.as_str()) || *k == "config") {
            return Err(usage(format!("--config: unknown key `{bad}` for `{section}`")));
        }
        Ok(Overlay { values })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| usage(format!("--config key `{key}`: cannot parse `{v}`: {e}"))),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        self.get(flag, key)?.ok_or_else(|| usage(format!("--{key} is required")))
    }

    fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get(None::<bool>, key)?.unwrap_or(false))
    }
}

fn workers_from_env() -> CliResult<Option<usize>> {
    match std::env::var("HTSPEC_WORKERS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(usage(format!("HTSPEC_WORKERS: expected a positive integer, got `{s}`"))),
        },
    }
}

fn positive(key: &str, v: usize) -> CliResult<usize> {
    if v == 0 {
        Err(usage(format!("--{key} must be positive")))
    } else {
        Ok(v)
    }
}

fn parse_list(key: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| usage(format!("--{key}: `{x}`: {e}"))))
        .collect()
}

fn write_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> htspec::Result<()>) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(io(p, File::create(p))?);
            lib(&p.display().to_string(), write(&mut w))?;
            io(p, w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            lib("stdout", write(&mut w))
        }
    }
}

fn law_for(alpha: f64) -> CliResult<TailLaw> {
    lib("--alpha", default_law(alpha))
}

fn sample(args: SampleArgs, o: &Overlay) -> CliResult<()> {
    let alpha = o.required(args.alpha, "alpha")?;
    let mu = o.or(args.mu, "mu", 1.0)?;
    let rho = o.or(args.rho, "rho", 1.0)?;
    let n = positive("n", o.required(args.n, "n")?)?;
    let seed = o.or(args.seed, "seed", 0)?;
    let hermitian = o.switch(args.hermitian, "hermitian")?;
    let out = o.get(args.out, "out")?;
    let shape = if hermitian { Shape::Hermitian { n } } else { Shape::Rectangular { n, rho } };
    let spec = EnsembleSpec { shape, law: law_for(alpha)?, sparsity: SparsitySpec::bernoulli(mu), seed };
    let m = lib("sample", sample_matrix(&spec))?;
    write_output(out.as_deref(), |w| m.write_csv(w))?;
    eprintln!("sampled {} x {} matrix with {} nonzeros", m.rows(), m.cols(), m.nnz());
    Ok(())
}

fn spectrum(args: SpectrumArgs, o: &Overlay) -> CliResult<()> {
    let input = o.required(args.input, "in")?;
    let topk = positive("topk", o.or(args.topk, "topk", 5)?)?;
    let dense = o.switch(args.dense, "dense")?;
    let hermitian = o.switch(args.hermitian, "hermitian")?;
    let rows = o.get(args.rows, "rows")?;
    let cols = o.get(args.cols, "cols")?;
    let tol = o.or(args.tol, "tol", LanczosOptions::default().tol)?;
    let seed = o.or(args.seed, "seed", LanczosOptions::default().seed)?;
    let out = o.get(args.out, "out")?;
    let vectors = o.get(args.vectors, "vectors")?;

    let file = io(&input, File::open(&input))?;
    let read = SparseMatrix::read_csv(BufReader::new(file), None, hermitian);
    let mut m = lib(&format!("--in {}", input.display()), read)?;
    if rows.is_some() || cols.is_some() {
        let dims = (rows.unwrap_or(m.rows()), cols.unwrap_or(m.cols()));
        let dims = if hermitian { (dims.0.max(dims.1), dims.0.max(dims.1)) } else { dims };
        let file = io(&input, File::open(&input))?;
        m = lib("--rows/--cols", SparseMatrix::read_csv(BufReader::new(file), Some(dims), hermitian))?;
    }
    let result = if dense {
        let mut r = lib("dense solve", eig_dense_symmetric(&spectral_dense(&m)))?;
        let k = topk.min(r.eigenvalues.len());
        r.eigenvalues.truncate(k);
        r.eigenvectors.truncate(k);
        r.residual_norms.truncate(k);
        r
    } else {
        let k = topk.min(m.rows());
        lib("lanczos", top_eigs(&m, k, &LanczosOptions { tol, max_iter: None, seed }))?
    };
    if !result.converged {
        eprintln!("warning: Lanczos stopped at its iteration cap; the result is partial");
    }
    write_output(out.as_deref(), |w| {
        writeln!(w, "{}", result.to_json()?)?;
        Ok(())
    })?;
    if let Some(p) = vectors {
        write_output(Some(&p), |w| result.write_eigenvectors_csv(w))?;
    }
    Ok(())
}

fn experiment(args: ExperimentArgs, o: &Overlay, workers: Option<usize>) -> CliResult<()> {
    let kind = args.kind;
    let alpha = o.required(args.alpha, "alpha")?;
    let mu = o.or(args.mu, "mu", 1.0)?;
    let rho = o.or(args.rho, "rho", 1.0)?;
    let n = positive("n", o.or(args.n, "n", 500)?)?;
    let mut cfg = match kind {
        Kind::Hermitian => lib("--alpha/--mu", ExperimentConfig::hermitian(alpha, mu, n))?,
        _ => lib("--alpha/--mu/--rho", ExperimentConfig::covariance(alpha, mu, rho, n))?,
    };
    cfg.replicates = positive("reps", o.or(args.reps, "reps", cfg.replicates)?)?;
    cfg.master_seed = o.or(args.seed, "seed", cfg.master_seed)?;
    cfg.top_k = positive("topk", o.or(args.topk, "topk", cfg.top_k)?)?;
    cfg.tol = o.or(args.tol, "tol", cfg.tol)?;
    cfg.max_iter = o.get(args.max_iter, "max-iter")?;
    cfg.dense_limit = o.or(args.dense_limit, "dense-limit", cfg.dense_limit)?;
    cfg.esd_bins = positive("bins", o.or(args.bins, "bins", cfg.esd_bins)?)?;
    cfg.eta = o.or(args.eta, "eta", cfg.eta)?;
    if let Some(s) = o.get(args.thresholds, "thresholds")? {
        cfg.thresholds = parse_list("thresholds", &s)?;
    }
    if let Some(s) = o.get(args.betas, "betas")? {
        cfg.betas = parse_list("betas", &s)?;
    }
    cfg.workers = workers;

    let gamma = o.get(args.gamma, "gamma")?;
    let gamma_prime = o.get(args.gamma_prime, "gamma-prime")?;
    let kappa = o.get(args.kappa, "kappa")?;
    if kind != Kind::Truncation {
        for (set, flag) in [(gamma.is_some(), "gamma"), (gamma_prime.is_some(), "gamma-prime"), (kappa.is_some(), "kappa")] {
            if set {
                return Err(usage(format!("--{flag} only applies to `experiment truncation`")));
            }
        }
    }
    let out = o.get(args.out, "out")?;
    let csv = o.get(args.csv, "csv")?;

    let report: ExperimentReport = match kind {
        Kind::Poisson => lib("experiment poisson", run_poisson_experiment(&cfg))?,
        Kind::Edge => lib("experiment edge", run_edge_experiment(&cfg))?,
        Kind::Hermitian => lib("experiment hermitian", run_hermitian_experiment(&cfg))?,
        Kind::Truncation => {
            let d = TruncationParams::defaults_for(alpha, mu);
            let params = TruncationParams {
                gamma: gamma.unwrap_or(d.gamma),
                gamma_prime: gamma_prime.unwrap_or(d.gamma_prime),
                kappa: kappa.unwrap_or(d.kappa),
            };
            lib("experiment truncation", run_truncation_experiment(&cfg, params))?
        }
    };
    if let Some(p) = out {
        write_output(Some(&p), |w| {
            writeln!(w, "{}", report.to_json()?)?;
            Ok(())
        })?;
    }
    if let Some(p) = csv {
        write_output(Some(&p), |w| report.write_csv(w))?;
    }
    for v in &report.verdicts {
        println!("{} {}: {} (target {})", if v.pass { "PASS" } else { "FAIL" }, v.criterion, v.observed, v.target);
    }
    eprintln!("{} replicates in {:.1}s", report.replicates.len(), report.total_elapsed().as_secs_f64());
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("{} of {} verdicts failed", report.verdicts.iter().filter(|v| !v.pass).count(), report.verdicts.len())))
    }
}

fn sweep(args: SweepArgs, o: &Overlay, workers: Option<usize>) -> CliResult<()> {
    let alphas = lib("--alpha-grid", parse_grid(&o.required(args.alpha_grid, "alpha-grid")?))?;
    let mus = lib("--mu-grid", parse_grid(&o.required(args.mu_grid, "mu-grid")?))?;
    let mut cfg = SweepConfig::new(alphas, mus, positive("n", o.or(args.n, "n", 200)?)?);
    cfg.rho = o.or(args.rho, "rho", cfg.rho)?;
    cfg.replicates = positive("reps", o.or(args.reps, "reps", cfg.replicates)?)?;
    cfg.top_k = positive("topk", o.or(args.topk, "topk", cfg.top_k)?)?;
    cfg.master_seed = o.or(args.seed, "seed", cfg.master_seed)?;
    cfg.tol = o.or(args.tol, "tol", cfg.tol)?;
    cfg.workers = workers;
    let out = o.get(args.out, "out")?;
    let csv = o.get(args.csv, "csv")?;
    let report = lib("sweep", run_phase_sweep(&cfg))?;
    if let Some(p) = &out {
        write_output(Some(p), |w| {
            writeln!(w, "{}", report.to_json()?)?;
            Ok(())
        })?;
    }
    if csv.is_some() || out.is_none() {
        write_output(csv.as_deref(), |w| report.write_csv(w))?;
    }
    Ok(())
}

fn verify(args: VerifyArgs, o: &Overlay) -> CliResult<()> {
    let d = VerifyConfig::default();
    let cfg = VerifyConfig {
        seed: o.or(args.seed, "seed", d.seed)?,
        instances: o.or(args.instances, "instances", d.instances)?,
        bound_instances: o.or(args.bound_instances, "bound-instances", d.bound_instances)?,
        max_dim: positive("max-dim", o.or(args.max_dim, "max-dim", d.max_dim)?)?,
        ..d
    };
    let out = o.get(args.out, "out")?;
    let report = lib("verify", run_verify(&cfg))?;
    for (name, t) in &report.checks {
        println!("{} {name}: {}/{}", if t.passed == t.total { "PASS" } else { "FAIL" }, t.passed, t.total);
    }
    if let Some(p) = out {
        write_output(Some(&p), |w| {
            writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(())
        })?;
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verdict(format!("{} invariant checks failed", report.failures().len())))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose().map_err(Failure::Usage)?;
    if let Some(f) = &file {
        let cmd = Cli::command();
        if let Some(bad) = f.sections.keys().find(|s| !s.is_empty() && cmd.find_subcommand(s.as_str()).is_none()) {
            return Err(usage(format!("--config: unknown section `[{bad}]`")));
        }
    }
    let workers = workers_from_env()?;
    let file = file.as_ref();
    match cli.command {
        Command::Sample(a) => sample(a, &Overlay::new(file, "sample")?),
        Command::Spectrum(a) => spectrum(a, &Overlay::new(file, "spectrum")?),
        Command::Experiment(a) => experiment(a, &Overlay::new(file, "experiment")?, workers),
        Command::Sweep(a) => sweep(a, &Overlay::new(file, "sweep")?, workers),
        Command::Verify(a) => verify(a, &Overlay::new(file, "verify")?),
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verdict(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
