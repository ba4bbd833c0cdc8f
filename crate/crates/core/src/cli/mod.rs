//! The `rpgp` command line.
//!
//! Every setting can come from a flag or from a `key = value` file passed
//! with `--config`; flags win. Keys are the flag names with `_` for `-`.
//! Each output file starts with a `#` header holding the tool version, the
//! command and every resolved setting, which is enough to replay the run.
//!
//! Exit codes: 0 success, 2 bad configuration or input, 3 numerical failure.

pub mod ingest;
pub mod io;
pub mod settings;
pub mod synth;

use std::io::IsTerminal as _;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use crate::diag::{self, median};
use crate::infer::{
    self, build_approximation, summarize, ApproxConfig, ApproxKind, GammaPrior, GibbsConfig, PredictTarget, PriorSpec,
    RankMode, Theta1Update,
};
use crate::kernels::{Dataset, KernelSpec};
use crate::{Error, Result};
use io::fmt_f64;
use settings::{header, read_header, List, Settings};

#[derive(Parser, Debug)]
#[command(name = "rpgp", version, about = "Reduced-rank Gaussian-process regression with random-projection approximations")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key = value` settings file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings in the output (makes it non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate noisy bump-mixture data on [0, 1].
    Synth(SynthArgs),
    /// Fixed-rank comparison on a grid kernel matrix.
    Table1(Table1Args),
    /// Ranks needed to reach a target error on an exponential-decay matrix.
    Table2(Table2Args),
    /// Gibbs-sample θ₁, θ₂, τ and score the test split.
    Fit(FitArgs),
    /// Plug-in predictions from a samples file.
    Predict(PredictArgs),
    /// Convert a raw data file into the dataset CSV format.
    Ingest(IngestArgs),
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    /// smooth, wavy or very-wavy.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Bump centers, overriding the preset (with widths and amplitudes).
    #[arg(long)]
    pub centers: Option<List<f64>>,
    #[arg(long)]
    pub widths: Option<List<f64>>,
    #[arg(long)]
    pub amplitudes: Option<List<f64>>,
}

#[derive(Args, Debug, Default)]
pub struct Table1Args {
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid bounds.
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub ranks: Option<List<usize>>,
    /// Replicates per randomized cell.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub methods: Option<List<ApproxKind>>,
}

#[derive(Args, Debug, Default)]
pub struct Table2Args {
    #[arg(long)]
    pub n: Option<usize>,
    /// Eigenvalue decay rate.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub eps: Option<List<f64>>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub methods: Option<List<ApproxKind>>,
    /// Range-finder probe count.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Seed for the random eigenbasis (default: --seed).
    #[arg(long)]
    pub matrix_seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct FitArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<String>,
    /// rp, pp1 or pp2.
    #[arg(long)]
    pub method: Option<ApproxKind>,
    /// `target` (adaptive rank) or `fixed`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub rank: Option<usize>,
    /// PP1 in target mode: `rp` reuses RP's per-grid ranks, `own` stops at
    /// the target error.
    #[arg(long)]
    pub budget: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// τ ~ Ga(a1, b1).
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    /// θ₂ ~ Ga(a2, b2).
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
    /// θ₁ grid: `grid_size` equispaced points on (0, grid_max].
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub corrected: Option<bool>,
    #[arg(long)]
    pub nugget: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    /// conditional or collapsed.
    #[arg(long)]
    pub theta1_update: Option<Theta1Update>,
    /// Where to write the post-burn-in draws.
    #[arg(long)]
    pub samples: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct PredictArgs {
    /// Dataset CSV; train rows are conditioned on, test rows predicted.
    #[arg(long)]
    pub data: Option<String>,
    /// Samples file written by `fit`.
    #[arg(long)]
    pub samples: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct IngestArgs {
    /// Raw input file.
    #[arg(long)]
    pub input: Option<String>,
    /// abalone, sarcos, numeric or canonical.
    #[arg(long)]
    pub schema: Option<ingest::Schema>,
    /// 1-based response column (numeric schema).
    #[arg(long)]
    pub response: Option<usize>,
    #[arg(long)]
    pub skip_header: Option<bool>,
    #[arg(long)]
    pub standardize: Option<bool>,
    /// Random test fraction (seeded).
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Use the final k rows as the test split.
    #[arg(long)]
    pub test_last: Option<usize>,
}

const SYNTH_KEYS: &[&str] = &["seed", "preset", "n", "noise", "train_fraction", "centers", "widths", "amplitudes"];
const TABLE1_KEYS: &[&str] = &["seed", "n", "lo", "hi", "ranks", "seeds", "methods"];
const TABLE2_KEYS: &[&str] = &["seed", "n", "lambda", "eps", "seeds", "methods", "probes", "matrix_seed"];
const FIT_KEYS: &[&str] = &[
    "seed", "data", "method", "mode", "eps", "rank", "budget", "iterations", "burnin", "a1", "b1", "a2", "b2", "grid_max",
    "grid_size", "corrected", "nugget", "probes", "theta1_update", "samples",
];
const PREDICT_KEYS: &[&str] = &["seed", "data", "samples"];
const INGEST_KEYS: &[&str] =
    &["seed", "input", "schema", "response", "skip_header", "standardize", "test_fraction", "test_last"];

struct Ctx {
    seed_flag: Option<u64>,
    out: Option<PathBuf>,
    timing: bool,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(cli)
}

pub fn execute(cli: Cli) -> Result<()> {
    let ctx = Ctx { seed_flag: cli.seed, out: cli.out.clone(), timing: cli.timing };
    let config = cli.config.as_deref();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(&ctx, Settings::load(config, SYNTH_KEYS)?, a),
        Command::Table1(a) => cmd_table1(&ctx, Settings::load(config, TABLE1_KEYS)?, a),
        Command::Table2(a) => cmd_table2(&ctx, Settings::load(config, TABLE2_KEYS)?, a),
        Command::Fit(a) => cmd_fit(&ctx, Settings::load(config, FIT_KEYS)?, a),
        Command::Predict(a) => cmd_predict(&ctx, Settings::load(config, PREDICT_KEYS)?, a),
        Command::Ingest(a) => cmd_ingest(&ctx, Settings::load(config, INGEST_KEYS)?, a),
    })
}

/// Entry point for the binary: runs on the process arguments and returns
/// the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("rpgp: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

fn csv_rows(rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn cmd_synth(ctx: &Ctx, mut s: Settings, a: SynthArgs) -> Result<()> {
    let seed = s.get("seed", ctx.seed_flag, 0)?;
    let preset_name = s.get("preset", a.preset, "wavy".to_string())?;
    let (mut centers, mut widths, mut amplitudes) = synth::preset(&preset_name)?;
    let custom = (s.optional("centers", a.centers)?, s.optional("widths", a.widths)?, s.optional("amplitudes", a.amplitudes)?);
    match custom {
        (Some(c), Some(w), Some(am)) => (centers, widths, amplitudes) = (c.0, w.0, am.0),
        (None, None, None) => {}
        _ => return Err(Error::Config("centers, widths and amplitudes must be given together".into())),
    }
    let spec = synth::SyntheticSpec {
        centers,
        widths,
        amplitudes,
        n: s.get("n", a.n, 500)?,
        noise: s.get("noise", a.noise, 0.1)?,
        train_fraction: s.get("train_fraction", a.train_fraction, 0.8)?,
        seed,
    };
    let data = spec.generate()?;
    io::emit(ctx.out.as_deref(), &(header("synth", s.resolved(), &[]) + &io::dataset_csv(&data)))
}

fn cmd_table1(ctx: &Ctx, mut s: Settings, a: Table1Args) -> Result<()> {
    let seed = s.get("seed", ctx.seed_flag, 0)?;
    let n = s.get("n", a.n, 1000)?;
    let lo = s.get("lo", a.lo, 0.1)?;
    let hi = s.get("hi", a.hi, 100.0)?;
    let ranks = s.get("ranks", a.ranks, List(vec![10, 25, 50, 100]))?.0;
    let reps = s.get("seeds", a.seeds, 50)?;
    let methods = s.get("methods", a.methods, List(vec![ApproxKind::Rp, ApproxKind::Pp1, ApproxKind::Pp2]))?.0;
    if n < 2 || !(hi > lo) || ranks.iter().any(|&m| m == 0 || m > n) || methods.is_empty() || reps == 0 {
        return Err(Error::Config("need n >= 2, hi > lo, ranks in 1..=n, seeds >= 1 and at least one method".into()));
    }
    let k = diag::grid_kernel_matrix(n, lo, hi);
    let reports = diag::fixed_rank_study(&k, &methods, &ranks, reps, seed);

    let mut cols = strings(&["method", "rank", "replicate", "frobenius", "spectral", "cond_retained", "cond_inverted"]);
    if ctx.timing {
        cols.push("seconds".into());
    }
    cols.push("error".into());
    let mut rows = vec![cols];
    for r in &reports {
        let mut row = vec![
            r.method.to_string(),
            r.rank.to_string(),
            r.replicate.map_or(String::new(), |v| v.to_string()),
            fmt_f64(r.frobenius),
            fmt_f64(r.spectral),
            fmt_f64(r.cond_retained),
            fmt_f64(r.cond_inverted),
        ];
        if ctx.timing {
            row.push(fmt_f64(r.seconds));
        }
        row.push(r.error.clone().unwrap_or_default());
        rows.push(row);
    }
    for &method in &methods {
        for &m in &ranks {
            // Cells are keyed by the requested rank; a knot model may retain fewer.
            let cell: Vec<&diag::ApproxReport> = reports
                .iter()
                .enumerate()
                .filter(|(i, r)| r.method == method && cell_rank(&methods, &ranks, reps, *i) == m)
                .map(|(_, r)| r)
                .collect();
            let mut row = vec![
                method.to_string(),
                m.to_string(),
                "median".into(),
                fmt_f64(median(cell.iter().map(|r| r.frobenius))),
                fmt_f64(median(cell.iter().map(|r| r.spectral))),
                fmt_f64(median(cell.iter().map(|r| r.cond_retained))),
                fmt_f64(median(cell.iter().map(|r| r.cond_inverted))),
            ];
            if ctx.timing {
                row.push(fmt_f64(median(cell.iter().map(|r| r.seconds))));
            }
            let failed = cell.iter().filter(|r| r.error.is_some()).count();
            row.push(if failed > 0 { format!("{failed} of {} cells failed", cell.len()) } else { String::new() });
            rows.push(row);
        }
    }
    io::emit(ctx.out.as_deref(), &(header("table1", s.resolved(), &[]) + &csv_rows(&rows)?))
}

/// Requested rank of the `i`-th report in [`diag::fixed_rank_study`] order.
fn cell_rank(methods: &[ApproxKind], ranks: &[usize], reps: usize, i: usize) -> usize {
    let mut at = 0;
    for &method in methods {
        let per = if method == ApproxKind::Pp2 { 1 } else { reps };
        for &m in ranks {
            if i < at + per {
                return m;
            }
            at += per;
        }
    }
    unreachable!("report index out of range")
}

fn cmd_table2(ctx: &Ctx, mut s: Settings, a: Table2Args) -> Result<()> {
    let seed = s.get("seed", ctx.seed_flag, 0)?;
    let n = s.get("n", a.n, 100)?;
    let lambda = s.get("lambda", a.lambda, 0.5)?;
    let eps_list = s.get("eps", a.eps, List(vec![0.1]))?.0;
    let reps = s.get("seeds", a.seeds, 50)?;
    let methods = s.get("methods", a.methods, List(vec![ApproxKind::Rp, ApproxKind::Pp1, ApproxKind::Pp2]))?.0;
    let probes = s.optional("probes", a.probes)?;
    let matrix_seed = s.get("matrix_seed", a.matrix_seed, seed)?;
    if n < 2 || !(lambda > 0.0) || eps_list.is_empty() || methods.is_empty() || reps == 0 {
        return Err(Error::Config("need n >= 2, lambda > 0, seeds >= 1, an eps list and at least one method".into()));
    }
    let k = diag::exp_decay_matrix(n, lambda, matrix_seed);

    let mut cols = strings(&["method", "eps", "replicate", "rank", "cond_retained", "cond_inverted", "achieved", "exhausted"]);
    if ctx.timing {
        cols.push("seconds".into());
    }
    cols.push("error".into());
    let width = cols.len();
    let mut rows = vec![cols];
    for &eps in &eps_list {
        let (optimal, reports) = diag::target_error_study(&k, eps, &methods, reps, seed, probes)?;
        let mut opt = vec!["optimal".to_string(), fmt_f64(eps), String::new(), optimal.to_string()];
        opt.resize(width, String::new());
        rows.push(opt);
        for r in &reports {
            let mut row = vec![
                r.method.to_string(),
                fmt_f64(eps),
                r.replicate.map_or(String::new(), |v| v.to_string()),
                r.rank.to_string(),
                fmt_f64(r.cond_retained),
                fmt_f64(r.cond_inverted),
                fmt_f64(r.achieved),
                r.exhausted.to_string(),
            ];
            if ctx.timing {
                row.push(fmt_f64(r.seconds));
            }
            row.push(r.error.clone().unwrap_or_default());
            rows.push(row);
        }
        for &method in &methods {
            let cell: Vec<&diag::TargetErrorReport> =
                reports.iter().filter(|r| r.method == method && r.error.is_none()).collect();
            let mut row = vec![
                method.to_string(),
                fmt_f64(eps),
                "median".into(),
                fmt_f64(median(cell.iter().map(|r| r.rank as f64))),
                fmt_f64(median(cell.iter().map(|r| r.cond_retained))),
                fmt_f64(median(cell.iter().map(|r| r.cond_inverted))),
                fmt_f64(median(cell.iter().map(|r| r.achieved))),
                cell.iter().filter(|r| r.exhausted).count().to_string(),
            ];
            if ctx.timing {
                row.push(fmt_f64(median(cell.iter().map(|r| r.seconds))));
            }
            let failed = reports.iter().filter(|r| r.method == method && r.error.is_some()).count();
            row.push(if failed > 0 { format!("{failed} cells failed") } else { String::new() });
            rows.push(row);
        }
    }
    io::emit(ctx.out.as_deref(), &(header("table2", s.resolved(), &[]) + &csv_rows(&rows)?))
}

/// Everything `fit` resolves from its settings; `predict` rebuilds it from
/// the samples header.
struct FitSpec {
    priors: PriorSpec,
    approx: ApproxConfig,
    /// PP1 borrows RP's per-grid ranks.
    rp_budget: bool,
    gibbs: GibbsConfig,
}

fn fit_spec(s: &mut Settings, a: FitArgs, seed: u64) -> Result<FitSpec> {
    let kind = s.get("method", a.method, ApproxKind::Rp)?;
    let mode = s.get("mode", a.mode, "target".to_string())?;
    let mode = match mode.as_str() {
        "target" => RankMode::TargetError(s.get("eps", a.eps, 0.1)?),
        "fixed" => RankMode::FixedRank(s.get("rank", a.rank, 10)?),
        other => return Err(Error::Config(format!("mode must be 'target' or 'fixed', not '{other}'"))),
    };
    let rp_budget = if kind == ApproxKind::Pp1 && matches!(mode, RankMode::TargetError(_)) {
        match s.get("budget", a.budget, "rp".to_string())?.as_str() {
            "rp" => true,
            "own" => false,
            other => return Err(Error::Config(format!("budget must be 'rp' or 'own', not '{other}'"))),
        }
    } else {
        false
    };
    let mut approx = ApproxConfig::new(kind, mode);
    approx.corrected = s.get("corrected", a.corrected, true)?;
    approx.nugget = s.get("nugget", a.nugget, 1e-6)?;
    approx.probes = s.optional("probes", a.probes)?;
    if !(approx.nugget >= 0.0) {
        return Err(Error::Config("nugget must be nonnegative".into()));
    }
    let priors = PriorSpec::new(
        GammaPrior::new(s.get("a1", a.a1, 1.0)?, s.get("b1", a.b1, 10.0)?)?,
        GammaPrior::new(s.get("a2", a.a2, 2.0)?, s.get("b2", a.b2, 20.0)?)?,
        PriorSpec::uniform_grid(s.get("grid_max", a.grid_max, 2.0)?, s.get("grid_size", a.grid_size, 2000)?),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let gibbs = GibbsConfig {
        iterations: s.get("iterations", a.iterations, 2000)?,
        burnin: s.get("burnin", a.burnin, 500)?,
        seed,
        theta1_update: s.get("theta1_update", a.theta1_update, Theta1Update::Conditional)?,
        ..GibbsConfig::default()
    };
    if gibbs.burnin >= gibbs.iterations {
        return Err(Error::Config(format!("burnin {} must be below iterations {}", gibbs.burnin, gibbs.iterations)));
    }
    Ok(FitSpec { priors, approx, rp_budget, gibbs })
}

fn rp_config(approx: &ApproxConfig) -> ApproxConfig {
    ApproxConfig { kind: ApproxKind::Rp, ..approx.clone() }
}

fn read_fit_data(path: &Path) -> Result<Dataset> {
    let (data, _) = io::read_dataset(path)?;
    if data.train_indices().is_empty() {
        return Err(Error::Config("dataset has no training rows".into()));
    }
    Ok(data)
}

fn cmd_fit(ctx: &Ctx, mut s: Settings, a: FitArgs) -> Result<()> {
    let seed = s.get("seed", ctx.seed_flag, 0)?;
    let data_path = PathBuf::from(s.required("data", a.data.clone())?);
    let samples_path = s.optional("samples", a.samples.clone())?.map(PathBuf::from);
    let mut spec = fit_spec(&mut s, a, seed)?;
    let data = read_fit_data(&data_path)?;
    let t0 = Instant::now();
    if spec.rp_budget {
        let rp = infer::PrecomputedGrid::build(&data.train().x, spec.priors.grid(), &rp_config(&spec.approx), seed)?;
        spec.approx.mode = RankMode::PerGrid(rp.ranks());
    }
    let res = infer::fit(&data, &spec.priors, &spec.approx, &spec.gibbs)?;
    let seconds = t0.elapsed().as_secs_f64();

    let smp = &res.samples;
    let mut rows = vec![strings(&["quantity", "mean", "lower", "upper", "ess"])];
    let mut pretty = vec![format!("{:<10}{:>14}{:>14}{:>14}{:>10}", "", "mean", "2.5%", "97.5%", "ess")];
    for (name, chain) in [("theta1", &smp.theta1), ("theta2", &smp.theta2), ("tau", &smp.tau)] {
        let c = summarize(chain)?;
        rows.push(vec![name.into(), fmt_f64(c.mean), fmt_f64(c.lower), fmt_f64(c.upper), fmt_f64(c.ess)]);
        pretty.push(format!("{name:<10}{:>14.6}{:>14.6}{:>14.6}{:>10.1}", c.mean, c.lower, c.upper, c.ess));
    }
    rows.push(vec!["mean_rank".into(), fmt_f64(smp.mean_rank())]);
    pretty.push(format!("{:<10}{:>14.2}", "mean rank", smp.mean_rank()));
    if let Some(e) = res.test_mspe {
        rows.push(vec!["test_mspe".into(), fmt_f64(e)]);
        pretty.push(format!("{:<10}{:>14.6e}", "test mspe", e));
    }
    if ctx.timing {
        rows.push(vec!["seconds".into(), fmt_f64(seconds)]);
    }
    if std::io::stderr().is_terminal() {
        eprintln!("{}", pretty.join("\n"));
    }
    let head = header("fit", s.resolved(), &[]);
    if let Some(p) = &samples_path {
        let mut srows = vec![strings(&["iter", "tau", "theta1", "theta2"])];
        for i in 0..smp.len() {
            srows.push(vec![
                (smp.burnin + i).to_string(),
                fmt_f64(smp.tau[i]),
                fmt_f64(smp.theta1[i]),
                fmt_f64(smp.theta2[i]),
            ]);
        }
        io::emit(Some(p), &(head.clone() + &csv_rows(&srows)?))?;
    }
    io::emit(ctx.out.as_deref(), &(head + &csv_rows(&rows)?))
}

/// Posterior draws read back from a samples file.
struct Draws {
    tau: Vec<f64>,
    theta1: Vec<f64>,
    theta2: Vec<f64>,
}

fn parse_samples(text: &str) -> Result<Draws> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["iter", "tau", "theta1", "theta2"] {
        return Err(Error::SchemaMismatch { columns: vec![1, 2, 3, 4], message: "expected iter,tau,theta1,theta2".into() });
    }
    let mut d = Draws { tau: vec![], theta1: vec![], theta2: vec![] };
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let f = |j: usize| rec[j].parse::<f64>().map_err(|_| Error::Parse { line, message: format!("bad number '{}'", &rec[j]) });
        d.tau.push(f(1)?);
        d.theta1.push(f(2)?);
        d.theta2.push(f(3)?);
    }
    if d.tau.is_empty() {
        return Err(Error::Parse { line: 1, message: "samples file has no draws".into() });
    }
    Ok(d)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cmd_predict(ctx: &Ctx, mut s: Settings, a: PredictArgs) -> Result<()> {
    s.get("seed", ctx.seed_flag, 0)?;
    let data_path = PathBuf::from(s.required("data", a.data)?);
    let samples_path = PathBuf::from(s.required("samples", a.samples)?);
    let text = std::fs::read_to_string(&samples_path)?;
    let mut fit_header = read_header(&text);
    if fit_header.get("command").map(String::as_str) != Some("fit") {
        return Err(Error::Config(format!("{} was not written by `fit`", samples_path.display())));
    }
    fit_header.remove("command");
    fit_header.remove("rpgp");
    let fit_seed: u64 = fit_header
        .get("seed")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config("samples header has no seed".into()))?;
    let mut fs = Settings::from_pairs(fit_header, FIT_KEYS)?;
    let spec = fit_spec(&mut fs, FitArgs::default(), fit_seed)?;
    let draws = parse_samples(&text)?;
    let data = read_fit_data(&data_path)?;
    let train = data.train();
    let mut target = data.test();
    if target.is_empty() {
        log::warn!("test split is empty; predicting at the training rows");
        target = train.clone();
    }

    // Plug-in at the posterior means, θ₁ snapped to its grid.
    let grid = spec.priors.grid();
    let t1 = mean(&draws.theta1);
    let idx = (0..grid.len()).min_by(|&i, &j| (grid[i] - t1).abs().total_cmp(&(grid[j] - t1).abs())).expect("grid is nonempty");
    let kernel = KernelSpec::squared_exponential(grid[idx], 1.0)?;
    let mut approx_cfg = spec.approx.clone();
    if spec.rp_budget {
        let rank = build_approximation(&kernel, &train.x, &rp_config(&spec.approx), idx, fit_seed)?.rank();
        approx_cfg.mode = RankMode::FixedRank(rank);
    }
    let approx = build_approximation(&kernel, &train.x, &approx_cfg, idx, fit_seed)?.rescaled(mean(&draws.theta2))?;
    let y = DVector::from_column_slice(&train.y);
    let pred = infer::predict(&approx, mean(&draws.tau), &y, &PredictTarget::NewLocations(target.x.clone()))?;
    let var = pred.cov.variance();

    let d = target.x.dim();
    let mut cols: Vec<String> = (1..=d).map(|j| format!("x{j}")).collect();
    cols.extend(strings(&["y", "mean", "variance"]));
    let mut rows = vec![cols];
    for i in 0..target.len() {
        let mut row: Vec<String> = target.x.row(i).iter().map(|v| fmt_f64(*v)).collect();
        row.extend([fmt_f64(target.y[i]), fmt_f64(pred.mean[i]), fmt_f64(var[i])]);
        rows.push(row);
    }
    let extra = vec![format!("theta1_grid = {}", fmt_f64(grid[idx]))];
    io::emit(ctx.out.as_deref(), &(header("predict", s.resolved(), &extra) + &csv_rows(&rows)?))
}

fn cmd_ingest(ctx: &Ctx, mut s: Settings, a: IngestArgs) -> Result<()> {
    let seed = s.get("seed", ctx.seed_flag, 0)?;
    let input = PathBuf::from(s.required("input", a.input)?);
    let schema = s.required("schema", a.schema)?;
    let response = s.optional("response", a.response)?;
    let skip_header = s.get("skip_header", a.skip_header, false)?;
    let standardize = s.get("standardize", a.standardize, schema != ingest::Schema::Canonical)?;
    let test_rows = match (s.optional("test_fraction", a.test_fraction)?, s.optional("test_last", a.test_last)?) {
        (Some(_), Some(_)) => return Err(Error::Config("give at most one of test_fraction and test_last".into())),
        (Some(p), None) => ingest::TestRows::Fraction(p, seed),
        (None, Some(k)) => ingest::TestRows::Last(k),
        (None, None) => ingest::TestRows::None,
    };
    let text = std::fs::read_to_string(&input)?;
    let opts = ingest::IngestOptions { schema, response, skip_header, standardize, test_rows };
    let (data, std) = ingest::ingest(&text, &opts)?;
    let extra = std.map(|st| st.header_lines()).unwrap_or_default();
    io::emit(ctx.out.as_deref(), &(header("ingest", s.resolved(), &extra) + &io::dataset_csv(&data)))
}
