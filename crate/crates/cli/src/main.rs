use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use voxid::audio::load_wav;
use voxid::features::SpeakerId;
use voxid::mfcc::FrontEndConfig;
use voxid::model_store::{load_model, read_dataset_csv, save_model, write_dataset_csv};
use voxid::svm::{KernelSpec, SolverKind};
use voxid_cli::bench::{run_bench, BenchOptions, DEFAULT_SIZES};
use voxid_cli::commands::{
    cmd_evaluate, cmd_extract, cmd_gen_corpus, cmd_identify, cmd_train, read_config, read_manifest, read_names,
    KernelChoice, LabeledInput, TrainOptions,
};
use voxid_cli::corpus::CorpusSpec;

#[derive(Parser)]
#[command(name = "voxid", version, about = "Speaker identification with MFCC features and SVMs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Front-end settings as `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the result table as CSV to this path.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Turn labeled WAVs into a dataset CSV.
    Extract(ExtractArgs),
    /// Fit one-vs-rest speaker models from a dataset CSV.
    Train(TrainArgs),
    /// Name the speaker of one WAV.
    Identify(IdentifyArgs),
    /// Per-speaker success rates on a labeled test set.
    Evaluate(EvaluateArgs),
    /// Time solvers on synthetic binary problems.
    Bench(BenchArgs),
    /// Write the synthetic speaker corpus.
    GenCorpus(GenCorpusArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// `label:path` pairs, e.g. `3:take1.wav`.
    inputs: Vec<String>,
    /// `path,label` CSV listing more inputs.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output dataset CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Warn about unreadable files instead of failing.
    #[arg(long)]
    skip_bad: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Smo,
    Chunking,
    FixedSize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
    Poly,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV from `extract`.
    #[arg(long)]
    data: PathBuf,
    /// Model file to write.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Smo)]
    solver: SolverArg,
    /// Box constraint.
    #[arg(long = "C", default_value_t = 10.0)]
    c: f64,
    /// Violators added per chunking step.
    #[arg(long = "chunk-M", default_value_t = 50)]
    chunk_m: usize,
    /// Working-set size for fixed-size decomposition.
    #[arg(long, default_value_t = 10)]
    q: usize,
    /// Examples swapped per fixed-size step.
    #[arg(long, default_value_t = 2)]
    s: usize,
    #[arg(long, value_enum, default_value_t = KernelArg::Rbf)]
    kernel: KernelArg,
    /// RBF width; defaults to 1 / feature dimension.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    coef0: f64,
    /// KKT tolerance.
    #[arg(long, default_value_t = voxid::svm::DEFAULT_TOL)]
    tol: f64,
    /// `<id> <name>` lines naming the speakers.
    #[arg(long)]
    names: Option<PathBuf>,
    /// Train on raw features.
    #[arg(long)]
    no_standardize: bool,
    /// Enrollment timestamp recorded in the registry (default: now, UTC).
    #[arg(long)]
    enrolled_at: Option<String>,
}

#[derive(Args)]
struct IdentifyArgs {
    #[arg(long)]
    model: PathBuf,
    wav: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled dataset CSV of raw features.
    #[arg(long, conflicts_with = "manifest")]
    data: Option<PathBuf>,
    /// `path,label` CSV of test WAVs.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated, strictly increasing training set sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    kernel: KernelArg,
    /// Comma-separated solvers: smo, chunking[:M], fixed-size[:q:s].
    #[arg(long, value_delimiter = ',', default_value = "smo,chunking")]
    solvers: Vec<String>,
    /// Runs per cell; the reported time is the median.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long = "C", default_value_t = BenchOptions::default().c)]
    c: f64,
    /// Feature dimension of the synthetic clusters.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Distance between the two cluster means, in standard deviations.
    #[arg(long, default_value_t = BenchOptions::default().separation)]
    separation: f64,
    #[arg(long, default_value_t = voxid::svm::DEFAULT_TOL)]
    tol: f64,
    /// Step cap per training run.
    #[arg(long, default_value_t = 500_000_000)]
    max_iter: u64,
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    speakers: usize,
    #[arg(long, default_value_t = 20)]
    utterances: usize,
    /// Fraction of each speaker's takes listed in train.csv.
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn front_end(common: &Common) -> Result<FrontEndConfig> {
    match &common.config {
        Some(p) => read_config(p),
        None => Ok(FrontEndConfig::default()),
    }
}

fn write_csv(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn require_file(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("missing file: {}", path.display());
    }
    Ok(())
}

fn parse_input(s: &str) -> Result<LabeledInput> {
    let (label, path) = s
        .split_once(':')
        .with_context(|| format!("expected label:path, got {s:?}"))?;
    let label: u32 = label.parse().with_context(|| format!("bad label in {s:?}"))?;
    Ok(LabeledInput {
        path: PathBuf::from(path),
        label: SpeakerId::new(label)?,
    })
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common;
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Extract(a) => {
            let mut inputs = a.inputs.iter().map(|s| parse_input(s)).collect::<Result<Vec<_>>>()?;
            if let Some(m) = &a.manifest {
                inputs.extend(read_manifest(m)?);
            }
            if inputs.is_empty() {
                bail!("no inputs given");
            }
            let cfg = front_end(&common)?;
            let ds = cmd_extract(&inputs, &cfg, a.skip_bad, &mut io::stderr())?;
            write_dataset_csv(&ds, &a.out)?;
            eprintln!("wrote {} rows x {} features to {}", ds.len(), ds.feature_dim(), a.out.display());
        }
        Command::Train(a) => {
            require_file(&a.data)?;
            let ds = read_dataset_csv(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
            let solver = match a.solver {
                SolverArg::Smo => SolverKind::Smo,
                SolverArg::Chunking => SolverKind::Chunking { chunk: a.chunk_m },
                SolverArg::FixedSize => SolverKind::FixedSize { size: a.q, swap: a.s },
            };
            let kernel = match a.kernel {
                KernelArg::Linear => KernelChoice::Linear,
                KernelArg::Rbf => KernelChoice::Rbf { gamma: a.gamma },
                KernelArg::Poly => KernelChoice::Polynomial {
                    degree: a.degree,
                    coef0: a.coef0,
                },
            };
            let names = match &a.names {
                Some(p) => read_names(p)?,
                None => Default::default(),
            };
            let opts = TrainOptions {
                c: a.c,
                kernel,
                solver,
                tol: a.tol,
                seed: common.seed,
                standardize: !a.no_standardize,
                names,
                enrolled_at: a
                    .enrolled_at
                    .unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()),
                front_end: front_end(&common)?,
            };
            let out = cmd_train(&ds, &opts)?;
            save_model(&out.model, &out.registry, &a.out)?;
            if common.json {
                let v = serde_json::json!({
                    "solver": solver.name(),
                    "wall_seconds": out.wall_seconds,
                    "classes": out.classes,
                });
                writeln!(stdout, "{}", serde_json::to_string_pretty(&v)?)?;
            } else {
                writeln!(stdout, "solver: {solver}, kernel: {}", out.model.kernel())?;
                writeln!(stdout, "{:>7}  {:>10}  {:>6}  {:>5}  {:>9}", "speaker", "iterations", "outer", "svs", "seconds")?;
                for c in &out.classes {
                    writeln!(
                        stdout,
                        "{:>7}  {:>10}  {:>6}  {:>5}  {:>9.4}",
                        c.speaker_id, c.iterations, c.outer_iterations, c.support_vector_count, c.wall_seconds
                    )?;
                }
                writeln!(stdout, "total wall time: {:.4} s", out.wall_seconds)?;
            }
            eprintln!("wrote model to {}", a.out.display());
        }
        Command::Identify(a) => {
            require_file(&a.model)?;
            let (model, registry) = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
            let clip = load_wav(&a.wav).with_context(|| format!("reading {}", a.wav.display()))?;
            let out = cmd_identify(&model, &registry, &clip).with_context(|| format!("identifying {}", a.wav.display()))?;
            if common.json {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&out)?)?;
            } else {
                writeln!(stdout, "speaker {} ({})", out.speaker_id, out.name)?;
                for s in &out.scores {
                    writeln!(stdout, "{:>7}  {:<16}  {:>12.6}", s.speaker_id, s.name, s.score)?;
                }
            }
        }
        Command::Evaluate(a) => {
            require_file(&a.model)?;
            let (model, _registry) = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
            let test = match (&a.data, &a.manifest) {
                (Some(d), None) => {
                    require_file(d)?;
                    read_dataset_csv(d).with_context(|| format!("reading {}", d.display()))?
                }
                (None, Some(m)) => {
                    let inputs = read_manifest(m)?;
                    cmd_extract(&inputs, model.front_end(), false, &mut io::stderr())?
                }
                _ => bail!("give exactly one of --data or --manifest"),
            };
            let report = cmd_evaluate(&model, &test)?;
            if common.json {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                write!(stdout, "{}", report.to_table())?;
            }
            write_csv(&common.csv, &report.to_csv())?;
        }
        Command::Bench(a) => {
            let solvers = a
                .solvers
                .iter()
                .map(|s| s.trim().parse::<SolverKind>())
                .collect::<Result<Vec<_>, _>>()?;
            let opts = BenchOptions {
                sizes: a.sizes,
                kernel: match a.kernel {
                    KernelArg::Linear => KernelSpec::Linear,
                    KernelArg::Rbf => KernelSpec::default_rbf(a.dim),
                    KernelArg::Poly => bail!("bench supports linear and rbf kernels"),
                },
                solvers,
                seed: common.seed,
                repeats: a.repeats,
                c: a.c,
                dim: a.dim,
                separation: a.separation,
                tol: a.tol,
                max_iter: a.max_iter,
                ..BenchOptions::default()
            };
            let out = run_bench(&opts)?;
            for (n, solver) in &out.flagged {
                eprintln!("warning: size {n}: {solver} dual objective differs from the best by more than 1e-3 relative");
            }
            for (n, solver, msg) in &out.failures {
                eprintln!("warning: size {n}: {solver} failed: {msg}");
            }
            if common.json {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&out.report)?)?;
            } else {
                write!(stdout, "{}", out.report.to_table())?;
            }
            write_csv(&common.csv, &out.report.to_csv())?;
        }
        Command::GenCorpus(a) => {
            let spec = CorpusSpec {
                speakers: a.speakers,
                utterances_per_speaker: a.utterances,
                seed: common.seed,
            };
            if spec.speakers < 2 || spec.speakers > voxid_cli::corpus::PROFILES.len() {
                bail!("--speakers must be between 2 and {}", voxid_cli::corpus::PROFILES.len());
            }
            let files = cmd_gen_corpus(&spec, &a.out, a.train_frac)?;
            writeln!(
                stdout,
                "wrote {} utterances; manifests {}, {}, {}; names {}",
                files.utterances,
                files.manifest.display(),
                files.train_manifest.display(),
                files.test_manifest.display(),
                files.names.display()
            )?;
        }
    }
    Ok(())
}
