//! extract, train, identify, evaluate, and gen-corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use voxid::audio::{load_wav, write_wav_pcm16, AudioClip};
use voxid::features::{summarize, LabeledDataset, SpeakerId, UtteranceFeatures};
use voxid::mfcc::{FrontEndConfig, MfccExtractor};
use voxid::model_store::{RegistryEntry, SpeakerRegistry};
use voxid::svm::{identify, train_one_vs_rest_with, KernelSpec, MulticlassModel, SolverKind, TrainSettings};

use crate::corpus::{generate_corpus, CorpusSpec};
use crate::report::EvaluationReport;
use crate::CliError;

/// A WAV file and the speaker who produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledInput {
    pub path: PathBuf,
    pub label: SpeakerId,
}

/// Reads a `path,label` manifest; relative paths resolve against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<LabeledInput>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let bad = |line: usize, msg: String| CliError::BadInputFile {
        path: path.display().to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "path,label" => {}
        _ => return Err(bad(1, "expected header `path,label`".into()).into()),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (p, l) = line
            .rsplit_once(',')
            .ok_or_else(|| bad(i + 1, "expected `path,label`".into()))?;
        let label = l
            .trim()
            .parse::<u32>()
            .ok()
            .and_then(|v| SpeakerId::new(v).ok())
            .ok_or_else(|| bad(i + 1, format!("bad speaker label {l:?}")))?;
        out.push(LabeledInput {
            path: base.join(p.trim()),
            label,
        });
    }
    Ok(out)
}

/// Writes a manifest with paths relative to `base`.
pub fn write_manifest(path: &Path, base: &Path, items: &[LabeledInput]) -> Result<()> {
    let mut text = String::from("path,label\n");
    for it in items {
        let rel = it.path.strip_prefix(base).unwrap_or(&it.path);
        text.push_str(&format!("{},{}\n", rel.display(), it.label));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses a `<id> <name>` per line names file (`#` comments allowed).
pub fn read_names(path: &Path) -> Result<BTreeMap<SpeakerId, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading names file {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| CliError::BadInputFile {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let (id, name) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| bad("expected `<id> <name>`".into()))?;
        let id = id
            .parse::<u32>()
            .ok()
            .and_then(|v| SpeakerId::new(v).ok())
            .ok_or_else(|| bad(format!("bad speaker id {id:?}")))?;
        out.insert(id, name.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<FrontEndConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    text.parse::<FrontEndConfig>()
        .with_context(|| format!("parsing config {}", path.display()))
}

/// Acoustic vectors of one clip summarized into utterance features.
pub fn clip_features(extractor: &MfccExtractor, clip: &AudioClip) -> Result<UtteranceFeatures> {
    let vectors = extractor.extract(clip)?;
    Ok(summarize(&vectors)?)
}

/// One dataset row per readable input, in input order. Every failure is
/// written to `warn` with its path; unless `skip_bad`, any failure makes
/// the command fail with the first error as the cause.
pub fn cmd_extract(
    inputs: &[LabeledInput],
    config: &FrontEndConfig,
    skip_bad: bool,
    warn: &mut dyn Write,
) -> Result<LabeledDataset> {
    let extractor = MfccExtractor::new(config.clone())?;
    let dim = 2 * config.mfcc.num_coeffs;
    let mut ds = LabeledDataset::new(dim);
    let mut first_err = None;
    let mut failed = 0;
    for input in inputs {
        let result = load_wav(&input.path)
            .map_err(anyhow::Error::from)
            .and_then(|clip| clip_features(&extractor, &clip));
        match result {
            Ok(f) => ds.push(f, input.label)?,
            Err(e) => {
                failed += 1;
                let e = e.context(format!("{}", input.path.display()));
                let _ = writeln!(warn, "{}: {e:#}", if skip_bad { "warning" } else { "error" });
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) if !skip_bad => Err(e.context(CliError::InputsFailed {
            failed,
            total: inputs.len(),
        })),
        _ => Ok(ds),
    }
}

/// Kernel as chosen on the command line; RBF gamma defaults to `1/dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Linear,
    Rbf { gamma: Option<f64> },
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelChoice {
    pub fn resolve(self, dim: usize) -> KernelSpec {
        match self {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Rbf { gamma: Some(gamma) } => KernelSpec::Rbf { gamma },
            KernelChoice::Rbf { gamma: None } => KernelSpec::default_rbf(dim),
            KernelChoice::Polynomial { degree, coef0 } => KernelSpec::Polynomial { degree, coef0 },
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub c: f64,
    pub kernel: KernelChoice,
    pub solver: SolverKind,
    pub tol: f64,
    pub seed: u64,
    pub standardize: bool,
    pub names: BTreeMap<SpeakerId, String>,
    pub enrolled_at: String,
    pub front_end: FrontEndConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            c: 10.0,
            kernel: KernelChoice::Rbf { gamma: None },
            solver: SolverKind::Smo,
            tol: voxid::svm::DEFAULT_TOL,
            seed: 0,
            standardize: true,
            names: BTreeMap::new(),
            enrolled_at: "1970-01-01T00:00:00Z".into(),
            front_end: FrontEndConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub speaker_id: u32,
    pub iterations: u64,
    pub outer_iterations: u64,
    pub support_vector_count: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: MulticlassModel,
    pub registry: SpeakerRegistry,
    pub classes: Vec<ClassSummary>,
    pub wall_seconds: f64,
}

/// Standardizes (by default), trains one-vs-rest, and builds the registry.
pub fn cmd_train(dataset: &LabeledDataset, opts: &TrainOptions) -> Result<TrainOutput> {
    let mut ds = dataset.clone();
    if opts.standardize {
        ds.standardize().context("standardizing features")?;
    }
    let settings = TrainSettings {
        seed: opts.seed,
        ..TrainSettings::new(opts.c, opts.kernel.resolve(ds.feature_dim()), opts.solver).with_tol(opts.tol)
    };
    let started = Instant::now();
    let model = train_one_vs_rest_with(&ds, &settings)
        .with_context(|| format!("training one-vs-rest with {}", opts.solver))?
        .with_front_end(opts.front_end.clone());
    let wall_seconds = started.elapsed().as_secs_f64();

    let mut registry = SpeakerRegistry::new();
    for (id, count) in ds.counts() {
        let name = opts.names.get(&id).cloned().unwrap_or_else(|| format!("speaker-{id}"));
        registry.insert(
            id,
            RegistryEntry {
                name,
                utterance_count: count,
                enrolled_at: opts.enrolled_at.clone(),
            },
        )?;
    }
    let classes = model
        .speakers()
        .iter()
        .zip(model.models())
        .map(|(id, m)| ClassSummary {
            speaker_id: id.get(),
            iterations: m.meta.iterations,
            outer_iterations: m.meta.outer_iterations,
            support_vector_count: m.support_vector_count(),
            wall_seconds: m.meta.wall_seconds,
        })
        .collect();
    Ok(TrainOutput {
        model,
        registry,
        classes,
        wall_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreEntry {
    pub speaker_id: u32,
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyOutput {
    pub speaker_id: u32,
    pub name: String,
    pub scores: Vec<ScoreEntry>,
}

fn name_of(registry: &SpeakerRegistry, id: SpeakerId) -> String {
    registry.name(id).map_or_else(|| format!("speaker-{id}"), str::to_string)
}

/// Identifies raw utterance features against the model.
pub fn identify_features(
    model: &MulticlassModel,
    registry: &SpeakerRegistry,
    features: &[f64],
) -> Result<IdentifyOutput> {
    let id = identify(model, features)?;
    Ok(IdentifyOutput {
        speaker_id: id.speaker.get(),
        name: name_of(registry, id.speaker),
        scores: id
            .scores
            .iter()
            .map(|&(s, score)| ScoreEntry {
                speaker_id: s.get(),
                name: name_of(registry, s),
                score,
            })
            .collect(),
    })
}

/// Extracts features from `clip` with the model's own front end, then
/// identifies.
pub fn cmd_identify(model: &MulticlassModel, registry: &SpeakerRegistry, clip: &AudioClip) -> Result<IdentifyOutput> {
    let extractor = MfccExtractor::new(model.front_end().clone())?;
    let feats = clip_features(&extractor, clip)?;
    identify_features(model, registry, feats.values())
}

/// Identifies every row of a labeled test set (raw features) and tallies
/// per-speaker success.
pub fn cmd_evaluate(model: &MulticlassModel, test: &LabeledDataset) -> Result<EvaluationReport> {
    let unknown: Vec<(usize, u32)> = test
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, (_, s))| !model.speakers().contains(s))
        .map(|(i, (_, s))| (i + 1, s.get()))
        .collect();
    if !unknown.is_empty() {
        return Err(CliError::UnknownLabel(unknown).into());
    }
    let mut pairs = Vec::with_capacity(test.len());
    for (f, truth) in test.rows() {
        let out = identify(model, f.values())?;
        pairs.push((*truth, out.speaker));
    }
    let solver = model.models()[0].meta.solver.clone();
    Ok(EvaluationReport::from_predictions(&solver, &pairs))
}

/// Per-speaker seeded split of manifest entries: for each speaker,
/// `round(frac * n)` takes (clamped to leave one on each side) go to
/// training. Order within each side follows input order.
pub fn split_inputs(items: &[LabeledInput], train_frac: f64, seed: u64) -> Result<(Vec<LabeledInput>, Vec<LabeledInput>)> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(CliError::InvalidArgument(format!("--train-frac must be in (0, 1), got {train_frac}")).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_train = vec![false; items.len()];
    let mut speakers: Vec<SpeakerId> = items.iter().map(|i| i.label).collect();
    speakers.sort_unstable();
    speakers.dedup();
    for s in speakers {
        let mut idx: Vec<usize> = (0..items.len()).filter(|&i| items[i].label == s).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let take = if n >= 2 {
            ((train_frac * n as f64).round() as usize).clamp(1, n - 1)
        } else {
            n
        };
        idx[..take].iter().for_each(|&i| is_train[i] = true);
    }
    let (train, test): (Vec<_>, Vec<_>) = items.iter().cloned().zip(is_train).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(x, _)| x).collect(),
        test.into_iter().map(|(x, _)| x).collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct CorpusFiles {
    pub manifest: PathBuf,
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub names: PathBuf,
    pub utterances: usize,
}

/// Writes the synthetic corpus as 16-bit WAVs plus `manifest.csv`,
/// `train.csv`, `test.csv`, and `names.txt` under `out_dir`.
pub fn cmd_gen_corpus(spec: &CorpusSpec, out_dir: &Path, train_frac: f64) -> Result<CorpusFiles> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut items = Vec::new();
    for u in generate_corpus(spec) {
        let path = out_dir.join(format!("spk{}_take{:02}.wav", u.speaker, u.take));
        write_wav_pcm16(&path, &u.clip).with_context(|| format!("writing {}", path.display()))?;
        items.push(LabeledInput { path, label: u.speaker });
    }
    let (train, test) = split_inputs(&items, train_frac, spec.seed)?;
    let files = CorpusFiles {
        manifest: out_dir.join("manifest.csv"),
        train_manifest: out_dir.join("train.csv"),
        test_manifest: out_dir.join("test.csv"),
        names: out_dir.join("names.txt"),
        utterances: items.len(),
    };
    write_manifest(&files.manifest, out_dir, &items)?;
    write_manifest(&files.train_manifest, out_dir, &train)?;
    write_manifest(&files.test_manifest, out_dir, &test)?;
    let mut names = String::new();
    for i in 1..=spec.speakers {
        names.push_str(&format!("{i} voice-{i}\n"));
    }
    fs::write(&files.names, names).with_context(|| format!("writing {}", files.names.display()))?;
    Ok(files)
}
