//! End-to-end command tests against the synthetic corpus and the binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use tempfile::TempDir;
use voxid::audio::{write_wav_pcm16, AudioClip};
use voxid::features::{LabeledDataset, SpeakerId};
use voxid::mfcc::FrontEndConfig;
use voxid::model_store::{
    dataset_to_csv, load_model, model_from_str, model_to_string, read_dataset_csv, save_model, write_dataset_csv,
};
use voxid::svm::{identify, SolverKind, SvmError};
use voxid_cli::commands::{
    cmd_evaluate, cmd_extract, cmd_gen_corpus, cmd_identify, cmd_train, read_manifest, read_names, CorpusFiles,
    LabeledInput, TrainOptions,
};
use voxid_cli::corpus::{CorpusSpec, CORPUS_SAMPLE_RATE};
use voxid_cli::CliError;

struct Corpus {
    _dir: TempDir,
    files: CorpusFiles,
    train: LabeledDataset,
    train_inputs: Vec<LabeledInput>,
}

/// The default 8 x 20 corpus, generated and extracted once per test binary.
fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let files = cmd_gen_corpus(&CorpusSpec::default(), dir.path(), 0.5).unwrap();
        let train_inputs = read_manifest(&files.train_manifest).unwrap();
        let train = cmd_extract(&train_inputs, &FrontEndConfig::default(), false, &mut Vec::new()).unwrap();
        Corpus {
            _dir: dir,
            files,
            train,
            train_inputs,
        }
    })
}

fn tone(seconds: f64, rate: u32) -> AudioClip {
    let n = (seconds * rate as f64) as usize;
    let samples = (0..n)
        .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin() + 0.01 * ((i * 7919) % 13) as f64 / 13.0)
        .collect();
    AudioClip::new(samples, rate).unwrap()
}

fn sid(i: u32) -> SpeakerId {
    SpeakerId::new(i).unwrap()
}

fn voxid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_voxid"))
}

#[test]
fn extract_three_files_gives_38_columns_and_is_repeatable() {
    let dir = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for (k, secs) in [0.5, 0.7, 1.0].into_iter().enumerate() {
        let path = dir.path().join(format!("clip{k}.wav"));
        write_wav_pcm16(&path, &tone(secs, CORPUS_SAMPLE_RATE)).unwrap();
        inputs.push(LabeledInput {
            path,
            label: sid(k as u32 + 1),
        });
    }
    let ds = cmd_extract(&inputs, &FrontEndConfig::default(), false, &mut Vec::new()).unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.feature_dim(), 38);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_dataset_csv(&ds, &a).unwrap();
    let again = cmd_extract(&inputs, &FrontEndConfig::default(), false, &mut Vec::new()).unwrap();
    write_dataset_csv(&again, &b).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn wrong_sample_rate_names_the_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("narrowband.wav");
    write_wav_pcm16(&path, &tone(0.5, 16000)).unwrap();
    let inputs = [LabeledInput { path, label: sid(1) }];
    let mut warn = Vec::new();
    let err = cmd_extract(&inputs, &FrontEndConfig::default(), false, &mut warn).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("narrowband.wav"), "{msg}");
    assert!(msg.contains("16000") && msg.contains("22050"), "{msg}");
    assert!(String::from_utf8(warn).unwrap().contains("narrowband.wav"));

    // --skip-bad keeps going and returns the readable rows
    let ds = cmd_extract(&inputs, &FrontEndConfig::default(), true, &mut Vec::new()).unwrap();
    assert!(ds.is_empty());
}

#[test]
fn single_speaker_training_fails() {
    let rows: Vec<_> = corpus()
        .train
        .rows()
        .iter()
        .filter(|(_, s)| *s == sid(1))
        .cloned()
        .collect();
    let ds = LabeledDataset::from_rows(rows).unwrap();
    let err = cmd_train(&ds, &TrainOptions::default()).unwrap_err();
    assert!(
        matches!(err.downcast_ref::<SvmError>(), Some(SvmError::TooFewSpeakers(1))),
        "{err:#}"
    );
}

#[test]
fn smo_model_has_one_block_per_speaker() {
    let out = cmd_train(&corpus().train, &TrainOptions::default()).unwrap();
    assert_eq!(out.model.speakers().len(), 8);
    assert_eq!(out.classes.len(), 8);
    assert!(out.model.models().iter().all(|m| m.support_vector_count() >= 1));
    let text = model_to_string(&out.model, &out.registry).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("model ")).count(), 8);
}

#[test]
fn chunking_and_smo_agree_on_training_rows() {
    let ds = &corpus().train;
    let smo = cmd_train(ds, &TrainOptions::default()).unwrap();
    let chunk = cmd_train(
        ds,
        &TrainOptions {
            solver: SolverKind::Chunking { chunk: 10 },
            ..TrainOptions::default()
        },
    )
    .unwrap();
    for (f, _) in ds.rows() {
        let a = identify(&smo.model, f.values()).unwrap().speaker;
        let b = identify(&chunk.model, f.values()).unwrap().speaker;
        assert_eq!(a, b);
    }
}

#[test]
fn identify_names_speaker_five_and_lists_scores_in_registry_order() {
    let c = corpus();
    let names = read_names(&c.files.names).unwrap();
    let out = cmd_train(
        &c.train,
        &TrainOptions {
            names,
            ..TrainOptions::default()
        },
    )
    .unwrap();
    let input = c.train_inputs.iter().find(|i| i.label == sid(5)).unwrap();
    let clip = voxid::audio::load_wav(&input.path).unwrap();
    let id = cmd_identify(&out.model, &out.registry, &clip).unwrap();
    assert_eq!(id.speaker_id, 5);
    assert_eq!(id.name, "voice-5");
    let order: Vec<u32> = id.scores.iter().map(|s| s.speaker_id).collect();
    let registry: Vec<u32> = out.registry.ids().iter().map(|s| s.get()).collect();
    assert_eq!(order, registry);
}

#[test]
fn evaluate_rejects_unenrolled_labels() {
    let out = cmd_train(&corpus().train, &TrainOptions::default()).unwrap();
    let mut test = LabeledDataset::new(38);
    let row = corpus().train.rows()[0].0.clone();
    test.push(row.clone(), sid(2)).unwrap();
    test.push(row, sid(42)).unwrap();
    let err = cmd_evaluate(&out.model, &test).unwrap_err();
    match err.downcast_ref::<CliError>() {
        Some(CliError::UnknownLabel(rows)) => assert_eq!(rows, &vec![(2, 42)]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn binary_fails_on_missing_model() {
    let dir = TempDir::new().unwrap();
    let wav = dir.path().join("x.wav");
    write_wav_pcm16(&wav, &tone(0.5, CORPUS_SAMPLE_RATE)).unwrap();
    let out = voxid()
        .args(["identify", "--model"])
        .arg(dir.path().join("absent.model"))
        .arg(&wav)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing file") && err.contains("absent.model"), "{err}");
}

#[test]
fn binary_round_trip_through_files() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let out = voxid().current_dir(d).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    run(&["gen-corpus", "--out", "c", "--speakers", "3", "--utterances", "6"]);
    run(&["extract", "--manifest", "c/train.csv", "--out", "train.csv"]);
    run(&["train", "--data", "train.csv", "--out", "m.model", "--names", "c/names.txt"]);
    let report = run(&["evaluate", "--model", "m.model", "--manifest", "c/test.csv", "--csv", "r.csv"]);
    assert!(report.contains("smo"), "{report}");
    let csv = fs::read_to_string(d.join("r.csv")).unwrap();
    assert!(csv.lines().count() >= 4, "{csv}");
    let json = run(&["identify", "--json", "--model", "m.model", "c/spk2_take01.wav"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["scores"].as_array().unwrap().len(), 3);

    let bad = voxid()
        .current_dir(d)
        .args(["bench", "--sizes", "300,200"])
        .output()
        .unwrap();
    assert!(!bad.status.success());
}

const GOLDEN_MODEL: &str = "tests/data/golden.model";
const GOLDEN_PROBES: &str = "tests/data/golden_probes.csv";
const GOLDEN_SCORES: &str = "tests/data/golden_scores.txt";

fn manifest_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn score_lines(model: &voxid::svm::MulticlassModel, probes: &LabeledDataset) -> Vec<Vec<f64>> {
    probes
        .rows()
        .iter()
        .map(|(f, _)| identify(model, f.values()).unwrap().scores.iter().map(|&(_, s)| s).collect())
        .collect()
}

/// Writes the golden files from a small corpus. Run with `VOXID_BLESS=1`.
fn bless() {
    let dir = TempDir::new().unwrap();
    let spec = CorpusSpec {
        speakers: 3,
        utterances_per_speaker: 6,
        seed: 11,
    };
    let files = cmd_gen_corpus(&spec, dir.path(), 0.5).unwrap();
    let cfg = FrontEndConfig::default();
    let train = cmd_extract(&read_manifest(&files.train_manifest).unwrap(), &cfg, false, &mut Vec::new()).unwrap();
    let probes = cmd_extract(&read_manifest(&files.test_manifest).unwrap(), &cfg, false, &mut Vec::new()).unwrap();
    let out = cmd_train(
        &train,
        &TrainOptions {
            names: read_names(&files.names).unwrap(),
            ..TrainOptions::default()
        },
    )
    .unwrap();
    fs::create_dir_all(manifest_path("tests/data")).unwrap();
    save_model(&out.model, &out.registry, &manifest_path(GOLDEN_MODEL)).unwrap();
    write_dataset_csv(&probes, &manifest_path(GOLDEN_PROBES)).unwrap();
    let text: String = score_lines(&out.model, &probes)
        .iter()
        .map(|r| r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ") + "\n")
        .collect();
    fs::write(manifest_path(GOLDEN_SCORES), text).unwrap();
}

#[test]
fn golden_model_still_loads_and_scores() {
    if std::env::var_os("VOXID_BLESS").is_some() {
        bless();
    }
    let text = fs::read_to_string(manifest_path(GOLDEN_MODEL)).unwrap();
    let (model, registry) = load_model(&manifest_path(GOLDEN_MODEL)).unwrap();
    assert_eq!(model_to_string(&model, &registry).unwrap(), text);
    assert_eq!(registry.name(sid(2)), Some("voice-2"));

    let probes = read_dataset_csv(&manifest_path(GOLDEN_PROBES)).unwrap();
    let expected: Vec<Vec<f64>> = fs::read_to_string(manifest_path(GOLDEN_SCORES))
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    let got = score_lines(&model, &probes);
    assert_eq!(got.len(), expected.len());
    assert!(!got.is_empty());
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g.len(), e.len());
        for (a, b) in g.iter().zip(e) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn golden_model_text_survives_reparse() {
    let text = fs::read_to_string(manifest_path(GOLDEN_MODEL)).unwrap();
    let (model, registry) = model_from_str(&text).unwrap();
    let again = model_to_string(&model, &registry).unwrap();
    assert_eq!(again, text);
    let probes = read_dataset_csv(&manifest_path(GOLDEN_PROBES)).unwrap();
    let csv = dataset_to_csv(&probes);
    assert_eq!(csv, fs::read_to_string(manifest_path(GOLDEN_PROBES)).unwrap());
}
