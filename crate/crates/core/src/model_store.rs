//! Model files, the speaker registry, and dataset CSVs.
//!
//! A model file is line-oriented UTF-8 text that starts with the header
//! `VOXID-MODEL v1`. Every real is written with the shortest representation
//! that parses back to the same `f64`, so save/load is value-exact and files
//! are byte-stable across platforms. The full grammar lives in the guide's
//! "Model file format" chapter.
//!
//! Files are written with a single `fs::write`; there is no locking, so
//! concurrent writers to the same path are the caller's problem.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::{LabeledDataset, SpeakerId, Standardizer, UtteranceFeatures};
use crate::mfcc::FrontEndConfig;
use crate::svm::{KernelSpec, MulticlassModel, SvmModel, TrainingMeta};

/// First line of every model file.
pub const MODEL_HEADER: &str = "VOXID-MODEL v1";
const MAGIC: &str = "VOXID-MODEL";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    IoFailure {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown model format version {0:?}")]
    UnknownVersion(String),
    #[error("line {line}: {msg}")]
    MalformedModel { line: usize, msg: String },
    #[error("inconsistent model: {0}")]
    ConsistencyError(String),
    #[error("row {row}, column {column}: {msg}")]
    MalformedCsv { row: usize, column: usize, msg: String },
    #[error("row {row} has {actual} fields, expected {expected}")]
    RaggedRows { row: usize, expected: usize, actual: usize },
    #[error("invalid registry entry: {0}")]
    InvalidRegistry(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

/// One enrolled speaker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub name: String,
    pub utterance_count: usize,
    /// Free-form timestamp text without whitespace, e.g. RFC 3339.
    pub enrolled_at: String,
}

/// Speaker id to name/enrollment bookkeeping, ordered by id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpeakerRegistry {
    entries: BTreeMap<SpeakerId, RegistryEntry>,
}

impl SpeakerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces an entry. Names must be non-empty single lines;
    /// timestamps must be non-empty and free of whitespace.
    pub fn insert(&mut self, id: SpeakerId, entry: RegistryEntry) -> Result<(), StoreError> {
        let name = entry.name.trim();
        if name.is_empty() || name.contains(['\n', '\r']) || name != entry.name {
            return Err(StoreError::InvalidRegistry(format!(
                "speaker {id}: name must be a non-empty trimmed single line, got {:?}",
                entry.name
            )));
        }
        if entry.enrolled_at.is_empty() || entry.enrolled_at.contains(char::is_whitespace) {
            return Err(StoreError::InvalidRegistry(format!(
                "speaker {id}: bad timestamp {:?}",
                entry.enrolled_at
            )));
        }
        self.entries.insert(id, entry);
        Ok(())
    }

    pub fn get(&self, id: SpeakerId) -> Option<&RegistryEntry> {
        self.entries.get(&id)
    }

    pub fn name(&self, id: SpeakerId) -> Option<&str> {
        self.entries.get(&id).map(|e| e.name.as_str())
    }

    pub fn ids(&self) -> Vec<SpeakerId> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SpeakerId, &RegistryEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Registry with `speaker-<id>` names and counts taken from `dataset`.
    pub fn from_dataset(dataset: &LabeledDataset, enrolled_at: &str) -> Result<Self, StoreError> {
        let mut reg = Self::new();
        for (id, count) in dataset.counts() {
            reg.insert(
                id,
                RegistryEntry {
                    name: format!("speaker-{id}"),
                    utterance_count: count,
                    enrolled_at: enrolled_at.to_string(),
                },
            )?;
        }
        Ok(reg)
    }
}

fn real(x: f64) -> String {
    format!("{x:?}")
}

fn push_reals(out: &mut String, xs: &[f64]) {
    for x in xs {
        out.push(' ');
        out.push_str(&real(*x));
    }
}

fn kernel_line(k: &KernelSpec) -> String {
    match *k {
        KernelSpec::Linear => "kernel linear".into(),
        KernelSpec::Rbf { gamma } => format!("kernel rbf {}", real(gamma)),
        KernelSpec::Polynomial { degree, coef0 } => format!("kernel polynomial {degree} {}", real(coef0)),
    }
}

/// Renders the model file text. Fails if the registry does not name
/// exactly the modeled speakers.
pub fn model_to_string(model: &MulticlassModel, registry: &SpeakerRegistry) -> Result<String, StoreError> {
    for &id in model.speakers() {
        if registry.get(id).is_none() {
            return Err(StoreError::ConsistencyError(format!(
                "speaker {id} is modeled but has no registry entry"
            )));
        }
    }
    if registry.len() != model.speakers().len() {
        return Err(StoreError::ConsistencyError(format!(
            "registry has {} entries but the model has {} speakers",
            registry.len(),
            model.speakers().len()
        )));
    }

    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    for (k, v) in model.front_end().to_pairs() {
        let _ = writeln!(out, "config {k} {v}");
    }
    let _ = writeln!(out, "{}", kernel_line(&model.kernel()));
    let _ = writeln!(out, "dim {}", model.feature_dim());
    match model.scaler() {
        Some(s) => {
            out.push_str("scaler mean");
            push_reals(&mut out, &s.mean);
            out.push_str("\nscaler std");
            push_reals(&mut out, &s.std);
            out.push('\n');
        }
        None => out.push_str("scaler none\n"),
    }
    let _ = writeln!(out, "speakers {}", registry.len());
    for (id, e) in registry.iter() {
        let _ = writeln!(out, "speaker {id} {} {} {}", e.utterance_count, e.enrolled_at, e.name);
    }
    for (id, m) in model.speakers().iter().zip(model.models()) {
        let meta = &m.meta;
        let _ = writeln!(out, "model {id}");
        let _ = writeln!(out, "solver {}", meta.solver);
        let _ = writeln!(out, "iterations {}", meta.iterations);
        let _ = writeln!(out, "outer_iterations {}", meta.outer_iterations);
        let _ = writeln!(out, "wall_seconds {}", real(meta.wall_seconds));
        let _ = writeln!(out, "truncated {}", meta.truncated);
        let _ = writeln!(out, "dual_objective {}", real(meta.dual_objective));
        let _ = writeln!(out, "c {}", real(m.c()));
        let _ = writeln!(out, "bias {}", real(m.bias()));
        let _ = writeln!(out, "sv_count {}", m.support_vector_count());
        for (sv, a) in m.support_vectors().iter().zip(m.coeffs()) {
            out.push_str("sv ");
            out.push_str(&real(*a));
            push_reals(&mut out, sv);
            out.push('\n');
        }
        out.push_str("end\n");
    }
    Ok(out)
}

pub fn save_model(model: &MulticlassModel, registry: &SpeakerRegistry, path: &Path) -> Result<(), StoreError> {
    let text = model_to_string(model, registry)?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<(MulticlassModel, SpeakerRegistry), StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    model_from_str(&text)
}

/// Line cursor with 1-based numbering for diagnostics.
struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn bad(&self, line: usize, msg: impl Into<String>) -> StoreError {
        StoreError::MalformedModel { line, msg: msg.into() }
    }

    fn next_line(&mut self) -> Result<(usize, &'a str), StoreError> {
        match self.lines.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(self.bad(self.last + 1, "unexpected end of file")),
        }
    }

    fn peek_key(&mut self) -> Option<&'a str> {
        self.lines.peek().map(|(_, l)| l.split(' ').next().unwrap_or(""))
    }

    /// Next line must be `key rest...`; returns the line number and the rest.
    fn expect(&mut self, key: &str) -> Result<(usize, &'a str), StoreError> {
        let (no, line) = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok((no, rest)),
            _ if line == key => Ok((no, "")),
            _ => Err(self.bad(no, format!("expected `{key} ...`, found {line:?}"))),
        }
    }

    fn expect_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<(usize, T), StoreError> {
        let (no, rest) = self.expect(key)?;
        let v = rest
            .parse()
            .map_err(|_| self.bad(no, format!("bad value for {key}: {rest:?}")))?;
        Ok((no, v))
    }

    fn expect_real(&mut self, key: &str) -> Result<(usize, f64), StoreError> {
        let (no, rest) = self.expect(key)?;
        let v = parse_real(rest).map_err(|m| self.bad(no, format!("{key}: {m}")))?;
        Ok((no, v))
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("not a finite real: {s:?}")),
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    s.split(' ').filter(|t| !t.is_empty()).map(parse_real).collect()
}

/// Parses model file text, validating every invariant before returning.
pub fn model_from_str(text: &str) -> Result<(MulticlassModel, SpeakerRegistry), StoreError> {
    let mut cur = Cursor::new(text);
    let (no, header) = cur.next_line()?;
    if header != MODEL_HEADER {
        return match header.split_once(' ') {
            Some((MAGIC, version)) => Err(StoreError::UnknownVersion(version.to_string())),
            _ => Err(cur.bad(no, format!("missing `{MODEL_HEADER}` header"))),
        };
    }

    let mut pairs = Vec::new();
    let mut first_config = None;
    while cur.peek_key() == Some("config") {
        let (no, rest) = cur.expect("config")?;
        first_config.get_or_insert(no);
        let (k, v) = rest
            .split_once(' ')
            .ok_or_else(|| cur.bad(no, "expected `config <key> <value>`"))?;
        pairs.push((no, k, v));
    }
    for (no, k, _) in &pairs {
        if !FrontEndConfig::KEYS.contains(k) {
            return Err(cur.bad(*no, format!("unknown config key {k:?}")));
        }
    }
    let front_end = FrontEndConfig::from_pairs(pairs.iter().map(|(_, k, v)| (*k, *v)))
        .map_err(|e| cur.bad(first_config.unwrap_or(no + 1), e.to_string()))?;

    let (kno, krest) = cur.expect("kernel")?;
    let kernel = parse_kernel(krest).map_err(|m| cur.bad(kno, m))?;
    let (dno, dim) = cur.expect_parse::<usize>("dim")?;
    if dim == 0 {
        return Err(cur.bad(dno, "dim must be positive"));
    }

    let (sno, srest) = cur.expect("scaler")?;
    let scaler = if srest == "none" {
        None
    } else {
        let mean = srest
            .strip_prefix("mean")
            .ok_or_else(|| cur.bad(sno, "expected `scaler mean ...` or `scaler none`"))
            .and_then(|r| parse_reals(r).map_err(|m| cur.bad(sno, m)))?;
        let (tno, trest) = cur.expect("scaler")?;
        let std = trest
            .strip_prefix("std")
            .ok_or_else(|| cur.bad(tno, "expected `scaler std ...`"))
            .and_then(|r| parse_reals(r).map_err(|m| cur.bad(tno, m)))?;
        if mean.len() != dim || std.len() != dim {
            return Err(cur.bad(sno, format!("scaler has {}/{} values, dim is {dim}", mean.len(), std.len())));
        }
        if std.iter().any(|s| *s <= 0.0) {
            return Err(cur.bad(tno, "scaler std values must be positive"));
        }
        Some(Standardizer { mean, std })
    };

    let (cno, count) = cur.expect_parse::<usize>("speakers")?;
    let mut registry = SpeakerRegistry::new();
    for _ in 0..count {
        let (no, rest) = cur.expect("speaker")?;
        let mut it = rest.splitn(4, ' ');
        let (id, n, at, name) = (it.next(), it.next(), it.next(), it.next());
        let (Some(id), Some(n), Some(at), Some(name)) = (id, n, at, name) else {
            return Err(cur.bad(no, "expected `speaker <id> <count> <enrolled_at> <name>`"));
        };
        let id = id
            .parse::<u32>()
            .ok()
            .and_then(|i| SpeakerId::new(i).ok())
            .ok_or_else(|| cur.bad(no, format!("bad speaker id {id:?}")))?;
        let n = n
            .parse::<usize>()
            .map_err(|_| cur.bad(no, format!("bad utterance count {n:?}")))?;
        if registry.get(id).is_some() {
            return Err(cur.bad(no, format!("duplicate speaker {id}")));
        }
        registry
            .insert(
                id,
                RegistryEntry {
                    name: name.to_string(),
                    utterance_count: n,
                    enrolled_at: at.to_string(),
                },
            )
            .map_err(|e| cur.bad(no, e.to_string()))?;
    }
    if registry.len() < 2 {
        return Err(cur.bad(cno, format!("need at least 2 speakers, found {}", registry.len())));
    }

    let mut models = Vec::with_capacity(count);
    for expected in registry.ids() {
        let (mno, id) = cur.expect_parse::<u32>("model")?;
        if id != expected.get() {
            return Err(cur.bad(mno, format!("expected model block for speaker {expected}, found {id}")));
        }
        let (_, solver) = cur.expect("solver")?;
        let (_, iterations) = cur.expect_parse::<u64>("iterations")?;
        let (_, outer_iterations) = cur.expect_parse::<u64>("outer_iterations")?;
        let (_, wall_seconds) = cur.expect_real("wall_seconds")?;
        let (_, truncated) = cur.expect_parse::<bool>("truncated")?;
        let (_, dual_objective) = cur.expect_real("dual_objective")?;
        let (_, c) = cur.expect_real("c")?;
        let (_, bias) = cur.expect_real("bias")?;
        let (nno, sv_count) = cur.expect_parse::<usize>("sv_count")?;
        let mut svs = Vec::with_capacity(sv_count);
        let mut coeffs = Vec::with_capacity(sv_count);
        while cur.peek_key() == Some("sv") {
            let (no, rest) = cur.expect("sv")?;
            let mut vals = parse_reals(rest).map_err(|m| cur.bad(no, m))?;
            if vals.len() != dim + 1 {
                return Err(cur.bad(no, format!("support vector row has {} values, expected {}", vals.len(), dim + 1)));
            }
            coeffs.push(vals.remove(0));
            svs.push(vals);
        }
        if svs.len() != sv_count {
            return Err(cur.bad(
                nno,
                format!("sv_count declares {sv_count} support vectors but {} follow", svs.len()),
            ));
        }
        cur.expect("end")?;
        let meta = TrainingMeta {
            solver: solver.to_string(),
            iterations,
            outer_iterations,
            wall_seconds,
            truncated,
            dual_objective,
        };
        let model = SvmModel::from_parts(svs, coeffs, bias, kernel, c, meta)
            .map_err(|e| cur.bad(mno, e.to_string()))?;
        models.push(model);
    }
    if let Ok((no, line)) = cur.next_line() {
        return Err(cur.bad(no, format!("trailing content {line:?}")));
    }

    let model = MulticlassModel::from_parts(registry.ids(), models, scaler, front_end)
        .map_err(|e| StoreError::ConsistencyError(e.to_string()))?;
    Ok((model, registry))
}

fn parse_kernel(rest: &str) -> Result<KernelSpec, String> {
    let parts: Vec<&str> = rest.split(' ').collect();
    let kernel = match parts.as_slice() {
        ["linear"] => KernelSpec::Linear,
        ["rbf", g] => KernelSpec::Rbf { gamma: parse_real(g)? },
        ["polynomial", d, c0] => KernelSpec::Polynomial {
            degree: d.parse().map_err(|_| format!("bad degree {d:?}"))?,
            coef0: parse_real(c0)?,
        },
        _ => return Err(format!("unrecognized kernel {rest:?}")),
    };
    kernel.validate().map_err(|e| e.to_string())?;
    Ok(kernel)
}

/// Writes `label,f0,...,f{d-1}` followed by one row per utterance.
pub fn write_dataset_csv(dataset: &LabeledDataset, path: &Path) -> Result<(), StoreError> {
    let text = dataset_to_csv(dataset);
    fs::write(path, text).map_err(io_err(path))
}

pub fn dataset_to_csv(dataset: &LabeledDataset) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["label".to_string()];
    header.extend((0..dataset.feature_dim()).map(|i| format!("f{i}")));
    w.write_record(&header).expect("writing to memory");
    for (f, id) in dataset.rows() {
        let mut rec = vec![id.to_string()];
        rec.extend(f.values().iter().map(|v| real(*v)));
        w.write_record(&rec).expect("writing to memory");
    }
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("csv output is ascii")
}

pub fn read_dataset_csv(path: &Path) -> Result<LabeledDataset, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    dataset_from_csv(&text)
}

/// Parses dataset CSV text. Row numbers in errors count the header as
/// row 1; columns are 1-based.
pub fn dataset_from_csv(text: &str) -> Result<LabeledDataset, StoreError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| StoreError::MalformedCsv {
            row: i + 1,
            column: 0,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    let Some(header) = records.first() else {
        return Err(StoreError::MalformedCsv {
            row: 1,
            column: 1,
            msg: "missing header".into(),
        });
    };
    let width = header.len();
    for (col, name) in header.iter().enumerate() {
        let want = if col == 0 { "label".to_string() } else { format!("f{}", col - 1) };
        if name.trim() != want {
            return Err(StoreError::MalformedCsv {
                row: 1,
                column: col + 1,
                msg: format!("header field {name:?}, expected {want:?}"),
            });
        }
    }
    if width < 2 {
        return Err(StoreError::MalformedCsv {
            row: 1,
            column: 1,
            msg: "header has no feature columns".into(),
        });
    }
    let body = &records[1..];
    // Every row agreeing on a width the header does not declare is a header
    // problem; otherwise the odd rows out are ragged.
    if let Some(first) = body.first() {
        if first.len() != width && body.iter().all(|r| r.len() == first.len()) {
            return Err(StoreError::MalformedCsv {
                row: 1,
                column: width.min(first.len()) + 1,
                msg: format!("header declares {width} columns but rows have {}", first.len()),
            });
        }
    }
    let mut ds = LabeledDataset::new(width - 1);
    for (i, rec) in body.iter().enumerate() {
        let row = i + 2;
        if rec.len() != width {
            return Err(StoreError::RaggedRows {
                row,
                expected: width,
                actual: rec.len(),
            });
        }
        let label = rec[0].trim();
        let id = label
            .parse::<u32>()
            .ok()
            .and_then(|v| SpeakerId::new(v).ok())
            .ok_or_else(|| StoreError::MalformedCsv {
                row,
                column: 1,
                msg: format!("bad speaker label {label:?}"),
            })?;
        let values = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, v)| {
                parse_real(v.trim()).map_err(|msg| StoreError::MalformedCsv {
                    row,
                    column: col + 1,
                    msg,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let feats = UtteranceFeatures::new(values).map_err(|e| StoreError::MalformedCsv {
            row,
            column: 0,
            msg: e.to_string(),
        })?;
        ds.push(feats, id).map_err(|e| StoreError::MalformedCsv {
            row,
            column: 0,
            msg: e.to_string(),
        })?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{train_one_vs_rest, SolverKind};

    fn sid(i: u32) -> SpeakerId {
        SpeakerId::new(i).unwrap()
    }

    fn small_dataset() -> LabeledDataset {
        let rows = vec![
            (UtteranceFeatures::new(vec![0.1, -2.5e-7, 3.0]).unwrap(), sid(1)),
            (UtteranceFeatures::new(vec![1.0 / 3.0, 1e300, -0.0]).unwrap(), sid(2)),
        ];
        LabeledDataset::from_rows(rows).unwrap()
    }

    fn trained() -> (MulticlassModel, SpeakerRegistry) {
        let rows = vec![
            (UtteranceFeatures::new(vec![0.0, 0.1]).unwrap(), sid(1)),
            (UtteranceFeatures::new(vec![0.2, -0.1]).unwrap(), sid(1)),
            (UtteranceFeatures::new(vec![2.0, 2.1]).unwrap(), sid(3)),
            (UtteranceFeatures::new(vec![2.2, 1.9]).unwrap(), sid(3)),
        ];
        let mut ds = LabeledDataset::from_rows(rows).unwrap();
        ds.standardize().unwrap();
        let m = train_one_vs_rest(&ds, 1.0, KernelSpec::Rbf { gamma: 0.5 }, SolverKind::Smo).unwrap();
        let reg = SpeakerRegistry::from_dataset(&ds, "2026-01-01T00:00:00Z").unwrap();
        (m, reg)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let ds = small_dataset();
        let text = dataset_to_csv(&ds);
        assert!(text.starts_with("label,f0,f1,f2\n"));
        let back = dataset_from_csv(&text).unwrap();
        assert_eq!(back.rows().len(), 2);
        for ((a, ia), (b, ib)) in ds.rows().iter().zip(back.rows()) {
            assert_eq!(ia, ib);
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn short_row_is_ragged() {
        let text = "label,f0,f1\n1,0.5,0.25\n2,0.5\n";
        assert!(matches!(
            dataset_from_csv(text),
            Err(StoreError::RaggedRows { row: 3, expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn header_width_mismatch_is_malformed() {
        let text = "label,f0\n1,0.5,0.25\n2,0.5,0.1\n";
        assert!(matches!(dataset_from_csv(text), Err(StoreError::MalformedCsv { row: 1, .. })));
        let text = "label,g0\n1,0.5\n";
        assert!(matches!(dataset_from_csv(text), Err(StoreError::MalformedCsv { row: 1, column: 2, .. })));
    }

    #[test]
    fn model_round_trip_is_exact() {
        let (m, reg) = trained();
        let text = model_to_string(&m, &reg).unwrap();
        assert!(text.starts_with("VOXID-MODEL v1\n"));
        let (back, reg2) = model_from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(reg2, reg);
        assert_eq!(model_to_string(&back, &reg2).unwrap(), text);
    }

    #[test]
    fn missing_registry_entry_refused() {
        let (m, _) = trained();
        let mut reg = SpeakerRegistry::new();
        reg.insert(
            sid(1),
            RegistryEntry {
                name: "a".into(),
                utterance_count: 2,
                enrolled_at: "t".into(),
            },
        )
        .unwrap();
        assert!(matches!(model_to_string(&m, &reg), Err(StoreError::ConsistencyError(_))));
    }

    #[test]
    fn tampered_count_names_line() {
        let (m, reg) = trained();
        let text = model_to_string(&m, &reg).unwrap();
        let line_no = text.lines().position(|l| l.starts_with("sv_count")).unwrap() + 1;
        let n: usize = text.lines().nth(line_no - 1).unwrap()[9..].parse().unwrap();
        let tampered = text.replacen(&format!("sv_count {n}"), &format!("sv_count {}", n + 1), 1);
        match model_from_str(&tampered) {
            Err(StoreError::MalformedModel { line, .. }) => assert_eq!(line, line_no),
            other => panic!("expected MalformedModel, got {other:?}"),
        }
    }

    #[test]
    fn other_versions_rejected() {
        let (m, reg) = trained();
        let text = model_to_string(&m, &reg).unwrap().replacen("v1", "v2", 1);
        assert!(matches!(model_from_str(&text), Err(StoreError::UnknownVersion(v)) if v == "v2"));
        assert!(matches!(
            model_from_str("hello\n"),
            Err(StoreError::MalformedModel { line: 1, .. })
        ));
    }

    #[test]
    fn registry_rejects_empty_names() {
        let mut reg = SpeakerRegistry::new();
        let bad = RegistryEntry {
            name: String::new(),
            utterance_count: 1,
            enrolled_at: "t".into(),
        };
        assert!(reg.insert(sid(1), bad).is_err());
    }
}
