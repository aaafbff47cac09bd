//! Fixed-length utterance summaries and labeled datasets.
//!
//! An utterance of any duration becomes the per-coefficient mean followed by
//! the per-coefficient population standard deviation of its acoustic
//! vectors, so a 19-coefficient front end gives 38 features.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mfcc::AcousticVector;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("utterance has no acoustic vectors")]
    EmptyUtterance,
    #[error("acoustic vector {index} has length {actual}, expected {expected}")]
    RaggedVectors {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("speaker ids must be >= 1")]
    InvalidSpeakerId,
    #[error("non-finite feature value at dimension {0}")]
    NonFinite(usize),
    #[error("train fraction {0} must lie in (0, 1)")]
    BadSplit(f64),
}

/// Enrolled speaker identifier, always `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpeakerId(u32);

impl SpeakerId {
    pub fn new(id: u32) -> Result<Self, FeatureError> {
        if id == 0 {
            Err(FeatureError::InvalidSpeakerId)
        } else {
            Ok(Self(id))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for SpeakerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceFeatures(Vec<f64>);

impl UtteranceFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self, FeatureError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Mean block (first half).
    pub fn means(&self) -> &[f64] {
        &self.0[..self.0.len() / 2]
    }

    /// Standard-deviation block (second half).
    pub fn stds(&self) -> &[f64] {
        &self.0[self.0.len() / 2..]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Per-coefficient mean then population standard deviation.
pub fn summarize(vectors: &[AcousticVector]) -> Result<UtteranceFeatures, FeatureError> {
    let first = vectors.first().ok_or(FeatureError::EmptyUtterance)?;
    let dim = first.len();
    if let Some((index, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
        return Err(FeatureError::RaggedVectors {
            index,
            expected: dim,
            actual: v.len(),
        });
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in vectors {
        for (m, c) in mean.iter_mut().zip(v.coeffs()) {
            *m += c;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for v in vectors {
        for ((s, c), m) in var.iter_mut().zip(v.coeffs()).zip(&mean) {
            *s += (c - m) * (c - m);
        }
    }
    let mut values = mean;
    values.extend(var.into_iter().map(|s| (s / n).sqrt()));
    UtteranceFeatures::new(values)
}

/// Per-dimension affine scaler, `x' = (x - mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check(values.len())?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn inverse(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check(values.len())?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    fn check(&self, dim: usize) -> Result<(), FeatureError> {
        if dim != self.dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim(),
                actual: dim,
            });
        }
        Ok(())
    }
}

/// Mean and population std of every dimension; zero stds become 1.
pub fn fit_standardizer(dataset: &LabeledDataset) -> Result<Standardizer, FeatureError> {
    if dataset.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let dim = dataset.feature_dim();
    let n = dataset.len() as f64;
    let mut mean = vec![0.0; dim];
    for (f, _) in dataset.rows() {
        for (m, v) in mean.iter_mut().zip(f.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for (f, _) in dataset.rows() {
        for ((s, v), m) in var.iter_mut().zip(f.values()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(Standardizer { mean, std })
}

pub fn apply_standardizer(
    features: &UtteranceFeatures,
    scaler: &Standardizer,
) -> Result<UtteranceFeatures, FeatureError> {
    UtteranceFeatures::new(scaler.transform(features.values())?)
}

/// Labeled utterance features sharing one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    rows: Vec<(UtteranceFeatures, SpeakerId)>,
    feature_dim: usize,
    scaler: Option<Standardizer>,
}

impl LabeledDataset {
    pub fn new(feature_dim: usize) -> Self {
        Self {
            rows: Vec::new(),
            feature_dim,
            scaler: None,
        }
    }

    pub fn from_rows(rows: Vec<(UtteranceFeatures, SpeakerId)>) -> Result<Self, FeatureError> {
        let dim = rows.first().map_or(0, |(f, _)| f.dim());
        let mut ds = Self::new(dim);
        for (f, id) in rows {
            ds.push(f, id)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, features: UtteranceFeatures, speaker: SpeakerId) -> Result<(), FeatureError> {
        if self.rows.is_empty() && self.feature_dim == 0 {
            self.feature_dim = features.dim();
        }
        if features.dim() != self.feature_dim {
            return Err(FeatureError::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.dim(),
            });
        }
        self.rows.push((features, speaker));
        Ok(())
    }

    pub fn rows(&self) -> &[(UtteranceFeatures, SpeakerId)] {
        &self.rows
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scaler(&self) -> Option<&Standardizer> {
        self.scaler.as_ref()
    }

    /// Distinct speakers in ascending order.
    pub fn speakers(&self) -> Vec<SpeakerId> {
        let mut ids: Vec<SpeakerId> = self.rows.iter().map(|(_, id)| *id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn counts(&self) -> BTreeMap<SpeakerId, usize> {
        let mut out = BTreeMap::new();
        for (_, id) in &self.rows {
            *out.entry(*id).or_insert(0) += 1;
        }
        out
    }

    /// Fits a scaler on the current rows, rewrites them in scaled form, and
    /// keeps the scaler for use at identification time.
    pub fn standardize(&mut self) -> Result<&Standardizer, FeatureError> {
        let scaler = fit_standardizer(self)?;
        for (f, _) in &mut self.rows {
            *f = apply_standardizer(f, &scaler)?;
        }
        Ok(self.scaler.insert(scaler))
    }

    /// Per-speaker split: for each speaker, the first `round(frac * n)` rows
    /// after a seeded shuffle go to training (at least one on each side when
    /// the speaker has two or more rows). Row order within each side follows
    /// the original dataset order.
    pub fn split_per_speaker(&self, train_frac: f64, seed: u64) -> Result<(Self, Self), FeatureError> {
        if !(train_frac > 0.0 && train_frac < 1.0) {
            return Err(FeatureError::BadSplit(train_frac));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut is_train = vec![false; self.rows.len()];
        for id in self.speakers() {
            let mut idx: Vec<usize> = (0..self.rows.len()).filter(|&i| self.rows[i].1 == id).collect();
            idx.shuffle(&mut rng);
            let n = idx.len();
            let mut take = (train_frac * n as f64).round() as usize;
            if n >= 2 {
                take = take.clamp(1, n - 1);
            } else {
                take = n;
            }
            for &i in &idx[..take] {
                is_train[i] = true;
            }
        }
        let mut train = Self::new(self.feature_dim);
        let mut test = Self::new(self.feature_dim);
        for (row, keep) in self.rows.iter().zip(is_train) {
            let target = if keep { &mut train } else { &mut test };
            target.rows.push(row.clone());
        }
        train.scaler = self.scaler.clone();
        test.scaler = self.scaler.clone();
        Ok((train, test))
    }
}
