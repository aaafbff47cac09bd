//! One-vs-rest speaker models with argmax identification.

use std::time::Instant;

use super::{train, KernelSpec, SolverKind, SvmError, SvmModel, TrainingProblem};
use crate::features::{LabeledDataset, SpeakerId, Standardizer};
use crate::mfcc::FrontEndConfig;

/// Knobs shared by every binary problem of a one-vs-rest fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub c: f64,
    pub kernel: KernelSpec,
    pub solver: SolverKind,
    pub tol: f64,
    pub eps: f64,
    pub max_iter: u64,
    pub seed: u64,
    pub kernel_cache_rows: usize,
}

impl TrainSettings {
    pub fn new(c: f64, kernel: KernelSpec, solver: SolverKind) -> Self {
        Self {
            c,
            kernel,
            solver,
            tol: super::problem::DEFAULT_TOL,
            eps: super::problem::DEFAULT_EPS,
            max_iter: super::problem::DEFAULT_MAX_ITER,
            seed: 0,
            kernel_cache_rows: 0,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// One binary model per enrolled speaker plus the preprocessing that
/// produced their inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    speakers: Vec<SpeakerId>,
    models: Vec<SvmModel>,
    scaler: Option<Standardizer>,
    front_end: FrontEndConfig,
}

/// Result of [`identify`]: the winning speaker and every speaker's score.
#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub speaker: SpeakerId,
    /// Decision values in enrolled-speaker order.
    pub scores: Vec<(SpeakerId, f64)>,
}

impl MulticlassModel {
    /// Checks: at least two speakers, strictly ascending ids, one model
    /// each, and a shared feature dimension and kernel.
    pub fn from_parts(
        speakers: Vec<SpeakerId>,
        models: Vec<SvmModel>,
        scaler: Option<Standardizer>,
        front_end: FrontEndConfig,
    ) -> Result<Self, SvmError> {
        if speakers.len() < 2 {
            return Err(SvmError::TooFewSpeakers(speakers.len()));
        }
        if speakers.len() != models.len() {
            return Err(SvmError::InvalidModel(format!(
                "{} speakers but {} binary models",
                speakers.len(),
                models.len()
            )));
        }
        if speakers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SvmError::InvalidModel("speaker ids must be strictly ascending".into()));
        }
        let dim = models[0].dim();
        let kernel = models[0].kernel();
        if let Some(m) = models.iter().find(|m| m.dim() != dim || m.kernel() != kernel) {
            return Err(SvmError::InvalidModel(format!(
                "binary models disagree: dim {} vs {dim}, kernel {} vs {kernel}",
                m.dim(),
                m.kernel()
            )));
        }
        if let Some(s) = &scaler {
            if s.dim() != dim {
                return Err(SvmError::DimensionMismatch {
                    expected: dim,
                    actual: s.dim(),
                });
            }
        }
        Ok(Self {
            speakers,
            models,
            scaler,
            front_end,
        })
    }

    pub fn speakers(&self) -> &[SpeakerId] {
        &self.speakers
    }

    pub fn models(&self) -> &[SvmModel] {
        &self.models
    }

    pub fn model_for(&self, speaker: SpeakerId) -> Option<&SvmModel> {
        self.speakers
            .iter()
            .position(|&s| s == speaker)
            .map(|i| &self.models[i])
    }

    pub fn scaler(&self) -> Option<&Standardizer> {
        self.scaler.as_ref()
    }

    pub fn front_end(&self) -> &FrontEndConfig {
        &self.front_end
    }

    pub fn with_front_end(mut self, front_end: FrontEndConfig) -> Self {
        self.front_end = front_end;
        self
    }

    pub fn feature_dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn kernel(&self) -> KernelSpec {
        self.models[0].kernel()
    }

    /// Per-speaker decision values for features already in model space
    /// (scaled if the model carries a scaler).
    pub fn scores_scaled(&self, x: &[f64]) -> Result<Vec<(SpeakerId, f64)>, SvmError> {
        self.speakers
            .iter()
            .zip(&self.models)
            .map(|(&s, m)| Ok((s, m.decision_value(x)?)))
            .collect()
    }

    /// Applies the stored scaler (if any) to raw features.
    pub fn prepare(&self, raw: &[f64]) -> Result<Vec<f64>, SvmError> {
        if raw.len() != self.feature_dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.feature_dim(),
                actual: raw.len(),
            });
        }
        match &self.scaler {
            Some(s) => Ok(s.transform(raw)?),
            None => Ok(raw.to_vec()),
        }
    }
}

/// Fits one binary problem per speaker (+1 for that speaker, -1 for all
/// others) with default tolerances. The dataset's scaler, if any, is
/// carried into the model.
pub fn train_one_vs_rest(
    dataset: &LabeledDataset,
    c: f64,
    kernel: KernelSpec,
    solver: SolverKind,
) -> Result<MulticlassModel, SvmError> {
    train_one_vs_rest_with(dataset, &TrainSettings::new(c, kernel, solver))
}

pub fn train_one_vs_rest_with(
    dataset: &LabeledDataset,
    settings: &TrainSettings,
) -> Result<MulticlassModel, SvmError> {
    let speakers = dataset.speakers();
    if speakers.len() < 2 {
        return Err(SvmError::TooFewSpeakers(speakers.len()));
    }
    let points: Vec<Vec<f64>> = dataset.rows().iter().map(|(f, _)| f.values().to_vec()).collect();
    let mut models = Vec::with_capacity(speakers.len());
    for &speaker in &speakers {
        let labels: Vec<f64> = dataset
            .rows()
            .iter()
            .map(|(_, s)| if *s == speaker { 1.0 } else { -1.0 })
            .collect();
        let with_ctx = |e: SvmError| SvmError::Class {
            speaker: speaker.get(),
            source: Box::new(e),
        };
        let mut problem = TrainingProblem::new(&points, &labels, settings.c, settings.kernel)
            .map_err(with_ctx)?
            .with_tol(settings.tol)
            .with_eps(settings.eps)
            .with_max_iter(settings.max_iter)
            .with_seed(settings.seed)
            .with_kernel_cache(settings.kernel_cache_rows);
        problem.seed = settings.seed.wrapping_add(u64::from(speaker.get()));
        let started = Instant::now();
        let mut model = train(&problem, settings.solver).map_err(with_ctx)?;
        model.meta.wall_seconds = started.elapsed().as_secs_f64();
        models.push(model);
    }
    MulticlassModel::from_parts(speakers, models, dataset.scaler().cloned(), FrontEndConfig::default())
}

/// Argmax over per-speaker decision values of raw (unscaled) features;
/// ties go to the lowest speaker id.
pub fn identify(model: &MulticlassModel, features: &[f64]) -> Result<Identification, SvmError> {
    let x = model.prepare(features)?;
    let scores = model.scores_scaled(&x)?;
    let mut best = scores[0];
    for &(s, v) in &scores[1..] {
        if v > best.1 {
            best = (s, v);
        }
    }
    Ok(Identification {
        speaker: best.0,
        scores,
    })
}
