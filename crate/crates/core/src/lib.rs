//! Text-dependent speaker identification: MFCC utterance features and
//! support vector machines trained by SMO or working-set decomposition.
//!
//! The pipeline runs WAV → [`audio::AudioClip`] → framed, windowed frames →
//! [`mfcc::AcousticVector`] per frame → [`features::UtteranceFeatures`]
//! (per-coefficient mean and standard deviation) → one-vs-rest
//! [`svm::MulticlassModel`]. [`model_store`] persists trained models and
//! dataset CSVs.

pub mod audio;
pub mod features;
pub mod mfcc;
pub mod model_store;
pub mod svm;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/mfcc.md")]
    mod mfcc {}
    #[doc = include_str!("../../../book/src/svm.md")]
    mod svm {}
    #[doc = include_str!("../../../book/src/model-format.md")]
    mod model_format {}
}
