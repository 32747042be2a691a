//! Discourse-aware response selection for multi-turn dialogue.
//!
//! Each utterance is encoded by fusing contextual, positional and syntactic
//! token views with multiview CCA ([`encoder`]). Consecutive turns are
//! related by a CCA over their latent dimensions, and the distinct shared
//! directions are accumulated as discourse tokens ([`discourse`]). Candidate
//! responses are ranked by cosine similarity to those tokens ([`ranker`])
//! and the rankings are scored with retrieval and text metrics
//! ([`metrics`]).
//!
//! The numerical modules are generic over [`Scalar`] (`f32`, `f64`); the
//! aliases below fix them to `f64`, which is what the CLI uses.

pub mod cli;
pub mod dataio;
pub mod discourse;
pub mod encoder;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod ranker;
pub mod scalar;
pub mod spectral;
pub mod views;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = spectral::DataMatrix<f64>;
pub type Cca = spectral::CcaModel<f64>;
pub type Mcca = spectral::MccaModel<f64>;
pub type Rep = encoder::UtteranceRep<f64>;
pub type State = discourse::DiscourseState<f64>;
pub type DefaultEncoder = encoder::Encoder<f64>;
pub type DefaultDiscourseConfig = discourse::DiscourseConfig<f64>;
