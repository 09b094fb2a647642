//! Analysis of response-level data from forensic black-box studies.
//!
//! The pipeline runs: ingest and canonicalise responses ([`study_data`]),
//! tabulate error rates under different inconclusive treatments
//! ([`error_rates`]), split inconclusive variability between examiners and
//! items ([`variance`]), fit a latent-tendency logistic model by MCMC
//! ([`latent_model`], [`sampler`]) and turn the posterior into model-based
//! ratios, predictive intervals and failure rates ([`posterior`]).

pub mod error;
pub mod error_rates;
pub mod latent_model;
pub mod posterior;
pub mod rng;
pub mod sampler;
pub mod study_data;
pub mod variance;

pub use error::{Error, Result};
pub use error_rates::{
    build_contingency, failure_rate, failure_rate_counts, rates, summarize_conclusive,
    ContingencyTable, Rate, RateOption, RateSet,
};
pub use latent_model::{ModelConfig, Parameters};
pub use posterior::{
    adjusted_failure_rates, model_ratio, predictive_ratio_interval, PredictiveInterval, RatioBasis,
    RatioEstimate,
};
pub use sampler::{fit, PosteriorDraws, SamplerConfig};
pub use study_data::{
    group_examiners, ingest_csv, AnalysisPolicy, Conclusion, ConclusionMapping, ExaminerGroup,
    GroundTruth, Response, StudyDataset, StudyDesign,
};
pub use variance::{decompose, decompose_by_group, DecompositionResult};
