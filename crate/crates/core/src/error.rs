use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid mapping config: {0}")]
    MappingConfig(String),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("unmapped conclusion label `{0}`")]
    UnmappedLabel(String),

    #[error("invalid value `{value}` in column `{column}` (row {row})")]
    InvalidField {
        column: String,
        value: String,
        row: usize,
    },

    #[error("item `{0}` has inconsistent ground truth across responses")]
    InconsistentGroundTruth(String),

    #[error("dataset contains no responses")]
    EmptyDataset,

    #[error("policy removed every response")]
    AllResponsesRemoved,

    #[error("examiner `{0}` has an exclusion without an elimination basis")]
    MissingBasis(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("ratio undefined: examiner and item variances are both zero")]
    UndefinedRatio,

    #[error("every one of {0} predictive simulations produced an undefined ratio")]
    AllSimulationsUndefined(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed draws file: {0}")]
    DrawsFormat(String),
}
