use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("invalid row {row}: {reason}")]
    InvalidRow { row: u64, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("undefined correlation between `{lhs}` and `{rhs}`: zero variance")]
    UndefinedCorrelation { lhs: String, rhs: String },

    #[error("undefined implication `{lhs}` => `{rhs}`: antecedent never attested")]
    UndefinedImplication { lhs: String, rhs: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible inventory: {0}")]
    InfeasibleInventory(String),

    #[error("repair failed: no segment in the database satisfies `{0}`")]
    RepairFailure(String),

    #[error("infeasible fill: the inventory has no {0}")]
    InfeasibleFill(&'static str),

    #[error("segment `{0}` lacks sonority or place features")]
    FeatureLookup(String),

    #[error("lexicon capacity exhausted: generated {achieved} of {requested} distinct forms")]
    Capacity { achieved: usize, requested: usize },

    #[error("ontology error at node `{node}`: {reason}")]
    Ontology { node: String, reason: String },

    #[error("unknown meaning id `{0}`")]
    UnknownMeaning(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("phoneme `{0}` is outside the support of the reference distribution")]
    Coverage(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Toml(_) => "config",
            Error::MissingColumn(_) => "schema",
            Error::InvalidRow { .. } => "schema",
            Error::EmptyInput(_) => "empty_input",
            Error::UndefinedCorrelation { .. } => "undefined_correlation",
            Error::UndefinedImplication { .. } => "undefined_implication",
            Error::Config(_) => "config",
            Error::InfeasibleInventory(_) => "infeasible_inventory",
            Error::RepairFailure(_) => "repair_failure",
            Error::InfeasibleFill(_) => "infeasible_fill",
            Error::FeatureLookup(_) => "feature_lookup",
            Error::Capacity { .. } => "capacity",
            Error::Ontology { .. } => "ontology",
            Error::UnknownMeaning(_) => "unknown_meaning",
            Error::SizeMismatch(_) => "size_mismatch",
            Error::InvalidInput(_) => "invalid_input",
            Error::Coverage(_) => "coverage",
            Error::Stage { .. } => "stage",
        }
    }
}
