//! Training approaches, metrics and the repeated-run experiment protocol.
//!
//! Two training schemes exist: binary (normal vs. any crime) and five-class.
//! Three approaches are evaluated from them; the five-class network is scored
//! both directly and after collapsing its predictions to normal/suspicious.

mod data;
mod experiment;
mod metrics;
mod train;

pub use data::{split_dataset, PreparedDataset, PreparedVideo, Split};
pub use experiment::{
    load_results, run_experiment, run_grid, run_job, ExperimentResult, GridOutcome, GridSpec, JobOutput, RunResult,
    RunSettings, RunStatus, CellSummary, GridSummary,
};
pub use metrics::{balanced_accuracy, collapse_to_binary, multiclass_balanced_accuracy, ConfusionMatrix, MetricError};
pub use train::{argmax, evaluate, relabel, train_model, TrainConfig, TrainOutcome};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::nn::{FilterPair, NnError};
use crate::pcb::{ClassLabel, PcbError};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Pcb(#[from] PcbError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot split dataset: {0}")]
    Split(String),
    #[error("class {0} has no training clips")]
    EmptyClass(String),
    #[error("training diverged at epoch {epoch}, batch {step}: loss {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },
    #[error("network produced non-finite logits on video {0}")]
    NonFiniteOutput(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{approach} / {pair}: {failed} runs failed (more than {limit})")]
    TooManyFailures { approach: Approach, pair: FilterPair, failed: usize, limit: usize },
    #[error("{0}: no run records found")]
    NoResults(PathBuf),
}

impl HarnessError {
    /// Failures that a retry with a different seed may avoid.
    pub fn is_divergence(&self) -> bool {
        matches!(self, HarnessError::Divergence { .. } | HarnessError::NonFiniteOutput(_))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

/// How the five source labels map onto network outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// normal = 0, every crime = 1.
    Binary,
    /// normal, shoplifting, stealing, arson, abuse = 0..4.
    Multi,
}

impl LabelScheme {
    pub fn num_classes(self) -> usize {
        match self {
            LabelScheme::Binary => 2,
            LabelScheme::Multi => 5,
        }
    }

    pub fn class_of(self, label: ClassLabel) -> usize {
        match self {
            LabelScheme::Binary => usize::from(label.is_crime()),
            LabelScheme::Multi => label.index(),
        }
    }

    pub fn class_name(self, class: usize) -> &'static str {
        match (self, class) {
            (LabelScheme::Binary, 0) => "normal",
            (LabelScheme::Binary, _) => "suspicious",
            (LabelScheme::Multi, c) => ClassLabel::from_index(c).map_or("?", ClassLabel::as_str),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelScheme::Binary => "binary",
            LabelScheme::Multi => "multi",
        }
    }
}

impl fmt::Display for LabelScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    BinaryTrainBinaryClassify,
    MultiTrainMultiClassify,
    MultiTrainBinaryClassify,
}

impl Approach {
    /// Report column order.
    pub const ALL: [Approach; 3] = [
        Approach::BinaryTrainBinaryClassify,
        Approach::MultiTrainMultiClassify,
        Approach::MultiTrainBinaryClassify,
    ];

    pub fn training_scheme(self) -> LabelScheme {
        match self {
            Approach::BinaryTrainBinaryClassify => LabelScheme::Binary,
            _ => LabelScheme::Multi,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Approach::BinaryTrainBinaryClassify => "binary_train_binary_classify",
            Approach::MultiTrainMultiClassify => "multi_train_multi_classify",
            Approach::MultiTrainBinaryClassify => "multi_train_binary_classify",
        }
    }

    /// Two-line column heading used in reports.
    pub fn heading(self) -> (&'static str, &'static str) {
        match self {
            Approach::BinaryTrainBinaryClassify => ("Binary training", "Binary classification (%)"),
            Approach::MultiTrainMultiClassify => ("Multiclass training", "Multi-class classification (%)"),
            Approach::MultiTrainBinaryClassify => ("Multiclass training", "Binary classification (%)"),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Approach {
    type Err = HarnessError;

    /// Accepts `binary_train_binary_classify` as well as
    /// `BinaryTrain_BinaryClassify`.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Approach::ALL
            .into_iter()
            .find(|a| a.as_str().replace('_', "") == norm)
            .ok_or_else(|| HarnessError::Config(format!("unknown approach {s:?}")))
    }
}
