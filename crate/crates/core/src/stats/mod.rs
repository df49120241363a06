//! Two-sample t-tests over per-run bACC samples and the report tables built
//! from them.

mod report;
mod special;

pub use report::{
    best_bacc_table, best_bacc_table_partial, comparison_table, pairs_in, write_reports, BestBaccTable,
    ComparisonRow, ComparisonTable, ReportFiles,
};
pub use special::{inc_beta, ln_gamma, t_cdf, t_two_tailed};

use std::path::PathBuf;

use crate::harness::Approach;
use crate::nn::FilterPair;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("sample {label:?} has {n} values; at least 2 are required")]
    TooFewSamples { label: String, n: usize },
    #[error("{0} is not finite")]
    NonFinite(String),
    #[error("both samples have zero variance and equal means ({mean}); the t statistic is undefined")]
    Degenerate { mean: f64 },
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(f64),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("no successful runs for {approach} / {pair}")]
    MissingCell { approach: Approach, pair: FilterPair },
    #[error("no experiment results")]
    Empty,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Significance level used throughout the reports.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// One sample of per-run bACC values.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub label: String,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.len() < 2 {
            return Err(StatsError::TooFewSamples { label, n: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(format!("a value of sample {label:?}")));
        }
        Ok(SampleSet { values, label })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (self.values.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance, `n_a + n_b - 2` degrees of freedom.
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TTestResult {
    pub kind: TestKind,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    /// Two-tailed.
    pub p_value: f64,
    pub alpha: f64,
    pub reject_h0: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    Ok(())
}

fn finish(kind: TestKind, diff: f64, se2: f64, df: f64, alpha: f64, mean: f64) -> Result<TTestResult> {
    let (t, df) = if se2 > 0.0 {
        (diff / se2.sqrt(), df)
    } else if diff == 0.0 {
        return Err(StatsError::Degenerate { mean });
    } else {
        (diff.signum() * f64::INFINITY, df)
    };
    let p = special::t_two_tailed(t, df)?;
    Ok(TTestResult { kind, t_statistic: t, degrees_of_freedom: df, p_value: p, alpha, reject_h0: p < alpha })
}

/// Welch's two-sample t-test, two-tailed.
///
/// When both samples have zero variance but different means, the statistic
/// is infinite and `p = 0` with `n_a + n_b - 2` degrees of freedom.
pub fn welch_t_test(a: &SampleSet, b: &SampleSet, alpha: f64) -> Result<TTestResult> {
    check_alpha(alpha)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (a.variance() / na, b.variance() / nb);
    let se2 = va + vb;
    let df = if se2 > 0.0 { se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0)) } else { na + nb - 2.0 };
    finish(TestKind::Welch, a.mean() - b.mean(), se2, df, alpha, a.mean())
}

/// Student's pooled-variance two-sample t-test, two-tailed.
pub fn student_t_test(a: &SampleSet, b: &SampleSet, alpha: f64) -> Result<TTestResult> {
    check_alpha(alpha)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * a.variance() + (nb - 1.0) * b.variance()) / df;
    let se2 = pooled * (1.0 / na + 1.0 / nb);
    finish(TestKind::Student, a.mean() - b.mean(), se2, df, alpha, a.mean())
}

pub fn t_test(kind: TestKind, a: &SampleSet, b: &SampleSet, alpha: f64) -> Result<TTestResult> {
    match kind {
        TestKind::Welch => welch_t_test(a, b, alpha),
        TestKind::Student => student_t_test(a, b, alpha),
    }
}
