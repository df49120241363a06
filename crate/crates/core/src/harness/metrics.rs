use std::fmt;

/// Metrics undefined for the given counts.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("class {class} has no ground-truth samples; the metric is undefined")]
    EmptyClass { class: usize },
    #[error("expected a {expected}-class confusion matrix, got {got} classes")]
    ClassCount { expected: usize, got: usize },
    #[error("confusion matrix must be square with at least 2 classes")]
    Malformed,
    #[error("class index {index} out of range for {k} classes")]
    Index { index: usize, k: usize },
}

/// `k × k` prediction counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<Vec<u64>>", into = "Vec<Vec<u64>>")]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "confusion matrix needs at least 2 classes");
        ConfusionMatrix { k, counts: vec![0; k * k] }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        let k = rows.len();
        if k < 2 || rows.iter().any(|r| r.len() != k) {
            return Err(MetricError::Malformed);
        }
        Ok(ConfusionMatrix { k, counts: rows.concat() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<(), MetricError> {
        self.add_count(truth, predicted, 1)
    }

    pub fn add_count(&mut self, truth: usize, predicted: usize, n: u64) -> Result<(), MetricError> {
        for index in [truth, predicted] {
            if index >= self.k {
                return Err(MetricError::Index { index, k: self.k });
            }
        }
        self.counts[truth * self.k + predicted] += n;
        Ok(())
    }

    pub fn row_total(&self, truth: usize) -> u64 {
        self.counts[truth * self.k..(truth + 1) * self.k].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k).map(<[u64]>::to_vec).collect()
    }

    /// Recall of class `c`: `M[c][c] / Σ_j M[c][j]`.
    pub fn recall(&self, c: usize) -> Result<f64, MetricError> {
        let n = self.row_total(c);
        if n == 0 {
            return Err(MetricError::EmptyClass { class: c });
        }
        Ok(self.get(c, c) as f64 / n as f64)
    }
}

impl TryFrom<Vec<Vec<u64>>> for ConfusionMatrix {
    type Error = MetricError;

    fn try_from(rows: Vec<Vec<u64>>) -> Result<Self, MetricError> {
        ConfusionMatrix::from_rows(rows)
    }
}

impl From<ConfusionMatrix> for Vec<Vec<u64>> {
    fn from(cm: ConfusionMatrix) -> Self {
        cm.rows()
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.counts.iter().map(|c| c.to_string().len()).max().unwrap_or(1);
        for row in self.counts.chunks(self.k) {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Maps a five-class matrix (normal first) onto normal vs. suspicious. Any
/// crime sample predicted as any crime class is a true positive.
pub fn collapse_to_binary(cm5: &ConfusionMatrix) -> Result<ConfusionMatrix, MetricError> {
    if cm5.k != 5 {
        return Err(MetricError::ClassCount { expected: 5, got: cm5.k });
    }
    let mut out = ConfusionMatrix::new(2);
    for t in 0..5 {
        for p in 0..5 {
            out.counts[usize::from(t > 0) * 2 + usize::from(p > 0)] += cm5.get(t, p);
        }
    }
    Ok(out)
}

/// `(TPR + TNR) / 2` with class 1 (suspicious) as the positive class.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    if cm.k != 2 {
        return Err(MetricError::ClassCount { expected: 2, got: cm.k });
    }
    let (tn, fp, fn_, tp) = (cm.get(0, 0), cm.get(0, 1), cm.get(1, 0), cm.get(1, 1));
    if tp + fn_ == 0 {
        return Err(MetricError::EmptyClass { class: 1 });
    }
    if tn + fp == 0 {
        return Err(MetricError::EmptyClass { class: 0 });
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    Ok((tpr + tnr) / 2.0)
}

/// Mean per-class recall (macro recall); equals [`balanced_accuracy`] for
/// two classes.
pub fn multiclass_balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    for c in 0..cm.k {
        sum += cm.recall(c)?;
    }
    Ok(sum / cm.k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(tp: u64, fn_: u64, tn: u64, fp: u64) -> ConfusionMatrix {
        ConfusionMatrix::from_rows(vec![vec![tn, fp], vec![fn_, tp]]).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(balanced_accuracy(&binary(50, 0, 50, 0)).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&binary(30, 10, 45, 5)).unwrap(), 0.825);
        assert_eq!(balanced_accuracy(&binary(0, 10, 0, 10)).unwrap(), 0.0);
        // constant predictor
        assert_eq!(balanced_accuracy(&binary(7, 0, 0, 13)).unwrap(), 0.5);
    }

    #[test]
    fn undefined_when_a_class_is_absent() {
        assert_eq!(balanced_accuracy(&binary(0, 0, 5, 1)), Err(MetricError::EmptyClass { class: 1 }));
        assert_eq!(balanced_accuracy(&binary(3, 1, 0, 0)), Err(MetricError::EmptyClass { class: 0 }));
        let mut cm = ConfusionMatrix::new(5);
        cm.add(0, 0).unwrap();
        assert!(multiclass_balanced_accuracy(&cm).is_err());
        assert!(balanced_accuracy(&cm).is_err());
    }

    #[test]
    fn collapse_rule() {
        let mut cm = ConfusionMatrix::new(5);
        cm.add(1, 3).unwrap();
        let b = collapse_to_binary(&cm).unwrap();
        assert_eq!(b.get(1, 1), 1);
        assert_eq!(b.total(), 1);

        let mut diag = ConfusionMatrix::new(5);
        for c in 0..5 {
            diag.add_count(c, c, 3 + c as u64).unwrap();
        }
        let b = collapse_to_binary(&diag).unwrap();
        assert_eq!(b.rows(), vec![vec![3, 0], vec![0, 4 + 5 + 6 + 7]]);
        assert_eq!(multiclass_balanced_accuracy(&diag).unwrap(), 1.0);
        assert!(collapse_to_binary(&b).is_err());
    }

    #[test]
    fn two_class_macro_recall_matches() {
        let cm = binary(13, 4, 22, 9);
        assert_eq!(multiclass_balanced_accuracy(&cm).unwrap(), balanced_accuracy(&cm).unwrap());
    }

    #[test]
    fn serde_as_nested_rows() {
        let cm = binary(1, 2, 3, 4);
        let s = serde_json::to_string(&cm).unwrap();
        assert_eq!(s, "[[3,4],[2,1]]");
        assert_eq!(serde_json::from_str::<ConfusionMatrix>(&s).unwrap(), cm);
        assert!(serde_json::from_str::<ConfusionMatrix>("[[1,2],[3]]").is_err());
    }
}
