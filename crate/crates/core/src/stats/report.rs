use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{t_test, Result, SampleSet, StatsError, TTestResult, TestKind};
use crate::harness::{Approach, ExperimentResult};
use crate::nn::FilterPair;

const TITLE_BINARY_VS_MULTI: &str = "P-values from t-test. Comparison between 2-classes against 5-classes classification.";
const TITLE_BINARY_VS_COLLAPSED: &str = "P-values from t-test. Comparison between binary classification.";
const TITLE_BEST: &str = "Best balanced accuracy (bACC) by each training approach and number-of-filter values.";

/// Filter pairs present in `results`: the six standard pairs first, in report
/// order, then any others in ascending order.
pub fn pairs_in(results: &[ExperimentResult]) -> Vec<FilterPair> {
    let mut pairs: Vec<FilterPair> = results.iter().map(|r| r.pair).collect();
    pairs.sort_by_key(|p| (p.standard_rank().unwrap_or(usize::MAX), *p));
    pairs.dedup();
    pairs
}

fn cell(results: &[ExperimentResult], approach: Approach, pair: FilterPair) -> Option<&ExperimentResult> {
    results.iter().find(|r| r.approach == approach && r.pair == pair && !r.baccs().is_empty())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub pair: FilterPair,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `None` when both samples are constant and equal.
    pub test: Option<TTestResult>,
}

impl ComparisonRow {
    pub fn degenerate(&self) -> bool {
        self.test.is_none()
    }

    /// Two-tailed p-value; 1.0 for a degenerate row.
    pub fn p_value(&self) -> f64 {
        self.test.map_or(1.0, |t| t.p_value)
    }

    pub fn reject_h0(&self) -> bool {
        self.test.is_some_and(|t| t.reject_h0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub title: String,
    pub approach_a: Approach,
    pub approach_b: Approach,
    pub alpha: f64,
    pub kind: TestKind,
    pub rows: Vec<ComparisonRow>,
}

fn comparison_title(a: Approach, b: Approach) -> String {
    use Approach::*;
    match (a.min(b), a.max(b)) {
        (BinaryTrainBinaryClassify, MultiTrainMultiClassify) => TITLE_BINARY_VS_MULTI.to_string(),
        (BinaryTrainBinaryClassify, MultiTrainBinaryClassify) => TITLE_BINARY_VS_COLLAPSED.to_string(),
        _ => format!("P-values from t-test. Comparison between {a} and {b}."),
    }
}

/// t-test of approach `a` against `b` for every filter pair in `results`.
pub fn comparison_table(
    results: &[ExperimentResult],
    a: Approach,
    b: Approach,
    alpha: f64,
    kind: TestKind,
) -> Result<ComparisonTable> {
    let pairs = pairs_in(results);
    if pairs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let get = |approach| {
            let r = cell(results, approach, pair).ok_or(StatsError::MissingCell { approach, pair })?;
            SampleSet::new(format!("{approach} {pair}"), r.baccs())
        };
        let (sa, sb) = (get(a)?, get(b)?);
        let test = match t_test(kind, &sa, &sb, alpha) {
            Ok(t) => Some(t),
            Err(StatsError::Degenerate { .. }) => None,
            Err(e) => return Err(e),
        };
        rows.push(ComparisonRow { pair, mean_a: sa.mean(), mean_b: sb.mean(), test });
    }
    Ok(ComparisonTable { title: comparison_title(a, b), approach_a: a, approach_b: b, alpha, kind, rows })
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(s, &w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("   ").trim_end());
        out.push('\n');
    }
    out
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| StatsError::Csv { path: PathBuf::new(), message: e.to_string() };
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| StatsError::Csv { path: PathBuf::new(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ComparisonTable {
    /// Aligned plain text with the title on the first line. p-values use
    /// scientific notation with three significant digits.
    pub fn to_text(&self) -> String {
        let mut rows = vec![vec!["Filter pair".to_string(), "p-value".to_string(), "H0".to_string()]];
        for r in &self.rows {
            let mut p = format!("{:.2e}", r.p_value());
            if r.degenerate() {
                p.push('*');
            }
            let h0 = if r.reject_h0() { "rejected" } else { "not rejected" };
            rows.push(vec![r.pair.table_label(), p, h0.to_string()]);
        }
        let mut out = format!("{}\n", self.title);
        let _ = writeln!(out, "{} vs. {} ({:?} t-test, alpha = {})", self.approach_a, self.approach_b, self.kind, self.alpha);
        out.push('\n');
        out.push_str(&align(&rows));
        if self.rows.iter().any(ComparisonRow::degenerate) {
            out.push_str("\n* both samples constant and equal; the test is undefined\n");
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "filter_pair",
            "mean_a",
            "mean_b",
            "t_statistic",
            "degrees_of_freedom",
            "p_value",
            "reject_h0",
            "degenerate",
        ]
        .map(String::from)
        .to_vec();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let (t, df) = r.test.map_or((String::new(), String::new()), |t| {
                    (t.t_statistic.to_string(), t.degrees_of_freedom.to_string())
                });
                vec![
                    r.pair.table_label(),
                    r.mean_a.to_string(),
                    r.mean_b.to_string(),
                    t,
                    df,
                    format!("{:.2e}", r.p_value()),
                    r.reject_h0().to_string(),
                    r.degenerate().to_string(),
                ]
            })
            .collect();
        csv_string(&header, &rows)
    }
}

/// Best bACC per (filter pair, approach); columns follow [`Approach::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct BestBaccTable {
    pub title: String,
    pub approaches: Vec<Approach>,
    pub rows: Vec<(FilterPair, Vec<Option<f64>>)>,
}

impl BestBaccTable {
    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(|(_, c)| c.iter().all(Option::is_some))
    }

    pub fn populated_cells(&self) -> usize {
        self.rows.iter().map(|(_, c)| c.iter().flatten().count()).sum()
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|(pair, c)| {
                let mut row = vec![pair.table_label()];
                row.extend(c.iter().map(|v| v.map_or("-".to_string(), |b| format!("{:.1}", 100.0 * b))));
                row
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut top = vec!["Number-of-filter".to_string()];
        let mut bottom = vec!["values".to_string()];
        for a in &self.approaches {
            let (x, y) = a.heading();
            top.push(x.to_string());
            bottom.push(y.to_string());
        }
        let mut rows = vec![top, bottom];
        rows.extend(self.cells());
        format!("{}\n\n{}", self.title, align(&rows))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut header = vec!["Number-of-filter values".to_string()];
        header.extend(self.approaches.iter().map(|a| {
            let (x, y) = a.heading();
            format!("{x} {y}")
        }));
        csv_string(&header, &self.cells())
    }
}

/// Best-bACC table with a `None` for every cell lacking successful runs.
pub fn best_bacc_table_partial(results: &[ExperimentResult]) -> BestBaccTable {
    let rows = pairs_in(results)
        .into_iter()
        .map(|pair| (pair, Approach::ALL.iter().map(|&a| cell(results, a, pair).and_then(|r| r.best())).collect()))
        .collect();
    BestBaccTable { title: TITLE_BEST.to_string(), approaches: Approach::ALL.to_vec(), rows }
}

/// Best-bACC table; every approach must have results for every pair.
pub fn best_bacc_table(results: &[ExperimentResult]) -> Result<BestBaccTable> {
    let table = best_bacc_table_partial(results);
    if table.rows.is_empty() {
        return Err(StatsError::Empty);
    }
    for (pair, cells) in &table.rows {
        if let Some(i) = cells.iter().position(Option::is_none) {
            return Err(StatsError::MissingCell { approach: table.approaches[i], pair: *pair });
        }
    }
    Ok(table)
}

/// Files written by [`write_reports`] and tables that could not be built.
#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

fn write(path: PathBuf, text: &str, files: &mut ReportFiles) -> Result<()> {
    fs::write(&path, text).map_err(|source| StatsError::Io { path: path.clone(), source })?;
    files.written.push(path);
    Ok(())
}

/// Writes `table1`, `table2` and `table3` as `.csv` and `.txt`, plus
/// `bacc_runs.csv` (every run) and `summary.csv` (per cell) into `dir`.
pub fn write_reports(results: &[ExperimentResult], dir: &Path, alpha: f64, kind: TestKind) -> Result<ReportFiles> {
    if results.is_empty() {
        return Err(StatsError::Empty);
    }
    fs::create_dir_all(dir).map_err(|source| StatsError::Io { path: dir.to_path_buf(), source })?;
    let mut files = ReportFiles::default();

    let comparisons = [
        ("table1", Approach::BinaryTrainBinaryClassify, Approach::MultiTrainMultiClassify),
        ("table2", Approach::BinaryTrainBinaryClassify, Approach::MultiTrainBinaryClassify),
    ];
    for (name, a, b) in comparisons {
        match comparison_table(results, a, b, alpha, kind) {
            Ok(t) => {
                write(dir.join(format!("{name}.csv")), &t.to_csv()?, &mut files)?;
                write(dir.join(format!("{name}.txt")), &t.to_text(), &mut files)?;
            }
            Err(e @ (StatsError::MissingCell { .. } | StatsError::TooFewSamples { .. })) => {
                log::warn!("{name} skipped: {e}");
                files.skipped.push(format!("{name}: {e}"));
            }
            Err(e) => return Err(e),
        }
    }

    let best = best_bacc_table_partial(results);
    if !best.is_complete() {
        files.skipped.push(format!("table3: {} of {} cells populated", best.populated_cells(), best.rows.len() * 3));
    }
    write(dir.join("table3.csv"), &best.to_csv()?, &mut files)?;
    write(dir.join("table3.txt"), &best.to_text(), &mut files)?;

    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for r in results {
        for run in &r.runs {
            runs.push(vec![
                r.approach.to_string(),
                r.pair.to_string(),
                run.run_index.to_string(),
                run.seed.to_string(),
                if run.is_ok() { "ok" } else { "failed" }.to_string(),
                run.bacc.map_or(String::new(), |b| b.to_string()),
            ]);
        }
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        summary.push(vec![
            r.approach.to_string(),
            r.pair.to_string(),
            r.runs.len().to_string(),
            r.failed.to_string(),
            opt(r.mean),
            opt(r.std),
            opt(r.best()),
        ]);
    }
    let h = |cols: &[&str]| cols.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let text = csv_string(&h(&["approach", "filter_pair", "run_index", "seed", "status", "bacc"]), &runs)?;
    write(dir.join("bacc_runs.csv"), &text, &mut files)?;
    let text = csv_string(&h(&["approach", "filter_pair", "runs", "failed", "mean", "std", "best"]), &summary)?;
    write(dir.join("summary.csv"), &text, &mut files)?;
    Ok(files)
}
