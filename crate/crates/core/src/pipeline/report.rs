use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cat::{MlcReport, StopReason};
use crate::cdi::{bin_index, bin_lower_edge, CdiRecord};
use crate::classifier::{Hyperparameters, MetricsReport};
use crate::gate::{ClassGateSummary, MlcCertificate};
use crate::irt::{CategoryCollapse, ModelKind};
use crate::ClassLabel;

use super::config::RunConfig;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows_ingested: usize,
    pub n_cases: usize,
    pub n_class1: usize,
    pub n_class2: usize,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtSummary {
    pub model_kind: ModelKind,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub collapsed: Vec<CategoryCollapse>,
    pub n_clamped_cdis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSummary {
    pub chosen: Hyperparameters,
    pub cv_accuracy: f64,
    pub folds: usize,
    pub cells_scored: usize,
    pub cells_diverged: usize,
}

/// One row of the MLC side of the comparison; trajectories live in their
/// own CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcSummary {
    pub class_label: ClassLabel,
    pub mlc: Option<f64>,
    pub cases_used: usize,
    pub fraction_of_dataset: Option<f64>,
    pub stop_reason: StopReason,
    pub initial_target: f64,
    pub final_target: f64,
    pub wall_time_seconds: f64,
}

impl From<&MlcReport> for MlcSummary {
    fn from(r: &MlcReport) -> Self {
        MlcSummary {
            class_label: r.class_label,
            mlc: r.mlc,
            cases_used: r.cases_used,
            fraction_of_dataset: r.fraction_of_dataset,
            stop_reason: r.stop_reason,
            initial_target: r.initial_target,
            final_target: r.final_target,
            wall_time_seconds: r.wall_time_seconds,
        }
    }
}

/// Wall times of the two evaluation paradigms. Traditional time covers
/// prediction of the whole test set plus metric computation; CAT time covers
/// the administration loop including selection and prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingTable {
    pub traditional_wall_time_seconds: f64,
    pub cat_wall_time_seconds_class1: f64,
    pub cat_wall_time_seconds_class2: f64,
    /// Total CAT time divided by traditional time.
    pub wall_time_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub irt: IrtSummary,
    pub classifier: ClassifierSummary,
    pub traditional: MetricsReport,
    pub mlc: Vec<MlcSummary>,
    pub gated_accuracy: Vec<ClassGateSummary>,
    pub certificate: MlcCertificate,
    pub timing: TimingTable,
}

pub fn emit_timing(traditional: &MetricsReport, mlc: &[MlcSummary]) -> TimingTable {
    let cat = |c: ClassLabel| {
        mlc.iter()
            .find(|m| m.class_label == c)
            .map_or(0.0, |m| m.wall_time_seconds)
    };
    let (c1, c2) = (cat(ClassLabel::Class1), cat(ClassLabel::Class2));
    TimingTable {
        traditional_wall_time_seconds: traditional.wall_time_seconds,
        cat_wall_time_seconds_class1: c1,
        cat_wall_time_seconds_class2: c2,
        wall_time_ratio: if traditional.wall_time_seconds > 0.0 {
            (c1 + c2) / traditional.wall_time_seconds
        } else {
            f64::NAN
        },
    }
}

impl ComparisonReport {
    /// Traditional metrics next to the per-class MLC, with the data each
    /// needed and the time each took.
    pub fn render_text(&self) -> String {
        let n = self.dataset.n_cases as f64;
        let t = &self.traditional;
        let test_share = format!("{} ({:.2}%)", self.dataset.n_test, 100.0 * self.dataset.n_test as f64 / n);
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:>8}  {:>22}  {:>14}", "Metric", "Value", "Data required (no.)", "Comp. time (s)");
        let auc = t.auc.map_or("n/a".to_string(), |a| format!("{a:.4}"));
        for (name, value) in [
            ("Accuracy", format!("{:.4}", t.accuracy)),
            ("Precision", format!("{:.4}", t.precision)),
            ("Recall", format!("{:.4}", t.recall)),
            ("F1", format!("{:.4}", t.f1)),
            ("AUC", auc),
        ] {
            let _ = writeln!(s, "{name:<14} {value:>8}  {test_share:>22}  {:>14.6}", t.wall_time_seconds);
        }
        for m in &self.mlc {
            let value = m.mlc.map_or("refused".to_string(), |v| format!("{v:.4}"));
            let used = format!("{} ({:.2}%)", m.cases_used, 100.0 * m.cases_used as f64 / n);
            let _ = writeln!(s, "{:<14} {value:>8}  {used:>22}  {:>14.6}", format!("MLC ({})", m.class_label), m.wall_time_seconds);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "positive class: {}", t.positive_class);
        for g in &self.gated_accuracy {
            let acc = g.accuracy.map_or("absent".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(s, "gated accuracy ({}): {acc} over {} of {} cases", g.class_label, g.n_algorithm, g.n_cases);
        }
        let _ = writeln!(
            s,
            "CAT / traditional wall time: {:.4}",
            self.timing.wall_time_ratio
        );
        s
    }
}

/// Removes every object key containing `wall_time`, recursively.
pub fn strip_wall_times(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.contains("wall_time"));
            map.values_mut().for_each(strip_wall_times);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_wall_times),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub class_label: ClassLabel,
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub count: usize,
}

/// Per-class counts of oriented CDIs in 0.25-wide bins.
pub fn cdi_histogram(records: &[CdiRecord]) -> Vec<HistogramRow> {
    let mut counts: BTreeMap<(ClassLabel, i64), usize> = BTreeMap::new();
    for r in records {
        if let Some(x) = r.oriented_cdi {
            *counts.entry((r.class_label, bin_index(x))).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((class_label, k), count)| HistogramRow {
            class_label,
            bin_lower: bin_lower_edge(k),
            bin_upper: bin_lower_edge(k + 1),
            count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAccuracy {
    pub class_label: ClassLabel,
    pub bin_lower: f64,
    pub n_cases: usize,
    pub n_correct: usize,
    pub accuracy: f64,
}

/// Classifier accuracy per class and oriented-CDI bin. `correct` pairs a
/// case id with whether the classifier got it right.
pub fn bin_accuracy(records: &[CdiRecord], correct: &BTreeMap<&str, bool>) -> Vec<BinAccuracy> {
    let mut tallies: BTreeMap<(ClassLabel, i64), (usize, usize)> = BTreeMap::new();
    for r in records {
        let (Some(&ok), Some(x)) = (correct.get(r.case_id.as_str()), r.oriented_cdi) else {
            continue;
        };
        let t = tallies.entry((r.class_label, bin_index(x))).or_default();
        t.0 += 1;
        t.1 += usize::from(ok);
    }
    tallies
        .into_iter()
        .map(|((class_label, k), (n, c))| BinAccuracy {
            class_label,
            bin_lower: bin_lower_edge(k),
            n_cases: n,
            n_correct: c,
            accuracy: c as f64 / n as f64,
        })
        .collect()
}

/// Places where accuracy rises with difficulty. Bins with fewer than
/// `min_cases` cases are skipped; each remaining bin is compared with the
/// previous remaining bin of the same class.
pub fn monotonicity_violations(rows: &[BinAccuracy], min_cases: usize) -> Vec<(BinAccuracy, BinAccuracy)> {
    let mut out = Vec::new();
    for class in ClassLabel::BOTH {
        let mut prev: Option<&BinAccuracy> = None;
        for row in rows.iter().filter(|r| r.class_label == class && r.n_cases >= min_cases) {
            if let Some(p) = prev {
                if row.accuracy > p.accuracy {
                    out.push((p.clone(), row.clone()));
                }
            }
            prev = Some(row);
        }
    }
    out
}
