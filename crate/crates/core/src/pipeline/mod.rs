//! End-to-end orchestration: ingest, code, fit, score, split, train,
//! evaluate, run the adaptive tests, certify, and write every artifact.

mod config;
mod report;
mod stages;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

pub use config::{CodingSource, RunConfig, CONFIG_SCHEMA_VERSION};
pub use report::{
    bin_accuracy, cdi_histogram, emit_timing, monotonicity_violations, strip_wall_times, BinAccuracy,
    ClassifierSummary, ComparisonReport, DatasetSummary, HistogramRow, IrtSummary, MlcSummary, TimingTable,
    REPORT_SCHEMA_VERSION,
};
pub use stages::{cat_config, cat_pool, evaluate, fit_irt, prepare, run_cat_sessions, score, split, train, Prepared};

use crate::cdi::write_cdi_csv;
use crate::dataprep::{write_split_csv, Role};
use crate::gate::{gated_accuracy, GateCase, MlcCertificate};
use crate::{Error, Result};

/// Fixed artifact file names inside the output directory.
pub mod artifacts {
    pub const ITEM_BANK: &str = "itembank.json";
    pub const CODING_REPORT: &str = "coding_report.json";
    pub const CDI: &str = "cdi.csv";
    pub const SPLIT: &str = "split.csv";
    pub const MODEL: &str = "model.json";
    pub const GRID: &str = "grid.json";
    pub const METRICS: &str = "metrics.json";
    pub const CAT_CLASS1: &str = "cat_class1.csv";
    pub const CAT_CLASS2: &str = "cat_class2.csv";
    pub const CAT_REPORTS: &str = "cat_reports.json";
    pub const CERTIFICATE: &str = "certificate.json";
    pub const COMPARISON: &str = "comparison.json";
    pub const COMPARISON_TEXT: &str = "comparison.txt";
    pub const CDI_HISTOGRAM: &str = "cdi_histogram.csv";
    pub const BIN_ACCURACY: &str = "bin_accuracy.csv";
    pub const MLC_COORDINATES: &str = "mlc_coordinates.csv";
    pub const MANIFEST: &str = "manifest.json";
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    artifacts: &'a [&'static str],
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct MlcCoordinates<'a> {
    model_id: &'a str,
    mlc_class1: f64,
    mlc_class2: f64,
    cases_used_class1: usize,
    cases_used_class2: usize,
}

/// Runs every stage and writes all artifacts under `cfg.out_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<ComparisonReport> {
    use artifacts::*;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let at = |name: &str| out.join(name);

    let data = prepare(cfg)?;
    write_json(&at(CODING_REPORT), &data.coding_report)?;

    let fit = fit_irt(cfg, &data)?;
    fit.bank.save(&at(ITEM_BANK))?;
    if !fit.converged {
        log::warn!("IRT fit stopped after {} iterations without converging", fit.iterations);
    }

    let records = score(&data, &fit.bank)?;
    write_cdi_csv(&records, create_file(&at(CDI))?)?;

    let split = split(cfg, &records)?;
    write_split_csv(&split, create_file(&at(SPLIT))?)?;

    let grid = train(cfg, &data, &split)?;
    grid.model.save(&at(MODEL))?;
    write_json(&at(GRID), &grid.cells)?;

    let traditional = evaluate(cfg, &data, &split, &grid.model)?;
    write_json(&at(METRICS), &traditional)?;

    let [cat1, cat2] = run_cat_sessions(cfg, &data, &records, &split, &grid.model)?;
    cat1.write_trajectory_csv(create_file(&at(CAT_CLASS1))?)?;
    cat2.write_trajectory_csv(create_file(&at(CAT_CLASS2))?)?;
    write_json(&at(CAT_REPORTS), &[&cat1, &cat2])?;

    let certificate = MlcCertificate::from_reports(&grid.model, &cat1, &cat2, cfg.cat.reliability)
        .map_err(|e| e.in_stage("gate"))?;
    certificate.save(&at(CERTIFICATE))?;

    let roles = split.role_of();
    let mut correct = BTreeMap::new();
    let mut gate_cases = Vec::new();
    for r in &records {
        if roles.get(r.case_id.as_str()) != Some(&Role::Test) {
            continue;
        }
        let predicted = grid.model.predict(&data.features[&r.case_id]).map_err(|e| e.in_stage("gate"))?.class;
        correct.insert(r.case_id.as_str(), predicted == r.class_label);
        gate_cases.push(GateCase {
            case_id: r.case_id.clone(),
            raw_cdi: r.raw_cdi,
            true_class: r.class_label,
            predicted_class: predicted,
        });
    }
    write_csv(&at(CDI_HISTOGRAM), &cdi_histogram(&records))?;
    write_csv(&at(BIN_ACCURACY), &bin_accuracy(&records, &correct))?;
    write_csv(
        &at(MLC_COORDINATES),
        &[MlcCoordinates {
            model_id: &certificate.model_id,
            mlc_class1: certificate.mlc_class1,
            mlc_class2: certificate.mlc_class2,
            cases_used_class1: cat1.cases_used,
            cases_used_class2: cat2.cases_used,
        }],
    )?;

    let (n1, n2) = data.table.class_counts();
    let mlc: Vec<MlcSummary> = [&cat1, &cat2].into_iter().map(MlcSummary::from).collect();
    let best_cv = grid
        .cells
        .iter()
        .find(|c| c.hyperparameters == grid.chosen)
        .and_then(|c| c.mean_accuracy)
        .unwrap_or(f64::NAN);
    let report = ComparisonReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        dataset: DatasetSummary {
            n_rows_ingested: data.raw_rows,
            n_cases: data.dataset_size(),
            n_class1: n1,
            n_class2: n2,
            n_train: split.ids(Role::Train).len(),
            n_test: split.ids(Role::Test).len(),
        },
        irt: IrtSummary {
            model_kind: cfg.model_kind,
            converged: fit.converged,
            iterations: fit.iterations,
            log_likelihood: fit.log_likelihood(),
            collapsed: fit.collapsed.clone(),
            n_clamped_cdis: records.iter().filter(|r| r.clamped).count(),
        },
        classifier: ClassifierSummary {
            chosen: grid.chosen,
            cv_accuracy: best_cv,
            folds: grid.folds,
            cells_scored: grid.cells.len(),
            cells_diverged: grid.cells.iter().filter(|c| c.mean_accuracy.is_none()).count(),
        },
        timing: emit_timing(&traditional, &mlc),
        traditional,
        mlc,
        gated_accuracy: gated_accuracy(&gate_cases, &certificate),
        certificate,
    };
    write_json(&at(COMPARISON), &report)?;
    fs::write(at(COMPARISON_TEXT), report.render_text()).map_err(|e| Error::io(at(COMPARISON_TEXT), e))?;
    write_json(
        &at(MANIFEST),
        &Manifest {
            schema_version: REPORT_SCHEMA_VERSION,
            tool: concat!("mlc ", env!("CARGO_PKG_VERSION")),
            artifacts: &[
                ITEM_BANK, CODING_REPORT, CDI, SPLIT, MODEL, GRID, METRICS, CAT_CLASS1, CAT_CLASS2, CAT_REPORTS,
                CERTIFICATE, COMPARISON, COMPARISON_TEXT, CDI_HISTOGRAM, BIN_ACCURACY, MLC_COORDINATES,
            ],
            config: cfg,
        },
    )?;
    Ok(report)
}
