use std::collections::HashMap;

use crate::cat::{run_cat, CatConfig, MlcReport, PoolCase};
use crate::cdi::{orient_cdis, score_cases, CdiRecord};
use crate::classifier::{grid_search_train, traditional_metrics, GridSearchOutcome, MetricsReport, TrainedModel};
use crate::dataprep::{
    apply_coding, balance_classes, classifier_inputs, ingest_csv, stratified_split, CodingReport, CodingSpec, Role,
    SplitAssignment, Table,
};
use crate::irt::{fit_2pl, fit_grm, FitResult, ItemBank, ModelKind, ResponseMatrix};
use crate::rng::tagged_seed;
use crate::{ClassLabel, Error, Result};

use super::config::RunConfig;

/// Ingested, balanced and coded data plus the classifier inputs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw_rows: usize,
    pub table: Table,
    pub coding: CodingSpec,
    pub coding_report: CodingReport,
    pub responses: ResponseMatrix,
    pub features: HashMap<String, Vec<f64>>,
    pub labels: HashMap<String, ClassLabel>,
}

impl Prepared {
    pub fn dataset_size(&self) -> usize {
        self.table.n_rows()
    }

    fn rows_for(&self, ids: &[&str]) -> (Vec<Vec<f64>>, Vec<ClassLabel>) {
        ids.iter().map(|id| (self.features[*id].clone(), self.labels[*id])).unzip()
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let stage = |e: Error| e.in_stage("dataprep");
    let raw = ingest_csv(&cfg.data, &cfg.schema).map_err(stage)?;
    let raw_rows = raw.n_rows();
    let table = if cfg.balance {
        balance_classes(&raw, tagged_seed(cfg.seed, "balance")).map_err(stage)?
    } else {
        raw
    };
    let coding = cfg.coding_spec().map_err(stage)?;
    let (responses, coding_report) = apply_coding(&table, &coding).map_err(stage)?;
    if cfg.model_kind == ModelKind::Dichotomous {
        if let Some(r) = coding_report.rules.iter().find(|r| r.n_categories != 2) {
            return Err(Error::Config(format!(
                "dichotomous model but `{}` is coded into {} categories",
                r.feature, r.n_categories
            ))
            .in_stage("config"));
        }
    }
    let rows = classifier_inputs(&table, &coding).map_err(stage)?;
    let features = table.case_ids.iter().cloned().zip(rows).collect();
    let labels = table.case_ids.iter().cloned().zip(table.labels.iter().copied()).collect();
    Ok(Prepared { raw_rows, table, coding, coding_report, responses, features, labels })
}

pub fn fit_irt(cfg: &RunConfig, data: &Prepared) -> Result<FitResult> {
    let fit_cfg = crate::irt::FitConfig { seed: tagged_seed(cfg.seed, "fit"), ..cfg.fit.clone() };
    match cfg.model_kind {
        ModelKind::Dichotomous => fit_2pl(&data.responses, &fit_cfg),
        ModelKind::Graded => fit_grm(&data.responses, &fit_cfg),
    }
    .map_err(|e| e.in_stage("fit-irt"))
}

/// Raw and oriented CDIs for every case.
pub fn score(data: &Prepared, bank: &ItemBank) -> Result<Vec<CdiRecord>> {
    score_cases(&data.responses, bank)
        .and_then(orient_cdis)
        .map_err(|e| e.in_stage("score-cdi"))
}

pub fn split(cfg: &RunConfig, records: &[CdiRecord]) -> Result<SplitAssignment> {
    stratified_split(records, tagged_seed(cfg.seed, "split")).map_err(|e| e.in_stage("split"))
}

pub fn train(cfg: &RunConfig, data: &Prepared, split: &SplitAssignment) -> Result<GridSearchOutcome> {
    let (x, y) = data.rows_for(&split.ids(Role::Train));
    grid_search_train(&x, &y, &cfg.grid, cfg.folds, &cfg.train, tagged_seed(cfg.seed, "classifier"))
        .map_err(|e| e.in_stage("train"))
}

pub fn evaluate(cfg: &RunConfig, data: &Prepared, split: &SplitAssignment, model: &TrainedModel) -> Result<MetricsReport> {
    let (x, y) = data.rows_for(&split.ids(Role::Test));
    traditional_metrics(model, &x, &y, cfg.positive_class).map_err(|e| e.in_stage("evaluate"))
}

/// The CAT settings actually used by a run.
pub fn cat_config(cfg: &RunConfig) -> CatConfig {
    CatConfig { seed: tagged_seed(cfg.seed, "cat"), ..cfg.cat.clone() }
}

/// Test-set cases of `class`, with oriented CDIs.
pub fn cat_pool(records: &[CdiRecord], split: &SplitAssignment, class: ClassLabel) -> Result<Vec<PoolCase>> {
    let roles = split.role_of();
    records
        .iter()
        .filter(|r| r.class_label == class && roles.get(r.case_id.as_str()) == Some(&Role::Test))
        .map(|r| Ok(PoolCase { case_id: r.case_id.clone(), oriented_cdi: r.oriented()? }))
        .collect()
}

/// One adaptive session per class on the test set, class 1 first.
pub fn run_cat_sessions(
    cfg: &RunConfig,
    data: &Prepared,
    records: &[CdiRecord],
    split: &SplitAssignment,
    model: &TrainedModel,
) -> Result<[MlcReport; 2]> {
    let cat_cfg = cat_config(cfg);
    let run = |class| -> Result<MlcReport> {
        let pool = cat_pool(records, split, class)?;
        let mut report = run_cat(model, class, pool, &data.features, &cat_cfg)?;
        report.set_dataset_size(data.dataset_size());
        Ok(report)
    };
    let c1 = run(ClassLabel::Class1).map_err(|e| e.in_stage("cat"))?;
    let c2 = run(ClassLabel::Class2).map_err(|e| e.in_stage("cat"))?;
    Ok([c1, c2])
}
