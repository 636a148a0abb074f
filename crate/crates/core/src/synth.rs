//! Seeded synthetic data: two-class feature tables driven by a latent
//! severity, and normally distributed CDI pools.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cat::PoolCase;
use crate::dataprep::{
    Column, ColumnKind, ColumnSpec, CodingSpec, Cutpoints, Direction, FeatureRule, LabelSpec, Rule, Schema, Table,
};
use crate::irt::ModelKind;
use crate::rng::rng_from_seed;
use crate::{ClassLabel, Error, Result};

/// Each case has a latent severity `s ~ N(0, 1)`. It is class 1 when
/// `s + N(0, label_noise_sd)` is positive, and every feature is
/// `loading * s + N(0, noise_sd)`. Cases near the boundary are hard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTable {
    pub n_cases: usize,
    pub n_features: usize,
    pub loading: f64,
    pub noise_sd: f64,
    pub label_noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticTable {
    fn default() -> Self {
        SyntheticTable {
            n_cases: 2000,
            n_features: 8,
            loading: 1.0,
            noise_sd: 0.8,
            label_noise_sd: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticTable {
    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.n_features).map(|j| format!("f{j}")).collect()
    }

    pub fn generate(&self) -> Table {
        let mut rng = rng_from_seed(self.seed);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let mut cols = vec![Vec::with_capacity(self.n_cases); self.n_features];
        let mut labels = Vec::with_capacity(self.n_cases);
        for _ in 0..self.n_cases {
            let s: f64 = std.sample(&mut rng);
            let noisy = s + self.label_noise_sd * std.sample(&mut rng);
            labels.push(if noisy > 0.0 { ClassLabel::Class1 } else { ClassLabel::Class2 });
            for col in cols.iter_mut() {
                col.push(self.loading * s + self.noise_sd * std.sample(&mut rng));
            }
        }
        Table {
            case_ids: (1..=self.n_cases).map(|i| i.to_string()).collect(),
            labels,
            columns: self
                .feature_names()
                .into_iter()
                .zip(cols)
                .map(|(n, c)| (n, Column::Numeric(c)))
                .collect(),
            missing: BTreeMap::new(),
        }
    }

    /// Schema for the CSV written by [`write_table_csv`].
    pub fn schema(&self) -> Schema {
        Schema {
            has_header: true,
            file_columns: None,
            features: self
                .feature_names()
                .into_iter()
                .map(|name| ColumnSpec { name, kind: ColumnKind::Numeric })
                .collect(),
            label: LabelSpec {
                column: "label".into(),
                class1: vec!["1".into()],
                class2: vec!["0".into()],
            },
            id_column: Some("id".into()),
        }
    }

    /// Auto quartiles for graded models, a split at zero for dichotomous ones.
    pub fn coding_spec(&self, kind: ModelKind) -> CodingSpec {
        let rule = match kind {
            ModelKind::Graded => Rule::Quartile { cutpoints: Cutpoints::auto() },
            ModelKind::Dichotomous => Rule::Threshold { cut: 0.0, direction: Direction::Above },
        };
        CodingSpec::new(
            self.feature_names()
                .into_iter()
                .map(|feature| FeatureRule { feature, negate: false, rule: rule.clone() })
                .collect(),
        )
    }
}

/// Writes `id,<features>,label` with class 1 as `1` and class 2 as `0`.
pub fn write_table_csv(table: &Table, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let ctx = path.display().to_string();
    let mut header = vec!["id".to_string()];
    header.extend(table.columns.iter().map(|(n, _)| n.clone()));
    header.push("label".into());
    w.write_record(&header).map_err(|e| Error::csv(ctx.clone(), e))?;
    for i in 0..table.n_rows() {
        let mut rec = vec![table.case_ids[i].clone()];
        for (_, col) in &table.columns {
            rec.push(match col {
                Column::Numeric(v) => v[i].to_string(),
                Column::Categorical(v) => v[i].clone(),
            });
        }
        rec.push(if table.labels[i] == ClassLabel::Class1 { "1" } else { "0" }.into());
        w.write_record(&rec).map_err(|e| Error::csv(ctx.clone(), e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `n` cases with oriented CDIs drawn from `N(mean, sd^2)`, ids `1..=n`.
pub fn normal_pool(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<PoolCase> {
    let mut rng = rng_from_seed(seed);
    let d = Normal::new(mean, sd).expect("finite positive sd");
    (1..=n)
        .map(|i| PoolCase { case_id: i.to_string(), oriented_cdi: d.sample(&mut rng) })
        .collect()
}

/// `n` cases with oriented CDIs spread uniformly over `[lo, hi)`.
pub fn uniform_pool(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<PoolCase> {
    let mut rng = rng_from_seed(seed);
    (1..=n)
        .map(|i| PoolCase { case_id: i.to_string(), oriented_cdi: rng.random_range(lo..hi) })
        .collect()
}
