use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{Column, Table};
use crate::irt::ResponseMatrix;
use crate::{Error, Result};

pub const CODING_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    AtOrAbove,
    Below,
    AtOrBelow,
}

/// The literal `"auto"` in a quartile rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoKeyword {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cutpoints {
    Explicit(Vec<f64>),
    Auto(AutoKeyword),
}

impl Cutpoints {
    pub fn auto() -> Self {
        Cutpoints::Auto(AutoKeyword::Auto)
    }
}

/// How one feature's raw values become response codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Rule {
    /// 0 inside `[normal_low, normal_high]`, 1 outside.
    Range { normal_low: f64, normal_high: f64 },
    /// Explicit raw value to code map.
    Category { map: BTreeMap<String, u8> },
    /// 1 when the value lies on `direction`'s side of `cut`, else 0.
    Threshold { cut: f64, direction: Direction },
    /// Code = number of cutpoints strictly below the value; a value equal to
    /// a cutpoint stays in the lower category.
    Quartile { cutpoints: Cutpoints },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRule {
    pub feature: String,
    /// Multiply the raw value by -1 before coding.
    #[serde(default)]
    pub negate: bool,
    pub rule: Rule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingSpec {
    pub schema_version: u32,
    pub features: Vec<FeatureRule>,
}

impl CodingSpec {
    pub fn new(features: Vec<FeatureRule>) -> Self {
        CodingSpec {
            schema_version: CODING_SCHEMA_VERSION,
            features,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: CodingSpec = serde_json::from_str(s).map_err(|e| Error::json("coding spec", e))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CODING_SCHEMA_VERSION {
            return Err(Error::CodingSpec(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.feature.as_str()) {
                return Err(Error::CodingSpec(format!("feature `{}` has more than one rule", f.feature)));
            }
            match &f.rule {
                Rule::Range { normal_low, normal_high } if normal_low > normal_high => {
                    return Err(Error::CodingSpec(format!("`{}`: normal_low > normal_high", f.feature)));
                }
                Rule::Category { map } if map.is_empty() => {
                    return Err(Error::CodingSpec(format!("`{}`: empty category map", f.feature)));
                }
                Rule::Quartile {
                    cutpoints: Cutpoints::Explicit(c),
                } => check_cutpoints(&f.feature, c)?,
                _ => {}
            }
        }
        Ok(())
    }
}

fn check_cutpoints(feature: &str, c: &[f64]) -> Result<()> {
    if c.is_empty() || c.iter().any(|x| !x.is_finite()) || c.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::CodingSpec(format!(
            "`{feature}`: cutpoints must be finite and strictly increasing, got {c:?}"
        )));
    }
    Ok(())
}

/// A rule after `"auto"` cutpoints have been computed from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRule {
    pub feature: String,
    pub negate: bool,
    pub rule: Rule,
    pub n_categories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingReport {
    pub rules: Vec<ResolvedRule>,
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 1]`.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn code_numeric(rule: &Rule, v: f64) -> Option<u8> {
    match rule {
        Rule::Range { normal_low, normal_high } => Some(u8::from(v < *normal_low || v > *normal_high)),
        Rule::Threshold { cut, direction } => Some(u8::from(match direction {
            Direction::Above => v > *cut,
            Direction::AtOrAbove => v >= *cut,
            Direction::Below => v < *cut,
            Direction::AtOrBelow => v <= *cut,
        })),
        Rule::Quartile {
            cutpoints: Cutpoints::Explicit(c),
        } => Some(c.iter().filter(|&&x| v > x).count() as u8),
        Rule::Category { map } => map
            .iter()
            .find(|(k, _)| k.trim().parse::<f64>().ok() == Some(v))
            .map(|(_, &code)| code),
        Rule::Quartile { .. } => unreachable!("cutpoints resolved before coding"),
    }
}

fn n_categories(rule: &Rule) -> usize {
    match rule {
        Rule::Range { .. } | Rule::Threshold { .. } => 2,
        Rule::Category { map } => (map.values().copied().max().unwrap_or(0) as usize + 1).max(2),
        Rule::Quartile {
            cutpoints: Cutpoints::Explicit(c),
        } => c.len() + 1,
        Rule::Quartile { .. } => 4,
    }
}

/// Applies `spec` to every row of `table`.
///
/// Returns the coded responses and the resolved rules; `"auto"` quartile
/// cutpoints are the 25th, 50th and 75th percentiles of the (negated, when
/// requested) column of this table.
pub fn apply_coding(table: &Table, spec: &CodingSpec) -> Result<(ResponseMatrix, CodingReport)> {
    spec.validate()?;
    for (name, _) in &table.columns {
        if !spec.features.iter().any(|f| &f.feature == name) {
            return Err(Error::CodingSpec(format!("no rule for feature `{name}`")));
        }
    }

    let n = table.n_rows();
    let mut codes = vec![Vec::with_capacity(spec.features.len()); n];
    let mut resolved = Vec::with_capacity(spec.features.len());
    for f in &spec.features {
        let column = table
            .column(&f.feature)
            .ok_or_else(|| Error::CodingSpec(format!("rule for unknown feature `{}`", f.feature)))?;
        let sign = if f.negate { -1.0 } else { 1.0 };
        let rule = match (&f.rule, column) {
            (Rule::Quartile { cutpoints: Cutpoints::Auto(_) }, Column::Numeric(values)) => {
                let mut sorted: Vec<f64> = values.iter().map(|v| sign * v).collect();
                if sorted.is_empty() {
                    return Err(Error::CodingSpec(format!("`{}`: no data for auto cutpoints", f.feature)));
                }
                sorted.sort_by(f64::total_cmp);
                let cut: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&p| percentile_sorted(&sorted, p)).collect();
                check_cutpoints(&f.feature, &cut)?;
                Rule::Quartile {
                    cutpoints: Cutpoints::Explicit(cut),
                }
            }
            (rule, _) => rule.clone(),
        };

        match column {
            Column::Numeric(values) => {
                for (row, (&v, out)) in values.iter().zip(codes.iter_mut()).enumerate() {
                    let code = code_numeric(&rule, sign * v).ok_or_else(|| Error::UncodedValue {
                        feature: f.feature.clone(),
                        row: row + 1,
                        value: v.to_string(),
                    })?;
                    out.push(code);
                }
            }
            Column::Categorical(values) => {
                let Rule::Category { map } = &rule else {
                    return Err(Error::CodingSpec(format!(
                        "`{}` is categorical and needs a category rule",
                        f.feature
                    )));
                };
                if f.negate {
                    return Err(Error::CodingSpec(format!("`{}`: cannot negate a categorical column", f.feature)));
                }
                for (row, (v, out)) in values.iter().zip(codes.iter_mut()).enumerate() {
                    let code = map.get(v).copied().ok_or_else(|| Error::UncodedValue {
                        feature: f.feature.clone(),
                        row: row + 1,
                        value: v.clone(),
                    })?;
                    out.push(code);
                }
            }
        }
        resolved.push(ResolvedRule {
            feature: f.feature.clone(),
            negate: f.negate,
            n_categories: n_categories(&rule),
            rule,
        });
    }

    let matrix = ResponseMatrix::new(
        table.case_ids.clone(),
        spec.features.iter().map(|f| f.feature.clone()).collect(),
        resolved.iter().map(|r| r.n_categories).collect(),
        codes,
        table.labels.clone(),
    )?;
    Ok((matrix, CodingReport { rules: resolved }))
}

/// Classifier input vectors: numeric features as raw values (sign-flipped
/// where the rule negates), categorical features as their codes.
pub fn classifier_inputs(table: &Table, spec: &CodingSpec) -> Result<Vec<Vec<f64>>> {
    let mut rows = vec![Vec::with_capacity(spec.features.len()); table.n_rows()];
    for f in &spec.features {
        let column = table
            .column(&f.feature)
            .ok_or_else(|| Error::MissingColumn(f.feature.clone()))?;
        match column {
            Column::Numeric(values) => {
                let sign = if f.negate { -1.0 } else { 1.0 };
                for (row, v) in rows.iter_mut().zip(values) {
                    row.push(sign * v);
                }
            }
            Column::Categorical(values) => {
                let Rule::Category { map } = &f.rule else {
                    return Err(Error::CodingSpec(format!("`{}` needs a category rule", f.feature)));
                };
                for (i, (row, v)) in rows.iter_mut().zip(values).enumerate() {
                    let code = map.get(v).ok_or_else(|| Error::UncodedValue {
                        feature: f.feature.clone(),
                        row: i + 1,
                        value: v.clone(),
                    })?;
                    row.push(f64::from(*code));
                }
            }
        }
    }
    Ok(rows)
}
