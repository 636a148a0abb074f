use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const BANK_SCHEMA_VERSION: u32 = 1;

/// Logistic function, evaluated without overflow for any finite argument.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(logistic(x))`, accurate in both tails.
pub fn log_logistic(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Log-probability of category `k` under a cumulative-logit item with slope
/// `alpha` and increasing `thresholds`, together with its first and second
/// derivatives in theta.
///
/// With `P*_j = logistic(alpha (theta - b_j))`, `P*_0 = 1`, `P*_{m+1} = 0`:
/// `p_k = P*_k - P*_{k+1}`, `d ln p_k = alpha (1 - P*_k - P*_{k+1})` and
/// `d2 ln p_k = -alpha^2 (W_k + W_{k+1})` with `W = P*(1 - P*)`.
pub(crate) fn category_terms(alpha: f64, thresholds: &[f64], theta: f64, k: usize) -> (f64, f64, f64) {
    let m = thresholds.len();
    debug_assert!(k <= m);
    let upper = (k > 0).then(|| alpha * (theta - thresholds[k - 1]));
    let lower = (k < m).then(|| alpha * (theta - thresholds[k]));

    let log_p = match (upper, lower) {
        (None, Some(b)) => log_logistic(-b),
        (Some(a), None) => log_logistic(a),
        (Some(a), Some(b)) => log_logistic(a) + log_logistic(-b) + (-(b - a).exp_m1()).ln(),
        (None, None) => 0.0,
    };
    let p_upper = upper.map_or(1.0, logistic);
    let p_lower = lower.map_or(0.0, logistic);
    let d1 = alpha * (1.0 - p_upper - p_lower);
    let d2 = -alpha * alpha * (p_upper * (1.0 - p_upper) + p_lower * (1.0 - p_lower));
    (log_p, d1, d2)
}

/// A dichotomously scored item of the two-parameter logistic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomousItem {
    pub discrimination: f64,
    pub difficulty: f64,
}

impl DichotomousItem {
    pub fn new(discrimination: f64, difficulty: f64) -> Self {
        Self {
            discrimination,
            difficulty,
        }
    }

    pub fn prob_correct(&self, theta: f64) -> f64 {
        logistic(self.discrimination * (theta - self.difficulty))
    }

    fn validate(&self) -> Result<()> {
        if !(self.discrimination.is_finite() && self.discrimination > 0.0) {
            return Err(Error::InvalidItem(format!(
                "discrimination must be positive and finite, got {}",
                self.discrimination
            )));
        }
        if !self.difficulty.is_finite() {
            return Err(Error::InvalidItem(format!(
                "difficulty must be finite, got {}",
                self.difficulty
            )));
        }
        Ok(())
    }
}

/// Probability of a correct (code 1) response under the 2PL model.
pub fn prob_correct_2pl(theta: f64, item: &DichotomousItem) -> f64 {
    item.prob_correct(theta)
}

/// A graded response model item: one slope shared by `m` ordered
/// between-category thresholds, giving `m + 1` categories.
///
/// When fitting had to merge unobserved categories, `category_map` maps each
/// raw code to the model category it was merged into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedItem {
    pub discrimination: f64,
    pub thresholds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_map: Option<Vec<usize>>,
}

impl GradedItem {
    pub fn new(discrimination: f64, thresholds: Vec<f64>) -> Result<Self> {
        let item = Self {
            discrimination,
            thresholds,
            category_map: None,
        };
        item.validate()?;
        Ok(item)
    }

    /// Number of model categories (`thresholds.len() + 1`).
    pub fn n_categories(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Number of raw response codes this item accepts.
    pub fn n_raw_categories(&self) -> usize {
        self.category_map
            .as_ref()
            .map_or(self.n_categories(), Vec::len)
    }

    /// Model category for a raw response code.
    pub fn model_category(&self, code: u8) -> Option<usize> {
        let code = usize::from(code);
        match &self.category_map {
            Some(map) => map.get(code).copied(),
            None => (code < self.n_categories()).then_some(code),
        }
    }

    /// Cumulative curves `P*_1 .. P*_m`.
    pub fn cumulative(&self, theta: f64) -> Vec<f64> {
        self.thresholds
            .iter()
            .map(|b| logistic(self.discrimination * (theta - b)))
            .collect()
    }

    pub fn category_probs(&self, theta: f64) -> Vec<f64> {
        (0..self.n_categories())
            .map(|k| category_terms(self.discrimination, &self.thresholds, theta, k).0.exp())
            .collect()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.discrimination.is_finite() && self.discrimination > 0.0) {
            return Err(Error::InvalidItem(format!(
                "discrimination must be positive and finite, got {}",
                self.discrimination
            )));
        }
        if self.thresholds.is_empty() {
            return Err(Error::InvalidItem("graded item needs at least one threshold".into()));
        }
        if self.thresholds.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidItem("thresholds must be finite".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidItem(format!(
                "thresholds must be strictly increasing, got {:?}",
                self.thresholds
            )));
        }
        if let Some(map) = &self.category_map {
            if map.iter().any(|&c| c >= self.n_categories()) {
                return Err(Error::InvalidItem(format!(
                    "category map {map:?} points past {} model categories",
                    self.n_categories()
                )));
            }
        }
        Ok(())
    }
}

/// Category response probabilities of a graded item, by subtraction of
/// adjacent cumulative curves.
pub fn category_probs_grm(theta: f64, item: &GradedItem) -> Result<Vec<f64>> {
    item.validate()?;
    Ok(item.category_probs(theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dichotomous,
    Graded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
enum BankItems {
    Dichotomous {
        items: Vec<DichotomousItem>,
    },
    Graded {
        n_categories: usize,
        items: Vec<GradedItem>,
    },
}

/// Fitted item parameters for one homogeneous model.
///
/// Serialises to a versioned JSON document:
/// `{"schema_version": 1, "model_kind": "graded", "n_categories": 4, "items": [...], "item_names": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BankDoc", into = "BankDoc")]
pub struct ItemBank {
    items: BankItems,
    item_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct BankDoc {
    schema_version: u32,
    #[serde(flatten)]
    items: BankItems,
    #[serde(default)]
    item_names: Vec<String>,
}

impl TryFrom<BankDoc> for ItemBank {
    type Error = Error;

    fn try_from(doc: BankDoc) -> Result<Self> {
        if doc.schema_version != BANK_SCHEMA_VERSION {
            return Err(Error::InvalidItem(format!(
                "unsupported item bank schema version {}",
                doc.schema_version
            )));
        }
        let bank = ItemBank {
            items: doc.items,
            item_names: doc.item_names,
        };
        bank.validate()?;
        Ok(bank)
    }
}

impl From<ItemBank> for BankDoc {
    fn from(bank: ItemBank) -> Self {
        BankDoc {
            schema_version: BANK_SCHEMA_VERSION,
            items: bank.items,
            item_names: bank.item_names,
        }
    }
}

impl ItemBank {
    pub fn dichotomous(items: Vec<DichotomousItem>) -> Result<Self> {
        let bank = ItemBank {
            items: BankItems::Dichotomous { items },
            item_names: Vec::new(),
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn graded(items: Vec<GradedItem>) -> Result<Self> {
        let n_categories = items
            .iter()
            .map(GradedItem::n_raw_categories)
            .max()
            .unwrap_or(0);
        let bank = ItemBank {
            items: BankItems::Graded {
                n_categories,
                items,
            },
            item_names: Vec::new(),
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn with_item_names(mut self, names: Vec<String>) -> Result<Self> {
        if !names.is_empty() && names.len() != self.len() {
            return Err(Error::InvalidItem(format!(
                "{} item names for {} items",
                names.len(),
                self.len()
            )));
        }
        self.item_names = names;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidItem("item bank is empty".into()));
        }
        match &self.items {
            BankItems::Dichotomous { items } => items.iter().try_for_each(DichotomousItem::validate)?,
            BankItems::Graded {
                n_categories,
                items,
            } => {
                items.iter().try_for_each(GradedItem::validate)?;
                if items.iter().any(|it| it.n_raw_categories() > *n_categories) {
                    return Err(Error::InvalidItem(format!(
                        "an item has more categories than the declared {n_categories}"
                    )));
                }
            }
        }
        if !self.item_names.is_empty() && self.item_names.len() != self.len() {
            return Err(Error::InvalidItem("item_names length does not match items".into()));
        }
        Ok(())
    }

    pub fn model_kind(&self) -> ModelKind {
        match self.items {
            BankItems::Dichotomous { .. } => ModelKind::Dichotomous,
            BankItems::Graded { .. } => ModelKind::Graded,
        }
    }

    pub fn len(&self) -> usize {
        match &self.items {
            BankItems::Dichotomous { items } => items.len(),
            BankItems::Graded { items, .. } => items.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Declared number of raw categories (2 for dichotomous banks).
    pub fn n_categories(&self) -> usize {
        match &self.items {
            BankItems::Dichotomous { .. } => 2,
            BankItems::Graded { n_categories, .. } => *n_categories,
        }
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn dichotomous_items(&self) -> Option<&[DichotomousItem]> {
        match &self.items {
            BankItems::Dichotomous { items } => Some(items),
            BankItems::Graded { .. } => None,
        }
    }

    pub fn graded_items(&self) -> Option<&[GradedItem]> {
        match &self.items {
            BankItems::Graded { items, .. } => Some(items),
            BankItems::Dichotomous { .. } => None,
        }
    }

    /// Slope and thresholds of item `i` in cumulative-logit form.
    pub(crate) fn curve(&self, i: usize) -> (f64, &[f64]) {
        match &self.items {
            BankItems::Dichotomous { items } => {
                let it = &items[i];
                (it.discrimination, std::slice::from_ref(&it.difficulty))
            }
            BankItems::Graded { items, .. } => (items[i].discrimination, &items[i].thresholds),
        }
    }

    /// Maps a raw response code of item `i` to its model category.
    pub(crate) fn model_category(&self, i: usize, code: u8) -> Result<usize> {
        let cat = match &self.items {
            BankItems::Dichotomous { .. } => (code <= 1).then_some(usize::from(code)),
            BankItems::Graded { items, .. } => items[i].model_category(code),
        };
        cat.ok_or(Error::CodeOutOfRange { item: i, code })
    }

    /// Per-item `(log p, d/dtheta, d2/dtheta2)` summed over a response vector.
    pub(crate) fn log_likelihood_terms(&self, theta: f64, responses: &[u8]) -> Result<(f64, f64, f64)> {
        if responses.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: responses.len(),
            });
        }
        let mut acc = (0.0, 0.0, 0.0);
        for (i, &code) in responses.iter().enumerate() {
            let k = self.model_category(i, code)?;
            let (alpha, thresholds) = self.curve(i);
            let (l, d1, d2) = category_terms(alpha, thresholds, theta, k);
            acc.0 += l;
            acc.1 += d1;
            acc.2 += d2;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("item bank", e))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::json("item bank", e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
