use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::network::{train_network, Hyperparameters, TrainConfig, TrainedModel};
use crate::rng::{derive_seed, rng_from_seed, tagged_seed};
use crate::{ClassLabel, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub activations: Vec<Activation>,
    pub learning_rates: Vec<f64>,
    pub hidden_units: Vec<usize>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            activations: Activation::ALL.to_vec(),
            learning_rates: vec![0.01, 0.1, 0.2, 0.3],
            hidden_units: vec![6, 8, 12, 18, 24, 30],
        }
    }
}

impl HyperGrid {
    pub fn single(hp: Hyperparameters) -> Self {
        HyperGrid {
            activations: vec![hp.activation],
            learning_rates: vec![hp.learning_rate],
            hidden_units: vec![hp.hidden_units],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.activations.is_empty() || self.learning_rates.is_empty() || self.hidden_units.is_empty() {
            return Err(Error::Config("hyperparameter grid lists must be non-empty".into()));
        }
        if let Some(lr) = self.learning_rates.iter().find(|lr| !(**lr > 0.0 && lr.is_finite())) {
            return Err(Error::Config(format!("learning rate {lr} must be positive")));
        }
        Ok(())
    }

    /// Cells in activation, learning-rate, hidden-unit order.
    pub fn cells(&self) -> Vec<Hyperparameters> {
        let mut out = Vec::new();
        for &activation in &self.activations {
            for &learning_rate in &self.learning_rates {
                for &hidden_units in &self.hidden_units {
                    out.push(Hyperparameters { activation, learning_rate, hidden_units });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub hyperparameters: Hyperparameters,
    pub fold_accuracies: Vec<f64>,
    /// `None` when any fold diverged.
    pub mean_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    pub model: TrainedModel,
    pub chosen: Hyperparameters,
    pub folds: usize,
    pub cells: Vec<CellScore>,
}

/// Fold index for each of `n` cases: cases are shuffled, then dealt out
/// round-robin so fold sizes differ by at most one.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn score_cell(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    fold_of: &[usize],
    folds: usize,
    hp: Hyperparameters,
    config: &TrainConfig,
    seed: u64,
) -> CellScore {
    let mut accs = Vec::with_capacity(folds);
    for f in 0..folds {
        let (mut tr_x, mut tr_y, mut va_x, mut va_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (i, &k) in fold_of.iter().enumerate() {
            if k == f {
                va_x.push(rows[i].clone());
                va_y.push(labels[i]);
            } else {
                tr_x.push(rows[i].clone());
                tr_y.push(labels[i]);
            }
        }
        let model = match train_network(&tr_x, &tr_y, hp, config, derive_seed(seed, &[f as u64])) {
            Ok(m) => m,
            Err(e) => {
                return CellScore {
                    hyperparameters: hp,
                    fold_accuracies: accs,
                    mean_accuracy: None,
                    error: Some(e.to_string()),
                }
            }
        };
        let hits = va_x
            .iter()
            .zip(&va_y)
            .filter(|(x, &y)| model.predict(x).map(|p| p.class == y).unwrap_or(false))
            .count();
        accs.push(hits as f64 / va_x.len() as f64);
    }
    let mean = accs.iter().sum::<f64>() / folds as f64;
    CellScore {
        hyperparameters: hp,
        fold_accuracies: accs,
        mean_accuracy: Some(mean),
        error: None,
    }
}

/// Scores every grid cell by mean k-fold validation accuracy and refits the
/// best cell on all of `rows`. Ties prefer fewer hidden units, then a lower
/// learning rate, then grid order.
pub fn grid_search_train(
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    grid: &HyperGrid,
    folds: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<GridSearchOutcome> {
    grid.validate()?;
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if rows.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: rows.len(), got: labels.len() });
    }
    if rows.len() < 2 * folds {
        return Err(Error::InsufficientCases { required: 2 * folds, got: rows.len() });
    }
    let n1 = labels.iter().filter(|&&l| l == ClassLabel::Class1).count();
    let n2 = labels.len() - n1;
    if n1.abs_diff(n2) * 10 > labels.len() {
        log::warn!("training labels are unbalanced ({n1} class1 vs {n2} class2)");
    }

    let fold_of = fold_assignment(rows.len(), folds, tagged_seed(seed, "folds"));
    let cells: Vec<CellScore> = grid
        .cells()
        .into_par_iter()
        .enumerate()
        .map(|(i, hp)| score_cell(rows, labels, &fold_of, folds, hp, config, derive_seed(seed, &[i as u64])))
        .collect();

    let best = cells
        .iter()
        .filter_map(|c| c.mean_accuracy.map(|m| (m, &c.hyperparameters)))
        .reduce(|a, b| {
            let better = b.0 > a.0
                || (b.0 == a.0
                    && (b.1.hidden_units, b.1.learning_rate) < (a.1.hidden_units, a.1.learning_rate));
            if better {
                b
            } else {
                a
            }
        });
    let Some((_, &chosen)) = best else {
        let log: Vec<String> = cells
            .iter()
            .map(|c| format!("{:?}: {}", c.hyperparameters, c.error.as_deref().unwrap_or("?")))
            .collect();
        return Err(Error::AllCellsDiverged(log.join("; ")));
    };
    let model = train_network(rows, labels, chosen, config, tagged_seed(seed, "refit"))?;
    Ok(GridSearchOutcome { model, chosen, folds, cells })
}
