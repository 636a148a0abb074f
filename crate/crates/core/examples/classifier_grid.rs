//! Grid-searches the feed-forward classifier with k-fold cross-validation on
//! a synthetic table and reports held-out metrics.

use mlc::classifier::{grid_search_train, traditional_metrics, Activation, HyperGrid, TrainConfig};
use mlc::synth::SyntheticTable;
use mlc::ClassLabel;

fn main() -> mlc::Result<()> {
    let table = SyntheticTable { n_cases: 3000, n_features: 6, seed: 5, ..SyntheticTable::default() }.generate();
    let rows: Vec<Vec<f64>> = (0..table.n_rows())
        .map(|i| table.columns.iter().map(|(_, c)| match c {
            mlc::dataprep::Column::Numeric(v) => v[i],
            mlc::dataprep::Column::Categorical(_) => unreachable!("synthetic tables are numeric"),
        }).collect())
        .collect();
    let cut = rows.len() * 7 / 10;

    let grid = HyperGrid {
        activations: vec![Activation::Tanh, Activation::Relu, Activation::Sigmoid],
        learning_rates: vec![0.01, 0.1],
        hidden_units: vec![0, 8],
    };
    let outcome = grid_search_train(&rows[..cut], &table.labels[..cut], &grid, 5, &TrainConfig::default(), 42)?;
    for cell in &outcome.cells {
        let hp = &cell.hyperparameters;
        match cell.mean_accuracy {
            Some(a) => println!("{:?} lr={} h={}: cv accuracy {a:.4}", hp.activation, hp.learning_rate, hp.hidden_units),
            None => println!("{:?} lr={} h={}: diverged", hp.activation, hp.learning_rate, hp.hidden_units),
        }
    }
    println!("chosen: {:?}", outcome.chosen);

    let m = traditional_metrics(&outcome.model, &rows[cut..], &table.labels[cut..], ClassLabel::Class2)?;
    println!(
        "held out ({} cases): accuracy {:.4}, precision {:.4}, recall {:.4}, F1 {:.4}, AUC {:.4}",
        m.n_cases,
        m.accuracy,
        m.precision,
        m.recall,
        m.f1,
        m.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}
