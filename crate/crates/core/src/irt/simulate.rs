use rand::Rng;
use rand_distr::StandardNormal;

use super::model::{logistic, ItemBank};
use super::responses::ResponseMatrix;
use crate::rng::rng_from_seed;
use crate::{ClassLabel, Result};

/// Draws `n_cases` latent traits from N(0, 1) and simulates item responses
/// from `bank`. Returns the responses and the generating traits.
///
/// Dichotomous items score 1 with the 2PL probability; graded items draw a
/// model category from the category probabilities. Each case is labelled
/// `Class1` with probability `logistic(theta)`, so higher traits lean towards
/// class 1. Output is a pure function of `seed`.
pub fn simulate_responses(bank: &ItemBank, n_cases: usize, seed: u64) -> Result<(ResponseMatrix, Vec<f64>)> {
    let mut rng = rng_from_seed(seed);
    let n_items = bank.len();
    let mut thetas = Vec::with_capacity(n_cases);
    let mut codes = Vec::with_capacity(n_cases);
    let mut labels = Vec::with_capacity(n_cases);
    for _ in 0..n_cases {
        let theta: f64 = rng.sample(StandardNormal);
        let mut row = Vec::with_capacity(n_items);
        for i in 0..n_items {
            let (alpha, thresholds) = bank.curve(i);
            let u: f64 = rng.random();
            // P*_j decreases in j, so the count of curves above u is the
            // category with probability P*_k - P*_{k+1}.
            let k = thresholds
                .iter()
                .take_while(|&&b| u < logistic(alpha * (theta - b)))
                .count();
            row.push(k as u8);
        }
        let label = if rng.random::<f64>() < logistic(theta) {
            ClassLabel::Class1
        } else {
            ClassLabel::Class2
        };
        thetas.push(theta);
        codes.push(row);
        labels.push(label);
    }
    let names = if bank.item_names().is_empty() {
        (1..=n_items).map(|i| format!("item{i}")).collect()
    } else {
        bank.item_names().to_vec()
    };
    let n_categories = (0..n_items).map(|i| bank.curve(i).1.len() + 1).collect();
    let matrix = ResponseMatrix::new(
        (1..=n_cases).map(|i| i.to_string()).collect(),
        names,
        n_categories,
        codes,
        labels,
    )?;
    Ok((matrix, thetas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irt::{DichotomousItem, GradedItem};

    #[test]
    fn same_seed_same_matrix() {
        let bank = ItemBank::dichotomous(vec![
            DichotomousItem::new(1.0, 0.0),
            DichotomousItem::new(1.5, -0.5),
        ])
        .unwrap();
        let (a, ta) = simulate_responses(&bank, 300, 11).unwrap();
        let (b, tb) = simulate_responses(&bank, 300, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = simulate_responses(&bank, 300, 12).unwrap();
        assert_ne!(a.codes, c.codes);
    }

    #[test]
    fn empirical_rate_near_inflection() {
        let bank = ItemBank::dichotomous(vec![DichotomousItem::new(1.0, 0.0)]).unwrap();
        let (m, thetas) = simulate_responses(&bank, 100_000, 3).unwrap();
        let (mut n, mut hits) = (0usize, 0usize);
        for (row, t) in m.codes.iter().zip(&thetas) {
            if t.abs() < 0.1 {
                n += 1;
                hits += usize::from(row[0]);
            }
        }
        // P over the bucket averages to 0.5 by symmetry
        let rate = hits as f64 / n as f64;
        assert!(n > 6000);
        assert!((rate - 0.5).abs() <= 0.01, "{rate} over {n}");
    }

    #[test]
    fn graded_codes_in_range() {
        let bank = ItemBank::graded(vec![
            GradedItem::new(1.2, vec![-1.0, 0.0, 1.0]).unwrap(),
            GradedItem::new(2.0, vec![-0.3, 0.4, 1.8]).unwrap(),
        ])
        .unwrap();
        let (m, _) = simulate_responses(&bank, 2000, 5).unwrap();
        assert!(m.codes.iter().flatten().all(|&c| c <= 3));
        assert_eq!(m.n_categories, vec![4, 4]);
        for i in 0..2 {
            assert!(m.category_counts(i).iter().all(|&c| c > 0));
        }
    }
}
