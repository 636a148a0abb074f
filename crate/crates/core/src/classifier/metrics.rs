use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::network::TrainedModel;
use crate::{ClassLabel, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub positive_class: ClassLabel,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when only one class is present.
    pub auc: Option<f64>,
    pub n_cases: usize,
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
    pub wall_time_seconds: f64,
}

/// Area under the ROC curve via the rank-sum statistic, with average ranks
/// for ties. `None` unless both groups are non-empty.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Threshold and rank metrics for class-2 probabilities `scores`.
/// Precision is 0 when nothing is predicted positive; F1 is 0 when
/// precision and recall are both 0.
pub fn metrics_from_scores(scores: &[f64], labels: &[ClassLabel], positive_class: ClassLabel) -> Result<MetricsReport> {
    if scores.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { expected: labels.len(), got: scores.len() });
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        let predicted = if s >= 0.5 { ClassLabel::Class2 } else { ClassLabel::Class1 };
        match (predicted == positive_class, l == positive_class) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let positive_scores: Vec<f64> = match positive_class {
        ClassLabel::Class2 => scores.to_vec(),
        ClassLabel::Class1 => scores.iter().map(|s| 1.0 - s).collect(),
    };
    let is_pos: Vec<bool> = labels.iter().map(|&l| l == positive_class).collect();
    Ok(MetricsReport {
        positive_class,
        accuracy: ratio(tp + tn, scores.len()),
        precision,
        recall,
        f1,
        auc: auc(&positive_scores, &is_pos),
        n_cases: scores.len(),
        true_positive: tp,
        false_positive: fp,
        true_negative: tn,
        false_negative: fn_,
        wall_time_seconds: 0.0,
    })
}

/// Predicts every test case and computes the metrics; the wall time covers
/// both steps.
pub fn traditional_metrics(
    model: &TrainedModel,
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    positive_class: ClassLabel,
) -> Result<MetricsReport> {
    let start = Instant::now();
    let scores: Vec<f64> = model.predict_batch(rows)?.into_iter().map(|p| p.score).collect();
    let mut report = metrics_from_scores(&scores, labels, positive_class)?;
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn labels(n: usize) -> Vec<ClassLabel> {
        (0..n).map(|i| if i % 2 == 0 { ClassLabel::Class1 } else { ClassLabel::Class2 }).collect()
    }

    fn brute_force_auc(scores: &[f64], pos: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if pos[i] && !pos[j] {
                    pairs += 1.0;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn perfect_scores_give_perfect_metrics() {
        let y = labels(10);
        let s: Vec<f64> = y.iter().map(|&l| if l == ClassLabel::Class2 { 1.0 } else { 0.0 }).collect();
        let m = metrics_from_scores(&s, &y, ClassLabel::Class2).unwrap();
        for v in [m.accuracy, m.precision, m.recall, m.f1, m.auc.unwrap()] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn constant_scores_are_uninformative() {
        let y = labels(10);
        let m = metrics_from_scores(&[0.7; 10], &y, ClassLabel::Class2).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.auc, Some(0.5));
    }

    #[test]
    fn single_class_has_no_auc() {
        let y = vec![ClassLabel::Class2; 4];
        let m = metrics_from_scores(&[0.1, 0.6, 0.7, 0.9], &y, ClassLabel::Class2).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 0.75);
    }

    #[test]
    fn rank_auc_matches_pairwise_oracle() {
        let mut rng = rng_from_seed(11);
        let scores: Vec<f64> = (0..200).map(|_| (rng.random_range(0.0..1.0) * 20.0f64).round() / 20.0).collect();
        let pos: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
        assert!((auc(&scores, &pos).unwrap() - brute_force_auc(&scores, &pos)).abs() < 1e-9);
    }

    #[test]
    fn positive_class_choice_swaps_roles() {
        let y = labels(6);
        let s = [0.2, 0.8, 0.6, 0.4, 0.1, 0.9];
        let a = metrics_from_scores(&s, &y, ClassLabel::Class2).unwrap();
        let b = metrics_from_scores(&s, &y, ClassLabel::Class1).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.true_positive, b.true_negative);
        assert!((a.auc.unwrap() - b.auc.unwrap()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transform(seed in any::<u64>(), n in 2usize..100) {
            let mut rng = rng_from_seed(seed);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let pos: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
            let t: Vec<f64> = scores.iter().map(|s| (2.0 * s).exp() + 5.0).collect();
            prop_assert_eq!(auc(&scores, &pos), auc(&t, &pos));
        }

        #[test]
        fn f1_is_harmonic_mean(seed in any::<u64>(), n in 2usize..100) {
            let mut rng = rng_from_seed(seed);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let m = metrics_from_scores(&scores, &labels(n), ClassLabel::Class2).unwrap();
            if m.precision > 0.0 && m.recall > 0.0 {
                let h = 2.0 / (1.0 / m.precision + 1.0 / m.recall);
                prop_assert!((m.f1 - h).abs() < 1e-9);
            }
        }
    }
}
