//! Case Difficulty Index estimation, class orientation and binning.
//!
//! A case's CDI is the maximum-likelihood latent trait of its coded response
//! pattern under a fitted [`ItemBank`]. Estimates are confined to
//! `[-CDI_BOUND, CDI_BOUND]`; perfect patterns whose likelihood keeps rising
//! are pinned to the bound and flagged `clamped`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::irt::{ItemBank, ResponseMatrix};
use crate::{ClassLabel, Error, Result};

pub const CDI_BOUND: f64 = 4.0;
pub const BIN_WIDTH: f64 = 0.25;
const MAX_NEWTON: usize = 100;
const STEP_TOL: f64 = 1e-10;

/// Log-likelihood of a response vector at `theta`.
pub fn case_log_likelihood(theta: f64, responses: &[u8], bank: &ItemBank) -> Result<f64> {
    Ok(bank.log_likelihood_terms(theta, responses)?.0)
}

/// Raw maximum-likelihood estimate for one response vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdiEstimate {
    pub theta: f64,
    pub converged: bool,
    pub clamped: bool,
    pub iterations: usize,
}

/// Maximises the case log-likelihood over `[-4, 4]`.
///
/// The log-likelihood is concave in theta for both models, so its derivative
/// brackets the maximum. Newton steps are taken inside the bracket; a step
/// that leaves it or fails to raise the likelihood hands over to a
/// golden-section search on the bracket.
pub fn estimate_cdi(responses: &[u8], bank: &ItemBank) -> Result<CdiEstimate> {
    let terms = |t: f64| bank.log_likelihood_terms(t, responses);

    let (_, d_hi, _) = terms(CDI_BOUND)?;
    if d_hi >= 0.0 {
        return Ok(CdiEstimate {
            theta: CDI_BOUND,
            converged: true,
            clamped: true,
            iterations: 0,
        });
    }
    let (_, d_lo, _) = terms(-CDI_BOUND)?;
    if d_lo <= 0.0 {
        return Ok(CdiEstimate {
            theta: -CDI_BOUND,
            converged: true,
            clamped: true,
            iterations: 0,
        });
    }

    let (mut lo, mut hi) = (-CDI_BOUND, CDI_BOUND);
    let mut theta = 0.0;
    let (mut ll, mut d1, mut d2) = terms(theta)?;
    for iter in 1..=MAX_NEWTON {
        if d1 == 0.0 {
            return Ok(done(theta, iter));
        }
        if d1 > 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let candidate = theta - d1 / d2;
        let usable = d2 < 0.0 && candidate > lo && candidate < hi;
        let next = if usable { Some((candidate, terms(candidate)?)) } else { None };
        match next {
            Some((t, (l, g, h))) if l >= ll => {
                let step = (t - theta).abs();
                theta = t;
                (ll, d1, d2) = (l, g, h);
                if step < STEP_TOL {
                    return Ok(done(theta, iter));
                }
            }
            _ => {
                let t = golden_section(|x| case_log_likelihood(x, responses, bank), lo, hi)?;
                return Ok(done(t, iter));
            }
        }
    }
    Ok(CdiEstimate {
        theta,
        converged: false,
        clamped: false,
        iterations: MAX_NEWTON,
    })
}

fn done(theta: f64, iterations: usize) -> CdiEstimate {
    CdiEstimate {
        theta,
        converged: true,
        clamped: false,
        iterations,
    }
}

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > STEP_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// One case's difficulty. `oriented_cdi` is `None` until [`orient_cdis`] runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdiRecord {
    pub case_id: String,
    pub class_label: ClassLabel,
    pub raw_cdi: f64,
    pub oriented_cdi: Option<f64>,
    pub converged: bool,
    pub clamped: bool,
}

impl CdiRecord {
    pub fn oriented(&self) -> Result<f64> {
        self.oriented_cdi
            .ok_or_else(|| Error::NotOriented(self.case_id.clone()))
    }
}

/// Estimates the raw CDI of every case in `responses`.
pub fn score_cases(responses: &ResponseMatrix, bank: &ItemBank) -> Result<Vec<CdiRecord>> {
    responses
        .codes
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let est = estimate_cdi(row, bank)?;
            Ok(CdiRecord {
                case_id: responses.case_ids[i].clone(),
                class_label: responses.class_labels[i],
                raw_cdi: est.theta,
                oriented_cdi: None,
                converged: est.converged,
                clamped: est.clamped,
            })
        })
        .collect()
}

/// Sign-flips class 1 CDIs so that higher oriented values mean harder cases
/// for both classes. Records that already carry an oriented value are
/// rejected.
pub fn orient_cdis(records: Vec<CdiRecord>) -> Result<Vec<CdiRecord>> {
    records
        .into_iter()
        .map(|mut r| {
            if r.oriented_cdi.is_some() {
                return Err(Error::AlreadyOriented(r.case_id));
            }
            r.oriented_cdi = Some(r.class_label.orientation() * r.raw_cdi);
            Ok(r)
        })
        .collect()
}

/// Index of the half-open bin `[k * 0.25, (k + 1) * 0.25)` holding `x`.
pub fn bin_index(x: f64) -> i64 {
    (x / BIN_WIDTH).floor() as i64
}

pub fn bin_lower_edge(index: i64) -> f64 {
    index as f64 * BIN_WIDTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdiBin {
    pub index: i64,
    pub lower_edge: f64,
    pub upper_edge: f64,
    pub member_ids: Vec<String>,
}

/// Groups oriented CDIs into 0.25-wide bins anchored at zero, sorted by edge.
pub fn bin_cdis(records: &[CdiRecord]) -> Result<Vec<CdiBin>> {
    let mut bins: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    for r in records {
        bins.entry(bin_index(r.oriented()?))
            .or_default()
            .push(r.case_id.clone());
    }
    Ok(bins
        .into_iter()
        .map(|(index, member_ids)| CdiBin {
            index,
            lower_edge: bin_lower_edge(index),
            upper_edge: bin_lower_edge(index + 1),
            member_ids,
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct CdiRow {
    case_id: String,
    class_label: ClassLabel,
    raw_cdi: f64,
    oriented_cdi: Option<f64>,
    bin_lower: Option<f64>,
    converged: bool,
    clamped: bool,
}

/// Writes records as CSV:
/// `case_id,class_label,raw_cdi,oriented_cdi,bin_lower,converged,clamped`.
pub fn write_cdi_csv<W: Write>(records: &[CdiRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CdiRow {
            case_id: r.case_id.clone(),
            class_label: r.class_label,
            raw_cdi: r.raw_cdi,
            oriented_cdi: r.oriented_cdi,
            bin_lower: r.oriented_cdi.map(|x| bin_lower_edge(bin_index(x))),
            converged: r.converged,
            clamped: r.clamped,
        })
        .map_err(|e| Error::csv("cdi output", e))?;
    }
    w.flush().map_err(|e| Error::io("cdi output", e))
}

pub fn read_cdi_csv(path: &Path) -> Result<Vec<CdiRecord>> {
    let ctx = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(ctx.clone(), e))?;
    rdr.deserialize::<CdiRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::csv(ctx.clone(), e))?;
            Ok(CdiRecord {
                case_id: row.case_id,
                class_label: row.class_label,
                raw_cdi: row.raw_cdi,
                oriented_cdi: row.oriented_cdi,
                converged: row.converged,
                clamped: row.clamped,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irt::{prob_correct_2pl, DichotomousItem, GradedItem};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    fn bank2(items: &[(f64, f64)]) -> ItemBank {
        ItemBank::dichotomous(items.iter().map(|&(a, b)| DichotomousItem::new(a, b)).collect()).unwrap()
    }

    fn grid_argmax(responses: &[u8], bank: &ItemBank) -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=8000 {
            let t = -4.0 + i as f64 * 1e-3;
            let l = case_log_likelihood(t, responses, bank).unwrap();
            if l > best.0 {
                best = (l, t);
            }
        }
        best.1
    }

    #[test]
    fn single_item_at_inflection() {
        let bank = bank2(&[(1.0, 0.0), (1.0, 0.0)]);
        // two identical items: log-lik is twice the single-item value
        let l = case_log_likelihood(0.0, &[1, 1], &bank).unwrap();
        assert!((l / 2.0 - 0.5f64.ln()).abs() < 1e-12);
        assert!((0.5f64.ln() + 0.6931).abs() < 1e-4);
    }

    #[test]
    fn complement_pattern_mirrors_likelihood() {
        // the bank is symmetric about zero, so flipping every response
        // reflects the likelihood through theta = 0
        let bank = bank2(&[(1.3, -0.7), (1.3, 0.7)]);
        for t in [-2.0, -0.3, 0.0, 1.1] {
            let a = case_log_likelihood(t, &[1, 1], &bank).unwrap();
            let b = case_log_likelihood(-t, &[0, 0], &bank).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let bank = bank2(&[(1.0, 0.0), (1.0, 1.0)]);
        assert!(matches!(
            case_log_likelihood(0.0, &[1], &bank),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
        assert!(estimate_cdi(&[1, 0, 1], &bank).is_err());
    }

    #[test]
    fn log_likelihood_is_sum_of_item_terms() {
        let mut rng = rng_from_seed(9);
        let items: Vec<(f64, f64)> = (0..12).map(|_| (rng.random_range(0.3..2.5), rng.random_range(-2.0..2.0))).collect();
        let bank = bank2(&items);
        let pattern: Vec<u8> = (0..12).map(|_| rng.random_range(0..2)).collect();
        let theta = 0.37;
        let direct: f64 = items
            .iter()
            .zip(&pattern)
            .map(|(&(a, b), &u)| {
                let p = prob_correct_2pl(theta, &DichotomousItem::new(a, b));
                if u == 1 { p.ln() } else { (1.0 - p).ln() }
            })
            .sum();
        assert!((case_log_likelihood(theta, &pattern, &bank).unwrap() - direct).abs() < 1e-12);

        let graded = ItemBank::graded(vec![
            GradedItem::new(1.1, vec![-1.0, 0.2, 1.3]).unwrap(),
            GradedItem::new(0.6, vec![-0.4, 0.5, 2.0]).unwrap(),
        ])
        .unwrap();
        let direct: f64 = [(0usize, 2usize), (1, 0)]
            .iter()
            .map(|&(i, k)| graded.graded_items().unwrap()[i].category_probs(theta)[k].ln())
            .sum();
        assert!((case_log_likelihood(theta, &[2, 0], &graded).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn perfect_patterns_clamp() {
        let bank = bank2(&[(1.0, -1.0), (1.4, 0.0), (0.8, 1.0)]);
        let up = estimate_cdi(&[1, 1, 1], &bank).unwrap();
        assert_eq!(up.theta, 4.0);
        assert!(up.clamped);
        let down = estimate_cdi(&[0, 0, 0], &bank).unwrap();
        assert_eq!(down.theta, -4.0);
        assert!(down.clamped);
        let graded = ItemBank::graded(vec![
            GradedItem::new(1.0, vec![-1.0, 0.0, 1.0]).unwrap(),
            GradedItem::new(1.0, vec![-0.5, 0.5, 1.5]).unwrap(),
        ])
        .unwrap();
        assert!(estimate_cdi(&[3, 3], &graded).unwrap().clamped);
        assert_eq!(estimate_cdi(&[0, 0], &graded).unwrap().theta, -4.0);
    }

    #[test]
    fn symmetric_two_item_estimate_is_zero() {
        let bank = bank2(&[(1.0, -1.0), (1.0, 1.0)]);
        let est = estimate_cdi(&[1, 0], &bank).unwrap();
        assert!(est.theta.abs() < 1e-6, "{}", est.theta);
        assert!(est.converged && !est.clamped);
    }

    #[test]
    fn matches_grid_oracle_on_random_cases() {
        let mut rng = rng_from_seed(2024);
        for _ in 0..40 {
            let items: Vec<(f64, f64)> = (0..20).map(|_| (rng.random_range(0.4..2.5), rng.random_range(-2.0..2.0))).collect();
            let bank = bank2(&items);
            let pattern: Vec<u8> = (0..20).map(|_| rng.random_range(0..2)).collect();
            let est = estimate_cdi(&pattern, &bank).unwrap();
            let oracle = grid_argmax(&pattern, &bank);
            assert!((est.theta - oracle).abs() <= 2e-3, "{} vs {}", est.theta, oracle);
        }
    }

    #[test]
    fn orientation_flips_class1_only() {
        let rec = |id: &str, class, raw| CdiRecord {
            case_id: id.into(),
            class_label: class,
            raw_cdi: raw,
            oriented_cdi: None,
            converged: true,
            clamped: false,
        };
        let out = orient_cdis(vec![rec("a", ClassLabel::Class1, 0.80), rec("b", ClassLabel::Class2, 0.80)]).unwrap();
        assert_eq!(out[0].oriented_cdi, Some(-0.80));
        assert_eq!(out[1].oriented_cdi, Some(0.80));
        assert!(matches!(orient_cdis(out), Err(Error::AlreadyOriented(id)) if id == "a"));
    }

    #[test]
    fn mixed_orientation_matches_manual_histogram() {
        let mut rng = rng_from_seed(31);
        let records: Vec<CdiRecord> = (0..500)
            .map(|i| CdiRecord {
                case_id: i.to_string(),
                class_label: if rng.random_bool(0.4) { ClassLabel::Class1 } else { ClassLabel::Class2 },
                raw_cdi: rng.random_range(-3.0..3.0),
                oriented_cdi: None,
                converged: true,
                clamped: false,
            })
            .collect();
        let manual: Vec<(ClassLabel, i64)> = records
            .iter()
            .map(|r| {
                let v = if r.class_label == ClassLabel::Class1 { -r.raw_cdi } else { r.raw_cdi };
                (r.class_label, (v * 4.0).floor() as i64)
            })
            .collect();
        let oriented = orient_cdis(records).unwrap();
        for (r, (class, bin)) in oriented.iter().zip(manual) {
            assert_eq!(r.class_label, class);
            assert_eq!(bin_index(r.oriented_cdi.unwrap()), bin);
        }
    }

    #[test]
    fn bin_edges() {
        assert_eq!(bin_lower_edge(bin_index(0.13)), 0.0);
        assert_eq!(bin_lower_edge(bin_index(-0.25)), -0.25);
        assert_eq!(bin_lower_edge(bin_index(-0.01)), -0.25);
        assert_eq!(bin_lower_edge(bin_index(0.25)), 0.25);
    }

    #[test]
    fn binning_matches_direct_histogram() {
        let mut rng = rng_from_seed(77);
        let records: Vec<CdiRecord> = (0..10_000)
            .map(|i| {
                let x: f64 = rng.sample(rand_distr::StandardNormal);
                CdiRecord {
                    case_id: i.to_string(),
                    class_label: ClassLabel::Class2,
                    raw_cdi: x,
                    oriented_cdi: Some(x),
                    converged: true,
                    clamped: false,
                }
            })
            .collect();
        let bins = bin_cdis(&records).unwrap();
        // independent histogram: scan explicit edges
        for bin in &bins {
            let count = records
                .iter()
                .filter(|r| {
                    let x = r.oriented_cdi.unwrap();
                    x >= bin.lower_edge && x < bin.upper_edge
                })
                .count();
            assert_eq!(count, bin.member_ids.len());
            assert!((bin.upper_edge - bin.lower_edge - 0.25).abs() < 1e-12);
            assert!(((bin.lower_edge / 0.25).round() * 0.25 - bin.lower_edge).abs() < 1e-12);
        }
        assert_eq!(bins.iter().map(|b| b.member_ids.len()).sum::<usize>(), 10_000);
    }

    #[test]
    fn binning_requires_orientation() {
        let r = CdiRecord {
            case_id: "x".into(),
            class_label: ClassLabel::Class1,
            raw_cdi: 0.3,
            oriented_cdi: None,
            converged: true,
            clamped: false,
        };
        assert!(matches!(bin_cdis(&[r]), Err(Error::NotOriented(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let recs = orient_cdis(vec![CdiRecord {
            case_id: "7".into(),
            class_label: ClassLabel::Class1,
            raw_cdi: 1.125,
            oriented_cdi: None,
            converged: true,
            clamped: false,
        }])
        .unwrap();
        let mut buf = Vec::new();
        write_cdi_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("case_id,class_label,raw_cdi,oriented_cdi,bin_lower,converged,clamped\n"));
        assert!(text.contains("7,class1,1.125,-1.125,-1.25,true,false"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cdi.csv");
        std::fs::write(&path, text).unwrap();
        assert_eq!(read_cdi_csv(&path).unwrap(), recs);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn flipping_a_response_up_never_lowers_the_estimate(
            seed in any::<u64>(),
            n_items in 3usize..15,
        ) {
            let mut rng = rng_from_seed(seed);
            let items: Vec<(f64, f64)> = (0..n_items).map(|_| (rng.random_range(0.2..3.0), rng.random_range(-2.5..2.5))).collect();
            let bank = bank2(&items);
            let mut pattern: Vec<u8> = (0..n_items).map(|_| rng.random_range(0..2)).collect();
            let zeros: Vec<usize> = (0..n_items).filter(|&i| pattern[i] == 0).collect();
            prop_assume!(!zeros.is_empty());
            let before = estimate_cdi(&pattern, &bank).unwrap().theta;
            pattern[zeros[rng.random_range(0..zeros.len())]] = 1;
            let after = estimate_cdi(&pattern, &bank).unwrap().theta;
            prop_assert!(after >= before - 1e-9, "{before} -> {after}");
        }

        #[test]
        fn orientation_preserves_magnitude(raw in -4.0f64..4.0, class1 in any::<bool>()) {
            let class = if class1 { ClassLabel::Class1 } else { ClassLabel::Class2 };
            let out = orient_cdis(vec![CdiRecord {
                case_id: "c".into(), class_label: class, raw_cdi: raw,
                oriented_cdi: None, converged: true, clamped: false,
            }]).unwrap();
            let o = out[0].oriented_cdi.unwrap();
            prop_assert_eq!(o.abs(), raw.abs());
            prop_assert_eq!(o == -raw && raw != 0.0, class1 && raw != 0.0);
        }
    }
}
