//! Marginal maximum-likelihood fitting by EM over a fixed quadrature grid.
//!
//! Both models are fitted in slope-intercept form: item `i` has slope `a` and
//! strictly decreasing intercepts `c_1 > .. > c_m`, with cumulative curves
//! `logistic(a theta + c_j)`. Difficulties are recovered as `b_j = -c_j / a`.
//! A dichotomous item is the `m = 1` case. Each M-step runs Newton iterations
//! with backtracking so the expected complete-data log-likelihood never
//! decreases, which keeps the marginal likelihood monotone across EM
//! iterations.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{log_logistic, logistic, DichotomousItem, GradedItem, ItemBank, ModelKind};
use super::quadrature::QuadratureGrid;
use super::responses::ResponseMatrix;
use crate::{Error, Result};

const PATTERN_CHUNK: usize = 64;
const NEWTON_STEPS: usize = 25;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub quadrature_points: usize,
    pub quadrature_bound: f64,
    /// Convergence threshold on the largest absolute change of any
    /// discrimination or threshold between EM iterations.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub min_discrimination: f64,
    pub max_discrimination: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            quadrature_points: 61,
            quadrature_bound: 6.0,
            tol: 1e-4,
            max_iter: 500,
            seed: 0,
            min_discrimination: 0.05,
            max_discrimination: 10.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quadrature_points < 2 || !(self.quadrature_bound > 0.0) {
            return Err(Error::Config("quadrature needs >= 2 points and a positive bound".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("fit tol must be positive and max_iter >= 1".into()));
        }
        if !(0.0 < self.min_discrimination && self.min_discrimination < self.max_discrimination) {
            return Err(Error::Config("discrimination bounds must satisfy 0 < min < max".into()));
        }
        Ok(())
    }
}

/// An unobserved raw category merged into a neighbour before fitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCollapse {
    pub item: usize,
    pub item_name: String,
    pub raw_category: usize,
    /// Raw category whose model category absorbed it.
    pub merged_into: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub bank: ItemBank,
    pub converged: bool,
    pub iterations: usize,
    /// Marginal log-likelihood at the start of every EM iteration, plus the
    /// value at the returned parameters.
    pub log_likelihood_trace: Vec<f64>,
    pub final_max_change: f64,
    pub collapsed: Vec<CategoryCollapse>,
}

impl FitResult {
    pub fn log_likelihood(&self) -> f64 {
        *self.log_likelihood_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone)]
struct ItemState {
    slope: f64,
    intercepts: Vec<f64>,
}

impl ItemState {
    fn n_categories(&self) -> usize {
        self.intercepts.len() + 1
    }

    fn thresholds(&self) -> Vec<f64> {
        self.intercepts.iter().map(|c| -c / self.slope).collect()
    }

    fn from_curve(alpha: f64, thresholds: &[f64]) -> Self {
        ItemState {
            slope: alpha,
            intercepts: thresholds.iter().map(|b| -alpha * b).collect(),
        }
    }

    fn is_ordered(&self) -> bool {
        self.intercepts.iter().all(|c| c.is_finite()) && self.intercepts.windows(2).all(|w| w[0] > w[1])
    }
}

/// Fits the two-parameter logistic model.
pub fn fit_2pl(responses: &ResponseMatrix, config: &FitConfig) -> Result<FitResult> {
    let prepared = prepare_dichotomous(responses)?;
    let start = prepared
        .proportions
        .iter()
        .map(|counts| initial_state(counts))
        .collect();
    run_em(responses, prepared, start, config, ModelKind::Dichotomous)
}

/// Fits the two-parameter logistic model from explicit starting values.
pub fn fit_2pl_from(responses: &ResponseMatrix, config: &FitConfig, start: &ItemBank) -> Result<FitResult> {
    let prepared = prepare_dichotomous(responses)?;
    let items = start
        .dichotomous_items()
        .ok_or_else(|| Error::InvalidItem("2PL start values must be a dichotomous bank".into()))?;
    if items.len() != responses.n_items() {
        return Err(Error::LengthMismatch {
            expected: responses.n_items(),
            got: items.len(),
        });
    }
    let start = items
        .iter()
        .map(|it| ItemState::from_curve(it.discrimination, &[it.difficulty]))
        .collect();
    run_em(responses, prepared, start, config, ModelKind::Dichotomous)
}

/// Fits Samejima's graded response model.
///
/// Raw categories that no case used are merged into their lower neighbour
/// (category 0 merges upward) and reported in [`FitResult::collapsed`].
pub fn fit_grm(responses: &ResponseMatrix, config: &FitConfig) -> Result<FitResult> {
    let prepared = prepare_graded(responses)?;
    let start = prepared
        .proportions
        .iter()
        .map(|counts| initial_state(counts))
        .collect();
    run_em(responses, prepared, start, config, ModelKind::Graded)
}

/// Fits the graded response model from explicit starting values.
pub fn fit_grm_from(responses: &ResponseMatrix, config: &FitConfig, start: &ItemBank) -> Result<FitResult> {
    let prepared = prepare_graded(responses)?;
    let items = start
        .graded_items()
        .ok_or_else(|| Error::InvalidItem("GRM start values must be a graded bank".into()))?;
    if items.len() != responses.n_items() {
        return Err(Error::LengthMismatch {
            expected: responses.n_items(),
            got: items.len(),
        });
    }
    let mut states = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        if it.n_categories() != prepared.proportions[i].len() {
            return Err(Error::InvalidItem(format!(
                "start item {i} has {} categories, data supports {}",
                it.n_categories(),
                prepared.proportions[i].len()
            )));
        }
        states.push(ItemState::from_curve(it.discrimination, &it.thresholds));
    }
    run_em(responses, prepared, states, config, ModelKind::Graded)
}

struct Prepared {
    /// Distinct response patterns in model categories, with multiplicities.
    patterns: Vec<Vec<u8>>,
    counts: Vec<f64>,
    /// Per item, counts of each model category.
    proportions: Vec<Vec<usize>>,
    category_maps: Vec<Option<Vec<usize>>>,
    collapsed: Vec<CategoryCollapse>,
}

fn check_shape(responses: &ResponseMatrix) -> Result<()> {
    responses.validate()?;
    if responses.n_items() < 2 {
        return Err(Error::InvalidResponses(format!(
            "fitting needs at least 2 items, got {}",
            responses.n_items()
        )));
    }
    if responses.n_cases() == 0 {
        return Err(Error::InvalidResponses("no cases".into()));
    }
    Ok(())
}

fn prepare_dichotomous(responses: &ResponseMatrix) -> Result<Prepared> {
    check_shape(responses)?;
    if let Some(i) = responses.n_categories.iter().position(|&n| n != 2) {
        return Err(Error::InvalidResponses(format!(
            "item `{}` declares {} categories; the 2PL needs dichotomous items",
            responses.item_names[i], responses.n_categories[i]
        )));
    }
    let mut proportions = Vec::with_capacity(responses.n_items());
    for i in 0..responses.n_items() {
        let counts = responses.category_counts(i);
        if counts.iter().any(|&c| c == 0) {
            let only = counts.iter().position(|&c| c > 0).unwrap_or(0);
            return Err(Error::DegenerateItem {
                index: i,
                name: responses.item_names[i].clone(),
                reason: format!("every case responded {only}"),
            });
        }
        proportions.push(counts);
    }
    let (patterns, counts) = compress(responses, &vec![None; responses.n_items()]);
    Ok(Prepared {
        patterns,
        counts,
        proportions,
        category_maps: vec![None; responses.n_items()],
        collapsed: Vec::new(),
    })
}

fn prepare_graded(responses: &ResponseMatrix) -> Result<Prepared> {
    check_shape(responses)?;
    let mut proportions = Vec::new();
    let mut maps = Vec::new();
    let mut collapsed = Vec::new();
    for i in 0..responses.n_items() {
        let raw = responses.category_counts(i);
        let observed: Vec<usize> = (0..raw.len()).filter(|&k| raw[k] > 0).collect();
        if observed.len() < 2 {
            return Err(Error::DegenerateItem {
                index: i,
                name: responses.item_names[i].clone(),
                reason: format!("only category {} was observed", observed.first().copied().unwrap_or(0)),
            });
        }
        if observed.len() == raw.len() {
            proportions.push(raw);
            maps.push(None);
            continue;
        }
        let mut map = Vec::with_capacity(raw.len());
        for k in 0..raw.len() {
            let target = observed.iter().rposition(|&o| o <= k).unwrap_or(0);
            if raw[k] == 0 {
                collapsed.push(CategoryCollapse {
                    item: i,
                    item_name: responses.item_names[i].clone(),
                    raw_category: k,
                    merged_into: observed[target],
                });
            }
            map.push(target);
        }
        if map.windows(2).any(|w| w[1] < w[0]) || *map.last().unwrap() + 1 != observed.len() {
            return Err(Error::DegenerateItem {
                index: i,
                name: responses.item_names[i].clone(),
                reason: "unseen category could not be collapsed".into(),
            });
        }
        proportions.push(observed.iter().map(|&o| raw[o]).collect());
        maps.push(Some(map));
    }
    let (patterns, counts) = compress(responses, &maps);
    Ok(Prepared {
        patterns,
        counts,
        proportions,
        category_maps: maps,
        collapsed,
    })
}

fn compress(responses: &ResponseMatrix, maps: &[Option<Vec<usize>>]) -> (Vec<Vec<u8>>, Vec<f64>) {
    let mut table: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
    for row in &responses.codes {
        let pattern: Vec<u8> = row
            .iter()
            .zip(maps)
            .map(|(&c, map)| match map {
                Some(m) => m[usize::from(c)] as u8,
                None => c,
            })
            .collect();
        *table.entry(pattern).or_insert(0) += 1;
    }
    let mut patterns = Vec::with_capacity(table.len());
    let mut counts = Vec::with_capacity(table.len());
    for (p, n) in table {
        patterns.push(p);
        counts.push(n as f64);
    }
    (patterns, counts)
}

/// Unit slope and intercepts at the logits of the cumulative proportions
/// `P(X >= j)`.
fn initial_state(category_counts: &[usize]) -> ItemState {
    let total: usize = category_counts.iter().sum();
    let mut at_or_above = total;
    let mut intercepts = Vec::with_capacity(category_counts.len() - 1);
    for &n in &category_counts[..category_counts.len() - 1] {
        at_or_above -= n;
        let p = at_or_above as f64 / total as f64;
        intercepts.push((p / (1.0 - p)).ln());
    }
    ItemState {
        slope: 1.0,
        intercepts,
    }
}

/// Log category probability in slope-intercept form plus its derivatives with
/// respect to the upper and lower linear predictors.
struct SiTerms {
    log_p: f64,
    g_upper: f64,
    g_lower: f64,
    h_uu: f64,
    h_ll: f64,
    h_ul: f64,
}

fn si_terms(upper: Option<f64>, lower: Option<f64>) -> SiTerms {
    match (upper, lower) {
        (None, Some(zl)) => {
            let pl = logistic(zl);
            SiTerms {
                log_p: log_logistic(-zl),
                g_upper: 0.0,
                g_lower: -pl,
                h_uu: 0.0,
                h_ll: -pl * (1.0 - pl),
                h_ul: 0.0,
            }
        }
        (Some(zu), None) => {
            let pu = logistic(zu);
            SiTerms {
                log_p: log_logistic(zu),
                g_upper: 1.0 - pu,
                g_lower: 0.0,
                h_uu: -pu * (1.0 - pu),
                h_ll: 0.0,
                h_ul: 0.0,
            }
        }
        (Some(zu), Some(zl)) => {
            let d = zu - zl;
            let pu = logistic(zu);
            let pl = logistic(zl);
            let inv_em1 = 1.0 / d.exp_m1();
            let em = -(-d).exp_m1();
            let curv = (-d).exp() / (em * em);
            SiTerms {
                log_p: log_logistic(zu) + log_logistic(-zl) + em.ln(),
                g_upper: (1.0 - pu) + inv_em1,
                g_lower: -pl - inv_em1,
                h_uu: -pu * (1.0 - pu) - curv,
                h_ll: -pl * (1.0 - pl) - curv,
                h_ul: curv,
            }
        }
        (None, None) => SiTerms {
            log_p: 0.0,
            g_upper: 0.0,
            g_lower: 0.0,
            h_uu: 0.0,
            h_ll: 0.0,
            h_ul: 0.0,
        },
    }
}

fn predictors(state: &ItemState, theta: f64, k: usize) -> (Option<f64>, Option<f64>) {
    let m = state.intercepts.len();
    let upper = (k > 0).then(|| state.slope * theta + state.intercepts[k - 1]);
    let lower = (k < m).then(|| state.slope * theta + state.intercepts[k]);
    (upper, lower)
}

/// Expected complete-data log-likelihood of one item given posterior counts
/// `r[q * K + k]`.
fn item_objective(state: &ItemState, nodes: &[f64], r: &[f64]) -> f64 {
    let kc = state.n_categories();
    let mut total = 0.0;
    for (q, &theta) in nodes.iter().enumerate() {
        for k in 0..kc {
            let w = r[q * kc + k];
            if w > 0.0 {
                let (u, l) = predictors(state, theta, k);
                total += w * si_terms(u, l).log_p;
            }
        }
    }
    total
}

/// Gradient and Hessian in the parameter order `[slope, c_1, .., c_m]`.
fn item_derivatives(state: &ItemState, nodes: &[f64], r: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let kc = state.n_categories();
    let dim = kc;
    let mut g = vec![0.0; dim];
    let mut h = vec![vec![0.0; dim]; dim];
    for (q, &theta) in nodes.iter().enumerate() {
        for k in 0..kc {
            let w = r[q * kc + k];
            if w <= 0.0 {
                continue;
            }
            let (u, l) = predictors(state, theta, k);
            let t = si_terms(u, l);
            // parameter indices of the upper and lower intercepts
            let iu = (k > 0).then_some(k);
            let il = (k < kc - 1).then_some(k + 1);
            g[0] += w * theta * (t.g_upper + t.g_lower);
            h[0][0] += w * theta * theta * (t.h_uu + 2.0 * t.h_ul + t.h_ll);
            if let Some(iu) = iu {
                g[iu] += w * t.g_upper;
                h[iu][iu] += w * t.h_uu;
                h[0][iu] += w * theta * (t.h_uu + t.h_ul);
            }
            if let Some(il) = il {
                g[il] += w * t.g_lower;
                h[il][il] += w * t.h_ll;
                h[0][il] += w * theta * (t.h_ul + t.h_ll);
            }
            if let (Some(iu), Some(il)) = (iu, il) {
                h[iu][il] += w * t.h_ul;
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            h[i][j] = h[j][i];
        }
    }
    (g, h)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn m_step_item(state: &mut ItemState, nodes: &[f64], r: &[f64], config: &FitConfig) {
    let mut current = item_objective(state, nodes, r);
    for _ in 0..NEWTON_STEPS {
        let (g, h) = item_derivatives(state, nodes, r);
        let dim = g.len();
        // Newton direction on the concave objective; damp if the Hessian is
        // not safely negative definite.
        let mut direction = None;
        let mut damping = 0.0;
        for _ in 0..8 {
            let neg_h: Vec<Vec<f64>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| -h[i][j] + if i == j { damping } else { 0.0 })
                        .collect()
                })
                .collect();
            if let Some(d) = solve(neg_h, g.clone()) {
                if d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() > 0.0 {
                    direction = Some(d);
                    break;
                }
            }
            damping = if damping == 0.0 { 1e-6 } else { damping * 100.0 };
        }
        let Some(direction) = direction else { break };

        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = ItemState {
                slope: (state.slope + scale * direction[0])
                    .clamp(config.min_discrimination, config.max_discrimination),
                intercepts: state
                    .intercepts
                    .iter()
                    .zip(&direction[1..])
                    .map(|(c, d)| c + scale * d)
                    .collect(),
            };
            if trial.is_ordered() {
                let value = item_objective(&trial, nodes, r);
                if value.is_finite() && value >= current {
                    let moved = (trial.slope - state.slope)
                        .abs()
                        .max(
                            trial
                                .intercepts
                                .iter()
                                .zip(&state.intercepts)
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max),
                        );
                    *state = trial;
                    current = value;
                    accepted = moved > 1e-10;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
}

struct EStep {
    log_likelihood: f64,
    /// Per item, posterior counts `r[q * K + k]`.
    counts: Vec<Vec<f64>>,
}

fn e_step(states: &[ItemState], grid: &QuadratureGrid, log_w: &[f64], prepared: &Prepared) -> EStep {
    let nq = grid.len();
    // log P(category k | node q) per item
    let log_p: Vec<Vec<f64>> = states
        .iter()
        .map(|s| {
            let kc = s.n_categories();
            let mut table = vec![0.0; nq * kc];
            for (q, &theta) in grid.nodes.iter().enumerate() {
                for k in 0..kc {
                    let (u, l) = predictors(s, theta, k);
                    table[q * kc + k] = si_terms(u, l).log_p;
                }
            }
            table
        })
        .collect();
    let sizes: Vec<usize> = states.iter().map(|s| nq * s.n_categories()).collect();

    let partials: Vec<(f64, Vec<Vec<f64>>)> = prepared
        .patterns
        .par_chunks(PATTERN_CHUNK)
        .zip(prepared.counts.par_chunks(PATTERN_CHUNK))
        .map(|(patterns, counts)| {
            let mut acc: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
            let mut ll_total = 0.0;
            let mut ll = vec![0.0; nq];
            for (pattern, &count) in patterns.iter().zip(counts) {
                ll.copy_from_slice(log_w);
                for (i, &k) in pattern.iter().enumerate() {
                    let kc = states[i].n_categories();
                    let table = &log_p[i];
                    for (q, v) in ll.iter_mut().enumerate() {
                        *v += table[q * kc + usize::from(k)];
                    }
                }
                let max = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in ll.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                ll_total += count * (max + sum.ln());
                let norm = count / sum;
                for (i, &k) in pattern.iter().enumerate() {
                    let kc = states[i].n_categories();
                    let a = &mut acc[i];
                    for (q, v) in ll.iter().enumerate() {
                        a[q * kc + usize::from(k)] += v * norm;
                    }
                }
            }
            (ll_total, acc)
        })
        .collect();

    let mut counts: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut log_likelihood = 0.0;
    for (ll, acc) in partials {
        log_likelihood += ll;
        for (c, a) in counts.iter_mut().zip(acc) {
            for (x, y) in c.iter_mut().zip(a) {
                *x += y;
            }
        }
    }
    EStep {
        log_likelihood,
        counts,
    }
}

fn max_change(a: &[ItemState], b: &[ItemState]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let slope = (x.slope - y.slope).abs();
            x.thresholds()
                .iter()
                .zip(y.thresholds())
                .map(|(p, q)| (p - q).abs())
                .fold(slope, f64::max)
        })
        .fold(0.0, f64::max)
}

fn run_em(
    responses: &ResponseMatrix,
    prepared: Prepared,
    mut states: Vec<ItemState>,
    config: &FitConfig,
    kind: ModelKind,
) -> Result<FitResult> {
    config.validate()?;
    for s in states.iter_mut() {
        s.slope = s.slope.clamp(config.min_discrimination, config.max_discrimination);
        if !s.is_ordered() {
            return Err(Error::InvalidItem("starting intercepts must be finite and ordered".into()));
        }
    }
    let grid = QuadratureGrid::standard_normal(config.quadrature_points, config.quadrature_bound);
    let log_w = grid.log_weights();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    while iterations < config.max_iter {
        let e = e_step(&states, &grid, &log_w, &prepared);
        trace.push(e.log_likelihood);
        let previous = states.clone();
        states
            .par_iter_mut()
            .zip(e.counts.par_iter())
            .for_each(|(s, r)| m_step_item(s, &grid.nodes, r, config));
        iterations += 1;
        last_change = max_change(&previous, &states);
        if last_change < config.tol {
            converged = true;
            break;
        }
    }
    trace.push(e_step(&states, &grid, &log_w, &prepared).log_likelihood);
    if !converged {
        log::warn!(
            "EM stopped after {iterations} iterations without converging (last change {last_change:.3e})"
        );
    }

    let bank = match kind {
        ModelKind::Dichotomous => ItemBank::dichotomous(
            states
                .iter()
                .map(|s| DichotomousItem::new(s.slope, -s.intercepts[0] / s.slope))
                .collect(),
        )?,
        ModelKind::Graded => {
            let items = states
                .iter()
                .zip(&prepared.category_maps)
                .map(|(s, map)| {
                    let mut item = GradedItem::new(s.slope, s.thresholds())?;
                    item.category_map = map.clone();
                    Ok(item)
                })
                .collect::<Result<Vec<_>>>()?;
            let bank = ItemBank::graded(items)?;
            // keep the declared width even when top categories were merged
            let declared = responses.n_categories.iter().copied().max().unwrap_or(2);
            debug_assert!(bank.n_categories() <= declared);
            bank
        }
    }
    .with_item_names(responses.item_names.clone())?;

    Ok(FitResult {
        bank,
        converged,
        iterations,
        log_likelihood_trace: trace,
        final_max_change: last_change,
        collapsed: prepared.collapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ClassLabel;

    fn matrix(rows: Vec<Vec<u8>>, n_cat: usize) -> ResponseMatrix {
        let n = rows.len();
        ResponseMatrix::uniform(rows, n_cat, vec![ClassLabel::Class2; n]).unwrap()
    }

    #[test]
    fn constant_item_is_degenerate() {
        let m = matrix(vec![vec![1, 0], vec![1, 1], vec![1, 0]], 2);
        match fit_2pl(&m, &FitConfig::default()) {
            Err(Error::DegenerateItem { index, name, .. }) => {
                assert_eq!(index, 0);
                assert_eq!(name, "item1");
            }
            other => panic!("expected degenerate item, got {other:?}"),
        }
    }

    #[test]
    fn four_pattern_smoke_case() {
        let m = matrix(vec![vec![1, 1], vec![1, 0], vec![0, 1], vec![0, 0]], 2);
        let fit = fit_2pl(&m, &FitConfig::default()).unwrap();
        for it in fit.bank.dichotomous_items().unwrap() {
            assert!(it.discrimination.is_finite() && it.discrimination > 0.0);
            assert!(it.difficulty.is_finite());
        }
        for w in fit.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "{:?}", fit.log_likelihood_trace);
        }
    }

    #[test]
    fn single_item_rejected() {
        let m = matrix(vec![vec![1], vec![0]], 2);
        assert!(matches!(fit_2pl(&m, &FitConfig::default()), Err(Error::InvalidResponses(_))));
    }

    #[test]
    fn grm_all_zero_item_is_degenerate() {
        let m = matrix(vec![vec![0, 1], vec![0, 3], vec![0, 2], vec![0, 0]], 4);
        assert!(matches!(fit_grm(&m, &FitConfig::default()), Err(Error::DegenerateItem { index: 0, .. })));
    }

    #[test]
    fn grm_unseen_category_is_collapsed_and_reported() {
        let rows: Vec<Vec<u8>> = (0..200)
            .map(|i| {
                let a = [0u8, 1, 3][i % 3];
                let b = (i % 4) as u8;
                let c = ((i / 3) % 4) as u8;
                vec![a, b, c]
            })
            .collect();
        let m = matrix(rows, 4);
        let fit = fit_grm(&m, &FitConfig::default()).unwrap();
        assert_eq!(fit.collapsed.len(), 1);
        assert_eq!(fit.collapsed[0].item, 0);
        assert_eq!(fit.collapsed[0].raw_category, 2);
        assert_eq!(fit.collapsed[0].merged_into, 1);
        let item = &fit.bank.graded_items().unwrap()[0];
        assert_eq!(item.category_map.as_deref(), Some(&[0, 1, 1, 2][..]));
        assert_eq!(item.thresholds.len(), 2);
    }

    #[test]
    fn slope_intercept_derivatives_match_finite_differences() {
        let state = ItemState {
            slope: 1.3,
            intercepts: vec![1.0, -0.2, -1.4],
        };
        let grid = QuadratureGrid::standard_normal(11, 4.0);
        let r: Vec<f64> = (0..grid.len() * 4).map(|i| ((i * 7) % 5) as f64 + 0.5).collect();
        let (g, h) = item_derivatives(&state, &grid.nodes, &r);
        let bump = |idx: usize, eps: f64| {
            let mut s = state.clone();
            if idx == 0 {
                s.slope += eps;
            } else {
                s.intercepts[idx - 1] += eps;
            }
            s
        };
        let eps = 1e-5;
        for i in 0..4 {
            let fd = (item_objective(&bump(i, eps), &grid.nodes, &r)
                - item_objective(&bump(i, -eps), &grid.nodes, &r))
                / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "grad {i}: {} vs {fd}", g[i]);
            let (gp, _) = item_derivatives(&bump(i, eps), &grid.nodes, &r);
            let (gm, _) = item_derivatives(&bump(i, -eps), &grid.nodes, &r);
            for j in 0..4 {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                assert!((h[j][i] - fd).abs() < 1e-4 * (1.0 + fd.abs()), "hess {j},{i}: {} vs {fd}", h[j][i]);
            }
        }
    }
}
