//! Computer adaptive testing over a pool of difficulty-scored cases, and the
//! machine learning capability (MLC) score it produces.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::TrainedModel;
use crate::rng::{rng_from_seed, tagged_seed, StdRng};
use crate::{ClassLabel, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatConfig {
    pub reliability: f64,
    pub sigma: f64,
    /// Standard deviation of the Gaussian jitter added to every update;
    /// 0 disables it.
    pub jitter_sd: f64,
    pub min_cases_for_mlc: usize,
    pub stop_window: usize,
    pub seed: u64,
    pub max_steps: usize,
    /// Added to the case count `L` in the step size `2 / 2^L`.
    pub step_l_offset: i32,
}

impl Default for CatConfig {
    fn default() -> Self {
        CatConfig {
            reliability: 0.98,
            sigma: 1.0,
            jitter_sd: 0.1,
            min_cases_for_mlc: 5,
            stop_window: 5,
            seed: 0,
            max_steps: 1000,
            step_l_offset: 0,
        }
    }
}

impl CatConfig {
    /// Standard error of measurement, `sigma * sqrt(1 - reliability)`.
    pub fn se_m(&self) -> f64 {
        self.sigma * (1.0 - self.reliability).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.reliability > 0.0 && self.reliability < 1.0) {
            return bad(format!("reliability must lie in (0, 1), got {}", self.reliability));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.jitter_sd >= 0.0 && self.jitter_sd < self.se_m()) {
            return bad(format!(
                "jitter_sd must lie in [0, se_m = {:.4}), got {}",
                self.se_m(),
                self.jitter_sd
            ));
        }
        if self.min_cases_for_mlc == 0 || self.stop_window < 2 {
            return bad("min_cases_for_mlc must be >= 1 and stop_window >= 2".into());
        }
        if self.max_steps < self.min_cases_for_mlc {
            return bad(format!("max_steps {} is below min_cases_for_mlc", self.max_steps));
        }
        Ok(())
    }
}

/// A case available to the adaptive test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolCase {
    pub case_id: String,
    pub oriented_cdi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SeThreshold,
    PoolExhaustedRefusal,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Administered {
    pub case_id: String,
    pub oriented_cdi: f64,
    pub correct: bool,
}

/// State after one administration; `target` is the updated estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub case_id: String,
    pub cdi: f64,
    pub correct: bool,
    pub jitter: f64,
    pub target: f64,
    pub running_mlc: Option<f64>,
}

/// `H/L + ln(R/W)`, with half-count corrections when `R` or `W` is zero.
pub fn mlc_from_counts(h: f64, l: usize, r: usize, w: usize) -> f64 {
    let (r, w) = (r as f64, w as f64);
    let ratio = if r == 0.0 {
        (r + 0.5) / (w - 0.5)
    } else if w == 0.0 {
        (r - 0.5) / (w + 0.5)
    } else {
        r / w
    };
    h / l as f64 + ratio.ln()
}

/// Linear-interpolation percentile, `p` in `[0, 1]`.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Orders case ids numerically when both parse as integers.
fn cmp_case_id(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// One adaptive test against the cases of a single class.
#[derive(Debug, Clone)]
pub struct CatSession {
    pub class_under_test: ClassLabel,
    pool: Vec<PoolCase>,
    used: Vec<bool>,
    pub target_cdi: f64,
    /// Every target so far, starting with the initial one.
    pub targets: Vec<f64>,
    pub administered: Vec<Administered>,
    pub h: f64,
    pub r: usize,
    pub w: usize,
    pub trajectory: Vec<TrajectoryPoint>,
    config: CatConfig,
    rng: StdRng,
    jitter: Option<Normal<f64>>,
}

impl CatSession {
    /// Starts at the 25th percentile of the pool's oriented CDIs.
    pub fn initialize(class_under_test: ClassLabel, pool: Vec<PoolCase>, config: &CatConfig) -> Result<Self> {
        config.validate()?;
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let cdis: Vec<f64> = pool.iter().map(|c| c.oriented_cdi).collect();
        let target = percentile(&cdis, 0.25);
        let jitter = (config.jitter_sd > 0.0)
            .then(|| Normal::new(0.0, config.jitter_sd).expect("validated jitter sd"));
        Ok(CatSession {
            class_under_test,
            used: vec![false; pool.len()],
            pool,
            target_cdi: target,
            targets: vec![target],
            administered: Vec::new(),
            h: 0.0,
            r: 0,
            w: 0,
            trajectory: Vec::new(),
            rng: rng_from_seed(tagged_seed(config.seed, class_under_test.as_str())),
            jitter,
            config: config.clone(),
        })
    }

    pub fn cases_used(&self) -> usize {
        self.administered.len()
    }

    /// Index of the unused case nearest the target; ties go to the lower
    /// case id.
    pub fn select_next(&self) -> Result<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in self.pool.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            let d = (c.oriented_cdi - self.target_cdi).abs();
            let better = match best {
                None => true,
                Some((bd, bi)) => {
                    d < bd || (d == bd && cmp_case_id(&c.case_id, &self.pool[bi].case_id) == Ordering::Less)
                }
            };
            if better {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i).ok_or(Error::PoolExhausted)
    }

    pub fn case(&self, index: usize) -> &PoolCase {
        &self.pool[index]
    }

    /// Updates `L`, `H`, `R` and `W` for the case at `index`.
    pub fn record(&mut self, index: usize, correct: bool) {
        assert!(!self.used[index], "case administered twice");
        self.used[index] = true;
        let c = &self.pool[index];
        self.h += c.oriented_cdi;
        if correct {
            self.r += 1;
        } else {
            self.w += 1;
        }
        self.administered.push(Administered {
            case_id: c.case_id.clone(),
            oriented_cdi: c.oriented_cdi,
            correct,
        });
    }

    /// Size of the next deterministic step, `2 / 2^L`.
    pub fn step_size(&self) -> f64 {
        let l = self.cases_used() as i32 + self.config.step_l_offset;
        2.0 * 2f64.powi(-l)
    }

    /// Moves the target up after a correct classification and down after an
    /// incorrect one, plus jitter. Returns `(new target, jitter drawn)`.
    pub fn update_target(&mut self, correct: bool) -> (f64, f64) {
        let step = self.step_size();
        let g = self.jitter.map_or(0.0, |n| n.sample(&mut self.rng));
        self.target_cdi += if correct { step } else { -step } + g;
        self.targets.push(self.target_cdi);
        (self.target_cdi, g)
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        let l = self.cases_used();
        if l >= self.config.max_steps {
            return Some(StopReason::MaxIterations);
        }
        if l >= self.config.min_cases_for_mlc && self.targets.len() >= self.config.stop_window {
            let window = &self.targets[self.targets.len() - self.config.stop_window..];
            if sample_sd(window) < self.config.se_m() {
                return Some(StopReason::SeThreshold);
            }
        }
        None
    }

    pub fn should_stop(&self) -> bool {
        self.stop_reason().is_some()
    }

    pub fn compute_mlc(&self) -> Result<f64> {
        let l = self.cases_used();
        if l < self.config.min_cases_for_mlc {
            return Err(Error::InsufficientCases {
                required: self.config.min_cases_for_mlc,
                got: l,
            });
        }
        Ok(mlc_from_counts(self.h, l, self.r, self.w))
    }

    /// Administers one case and returns its trajectory point.
    pub fn step<F>(&mut self, oracle: &mut F) -> Result<&TrajectoryPoint>
    where
        F: FnMut(&PoolCase) -> Result<bool>,
    {
        let index = self.select_next()?;
        let correct = oracle(&self.pool[index])?;
        self.record(index, correct);
        let (target, jitter) = self.update_target(correct);
        let c = &self.pool[index];
        let point = TrajectoryPoint {
            step: self.cases_used(),
            case_id: c.case_id.clone(),
            cdi: c.oriented_cdi,
            correct,
            jitter,
            target,
            running_mlc: self.compute_mlc().ok(),
        };
        self.trajectory.push(point);
        Ok(self.trajectory.last().expect("just pushed"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcReport {
    pub class_label: ClassLabel,
    /// Absent when the pool ran out before enough cases were used.
    pub mlc: Option<f64>,
    pub stop_reason: StopReason,
    pub cases_used: usize,
    pub pool_size: usize,
    pub fraction_of_dataset: Option<f64>,
    pub initial_target: f64,
    pub final_target: f64,
    pub h: f64,
    pub r: usize,
    pub w: usize,
    pub se_m: f64,
    pub wall_time_seconds: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl MlcReport {
    /// Records `cases_used` as a fraction of a dataset of `n` cases.
    pub fn set_dataset_size(&mut self, n: usize) {
        self.fraction_of_dataset = (n > 0).then(|| self.cases_used as f64 / n as f64);
    }

    /// Writes `step,case_id,cdi,correct,target,running_mlc` rows.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            step: usize,
            case_id: &'a str,
            cdi: f64,
            correct: bool,
            target: f64,
            running_mlc: Option<f64>,
        }
        let mut w = csv::Writer::from_writer(out);
        for p in &self.trajectory {
            w.serialize(Row {
                step: p.step,
                case_id: &p.case_id,
                cdi: p.cdi,
                correct: p.correct,
                target: p.target,
                running_mlc: p.running_mlc,
            })
            .map_err(|e| Error::csv("trajectory output", e))?;
        }
        w.flush().map_err(|e| Error::io("trajectory output", e))
    }
}

/// Runs a full session, asking `oracle` whether the classifier gets each
/// selected case right.
pub fn run_cat_with<F>(class: ClassLabel, pool: Vec<PoolCase>, config: &CatConfig, mut oracle: F) -> Result<MlcReport>
where
    F: FnMut(&PoolCase) -> Result<bool>,
{
    let start = Instant::now();
    let pool_size = pool.len();
    let mut s = CatSession::initialize(class, pool, config)?;
    let stop_reason = loop {
        if let Some(reason) = s.stop_reason() {
            break reason;
        }
        if s.cases_used() == pool_size {
            break StopReason::PoolExhaustedRefusal;
        }
        s.step(&mut oracle)?;
    };
    let wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(MlcReport {
        class_label: class,
        mlc: s.compute_mlc().ok(),
        stop_reason,
        cases_used: s.cases_used(),
        pool_size,
        fraction_of_dataset: None,
        initial_target: s.targets[0],
        final_target: s.target_cdi,
        h: s.h,
        r: s.r,
        w: s.w,
        se_m: config.se_m(),
        wall_time_seconds,
        trajectory: s.trajectory,
    })
}

/// Runs a session against a trained model: a case counts as correct when
/// the predicted class equals `class`.
pub fn run_cat(
    model: &TrainedModel,
    class: ClassLabel,
    pool: Vec<PoolCase>,
    features: &HashMap<String, Vec<f64>>,
    config: &CatConfig,
) -> Result<MlcReport> {
    run_cat_with(class, pool, config, |c| {
        let x = features
            .get(&c.case_id)
            .ok_or_else(|| Error::FeatureLookup(c.case_id.clone()))?;
        Ok(model.predict(x)?.class == class)
    })
}
