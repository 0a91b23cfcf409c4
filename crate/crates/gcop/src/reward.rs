//! Structure-gated shaped rewards.
//!
//! A guide sample earns `i_str * (R + beta + gamma * J - kappa * [-dR]+)`:
//! nothing at all without a well-formed strategy block, and otherwise the
//! task reward plus a structural bonus, a judged-quality term, and a hinge
//! penalty that fires only when guidance made the core worse than running
//! it unguided.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::oracle::{Executor, Judge, JudgeVerdict};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// What to do when the judge endpoint is unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeFallback {
    /// Score the strategy 0, keeping the run alive.
    #[default]
    ZeroScore,
    /// Propagate the error and fail the batch.
    FailBatch,
}

/// Shaping weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    /// Structural bonus for a valid block.
    pub beta: f64,
    /// Judge score weight.
    pub gamma: f64,
    /// Degradation penalty weight.
    pub kappa: f64,
    /// Draws per side when estimating the guided-minus-unguided gap.
    pub delta_r_samples: u32,
    #[serde(default)]
    pub judge_fallback: JudgeFallback,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self { beta: 0.1, gamma: 0.5, kappa: 1.0, delta_r_samples: 4, judge_fallback: JudgeFallback::ZeroScore }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("beta", self.beta), ("gamma", self.gamma), ("kappa", self.kappa)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.delta_r_samples == 0 {
            return Err(Error::InvalidParameter("delta_r_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Itemized shaped reward, suitable for audit export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// Structure indicator, 0 or 1.
    pub i_str: u8,
    pub task_reward: f64,
    pub judge_score: f64,
    pub delta_r: f64,
    /// `max(-delta_r, 0)`.
    pub hinge_penalty: f64,
    pub shaped: f64,
}

/// Computes the shaped reward from its components.
///
/// `task_reward` must be non-negative, `judge_score` in `[0, 1]`, and
/// `delta_r` finite.
pub fn shaped_reward(
    i_str: bool,
    task_reward: f64,
    judge_score: f64,
    delta_r: f64,
    config: &ShapingConfig,
) -> Result<RewardBreakdown> {
    config.validate()?;
    if !task_reward.is_finite() || task_reward < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "task reward must be finite and non-negative, got {task_reward}"
        )));
    }
    if !judge_score.is_finite() || !(0.0..=1.0).contains(&judge_score) {
        return Err(Error::InvalidParameter(format!(
            "judge score must lie in [0, 1], got {judge_score}"
        )));
    }
    if !delta_r.is_finite() {
        return Err(Error::InvalidParameter(format!("delta_r must be finite, got {delta_r}")));
    }
    let hinge_penalty = (-delta_r).max(0.0);
    let gate = i_str as u8 as f64;
    let shaped = gate
        * (task_reward + config.beta + config.gamma * judge_score - config.kappa * hinge_penalty);
    Ok(RewardBreakdown {
        i_str: i_str as u8,
        task_reward,
        judge_score,
        delta_r,
        hinge_penalty,
        shaped,
    })
}

/// The minimal structure-gated reward `R * i_str + beta * i_str`.
pub fn simple_shaped_reward(task_reward: f64, i_str: bool, beta: f64) -> f64 {
    let gate = i_str as u8 as f64;
    task_reward * gate + beta * gate
}

/// Scores a parsed strategy body through the judge, forcing 0 on flagged
/// answer leakage. Judge failures follow `fallback`.
pub fn judge_score(
    judge: &dyn Judge,
    problem: &str,
    strategy_body: &str,
    fallback: JudgeFallback,
) -> Result<f64> {
    match judge.assess(problem, strategy_body) {
        Ok(verdict) => {
            if !verdict.score.is_finite() || !(0.0..=1.0).contains(&verdict.score) {
                return Err(Error::InvalidParameter(format!(
                    "judge returned score {} outside [0, 1]",
                    verdict.score
                )));
            }
            Ok(if verdict.leakage { 0.0 } else { verdict.score })
        }
        Err(e) => match fallback {
            JudgeFallback::ZeroScore => Ok(0.0),
            JudgeFallback::FailBatch => Err(Error::JudgeUnavailable(e.to_string())),
        },
    }
}

/// Guided-minus-unguided mean reward over `samples` draws per side.
///
/// Guided draws use sub-seeds `0..samples`, unguided draws
/// `samples..2*samples`; the two sides are independent, which keeps the
/// estimator unbiased at the price of extra variance for small sample
/// counts.
pub fn delta_r(
    executor: &dyn Executor,
    problem: &str,
    strategy: &str,
    samples: u32,
    seed: u64,
) -> Result<f64> {
    let guided = mean_reward(executor, problem, Some(strategy), samples, seed, 0)?;
    let unguided = mean_reward(executor, problem, None, samples, seed, samples as u64)?;
    Ok(guided - unguided)
}

fn mean_reward(
    executor: &dyn Executor,
    problem: &str,
    strategy: Option<&str>,
    samples: u32,
    seed: u64,
    offset: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("delta_r needs at least one sample".into()));
    }
    let mut total = 0.0;
    for i in 0..samples {
        total += executor.execute(problem, strategy, derive_seed(seed, offset + i as u64))?.reward;
    }
    Ok(total / samples as f64)
}

/// Memoizes the unguided baseline per `(problem, samples, seed)` within a
/// run, so one problem's baseline is paid once per seed.
#[derive(Default)]
pub struct BaselineCache {
    inner: Mutex<HashMap<(String, u32, u64), f64>>,
}

impl BaselineCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Like [`delta_r`] but with the unguided side cached.
    pub fn delta_r(
        &self,
        executor: &dyn Executor,
        problem: &str,
        strategy: &str,
        samples: u32,
        seed: u64,
    ) -> Result<f64> {
        let guided = mean_reward(executor, problem, Some(strategy), samples, seed, 0)?;
        let key = (problem.to_string(), samples, seed);
        if let Some(&baseline) = self.inner.lock().unwrap().get(&key) {
            return Ok(guided - baseline);
        }
        let baseline = mean_reward(executor, problem, None, samples, seed, samples as u64)?;
        // Last write wins; identical keys recompute the identical value.
        self.inner.lock().unwrap().insert(key, baseline);
        Ok(guided - baseline)
    }
}

/// Deterministic rule-based judge used by desk-scale runs and tests.
///
/// Score is `0.2` per enumerated step line, clamped to `[0, 1]`, and the
/// verdict flags leakage on a fenced code block, a `\boxed{...}`
/// expression, or a line that is just a bare number.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBasedJudge;

fn is_enumerated_step(line: &str) -> bool {
    let trimmed = line.trim_start();
    let digits: usize = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return false;
    }
    matches!(trimmed[digits..].chars().next(), Some('.') | Some(')'))
}

fn is_bare_number(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() {
        return false;
    }
    let t = t.strip_prefix('-').unwrap_or(t);
    !t.is_empty() && t.chars().all(|c| c.is_ascii_digit() || c == '.') && t != "."
}

impl Judge for RuleBasedJudge {
    fn assess(&self, _problem: &str, strategy_body: &str) -> Result<JudgeVerdict> {
        let leakage = strategy_body.contains("```")
            || strategy_body.contains("\\boxed{")
            || strategy_body.lines().any(is_bare_number);
        let steps = strategy_body.lines().filter(|l| is_enumerated_step(l)).count();
        Ok(JudgeVerdict { score: (0.2 * steps as f64).clamp(0.0, 1.0), leakage })
    }
}

/// One audit row of a reward export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardRow {
    pub problem_id: String,
    pub i_str: u8,
    pub task_reward: f64,
    pub judge_score: f64,
    pub delta_r: f64,
    pub hinge_penalty: f64,
    pub shaped: f64,
}

impl RewardRow {
    pub fn new(problem_id: impl Into<String>, b: &RewardBreakdown) -> Self {
        Self {
            problem_id: problem_id.into(),
            i_str: b.i_str,
            task_reward: b.task_reward,
            judge_score: b.judge_score,
            delta_r: b.delta_r,
            hinge_penalty: b.hinge_penalty,
            shaped: b.shaped,
        }
    }
}

/// Writes reward rows as CSV with a header row.
pub fn write_reward_csv<W: std::io::Write>(rows: &[RewardRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
