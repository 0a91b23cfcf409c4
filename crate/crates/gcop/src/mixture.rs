//! Student-teacher mixture model and the executability value-gap check.
//!
//! The core is modeled as a per-(state, strategy) mixture: with probability
//! `q(s,z)` execution is good and matches the teacher row, otherwise it
//! follows a bad-execution row. Composing any guide with such a core gives
//! an action policy that mixes the teacher with an aggregate bad component,
//! weighted by the guide-averaged executability `alpha(s)`. The gap between
//! teacher value and composed value is then bounded by
//! `2 * H * R_max * E_{d}[1 - alpha]` with `d` the teacher's average state
//! visitation; `check_value_gap` verifies that inequality exactly via
//! dynamic programming.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Distribution;
use crate::env::EnvSpec;
use crate::policy::{compose_tabular, ActionPolicy, TabularCore, TabularGuide};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Gap-vs-bound comparisons tolerate this much floating-point slack.
pub const GAP_TOLERANCE: f64 = 1e-9;

/// Per-state slack allowed on the TV-vs-executability inequality.
pub const TV_TOLERANCE: f64 = 1e-12;

/// Teacher rows, bad-execution rows, and good-execution probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureModel {
    /// `teacher[s]` over actions.
    teacher: Vec<Distribution>,
    /// `bad_exec[s][z]` over actions.
    bad_exec: Vec<Vec<Distribution>>,
    /// `success_prob[s][z]` in `[0, 1]`.
    success_prob: Vec<Vec<f64>>,
}

impl MixtureModel {
    pub fn new(
        teacher: Vec<Distribution>,
        bad_exec: Vec<Vec<Distribution>>,
        success_prob: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let states = teacher.len();
        if states == 0 {
            return Err(Error::EmptyInput("mixture model"));
        }
        let actions = teacher[0].len();
        if bad_exec.len() != states || success_prob.len() != states {
            return Err(Error::DimensionMismatch(
                "teacher, bad_exec and success_prob must agree on states".into(),
            ));
        }
        let strategies = bad_exec[0].len();
        if strategies == 0 {
            return Err(Error::EmptyInput("strategy space"));
        }
        for s in 0..states {
            if teacher[s].len() != actions {
                return Err(Error::DimensionMismatch(format!(
                    "teacher row {s} has {} actions, expected {actions}",
                    teacher[s].len()
                )));
            }
            if bad_exec[s].len() != strategies || success_prob[s].len() != strategies {
                return Err(Error::DimensionMismatch(format!(
                    "state {s} rows disagree on strategy count"
                )));
            }
            for z in 0..strategies {
                if bad_exec[s][z].len() != actions {
                    return Err(Error::DimensionMismatch(format!(
                        "bad_exec({s},{z}) has {} actions, expected {actions}",
                        bad_exec[s][z].len()
                    )));
                }
                let q = success_prob[s][z];
                if !q.is_finite() || !(0.0..=1.0).contains(&q) {
                    return Err(Error::InvalidParameter(format!(
                        "success_prob({s},{z}) = {q} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self { teacher, bad_exec, success_prob })
    }

    pub fn state_count(&self) -> usize {
        self.teacher.len()
    }

    pub fn strategy_count(&self) -> usize {
        self.bad_exec[0].len()
    }

    pub fn action_count(&self) -> usize {
        self.teacher[0].len()
    }

    pub fn success_prob(&self, state: usize, strategy: usize) -> f64 {
        self.success_prob[state][strategy]
    }

    pub fn teacher_row(&self, state: usize) -> &Distribution {
        &self.teacher[state]
    }

    /// The teacher as a standalone action policy.
    pub fn teacher_policy(&self) -> ActionPolicy {
        ActionPolicy::new(self.teacher.clone()).expect("validated at construction")
    }

    /// Core induced by the mixture:
    /// `core(a|s,z) = q(s,z) * teacher(a|s) + (1 - q(s,z)) * bad(a|s,z)`.
    pub fn build_core(&self) -> TabularCore {
        let rows = (0..self.state_count())
            .map(|s| {
                (0..self.strategy_count())
                    .map(|z| {
                        let q = self.success_prob[s][z];
                        let probs: Vec<f64> = self.teacher[s]
                            .probs()
                            .iter()
                            .zip(self.bad_exec[s][z].probs())
                            .map(|(good, bad)| q * good + (1.0 - q) * bad)
                            .collect();
                        Distribution::new(probs).expect("convex combination of rows")
                    })
                    .collect()
            })
            .collect();
        TabularCore::new(rows).expect("validated at construction")
    }
}

/// Builds the mixture-induced core policy.
pub fn build_mixture_core(model: &MixtureModel) -> TabularCore {
    model.build_core()
}

/// Guide-averaged executability and the aggregate bad-execution rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutabilityProfile {
    /// `alpha[s] = sum_z guide(z|s) * q(s,z)`.
    pub alpha: Vec<f64>,
    /// Aggregate bad component per state; `None` where `alpha(s) = 1`
    /// leaves no bad mass to normalize.
    pub rho: Vec<Option<Distribution>>,
}

impl ExecutabilityProfile {
    pub fn alpha_mean(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }
}

/// Computes `alpha` and `rho` for a tabular guide over the model's
/// strategy space.
pub fn executability(guide: &TabularGuide, model: &MixtureModel) -> Result<ExecutabilityProfile> {
    if guide.state_count() != model.state_count() {
        return Err(Error::DimensionMismatch(format!(
            "guide has {} states, model has {}",
            guide.state_count(),
            model.state_count()
        )));
    }
    if guide.strategy_count() != model.strategy_count() {
        return Err(Error::StrategySpaceMismatch(format!(
            "guide proposes over {} strategies, model defines {}",
            guide.strategy_count(),
            model.strategy_count()
        )));
    }
    let mut alpha = Vec::with_capacity(model.state_count());
    let mut rho = Vec::with_capacity(model.state_count());
    for s in 0..model.state_count() {
        let mut a = 0.0;
        let mut bad_mass = vec![0.0; model.action_count()];
        for z in 0..model.strategy_count() {
            let w = guide.row(s).prob(z);
            let q = model.success_prob[s][z];
            a += w * q;
            for (i, &p) in model.bad_exec[s][z].probs().iter().enumerate() {
                bad_mass[i] += w * (1.0 - q) * p;
            }
        }
        let total: f64 = bad_mass.iter().sum();
        // total == 1 - alpha up to rounding; no bad mass means rho is undefined.
        if total <= 0.0 {
            rho.push(None);
        } else {
            for p in &mut bad_mass {
                *p /= total;
            }
            rho.push(Some(Distribution::new(bad_mass)?));
        }
        alpha.push(a);
    }
    Ok(ExecutabilityProfile { alpha, rho })
}

/// Exact H-step value by backward induction.
pub fn exact_value_dp(policy: &ActionPolicy, env: &EnvSpec) -> Result<f64> {
    if policy.state_count() != env.state_count() || policy.action_count() != env.action_count() {
        return Err(Error::DimensionMismatch(format!(
            "policy is {}x{}, environment is {}x{}",
            policy.state_count(),
            policy.action_count(),
            env.state_count(),
            env.action_count()
        )));
    }
    let states = env.state_count();
    let mut value = vec![0.0_f64; states];
    for _ in 0..env.horizon() {
        let mut next = vec![0.0_f64; states];
        for s in 0..states {
            let mut v = 0.0;
            for a in 0..env.action_count() {
                let p = policy.row(s).prob(a);
                if p == 0.0 {
                    continue;
                }
                let continuation: f64 = env
                    .transition(s, a)
                    .probs()
                    .iter()
                    .zip(&value)
                    .map(|(t, v)| t * v)
                    .sum();
                v += p * (env.reward(s, a) + continuation);
            }
            next[s] = v;
        }
        value = next;
    }
    Ok(env.initial().probs().iter().zip(&value).map(|(m, v)| m * v).sum())
}

/// Average state visitation `d = (1/H) * sum_t d_t` with `d_0` the initial
/// distribution.
pub fn visitation(policy: &ActionPolicy, env: &EnvSpec) -> Result<Distribution> {
    if policy.state_count() != env.state_count() || policy.action_count() != env.action_count() {
        return Err(Error::DimensionMismatch(
            "visitation requires matching policy/environment dimensions".into(),
        ));
    }
    let states = env.state_count();
    let h = env.horizon();
    let mut current: Vec<f64> = env.initial().probs().to_vec();
    let mut acc = vec![0.0_f64; states];
    for t in 0..h {
        for s in 0..states {
            acc[s] += current[s];
        }
        if t + 1 == h {
            break;
        }
        let mut next = vec![0.0_f64; states];
        for s in 0..states {
            if current[s] == 0.0 {
                continue;
            }
            for a in 0..env.action_count() {
                let w = current[s] * policy.row(s).prob(a);
                if w == 0.0 {
                    continue;
                }
                for (sp, &p) in env.transition(s, a).probs().iter().enumerate() {
                    next[sp] += w * p;
                }
            }
        }
        current = next;
    }
    for x in &mut acc {
        *x /= h as f64;
    }
    Distribution::new(acc)
}

/// Re-export of [`Distribution::tv_distance`] as a free function.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.tv_distance(q)
}

/// Outcome of one value-gap check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    /// Teacher value minus composed value.
    pub gap: f64,
    /// `2 * H * R_max * sum_s d(s) * (1 - alpha(s))`.
    pub bound: f64,
    /// `gap <= bound + GAP_TOLERANCE`.
    pub holds: bool,
    /// Teacher average state visitation used in the bound.
    pub visitation: Distribution,
    /// Per-state executability of the checked guide.
    pub alpha: Vec<f64>,
}

impl GapReport {
    pub fn alpha_mean(&self) -> f64 {
        self.alpha.iter().sum::<f64>() / self.alpha.len() as f64
    }
}

/// Computes gap and bound exactly for a tabular guide against the mixture
/// model on `env`, and checks the inequality.
pub fn check_value_gap(
    guide: &TabularGuide,
    model: &MixtureModel,
    env: &EnvSpec,
) -> Result<GapReport> {
    if model.state_count() != env.state_count() || model.action_count() != env.action_count() {
        return Err(Error::DimensionMismatch(
            "mixture model and environment disagree on dimensions".into(),
        ));
    }
    let teacher = model.teacher_policy();
    let composed = compose_tabular(guide, &model.build_core())?;
    let v_teacher = exact_value_dp(&teacher, env)?;
    let v_composed = exact_value_dp(&composed, env)?;
    let profile = executability(guide, model)?;
    let d = visitation(&teacher, env)?;
    let shortfall: f64 = d
        .probs()
        .iter()
        .zip(&profile.alpha)
        .map(|(w, a)| w * (1.0 - a))
        .sum();
    let bound = 2.0 * env.horizon() as f64 * env.r_max() * shortfall;
    let gap = v_teacher - v_composed;
    Ok(GapReport {
        gap,
        bound,
        holds: gap <= bound + GAP_TOLERANCE,
        visitation: d,
        alpha: profile.alpha,
    })
}

/// Size caps for randomly generated check instances.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InstanceCaps {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    pub max_strategies: usize,
    pub r_max: f64,
}

impl Default for InstanceCaps {
    fn default() -> Self {
        Self { max_states: 6, max_actions: 4, max_horizon: 4, max_strategies: 5, r_max: 1.0 }
    }
}

/// A random instance: flat-Dirichlet rows for every distribution, uniform
/// `q` values, uniform rewards in `[0, r_max]`.
pub fn random_instance(seed: u64, caps: &InstanceCaps) -> (TabularGuide, MixtureModel, EnvSpec) {
    let mut rng = rng_from_seed(seed);
    let states = rng.random_range(1..=caps.max_states);
    let actions = rng.random_range(1..=caps.max_actions);
    let horizon = rng.random_range(1..=caps.max_horizon);
    let strategies = rng.random_range(1..=caps.max_strategies);

    let dirichlet = |rng: &mut rand_chacha::ChaCha8Rng, n: usize| {
        Distribution::random_flat_dirichlet(rng, n).expect("n >= 1")
    };

    let rewards: Vec<Vec<f64>> = (0..states)
        .map(|_| (0..actions).map(|_| rng.random::<f64>() * caps.r_max).collect())
        .collect();
    let transitions: Vec<Vec<Distribution>> = (0..states)
        .map(|_| (0..actions).map(|_| dirichlet(&mut rng, states)).collect())
        .collect();
    let initial = dirichlet(&mut rng, states);
    let env = EnvSpec::new(horizon, caps.r_max, rewards, transitions, initial)
        .expect("generated rows are valid");

    let teacher: Vec<Distribution> = (0..states).map(|_| dirichlet(&mut rng, actions)).collect();
    let bad_exec: Vec<Vec<Distribution>> = (0..states)
        .map(|_| (0..strategies).map(|_| dirichlet(&mut rng, actions)).collect())
        .collect();
    let success_prob: Vec<Vec<f64>> = (0..states)
        .map(|_| (0..strategies).map(|_| rng.random::<f64>()).collect())
        .collect();
    let model =
        MixtureModel::new(teacher, bad_exec, success_prob).expect("generated rows are valid");

    let guide_rows: Vec<Distribution> =
        (0..states).map(|_| dirichlet(&mut rng, strategies)).collect();
    let guide = TabularGuide::new(
        (0..strategies).map(|z| format!("z{z}")).collect(),
        guide_rows,
    )
    .expect("generated rows are valid");

    (guide, model, env)
}

/// One row of a gap sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub instance_seed: u64,
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub strategies: usize,
    pub gap: f64,
    pub bound: f64,
    pub alpha_mean: f64,
    /// Worst `TV(composed, teacher) - (1 - alpha)` over states.
    pub tv_excess: f64,
    pub tv_ok: bool,
    pub holds: bool,
}

/// Runs `instances` independent value-gap checks. Instance `i` is generated
/// from `derive_seed(master_seed, i)`, so the sweep parallelizes without
/// changing results.
pub fn gap_sweep(master_seed: u64, instances: usize, caps: &InstanceCaps) -> Vec<SweepRecord> {
    (0..instances)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, i as u64);
            let (guide, model, env) = random_instance(seed, caps);
            let report = check_value_gap(&guide, &model, &env).expect("generated instance");
            let composed =
                compose_tabular(&guide, &model.build_core()).expect("generated instance");
            let teacher = model.teacher_policy();
            let mut tv_excess = f64::NEG_INFINITY;
            for s in 0..env.state_count() {
                let tv = composed
                    .row(s)
                    .tv_distance(teacher.row(s))
                    .expect("equal action supports");
                tv_excess = tv_excess.max(tv - (1.0 - report.alpha[s]));
            }
            SweepRecord {
                instance_seed: seed,
                states: env.state_count(),
                actions: env.action_count(),
                horizon: env.horizon(),
                strategies: model.strategy_count(),
                gap: report.gap,
                bound: report.bound,
                alpha_mean: report.alpha_mean(),
                tv_excess,
                tv_ok: tv_excess <= TV_TOLERANCE,
                holds: report.holds,
            }
        })
        .collect()
}

/// Writes sweep records as CSV with a header row.
pub fn write_sweep_csv<W: std::io::Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
