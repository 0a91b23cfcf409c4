//! Teacher-guided acceptance sampling with Hoeffding certificates.
//!
//! A strategy is validated by `K` independent trials against the target
//! executor and accepted when its empirical success rate reaches `tau`.
//! Accepted strategies then carry a distribution-level guarantee: with
//! `delta = exp(-2 K eta^2)` and acceptance rate `A`, the expected true
//! success over accepted strategies is at least
//! `(tau - eta) * (1 - delta / A)`. Because `A` is unknown, certificates
//! use a Hoeffding lower confidence bound `max(a_hat - epsilon, 0)` that
//! holds with probability `1 - exp(-2 M epsilon^2)` over `M` proposals.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::oracle::{Executor, Teacher};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Executor trial errors are retried this many times before the strategy's
/// validation run aborts.
pub const TRIAL_RETRY_LIMIT: u32 = 3;

/// Parameters of the acceptance-sampling pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    /// Validation trials per strategy (K).
    pub k_trials: u32,
    /// Acceptance threshold on the empirical success rate.
    pub tau: f64,
    /// Slack separating the accepted guarantee from the threshold.
    pub eta: f64,
    /// Proposals contributing to the acceptance-rate estimate (M).
    pub m_samples: u32,
    /// Width of the acceptance-rate lower confidence bound.
    pub epsilon: f64,
    /// Refinement rounds allowed after a rejected proposal.
    pub max_refinements: u32,
}

impl AcceptanceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_trials == 0 {
            return Err(Error::InvalidParameter("k_trials must be at least 1".into()));
        }
        if !(0.0 < self.tau && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.tau - self.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau - eta must be positive for a meaningful bound, got {}",
                self.tau - self.eta
            )));
        }
        if self.m_samples == 0 {
            return Err(Error::InvalidParameter("m_samples must be at least 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self { k_trials: 50, tau: 0.7, eta: 0.05, m_samples: 10_000, epsilon: 0.05, max_refinements: 3 }
    }
}

/// Hoeffding validation error term `exp(-2 K eta^2)`.
pub fn hoeffding_delta(k_trials: u64, eta: f64) -> f64 {
    (-2.0 * k_trials as f64 * eta * eta).exp()
}

/// Lower bound `(tau - eta) * (1 - delta / acceptance_rate)` on the
/// expected true success of accepted strategies.
///
/// May be negative when `delta > acceptance_rate`; vacuous bounds are
/// reported as-is, never clamped. A zero acceptance rate is an error.
pub fn accepted_success_lower_bound(
    tau: f64,
    eta: f64,
    k_trials: u64,
    acceptance_rate: f64,
) -> Result<f64> {
    if acceptance_rate <= 0.0 {
        return Err(Error::InvalidParameter(
            "accepted-success bound undefined at zero acceptance rate".into(),
        ));
    }
    let delta = hoeffding_delta(k_trials, eta);
    Ok((tau - eta) * (1.0 - delta / acceptance_rate))
}

/// Acceptance-rate estimate with its lower confidence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLcb {
    pub m: usize,
    /// Empirical acceptance rate.
    pub a_hat: f64,
    /// `max(a_hat - epsilon, 0)`.
    pub a_lcb: f64,
    /// `1 - exp(-2 M epsilon^2)`.
    pub confidence: f64,
}

/// Computes the acceptance-rate LCB fragment from raw accept flags.
pub fn acceptance_rate_lcb(accept_flags: &[bool], epsilon: f64) -> Result<RateLcb> {
    if accept_flags.is_empty() {
        return Err(Error::EmptyInput("acceptance flags"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let m = accept_flags.len();
    let a_hat = accept_flags.iter().filter(|&&f| f).count() as f64 / m as f64;
    Ok(RateLcb {
        m,
        a_hat,
        a_lcb: (a_hat - epsilon).max(0.0),
        confidence: 1.0 - (-2.0 * m as f64 * epsilon * epsilon).exp(),
    })
}

/// A full acceptance certificate over first-round proposals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCertificate {
    pub k_trials: u32,
    pub tau: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub m: usize,
    /// `exp(-2 K eta^2)`.
    pub delta: f64,
    pub a_hat: f64,
    pub a_lcb: f64,
    pub confidence: f64,
    /// `(tau - eta) * (1 - delta / a_lcb)`; absent when `a_lcb` is zero.
    pub bound: Option<f64>,
    /// `delta <= a_lcb`; implies a non-negative bound.
    pub nonvacuous: bool,
}

/// Builds a certificate from round-zero accept flags.
///
/// When `flags` holds more than `config.m_samples` entries, only the first
/// `m_samples` contribute; the estimate must come from proposals drawn
/// i.i.d. from the teacher, which later refinement rounds are not.
pub fn certificate(config: &AcceptanceConfig, flags: &[bool]) -> Result<AcceptanceCertificate> {
    config.validate()?;
    let take = flags.len().min(config.m_samples as usize);
    let used = &flags[..take];
    let rate = acceptance_rate_lcb(used, config.epsilon)?;
    let delta = hoeffding_delta(config.k_trials as u64, config.eta);
    let bound = if rate.a_lcb > 0.0 {
        Some(accepted_success_lower_bound(config.tau, config.eta, config.k_trials as u64, rate.a_lcb)?)
    } else {
        None
    };
    Ok(AcceptanceCertificate {
        k_trials: config.k_trials,
        tau: config.tau,
        eta: config.eta,
        epsilon: config.epsilon,
        m: rate.m,
        delta,
        a_hat: rate.a_hat,
        a_lcb: rate.a_lcb,
        confidence: rate.confidence,
        bound,
        nonvacuous: delta <= rate.a_lcb,
    })
}

/// Result of a K-trial validation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRun {
    /// Empirical success rate over the K trials.
    pub q_hat: f64,
    /// Feedback from the most recent failed trial, if any.
    pub last_failure_feedback: Option<String>,
}

/// Runs `k_trials` independent trials of `strategy` on `problem`.
///
/// Trial `i` uses `derive_seed(seed, i)`. Executor errors are retried up
/// to [`TRIAL_RETRY_LIMIT`] times with fresh seeds; a persistent error
/// aborts the run with [`Error::TrialError`] rather than biasing `q_hat`.
pub fn validate_strategy(
    executor: &dyn Executor,
    problem: &str,
    strategy: &str,
    k_trials: u32,
    seed: u64,
) -> Result<ValidationRun> {
    if k_trials == 0 {
        return Err(Error::InvalidParameter("k_trials must be at least 1".into()));
    }
    let mut successes = 0u32;
    let mut last_failure_feedback = None;
    for i in 0..k_trials {
        let mut outcome = None;
        let mut last_err = String::new();
        for attempt in 0..=TRIAL_RETRY_LIMIT {
            // Retries get a distinct sub-seed so a deterministic executor
            // fault does not repeat forever.
            let trial_seed = derive_seed(seed, (i as u64) << 8 | attempt as u64);
            match executor.execute(problem, Some(strategy), trial_seed) {
                Ok(o) => {
                    outcome = Some(o);
                    break;
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        let Some(outcome) = outcome else {
            return Err(Error::TrialError {
                attempts: TRIAL_RETRY_LIMIT + 1,
                message: last_err,
            });
        };
        if outcome.success {
            successes += 1;
        } else if let Some(f) = outcome.feedback {
            last_failure_feedback = Some(f);
        }
    }
    Ok(ValidationRun { q_hat: successes as f64 / k_trials as f64, last_failure_feedback })
}

/// A problem submitted to the curation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub text: String,
    /// Validator selector, interpreted by the executor wiring.
    #[serde(default)]
    pub validator: Option<String>,
}

/// One validated (problem, strategy) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub problem_id: String,
    pub problem_text: String,
    pub strategy_text: String,
    pub q_hat: f64,
    pub refinement_round: u32,
    pub accepted: bool,
}

/// A problem the loop could not resolve because the teacher or executor
/// kept failing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedProblem {
    pub problem_id: String,
    pub error: String,
}

/// Output of [`curate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationOutcome {
    pub records: Vec<CorpusRecord>,
    pub certificate: AcceptanceCertificate,
    pub unresolved: Vec<UnresolvedProblem>,
}

fn curate_problem(
    teacher: &dyn Teacher,
    executor: &dyn Executor,
    problem: &Problem,
    config: &AcceptanceConfig,
    seed: u64,
) -> Result<(Vec<CorpusRecord>, bool)> {
    let mut records = Vec::new();
    let mut strategy = teacher.propose(&problem.text, derive_seed(seed, 0))?;
    let mut round = 0u32;
    let mut round0_accept = false;
    loop {
        let run = validate_strategy(
            executor,
            &problem.text,
            &strategy,
            config.k_trials,
            derive_seed(seed, 1 + round as u64),
        )?;
        let accepted = run.q_hat >= config.tau;
        records.push(CorpusRecord {
            problem_id: problem.id.clone(),
            problem_text: problem.text.clone(),
            strategy_text: strategy.clone(),
            q_hat: run.q_hat,
            refinement_round: round,
            accepted,
        });
        if round == 0 {
            round0_accept = accepted;
        }
        if accepted || round >= config.max_refinements {
            return Ok((records, round0_accept));
        }
        let feedback = run.last_failure_feedback.unwrap_or_else(|| {
            format!(
                "strategy failed {}-trial validation at q_hat={}",
                config.k_trials, run.q_hat
            )
        });
        round += 1;
        strategy =
            teacher.refine(&problem.text, &strategy, &feedback, derive_seed(seed, 1000 + round as u64))?;
    }
}

/// Runs the curation loop: propose, validate, refine up to
/// `max_refinements`, and log every round.
///
/// The certificate is computed over round-zero accept flags only; refined
/// strategies enter the corpus but come from a different proposal
/// distribution, so they never feed the certificate. Problems are
/// independent; problem `p` derives all randomness from
/// `derive_seed(seed, p)`, so the loop parallelizes deterministically.
/// Teacher or executor failures mark the problem unresolved and the run
/// continues.
pub fn curate(
    teacher: &dyn Teacher,
    executor: &dyn Executor,
    problems: &[Problem],
    config: &AcceptanceConfig,
    seed: u64,
) -> Result<CurationOutcome> {
    config.validate()?;
    if problems.is_empty() {
        return Err(Error::EmptyInput("problems"));
    }
    let outcomes: Vec<(usize, Result<(Vec<CorpusRecord>, bool)>)> = problems
        .par_iter()
        .enumerate()
        .map(|(p, problem)| (p, curate_problem(teacher, executor, problem, config, derive_seed(seed, p as u64))))
        .collect();

    let mut records = Vec::new();
    let mut flags = Vec::new();
    let mut unresolved = Vec::new();
    for (p, outcome) in outcomes {
        match outcome {
            Ok((mut recs, round0)) => {
                records.append(&mut recs);
                flags.push(round0);
            }
            Err(e) => unresolved.push(UnresolvedProblem {
                problem_id: problems[p].id.clone(),
                error: e.to_string(),
            }),
        }
    }
    if flags.is_empty() {
        return Err(Error::TrialError {
            attempts: TRIAL_RETRY_LIMIT + 1,
            message: "every problem failed to resolve; no certificate".into(),
        });
    }
    let certificate = certificate(config, &flags)?;
    Ok(CurationOutcome { records, certificate, unresolved })
}

/// Cumulative acceptance rate by refinement round: entry `r` is the
/// fraction of problems accepted at any round `<= r`.
pub fn cumulative_pass_rates(records: &[CorpusRecord], max_round: u32) -> Vec<f64> {
    let problems: BTreeSet<&str> = records.iter().map(|r| r.problem_id.as_str()).collect();
    let total = problems.len().max(1) as f64;
    (0..=max_round)
        .map(|r| {
            let accepted: BTreeSet<&str> = records
                .iter()
                .filter(|rec| rec.accepted && rec.refinement_round <= r)
                .map(|rec| rec.problem_id.as_str())
                .collect();
            accepted.len() as f64 / total
        })
        .collect()
}

/// Writes corpus records as UTF-8 line-delimited JSON.
pub fn write_corpus_jsonl(path: impl AsRef<Path>, records: &[CorpusRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corpus written by [`write_corpus_jsonl`].
pub fn read_corpus_jsonl(path: impl AsRef<Path>) -> Result<Vec<CorpusRecord>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// Reads problems from line-delimited JSON (`id`, `text`, optional
/// `validator`).
pub fn read_problems_jsonl(path: impl AsRef<Path>) -> Result<Vec<Problem>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

/// One cell of the accepted-success Monte-Carlo check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Cell {
    pub k_trials: u32,
    pub tau: f64,
    pub eta: f64,
    pub pool: usize,
    pub delta: f64,
    pub a_hat: f64,
    pub accepted_mean_q: f64,
    pub accepted_std_err: f64,
    /// `(tau - eta) * (1 - delta / a_hat)`.
    pub bound: f64,
    /// Only cells with `delta < a_hat` assert the bound.
    pub checked: bool,
    pub holds: bool,
}

/// Simulates K-trial acceptance over a pool of strategies with true success
/// probabilities drawn from Beta(`beta_a`, `beta_b`), for every `(K, tau)`
/// combination, and checks the accepted-success lower bound at three
/// standard errors.
pub fn theorem2_grid(
    k_values: &[u32],
    tau_values: &[f64],
    eta: f64,
    pool: usize,
    beta_a: f64,
    beta_b: f64,
    seed: u64,
) -> Result<Vec<Theorem2Cell>> {
    use rand_distr::{Beta, Distribution as _};
    if pool == 0 {
        return Err(Error::InvalidParameter("strategy pool must be non-empty".into()));
    }
    let beta = Beta::new(beta_a, beta_b)
        .map_err(|e| Error::InvalidParameter(format!("beta parameters: {e}")))?;
    let mut rng = rng_from_seed(seed);
    let qs: Vec<f64> = (0..pool).map(|_| beta.sample(&mut rng)).collect();

    let mut cells = Vec::new();
    for (ci, &k) in k_values.iter().enumerate() {
        for (cj, &tau) in tau_values.iter().enumerate() {
            let cell_seed = derive_seed(seed, 1 + (ci * tau_values.len() + cj) as u64);
            let accepted: Vec<f64> = qs
                .par_iter()
                .enumerate()
                .filter_map(|(i, &q)| {
                    let mut trial_rng = rng_from_seed(derive_seed(cell_seed, i as u64));
                    let mut successes = 0u32;
                    for _ in 0..k {
                        if trial_rng.random::<f64>() < q {
                            successes += 1;
                        }
                    }
                    (successes as f64 / k as f64 >= tau).then_some(q)
                })
                .collect();
            let delta = hoeffding_delta(k as u64, eta);
            let a_hat = accepted.len() as f64 / pool as f64;
            let (mean, std_err) = if accepted.is_empty() {
                (0.0, 0.0)
            } else {
                let n = accepted.len() as f64;
                let mean = accepted.iter().sum::<f64>() / n;
                let var = accepted.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n;
                (mean, (var / n).sqrt())
            };
            let checked = delta < a_hat;
            let bound = if a_hat > 0.0 {
                accepted_success_lower_bound(tau, eta, k as u64, a_hat)?
            } else {
                f64::NEG_INFINITY
            };
            let holds = !checked || mean - 3.0 * std_err >= bound;
            cells.push(Theorem2Cell {
                k_trials: k,
                tau,
                eta,
                pool,
                delta,
                a_hat,
                accepted_mean_q: mean,
                accepted_std_err: std_err,
                bound,
                checked,
                holds,
            });
        }
    }
    Ok(cells)
}

/// Writes Theorem-2 grid cells as CSV with a header row.
pub fn write_theorem2_csv<W: std::io::Write>(cells: &[Theorem2Cell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for c in cells {
        out.serialize(c)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ExecutionOutcome;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Always(bool);

    impl Executor for Always {
        fn execute(&self, _: &str, _: Option<&str>, _: u64) -> Result<ExecutionOutcome> {
            Ok(if self.0 { ExecutionOutcome::pass() } else { ExecutionOutcome::fail("wrong answer") })
        }
    }

    struct Bernoulli(f64);

    impl Executor for Bernoulli {
        fn execute(&self, _: &str, _: Option<&str>, seed: u64) -> Result<ExecutionOutcome> {
            let mut rng = rng_from_seed(seed);
            Ok(if rng.random::<f64>() < self.0 {
                ExecutionOutcome::pass()
            } else {
                ExecutionOutcome::fail("missed")
            })
        }
    }

    /// Fails transiently `fail_first` times per trial sequence, then works.
    struct Flaky {
        fail_first: u32,
        calls: AtomicU32,
    }

    impl Executor for Flaky {
        fn execute(&self, _: &str, _: Option<&str>, _: u64) -> Result<ExecutionOutcome> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(Error::Transport {
                    correlation_id: "t".into(),
                    attempts: 1,
                    message: "connection reset".into(),
                })
            } else {
                Ok(ExecutionOutcome::pass())
            }
        }
    }

    #[test]
    fn validate_strategy_extremes() {
        let run = validate_strategy(&Always(true), "p", "s", 16, 1).unwrap();
        assert_eq!(run.q_hat, 1.0);
        let run = validate_strategy(&Always(false), "p", "s", 16, 1).unwrap();
        assert_eq!(run.q_hat, 0.0);
        assert_eq!(run.last_failure_feedback.as_deref(), Some("wrong answer"));
        assert!(validate_strategy(&Always(true), "p", "s", 0, 1).is_err());
    }

    #[test]
    fn validate_strategy_concentrates() {
        let run = validate_strategy(&Bernoulli(0.7), "p", "s", 10_000, 321).unwrap();
        assert!((run.q_hat - 0.7).abs() < 0.02, "q_hat = {}", run.q_hat);
    }

    #[test]
    fn transient_errors_are_retried_persistent_abort() {
        let flaky = Flaky { fail_first: 2, calls: AtomicU32::new(0) };
        let run = validate_strategy(&flaky, "p", "s", 4, 9).unwrap();
        assert_eq!(run.q_hat, 1.0);

        let dead = Flaky { fail_first: u32::MAX, calls: AtomicU32::new(0) };
        match validate_strategy(&dead, "p", "s", 4, 9) {
            Err(Error::TrialError { attempts, .. }) => {
                assert_eq!(attempts, TRIAL_RETRY_LIMIT + 1)
            }
            other => panic!("expected trial error, got {other:?}"),
        }
    }

    #[test]
    fn hoeffding_delta_values() {
        assert_eq!(hoeffding_delta(0, 0.1), 1.0);
        assert_eq!(hoeffding_delta(100, 0.0), 1.0);
        assert!((hoeffding_delta(100, 0.1) - 0.1353352832366127).abs() < 1e-15);
    }

    #[test]
    fn accepted_bound_values() {
        // delta == acceptance rate degenerates to zero.
        let delta = hoeffding_delta(100, 0.1);
        let b = accepted_success_lower_bound(0.8, 0.1, 100, delta).unwrap();
        assert!(b.abs() < 1e-15);

        let b = accepted_success_lower_bound(0.8, 0.1, 100, 0.5).unwrap();
        assert!((b - 0.7 * (1.0 - 0.2706705664732254)).abs() < 1e-12);
        assert!((b - 0.510530603468742).abs() < 1e-12);

        // Large K, full acceptance: bound approaches tau - eta.
        let b = accepted_success_lower_bound(0.8, 0.1, 100_000, 1.0).unwrap();
        assert!((b - 0.7).abs() < 1e-12);

        assert!(accepted_success_lower_bound(0.8, 0.1, 10, 0.0).is_err());
    }

    #[test]
    fn rate_lcb_values() {
        let flags = vec![true; 100];
        let r = acceptance_rate_lcb(&flags, 0.05).unwrap();
        assert!((r.a_lcb - 0.95).abs() < 1e-15);
        assert!((r.confidence - (1.0 - (-0.5f64).exp())).abs() < 1e-15);

        let none = vec![false; 10];
        let r = acceptance_rate_lcb(&none, 0.05).unwrap();
        assert_eq!(r.a_lcb, 0.0);

        let half: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let r = acceptance_rate_lcb(&half, 0.5).unwrap();
        assert_eq!(r.a_lcb, 0.0);

        assert!(acceptance_rate_lcb(&[], 0.05).is_err());
    }

    #[test]
    fn certificate_bound_undefined_at_zero_lcb() {
        let config = AcceptanceConfig::default();
        let cert = certificate(&config, &[false; 50]).unwrap();
        assert_eq!(cert.a_lcb, 0.0);
        assert!(cert.bound.is_none());
        assert!(!cert.nonvacuous);

        let cert = certificate(&config, &[true; 200]).unwrap();
        assert!(cert.bound.unwrap() > 0.0);
        assert!(cert.nonvacuous);
    }

    struct ScriptedQ {
        base: f64,
        gain: f64,
    }

    impl Teacher for ScriptedQ {
        fn propose(&self, problem: &str, _: u64) -> Result<String> {
            Ok(format!("attempt {problem} [q={:.2}]", self.base))
        }

        fn refine(&self, problem: &str, strategy: &str, _: &str, _: u64) -> Result<String> {
            let q: f64 = strategy
                .rsplit("[q=")
                .next()
                .and_then(|s| s.strip_suffix(']'))
                .and_then(|s| s.parse().ok())
                .unwrap_or(self.base);
            Ok(format!("attempt {problem} [q={:.2}]", (q + self.gain).min(1.0)))
        }
    }

    struct MarkerExec;

    impl Executor for MarkerExec {
        fn execute(&self, _: &str, strategy: Option<&str>, seed: u64) -> Result<ExecutionOutcome> {
            let q: f64 = strategy
                .and_then(|s| s.rsplit("[q=").next())
                .and_then(|s| s.strip_suffix(']'))
                .and_then(|s| s.parse().ok())
                .unwrap_or(0.0);
            let mut rng = rng_from_seed(seed);
            Ok(if rng.random::<f64>() < q {
                ExecutionOutcome::pass()
            } else {
                ExecutionOutcome::fail("validation failed")
            })
        }
    }

    fn problems(n: usize) -> Vec<Problem> {
        (0..n)
            .map(|i| Problem { id: format!("p{i:04}"), text: format!("problem {i}"), validator: None })
            .collect()
    }

    #[test]
    fn curate_accepts_everything_with_perfect_executor() {
        let teacher = ScriptedQ { base: 0.9, gain: 0.0 };
        let config = AcceptanceConfig { k_trials: 20, tau: 0.5, ..Default::default() };
        let out = curate(&teacher, &Always(true), &problems(25), &config, 7).unwrap();
        assert!(out.unresolved.is_empty());
        assert_eq!(out.records.len(), 25);
        assert!(out.records.iter().all(|r| r.accepted && r.refinement_round == 0));
        assert_eq!(out.certificate.a_hat, 1.0);
    }

    #[test]
    fn curate_is_deterministic() {
        let teacher = ScriptedQ { base: 0.3, gain: 0.2 };
        let config = AcceptanceConfig { k_trials: 30, tau: 0.7, ..Default::default() };
        let a = curate(&teacher, &MarkerExec, &problems(60), &config, 11).unwrap();
        let b = curate(&teacher, &MarkerExec, &problems(60), &config, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_raises_cumulative_pass_rate() {
        let teacher = ScriptedQ { base: 0.3, gain: 0.2 };
        let config =
            AcceptanceConfig { k_trials: 50, tau: 0.7, max_refinements: 3, ..Default::default() };
        let out = curate(&teacher, &MarkerExec, &problems(400), &config, 20_250_801).unwrap();
        let rates = cumulative_pass_rates(&out.records, config.max_refinements);
        assert_eq!(rates.len(), 4);
        for w in rates.windows(2) {
            assert!(w[1] >= w[0], "rates not non-decreasing: {rates:?}");
        }
        // Accepted records always meet the threshold.
        assert!(out.records.iter().filter(|r| r.accepted).all(|r| r.q_hat >= config.tau));
        // Round 2 runs at true q = 0.7; by round 3 most problems pass.
        assert!(rates[3] > rates[1]);
    }

    #[test]
    fn unresolved_problems_do_not_sink_the_run() {
        struct PickyTeacher;
        impl Teacher for PickyTeacher {
            fn propose(&self, problem: &str, _: u64) -> Result<String> {
                if problem.contains("3") {
                    Err(Error::TeacherFailure("refusing".into()))
                } else {
                    Ok(format!("attempt {problem} [q=1.00]"))
                }
            }
            fn refine(&self, _: &str, _: &str, _: &str, _: u64) -> Result<String> {
                Err(Error::TeacherFailure("refusing".into()))
            }
        }
        let config = AcceptanceConfig { k_trials: 5, tau: 0.5, ..Default::default() };
        let out = curate(&PickyTeacher, &MarkerExec, &problems(6), &config, 3).unwrap();
        assert_eq!(out.unresolved.len(), 1);
        assert_eq!(out.unresolved[0].problem_id, "p0003");
        assert_eq!(out.records.len(), 5);
    }

    #[test]
    fn corpus_roundtrips_through_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records = vec![CorpusRecord {
            problem_id: "p1".into(),
            problem_text: "text".into(),
            strategy_text: "try the direct route".into(),
            q_hat: 0.75,
            refinement_round: 1,
            accepted: true,
        }];
        write_corpus_jsonl(&path, &records).unwrap();
        assert_eq!(read_corpus_jsonl(&path).unwrap(), records);
    }

    #[test]
    fn theorem2_grid_small_smoke() {
        let cells = theorem2_grid(&[50, 200], &[0.5], 0.05, 2_000, 2.0, 2.0, 5).unwrap();
        assert_eq!(cells.len(), 2);
        for c in &cells {
            assert!(c.holds, "cell K={} tau={} failed: mean {} bound {}", c.k_trials, c.tau, c.accepted_mean_q, c.bound);
        }
        // K=200 at tau=0.5 has delta well below the acceptance rate.
        assert!(cells[1].checked);
    }
}
