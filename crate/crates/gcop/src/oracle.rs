//! Black-box contracts: teachers that propose and refine strategies,
//! executors that attempt a problem, and judges that score a parsed
//! strategy. Implementations live behind these traits so the curation,
//! reward, and training pipelines run identically against scripted
//! stand-ins and live endpoints.

use crate::Result;

/// One execution attempt of a problem, optionally conditioned on a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionOutcome {
    /// Whether the validator accepted the attempt.
    pub success: bool,
    /// Episodic task reward; for pass/fail validators this is 0 or 1.
    pub reward: f64,
    /// Validator feedback, surfaced to teachers during refinement.
    pub feedback: Option<String>,
}

impl ExecutionOutcome {
    pub fn pass() -> Self {
        Self { success: true, reward: 1.0, feedback: None }
    }

    pub fn fail(feedback: impl Into<String>) -> Self {
        Self { success: false, reward: 0.0, feedback: Some(feedback.into()) }
    }
}

/// Executes a problem with or without guidance. One call is one trial;
/// trial randomness is owned by `seed`.
pub trait Executor: Sync {
    fn execute(&self, problem: &str, strategy: Option<&str>, seed: u64)
        -> Result<ExecutionOutcome>;
}

/// Proposes strategies for problems and refines rejected ones.
pub trait Teacher: Sync {
    fn propose(&self, problem: &str, seed: u64) -> Result<String>;

    fn refine(&self, problem: &str, strategy: &str, feedback: &str, seed: u64) -> Result<String>;
}

/// A judge verdict: a quality score plus a leakage flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgeVerdict {
    /// Quality score in `[0, 1]`.
    pub score: f64,
    /// True when the strategy contains the final answer.
    pub leakage: bool,
}

/// Scores a parsed strategy body for a problem.
pub trait Judge: Sync {
    fn assess(&self, problem: &str, strategy_body: &str) -> Result<JudgeVerdict>;
}
