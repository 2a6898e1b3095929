//! Reasoning chains and the multi-scale edit algebra over them.
//!
//! A chain is an ordered list of steps, each step an ordered list of
//! whitespace-free tokens. Edits come in three scales (token, step,
//! structure) plus an explicit no-op, and every edit is applied as a pure
//! function producing a fresh chain.

mod edit;
mod sample;

pub use edit::{apply_edit, EditAction, EditError, Scale, StepOp, StructureOp, TemplateId, TokenOp};
pub use sample::{
    enumerate_actions, sample_candidates, ActionError, EnumConfig, SamplerConfig, ScaleWeights,
    StructureConfig,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default separator between steps in chain text.
pub const DEFAULT_STEP_DELIMITER: &str = "\n";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("step {step} is empty")]
    EmptyStep { step: usize },
    #[error("empty token at step {step}, position {position}")]
    EmptyToken { step: usize, position: usize },
    #[error("token {token:?} contains whitespace")]
    WhitespaceInToken { token: String },
    #[error("token {token:?} contains the step delimiter {delimiter:?}")]
    DelimiterInToken { token: String, delimiter: String },
    #[error("step delimiter must be non-empty")]
    EmptyDelimiter,
    #[error("task text has no tokens")]
    EmptyTaskText,
}

/// A reasoning task input: identifier, tokenized text, optional gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInput {
    pub id: String,
    pub tokens: Vec<String>,
    pub expected_answer: Option<String>,
}

impl TaskInput {
    /// Builds a task by whitespace-tokenizing `text`. The text must contain
    /// at least one token.
    pub fn from_text(
        id: impl Into<String>,
        text: &str,
        expected_answer: Option<String>,
    ) -> Result<Self, ChainError> {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(ChainError::EmptyTaskText);
        }
        Ok(Self {
            id: id.into(),
            tokens,
            expected_answer,
        })
    }
}

/// An ordered sequence of steps, each a non-empty list of tokens.
///
/// Invariants enforced at construction: no step is empty, every token is a
/// non-empty string containing no whitespace. The empty chain (zero steps)
/// is the degenerate start state and is valid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct ReasoningChain {
    steps: Vec<Vec<String>>,
}

impl ReasoningChain {
    pub fn new(steps: Vec<Vec<String>>) -> Result<Self, ChainError> {
        for (i, step) in steps.iter().enumerate() {
            if step.is_empty() {
                return Err(ChainError::EmptyStep { step: i });
            }
            for (j, token) in step.iter().enumerate() {
                validate_token(token, i, j)?;
            }
        }
        Ok(Self { steps })
    }

    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    /// Convenience constructor from string slices; panics on invalid tokens,
    /// so intended for literals in tests and fixtures.
    pub fn from_steps(steps: &[&[&str]]) -> Self {
        let steps = steps
            .iter()
            .map(|s| s.iter().map(|t| (*t).to_owned()).collect())
            .collect();
        Self::new(steps).expect("invalid literal chain")
    }

    pub fn steps(&self) -> &[Vec<String>] {
        &self.steps
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn step_len(&self, step: usize) -> Option<usize> {
        self.steps.get(step).map(Vec::len)
    }

    pub fn token_at(&self, step: usize, position: usize) -> Option<&str> {
        self.steps.get(step)?.get(position).map(String::as_str)
    }

    /// All tokens in step order, ignoring step boundaries.
    pub fn flat_tokens(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().flatten().map(String::as_str)
    }

    pub(crate) fn into_steps(self) -> Vec<Vec<String>> {
        self.steps
    }
}

impl TryFrom<Vec<Vec<String>>> for ReasoningChain {
    type Error = ChainError;
    fn try_from(steps: Vec<Vec<String>>) -> Result<Self, Self::Error> {
        Self::new(steps)
    }
}

impl From<ReasoningChain> for Vec<Vec<String>> {
    fn from(chain: ReasoningChain) -> Self {
        chain.steps
    }
}

fn validate_token(token: &str, step: usize, position: usize) -> Result<(), ChainError> {
    if token.is_empty() {
        return Err(ChainError::EmptyToken { step, position });
    }
    if token.chars().any(char::is_whitespace) {
        return Err(ChainError::WhitespaceInToken {
            token: token.to_owned(),
        });
    }
    Ok(())
}

/// An MDP state: the task plus the current chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MDPState {
    pub task: TaskInput,
    pub chain: ReasoningChain,
}

/// Provenance for one collected transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMeta {
    pub seed: u64,
    pub episode: usize,
    pub step: usize,
}

/// One row of a transition dataset: (state, action, next chain, rewards).
///
/// `reward` is the absolute quality of the post-edit chain; `reward_delta`
/// is the change relative to the pre-edit chain's quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: MDPState,
    pub action: EditAction,
    pub next_chain: ReasoningChain,
    pub reward: f64,
    pub reward_delta: f64,
    pub meta: TransitionMeta,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitionInvariantError {
    #[error("next_chain does not equal apply_edit(state.chain, action): {0}")]
    Inconsistent(String),
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("implied pre-edit reward {0} outside [0, 1]")]
    ImpliedPrevRewardOutOfRange(f64),
}

impl Transition {
    /// Checks the structural invariants that hold for every well-formed
    /// transition, without access to the environment that produced it.
    pub fn validate(&self) -> Result<(), TransitionInvariantError> {
        let replayed = apply_edit(&self.state.chain, &self.action)
            .map_err(|e| TransitionInvariantError::Inconsistent(e.to_string()))?;
        if replayed != self.next_chain {
            return Err(TransitionInvariantError::Inconsistent(
                "replayed edit differs from stored next_chain".to_owned(),
            ));
        }
        if !(0.0..=1.0).contains(&self.reward) || !self.reward.is_finite() {
            return Err(TransitionInvariantError::RewardOutOfRange(self.reward));
        }
        let implied_prev = self.reward - self.reward_delta;
        if !(-1e-9..=1.0 + 1e-9).contains(&implied_prev) || !implied_prev.is_finite() {
            return Err(TransitionInvariantError::ImpliedPrevRewardOutOfRange(
                implied_prev,
            ));
        }
        Ok(())
    }
}

/// Splits `text` into steps on `delimiter`, whitespace-tokenizes each step,
/// and drops empty steps. Empty input yields the empty chain.
pub fn parse_chain(text: &str, delimiter: &str) -> Result<ReasoningChain, ChainError> {
    if delimiter.is_empty() {
        return Err(ChainError::EmptyDelimiter);
    }
    let steps: Vec<Vec<String>> = text
        .split(delimiter)
        .map(|s| s.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
        .filter(|s: &Vec<String>| !s.is_empty())
        .collect();
    ReasoningChain::new(steps)
}

/// Inverse of [`parse_chain`]: steps joined by `delimiter`, tokens joined by
/// a single space. Fails if any token contains the delimiter.
pub fn render_chain(chain: &ReasoningChain, delimiter: &str) -> Result<String, ChainError> {
    if delimiter.is_empty() {
        return Err(ChainError::EmptyDelimiter);
    }
    for token in chain.flat_tokens() {
        if token.contains(delimiter) {
            return Err(ChainError::DelimiterInToken {
                token: token.to_owned(),
                delimiter: delimiter.to_owned(),
            });
        }
    }
    Ok(chain
        .steps
        .iter()
        .map(|s| s.join(" "))
        .collect::<Vec<_>>()
        .join(delimiter))
}
