//! Edit actions over chains and their deterministic apply semantics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChainError, ReasoningChain};

/// Granularity of an edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    NoOp,
    Token,
    Step,
    Structure,
}

/// Token-level edits. `position` indexes tokens within the target step;
/// `Add` inserts before `position`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TokenOp {
    Add {
        step: usize,
        position: usize,
        token: String,
    },
    Delete {
        step: usize,
        position: usize,
    },
    Replace {
        step: usize,
        position: usize,
        token: String,
    },
}

/// Step-level edits. `Reorder` is a move: the step at `from` is removed and
/// reinserted at `to`. `Merge` concatenates `step` with `step + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepOp {
    Reorder { from: usize, to: usize },
    Split { step: usize, position: usize },
    Merge { step: usize },
}

/// Named rewrite templates for `FormatChange`. Exact outputs are documented
/// in docs/templates.md.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    /// Leaves every step unchanged.
    Identity,
    /// Prepends the tokens `Step` and `<k>:` to step k (1-based).
    NumberedSteps,
    /// Prepends the token `-` to every step.
    Bullets,
}

impl TemplateId {
    pub const ALL: [TemplateId; 3] = [
        TemplateId::Identity,
        TemplateId::NumberedSteps,
        TemplateId::Bullets,
    ];

    pub fn ordinal(self) -> usize {
        match self {
            TemplateId::Identity => 0,
            TemplateId::NumberedSteps => 1,
            TemplateId::Bullets => 2,
        }
    }

    fn rewrite(self, index: usize, tokens: &[String]) -> Vec<String> {
        match self {
            TemplateId::Identity => tokens.to_vec(),
            TemplateId::NumberedSteps => {
                let mut out = vec!["Step".to_owned(), format!("{}:", index + 1)];
                out.extend_from_slice(tokens);
                out
            }
            TemplateId::Bullets => {
                let mut out = vec!["-".to_owned()];
                out.extend_from_slice(tokens);
                out
            }
        }
    }
}

/// Structure-level edits operating on whole steps or the whole chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureOp {
    /// Inserts the fragment's steps before `position`.
    AddExample {
        fragment: ReasoningChain,
        position: usize,
    },
    /// Replaces the whole step at `step` with `replacement`.
    InstructionEdit {
        step: usize,
        replacement: Vec<String>,
    },
    /// Rewrites every step through the named template.
    FormatChange { template: TemplateId },
}

/// A multi-scale edit action. `NoOp` lets a planner hold position without
/// being forced to degrade a locally optimal chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "scale", content = "op", rename_all = "snake_case")]
pub enum EditAction {
    NoOp,
    Token(TokenOp),
    Step(StepOp),
    Structure(StructureOp),
}

impl EditAction {
    pub fn scale(&self) -> Scale {
        match self {
            EditAction::NoOp => Scale::NoOp,
            EditAction::Token(_) => Scale::Token,
            EditAction::Step(_) => Scale::Step,
            EditAction::Structure(_) => Scale::Structure,
        }
    }

    /// Dense index of the (scale, op-kind) pair, used by the learned action
    /// embedding.
    pub fn kind_index(&self) -> usize {
        match self {
            EditAction::NoOp => 0,
            EditAction::Token(TokenOp::Add { .. }) => 1,
            EditAction::Token(TokenOp::Delete { .. }) => 2,
            EditAction::Token(TokenOp::Replace { .. }) => 3,
            EditAction::Step(StepOp::Reorder { .. }) => 4,
            EditAction::Step(StepOp::Split { .. }) => 5,
            EditAction::Step(StepOp::Merge { .. }) => 6,
            EditAction::Structure(StructureOp::AddExample { .. }) => 7,
            EditAction::Structure(StructureOp::InstructionEdit { .. }) => 8,
            EditAction::Structure(StructureOp::FormatChange { .. }) => 9,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EditAction::NoOp => "noop",
            EditAction::Token(TokenOp::Add { .. }) => "token/add",
            EditAction::Token(TokenOp::Delete { .. }) => "token/delete",
            EditAction::Token(TokenOp::Replace { .. }) => "token/replace",
            EditAction::Step(StepOp::Reorder { .. }) => "step/reorder",
            EditAction::Step(StepOp::Split { .. }) => "step/split",
            EditAction::Step(StepOp::Merge { .. }) => "step/merge",
            EditAction::Structure(StructureOp::AddExample { .. }) => "structure/add_example",
            EditAction::Structure(StructureOp::InstructionEdit { .. }) => {
                "structure/instruction_edit"
            }
            EditAction::Structure(StructureOp::FormatChange { .. }) => "structure/format_change",
        }
    }
}

/// Total number of distinct (scale, op-kind) pairs, including NoOp.
pub const N_ACTION_KINDS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EditError {
    #[error("{op}: index {index} out of bounds (limit {limit})")]
    Bounds {
        op: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("split at position {position} of a step with {step_len} tokens is degenerate")]
    DegenerateSplit { position: usize, step_len: usize },
    #[error("invalid edit payload: {0}")]
    InvalidPayload(ChainError),
}

fn bounds(op: &'static str, index: usize, limit: usize) -> EditError {
    EditError::Bounds { op, index, limit }
}

/// Applies `action` to `chain`, returning a new chain. The input is never
/// mutated. Index bounds are checked against the chain at apply time.
///
/// `Token/Add` inserts before `position`; on an empty chain,
/// `Add(0, 0, token)` bootstraps the first step. `Token/Delete` removes the
/// step entirely if its last token is deleted.
pub fn apply_edit(chain: &ReasoningChain, action: &EditAction) -> Result<ReasoningChain, EditError> {
    let n = chain.n_steps();
    let mut steps: Vec<Vec<String>> = chain.steps().to_vec();
    match action {
        EditAction::NoOp => {}
        EditAction::Token(op) => match op {
            TokenOp::Add {
                step,
                position,
                token,
            } => {
                if n == 0 {
                    if *step != 0 {
                        return Err(bounds("token/add", *step, 0));
                    }
                    if *position != 0 {
                        return Err(bounds("token/add", *position, 0));
                    }
                    steps.push(vec![token.clone()]);
                } else {
                    if *step >= n {
                        return Err(bounds("token/add", *step, n));
                    }
                    let len = steps[*step].len();
                    if *position > len {
                        return Err(bounds("token/add", *position, len));
                    }
                    steps[*step].insert(*position, token.clone());
                }
            }
            TokenOp::Delete { step, position } => {
                if *step >= n {
                    return Err(bounds("token/delete", *step, n));
                }
                let len = steps[*step].len();
                if *position >= len {
                    return Err(bounds("token/delete", *position, len));
                }
                steps[*step].remove(*position);
                if steps[*step].is_empty() {
                    steps.remove(*step);
                }
            }
            TokenOp::Replace {
                step,
                position,
                token,
            } => {
                if *step >= n {
                    return Err(bounds("token/replace", *step, n));
                }
                let len = steps[*step].len();
                if *position >= len {
                    return Err(bounds("token/replace", *position, len));
                }
                steps[*step][*position] = token.clone();
            }
        },
        EditAction::Step(op) => match op {
            StepOp::Reorder { from, to } => {
                if *from >= n {
                    return Err(bounds("step/reorder", *from, n));
                }
                if *to >= n {
                    return Err(bounds("step/reorder", *to, n));
                }
                let step = steps.remove(*from);
                steps.insert(*to, step);
            }
            StepOp::Split { step, position } => {
                if *step >= n {
                    return Err(bounds("step/split", *step, n));
                }
                let len = steps[*step].len();
                if *position > len {
                    return Err(bounds("step/split", *position, len));
                }
                if *position == 0 || *position == len {
                    return Err(EditError::DegenerateSplit {
                        position: *position,
                        step_len: len,
                    });
                }
                let tail = steps[*step].split_off(*position);
                steps.insert(*step + 1, tail);
            }
            StepOp::Merge { step } => {
                if *step + 1 >= n {
                    return Err(bounds("step/merge", *step, n.saturating_sub(1)));
                }
                let tail = steps.remove(*step + 1);
                steps[*step].extend(tail);
            }
        },
        EditAction::Structure(op) => match op {
            StructureOp::AddExample { fragment, position } => {
                if *position > n {
                    return Err(bounds("structure/add_example", *position, n));
                }
                for (offset, step) in fragment.steps().iter().enumerate() {
                    steps.insert(*position + offset, step.clone());
                }
            }
            StructureOp::InstructionEdit { step, replacement } => {
                if *step >= n {
                    return Err(bounds("structure/instruction_edit", *step, n));
                }
                steps[*step] = replacement.clone();
            }
            StructureOp::FormatChange { template } => {
                steps = steps
                    .iter()
                    .enumerate()
                    .map(|(i, s)| template.rewrite(i, s))
                    .collect();
            }
        },
    }
    ReasoningChain::new(steps).map_err(EditError::InvalidPayload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(steps: &[&[&str]]) -> ReasoningChain {
        ReasoningChain::from_steps(steps)
    }

    #[test]
    fn token_delete() {
        let c = chain(&[&["a", "b", "b", "c"]]);
        let out = apply_edit(
            &c,
            &EditAction::Token(TokenOp::Delete {
                step: 0,
                position: 2,
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["a", "b", "c"]]));
    }

    #[test]
    fn token_delete_out_of_bounds() {
        let c = chain(&[&["a"]]);
        let err = apply_edit(
            &c,
            &EditAction::Token(TokenOp::Delete {
                step: 0,
                position: 5,
            }),
        )
        .unwrap_err();
        assert_eq!(
            err,
            EditError::Bounds {
                op: "token/delete",
                index: 5,
                limit: 1
            }
        );
    }

    #[test]
    fn token_delete_last_token_drops_step() {
        let c = chain(&[&["a"], &["b"]]);
        let out = apply_edit(
            &c,
            &EditAction::Token(TokenOp::Delete {
                step: 0,
                position: 0,
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["b"]]));
    }

    #[test]
    fn token_add_on_empty_chain_bootstraps() {
        let out = apply_edit(
            &ReasoningChain::empty(),
            &EditAction::Token(TokenOp::Add {
                step: 0,
                position: 0,
                token: "x".to_owned(),
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["x"]]));
    }

    #[test]
    fn reorder_is_move_semantics() {
        let c = chain(&[&["A"], &["B"], &["C"]]);
        let out = apply_edit(&c, &EditAction::Step(StepOp::Reorder { from: 2, to: 0 })).unwrap();
        assert_eq!(out, chain(&[&["C"], &["A"], &["B"]]));
    }

    #[test]
    fn noop_is_identity() {
        let c = chain(&[&["a", "b"], &["c"]]);
        assert_eq!(apply_edit(&c, &EditAction::NoOp).unwrap(), c);
    }

    #[test]
    fn split_interior_and_degenerate() {
        let c = chain(&[&["a", "b", "c"]]);
        let out = apply_edit(
            &c,
            &EditAction::Step(StepOp::Split {
                step: 0,
                position: 1,
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["a"], &["b", "c"]]));
        for bad in [0, 3] {
            let err = apply_edit(
                &c,
                &EditAction::Step(StepOp::Split {
                    step: 0,
                    position: bad,
                }),
            )
            .unwrap_err();
            assert!(matches!(err, EditError::DegenerateSplit { .. }));
        }
    }

    #[test]
    fn merge_on_last_step_is_bounds_error() {
        let c = chain(&[&["a"], &["b"]]);
        let ok = apply_edit(&c, &EditAction::Step(StepOp::Merge { step: 0 })).unwrap();
        assert_eq!(ok, chain(&[&["a", "b"]]));
        let err = apply_edit(&c, &EditAction::Step(StepOp::Merge { step: 1 })).unwrap_err();
        assert!(matches!(err, EditError::Bounds { op: "step/merge", .. }));
    }

    #[test]
    fn add_example_splices_fragment() {
        let c = chain(&[&["a"], &["d"]]);
        let frag = chain(&[&["b"], &["c"]]);
        let out = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::AddExample {
                fragment: frag,
                position: 1,
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["a"], &["b"], &["c"], &["d"]]));
    }

    #[test]
    fn instruction_edit_replaces_whole_step() {
        let c = chain(&[&["a"], &["b"]]);
        let out = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::InstructionEdit {
                step: 1,
                replacement: vec!["x".to_owned(), "y".to_owned()],
            }),
        )
        .unwrap();
        assert_eq!(out, chain(&[&["a"], &["x", "y"]]));
        let err = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::InstructionEdit {
                step: 0,
                replacement: vec![],
            }),
        )
        .unwrap_err();
        assert!(matches!(err, EditError::InvalidPayload(_)));
    }

    #[test]
    fn format_change_templates() {
        let c = chain(&[&["a", "b"], &["c"]]);
        let identity = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::FormatChange {
                template: TemplateId::Identity,
            }),
        )
        .unwrap();
        assert_eq!(identity, c);
        let numbered = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::FormatChange {
                template: TemplateId::NumberedSteps,
            }),
        )
        .unwrap();
        assert_eq!(
            numbered,
            chain(&[&["Step", "1:", "a", "b"], &["Step", "2:", "c"]])
        );
        let bullets = apply_edit(
            &c,
            &EditAction::Structure(StructureOp::FormatChange {
                template: TemplateId::Bullets,
            }),
        )
        .unwrap();
        assert_eq!(bullets, chain(&[&["-", "a", "b"], &["-", "c"]]));
    }

    #[test]
    fn apply_never_mutates_input() {
        let c = chain(&[&["a", "b"], &["c"]]);
        let snapshot = serde_json::to_string(&c).unwrap();
        let _ = apply_edit(&c, &EditAction::Step(StepOp::Reorder { from: 1, to: 0 })).unwrap();
        let _ = apply_edit(
            &c,
            &EditAction::Token(TokenOp::Delete {
                step: 0,
                position: 0,
            }),
        )
        .unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), snapshot);
    }

    #[test]
    fn action_serde_round_trip() {
        let actions = vec![
            EditAction::NoOp,
            EditAction::Token(TokenOp::Add {
                step: 1,
                position: 2,
                token: "t".to_owned(),
            }),
            EditAction::Step(StepOp::Reorder { from: 0, to: 2 }),
            EditAction::Structure(StructureOp::FormatChange {
                template: TemplateId::Bullets,
            }),
        ];
        for a in actions {
            let json = serde_json::to_string(&a).unwrap();
            let back: EditAction = serde_json::from_str(&json).unwrap();
            assert_eq!(a, back);
        }
    }
}
