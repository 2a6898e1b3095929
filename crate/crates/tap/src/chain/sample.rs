//! Candidate-action generation: exhaustive enumeration for tiny instances
//! and seeded two-level sampling for planning.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::edit::{EditAction, StepOp, StructureOp, TemplateId, TokenOp};
use super::ReasoningChain;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("action count {count} exceeds max_enumeration {limit}")]
    Capacity { count: u128, limit: usize },
}

/// Relative sampling weight of each edit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleWeights {
    pub token: f64,
    pub step: f64,
    pub structure: f64,
}

impl Default for ScaleWeights {
    fn default() -> Self {
        Self {
            token: 0.5,
            step: 0.3,
            structure: 0.2,
        }
    }
}

impl ScaleWeights {
    pub fn token_only() -> Self {
        Self {
            token: 1.0,
            step: 0.0,
            structure: 0.0,
        }
    }
}

/// Registry of structure-level edit material: example fragments that
/// `AddExample` may splice in, whole-step replacements for
/// `InstructionEdit`, and the `FormatChange` templates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureConfig {
    pub example_fragments: Vec<ReasoningChain>,
    pub instruction_replacements: Vec<Vec<String>>,
    pub templates: Vec<TemplateId>,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            example_fragments: Vec::new(),
            instruction_replacements: Vec::new(),
            templates: TemplateId::ALL.to_vec(),
        }
    }
}

impl StructureConfig {
    pub fn none() -> Self {
        Self {
            example_fragments: Vec::new(),
            instruction_replacements: Vec::new(),
            templates: Vec::new(),
        }
    }
}

/// Limits for exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnumConfig {
    pub max_enumeration: usize,
    pub structure: StructureConfig,
}

impl Default for EnumConfig {
    fn default() -> Self {
        Self {
            max_enumeration: 100_000,
            structure: StructureConfig::default(),
        }
    }
}

/// Everything `sample_candidates` needs besides the chain itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub vocab: Vec<String>,
    pub weights: ScaleWeights,
    pub structure: StructureConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            vocab: Vec::new(),
            weights: ScaleWeights::default(),
            structure: StructureConfig::default(),
        }
    }
}

// Legal-action counts per scale, used for capacity checks and for uniform
// index-based sampling.

fn count_token(chain: &ReasoningChain, vocab_len: usize) -> u128 {
    let v = vocab_len as u128;
    if chain.is_empty() {
        return v; // Add(0, 0, tok) bootstraps the first step
    }
    let total: u128 = chain.total_tokens() as u128;
    let adds: u128 = chain
        .steps()
        .iter()
        .map(|s| (s.len() as u128 + 1) * v)
        .sum();
    adds + total + total * v
}

fn count_step(chain: &ReasoningChain) -> u128 {
    let n = chain.n_steps() as u128;
    let reorders = if n >= 2 { n * (n - 1) } else { 0 };
    let splits: u128 = chain
        .steps()
        .iter()
        .map(|s| (s.len() as u128).saturating_sub(1))
        .sum();
    let merges = n.saturating_sub(1);
    reorders + splits + merges
}

fn count_structure(chain: &ReasoningChain, cfg: &StructureConfig) -> u128 {
    let n = chain.n_steps() as u128;
    let add_examples = cfg.example_fragments.len() as u128 * (n + 1);
    let instruction_edits = cfg.instruction_replacements.len() as u128 * n;
    let formats = cfg.templates.len() as u128;
    add_examples + instruction_edits + formats
}

fn decode_token(chain: &ReasoningChain, vocab: &[String], mut u: u128) -> EditAction {
    let v = vocab.len() as u128;
    if chain.is_empty() {
        return EditAction::Token(TokenOp::Add {
            step: 0,
            position: 0,
            token: vocab[u as usize].clone(),
        });
    }
    for (s, step) in chain.steps().iter().enumerate() {
        let slots = (step.len() as u128 + 1) * v;
        if u < slots {
            return EditAction::Token(TokenOp::Add {
                step: s,
                position: (u / v) as usize,
                token: vocab[(u % v) as usize].clone(),
            });
        }
        u -= slots;
    }
    for (s, step) in chain.steps().iter().enumerate() {
        let slots = step.len() as u128;
        if u < slots {
            return EditAction::Token(TokenOp::Delete {
                step: s,
                position: u as usize,
            });
        }
        u -= slots;
    }
    for (s, step) in chain.steps().iter().enumerate() {
        let slots = step.len() as u128 * v;
        if u < slots {
            return EditAction::Token(TokenOp::Replace {
                step: s,
                position: (u / v) as usize,
                token: vocab[(u % v) as usize].clone(),
            });
        }
        u -= slots;
    }
    unreachable!("token action index out of range");
}

fn decode_step(chain: &ReasoningChain, mut u: u128) -> EditAction {
    let n = chain.n_steps() as u128;
    let reorders = if n >= 2 { n * (n - 1) } else { 0 };
    if u < reorders {
        let from = (u / (n - 1)) as usize;
        let r = (u % (n - 1)) as usize;
        let to = if r < from { r } else { r + 1 };
        return EditAction::Step(StepOp::Reorder { from, to });
    }
    u -= reorders;
    for (s, step) in chain.steps().iter().enumerate() {
        let slots = (step.len() as u128).saturating_sub(1);
        if u < slots {
            return EditAction::Step(StepOp::Split {
                step: s,
                position: u as usize + 1,
            });
        }
        u -= slots;
    }
    EditAction::Step(StepOp::Merge { step: u as usize })
}

fn decode_structure(chain: &ReasoningChain, cfg: &StructureConfig, mut u: u128) -> EditAction {
    let n = chain.n_steps() as u128;
    let add_examples = cfg.example_fragments.len() as u128 * (n + 1);
    if u < add_examples {
        let frag = (u / (n + 1)) as usize;
        let position = (u % (n + 1)) as usize;
        return EditAction::Structure(StructureOp::AddExample {
            fragment: cfg.example_fragments[frag].clone(),
            position,
        });
    }
    u -= add_examples;
    let instruction_edits = cfg.instruction_replacements.len() as u128 * n;
    if u < instruction_edits {
        let rep = (u / n) as usize;
        let step = (u % n) as usize;
        return EditAction::Structure(StructureOp::InstructionEdit {
            step,
            replacement: cfg.instruction_replacements[rep].clone(),
        });
    }
    u -= instruction_edits;
    EditAction::Structure(StructureOp::FormatChange {
        template: cfg.templates[u as usize],
    })
}

/// Returns every legal action for `chain` in a fixed deterministic order:
/// NoOp first, then token ops (add, delete, replace), step ops (reorder,
/// split, merge), and structure ops per the registry. `Add` and `Replace`
/// range over `vocab` in order.
pub fn enumerate_actions(
    chain: &ReasoningChain,
    vocab: &[String],
    cfg: &EnumConfig,
) -> Result<Vec<EditAction>, ActionError> {
    let count = 1
        + count_token(chain, vocab.len())
        + count_step(chain)
        + count_structure(chain, &cfg.structure);
    if count > cfg.max_enumeration as u128 {
        return Err(ActionError::Capacity {
            count,
            limit: cfg.max_enumeration,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    out.push(EditAction::NoOp);
    for u in 0..count_token(chain, vocab.len()) {
        out.push(decode_token(chain, vocab, u));
    }
    for u in 0..count_step(chain) {
        out.push(decode_step(chain, u));
    }
    for u in 0..count_structure(chain, &cfg.structure) {
        out.push(decode_structure(chain, &cfg.structure, u));
    }
    Ok(out)
}

const SAMPLE_RETRIES: usize = 64;

/// Draws `k` legal actions for `chain`. The first element is always NoOp;
/// the remaining `k - 1` are drawn by sampling a scale according to
/// `weights` and then an op uniformly over that scale's legal actions.
/// A scale with no legal actions is resampled; if every weighted scale is
/// empty the draw falls back to NoOp. Duplicates are allowed.
pub fn sample_candidates<R: Rng>(
    chain: &ReasoningChain,
    k: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Vec<EditAction> {
    assert!(k >= 1, "k must be at least 1");
    let mut out = Vec::with_capacity(k);
    out.push(EditAction::NoOp);
    if k == 1 {
        return out;
    }
    let counts = [
        count_token(chain, cfg.vocab.len()),
        count_step(chain),
        count_structure(chain, &cfg.structure),
    ];
    let weights = [cfg.weights.token, cfg.weights.step, cfg.weights.structure];
    for _ in 1..k {
        out.push(sample_one(chain, cfg, &counts, &weights, rng));
    }
    out
}

fn sample_one<R: Rng>(
    chain: &ReasoningChain,
    cfg: &SamplerConfig,
    counts: &[u128; 3],
    weights: &[f64; 3],
    rng: &mut R,
) -> EditAction {
    let total_weight: f64 = weights
        .iter()
        .zip(counts)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, _)| w)
        .sum();
    if total_weight <= 0.0 {
        return EditAction::NoOp;
    }
    for _ in 0..SAMPLE_RETRIES {
        let mut pick = rng.random_range(0.0..total_weight);
        let mut scale = usize::MAX;
        for (i, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            if pick < *w {
                scale = i;
                break;
            }
            pick -= w;
        }
        if scale == usize::MAX {
            scale = weights.iter().rposition(|w| *w > 0.0).unwrap();
        }
        if counts[scale] == 0 {
            continue;
        }
        let u = rng.random_range(0..counts[scale] as u64) as u128;
        return match scale {
            0 => decode_token(chain, &cfg.vocab, u),
            1 => decode_step(chain, u),
            _ => decode_structure(chain, &cfg.structure, u),
        };
    }
    EditAction::NoOp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::apply_edit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(steps: &[&[&str]]) -> ReasoningChain {
        ReasoningChain::from_steps(steps)
    }

    fn vocab(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| (*w).to_owned()).collect()
    }

    fn no_structure() -> EnumConfig {
        EnumConfig {
            max_enumeration: 100_000,
            structure: StructureConfig::none(),
        }
    }

    #[test]
    fn hand_count_single_step_chain() {
        // chain [["a"]], vocab [a, b]: NoOp + 4 adds (2 positions x 2 tokens)
        // + 1 delete + 2 replaces + no step ops = 8 actions.
        let actions =
            enumerate_actions(&chain(&[&["a"]]), &vocab(&["a", "b"]), &no_structure()).unwrap();
        assert_eq!(actions.len(), 8);
        assert_eq!(actions[0], EditAction::NoOp);
        let adds = actions
            .iter()
            .filter(|a| matches!(a, EditAction::Token(TokenOp::Add { .. })))
            .count();
        let deletes = actions
            .iter()
            .filter(|a| matches!(a, EditAction::Token(TokenOp::Delete { .. })))
            .count();
        let replaces = actions
            .iter()
            .filter(|a| matches!(a, EditAction::Token(TokenOp::Replace { .. })))
            .count();
        assert_eq!((adds, deletes, replaces), (4, 1, 2));
        assert!(!actions.iter().any(|a| matches!(a, EditAction::Step(_))));
    }

    #[test]
    fn empty_chain_enumeration() {
        let actions =
            enumerate_actions(&ReasoningChain::empty(), &vocab(&["a"]), &no_structure()).unwrap();
        assert_eq!(
            actions,
            vec![
                EditAction::NoOp,
                EditAction::Token(TokenOp::Add {
                    step: 0,
                    position: 0,
                    token: "a".to_owned()
                }),
            ]
        );
    }

    #[test]
    fn enumeration_is_deterministic() {
        let c = chain(&[&["a", "b"], &["c"]]);
        let v = vocab(&["a", "b", "c"]);
        let cfg = EnumConfig::default();
        assert_eq!(
            enumerate_actions(&c, &v, &cfg).unwrap(),
            enumerate_actions(&c, &v, &cfg).unwrap()
        );
    }

    #[test]
    fn capacity_error() {
        let c = chain(&[&["a", "b", "c", "d"]]);
        let cfg = EnumConfig {
            max_enumeration: 3,
            structure: StructureConfig::none(),
        };
        let err = enumerate_actions(&c, &vocab(&["a"]), &cfg).unwrap_err();
        assert!(matches!(err, ActionError::Capacity { .. }));
    }

    #[test]
    fn every_enumerated_action_applies() {
        let c = chain(&[&["a", "b"], &["c"], &["d", "e", "f"]]);
        let cfg = EnumConfig {
            max_enumeration: 100_000,
            structure: StructureConfig {
                example_fragments: vec![chain(&[&["x"]])],
                instruction_replacements: vec![vec!["y".to_owned()]],
                templates: TemplateId::ALL.to_vec(),
            },
        };
        let actions = enumerate_actions(&c, &vocab(&["a", "z"]), &cfg).unwrap();
        for a in &actions {
            apply_edit(&c, a).unwrap_or_else(|e| panic!("{a:?} failed: {e}"));
        }
    }

    #[test]
    fn k1_returns_noop_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let got = sample_candidates(
            &chain(&[&["a"]]),
            1,
            &SamplerConfig::default(),
            &mut rng,
        );
        assert_eq!(got, vec![EditAction::NoOp]);
    }

    #[test]
    fn same_seed_same_candidates() {
        let c = chain(&[&["a", "b"], &["c"]]);
        let cfg = SamplerConfig {
            vocab: vocab(&["a", "b"]),
            ..SamplerConfig::default()
        };
        let a = sample_candidates(&c, 12, &cfg, &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_candidates(&c, 12, &cfg, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn sampled_actions_apply_cleanly() {
        let c = chain(&[&["a", "b"], &["c"], &["d"]]);
        let cfg = SamplerConfig {
            vocab: vocab(&["a", "b", "q"]),
            ..SamplerConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let got = sample_candidates(&c, 10, &cfg, &mut rng);
        assert_eq!(got.len(), 10);
        assert_eq!(got[0], EditAction::NoOp);
        for a in &got {
            apply_edit(&c, a).unwrap_or_else(|e| panic!("{a:?} failed: {e}"));
        }
    }

    #[test]
    fn token_only_weights_never_emit_other_scales() {
        let c = chain(&[&["a", "b"], &["c"], &["d"]]);
        let cfg = SamplerConfig {
            vocab: vocab(&["a", "b"]),
            weights: ScaleWeights::token_only(),
            structure: StructureConfig::default(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            for a in sample_candidates(&c, 8, &cfg, &mut rng) {
                assert!(
                    matches!(a, EditAction::NoOp | EditAction::Token(_)),
                    "unexpected scale: {a:?}"
                );
            }
        }
    }

    #[test]
    fn empty_everything_falls_back_to_noop() {
        let cfg = SamplerConfig {
            vocab: Vec::new(),
            weights: ScaleWeights::default(),
            structure: StructureConfig::none(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let got = sample_candidates(&ReasoningChain::empty(), 4, &cfg, &mut rng);
        assert!(got.iter().all(|a| *a == EditAction::NoOp));
    }
}
