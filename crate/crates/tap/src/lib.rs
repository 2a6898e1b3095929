//! Optimizes discrete token-sequence reasoning chains by planning over a
//! learned latent world model: an encoder maps (task, chain) states to a
//! latent space, a residual transition model simulates the effect of
//! multi-scale chain edits, and a reward head scores rollouts so the
//! planner can pick edits without querying the real environment at every
//! step. A tabular-MDP harness validates the planner's error bounds
//! empirically.

pub mod chain;
pub mod neural;
