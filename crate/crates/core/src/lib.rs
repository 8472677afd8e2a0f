//! Self-play tree-search training on three solved board games, plus the
//! exact-solver and evaluation tooling needed to measure how well the
//! learned policy and value heads actually agree with the ground truth.
//!
//! Crate layout:
//!
//! - [`game`] — rules, state representation, symmetry transforms, and
//!   tensor encoding for Tic-Tac-Toe (3x3 and 4x4) and Connect Four.
//!   Each game lives behind the [`game::Rules`] trait and is looked up
//!   by name through the registry in that module.
//! - [`oracle`] — exact negamax solver with a transposition table, a
//!   memo-free reference minimax, and reachable-state enumeration.
//! - [`neural`] — the two-headed residual network, its loss, exact
//!   gradients, SGD, and binary checkpointing. No external ML runtime.
//! - [`search`] — PUCT Monte-Carlo tree search and the visit-count
//!   policy.
//! - [`selfplay`] — trajectory generation (with optional value-informed
//!   selection), value-informed symmetric augmentation, the replay
//!   buffer, and the training loop.
//! - [`analysis`] — exhaustive value-error evaluation, policy-value
//!   misalignment, oracle match play, and adversarial state detection.

pub mod analysis;
pub mod game;
pub mod neural;
pub mod oracle;
pub mod parallel;
pub mod rng;
pub mod search;
pub mod selfplay;
