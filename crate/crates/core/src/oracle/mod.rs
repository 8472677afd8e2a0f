//! Exact game-tree values: negamax with a transposition table, endgame
//! classification, reachable-state enumeration, and a memo-free reference
//! minimax for cross-checking.
//!
//! Values are always mover-relative: `+1` means the player to move wins
//! under optimal play. Distances use win-fast/lose-slow scoring (a winner
//! ends the game as early as possible, a loser and a drawn pair as late
//! as possible), which makes "provable within `k` plies" well defined.

mod brute;
mod cache;
mod enumerate;

pub use brute::brute_minimax;
pub use cache::{load_cache, save_cache};
pub use enumerate::enumerate_reachable;

use crate::game::{self, ActionId, GameState};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("solve budget exhausted ({0})")]
    BudgetExceeded(String),
    #[error("enumeration limit of {limit} states exceeded")]
    LimitExceeded { limit: usize },
    #[error("memo cache file is corrupt: {0}")]
    CorruptCache(String),
}

/// Node/depth limits for one solve call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveBudget {
    /// Maximum node expansions per `solve` call.
    pub max_nodes: u64,
    /// Optional ply horizon; lines that cannot be proven within it make
    /// the solve fail with `BudgetExceeded`.
    pub max_plies: Option<u16>,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget { max_nodes: 10_000_000, max_plies: None }
    }
}

impl SolveBudget {
    pub fn nodes(max_nodes: u64) -> SolveBudget {
        SolveBudget { max_nodes, max_plies: None }
    }
}

/// Result of an exact solve, from the perspective of the player to move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    /// -1, 0, or +1 for the player to move.
    pub value: i8,
    /// Every action achieving `value`, ascending. Empty only for a
    /// terminal input state.
    pub best_actions: Vec<ActionId>,
    /// Plies until the game ends under the win-fast/lose-slow convention.
    pub plies_to_end: Option<u16>,
}

enum Proof {
    /// Exact mover-relative value and distance.
    Proven(i8, u16),
    /// Could not be proven within the ply horizon.
    Unproven,
}

/// Transposition-table negamax solver. The memo stores only proven
/// (value, distance) facts keyed by the raw state (grid + mover), so it
/// can be reused across calls and shared snapshots never change results.
pub struct Solver {
    budget: SolveBudget,
    memo: HashMap<GameState, (i8, u16)>,
    nodes: u64,
}

impl Solver {
    pub fn new(budget: SolveBudget) -> Solver {
        Solver { budget, memo: HashMap::new(), nodes: 0 }
    }

    pub fn budget(&self) -> SolveBudget {
        self.budget
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Exact solve of `s`. Terminal states short-circuit to their
    /// outcome converted to the mover's perspective.
    pub fn solve(&mut self, s: &GameState) -> Result<SolveResult, OracleError> {
        self.solve_with_horizon(s, self.budget.max_plies)
    }

    /// True iff the exact value of `s` is provable with at most `k`
    /// remaining plies. An unprovable-within-`k` position is simply not
    /// an endgame; only the node budget raises an error.
    pub fn is_endgame(&mut self, s: &GameState, k: u16) -> Result<bool, OracleError> {
        if game::terminal_outcome(s).is_some() {
            return Ok(true);
        }
        self.nodes = 0;
        let horizon = k.min(s.capacity_left());
        match self.negamax(s, horizon)? {
            Proof::Proven(_, plies) => Ok(plies <= k),
            Proof::Unproven => Ok(false),
        }
    }

    fn solve_with_horizon(
        &mut self,
        s: &GameState,
        horizon: Option<u16>,
    ) -> Result<SolveResult, OracleError> {
        if let Some(outcome) = game::terminal_outcome(s) {
            return Ok(SolveResult {
                value: outcome.for_player(s.to_move()),
                best_actions: Vec::new(),
                plies_to_end: Some(0),
            });
        }
        self.nodes = 0;
        let depth = horizon.unwrap_or(u16::MAX).min(s.capacity_left());
        let (value, plies) = match self.negamax(s, depth)? {
            Proof::Proven(v, p) => (v, p),
            Proof::Unproven => {
                return Err(OracleError::BudgetExceeded(format!(
                    "no exact value within {depth} plies"
                )))
            }
        };
        let mut best_actions = Vec::new();
        for a in game::legal_actions(s) {
            let child = game::apply_action(s, a).expect("legal action");
            if let Proof::Proven(cv, _) = self.negamax(&child, depth - 1)? {
                if -cv == value {
                    best_actions.push(a);
                }
            }
        }
        debug_assert!(!best_actions.is_empty());
        Ok(SolveResult { value, best_actions, plies_to_end: Some(plies) })
    }

    fn negamax(&mut self, s: &GameState, depth_left: u16) -> Result<Proof, OracleError> {
        if let Some(outcome) = game::terminal_outcome(s) {
            return Ok(Proof::Proven(outcome.for_player(s.to_move()), 0));
        }
        if let Some(&(v, p)) = self.memo.get(s) {
            return Ok(Proof::Proven(v, p));
        }
        if depth_left == 0 {
            return Ok(Proof::Unproven);
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(OracleError::BudgetExceeded(format!(
                "{} node expansions",
                self.budget.max_nodes
            )));
        }

        let mut best: Option<(i8, u16)> = None;
        let mut any_unproven = false;
        for a in game::legal_actions(s) {
            let child = game::apply_action(s, a).expect("legal action");
            match self.negamax(&child, depth_left - 1)? {
                Proof::Proven(cv, cp) => {
                    let (v, p) = (-cv, cp + 1);
                    best = Some(match best {
                        None => (v, p),
                        Some((bv, _)) if v > bv => (v, p),
                        Some((bv, bp)) if v == bv => (bv, pick_plies(bv, bp, p)),
                        Some(b) => b,
                    });
                }
                Proof::Unproven => any_unproven = true,
            }
        }

        let proof = match best {
            // A proven win cannot be beaten, and any faster win would
            // also lie within the uniform ply horizon, so the distance
            // is exact even when some siblings are unproven.
            Some((1, p)) => Proof::Proven(1, p),
            Some(_) | None if any_unproven => Proof::Unproven,
            Some((v, p)) => Proof::Proven(v, p),
            None => unreachable!("non-terminal state has legal actions"),
        };
        if let Proof::Proven(v, p) = proof {
            self.memo.insert(s.clone(), (v, p));
        }
        Ok(proof)
    }
}

/// Win-fast (minimal plies), lose-slow and draw-slow (maximal plies).
fn pick_plies(value: i8, a: u16, b: u16) -> u16 {
    if value > 0 {
        a.min(b)
    } else {
        a.max(b)
    }
}

/// One-shot exact solve with a fresh memo table.
pub fn solve(s: &GameState, budget: SolveBudget) -> Result<SolveResult, OracleError> {
    Solver::new(budget).solve(s)
}

/// One-shot endgame check with a fresh memo table.
pub fn is_endgame(s: &GameState, k: u16, budget: SolveBudget) -> Result<bool, OracleError> {
    Solver::new(budget).is_endgame(s, k)
}
