//! Memo-free reference minimax. Deliberately kept independent of the
//! transposition-table solver: no memoization, no pruning, no shared
//! helpers beyond the game rules themselves.

use crate::game::{self, GameState};

/// Exact mover-relative value of `s` by plain recursive minimax over the
/// whole subtree. Exponential; intended for cross-checks on small
/// positions (full Tic-Tac-Toe, late-game Connect Four).
pub fn brute_minimax(s: &GameState) -> i8 {
    if let Some(outcome) = game::terminal_outcome(s) {
        return outcome.for_player(s.to_move());
    }
    let mut best = i8::MIN;
    for a in game::legal_actions(s) {
        let child = game::apply_action(s, a).expect("legal action");
        best = best.max(-brute_minimax(&child));
    }
    best
}
