//! Breadth-first enumeration of the reachable state space.

use super::OracleError;
use crate::game::{self, GameId, GameState};
use std::collections::{HashSet, VecDeque};

/// All states reachable from the initial position, in breadth-first
/// discovery order, deduplicated on exact state identity (no symmetry
/// folding). Terminal states are included but not expanded. Errors with
/// `LimitExceeded` as soon as more than `limit` states are found, so a
/// Connect Four enumeration fails fast instead of exhausting memory.
pub fn enumerate_reachable(game: GameId, limit: usize) -> Result<Vec<GameState>, OracleError> {
    let initial = game::initial_state(game);
    let mut seen: HashSet<GameState> = HashSet::new();
    let mut order: Vec<GameState> = Vec::new();
    let mut queue: VecDeque<GameState> = VecDeque::new();
    seen.insert(initial.clone());
    order.push(initial.clone());
    queue.push_back(initial);
    while let Some(s) = queue.pop_front() {
        if game::is_terminal(&s) {
            continue;
        }
        for a in game::legal_actions(&s) {
            let child = game::apply_action(&s, a).expect("legal action");
            if seen.insert(child.clone()) {
                if seen.len() > limit {
                    return Err(OracleError::LimitExceeded { limit });
                }
                order.push(child.clone());
                queue.push_back(child);
            }
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ttt3_reachable_and_terminal_counts() {
        let states = enumerate_reachable(GameId::Ttt3, 10_000).unwrap();
        assert_eq!(states.len(), 5_478);
        let terminal = states.iter().filter(|s| game::is_terminal(s)).count();
        assert_eq!(terminal, 958);
        assert_eq!(states.len() - terminal, 4_520);
    }

    #[test]
    fn ttt3_depth_one_layer_has_nine_states() {
        let states = enumerate_reachable(GameId::Ttt3, 10_000).unwrap();
        assert_eq!(states.iter().filter(|s| s.ply() == 1).count(), 9);
    }

    #[test]
    fn c4_exceeds_any_desk_scale_limit() {
        let err = enumerate_reachable(GameId::C4, 200_000).unwrap_err();
        assert_eq!(err, OracleError::LimitExceeded { limit: 200_000 });
    }
}
