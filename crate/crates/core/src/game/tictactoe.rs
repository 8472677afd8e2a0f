//! Tic-Tac-Toe rules for the 3x3 and 4x4 boards. The winning line length
//! equals the board side (3-in-a-row on 3x3, 4-in-a-row on 4x4).

use super::symmetry::{Dihedral, TransformId};
use super::{ActionId, Cell, GameError, GameId, GameState, Outcome, Player, Rules};

pub struct TicTacToe {
    game: GameId,
    size: usize,
}

impl TicTacToe {
    pub const fn new(game: GameId) -> TicTacToe {
        let size = match game {
            GameId::Ttt3 => 3,
            GameId::Ttt4 => 4,
            GameId::C4 => panic!("not a tic-tac-toe variant"),
        };
        TicTacToe { game, size }
    }

    fn has_line(&self, s: &GameState, p: Player) -> bool {
        let n = self.size;
        let piece = p.piece();
        let cell = |r: usize, c: usize| s.cells()[r * n + c];
        (0..n).any(|r| (0..n).all(|c| cell(r, c) == piece))
            || (0..n).any(|c| (0..n).all(|r| cell(r, c) == piece))
            || (0..n).all(|i| cell(i, i) == piece)
            || (0..n).all(|i| cell(i, n - 1 - i) == piece)
    }

    /// The player owning a complete line, if any.
    fn line_winner(&self, s: &GameState) -> Option<Player> {
        [Player::P1, Player::P2].into_iter().find(|p| self.has_line(s, *p))
    }
}

impl Rules for TicTacToe {
    fn id(&self) -> GameId {
        self.game
    }

    fn legal_actions(&self, s: &GameState) -> Vec<ActionId> {
        if self.terminal_outcome(s).is_some() {
            return Vec::new();
        }
        s.cells()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Empty)
            .map(|(i, _)| i)
            .collect()
    }

    fn apply_action(&self, s: &GameState, a: ActionId) -> Result<GameState, GameError> {
        if a >= self.game.action_count()
            || s.cells()[a] != Cell::Empty
            || self.terminal_outcome(s).is_some()
        {
            return Err(GameError::IllegalAction { action: a, state: s.key() });
        }
        let mut next = s.clone();
        next.cells[a] = s.to_move().piece();
        next.to_move = s.to_move().other();
        next.ply = s.ply() + 1;
        Ok(next)
    }

    fn terminal_outcome(&self, s: &GameState) -> Option<Outcome> {
        if let Some(p) = self.line_winner(s) {
            return Some(Outcome { z: if p == Player::P1 { 1 } else { -1 } });
        }
        if s.cells().iter().all(|c| *c != Cell::Empty) {
            return Some(Outcome { z: 0 });
        }
        None
    }

    fn symmetry_group(&self) -> Vec<TransformId> {
        // All of D4 crossed with inversion, minus the identity: 15.
        let mut group = Vec::with_capacity(15);
        for dihedral in Dihedral::ALL {
            for invert in [false, true] {
                let t = TransformId { dihedral, invert };
                if !t.is_identity() {
                    group.push(t);
                }
            }
        }
        group
    }

    fn validate(&self, s: &GameState) -> Result<(), GameError> {
        validate_common(s)?;
        if self.has_line(s, Player::P1) && self.has_line(s, Player::P2) {
            return Err(GameError::Parse("both players have completed lines".into()));
        }
        // The mover cannot already own a line: they would have won on
        // their previous turn and play would have stopped.
        if self.has_line(s, s.to_move()) {
            return Err(GameError::Parse(format!(
                "player to move already has a completed line: \"{}\"",
                s.key()
            )));
        }
        Ok(())
    }
}

/// Piece-count and ply invariants shared by all games. Inversion images
/// of legal states are accepted: the side with fewer pieces must be the
/// one to move, but either player may have moved first.
pub(super) fn validate_common(s: &GameState) -> Result<(), GameError> {
    let n1 = s.cells().iter().filter(|c| **c == Cell::P1).count();
    let n2 = s.cells().iter().filter(|c| **c == Cell::P2).count();
    let diff = n1 as i64 - n2 as i64;
    if diff.abs() > 1 {
        return Err(GameError::Parse(format!("piece counts {n1} vs {n2} differ by more than one")));
    }
    if diff == 1 && s.to_move() == Player::P1 {
        return Err(GameError::Parse("P1 to move but P1 has the extra piece".into()));
    }
    if diff == -1 && s.to_move() == Player::P2 {
        return Err(GameError::Parse("P2 to move but P2 has the extra piece".into()));
    }
    if s.ply() as usize != n1 + n2 {
        return Err(GameError::Parse(format!(
            "ply {} does not match piece count {}",
            s.ply(),
            n1 + n2
        )));
    }
    Ok(())
}
