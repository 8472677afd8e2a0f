//! Connect Four rules: 6x7 board, actions are columns, pieces fall to the
//! lowest empty row, four in a row in any direction wins.

use super::symmetry::{Dihedral, TransformId};
use super::{ActionId, Cell, GameError, GameId, GameState, Outcome, Player, Rules};

const HEIGHT: usize = 6;
const WIDTH: usize = 7;

pub struct ConnectFour;

impl ConnectFour {
    pub const fn new() -> ConnectFour {
        ConnectFour
    }

    /// Row a piece dropped in `col` lands on. Row 0 is the top.
    fn drop_row(s: &GameState, col: usize) -> Option<usize> {
        (0..HEIGHT).rev().find(|&r| s.cells()[r * WIDTH + col] == Cell::Empty)
    }

    fn has_line(s: &GameState, p: Player) -> bool {
        let piece = p.piece();
        let cell = |r: usize, c: usize| s.cells()[r * WIDTH + c];
        let dirs: [(usize, usize, isize, isize); 4] = [
            (HEIGHT, WIDTH - 3, 0, 1),      // horizontal
            (HEIGHT - 3, WIDTH, 1, 0),      // vertical
            (HEIGHT - 3, WIDTH - 3, 1, 1),  // diagonal down-right
            (HEIGHT - 3, WIDTH, 1, -1),     // diagonal down-left
        ];
        for (rmax, cmax, dr, dc) in dirs {
            for r in 0..rmax {
                for c in 0..cmax {
                    if dc < 0 && c < 3 {
                        continue;
                    }
                    if cell(r, c) != piece {
                        continue;
                    }
                    let hit = (1..4).all(|k| {
                        let rr = (r as isize + dr * k) as usize;
                        let cc = (c as isize + dc * k) as usize;
                        cell(rr, cc) == piece
                    });
                    if hit {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn line_winner(s: &GameState) -> Option<Player> {
        [Player::P1, Player::P2].into_iter().find(|p| Self::has_line(s, *p))
    }
}

impl Rules for ConnectFour {
    fn id(&self) -> GameId {
        GameId::C4
    }

    fn legal_actions(&self, s: &GameState) -> Vec<ActionId> {
        if self.terminal_outcome(s).is_some() {
            return Vec::new();
        }
        (0..WIDTH).filter(|&c| s.cells()[c] == Cell::Empty).collect()
    }

    fn apply_action(&self, s: &GameState, a: ActionId) -> Result<GameState, GameError> {
        if a >= WIDTH || self.terminal_outcome(s).is_some() {
            return Err(GameError::IllegalAction { action: a, state: s.key() });
        }
        let Some(row) = Self::drop_row(s, a) else {
            return Err(GameError::IllegalAction { action: a, state: s.key() });
        };
        let mut next = s.clone();
        next.cells[row * WIDTH + a] = s.to_move().piece();
        next.to_move = s.to_move().other();
        next.ply = s.ply() + 1;
        Ok(next)
    }

    fn terminal_outcome(&self, s: &GameState) -> Option<Outcome> {
        if let Some(p) = Self::line_winner(s) {
            return Some(Outcome { z: if p == Player::P1 { 1 } else { -1 } });
        }
        if (0..WIDTH).all(|c| s.cells()[c] != Cell::Empty) {
            return Some(Outcome { z: 0 });
        }
        None
    }

    fn symmetry_group(&self) -> Vec<TransformId> {
        // Gravity breaks every dihedral element except the horizontal
        // mirror, leaving {id, mirror} x {id, invert} minus identity: 3.
        vec![
            TransformId { dihedral: Dihedral::R0, invert: true },
            TransformId { dihedral: Dihedral::FlipH, invert: false },
            TransformId { dihedral: Dihedral::FlipH, invert: true },
        ]
    }

    fn validate(&self, s: &GameState) -> Result<(), GameError> {
        super::tictactoe::validate_common(s)?;
        for c in 0..WIDTH {
            let mut seen_piece = false;
            for r in 0..HEIGHT {
                match s.cells()[r * WIDTH + c] {
                    Cell::Empty if seen_piece => {
                        return Err(GameError::Parse(format!(
                            "floating piece above empty cell in column {c}"
                        )));
                    }
                    Cell::Empty => {}
                    _ => seen_piece = true,
                }
            }
        }
        if Self::has_line(s, Player::P1) && Self::has_line(s, Player::P2) {
            return Err(GameError::Parse("both players have four in a row".into()));
        }
        if Self::has_line(s, s.to_move()) {
            return Err(GameError::Parse(format!(
                "player to move already has four in a row: \"{}\"",
                s.key()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{apply_action, initial_state, legal_actions, terminal_outcome};
    use super::*;

    #[test]
    fn pieces_fall_to_the_bottom() {
        let s = initial_state(GameId::C4);
        let s = apply_action(&s, 0).unwrap();
        assert_eq!(s.cell(5, 0), Cell::P1);
        let s = apply_action(&s, 0).unwrap();
        assert_eq!(s.cell(4, 0), Cell::P2);
        assert_eq!(s.ply(), 2);
    }

    #[test]
    fn full_column_is_excluded() {
        let mut s = initial_state(GameId::C4);
        for _ in 0..6 {
            s = apply_action(&s, 3).unwrap();
        }
        assert_eq!(legal_actions(&s), vec![0, 1, 2, 4, 5, 6]);
        assert!(apply_action(&s, 3).is_err());
    }

    #[test]
    fn vertical_win() {
        let mut s = initial_state(GameId::C4);
        for _ in 0..3 {
            s = apply_action(&s, 0).unwrap(); // P1
            s = apply_action(&s, 1).unwrap(); // P2
        }
        s = apply_action(&s, 0).unwrap(); // P1 completes column 0
        assert_eq!(terminal_outcome(&s), Some(Outcome { z: 1 }));
        assert!(legal_actions(&s).is_empty());
    }

    #[test]
    fn diagonal_win() {
        // Build an up-right diagonal for P1 via columns 0..3.
        let moves = [0, 1, 1, 2, 2, 3, 2, 3, 3, 6, 3];
        let mut s = initial_state(GameId::C4);
        for m in moves {
            assert_eq!(terminal_outcome(&s), None);
            s = apply_action(&s, m).unwrap();
        }
        assert_eq!(terminal_outcome(&s), Some(Outcome { z: 1 }));
    }

    #[test]
    fn random_playouts_respect_gravity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let mut s = initial_state(GameId::C4);
            loop {
                // no floating pieces anywhere along the playout
                for c in 0..WIDTH {
                    for r in 1..HEIGHT {
                        if s.cell(r, c) == Cell::Empty {
                            assert_eq!(s.cell(r - 1, c), Cell::Empty);
                        }
                    }
                }
                let acts = legal_actions(&s);
                if acts.is_empty() {
                    break;
                }
                s = apply_action(&s, acts[rng.gen_range(0..acts.len())]).unwrap();
            }
        }
    }
}
