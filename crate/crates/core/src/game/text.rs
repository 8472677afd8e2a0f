//! Text serialization of states for logs, fixtures, and the solve
//! command: row-major `.`/`X`/`O` characters joined by `/`, then a space
//! and the mover's piece, e.g. `"X.O/.X./... O"`. Row 0 is the top row.

use super::{Cell, GameError, GameId, GameState, Player};

pub fn format_state(s: &GameState) -> String {
    let (h, w) = s.game().dims();
    let mut out = String::with_capacity(h * (w + 1) + 2);
    for r in 0..h {
        if r > 0 {
            out.push('/');
        }
        for c in 0..w {
            out.push(match s.cells()[r * w + c] {
                Cell::Empty => '.',
                Cell::P1 => 'X',
                Cell::P2 => 'O',
            });
        }
    }
    out.push(' ');
    out.push(match s.to_move() {
        Player::P1 => 'X',
        Player::P2 => 'O',
    });
    out
}

/// Parse and validate a state string for `game`. Rejects wrong
/// dimensions, inconsistent piece counts, floating Connect Four pieces,
/// and positions where the player to move already owns a winning line.
pub fn parse_state(game: GameId, text: &str) -> Result<GameState, GameError> {
    let (h, w) = game.dims();
    let (board, mover) = text
        .rsplit_once(' ')
        .ok_or_else(|| GameError::Parse(format!("missing mover suffix in \"{text}\"")))?;
    let to_move = match mover.trim() {
        "X" => Player::P1,
        "O" => Player::P2,
        other => return Err(GameError::Parse(format!("bad mover \"{other}\", want X or O"))),
    };
    let rows: Vec<&str> = board.split('/').collect();
    if rows.len() != h {
        return Err(GameError::Parse(format!("expected {h} rows, got {}", rows.len())));
    }
    let mut cells = Vec::with_capacity(h * w);
    for (r, row) in rows.iter().enumerate() {
        let chars: Vec<char> = row.chars().collect();
        if chars.len() != w {
            return Err(GameError::Parse(format!(
                "row {r} has {} cells, expected {w}",
                chars.len()
            )));
        }
        for ch in chars {
            cells.push(match ch {
                '.' => Cell::Empty,
                'X' => Cell::P1,
                'O' => Cell::P2,
                other => return Err(GameError::Parse(format!("bad cell character '{other}'"))),
            });
        }
    }
    let ply = cells.iter().filter(|c| **c != Cell::Empty).count() as u16;
    let state = GameState { game, cells, to_move, ply };
    super::rules(game).validate(&state)?;
    Ok(state)
}
