//! Game rules, state representation, symmetry transforms, and tensor
//! encoding for the three supported games.
//!
//! Each game variant implements the [`Rules`] trait and is registered as
//! a static; callers select one at runtime by [`GameId`] or by its
//! registry name (`ttt3`, `ttt4`, `c4`). The free functions in this
//! module mirror the trait surface and dispatch through the registry, so
//! most code never touches a concrete rules type.

mod connect4;
mod encoding;
mod symmetry;
mod text;
mod tictactoe;

pub use connect4::ConnectFour;
pub use encoding::{encode, StateEncoding};
pub use symmetry::{
    apply_transform, symmetry_group, transform_action_map, Dihedral, TransformId,
};
pub use text::{format_state, parse_state};
pub use tictactoe::TicTacToe;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index into a game's action space: cell index (`row * W + col`) for the
/// Tic-Tac-Toe boards, column index for Connect Four.
pub type ActionId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("illegal action {action} in state \"{state}\"")]
    IllegalAction { action: ActionId, state: String },
    #[error("unparseable state string: {0}")]
    Parse(String),
}

/// The three supported game variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameId {
    Ttt3,
    Ttt4,
    C4,
}

impl GameId {
    pub fn name(self) -> &'static str {
        match self {
            GameId::Ttt3 => "ttt3",
            GameId::Ttt4 => "ttt4",
            GameId::C4 => "c4",
        }
    }

    /// Board dimensions (height, width).
    pub fn dims(self) -> (usize, usize) {
        match self {
            GameId::Ttt3 => (3, 3),
            GameId::Ttt4 => (4, 4),
            GameId::C4 => (6, 7),
        }
    }

    pub fn action_count(self) -> usize {
        match self {
            GameId::Ttt3 => 9,
            GameId::Ttt4 => 16,
            GameId::C4 => 7,
        }
    }

    pub fn from_name(name: &str) -> Option<GameId> {
        match name {
            "ttt3" => Some(GameId::Ttt3),
            "ttt4" => Some(GameId::Ttt4),
            "c4" => Some(GameId::C4),
            _ => None,
        }
    }
}

impl std::fmt::Display for GameId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    fn piece(self) -> Cell {
        match self {
            Player::P1 => Cell::P1,
            Player::P2 => Cell::P2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    P1,
    P2,
}

impl Cell {
    fn swapped(self) -> Cell {
        match self {
            Cell::Empty => Cell::Empty,
            Cell::P1 => Cell::P2,
            Cell::P2 => Cell::P1,
        }
    }
}

/// Terminal score, always expressed from P1's fixed perspective:
/// `z = +1` iff P1 owns the winning line, `-1` iff P2 does, `0` for a
/// draw. Perspective conversion happens at the call sites that need it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub z: i8,
}

impl Outcome {
    /// The score seen by `player`.
    pub fn for_player(self, player: Player) -> i8 {
        match player {
            Player::P1 => self.z,
            Player::P2 => -self.z,
        }
    }
}

/// Immutable position of one game. All mutation goes through
/// [`apply_action`] / [`apply_transform`], which maintain the state
/// invariants (piece-count balance, gravity, ply = piece count).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    game: GameId,
    cells: Vec<Cell>,
    to_move: Player,
    ply: u16,
}

impl GameState {
    fn empty(game: GameId) -> GameState {
        let (h, w) = game.dims();
        GameState { game, cells: vec![Cell::Empty; h * w], to_move: Player::P1, ply: 0 }
    }

    pub fn game(&self) -> GameId {
        self.game
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        let (_, w) = self.game.dims();
        self.cells[row * w + col]
    }

    pub fn to_move(&self) -> Player {
        self.to_move
    }

    pub fn ply(&self) -> u16 {
        self.ply
    }

    /// Number of empty cells left; an upper bound on remaining plies.
    pub fn capacity_left(&self) -> u16 {
        self.cells.iter().filter(|c| **c == Cell::Empty).count() as u16
    }

    /// Canonical text form, e.g. `"X.O/.X./... O"`. See [`format_state`].
    pub fn key(&self) -> String {
        format_state(self)
    }
}

/// Behavior of one game variant. Implementations are stateless and
/// registered as statics; see [`rules`] and [`by_name`].
pub trait Rules: Send + Sync {
    fn id(&self) -> GameId;

    /// Legal actions of `s` in ascending order; empty iff `s` is terminal.
    fn legal_actions(&self, s: &GameState) -> Vec<ActionId>;

    fn apply_action(&self, s: &GameState, a: ActionId) -> Result<GameState, GameError>;

    /// `Some` iff `s` is terminal (completed line or full board).
    fn terminal_outcome(&self, s: &GameState) -> Option<Outcome>;

    /// The game's non-identity symmetry transforms, in a fixed order.
    fn symmetry_group(&self) -> Vec<TransformId>;

    /// Check the state invariants a freshly parsed state must satisfy.
    fn validate(&self, s: &GameState) -> Result<(), GameError>;
}

static TTT3_RULES: TicTacToe = TicTacToe::new(GameId::Ttt3);
static TTT4_RULES: TicTacToe = TicTacToe::new(GameId::Ttt4);
static C4_RULES: ConnectFour = ConnectFour::new();

/// Look up the rules for a game id.
pub fn rules(game: GameId) -> &'static dyn Rules {
    match game {
        GameId::Ttt3 => &TTT3_RULES,
        GameId::Ttt4 => &TTT4_RULES,
        GameId::C4 => &C4_RULES,
    }
}

/// Look up rules by registry name (`ttt3`, `ttt4`, `c4`).
pub fn by_name(name: &str) -> Option<&'static dyn Rules> {
    GameId::from_name(name).map(rules)
}

/// All registered games.
pub fn all_rules() -> [&'static dyn Rules; 3] {
    [&TTT3_RULES, &TTT4_RULES, &C4_RULES]
}

/// Empty board, P1 to move.
pub fn initial_state(game: GameId) -> GameState {
    GameState::empty(game)
}

pub fn legal_actions(s: &GameState) -> Vec<ActionId> {
    rules(s.game).legal_actions(s)
}

pub fn apply_action(s: &GameState, a: ActionId) -> Result<GameState, GameError> {
    rules(s.game).apply_action(s, a)
}

pub fn terminal_outcome(s: &GameState) -> Option<Outcome> {
    rules(s.game).terminal_outcome(s)
}

pub fn is_terminal(s: &GameState) -> bool {
    terminal_outcome(s).is_some()
}

/// Legality mask over the full action space.
pub fn legal_mask(s: &GameState) -> Vec<bool> {
    let mut mask = vec![false; s.game.action_count()];
    for a in legal_actions(s) {
        mask[a] = true;
    }
    mask
}
