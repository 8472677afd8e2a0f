//! Board symmetries: the dihedral group of the square (rotations and
//! reflections), plus piece inversion (swap both players' pieces and the
//! turn). Inversion negates the P1-fixed outcome of a position.

use super::{ActionId, Cell, GameId, GameState};

/// Elements of the dihedral group D4, acting on board cells. On the
/// non-square Connect Four board only `R0` and `FlipH` are usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dihedral {
    R0,
    R90,
    R180,
    R270,
    FlipH,
    FlipV,
    FlipMain,
    FlipAnti,
}

impl Dihedral {
    pub const ALL: [Dihedral; 8] = [
        Dihedral::R0,
        Dihedral::R90,
        Dihedral::R180,
        Dihedral::R270,
        Dihedral::FlipH,
        Dihedral::FlipV,
        Dihedral::FlipMain,
        Dihedral::FlipAnti,
    ];

    /// Destination of source cell `(r, c)` on an `h x w` board. Rotations
    /// are clockwise; `FlipH` mirrors columns, `FlipV` mirrors rows,
    /// `FlipMain`/`FlipAnti` reflect across the two diagonals.
    pub fn map(self, r: usize, c: usize, h: usize, w: usize) -> (usize, usize) {
        debug_assert!(self.fits(h, w), "{self:?} does not preserve a {h}x{w} board");
        match self {
            Dihedral::R0 => (r, c),
            Dihedral::R90 => (c, h - 1 - r),
            Dihedral::R180 => (h - 1 - r, w - 1 - c),
            Dihedral::R270 => (w - 1 - c, r),
            Dihedral::FlipH => (r, w - 1 - c),
            Dihedral::FlipV => (h - 1 - r, c),
            Dihedral::FlipMain => (c, r),
            Dihedral::FlipAnti => (w - 1 - c, h - 1 - r),
        }
    }

    /// Whether this element maps an `h x w` board onto itself.
    pub fn fits(self, h: usize, w: usize) -> bool {
        h == w || matches!(self, Dihedral::R0 | Dihedral::R180 | Dihedral::FlipH | Dihedral::FlipV)
    }

    pub fn inverse(self) -> Dihedral {
        match self {
            Dihedral::R90 => Dihedral::R270,
            Dihedral::R270 => Dihedral::R90,
            other => other,
        }
    }
}

/// A symmetry transform: a spatial dihedral element plus an optional
/// piece/turn inversion. The identity is `(R0, false)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransformId {
    pub dihedral: Dihedral,
    pub invert: bool,
}

impl TransformId {
    pub const IDENTITY: TransformId = TransformId { dihedral: Dihedral::R0, invert: false };

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    /// Inverse transform; inversion is an involution.
    pub fn inverse(self) -> TransformId {
        TransformId { dihedral: self.dihedral.inverse(), invert: self.invert }
    }
}

/// The game's non-identity symmetry transforms, in a fixed order:
/// 15 for the square boards, 3 for Connect Four.
pub fn symmetry_group(game: GameId) -> Vec<TransformId> {
    super::rules(game).symmetry_group()
}

/// Apply `t` to a state: permute cells by the spatial map and, if
/// `t.invert`, swap piece colors and the player to move.
pub fn apply_transform(s: &GameState, t: TransformId) -> GameState {
    let (h, w) = s.game().dims();
    assert!(t.dihedral.fits(h, w), "transform does not preserve the board");
    let mut cells = vec![Cell::Empty; h * w];
    for r in 0..h {
        for c in 0..w {
            let (tr, tc) = t.dihedral.map(r, c, h, w);
            let piece = s.cells()[r * w + c];
            cells[tr * w + tc] = if t.invert { piece.swapped() } else { piece };
        }
    }
    let to_move = if t.invert { s.to_move().other() } else { s.to_move() };
    GameState { game: s.game(), cells, to_move, ply: s.ply() }
}

/// The action permutation induced by `t`: `perm[a]` is the action in the
/// transformed state corresponding to `a` in the original, satisfying
/// `apply_action(apply_transform(s, t), perm[a]) ==
///  apply_transform(apply_action(s, a), t)` for every legal `a`.
pub fn transform_action_map(game: GameId, t: TransformId) -> Vec<ActionId> {
    let (h, w) = game.dims();
    match game {
        GameId::Ttt3 | GameId::Ttt4 => (0..game.action_count())
            .map(|a| {
                let (tr, tc) = t.dihedral.map(a / w, a % w, h, w);
                tr * w + tc
            })
            .collect(),
        GameId::C4 => match t.dihedral {
            Dihedral::R0 => (0..w).collect(),
            Dihedral::FlipH => (0..w).map(|c| w - 1 - c).collect(),
            other => panic!("{other:?} is not a Connect Four symmetry"),
        },
    }
}
