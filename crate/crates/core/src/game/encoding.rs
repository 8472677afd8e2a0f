//! Network input encoding: three stacked H x W planes — P1 pieces, P2
//! pieces, and a constant turn plane (1.0 when P1 is to move).

use super::{Cell, GameState, Player};

#[derive(Debug, Clone, PartialEq)]
pub struct StateEncoding {
    /// Row-major planes, length `3 * H * W`.
    pub planes: Vec<f32>,
    pub height: usize,
    pub width: usize,
}

impl StateEncoding {
    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }
}

pub fn encode(s: &GameState) -> StateEncoding {
    let (h, w) = s.game().dims();
    let area = h * w;
    let mut planes = vec![0.0f32; 3 * area];
    for (i, cell) in s.cells().iter().enumerate() {
        match cell {
            Cell::P1 => planes[i] = 1.0,
            Cell::P2 => planes[area + i] = 1.0,
            Cell::Empty => {}
        }
    }
    if s.to_move() == Player::P1 {
        planes[2 * area..].fill(1.0);
    }
    StateEncoding { planes, height: h, width: w }
}

#[cfg(test)]
mod tests {
    use super::super::{apply_action, apply_transform, initial_state, symmetry_group, GameId};
    use super::*;

    #[test]
    fn empty_board_is_all_zero_pieces_and_turn_plane_one() {
        let enc = encode(&initial_state(GameId::Ttt3));
        assert_eq!(enc.len(), 27);
        assert!(enc.planes[..18].iter().all(|v| *v == 0.0));
        assert!(enc.planes[18..].iter().all(|v| *v == 1.0));
    }

    #[test]
    fn one_move_sets_one_bit_and_clears_turn_plane() {
        let s = apply_action(&initial_state(GameId::Ttt3), 4).unwrap();
        let enc = encode(&s);
        assert_eq!(enc.planes[..9].iter().filter(|v| **v == 1.0).count(), 1);
        assert_eq!(enc.planes[4], 1.0);
        assert!(enc.planes[9..18].iter().all(|v| *v == 0.0));
        assert!(enc.planes[18..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn piece_planes_are_disjoint() {
        let mut s = initial_state(GameId::C4);
        for a in [3, 3, 2, 4, 1] {
            s = apply_action(&s, a).unwrap();
        }
        let enc = encode(&s);
        let area = 42;
        for i in 0..area {
            assert!(enc.planes[i] == 0.0 || enc.planes[area + i] == 0.0);
        }
    }

    #[test]
    fn dihedral_transform_permutes_the_encoding() {
        let mut s = initial_state(GameId::Ttt3);
        for a in [0, 4, 2] {
            s = apply_action(&s, a).unwrap();
        }
        for t in symmetry_group(GameId::Ttt3).into_iter().filter(|t| !t.invert) {
            let enc_t = encode(&apply_transform(&s, t));
            let enc = encode(&s);
            for r in 0..3 {
                for c in 0..3 {
                    let (tr, tc) = t.dihedral.map(r, c, 3, 3);
                    for plane in 0..3 {
                        assert_eq!(
                            enc_t.planes[plane * 9 + tr * 3 + tc],
                            enc.planes[plane * 9 + r * 3 + c]
                        );
                    }
                }
            }
        }
    }
}
