//! Self-play trajectory generation and replay construction.
//!
//! Two optional mechanisms extend the plain search-based self-play loop:
//!
//! - **Value-informed selection**: alongside the visit-count policy
//!   `pi_p`, each step computes `pi_v`, a softmax over one-step value
//!   lookaheads of the successor states, and a uniform draw decides
//!   which of the two distributions the move is sampled from.
//! - **Value-informed symmetric augmentation**: before a visited state
//!   is stored, every symmetry image is evaluated by the value head and
//!   the single image whose value deviates most from the original's is
//!   stored as a second replay entry, with the policy target permuted
//!   accordingly and the outcome target negated when the transform
//!   inverts the players.

mod buffer;
mod train;

pub use buffer::ReplayBuffer;
pub use train::{
    read_visit_table, train, write_visit_table, GameTally, MetricsRow, TrainError, TrainOutcome,
    TrainRunConfig,
};

use crate::game::{
    self, ActionId, GameState, Outcome, StateEncoding, TransformId,
};
use crate::neural::{self, NetworkParams, NeuralError};
use crate::search::{self, SearchConfig, SearchError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelfplayError {
    #[error("policy/value distributions disagree: {0}")]
    DistributionMismatch(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// How a successor's value feeds the lookahead policy. Successor values
/// are reported from the opponent's perspective, so `Negated` (the
/// default) makes the lookahead prefer moves that are good for the
/// mover; `Literal` keeps the raw head output as written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LookaheadSign {
    Negated,
    Literal,
}

/// Value-informed selection switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisConfig {
    pub enabled: bool,
    /// Probability of sampling from the search policy rather than the
    /// value-lookahead policy.
    pub epsilon: f64,
    pub lookahead_sign: LookaheadSign,
}

impl Default for VisConfig {
    fn default() -> Self {
        VisConfig { enabled: false, epsilon: 0.5, lookahead_sign: LookaheadSign::Negated }
    }
}

/// Value-informed symmetric augmentation switch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisaConfig {
    pub enabled: bool,
    /// Candidate transforms; the game's full symmetry group by default.
    #[serde(skip)]
    pub transform_set: Vec<TransformId>,
}

impl VisaConfig {
    pub fn disabled() -> VisaConfig {
        VisaConfig { enabled: false, transform_set: Vec::new() }
    }

    pub fn for_game(game: game::GameId, enabled: bool) -> VisaConfig {
        VisaConfig { enabled, transform_set: game::symmetry_group(game) }
    }
}

/// Which branch picked the move at one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Policy,
    Value,
}

/// Where a replay entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Original,
    Augmented(TransformId),
}

/// One training example as stored in the replay buffer.
#[derive(Debug, Clone)]
pub struct ReplayEntry {
    pub encoding: StateEncoding,
    pub mask: Vec<bool>,
    /// Policy target, normalized over the mask.
    pub pi_target: Vec<f32>,
    /// Outcome from the perspective of the player to move at this state.
    pub z_target: f32,
    pub origin: Origin,
    pub state_key: String,
}

/// One decision step of a finished game.
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub state: GameState,
    pub pi_p: Vec<f64>,
    pub pi_v: Vec<f64>,
    pub branch: Branch,
    pub action: ActionId,
}

#[derive(Debug, Clone)]
pub struct PlayedGame {
    pub steps: Vec<TrajectoryStep>,
    pub outcome: Outcome,
}

/// Softmax over the entries of `u` restricted to `legal`, written into a
/// full action-space vector.
fn softmax_over(u: &[(ActionId, f64)], action_count: usize) -> Vec<f64> {
    let max = u.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; action_count];
    let mut sum = 0.0;
    for (a, v) in u {
        let e = (v - max).exp();
        out[*a] = e;
        sum += e;
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// One-step value lookahead policy: evaluate every legal successor with
/// the value head (exact outcomes for terminal successors) and softmax
/// the results over the legal actions.
pub fn value_policy(
    s: &GameState,
    params: &NetworkParams,
    sign: LookaheadSign,
) -> Result<Vec<f64>, SelfplayError> {
    let mut lookahead = Vec::new();
    for a in game::legal_actions(s) {
        let next = game::apply_action(s, a).expect("legal action");
        let v = match game::terminal_outcome(&next) {
            Some(outcome) => outcome.for_player(next.to_move()) as f64,
            None => neural::forward(params, &game::encode(&next), &game::legal_mask(&next))?.v,
        };
        let u = match sign {
            LookaheadSign::Negated => -v,
            LookaheadSign::Literal => v,
        };
        lookahead.push((a, u));
    }
    Ok(softmax_over(&lookahead, s.game().action_count()))
}

/// Sample an action id from a full action-space distribution.
fn sample_action(pi: &[f64], rng: &mut ChaCha8Rng) -> ActionId {
    let draw: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (a, p) in pi.iter().enumerate() {
        if *p > 0.0 {
            acc += p;
            last_positive = a;
            if draw < acc {
                return a;
            }
        }
    }
    last_positive // rounding fell off the end of the cdf
}

/// Stochastic switch between the two policies: draw eta ~ U(0,1) and
/// sample from `pi_p` when `eta < epsilon`, from `pi_v` otherwise.
pub fn vis_select(
    pi_p: &[f64],
    pi_v: &[f64],
    cfg: &VisConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(ActionId, Branch), SelfplayError> {
    if pi_p.len() != pi_v.len() {
        return Err(SelfplayError::DistributionMismatch(format!(
            "lengths {} vs {}",
            pi_p.len(),
            pi_v.len()
        )));
    }
    for (a, (pp, pv)) in pi_p.iter().zip(pi_v).enumerate() {
        if *pp > 0.0 && *pv == 0.0 {
            return Err(SelfplayError::DistributionMismatch(format!(
                "action {a} has policy mass but no value support"
            )));
        }
    }
    let eta: f64 = rng.gen::<f64>();
    if eta < cfg.epsilon {
        Ok((sample_action(pi_p, rng), Branch::Policy))
    } else {
        Ok((sample_action(pi_v, rng), Branch::Value))
    }
}

/// Index of the transform whose value deviates most from the original
/// state's value; ties resolve to the earliest transform in the set.
fn pick_max_uncertainty(v_original: f64, v_transformed: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, v) in v_transformed.iter().enumerate() {
        let d = (v_original - v) * (v_original - v);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Build the replay entries for one visited state: the original entry
/// plus the single symmetry image with maximum value uncertainty, its
/// policy target permuted through the action map and its outcome target
/// negated when the chosen transform inverts the players.
pub fn visa_augment(
    s: &GameState,
    params: &NetworkParams,
    pi_target: &[f32],
    z_target: f32,
    cfg: &VisaConfig,
) -> Result<Vec<ReplayEntry>, SelfplayError> {
    debug_assert!(cfg.enabled && !cfg.transform_set.is_empty());
    let original = ReplayEntry {
        encoding: game::encode(s),
        mask: game::legal_mask(s),
        pi_target: pi_target.to_vec(),
        z_target,
        origin: Origin::Original,
        state_key: s.key(),
    };

    let v_original = neural::forward(params, &original.encoding, &original.mask)?.v;
    let mut values = Vec::with_capacity(cfg.transform_set.len());
    let mut images = Vec::with_capacity(cfg.transform_set.len());
    for t in &cfg.transform_set {
        let image = game::apply_transform(s, *t);
        let v = neural::forward(params, &game::encode(&image), &game::legal_mask(&image))?.v;
        values.push(v);
        images.push(image);
    }
    let chosen = pick_max_uncertainty(v_original, &values);
    let transform = cfg.transform_set[chosen];
    let image = &images[chosen];

    let perm = game::transform_action_map(s.game(), transform);
    let mut pi_image = vec![0.0f32; pi_target.len()];
    for (a, p) in pi_target.iter().enumerate() {
        pi_image[perm[a]] = *p;
    }
    let augmented = ReplayEntry {
        encoding: game::encode(image),
        mask: game::legal_mask(image),
        pi_target: pi_image,
        z_target: if transform.invert { -z_target } else { z_target },
        origin: Origin::Augmented(transform),
        state_key: image.key(),
    };
    Ok(vec![original, augmented])
}

/// Play one self-play game. Each step runs a fresh search, extracts
/// `pi_p` at the scheduled temperature (argmax once the move number
/// reaches `tau_drop_ply`), computes the lookahead policy `pi_v`, and
/// picks the move through the selection switch (or from `pi_p` alone
/// when it is disabled).
pub fn play_game(
    params: &NetworkParams,
    game_id: game::GameId,
    search_cfg: &SearchConfig,
    vis: &VisConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PlayedGame, SelfplayError> {
    let mut state = game::initial_state(game_id);
    let mut steps = Vec::new();
    loop {
        if let Some(outcome) = game::terminal_outcome(&state) {
            return Ok(PlayedGame { steps, outcome });
        }
        let tree = search::run_search(&state, params, search_cfg, rng)?;
        let tau = if state.ply() < search_cfg.tau_drop_ply { search_cfg.temperature } else { 0.0 };
        let pi_p = search::search_policy(&tree, tau)?;
        let pi_v = value_policy(&state, params, vis.lookahead_sign)?;
        let (action, branch) = if vis.enabled {
            vis_select(&pi_p, &pi_v, vis, rng)?
        } else {
            (sample_action(&pi_p, rng), Branch::Policy)
        };
        let next = game::apply_action(&state, action).expect("selected action is legal");
        steps.push(TrajectoryStep { state, pi_p, pi_v, branch, action });
        state = next;
    }
}

/// Turn a finished game into replay entries: each step stores its
/// search policy as the target and the final outcome converted to the
/// step's mover perspective, expanded by the augmentation pass when it
/// is enabled.
pub fn finalize_targets(
    game_record: &PlayedGame,
    params: &NetworkParams,
    visa: &VisaConfig,
) -> Result<Vec<ReplayEntry>, SelfplayError> {
    let mut entries = Vec::with_capacity(
        game_record.steps.len() * if visa.enabled { 2 } else { 1 },
    );
    for step in &game_record.steps {
        let z = game_record.outcome.for_player(step.state.to_move()) as f32;
        let pi: Vec<f32> = step.pi_p.iter().map(|p| *p as f32).collect();
        if visa.enabled {
            entries.extend(visa_augment(&step.state, params, &pi, z, visa)?);
        } else {
            entries.push(ReplayEntry {
                encoding: game::encode(&step.state),
                mask: game::legal_mask(&step.state),
                pi_target: pi,
                z_target: z,
                origin: Origin::Original,
                state_key: step.state.key(),
            });
        }
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{apply_action, initial_state, parse_state, GameId, Player};
    use crate::neural::{init, NetConfig};
    use crate::rng::rng_for;

    fn net(game: GameId, seed: u64) -> NetworkParams {
        init(&NetConfig::for_game(game, seed)).unwrap()
    }

    #[test]
    fn value_policy_is_uniform_for_a_zero_network() {
        let mut params = net(GameId::Ttt3, 1);
        for (_, t) in params.tensors_mut() {
            t.fill(0.0);
        }
        // no terminal successors from the empty board
        let pi = value_policy(&initial_state(GameId::Ttt3), &params, LookaheadSign::Negated)
            .unwrap();
        for p in pi {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_example_two_actions() {
        let pi = softmax_over(&[(0, 1.0), (1, 0.0)], 2);
        let e = std::f64::consts::E;
        assert!((pi[0] - e / (e + 1.0)).abs() < 1e-4);
        assert!((pi[1] - 1.0 / (e + 1.0)).abs() < 1e-4);
        assert!((pi[0] - 0.7311).abs() < 1e-4);
        assert!((pi[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn immediate_win_dominates_the_lookahead_under_negation() {
        // X completes the top row at 2; that successor is an exact -1
        // for the opponent, so the negated lookahead feeds +1 into the
        // softmax and gives cell 2 the largest probability.
        let s = parse_state(GameId::Ttt3, "XX./OO./... X").unwrap();
        let params = net(GameId::Ttt3, 2);
        let pi = value_policy(&s, &params, LookaheadSign::Negated).unwrap();
        let best = pi
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(a, _)| a)
            .unwrap();
        assert_eq!(best, 2);
    }

    #[test]
    fn vis_select_respects_epsilon_boundaries() {
        let pi_p = vec![1.0, 0.0];
        let pi_v = vec![0.5, 0.5];
        let mut rng = rng_for(1, 0, 0);
        let always_policy = VisConfig { enabled: true, epsilon: 1.0, ..VisConfig::default() };
        let always_value = VisConfig { enabled: true, epsilon: 0.0, ..VisConfig::default() };
        for _ in 0..200 {
            let (_, b) = vis_select(&pi_p, &pi_v, &always_policy, &mut rng).unwrap();
            assert_eq!(b, Branch::Policy);
            let (_, b) = vis_select(&pi_p, &pi_v, &always_value, &mut rng).unwrap();
            assert_eq!(b, Branch::Value);
        }
    }

    #[test]
    fn vis_branch_frequency_converges_to_epsilon() {
        let pi_p = vec![0.25; 4];
        let pi_v = vec![0.25; 4];
        let cfg = VisConfig { enabled: true, epsilon: 0.5, ..VisConfig::default() };
        let mut rng = rng_for(2, 0, 0);
        let mut policy_picks = 0u32;
        for _ in 0..10_000 {
            if matches!(vis_select(&pi_p, &pi_v, &cfg, &mut rng).unwrap().1, Branch::Policy) {
                policy_picks += 1;
            }
        }
        let frac = policy_picks as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "policy fraction {frac}");
    }

    #[test]
    fn vis_select_rejects_mismatched_supports() {
        let cfg = VisConfig { enabled: true, ..VisConfig::default() };
        let mut rng = rng_for(3, 0, 0);
        assert!(matches!(
            vis_select(&[1.0, 0.0], &[0.5, 0.5, 0.0], &cfg, &mut rng),
            Err(SelfplayError::DistributionMismatch(_))
        ));
        assert!(matches!(
            vis_select(&[0.5, 0.5], &[1.0, 0.0], &cfg, &mut rng),
            Err(SelfplayError::DistributionMismatch(_))
        ));
    }

    #[test]
    fn max_uncertainty_pick_uses_squared_deviation() {
        // v(s)=0.2 against transform values [0.1, 0.9, 0.2]:
        // d = [0.01, 0.49, 0.0] picks index 1.
        assert_eq!(pick_max_uncertainty(0.2, &[0.1, 0.9, 0.2]), 1);
        // ties go to the earliest transform
        assert_eq!(pick_max_uncertainty(0.0, &[0.5, -0.5]), 0);
    }

    #[test]
    fn visa_emits_original_plus_consistent_augmentation() {
        let s = {
            let s = initial_state(GameId::Ttt3);
            let s = apply_action(&s, 0).unwrap();
            apply_action(&s, 4).unwrap()
        };
        let params = net(GameId::Ttt3, 4);
        let cfg = VisaConfig::for_game(GameId::Ttt3, true);
        let mut pi = vec![0.0f32; 9];
        pi[1] = 0.75;
        pi[8] = 0.25;
        let entries = visa_augment(&s, &params, &pi, 1.0, &cfg).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].origin, Origin::Original);
        assert_eq!(entries[0].state_key, s.key());

        let Origin::Augmented(t) = entries[1].origin else {
            panic!("second entry must be augmented")
        };
        // the augmented encoding decodes to the transformed state, and
        // inverse-transforming it reproduces the original
        let image = parse_state(GameId::Ttt3, &entries[1].state_key).unwrap();
        assert_eq!(game::apply_transform(&image, t.inverse()), s);
        assert_eq!(entries[1].encoding, game::encode(&image));
        // policy mass moved through the action permutation
        let perm = game::transform_action_map(GameId::Ttt3, t);
        for a in 0..9 {
            assert_eq!(entries[1].pi_target[perm[a]], pi[a]);
        }
        // outcome negated exactly when the transform inverts
        let expect_z = if t.invert { -1.0 } else { 1.0 };
        assert_eq!(entries[1].z_target, expect_z);

        // the chosen transform maximizes squared value deviation;
        // recompute independently
        let v0 = neural::forward(&params, &entries[0].encoding, &entries[0].mask).unwrap().v;
        let mut best = f64::NEG_INFINITY;
        let mut best_t = cfg.transform_set[0];
        for cand in &cfg.transform_set {
            let img = game::apply_transform(&s, *cand);
            let v = neural::forward(&params, &game::encode(&img), &game::legal_mask(&img))
                .unwrap()
                .v;
            let d = (v0 - v) * (v0 - v);
            if d > best {
                best = d;
                best_t = *cand;
            }
        }
        assert_eq!(t, best_t);
    }

    #[test]
    fn played_games_fit_the_board_and_record_normalized_policies() {
        let params = net(GameId::Ttt3, 5);
        let cfg = SearchConfig { n_sims: 8, ..SearchConfig::for_game(GameId::Ttt3) };
        let vis = VisConfig { enabled: true, ..VisConfig::default() };
        let mut rng = rng_for(6, 0, 0);
        for _ in 0..5 {
            let g = play_game(&params, GameId::Ttt3, &cfg, &vis, &mut rng).unwrap();
            assert!(g.steps.len() <= 9);
            for step in &g.steps {
                assert!((step.pi_p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!((step.pi_v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fixed_seed_without_vis_gives_identical_trajectories() {
        let params = net(GameId::Ttt3, 7);
        let cfg = SearchConfig { n_sims: 8, ..SearchConfig::for_game(GameId::Ttt3) };
        let vis = VisConfig::default();
        let a = play_game(&params, GameId::Ttt3, &cfg, &vis, &mut rng_for(8, 0, 0)).unwrap();
        let b = play_game(&params, GameId::Ttt3, &cfg, &vis, &mut rng_for(8, 0, 0)).unwrap();
        assert_eq!(a.outcome, b.outcome);
        let actions_a: Vec<_> = a.steps.iter().map(|s| s.action).collect();
        let actions_b: Vec<_> = b.steps.iter().map(|s| s.action).collect();
        assert_eq!(actions_a, actions_b);
    }

    #[test]
    fn finalize_alternates_outcome_perspective() {
        // Scripted five-ply P1 win: X takes the top row.
        let params = net(GameId::Ttt3, 9);
        let mut state = initial_state(GameId::Ttt3);
        let mut steps = Vec::new();
        for a in [0usize, 3, 1, 4, 2] {
            let mut pi_p = vec![0.0f64; 9];
            pi_p[a] = 1.0;
            steps.push(TrajectoryStep {
                state: state.clone(),
                pi_p,
                pi_v: vec![1.0 / 9.0; 9],
                branch: Branch::Policy,
                action: a,
            });
            state = apply_action(&state, a).unwrap();
        }
        let outcome = game::terminal_outcome(&state).unwrap();
        assert_eq!(outcome.z, 1);
        let record = PlayedGame { steps, outcome };
        let entries = finalize_targets(&record, &params, &VisaConfig::disabled()).unwrap();
        assert_eq!(entries.len(), 5);
        assert_eq!(
            entries.iter().map(|e| e.z_target).collect::<Vec<_>>(),
            vec![1.0, -1.0, 1.0, -1.0, 1.0]
        );
        // mover alternates starting from P1
        assert_eq!(record.steps[0].state.to_move(), Player::P1);

        // draws store zero everywhere
        let drawn = PlayedGame { steps: record.steps.clone(), outcome: Outcome { z: 0 } };
        let entries = finalize_targets(&drawn, &params, &VisaConfig::disabled()).unwrap();
        assert!(entries.iter().all(|e| e.z_target == 0.0));

        // augmentation doubles the entry count
        let entries =
            finalize_targets(&record, &params, &VisaConfig::for_game(GameId::Ttt3, true)).unwrap();
        assert_eq!(entries.len(), 10);
    }
}
