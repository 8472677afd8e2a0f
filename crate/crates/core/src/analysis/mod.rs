//! Evaluation of trained networks against the exact oracle: per-state
//! value error and policy-value misalignment over the enumerable games,
//! visitation-binned generalization error, match play against the
//! oracle, and adversarial detection of poorly-valued endgame states.

mod report;

pub use report::{write_adversarial_records, write_eval_records};

use crate::game::{self, GameId, GameState};
use crate::neural::{self, NetworkParams, NeuralError};
use crate::oracle::{OracleError, SolveBudget, Solver};
use crate::parallel;
use crate::rng::{self, stream};
use crate::search::{self, SearchConfig, SearchError};
use crate::selfplay::{self, LookaheadSign, SelfplayError};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("distribution mismatch: {0}")]
    DistributionMismatch(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Selfplay(#[from] SelfplayError),
}

/// Floor applied to the reference distribution inside the KL divergence.
const KL_FLOOR: f64 = 1e-12;

/// Policy-value misalignment `D_KL(pi_p || pi_v)`. Terms with
/// `pi_p(a) = 0` contribute nothing; `pi_v` is floored at 1e-12.
pub fn misalignment(pi_p: &[f64], pi_v: &[f64]) -> Result<f64, AnalysisError> {
    if pi_p.len() != pi_v.len() {
        return Err(AnalysisError::DistributionMismatch(format!(
            "lengths {} vs {}",
            pi_p.len(),
            pi_v.len()
        )));
    }
    for (sum, name) in [(pi_p.iter().sum::<f64>(), "pi_p"), (pi_v.iter().sum::<f64>(), "pi_v")] {
        if (sum - 1.0).abs() > 1e-6 {
            return Err(AnalysisError::DistributionMismatch(format!(
                "{name} sums to {sum}, expected 1"
            )));
        }
    }
    let mut kl = 0.0;
    for (p, q) in pi_p.iter().zip(pi_v) {
        if *p > 0.0 {
            kl += p * (p / q.max(KL_FLOOR)).ln();
        }
    }
    Ok(kl)
}

/// One evaluated state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub state_key: String,
    /// Exact mover-relative value.
    pub oracle_value: i8,
    /// Value-head output at the state.
    pub predicted_v: f64,
    /// Squared error `(oracle - predicted)^2`, in [0, 4].
    pub value_error: f64,
    /// `D_KL` between the search-informed policy and the value policy.
    pub misalignment: f64,
    /// Same divergence with the raw network policy in place of the
    /// search-informed one; logged for diagnostics.
    pub misalignment_raw: f64,
    /// Visits the state received during training.
    pub visit_count: u64,
}

/// Evaluate every reachable non-terminal state of an enumerable game:
/// exact solve, value prediction, a fresh search at the game's training
/// settings (temperature 1), and the lookahead policy.
pub fn exhaustive_eval(
    params: &NetworkParams,
    game_id: GameId,
    visit_table: &HashMap<String, u64>,
    threads: usize,
) -> Result<Vec<EvalRecord>, AnalysisError> {
    let limit = match game_id {
        GameId::Ttt3 => 10_000,
        GameId::Ttt4 => 20_000_000,
        GameId::C4 => 100_000, // fails fast: the space is not enumerable
    };
    let states = crate::oracle::enumerate_reachable(game_id, limit)?;
    let non_terminal: Vec<&GameState> = states.iter().filter(|s| !game::is_terminal(s)).collect();

    // One shared solve pass warms the memo for every reachable state.
    let mut solver = Solver::new(SolveBudget::default());
    let mut oracle_values = Vec::with_capacity(non_terminal.len());
    for s in &non_terminal {
        oracle_values.push(solver.solve(s)?.value);
    }

    let search_cfg = SearchConfig::for_game(game_id);
    let records: Vec<Result<EvalRecord, AnalysisError>> =
        parallel::map_indexed(non_terminal.len(), threads, |i| {
            let s = non_terminal[i];
            evaluate_state(params, s, oracle_values[i], &search_cfg, visit_table, i as u64)
        });
    records.into_iter().collect()
}

fn evaluate_state(
    params: &NetworkParams,
    s: &GameState,
    oracle_value: i8,
    search_cfg: &SearchConfig,
    visit_table: &HashMap<String, u64>,
    index: u64,
) -> Result<EvalRecord, AnalysisError> {
    let mask = game::legal_mask(s);
    let pred = neural::forward(params, &game::encode(s), &mask)?;
    let mut rng = rng::rng_for(0, stream::EVAL_STATE, index);
    let tree = search::run_search(s, params, search_cfg, &mut rng)?;
    let pi_p = search::search_policy(&tree, 1.0)?;
    let pi_v = selfplay::value_policy(s, params, LookaheadSign::Negated)?;
    let key = s.key();
    let value_error = (oracle_value as f64 - pred.v) * (oracle_value as f64 - pred.v);
    Ok(EvalRecord {
        visit_count: visit_table.get(&key).copied().unwrap_or(0),
        state_key: key,
        oracle_value,
        predicted_v: pred.v,
        value_error,
        misalignment: misalignment(&pi_p, &pi_v)?,
        misalignment_raw: misalignment(&pred.p, &pi_v)?,
    })
}

/// Mean value error binned by training visit count.
#[derive(Debug, Clone, Serialize)]
pub struct VisitBin {
    pub label: String,
    pub lo: u64,
    /// Inclusive upper bound; open-ended when absent.
    pub hi: Option<u64>,
    pub count: u64,
    pub mean_value_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralizationReport {
    pub bins: Vec<VisitBin>,
    /// Mean value error over never-visited states; absent when every
    /// state was visited.
    pub generalization_error: Option<f64>,
}

/// Bin records by visit count: {0, 1-10, 11-100, 101-1000, >1000}.
pub fn generalization_report(records: &[EvalRecord]) -> GeneralizationReport {
    let edges: [(u64, Option<u64>, &str); 5] = [
        (0, Some(0), "0"),
        (1, Some(10), "1-10"),
        (11, Some(100), "11-100"),
        (101, Some(1000), "101-1000"),
        (1001, None, ">1000"),
    ];
    let mut bins = Vec::with_capacity(edges.len());
    for (lo, hi, label) in edges {
        let in_bin = records
            .iter()
            .filter(|r| r.visit_count >= lo && hi.is_none_or(|h| r.visit_count <= h));
        let (mut count, mut sum) = (0u64, 0.0f64);
        for r in in_bin {
            count += 1;
            sum += r.value_error;
        }
        bins.push(VisitBin {
            label: label.to_string(),
            lo,
            hi,
            count,
            mean_value_error: (count > 0).then(|| sum / count as f64),
        });
    }
    let generalization_error = bins[0].mean_value_error;
    GeneralizationReport { bins, generalization_error }
}

/// Fixed-edge histogram of value errors with threshold shares.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorHistogram {
    /// Bin edges {0, 0.25, 0.5, 1, 2, 3, 3.5, 4}; bin i covers
    /// [edges[i], edges[i+1]), the last bin closing at 4 inclusive.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub share_above_1: f64,
    pub share_above_3: f64,
    pub share_above_3_5: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub records: usize,
    pub histogram: ErrorHistogram,
    pub mean_value_error: f64,
    pub mean_misalignment: f64,
    pub mean_misalignment_raw: f64,
}

/// Histogram plus means over a nonempty record set.
pub fn summarize(records: &[EvalRecord]) -> EvalSummary {
    assert!(!records.is_empty(), "summarize needs at least one record");
    let edges = vec![0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 3.5, 4.0];
    let mut counts = vec![0u64; edges.len() - 1];
    let n = records.len() as f64;
    let mut above = [0u64; 3];
    let mut sum_e = 0.0;
    let mut sum_kl = 0.0;
    let mut sum_kl_raw = 0.0;
    for r in records {
        let e = r.value_error;
        let bin = edges[..edges.len() - 1]
            .iter()
            .zip(&edges[1..])
            .position(|(lo, hi)| e >= *lo && (e < *hi || (*hi == 4.0 && e <= 4.0)))
            .unwrap_or(counts.len() - 1);
        counts[bin] += 1;
        if e > 1.0 {
            above[0] += 1;
        }
        if e > 3.0 {
            above[1] += 1;
        }
        if e > 3.5 {
            above[2] += 1;
        }
        sum_e += e;
        sum_kl += r.misalignment;
        sum_kl_raw += r.misalignment_raw;
    }
    EvalSummary {
        records: records.len(),
        histogram: ErrorHistogram {
            edges,
            counts,
            share_above_1: above[0] as f64 / n,
            share_above_3: above[1] as f64 / n,
            share_above_3_5: above[2] as f64 / n,
        },
        mean_value_error: sum_e / n,
        mean_misalignment: sum_kl / n,
        mean_misalignment_raw: sum_kl_raw / n,
    }
}

/// Win/draw/loss tallies from the agent's perspective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MatchScore {
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
}

impl MatchScore {
    pub fn games(&self) -> u64 {
        self.wins + self.draws + self.losses
    }

    pub fn non_loss_rate(&self) -> f64 {
        if self.games() == 0 {
            return 0.0;
        }
        (self.wins + self.draws) as f64 / self.games() as f64
    }
}

/// Play `n_games` against the exact oracle. The agent moves by argmax of
/// a fresh search (temperature 0); the oracle samples uniformly among
/// its optimal moves.
pub fn oracle_match(
    params: &NetworkParams,
    game_id: GameId,
    n_games: u64,
    agent_moves_first: bool,
    budget: SolveBudget,
    seed: u64,
) -> Result<MatchScore, AnalysisError> {
    use rand::Rng;
    let mut solver = Solver::new(budget);
    let search_cfg = SearchConfig::for_game(game_id);
    let mut score = MatchScore::default();
    for g in 0..n_games {
        let mut rng = rng::rng_for(seed, stream::MATCH_GAME, g);
        let mut state = game::initial_state(game_id);
        let outcome = loop {
            if let Some(outcome) = game::terminal_outcome(&state) {
                break outcome;
            }
            let agent_turn = (state.ply() % 2 == 0) == agent_moves_first;
            let action = if agent_turn {
                let tree = search::run_search(&state, params, &search_cfg, &mut rng)?;
                let pi = search::search_policy(&tree, 0.0)?;
                pi.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite policy"))
                    .map(|(a, _)| a)
                    .expect("nonempty policy")
            } else {
                let solved = solver.solve(&state)?;
                solved.best_actions[rng.gen_range(0..solved.best_actions.len())]
            };
            state = game::apply_action(&state, action).expect("legal move");
        };
        let agent_z = if agent_moves_first { outcome.z } else { -outcome.z };
        match agent_z {
            1 => score.wins += 1,
            0 => score.draws += 1,
            _ => score.losses += 1,
        }
    }
    Ok(score)
}

/// A state flagged by the adversarial detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversarialStateRecord {
    pub state_key: String,
    /// Squared value error against the oracle; always > 1.
    pub value_error: f64,
    pub misalignment: f64,
    pub discovered_in_game: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DetectStats {
    pub games: u64,
    pub states_seen: u64,
    pub endgame_states: u64,
    /// Endgame checks abandoned because the solve budget ran out.
    pub skipped_budget: u64,
}

/// Adversarial self-play: every move takes the minimum-probability legal
/// action under the visit-count policy, pushing play into neglected
/// regions. Every endgame state encountered (provable within `endgame_k`
/// plies) is solved exactly and recorded when its squared value error
/// exceeds 1. Records are deduplicated on the state key.
pub fn adversarial_detect(
    params: &NetworkParams,
    game_id: GameId,
    n_games: u64,
    endgame_k: u16,
    budget: SolveBudget,
    seed: u64,
) -> Result<(Vec<AdversarialStateRecord>, DetectStats), AnalysisError> {
    let mut solver = Solver::new(budget);
    let search_cfg = SearchConfig::for_game(game_id);
    let mut checked: HashSet<String> = HashSet::new();
    let mut records: Vec<AdversarialStateRecord> = Vec::new();
    let mut stats = DetectStats::default();

    for g in 0..n_games {
        let mut rng = rng::rng_for(seed, stream::DETECT_GAME, g);
        let mut state = game::initial_state(game_id);
        stats.games += 1;
        while !game::is_terminal(&state) {
            stats.states_seen += 1;
            let tree = search::run_search(&state, params, &search_cfg, &mut rng)?;
            let pi = search::search_policy(&tree, 1.0)?;

            let key = state.key();
            if checked.insert(key.clone()) {
                match solver.is_endgame(&state, endgame_k) {
                    Ok(true) => {
                        stats.endgame_states += 1;
                        let solved = solver.solve(&state)?;
                        let mask = game::legal_mask(&state);
                        let pred = neural::forward(params, &game::encode(&state), &mask)?;
                        let e = (solved.value as f64 - pred.v) * (solved.value as f64 - pred.v);
                        if e > 1.0 {
                            let pi_v =
                                selfplay::value_policy(&state, params, LookaheadSign::Negated)?;
                            records.push(AdversarialStateRecord {
                                state_key: key,
                                value_error: e,
                                misalignment: misalignment(&pi, &pi_v)?,
                                discovered_in_game: g,
                            });
                        }
                    }
                    Ok(false) => {}
                    Err(OracleError::BudgetExceeded(_)) => stats.skipped_budget += 1,
                    Err(other) => return Err(other.into()),
                }
            }

            // minimum-probability legal move, ties to the lowest index
            let legal = game::legal_actions(&state);
            let worst = legal
                .iter()
                .copied()
                .min_by(|a, b| pi[*a].partial_cmp(&pi[*b]).expect("finite policy"))
                .expect("non-terminal state has legal actions");
            state = game::apply_action(&state, worst).expect("legal move");
        }
    }
    Ok((records, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::initial_state;
    use crate::neural::{init, NetConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kl_examples() {
        assert_eq!(misalignment(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let kl = misalignment(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let n = rng.gen_range(2..9);
            let draw = |rng: &mut ChaCha8Rng| {
                let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
                let sum: f64 = v.iter().sum();
                for x in &mut v {
                    *x /= sum;
                }
                v
            };
            let p = draw(&mut rng);
            let q = draw(&mut rng);
            assert!(misalignment(&p, &q).unwrap() >= -1e-12);
            assert!(misalignment(&p, &p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn kl_rejects_mismatched_inputs() {
        assert!(misalignment(&[1.0], &[0.5, 0.5]).is_err());
        assert!(misalignment(&[0.4, 0.4], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn generalization_binning() {
        let rec = |visits: u64, e: f64| EvalRecord {
            state_key: String::new(),
            oracle_value: 0,
            predicted_v: 0.0,
            value_error: e,
            misalignment: 0.0,
            misalignment_raw: 0.0,
            visit_count: visits,
        };
        // zero-visit states at e=4, everything else at 0
        let records: Vec<EvalRecord> =
            vec![rec(0, 4.0), rec(0, 4.0), rec(5, 0.0), rec(50, 0.0), rec(2000, 0.0)];
        let report = generalization_report(&records);
        assert_eq!(report.generalization_error, Some(4.0));
        assert_eq!(report.bins[0].count, 2);
        assert_eq!(report.bins[4].count, 1);

        // all well-visited: zero-visit bin is absent
        let records: Vec<EvalRecord> = vec![rec(1500, 0.25), rec(9999, 0.25)];
        let report = generalization_report(&records);
        assert_eq!(report.generalization_error, None);
        assert_eq!(report.bins[0].count, 0);
        for bin in &report.bins {
            if bin.count > 0 {
                assert_eq!(bin.mean_value_error, Some(0.25));
            }
        }
    }

    #[test]
    fn summary_histogram_and_shares() {
        let rec = |e: f64| EvalRecord {
            state_key: String::new(),
            oracle_value: 0,
            predicted_v: 0.0,
            value_error: e,
            misalignment: 0.0,
            misalignment_raw: 0.0,
            visit_count: 0,
        };
        let records: Vec<EvalRecord> = vec![rec(0.0), rec(0.3), rec(2.0), rec(4.0)];
        let s = summarize(&records);
        assert_eq!(s.histogram.counts, vec![1, 1, 0, 0, 1, 0, 1]);
        assert_eq!(s.histogram.share_above_1, 0.5);
        assert_eq!(s.histogram.share_above_3, 0.25);
        assert_eq!(s.histogram.share_above_3_5, 0.25);
        assert!((s.mean_value_error - 6.3 / 4.0).abs() < 1e-12);
        assert_eq!(s.mean_misalignment, 0.0);
    }

    #[test]
    fn oracle_against_itself_always_draws_ttt3() {
        let mut solver = Solver::new(SolveBudget::default());
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let mut s = initial_state(GameId::Ttt3);
            let outcome = loop {
                if let Some(o) = game::terminal_outcome(&s) {
                    break o;
                }
                let solved = solver.solve(&s).unwrap();
                let a = solved.best_actions[rng.gen_range(0..solved.best_actions.len())];
                s = game::apply_action(&s, a).unwrap();
            };
            assert_eq!(outcome.z, 0);
        }
    }

    #[test]
    fn untrained_agent_never_beats_the_oracle() {
        let params = init(&NetConfig::for_game(GameId::Ttt3, 40)).unwrap();
        let score =
            oracle_match(&params, GameId::Ttt3, 30, true, SolveBudget::default(), 7).unwrap();
        assert_eq!(score.games(), 30);
        assert_eq!(score.wins, 0, "the oracle never loses a solved draw");
        let score =
            oracle_match(&params, GameId::Ttt3, 30, false, SolveBudget::default(), 7).unwrap();
        assert_eq!(score.wins, 0);
    }

    #[test]
    fn adversarial_detection_dedups_and_stays_legal() {
        let params = init(&NetConfig::for_game(GameId::Ttt3, 41)).unwrap();
        let (records, stats) =
            adversarial_detect(&params, GameId::Ttt3, 40, 6, SolveBudget::default(), 9).unwrap();
        assert_eq!(stats.games, 40);
        let keys: HashSet<_> = records.iter().map(|r| r.state_key.clone()).collect();
        assert_eq!(keys.len(), records.len(), "records are deduplicated");
        for r in &records {
            assert!(r.value_error > 1.0);
        }
        // same seed, same outcome
        let (again, _) =
            adversarial_detect(&params, GameId::Ttt3, 40, 6, SolveBudget::default(), 9).unwrap();
        let again_keys: HashSet<_> = again.iter().map(|r| r.state_key.clone()).collect();
        assert_eq!(keys, again_keys);
    }
}
