//! The training loop: rounds of self-play game generation from a fixed
//! parameter snapshot, followed by SGD steps on uniform replay batches.
//!
//! Games inside a round are independent given the snapshot and their
//! derived per-game seeds, so they may run on any number of worker
//! threads without changing results; pushes and updates happen in game
//! order afterwards. Same config and seed means byte-identical metrics
//! (the `wall_seconds` field excepted, which is timing).

use super::{finalize_targets, play_game, PlayedGame, ReplayBuffer, VisConfig, VisaConfig};
use crate::game::GameId;
use crate::neural::{self, LossParts, NetConfig, NetworkParams, OptState};
use crate::parallel;
use crate::rng::{self, stream};
use crate::search::{DirichletNoise, SearchConfig};
use crate::selfplay::SelfplayError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Selfplay(#[from] SelfplayError),
    #[error(transparent)]
    Neural(#[from] neural::NeuralError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Full configuration of one training run. `defaults_for` carries the
/// per-game defaults; scaled runs override `num_games` and `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRunConfig {
    pub game: GameId,
    pub num_games: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub net_depth: usize,
    pub net_width: usize,
    pub l2_lambda: f64,
    pub search: SearchConfig,
    pub vis: VisConfig,
    pub visa: VisaConfig,
    /// Replay ring capacity.
    pub buffer_capacity: usize,
    /// Games generated from one parameter snapshot before updating.
    pub games_per_round: u64,
    /// SGD steps per generated game (once the buffer holds a batch).
    pub steps_per_game: u32,
    pub seed: u64,
    /// Worker cap for in-round generation; results do not depend on it.
    pub threads: usize,
    pub checkpoint_path: PathBuf,
    pub metrics_path: PathBuf,
    pub visit_table_path: PathBuf,
    /// Extra checkpoint every this many games (0 = final only).
    pub checkpoint_every: u64,
}

impl TrainRunConfig {
    /// Defaults per game: 5e5 / 1.75e6 / 7.5e6 games, batch 64/128/256,
    /// learning rate 1e-3/1e-4/1e-4, depth 2/4/4, width 128,
    /// lambda 1e-4, and the per-game search settings.
    pub fn defaults_for(game: GameId, seed: u64) -> TrainRunConfig {
        let (num_games, batch_size, learning_rate, net_depth) = match game {
            GameId::Ttt3 => (500_000, 64, 1e-3, 2),
            GameId::Ttt4 => (1_750_000, 128, 1e-4, 4),
            GameId::C4 => (7_500_000, 256, 1e-4, 4),
        };
        // Root Dirichlet noise stays on for training self-play (match
        // and evaluation searches never use it): without it the policy
        // prior collapses onto its own argmax lines, the exploration
        // bonus (proportional to the prior) can never revisit the
        // abandoned moves, and second-player defense never converges.
        let search = SearchConfig {
            dirichlet: Some(DirichletNoise { alpha: 1.0, epsilon: 0.25 }),
            ..SearchConfig::for_game(game)
        };
        TrainRunConfig {
            game,
            num_games,
            batch_size,
            learning_rate,
            net_depth,
            net_width: 128,
            l2_lambda: 1e-4,
            search,
            vis: VisConfig::default(),
            visa: VisaConfig::disabled(),
            buffer_capacity: 65_536,
            games_per_round: 8,
            steps_per_game: 1,
            seed,
            threads: parallel::default_threads(),
            checkpoint_path: PathBuf::from("checkpoint.vvis"),
            metrics_path: PathBuf::from("metrics.jsonl"),
            visit_table_path: PathBuf::from("visit_counts.tsv"),
            checkpoint_every: 0,
        }
    }

    pub fn net_config(&self) -> NetConfig {
        let (h, w) = self.game.dims();
        NetConfig {
            input_dims: (3, h, w),
            hidden_width: self.net_width,
            depth: self.net_depth,
            action_count: self.game.action_count(),
            l2_lambda: self.l2_lambda,
            learning_rate: self.learning_rate,
            seed: rng::derive(self.seed, stream::NET_INIT, 0),
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.games_per_round == 0 {
            return Err(TrainError::InvalidConfig(
                "batch size and games per round must be positive".into(),
            ));
        }
        if self.buffer_capacity == 0 {
            return Err(TrainError::InvalidConfig("buffer capacity must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.vis.epsilon) {
            return Err(TrainError::InvalidConfig("epsilon must be in [0, 1]".into()));
        }
        if self.visa.enabled && self.visa.transform_set.is_empty() {
            return Err(TrainError::InvalidConfig(
                "augmentation enabled with an empty transform set".into(),
            ));
        }
        Ok(())
    }
}

/// One metrics line, emitted after every round. Loss fields are `null`
/// until the buffer holds a full batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRow {
    pub games_played: u64,
    pub loss_total: Option<f64>,
    pub value_mse: Option<f64>,
    pub policy_ce: Option<f64>,
    pub l2: Option<f64>,
    pub p1_wins: u64,
    pub draws: u64,
    pub p2_wins: u64,
    pub buffer_size: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GameTally {
    pub p1_wins: u64,
    pub draws: u64,
    pub p2_wins: u64,
}

pub struct TrainOutcome {
    pub params: NetworkParams,
    /// Training-time visit count per state key.
    pub visit_counts: HashMap<String, u64>,
    pub tally: GameTally,
    pub rows: Vec<MetricsRow>,
    pub grad_steps: u64,
}

/// Run the full loop and persist checkpoint(s), the metrics log, and the
/// visit-count table to the configured paths.
pub fn train(cfg: &TrainRunConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let net_cfg = cfg.net_config();
    let mut params = neural::init(&net_cfg)?;
    let mut opt = OptState::default();
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut visit_counts: HashMap<String, u64> = HashMap::new();
    let mut tally = GameTally::default();
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut train_rng = rng::rng_for(cfg.seed, stream::TRAIN_BATCH, 0);
    let started = Instant::now();

    let mut metrics = create_writer(&cfg.metrics_path)?;
    let mut games_done: u64 = 0;
    let mut next_checkpoint = if cfg.checkpoint_every > 0 { cfg.checkpoint_every } else { u64::MAX };

    while games_done < cfg.num_games {
        let round = cfg.games_per_round.min(cfg.num_games - games_done) as usize;
        let snapshot = &params;
        let generated: Vec<Result<(PlayedGame, Vec<super::ReplayEntry>), SelfplayError>> =
            parallel::map_indexed(round, cfg.threads, |i| {
                let game_index = games_done + i as u64;
                let mut game_rng = rng::rng_for(cfg.seed, stream::SELFPLAY_GAME, game_index);
                let record =
                    play_game(snapshot, cfg.game, &cfg.search, &cfg.vis, &mut game_rng)?;
                let entries = finalize_targets(&record, snapshot, &cfg.visa)?;
                Ok((record, entries))
            });

        for result in generated {
            let (record, entries) = result?;
            match record.outcome.z {
                1 => tally.p1_wins += 1,
                -1 => tally.p2_wins += 1,
                _ => tally.draws += 1,
            }
            for step in &record.steps {
                *visit_counts.entry(step.state.key()).or_default() += 1;
            }
            for entry in entries {
                buffer.push(entry);
            }
        }

        let mut round_loss: Option<LossParts> = None;
        let mut loss_steps = 0u32;
        for _ in 0..round {
            for _ in 0..cfg.steps_per_game {
                if buffer.len() < cfg.batch_size {
                    continue;
                }
                let batch = buffer.sample_batch(cfg.batch_size, &mut train_rng);
                let stats = neural::grad_step(&mut params, &batch, &mut opt)?;
                round_loss = Some(match round_loss {
                    None => stats.loss,
                    Some(acc) => LossParts {
                        value_mse: acc.value_mse + stats.loss.value_mse,
                        policy_ce: acc.policy_ce + stats.loss.policy_ce,
                        l2: acc.l2 + stats.loss.l2,
                    },
                });
                loss_steps += 1;
            }
        }
        games_done += round as u64;

        let mean_loss = round_loss.map(|l| LossParts {
            value_mse: l.value_mse / loss_steps as f64,
            policy_ce: l.policy_ce / loss_steps as f64,
            l2: l.l2 / loss_steps as f64,
        });
        let row = MetricsRow {
            games_played: games_done,
            loss_total: mean_loss.map(|l| l.total()),
            value_mse: mean_loss.map(|l| l.value_mse),
            policy_ce: mean_loss.map(|l| l.policy_ce),
            l2: mean_loss.map(|l| l.l2),
            p1_wins: tally.p1_wins,
            draws: tally.draws,
            p2_wins: tally.p2_wins,
            buffer_size: buffer.len(),
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        writeln!(metrics, "{}", serde_json::to_string(&row).expect("row serializes"))?;
        rows.push(row);

        if games_done >= next_checkpoint {
            let stem = cfg
                .checkpoint_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "checkpoint".into());
            let periodic = cfg
                .checkpoint_path
                .with_file_name(format!("{stem}-{games_done:08}.vvis"));
            neural::save(&params, &periodic)?;
            next_checkpoint += cfg.checkpoint_every;
        }
    }

    metrics.flush()?;
    neural::save(&params, &cfg.checkpoint_path)?;
    write_visit_table(&cfg.visit_table_path, &visit_counts)?;
    Ok(TrainOutcome { params, visit_counts, tally, rows, grad_steps: opt.steps })
}

fn create_writer(path: &PathBuf) -> Result<std::io::BufWriter<std::fs::File>, std::io::Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Persist the visit table as sorted `state-key<TAB>count` lines.
pub fn write_visit_table(
    path: &PathBuf,
    visit_counts: &HashMap<String, u64>,
) -> Result<(), std::io::Error> {
    let mut writer = create_writer(path)?;
    let mut keys: Vec<_> = visit_counts.iter().collect();
    keys.sort();
    for (key, count) in keys {
        writeln!(writer, "{key}\t{count}")?;
    }
    writer.flush()
}

/// Read a visit table written by [`write_visit_table`].
pub fn read_visit_table(path: &std::path::Path) -> Result<HashMap<String, u64>, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let Some((key, count)) = line.rsplit_once('\t') else {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("visit table line {} lacks a tab", lineno + 1),
            ));
        };
        let count: u64 = count.parse().map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("visit table line {}: {e}", lineno + 1),
            )
        })?;
        out.insert(key.to_string(), count);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::SearchConfig;

    fn tiny_cfg(dir: &std::path::Path, seed: u64) -> TrainRunConfig {
        let mut cfg = TrainRunConfig::defaults_for(GameId::Ttt3, seed);
        cfg.num_games = 6;
        cfg.games_per_round = 3;
        cfg.batch_size = 8;
        cfg.search = SearchConfig { n_sims: 6, ..SearchConfig::for_game(GameId::Ttt3) };
        cfg.checkpoint_path = dir.join("checkpoint.vvis");
        cfg.metrics_path = dir.join("metrics.jsonl");
        cfg.visit_table_path = dir.join("visits.tsv");
        cfg.threads = 2;
        cfg
    }

    #[test]
    fn zero_games_returns_the_initialized_network() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path(), 3);
        cfg.num_games = 0;
        let out = train(&cfg).unwrap();
        assert_eq!(out.params, neural::init(&cfg.net_config()).unwrap());
        assert_eq!(out.grad_steps, 0);
        assert!(cfg.checkpoint_path.exists());
    }

    #[test]
    fn visit_totals_equal_trajectory_lengths_and_metrics_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path(), 4);
        let out = train(&cfg).unwrap();

        // total state visits = total moves made; every ply of every game
        // contributes exactly one visit
        let visits: u64 = out.visit_counts.values().sum();
        assert!(visits > 0);
        let games = out.tally.p1_wins + out.tally.draws + out.tally.p2_wins;
        assert_eq!(games, cfg.num_games);

        // identical run: byte-identical metrics modulo the timing field
        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg2 = tiny_cfg(dir2.path(), 4);
        cfg2.threads = 1; // worker count must not matter
        let out2 = train(&cfg2).unwrap();
        let strip = |p: &std::path::Path| {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| {
                    let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                    v.as_object_mut().unwrap().remove("wall_seconds");
                    v.to_string()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&cfg.metrics_path), strip(&cfg2.metrics_path));
        assert_eq!(out.params, out2.params);

        // visit table round-trips
        let table = read_visit_table(&cfg.visit_table_path).unwrap();
        assert_eq!(table, out.visit_counts);
    }

    #[test]
    fn rows_carry_loss_once_the_buffer_fills() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path(), 5);
        cfg.num_games = 12;
        cfg.batch_size = 16;
        let out = train(&cfg).unwrap();
        assert!(out.rows.last().unwrap().loss_total.is_some());
        assert!(out.grad_steps > 0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path(), 6);
        cfg.vis.epsilon = 1.5;
        assert!(matches!(train(&cfg), Err(TrainError::InvalidConfig(_))));
        let mut cfg = tiny_cfg(dir.path(), 6);
        cfg.visa.enabled = true; // empty transform set
        assert!(matches!(train(&cfg), Err(TrainError::InvalidConfig(_))));
    }
}
