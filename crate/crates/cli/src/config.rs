//! Config-file profiles and flag resolution. A config file holds one
//! optional TOML table per game (`[ttt3]`, `[ttt4]`, `[c4]`); values
//! resolve as built-in per-game defaults, then the file profile, then
//! command-line flags. The fully resolved config lands in the manifest
//! and is the single source of truth for a run.

use crate::CliError;
use serde::Deserialize;
use std::collections::HashMap;
use std::path::Path;
use visavis::game::GameId;
use visavis::selfplay::{TrainRunConfig, VisaConfig};

/// Optional per-game overrides loadable from a config file. Every field
/// has a command-line equivalent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub games: Option<u64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub net_depth: Option<usize>,
    pub net_width: Option<usize>,
    pub l2_lambda: Option<f64>,
    pub sims: Option<u32>,
    pub c_explore: Option<f64>,
    pub temperature: Option<f64>,
    pub tau_drop_ply: Option<u16>,
    pub vis: Option<bool>,
    pub visa: Option<bool>,
    pub epsilon: Option<f64>,
    pub lookahead_literal: Option<bool>,
    /// Root Dirichlet noise during training self-play.
    pub root_noise: Option<bool>,
    pub dirichlet_alpha: Option<f64>,
    pub dirichlet_epsilon: Option<f64>,
    pub buffer_capacity: Option<usize>,
    pub games_per_round: Option<u64>,
    pub steps_per_game: Option<u32>,
    pub checkpoint_every: Option<u64>,
}

pub fn load_profiles(path: &Path) -> Result<HashMap<String, Profile>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Flag-level overrides collected from the command line; `None` means
/// "not given".
#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub games: Option<u64>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub sims: Option<u32>,
    pub vis: Option<bool>,
    pub visa: Option<bool>,
    pub epsilon: Option<f64>,
    pub games_per_round: Option<u64>,
    pub steps_per_game: Option<u32>,
    pub checkpoint_every: Option<u64>,
}

pub fn parse_game(name: &str) -> Result<GameId, CliError> {
    GameId::from_name(name)
        .ok_or_else(|| CliError::Config(format!("unknown game \"{name}\"; expected ttt3, ttt4, or c4")))
}

/// Build the resolved training config for `game`.
pub fn resolve_train(
    game: GameId,
    config_path: Option<&Path>,
    overrides: &TrainOverrides,
) -> Result<TrainRunConfig, CliError> {
    let seed = overrides.seed.unwrap_or(0);
    let mut cfg = TrainRunConfig::defaults_for(game, seed);

    if let Some(path) = config_path {
        let profiles = load_profiles(path)?;
        if let Some(p) = profiles.get(game.name()) {
            apply_profile(&mut cfg, p);
        }
    }

    if let Some(v) = overrides.games {
        cfg.num_games = v;
    }
    if let Some(v) = overrides.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = overrides.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = overrides.sims {
        cfg.search.n_sims = v;
    }
    if let Some(v) = overrides.vis {
        cfg.vis.enabled = v;
    }
    if let Some(v) = overrides.visa {
        cfg.visa = VisaConfig::for_game(game, v);
    }
    if let Some(v) = overrides.epsilon {
        cfg.vis.epsilon = v;
    }
    if let Some(v) = overrides.games_per_round {
        cfg.games_per_round = v;
    }
    if let Some(v) = overrides.steps_per_game {
        cfg.steps_per_game = v;
    }
    if let Some(v) = overrides.checkpoint_every {
        cfg.checkpoint_every = v;
    }

    validate(&cfg)?;
    Ok(cfg)
}

fn apply_profile(cfg: &mut TrainRunConfig, p: &Profile) {
    if let Some(v) = p.games {
        cfg.num_games = v;
    }
    if let Some(v) = p.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = p.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = p.net_depth {
        cfg.net_depth = v;
    }
    if let Some(v) = p.net_width {
        cfg.net_width = v;
    }
    if let Some(v) = p.l2_lambda {
        cfg.l2_lambda = v;
    }
    if let Some(v) = p.sims {
        cfg.search.n_sims = v;
    }
    if let Some(v) = p.c_explore {
        cfg.search.c_explore = v;
    }
    if let Some(v) = p.temperature {
        cfg.search.temperature = v;
    }
    if let Some(v) = p.tau_drop_ply {
        cfg.search.tau_drop_ply = v;
    }
    if let Some(v) = p.vis {
        cfg.vis.enabled = v;
    }
    if let Some(v) = p.visa {
        cfg.visa = VisaConfig::for_game(cfg.game, v);
    }
    if let Some(v) = p.epsilon {
        cfg.vis.epsilon = v;
    }
    if let Some(true) = p.lookahead_literal {
        cfg.vis.lookahead_sign = visavis::selfplay::LookaheadSign::Literal;
    }
    if let Some(on) = p.root_noise {
        cfg.search.dirichlet = on.then_some(
            cfg.search
                .dirichlet
                .unwrap_or(visavis::search::DirichletNoise { alpha: 1.0, epsilon: 0.25 }),
        );
    }
    if let Some(alpha) = p.dirichlet_alpha {
        if let Some(noise) = &mut cfg.search.dirichlet {
            noise.alpha = alpha;
        }
    }
    if let Some(eps) = p.dirichlet_epsilon {
        if let Some(noise) = &mut cfg.search.dirichlet {
            noise.epsilon = eps;
        }
    }
    if let Some(v) = p.buffer_capacity {
        cfg.buffer_capacity = v;
    }
    if let Some(v) = p.games_per_round {
        cfg.games_per_round = v;
    }
    if let Some(v) = p.steps_per_game {
        cfg.steps_per_game = v;
    }
    if let Some(v) = p.checkpoint_every {
        cfg.checkpoint_every = v;
    }
}

fn validate(cfg: &TrainRunConfig) -> Result<(), CliError> {
    if cfg.batch_size == 0 {
        return Err(CliError::Config("batch_size must be positive".into()));
    }
    if cfg.search.n_sims < 2 {
        return Err(CliError::Config("sims must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&cfg.vis.epsilon) {
        return Err(CliError::Config(format!(
            "epsilon {} outside [0, 1]",
            cfg.vis.epsilon
        )));
    }
    if cfg.games_per_round == 0 {
        return Err(CliError::Config("games_per_round must be positive".into()));
    }
    Ok(())
}
