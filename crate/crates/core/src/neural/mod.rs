//! The two-headed network: a fully-connected residual trunk with a
//! masked-softmax policy head and a tanh value head, plus its loss,
//! exact gradients, SGD updates, and binary checkpointing.
//!
//! Parameters are stored as `f32` (matching the checkpoint format); all
//! arithmetic runs in `f64` so analytic gradients agree with central
//! finite differences to high precision.

mod checkpoint;
mod net;

pub use checkpoint::{load, save};
pub use net::{forward, grad_step, loss, loss_gradients, LossParts, StepStats};

use crate::game::GameId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in {term}")]
    NonFiniteGradient { term: String },
    #[error("checkpoint format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Network shape and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Input tensor dims (planes, height, width).
    pub input_dims: (usize, usize, usize),
    pub hidden_width: usize,
    /// Number of residual blocks.
    pub depth: usize,
    pub action_count: usize,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl NetConfig {
    /// Per-game defaults: width 128, depth 2 for 3x3 Tic-Tac-Toe and 4
    /// for the larger games, lambda 1e-4, per-game learning rate.
    pub fn for_game(game: GameId, seed: u64) -> NetConfig {
        let (h, w) = game.dims();
        let (depth, learning_rate) = match game {
            GameId::Ttt3 => (2, 1e-3),
            GameId::Ttt4 | GameId::C4 => (4, 1e-4),
        };
        NetConfig {
            input_dims: (3, h, w),
            hidden_width: 128,
            depth,
            action_count: game.action_count(),
            l2_lambda: 1e-4,
            learning_rate,
            seed,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_dims.0 * self.input_dims.1 * self.input_dims.2
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.hidden_width == 0 || self.depth == 0 || self.action_count == 0 {
            return Err(NeuralError::InvalidConfig(
                "width, depth, and action count must be positive".into(),
            ));
        }
        if self.input_len() == 0 {
            return Err(NeuralError::InvalidConfig("input dims must be positive".into()));
        }
        if self.l2_lambda < 0.0 || !self.l2_lambda.is_finite() {
            return Err(NeuralError::InvalidConfig("lambda must be finite and >= 0".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(NeuralError::InvalidConfig("learning rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Row-major dense weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResBlock {
    pub w1: Matrix,
    pub b1: Vec<f32>,
    pub w2: Matrix,
    pub b2: Vec<f32>,
}

/// All weights of the network, together with the config that fixes their
/// shapes. The tensor order used by checkpoints and gradient code is:
/// input layer, blocks in order (w1, b1, w2, b2), policy head, value head.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub config: NetConfig,
    pub input_w: Matrix,
    pub input_b: Vec<f32>,
    pub blocks: Vec<ResBlock>,
    pub policy_w: Matrix,
    pub policy_b: Vec<f32>,
    pub value_w: Vec<f32>,
    pub value_b: f32,
}

impl NetworkParams {
    fn zeros(config: NetConfig) -> NetworkParams {
        let (width, in_len, actions) = (config.hidden_width, config.input_len(), config.action_count);
        NetworkParams {
            blocks: (0..config.depth)
                .map(|_| ResBlock {
                    w1: Matrix::zeros(width, width),
                    b1: vec![0.0; width],
                    w2: Matrix::zeros(width, width),
                    b2: vec![0.0; width],
                })
                .collect(),
            input_w: Matrix::zeros(width, in_len),
            input_b: vec![0.0; width],
            policy_w: Matrix::zeros(actions, width),
            policy_b: vec![0.0; actions],
            value_w: vec![0.0; width],
            value_b: 0.0,
            config,
        }
    }

    /// Flat views of every tensor in checkpoint order, with group names.
    pub fn tensors(&self) -> Vec<(String, &[f32])> {
        let mut out: Vec<(String, &[f32])> = Vec::with_capacity(6 + 4 * self.blocks.len());
        out.push(("input.w".into(), &self.input_w.data));
        out.push(("input.b".into(), &self.input_b));
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("block{i}.w1"), &b.w1.data));
            out.push((format!("block{i}.b1"), &b.b1));
            out.push((format!("block{i}.w2"), &b.w2.data));
            out.push((format!("block{i}.b2"), &b.b2));
        }
        out.push(("policy.w".into(), &self.policy_w.data));
        out.push(("policy.b".into(), &self.policy_b));
        out.push(("value.w".into(), &self.value_w));
        out.push(("value.b".into(), std::slice::from_ref(&self.value_b)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f32])> {
        let mut out: Vec<(String, &mut [f32])> = Vec::with_capacity(6 + 4 * self.blocks.len());
        out.push(("input.w".into(), self.input_w.data.as_mut_slice()));
        out.push(("input.b".into(), self.input_b.as_mut_slice()));
        for (i, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("block{i}.w1"), b.w1.data.as_mut_slice()));
            out.push((format!("block{i}.b1"), b.b1.as_mut_slice()));
            out.push((format!("block{i}.w2"), b.w2.data.as_mut_slice()));
            out.push((format!("block{i}.b2"), b.b2.as_mut_slice()));
        }
        out.push(("policy.w".into(), self.policy_w.data.as_mut_slice()));
        out.push(("policy.b".into(), self.policy_b.as_mut_slice()));
        out.push(("value.w".into(), self.value_w.as_mut_slice()));
        out.push(("value.b".into(), std::slice::from_mut(&mut self.value_b)));
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// One prediction: masked policy probabilities and a value in (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub p: Vec<f64>,
    pub v: f64,
}

/// One training example.
#[derive(Debug, Clone)]
pub struct TrainRow {
    pub encoding: Vec<f32>,
    pub mask: Vec<bool>,
    /// Policy target, normalized over the mask.
    pub pi: Vec<f32>,
    /// Outcome target from the mover's perspective.
    pub z: f32,
}

#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub rows: Vec<TrainRow>,
}

/// Optimizer state. Plain SGD carries no moments; the step counter is
/// kept for bookkeeping and as the extension point for richer optimizers.
#[derive(Debug, Clone, Default)]
pub struct OptState {
    pub steps: u64,
}

/// Deterministic He-style initialization: trunk weights from
/// N(0, sqrt(2 / fan_in)), head weights from N(0, sqrt(1 / fan_in)),
/// all biases zero.
pub fn init(config: &NetConfig) -> Result<NetworkParams, NeuralError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    config.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = NetworkParams::zeros(config.clone());
    let fill = |m: &mut Matrix, std: f64, rng: &mut rand_chacha::ChaCha8Rng| {
        let normal = Normal::new(0.0, std).expect("valid std");
        for v in &mut m.data {
            *v = normal.sample(rng) as f32;
        }
    };
    let width = config.hidden_width as f64;
    let in_len = config.input_len() as f64;
    fill(&mut params.input_w, (2.0 / in_len).sqrt(), &mut rng);
    for i in 0..params.blocks.len() {
        let std = (2.0 / width).sqrt();
        fill(&mut params.blocks[i].w1, std, &mut rng);
        fill(&mut params.blocks[i].w2, std, &mut rng);
    }
    fill(&mut params.policy_w, (1.0 / width).sqrt(), &mut rng);
    let head = Normal::new(0.0, (1.0 / width).sqrt()).expect("valid std");
    for v in &mut params.value_w {
        *v = head.sample(&mut rng) as f32;
    }
    Ok(params)
}
