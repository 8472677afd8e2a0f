//! PUCT Monte-Carlo tree search.
//!
//! Each simulation walks from the root by maximizing `Q + U` with
//! `U = c * P * sqrt(sum_b N) / (1 + N)`, expands the first unexpanded
//! node it reaches (initializing edge priors from the masked network
//! policy), and backs the leaf value up the traversed path with the sign
//! alternating every ply. The first simulation expands the root itself
//! and adds no edge visits, so after `n_sims` simulations the root's
//! visit counts sum to `n_sims - 1`.
//!
//! Values are mover-relative throughout: an edge's `Q` is the expected
//! outcome for the player to move at the edge's parent node. Terminal
//! leaves back up their exact game outcome, never the network value.

use crate::game::{self, ActionId, GameId, GameState};
use crate::neural::{self, NetworkParams, NeuralError};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot search from a terminal root")]
    TerminalRoot,
    #[error("visit-count policy undefined: no root edge has been visited")]
    EmptyVisits,
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Optional Dirichlet noise mixed into the root priors. Off by default;
/// kept as an experiment knob only.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DirichletNoise {
    pub alpha: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SearchConfig {
    /// Simulations per move.
    pub n_sims: u32,
    /// Exploration coefficient `c` in the upper confidence bound.
    pub c_explore: f64,
    /// Sampling temperature while the move number is below
    /// `tau_drop_ply`; afterwards moves are argmax.
    pub temperature: f64,
    pub tau_drop_ply: u16,
    pub dirichlet: Option<DirichletNoise>,
}

impl SearchConfig {
    /// Per-game defaults: 25 simulations (50 for Connect Four), c = 2.0,
    /// initial temperature 1.0 dropped after ply 5 / 9 / 21.
    pub fn for_game(game: GameId) -> SearchConfig {
        let (n_sims, tau_drop_ply) = match game {
            GameId::Ttt3 => (25, 5),
            GameId::Ttt4 => (25, 9),
            GameId::C4 => (50, 21),
        };
        SearchConfig { n_sims, c_explore: 2.0, temperature: 1.0, tau_drop_ply, dirichlet: None }
    }
}

/// Statistics of one root-to-child edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStats {
    pub action: ActionId,
    /// Visit count.
    pub n: u32,
    /// Total backed-up value.
    pub w: f64,
    /// Mean value, `w / n` (0 while unvisited).
    pub q: f64,
    /// Prior probability from the network policy.
    pub p: f64,
}

struct Node {
    state: GameState,
    edges: Vec<EdgeStats>,
    expanded: bool,
}

/// The tree produced by [`run_search`]. Nodes are keyed by state
/// identity within one search, so transposed paths share statistics.
pub struct SearchTree {
    nodes: Vec<Node>,
    index: HashMap<GameState, usize>,
    simulations: u32,
    action_count: usize,
}

impl SearchTree {
    pub fn root_state(&self) -> &GameState {
        &self.nodes[0].state
    }

    pub fn root_edges(&self) -> &[EdgeStats] {
        &self.nodes[0].edges
    }

    pub fn simulations(&self) -> u32 {
        self.simulations
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Structured text dump for fixtures and debugging: one line per
    /// node followed by one line per edge.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, node) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "node {id} state \"{}\" expanded {}",
                node.state.key(),
                node.expanded
            );
            for e in &node.edges {
                let _ = writeln!(
                    out,
                    "  edge a={} N={} W={:.6} Q={:.6} P={:.6}",
                    e.action, e.n, e.w, e.q, e.p
                );
            }
        }
        out
    }
}

/// Argmax of `Q + c * P * sqrt(sum_b N) / (1 + N)` over the edges; ties
/// prefer the higher prior, then the lower action index.
pub fn select_edge(edges: &[EdgeStats], c: f64) -> ActionId {
    let total_n: u32 = edges.iter().map(|e| e.n).sum();
    let sqrt_total = (total_n as f64).sqrt();
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for (i, e) in edges.iter().enumerate() {
        let score = e.q + c * e.p * sqrt_total / (1.0 + e.n as f64);
        let better = score > best_score
            || (score == best_score && (e.p > edges[best].p));
        if i == 0 || better {
            best = i;
            best_score = score;
        }
    }
    edges[best].action
}

/// Visit-count policy over the full action space:
/// `pi(a) = N(a)^(1/tau) / sum_b N(b)^(1/tau)`. `tau = 0` is an exact
/// argmax with ascending-index tie-break.
pub fn policy_from_visits(
    edges: &[EdgeStats],
    action_count: usize,
    tau: f64,
) -> Result<Vec<f64>, SearchError> {
    let mut pi = vec![0.0; action_count];
    if tau == 0.0 {
        let mut best = 0usize;
        for (i, e) in edges.iter().enumerate() {
            if e.n > edges[best].n {
                best = i;
            }
        }
        pi[edges[best].action] = 1.0;
        return Ok(pi);
    }
    let total: u32 = edges.iter().map(|e| e.n).sum();
    if total == 0 {
        return Err(SearchError::EmptyVisits);
    }
    // weights computed in log space so small temperatures stay finite
    let max_ln = edges
        .iter()
        .filter(|e| e.n > 0)
        .map(|e| (e.n as f64).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for e in edges {
        if e.n > 0 {
            let w = (((e.n as f64).ln() - max_ln) / tau).exp();
            pi[e.action] = w;
            sum += w;
        }
    }
    for p in &mut pi {
        *p /= sum;
    }
    Ok(pi)
}

/// The visit-count policy of a finished search at temperature `tau`.
pub fn search_policy(tree: &SearchTree, tau: f64) -> Result<Vec<f64>, SearchError> {
    policy_from_visits(tree.root_edges(), tree.action_count, tau)
}

/// Run `cfg.n_sims` simulations from `root` and return the tree.
/// Deterministic given (state, params, cfg, rng seed).
pub fn run_search(
    root: &GameState,
    params: &NetworkParams,
    cfg: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SearchTree, SearchError> {
    if game::is_terminal(root) {
        return Err(SearchError::TerminalRoot);
    }
    let action_count = root.game().action_count();
    let mut tree = SearchTree {
        nodes: vec![Node { state: root.clone(), edges: Vec::new(), expanded: false }],
        index: HashMap::from([(root.clone(), 0usize)]),
        simulations: 0,
        action_count,
    };

    for _ in 0..cfg.n_sims {
        // Descend to a terminal state or an unexpanded node.
        let mut path: Vec<(usize, usize)> = Vec::new(); // (node, edge index)
        let mut current = 0usize;
        let leaf_value: f64;
        loop {
            if let Some(outcome) = game::terminal_outcome(&tree.nodes[current].state) {
                leaf_value = outcome.for_player(tree.nodes[current].state.to_move()) as f64;
                break;
            }
            if !tree.nodes[current].expanded {
                let is_root = current == 0;
                leaf_value = expand(&mut tree.nodes[current], params)?;
                if is_root {
                    if let Some(noise) = cfg.dirichlet {
                        mix_root_noise(&mut tree.nodes[0].edges, noise, rng);
                    }
                }
                break;
            }
            let action = select_edge(&tree.nodes[current].edges, cfg.c_explore);
            let edge_idx = tree.nodes[current]
                .edges
                .iter()
                .position(|e| e.action == action)
                .expect("selected edge exists");
            path.push((current, edge_idx));
            let next_state = game::apply_action(&tree.nodes[current].state, action)
                .expect("edge actions are legal");
            current = match tree.index.get(&next_state) {
                Some(&id) => id,
                None => {
                    let id = tree.nodes.len();
                    tree.index.insert(next_state.clone(), id);
                    tree.nodes.push(Node { state: next_state, edges: Vec::new(), expanded: false });
                    id
                }
            };
        }

        // Back up: the leaf value is mover-relative at the leaf, so it
        // flips sign at every edge on the way to the root.
        let mut v = leaf_value;
        for &(node, edge) in path.iter().rev() {
            v = -v;
            let e = &mut tree.nodes[node].edges[edge];
            e.n += 1;
            e.w += v;
            e.q = e.w / e.n as f64;
        }
        tree.simulations += 1;
    }
    Ok(tree)
}

/// Initialize a node's edges with `N = W = Q = 0` and priors from the
/// masked network policy; returns the network value at the node.
fn expand(node: &mut Node, params: &NetworkParams) -> Result<f64, NeuralError> {
    let mask = game::legal_mask(&node.state);
    let pred = neural::forward(params, &game::encode(&node.state), &mask)?;
    node.edges = game::legal_actions(&node.state)
        .into_iter()
        .map(|a| EdgeStats { action: a, n: 0, w: 0.0, q: 0.0, p: pred.p[a] })
        .collect();
    node.expanded = true;
    Ok(pred.v)
}

fn mix_root_noise(edges: &mut [EdgeStats], noise: DirichletNoise, rng: &mut ChaCha8Rng) {
    use rand_distr::{Distribution, Gamma};
    if edges.is_empty() || noise.epsilon <= 0.0 {
        return;
    }
    let gamma = Gamma::new(noise.alpha, 1.0).expect("positive alpha");
    let draws: Vec<f64> = edges.iter().map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return;
    }
    for (e, d) in edges.iter_mut().zip(draws) {
        e.p = (1.0 - noise.epsilon) * e.p + noise.epsilon * d / sum;
    }
}
