//! Forward pass, loss, exact backward pass, and the SGD step.

use super::{Matrix, NetworkParams, NeuralError, OptState, Prediction, TrainBatch};
use crate::game::StateEncoding;

/// Floor inside the cross-entropy log so masked-out or collapsed
/// probabilities cannot produce -inf.
pub const LOG_FLOOR: f64 = 1e-12;

fn matvec(m: &Matrix, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.cols, x.len());
    debug_assert_eq!(m.rows, out.len());
    for (o, row) in out.iter_mut().zip(m.data.chunks_exact(m.cols)) {
        *o = row.iter().zip(x).map(|(w, xv)| *w as f64 * xv).sum();
    }
}

/// out[j] += sum_i m[i][j] * g[i]
fn matvec_transpose_acc(m: &Matrix, g: &[f64], out: &mut [f64]) {
    debug_assert_eq!(m.rows, g.len());
    debug_assert_eq!(m.cols, out.len());
    for (gi, row) in g.iter().zip(m.data.chunks_exact(m.cols)) {
        if *gi == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(row) {
            *o += *w as f64 * gi;
        }
    }
}

/// d[i][j] += g[i] * x[j]
fn outer_acc(d: &mut [f64], g: &[f64], x: &[f64]) {
    debug_assert_eq!(d.len(), g.len() * x.len());
    for (gi, drow) in g.iter().zip(d.chunks_exact_mut(x.len())) {
        if *gi == 0.0 {
            continue;
        }
        for (dv, xv) in drow.iter_mut().zip(x) {
            *dv += gi * xv;
        }
    }
}

fn relu_inplace(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

struct BlockCache {
    h_in: Vec<f64>,
    a: Vec<f64>,
    t: Vec<f64>,
    pre: Vec<f64>,
}

struct ForwardCache {
    x: Vec<f64>,
    z0: Vec<f64>,
    blocks: Vec<BlockCache>,
    h_out: Vec<f64>,
    p: Vec<f64>,
    v: f64,
}

fn forward_cached(
    params: &NetworkParams,
    encoding: &[f32],
    mask: &[bool],
) -> Result<ForwardCache, NeuralError> {
    let cfg = &params.config;
    if encoding.len() != cfg.input_len() {
        return Err(NeuralError::ShapeMismatch(format!(
            "encoding has {} values, network expects {}",
            encoding.len(),
            cfg.input_len()
        )));
    }
    if mask.len() != cfg.action_count {
        return Err(NeuralError::ShapeMismatch(format!(
            "mask has {} entries, network expects {}",
            mask.len(),
            cfg.action_count
        )));
    }
    if !mask.iter().any(|m| *m) {
        return Err(NeuralError::ShapeMismatch("legal mask is empty".into()));
    }
    let width = cfg.hidden_width;
    let x: Vec<f64> = encoding.iter().map(|v| *v as f64).collect();

    let mut z0 = vec![0.0; width];
    matvec(&params.input_w, &x, &mut z0);
    for (z, b) in z0.iter_mut().zip(&params.input_b) {
        *z += *b as f64;
    }
    let mut h = z0.clone();
    relu_inplace(&mut h);

    let mut blocks = Vec::with_capacity(params.blocks.len());
    for block in &params.blocks {
        let h_in = h;
        let mut a = vec![0.0; width];
        matvec(&block.w1, &h_in, &mut a);
        for (av, b) in a.iter_mut().zip(&block.b1) {
            *av += *b as f64;
        }
        let mut t = a.clone();
        relu_inplace(&mut t);
        let mut pre = vec![0.0; width];
        matvec(&block.w2, &t, &mut pre);
        for ((pv, b), hv) in pre.iter_mut().zip(&block.b2).zip(&h_in) {
            *pv += *b as f64 + hv;
        }
        h = pre.clone();
        relu_inplace(&mut h);
        blocks.push(BlockCache { h_in, a, t, pre });
    }

    let mut logits = vec![0.0; cfg.action_count];
    matvec(&params.policy_w, &h, &mut logits);
    for (l, b) in logits.iter_mut().zip(&params.policy_b) {
        *l += *b as f64;
    }
    let p = masked_softmax(&logits, mask);

    let mut y = params.value_b as f64;
    for (w, hv) in params.value_w.iter().zip(&h) {
        y += *w as f64 * hv;
    }
    let v = y.tanh();

    Ok(ForwardCache { x, z0, blocks, h_out: h, p, v })
}

/// Softmax over legal entries only; illegal entries get exactly zero.
fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for ((o, l), m) in out.iter_mut().zip(logits).zip(mask) {
        if *m {
            *o = (l - max).exp();
            sum += *o;
        }
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

/// Evaluate the network: masked softmax policy over the legal actions and
/// a tanh-bounded value from the mover's perspective.
pub fn forward(
    params: &NetworkParams,
    encoding: &StateEncoding,
    mask: &[bool],
) -> Result<Prediction, NeuralError> {
    let cache = forward_cached(params, &encoding.planes, mask)?;
    Ok(Prediction { p: cache.p, v: cache.v })
}

/// Loss decomposition. `total = value_mse + policy_ce + l2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossParts {
    pub value_mse: f64,
    pub policy_ce: f64,
    pub l2: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.value_mse + self.policy_ce + self.l2
    }
}

fn l2_term(params: &NetworkParams) -> f64 {
    let sq: f64 = params
        .tensors()
        .iter()
        .map(|(_, t)| t.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>())
        .sum();
    params.config.l2_lambda * sq
}

/// Mean squared value error plus policy cross-entropy over the batch,
/// plus the L2 penalty on all parameters.
pub fn loss(params: &NetworkParams, batch: &TrainBatch) -> Result<(f64, LossParts), NeuralError> {
    if batch.rows.is_empty() {
        return Err(NeuralError::ShapeMismatch("empty batch".into()));
    }
    let mut value_mse = 0.0;
    let mut policy_ce = 0.0;
    for row in &batch.rows {
        let cache = forward_cached(params, &row.encoding, &row.mask)?;
        let dv = row.z as f64 - cache.v;
        value_mse += dv * dv;
        let mut ce = 0.0;
        for ((pi, p), m) in row.pi.iter().zip(&cache.p).zip(&row.mask) {
            if *m && *pi > 0.0 {
                ce -= *pi as f64 * p.max(LOG_FLOOR).ln();
            }
        }
        policy_ce += ce;
    }
    let n = batch.rows.len() as f64;
    let parts = LossParts { value_mse: value_mse / n, policy_ce: policy_ce / n, l2: l2_term(params) };
    Ok((parts.total(), parts))
}

struct Gradients {
    input_w: Vec<f64>,
    input_b: Vec<f64>,
    blocks: Vec<[Vec<f64>; 4]>, // w1, b1, w2, b2
    policy_w: Vec<f64>,
    policy_b: Vec<f64>,
    value_w: Vec<f64>,
    value_b: f64,
}

impl Gradients {
    fn zeros(params: &NetworkParams) -> Gradients {
        let width = params.config.hidden_width;
        Gradients {
            input_w: vec![0.0; params.input_w.data.len()],
            input_b: vec![0.0; width],
            blocks: params
                .blocks
                .iter()
                .map(|_| {
                    [vec![0.0; width * width], vec![0.0; width], vec![0.0; width * width], vec![0.0; width]]
                })
                .collect(),
            policy_w: vec![0.0; params.policy_w.data.len()],
            policy_b: vec![0.0; params.config.action_count],
            value_w: vec![0.0; width],
            value_b: 0.0,
        }
    }
}

fn accumulate_row(params: &NetworkParams, grads: &mut Gradients, cache: &ForwardCache, pi: &[f32], z: f64) {
    let width = params.config.hidden_width;

    // value head: d/dy of (z - tanh(y))^2
    let dl_dy = -2.0 * (z - cache.v) * (1.0 - cache.v * cache.v);
    // policy head: d/dlogits of -pi . log softmax = p - pi on legal entries
    let dlogits: Vec<f64> = cache
        .p
        .iter()
        .zip(pi)
        .map(|(p, t)| if *p > 0.0 || *t > 0.0 { p - *t as f64 } else { 0.0 })
        .collect();

    outer_acc(&mut grads.policy_w, &dlogits, &cache.h_out);
    for (g, d) in grads.policy_b.iter_mut().zip(&dlogits) {
        *g += d;
    }
    for (g, h) in grads.value_w.iter_mut().zip(&cache.h_out) {
        *g += dl_dy * h;
    }
    grads.value_b += dl_dy;

    let mut g_h = vec![0.0; width];
    matvec_transpose_acc(&params.policy_w, &dlogits, &mut g_h);
    for (g, w) in g_h.iter_mut().zip(&params.value_w) {
        *g += dl_dy * *w as f64;
    }

    for (block, (bc, bg)) in params
        .blocks
        .iter()
        .zip(cache.blocks.iter().zip(&mut grads.blocks))
        .rev()
    {
        // through the post-addition relu
        let g_pre: Vec<f64> =
            g_h.iter().zip(&bc.pre).map(|(g, pre)| if *pre > 0.0 { *g } else { 0.0 }).collect();
        outer_acc(&mut bg[2], &g_pre, &bc.t);
        for (g, d) in bg[3].iter_mut().zip(&g_pre) {
            *g += d;
        }
        let mut g_t = vec![0.0; width];
        matvec_transpose_acc(&block.w2, &g_pre, &mut g_t);
        let g_a: Vec<f64> =
            g_t.iter().zip(&bc.a).map(|(g, a)| if *a > 0.0 { *g } else { 0.0 }).collect();
        outer_acc(&mut bg[0], &g_a, &bc.h_in);
        for (g, d) in bg[1].iter_mut().zip(&g_a) {
            *g += d;
        }
        // skip connection plus the dense path
        let mut g_next = g_pre;
        matvec_transpose_acc(&block.w1, &g_a, &mut g_next);
        g_h = g_next;
    }

    let g_z0: Vec<f64> =
        g_h.iter().zip(&cache.z0).map(|(g, z0)| if *z0 > 0.0 { *g } else { 0.0 }).collect();
    outer_acc(&mut grads.input_w, &g_z0, &cache.x);
    for (g, d) in grads.input_b.iter_mut().zip(&g_z0) {
        *g += d;
    }
}

fn batch_gradients(
    params: &NetworkParams,
    batch: &TrainBatch,
) -> Result<(Gradients, LossParts), NeuralError> {
    if batch.rows.is_empty() {
        return Err(NeuralError::ShapeMismatch("empty batch".into()));
    }
    let mut grads = Gradients::zeros(params);
    let mut value_mse = 0.0;
    let mut policy_ce = 0.0;
    for row in &batch.rows {
        let cache = forward_cached(params, &row.encoding, &row.mask)?;
        let dv = row.z as f64 - cache.v;
        value_mse += dv * dv;
        for ((pi, p), m) in row.pi.iter().zip(&cache.p).zip(&row.mask) {
            if *m && *pi > 0.0 {
                policy_ce -= *pi as f64 * p.max(LOG_FLOOR).ln();
            }
        }
        accumulate_row(params, &mut grads, &cache, &row.pi, row.z as f64);
    }
    let n = batch.rows.len() as f64;
    let parts =
        LossParts { value_mse: value_mse / n, policy_ce: policy_ce / n, l2: l2_term(params) };
    Ok((grads, parts))
}

impl Gradients {
    /// Raw accumulated data gradients in tensor order, before the batch
    /// mean and the L2 term are applied.
    fn slices(&self) -> Vec<(&'static str, &[f64])> {
        let mut v: Vec<(&'static str, &[f64])> = vec![
            ("input.w", self.input_w.as_slice()),
            ("input.b", self.input_b.as_slice()),
        ];
        for bg in &self.blocks {
            v.push(("block.w1", bg[0].as_slice()));
            v.push(("block.b1", bg[1].as_slice()));
            v.push(("block.w2", bg[2].as_slice()));
            v.push(("block.b2", bg[3].as_slice()));
        }
        v.push(("policy.w", self.policy_w.as_slice()));
        v.push(("policy.b", self.policy_b.as_slice()));
        v.push(("value.w", self.value_w.as_slice()));
        v.push(("value.b", std::slice::from_ref(&self.value_b)));
        v
    }
}

/// The exact gradient of [`loss`] with respect to every parameter, in
/// tensor order with group names. Mainly a verification surface for
/// finite-difference checks.
pub fn loss_gradients(
    params: &NetworkParams,
    batch: &TrainBatch,
) -> Result<Vec<(String, Vec<f64>)>, NeuralError> {
    let (grads, _) = batch_gradients(params, batch)?;
    let n = batch.rows.len() as f64;
    let lambda = params.config.l2_lambda;
    let out = grads
        .slices()
        .iter()
        .zip(params.tensors())
        .map(|((name, g), (_, w))| {
            let full: Vec<f64> = g
                .iter()
                .zip(w.iter())
                .map(|(gv, wv)| gv / n + 2.0 * lambda * (*wv as f64))
                .collect();
            (name.to_string(), full)
        })
        .collect();
    Ok(out)
}

/// One SGD step on the mean batch loss. Gradients are the exact
/// gradients of [`loss`]; a non-finite gradient aborts the step without
/// touching the parameters.
pub fn grad_step(
    params: &mut NetworkParams,
    batch: &TrainBatch,
    opt: &mut OptState,
) -> Result<StepStats, NeuralError> {
    let (grads, parts) = batch_gradients(params, batch)?;
    let n = batch.rows.len() as f64;
    let lambda = params.config.l2_lambda;
    let lr = params.config.learning_rate;

    let grad_slices = grads.slices();
    for (name, g) in &grad_slices {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFiniteGradient { term: (*name).to_string() });
        }
    }

    let mut grad_norm_sq = 0.0;
    {
        let mut tensors = params.tensors_mut();
        debug_assert_eq!(tensors.len(), grad_slices.len());
        for ((_, t), (_, g)) in tensors.iter_mut().zip(&grad_slices) {
            for (w, gv) in t.iter_mut().zip(g.iter()) {
                let full = gv / n + 2.0 * lambda * (*w as f64);
                grad_norm_sq += full * full;
                *w = (*w as f64 - lr * full) as f32;
            }
        }
    }
    opt.steps += 1;
    Ok(StepStats { loss: parts, grad_norm: grad_norm_sq.sqrt() })
}

/// Per-step report: the loss decomposition at the pre-step parameters
/// and the L2 norm of the applied gradient.
#[derive(Debug, Clone, Copy)]
pub struct StepStats {
    pub loss: LossParts,
    pub grad_norm: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{encode, initial_state, legal_mask, GameId};
    use crate::neural::{init, NetConfig, TrainRow};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_config(seed: u64) -> NetConfig {
        NetConfig {
            input_dims: (3, 3, 3),
            hidden_width: 8,
            depth: 1,
            action_count: 9,
            l2_lambda: 1e-4,
            learning_rate: 1e-3,
            seed,
        }
    }

    fn random_row(cfg: &NetConfig, rng: &mut ChaCha8Rng) -> TrainRow {
        let encoding: Vec<f32> = (0..cfg.input_len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut mask = vec![false; cfg.action_count];
        let legal = rng.gen_range(1..=cfg.action_count);
        for m in mask.iter_mut().take(legal) {
            *m = true;
        }
        let mut pi: Vec<f32> = mask
            .iter()
            .map(|m| if *m { rng.gen_range(0.01..1.0) } else { 0.0 })
            .collect();
        let sum: f32 = pi.iter().sum();
        for p in &mut pi {
            *p /= sum;
        }
        let z = [-1.0f32, 0.0, 1.0][rng.gen_range(0..3)];
        TrainRow { encoding, mask, pi, z }
    }

    #[test]
    fn zero_weights_give_uniform_policy_and_zero_value() {
        let mut params = init(&NetConfig::for_game(GameId::Ttt3, 1)).unwrap();
        for (_, t) in params.tensors_mut() {
            t.fill(0.0);
        }
        let s = initial_state(GameId::Ttt3);
        let pred = forward(&params, &encode(&s), &legal_mask(&s)).unwrap();
        assert_eq!(pred.v, 0.0);
        for p in pred.p {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_legal_action_gets_probability_one() {
        let params = init(&NetConfig::for_game(GameId::Ttt3, 2)).unwrap();
        let s = initial_state(GameId::Ttt3);
        let mut mask = vec![false; 9];
        mask[6] = true;
        let pred = forward(&params, &encode(&s), &mask).unwrap();
        assert_eq!(pred.p[6], 1.0);
        assert_eq!(pred.p.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn policy_is_normalized_and_masked_for_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..20 {
            let params = init(&NetConfig::for_game(GameId::Ttt3, seed)).unwrap();
            let row = random_row(&params.config, &mut rng);
            let enc = crate::game::StateEncoding { planes: row.encoding.clone(), height: 3, width: 3 };
            let pred = forward(&params, &enc, &row.mask).unwrap();
            let legal_sum: f64 =
                pred.p.iter().zip(&row.mask).filter(|(_, m)| **m).map(|(p, _)| *p).sum();
            assert!((legal_sum - 1.0).abs() < 1e-9);
            for (p, m) in pred.p.iter().zip(&row.mask) {
                if !*m {
                    assert_eq!(*p, 0.0);
                }
            }
            assert!(pred.v.abs() < 1.0);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let params = init(&NetConfig::for_game(GameId::Ttt3, 4)).unwrap();
        let s = initial_state(GameId::C4);
        assert!(matches!(
            forward(&params, &encode(&s), &legal_mask(&s)),
            Err(NeuralError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn loss_parts_add_up_and_are_nonnegative() {
        let params = init(&tiny_config(5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let batch = TrainBatch { rows: (0..4).map(|_| random_row(&params.config, &mut rng)).collect() };
        let (total, parts) = loss(&params, &batch).unwrap();
        assert!((total - (parts.value_mse + parts.policy_ce + parts.l2)).abs() < 1e-12);
        assert!(parts.value_mse >= 0.0);
        assert!(parts.l2 >= 0.0);
    }

    #[test]
    fn matched_one_hot_prediction_has_zero_loss() {
        // One legal action forces p to a one-hot match with pi, and a
        // huge value bias saturates v onto z; with lambda = 0 the loss
        // collapses to ~0.
        let mut cfg = tiny_config(7);
        cfg.l2_lambda = 0.0;
        let mut params = init(&cfg).unwrap();
        params.value_b = 30.0; // tanh(30) ~ 1 - 2e-26
        let mut mask = vec![false; 9];
        mask[0] = true;
        let mut pi = vec![0.0; 9];
        pi[0] = 1.0;
        let row = TrainRow { encoding: vec![0.5; 27], mask, pi, z: 1.0 };
        let (total, _) = loss(&params, &TrainBatch { rows: vec![row] }).unwrap();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn saturated_wrong_value_costs_four() {
        let mut cfg = tiny_config(8);
        cfg.l2_lambda = 0.0;
        let mut params = init(&cfg).unwrap();
        params.value_b = -30.0; // v ~ -1 while z = +1
        let mut mask = vec![false; 9];
        mask[0] = true;
        let mut pi = vec![0.0; 9];
        pi[0] = 1.0;
        let row = TrainRow { encoding: vec![0.5; 27], mask, pi, z: 1.0 };
        let (_, parts) = loss(&params, &TrainBatch { rows: vec![row] }).unwrap();
        assert!((parts.value_mse - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_learning_rate_leaves_params_unchanged() {
        let mut cfg = tiny_config(9);
        cfg.learning_rate = 0.0;
        let mut params = init(&cfg).unwrap();
        let before = params.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let batch = TrainBatch { rows: vec![random_row(&cfg, &mut rng)] };
        grad_step(&mut params, &batch, &mut OptState::default()).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        // width-8 / depth-1 network, random batches, step 1e-4.
        let cfg = tiny_config(11);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let batch = TrainBatch { rows: (0..3).map(|_| random_row(&cfg, &mut rng)).collect() };
        let params = init(&cfg).unwrap();
        let analytic = loss_gradients(&params, &batch).unwrap();

        let mut worst: f64 = 0.0;
        let step = 1e-4f32;
        let mut probe = params.clone();
        let tensor_count = probe.tensors().len();
        for ti in 0..tensor_count {
            let len = probe.tensors()[ti].1.len();
            for i in 0..len {
                let w0 = probe.tensors()[ti].1[i];
                probe.tensors_mut()[ti].1[i] = w0 + step;
                let hi_w = probe.tensors()[ti].1[i] as f64;
                let (hi, _) = loss(&probe, &batch).unwrap();
                probe.tensors_mut()[ti].1[i] = w0 - step;
                let lo_w = probe.tensors()[ti].1[i] as f64;
                let (lo, _) = loss(&probe, &batch).unwrap();
                probe.tensors_mut()[ti].1[i] = w0;

                let fd = (hi - lo) / (hi_w - lo_w);
                let an = analytic[ti].1[i];
                let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        assert!(worst < 1e-4, "max relative gradient error {worst}");
    }

    #[test]
    fn repeated_steps_on_one_batch_decrease_the_loss() {
        let cfg = tiny_config(13);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let batch = TrainBatch { rows: (0..6).map(|_| random_row(&cfg, &mut rng)).collect() };
        let mut params = init(&cfg).unwrap();
        let mut opt = OptState::default();
        let mut prev = loss(&params, &batch).unwrap().0;
        for _ in 0..100 {
            grad_step(&mut params, &batch, &mut opt).unwrap();
            let now = loss(&params, &batch).unwrap().0;
            assert!(now <= prev + 1e-9, "loss rose from {prev} to {now}");
            prev = now;
        }
        assert_eq!(opt.steps, 100);
    }
}
