//! Fitting the decoder parameters by backpropagation through the unrolled
//! inner loop.
//!
//! The inner iteration is differentiable in `alpha`, `beta[t]`, and
//! `gamma[t]`, so unrolling `t` iterations gives a feedforward computation
//! whose squared error against the transmitted codeword,
//!
//! ```text
//! h(theta) = (1/K) * sum_k || c_k - s_final(y_k, s1_k; theta) ||^2
//! ```
//!
//! can be driven down with a stochastic optimizer. Training is incremental:
//! generation `t` unrolls `t` iterations and fits `alpha`, `beta[0..t]`,
//! `gamma[0..t]`, then generation `t+1` appends one more iteration whose
//! `beta`/`gamma` start from the values trained for iteration `t`. Each
//! update draws a fresh mini-batch of (codeword, received word, random
//! start) triples.
//!
//! The backward pass runs the recursion in reverse over a tape of recorded
//! states. The hinge in the penalty is flat at zero slack, so inactive
//! constraints pass no gradient.

use crate::channel::{modulate, transmit, ChannelConfig, ChannelError};
use crate::code::{GeneratorMatrix, ParityCheckMatrix};
use crate::decoder::{tpg_step, StepScratch, TpgParams};
use crate::polytope::PolytopeMatrices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("forward pass produced a non-finite state at inner iteration {iteration}")]
    NonFiniteState { iteration: usize },
    #[error("non-finite gradient at generation {generation}, update {update}")]
    NonFiniteGradient { generation: usize, update: usize },
    #[error("unroll horizon {t} exceeds the schedule length {t_max}")]
    HorizonTooLong { t: usize, t_max: usize },
    #[error("unroll horizon must be at least 1")]
    ZeroHorizon,
    #[error("mini-batch is empty")]
    EmptyBatch,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

// ---- configuration ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Starting values for a fresh, untrained schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitValues {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for InitValues {
    fn default() -> Self {
        Self {
            alpha: 4.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Final inner-iteration budget; one generation per added iteration.
    pub t_max: usize,
    /// Adam updates per generation.
    pub updates_per_generation: usize,
    /// Samples per mini-batch.
    pub batch_size: usize,
    /// Channel operating point used to synthesize training data.
    pub train_snr_db: f64,
    pub learning_rate: f64,
    pub adam: AdamHyper,
    pub init: InitValues,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            t_max: 25,
            updates_per_generation: 500,
            batch_size: 50,
            train_snr_db: 4.0,
            learning_rate: 0.005,
            adam: AdamHyper::default(),
            init: InitValues::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.t_max == 0 {
            return Err(TrainError::Config("t_max must be at least 1".into()));
        }
        if self.updates_per_generation == 0 {
            return Err(TrainError::Config(
                "updates_per_generation must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(TrainError::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config(
                "learning rate must be positive and finite".into(),
            ));
        }
        if !self.train_snr_db.is_finite() {
            return Err(TrainError::Config("training SNR must be finite".into()));
        }
        if !(self.init.alpha.is_finite() && self.init.alpha > 0.0) {
            return Err(TrainError::Config(
                "initial alpha must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

// ---- training data ----

/// One supervised triple: the transmitted codeword, the received vector,
/// and the random starting point handed to the unrolled decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub codeword: Vec<u8>,
    pub received: Vec<f64>,
    pub init: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch {
    pub samples: Vec<TrainSample>,
}

/// Draws `k` fresh triples: uniform random codeword, one channel transmit,
/// and a uniform random start in the unit hypercube.
pub fn make_minibatch<R: Rng + ?Sized>(
    k: usize,
    generator: &GeneratorMatrix,
    channel: &ChannelConfig,
    rng: &mut R,
) -> MiniBatch {
    let n = generator.code_length();
    let samples = (0..k)
        .map(|_| {
            let codeword = generator.random_codeword(rng);
            let out = transmit(&modulate(&codeword.bits), channel, rng);
            let init: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            TrainSample {
                codeword: codeword.bits,
                received: out.received,
                init,
            }
        })
        .collect();
    MiniBatch { samples }
}

// ---- unrolled forward pass ----

/// Everything the backward pass needs, recorded during the forward pass:
/// the state sequence `s_0..s_t` (starting point included), the
/// pre-projection points `r_0..r_{t-1}`, and the hinged slacks per
/// iteration.
#[derive(Debug, Clone)]
pub struct Tape {
    pub states: Vec<Vec<f64>>,
    pub pre_projection: Vec<Vec<f64>>,
    pub slacks: Vec<Vec<f64>>,
}

/// Runs `t` inner iterations from `s1` with no early exit, recording the
/// tape. Walks the exact float path of the decoder's inner loop.
pub fn unrolled_forward(
    y: &[f64],
    s1: &[f64],
    params: &TpgParams,
    mats: &PolytopeMatrices,
    t: usize,
) -> Result<(Vec<f64>, Tape), TrainError> {
    if t == 0 {
        return Err(TrainError::ZeroHorizon);
    }
    if t > params.t_max() {
        return Err(TrainError::HorizonTooLong {
            t,
            t_max: params.t_max(),
        });
    }
    let n = mats.bit_count();
    assert_eq!(y.len(), n);
    assert_eq!(s1.len(), n);

    let mut tape = Tape {
        states: Vec::with_capacity(t + 1),
        pre_projection: Vec::with_capacity(t),
        slacks: Vec::with_capacity(t),
    };
    tape.states.push(s1.to_vec());
    let mut scratch = StepScratch::new(n, mats.constraint_count());
    let mut s = s1.to_vec();
    let mut s_next = vec![0.0; n];
    let mut r = vec![0.0; n];
    for step in 0..t {
        let ok = tpg_step(
            mats,
            &s,
            y,
            params.gamma[step],
            params.beta[step],
            params.alpha,
            &mut scratch,
            &mut r,
            &mut s_next,
        );
        if !ok {
            return Err(TrainError::NonFiniteState {
                iteration: step + 1,
            });
        }
        tape.pre_projection.push(r.clone());
        tape.slacks.push(scratch.slack.clone());
        std::mem::swap(&mut s, &mut s_next);
        tape.states.push(s.clone());
    }
    Ok((s, tape))
}

// ---- loss and its gradient ----

/// Gradient of the batch loss with respect to the active parameters:
/// `alpha`, `beta[0..t]`, `gamma[0..t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ParamGradient {
    pub fn zeros(t: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: vec![0.0; t],
            gamma: vec![0.0; t],
        }
    }

    fn add_assign(&mut self, other: &Self) {
        self.alpha += other.alpha;
        for (a, b) in self.beta.iter_mut().zip(&other.beta) {
            *a += b;
        }
        for (a, b) in self.gamma.iter_mut().zip(&other.gamma) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        self.alpha *= factor;
        for v in self.beta.iter_mut().chain(self.gamma.iter_mut()) {
            *v *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite()
            && self.beta.iter().all(|v| v.is_finite())
            && self.gamma.iter().all(|v| v.is_finite())
    }
}

/// Mean squared error of the unrolled output against the codeword, averaged
/// over the batch: `(1/K) * sum_k || c_k - s_final_k ||^2`.
pub fn loss(
    batch: &MiniBatch,
    params: &TpgParams,
    mats: &PolytopeMatrices,
    t: usize,
) -> Result<f64, TrainError> {
    if batch.samples.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let mut acc = 0.0;
    for sample in &batch.samples {
        let (final_s, _) = unrolled_forward(&sample.received, &sample.init, params, mats, t)?;
        acc += squared_error(&final_s, &sample.codeword);
    }
    Ok(acc / batch.samples.len() as f64)
}

fn squared_error(s: &[f64], c: &[u8]) -> f64 {
    s.iter()
        .zip(c)
        .map(|(&v, &b)| {
            let d = v - f64::from(b);
            d * d
        })
        .sum()
}

/// Batch loss and its gradient in one pass: forward with a tape per sample,
/// then the reverse recursion. Sample gradients are computed in parallel
/// and reduced in batch order, so the result does not depend on the worker
/// count.
pub fn loss_gradient(
    batch: &MiniBatch,
    params: &TpgParams,
    mats: &PolytopeMatrices,
    t: usize,
) -> Result<(f64, ParamGradient), TrainError> {
    if batch.samples.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let per_sample: Result<Vec<(f64, ParamGradient)>, TrainError> = batch
        .samples
        .par_iter()
        .map(|sample| sample_gradient(sample, params, mats, t))
        .collect();
    let per_sample = per_sample?;

    let scale = 1.0 / batch.samples.len() as f64;
    let mut total_loss = 0.0;
    let mut grad = ParamGradient::zeros(t);
    for (l, g) in &per_sample {
        total_loss += l;
        grad.add_assign(g);
    }
    grad.scale(scale);
    Ok((total_loss * scale, grad))
}

/// Reverse pass for one sample. Seeds with `2 * (s_final - c)` and walks the
/// recorded iterations backward; the sigmoid derivative comes from the
/// stored next state, and the hinge mask from the stored slacks.
fn sample_gradient(
    sample: &TrainSample,
    params: &TpgParams,
    mats: &PolytopeMatrices,
    t: usize,
) -> Result<(f64, ParamGradient), TrainError> {
    let (final_s, tape) = unrolled_forward(&sample.received, &sample.init, params, mats, t)?;
    let n = mats.bit_count();
    let l = mats.constraint_count();
    let y = &sample.received;

    let loss = squared_error(&final_s, &sample.codeword);
    let mut g_s: Vec<f64> = final_s
        .iter()
        .zip(&sample.codeword)
        .map(|(&s, &c)| 2.0 * (s - f64::from(c)))
        .collect();

    let mut grad = ParamGradient::zeros(t);
    let mut g_r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut g_u = vec![0.0; l];
    let mut g_z_scatter = vec![0.0; n];

    for step in (0..t).rev() {
        let s_next = &tape.states[step + 1];
        let r = &tape.pre_projection[step];
        let u = &tape.slacks[step];
        let gamma = params.gamma[step];
        let beta = params.beta[step];

        let mut d_alpha = 0.0;
        for k in 0..n {
            let g_a = g_s[k] * s_next[k] * (1.0 - s_next[k]);
            d_alpha += g_a * (r[k] - 0.5);
            g_r[k] = params.alpha * g_a;
        }
        grad.alpha += d_alpha;

        mats.apply_dt(u, &mut p);
        let mut d_gamma = 0.0;
        let mut g_r_dot_p = 0.0;
        for k in 0..n {
            d_gamma += g_r[k] * (y[k] + beta * p[k]);
            g_r_dot_p += g_r[k] * p[k];
        }
        grad.gamma[step] += -d_gamma;
        grad.beta[step] += -gamma * g_r_dot_p;

        mats.apply_d(&g_r, &mut g_u);
        let coeff = -gamma * beta;
        for j in 0..l {
            g_u[j] = if u[j] > 0.0 { coeff * g_u[j] } else { 0.0 };
        }
        mats.apply_dt(&g_u, &mut g_z_scatter);
        for k in 0..n {
            g_s[k] = g_r[k] + g_z_scatter[k];
        }
    }
    Ok((loss, grad))
}

// ---- Adam ----

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update of `theta` in place.
    pub fn update(&mut self, theta: &mut [f64], grad: &[f64], lr: f64, hyper: &AdamHyper) {
        assert_eq!(theta.len(), self.m.len(), "parameter count changed");
        assert_eq!(grad.len(), self.m.len(), "gradient count changed");
        self.step += 1;
        let b1 = hyper.beta1;
        let b2 = hyper.beta2;
        let correction1 = 1.0 - b1.powi(self.step as i32);
        let correction2 = 1.0 - b2.powi(self.step as i32);
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            let m_hat = self.m[i] / correction1;
            let v_hat = self.v[i] / correction2;
            theta[i] -= lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
    }
}

// ---- incremental training ----

/// One line of the training log: the batch loss before the update was
/// applied, and the wall-clock seconds since training started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub generation: usize,
    pub update_index: usize,
    pub loss: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: TpgParams,
    pub log: Vec<TrainRecord>,
}

/// Trains a schedule of `cfg.t_max` iterations generation by generation.
///
/// Generation `t` optimizes `alpha`, `beta[0..t]`, `gamma[0..t]` for
/// `updates_per_generation` Adam steps on fresh mini-batches, starting the
/// newly added `beta[t-1]`, `gamma[t-1]` from the previous generation's last
/// values (or the configured initial values for the first generation).
/// Optimizer state is reset at each generation boundary; trained values
/// carry over. `alpha` is floored at 1e-6 to keep the projection
/// well-defined.
pub fn incremental_train(
    cfg: &TrainConfig,
    h: &ParityCheckMatrix,
    mats: &PolytopeMatrices,
) -> Result<TrainOutcome, TrainError> {
    incremental_train_with(cfg, h, mats, None, |_| {})
}

/// [`incremental_train`] with a starting schedule to resume from and a
/// per-update progress callback. `resume_from` must be shorter than
/// `cfg.t_max`; training continues at the next generation.
pub fn incremental_train_with(
    cfg: &TrainConfig,
    h: &ParityCheckMatrix,
    mats: &PolytopeMatrices,
    resume_from: Option<&TpgParams>,
    mut progress: impl FnMut(&TrainRecord),
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    assert_eq!(
        h.n(),
        mats.bit_count(),
        "constraint operators built for another code"
    );
    let generator = GeneratorMatrix::from_parity_check(h);
    let channel = ChannelConfig::new(cfg.train_snr_db, h.design_rate())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = Instant::now();

    let mut params = match resume_from {
        Some(p) => {
            if p.t_max() >= cfg.t_max {
                return Err(TrainError::Config(format!(
                    "resume schedule already has {} iterations, target is {}",
                    p.t_max(),
                    cfg.t_max
                )));
            }
            p.clone()
        }
        None => TpgParams {
            alpha: cfg.init.alpha,
            beta: Vec::new(),
            gamma: Vec::new(),
        },
    };
    let first_generation = params.t_max() + 1;

    let mut log = Vec::with_capacity((cfg.t_max - params.t_max()) * cfg.updates_per_generation);
    for generation in first_generation..=cfg.t_max {
        let last_beta = params.beta.last().copied().unwrap_or(cfg.init.beta);
        let last_gamma = params.gamma.last().copied().unwrap_or(cfg.init.gamma);
        params.beta.push(last_beta);
        params.gamma.push(last_gamma);

        let mut adam = AdamState::new(2 * generation + 1);
        for update in 1..=cfg.updates_per_generation {
            let batch = make_minibatch(cfg.batch_size, &generator, &channel, &mut rng);
            let (batch_loss, grad) = loss_gradient(&batch, &params, mats, generation)?;
            if !grad.is_finite() || !batch_loss.is_finite() {
                return Err(TrainError::NonFiniteGradient { generation, update });
            }

            let mut theta = pack(&params, generation);
            let g = pack_gradient(&grad, generation);
            adam.update(&mut theta, &g, cfg.learning_rate, &cfg.adam);
            unpack(&theta, &mut params, generation);
            params.alpha = params.alpha.max(1e-6);

            let record = TrainRecord {
                generation,
                update_index: update,
                loss: batch_loss,
                wall_time_s: start.elapsed().as_secs_f64(),
            };
            progress(&record);
            log.push(record);
        }
    }
    Ok(TrainOutcome { params, log })
}

fn pack(params: &TpgParams, t: usize) -> Vec<f64> {
    let mut theta = Vec::with_capacity(2 * t + 1);
    theta.push(params.alpha);
    theta.extend_from_slice(&params.beta[..t]);
    theta.extend_from_slice(&params.gamma[..t]);
    theta
}

fn pack_gradient(grad: &ParamGradient, t: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(2 * t + 1);
    g.push(grad.alpha);
    g.extend_from_slice(&grad.beta[..t]);
    g.extend_from_slice(&grad.gamma[..t]);
    g
}

fn unpack(theta: &[f64], params: &mut TpgParams, t: usize) {
    params.alpha = theta[0];
    params.beta[..t].copy_from_slice(&theta[1..1 + t]);
    params.gamma[..t].copy_from_slice(&theta[1 + t..1 + 2 * t]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::modulate;
    use crate::code::ParityCheckMatrix;
    use crate::polytope::PolytopeMatrices;
    use approx::assert_relative_eq;

    const EXAMPLE_ALIST: &str =
        "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";

    fn example() -> (ParityCheckMatrix, PolytopeMatrices) {
        let h = ParityCheckMatrix::parse_alist(EXAMPLE_ALIST).unwrap();
        let mats = PolytopeMatrices::from_parity_check(&h).unwrap();
        (h, mats)
    }

    /// Dense reference unroll written directly from the update equations:
    /// explicit loops over checks and odd subsets, no shared kernels.
    fn reference_forward(
        h: &ParityCheckMatrix,
        y: &[f64],
        s1: &[f64],
        params: &TpgParams,
        t: usize,
    ) -> Vec<f64> {
        let n = h.n();
        let mut s = s1.to_vec();
        for step in 0..t {
            let mut grad = vec![0.0; n];
            for row in h.row_supports() {
                for mask in 0u32..1 << row.len() {
                    if mask.count_ones() % 2 == 0 {
                        continue;
                    }
                    let mut z = 1.0 - mask.count_ones() as f64;
                    for (pos, &bit) in row.iter().enumerate() {
                        if (mask >> pos) & 1 == 1 {
                            z += s[bit];
                        } else {
                            z -= s[bit];
                        }
                    }
                    if z > 0.0 {
                        for (pos, &bit) in row.iter().enumerate() {
                            if (mask >> pos) & 1 == 1 {
                                grad[bit] += z;
                            } else {
                                grad[bit] -= z;
                            }
                        }
                    }
                }
            }
            let mut next = vec![0.0; n];
            for k in 0..n {
                let r = s[k] - params.gamma[step] * (y[k] + params.beta[step] * grad[k]);
                next[k] = 1.0 / (1.0 + (-params.alpha * (r - 0.5)).exp());
            }
            s = next;
        }
        s
    }

    fn test_params(t: usize) -> TpgParams {
        TpgParams {
            alpha: 5.0,
            beta: (0..t).map(|i| 0.8 + 0.1 * i as f64).collect(),
            gamma: (0..t).map(|i| 0.6 - 0.05 * i as f64).collect(),
        }
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn unrolled_forward_matches_the_dense_reference() {
        let (h, mats) = example();
        let params = test_params(5);
        let mut r = rng(1);
        for _ in 0..20 {
            let y: Vec<f64> = (0..6).map(|_| r.random_range(-2.0..2.0)).collect();
            let s1: Vec<f64> = (0..6).map(|_| r.random::<f64>()).collect();
            let (got, tape) = unrolled_forward(&y, &s1, &params, &mats, 5).unwrap();
            let want = reference_forward(&h, &y, &s1, &params, 5);
            for (a, b) in got.iter().zip(&want) {
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
            assert_eq!(tape.states.len(), 6);
            assert_eq!(tape.pre_projection.len(), 5);
            assert_eq!(tape.slacks.len(), 5);
            assert_eq!(tape.states[0], s1);
            assert_eq!(tape.states[5], got);
        }
    }

    #[test]
    fn horizon_limits_are_enforced() {
        let (_, mats) = example();
        let params = test_params(3);
        let y = [0.0; 6];
        let s1 = [0.5; 6];
        assert!(matches!(
            unrolled_forward(&y, &s1, &params, &mats, 4),
            Err(TrainError::HorizonTooLong { t: 4, t_max: 3 })
        ));
        assert!(matches!(
            unrolled_forward(&y, &s1, &params, &mats, 0),
            Err(TrainError::ZeroHorizon)
        ));
    }

    #[test]
    fn loss_fixture_at_the_hypercube_center() {
        let (_, mats) = example();
        // gamma = 0 freezes the state, so the projection maps the center to
        // itself and the loss against the zero word is 6 * 0.25.
        let params = TpgParams {
            alpha: 4.0,
            beta: vec![1.0],
            gamma: vec![0.0],
        };
        let batch = MiniBatch {
            samples: vec![TrainSample {
                codeword: vec![0; 6],
                received: modulate(&[0; 6]),
                init: vec![0.5; 6],
            }],
        };
        assert_eq!(loss(&batch, &params, &mats, 1).unwrap(), 1.5);
    }

    /// Central finite differences over every active coordinate.
    fn fd_gradient(
        batch: &MiniBatch,
        params: &TpgParams,
        mats: &PolytopeMatrices,
        t: usize,
        eps: f64,
    ) -> ParamGradient {
        let mut out = ParamGradient::zeros(t);
        let eval = |p: &TpgParams| loss(batch, p, mats, t).unwrap();
        let mut p = params.clone();
        p.alpha = params.alpha + eps;
        let hi = eval(&p);
        p.alpha = params.alpha - eps;
        let lo = eval(&p);
        p.alpha = params.alpha;
        out.alpha = (hi - lo) / (2.0 * eps);
        for i in 0..t {
            p.beta[i] = params.beta[i] + eps;
            let hi = eval(&p);
            p.beta[i] = params.beta[i] - eps;
            let lo = eval(&p);
            p.beta[i] = params.beta[i];
            out.beta[i] = (hi - lo) / (2.0 * eps);

            p.gamma[i] = params.gamma[i] + eps;
            let hi = eval(&p);
            p.gamma[i] = params.gamma[i] - eps;
            let lo = eval(&p);
            p.gamma[i] = params.gamma[i];
            out.gamma[i] = (hi - lo) / (2.0 * eps);
        }
        out
    }

    fn assert_grad_close(analytic: &ParamGradient, fd: &ParamGradient, rel: f64) {
        let check = |a: f64, b: f64, what: &str| {
            let scale = 1.0f64.max(a.abs()).max(b.abs());
            assert!(
                (a - b).abs() <= rel * scale,
                "{what}: analytic {a} vs finite difference {b}"
            );
        };
        check(analytic.alpha, fd.alpha, "alpha");
        for i in 0..analytic.beta.len() {
            check(analytic.beta[i], fd.beta[i], "beta");
            check(analytic.gamma[i], fd.gamma[i], "gamma");
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let (_, mats) = example();
        let t = 4;
        let params = test_params(t);
        let mut r = rng(7);
        for _ in 0..5 {
            let samples: Vec<TrainSample> = (0..3)
                .map(|_| TrainSample {
                    codeword: vec![0; 6],
                    received: (0..6).map(|_| r.random_range(-1.5..1.5)).collect(),
                    init: (0..6).map(|_| r.random::<f64>()).collect(),
                })
                .collect();
            let batch = MiniBatch { samples };
            let (_, analytic) = loss_gradient(&batch, &params, &mats, t).unwrap();
            let fd = fd_gradient(&batch, &params, &mats, t, 1e-6);
            assert_grad_close(&analytic, &fd, 1e-5);
        }
    }

    #[test]
    fn gamma_gradient_is_negative_along_a_descent_direction() {
        let (_, mats) = example();
        // Zero codeword, noiseless channel, start at the center: pushing
        // gamma up moves the state toward the codeword, so the loss must
        // fall as gamma grows.
        let params = TpgParams {
            alpha: 4.0,
            beta: vec![0.0],
            gamma: vec![0.5],
        };
        let batch = MiniBatch {
            samples: vec![TrainSample {
                codeword: vec![0; 6],
                received: modulate(&[0; 6]),
                init: vec![0.5; 6],
            }],
        };
        let (_, grad) = loss_gradient(&batch, &params, &mats, 1).unwrap();
        assert!(grad.gamma[0] < 0.0, "gamma gradient {}", grad.gamma[0]);
        let fd = fd_gradient(&batch, &params, &mats, 1, 1e-6);
        assert_grad_close(&grad, &fd, 1e-6);
    }

    #[test]
    fn beta_gradient_vanishes_when_no_constraint_is_active() {
        let (_, mats) = example();
        let params = TpgParams {
            alpha: 4.0,
            beta: vec![0.7],
            gamma: vec![0.5],
        };
        // The hypercube center satisfies every constraint with slack zero,
        // so the penalty path carries no gradient.
        let batch = MiniBatch {
            samples: vec![TrainSample {
                codeword: vec![0; 6],
                received: modulate(&[0; 6]),
                init: vec![0.5; 6],
            }],
        };
        let (_, grad) = loss_gradient(&batch, &params, &mats, 1).unwrap();
        assert_eq!(grad.beta[0], 0.0);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let mut theta = vec![1.0, 2.0];
        let grad = vec![10.0, -3.0];
        let mut adam = AdamState::new(2);
        let hyper = AdamHyper::default();
        adam.update(&mut theta, &grad, 0.005, &hyper);
        assert_relative_eq!(theta[0], 1.0 - 0.005, epsilon = 1e-9);
        assert_relative_eq!(theta[1], 2.0 + 0.005, epsilon = 1e-9);
        assert_eq!(adam.steps_taken(), 1);
    }

    #[test]
    fn adam_with_constant_gradient_moves_at_constant_speed() {
        let mut theta = vec![0.0];
        let grad = vec![4.0];
        let mut adam = AdamState::new(1);
        let hyper = AdamHyper::default();
        for _ in 0..5 {
            adam.update(&mut theta, &grad, 0.01, &hyper);
        }
        assert_relative_eq!(theta[0], -0.05, epsilon = 1e-8);
    }

    #[test]
    fn minibatch_samples_are_valid_and_reproducible() {
        let (h, _) = example();
        let generator = GeneratorMatrix::from_parity_check(&h);
        let channel = ChannelConfig::new(4.0, 0.5).unwrap();
        let batch = make_minibatch(40, &generator, &channel, &mut rng(3));
        assert_eq!(batch.samples.len(), 40);
        let mut noise_sum = 0.0;
        let mut count = 0usize;
        for sample in &batch.samples {
            assert!(h.syndrome_check(&sample.codeword).unwrap());
            assert!(sample.init.iter().all(|&v| (0.0..1.0).contains(&v)));
            assert!(sample.received.iter().all(|v| v.is_finite()));
            for (y, x) in sample.received.iter().zip(modulate(&sample.codeword)) {
                noise_sum += y - x;
                count += 1;
            }
        }
        assert!((noise_sum / count as f64).abs() < 0.1);

        let again = make_minibatch(40, &generator, &channel, &mut rng(3));
        assert_eq!(batch, again);
        let different = make_minibatch(40, &generator, &channel, &mut rng(4));
        assert_ne!(batch, different);
    }

    #[test]
    fn incremental_training_bookkeeping() {
        let (h, mats) = example();
        let cfg = TrainConfig {
            t_max: 3,
            updates_per_generation: 4,
            batch_size: 5,
            seed: 12,
            ..TrainConfig::default()
        };
        let outcome = incremental_train(&cfg, &h, &mats).unwrap();
        assert_eq!(outcome.params.t_max(), 3);
        assert!(outcome.params.validate().is_ok());
        assert_eq!(outcome.log.len(), 12);
        for (i, rec) in outcome.log.iter().enumerate() {
            assert_eq!(rec.generation, i / 4 + 1);
            assert_eq!(rec.update_index, i % 4 + 1);
            assert!(rec.loss.is_finite() && rec.loss >= 0.0);
        }
        for pair in outcome.log.windows(2) {
            assert!(pair[1].wall_time_s >= pair[0].wall_time_s);
        }

        let replay = incremental_train(&cfg, &h, &mats).unwrap();
        assert_eq!(outcome.params, replay.params);
        let losses: Vec<f64> = outcome.log.iter().map(|r| r.loss).collect();
        let replay_losses: Vec<f64> = replay.log.iter().map(|r| r.loss).collect();
        assert_eq!(losses, replay_losses);
    }

    #[test]
    fn resume_continues_where_training_stopped() {
        let (h, mats) = example();
        let cfg = TrainConfig {
            t_max: 2,
            updates_per_generation: 3,
            batch_size: 4,
            seed: 9,
            ..TrainConfig::default()
        };
        let outcome = incremental_train(&cfg, &h, &mats).unwrap();
        let longer = TrainConfig {
            t_max: 4,
            ..cfg.clone()
        };
        let resumed =
            incremental_train_with(&longer, &h, &mats, Some(&outcome.params), |_| {}).unwrap();
        assert_eq!(resumed.params.t_max(), 4);
        assert_eq!(resumed.log.len(), 6);
        assert_eq!(resumed.log[0].generation, 3);

        let too_short = incremental_train_with(&cfg, &h, &mats, Some(&resumed.params), |_| {});
        assert!(matches!(too_short, Err(TrainError::Config(_))));
    }

    #[test]
    fn config_validation_rejects_degenerate_setups() {
        let (h, mats) = example();
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            incremental_train(&bad, &h, &mats),
            Err(TrainError::Config(_))
        ));
        let zero_batch = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            incremental_train(&zero_batch, &h, &mats),
            Err(TrainError::Config(_))
        ));
    }
}
