//! Restarting projected gradient decoder.
//!
//! One inner iteration turns the current soft word `s` into
//!
//! ```text
//! r = s - gamma_t * (y + beta_t * relu(z(s)) * D^T)
//! s' = sigmoid(alpha * (r - 0.5))
//! ```
//!
//! a gradient step on the received-vector term plus the parity penalty,
//! followed by a soft projection that pulls coordinates back toward the unit
//! hypercube. After every iteration the thresholded word is checked against
//! the syndrome; the inner loop stops early on success. The outer loop
//! restarts from a fresh uniform random point up to `r_max` times, which
//! turns the nonconvexity of the landscape into extra decoding chances.
//!
//! `gamma_t` and `beta_t` are per-iteration values and, together with the
//! projection sharpness `alpha`, are the trainable parameters. See
//! [`crate::trainer`] for how they are fit.

use crate::code::ParityCheckMatrix;
use crate::polytope::PolytopeMatrices;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("beta has {beta} entries but gamma has {gamma}; both must be nonempty and equal")]
    ParamLengths { beta: usize, gamma: usize },
    #[error("projection sharpness must be positive and finite, got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
    #[error("decoder built for code length {expected}, got a vector of length {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parameter file declares t_max {declared} but stores {stored} step sizes")]
    TmaxMismatch { declared: usize, stored: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parameter file: {0}")]
    Json(#[from] serde_json::Error),
}

// ---- parameters ----

/// Trainable decoder parameters: projection sharpness `alpha`, penalty
/// weights `beta[t]`, and step sizes `gamma[t]`, one per inner iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TpgParams {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl TpgParams {
    /// Constant schedules: every iteration uses the same `beta` and `gamma`.
    pub fn constant(alpha: f64, beta: f64, gamma: f64, t_max: usize) -> Self {
        Self {
            alpha,
            beta: vec![beta; t_max],
            gamma: vec![gamma; t_max],
        }
    }

    /// Inner iteration budget; the length of the per-iteration vectors.
    pub fn t_max(&self) -> usize {
        self.beta.len()
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.beta.is_empty() || self.beta.len() != self.gamma.len() {
            return Err(DecodeError::ParamLengths {
                beta: self.beta.len(),
                gamma: self.gamma.len(),
            });
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(DecodeError::BadAlpha { alpha: self.alpha });
        }
        if !self.beta.iter().all(|v| v.is_finite()) {
            return Err(DecodeError::NonFinite { what: "beta" });
        }
        if !self.gamma.iter().all(|v| v.is_finite()) {
            return Err(DecodeError::NonFinite { what: "gamma" });
        }
        Ok(())
    }

    /// Reschedules to `t_max` iterations: extra iterations reuse the last
    /// trained value, fewer iterations truncate.
    pub fn extended(&self, t_max: usize) -> Self {
        assert!(t_max >= 1, "iteration budget must be at least 1");
        let stretch = |v: &[f64]| -> Vec<f64> {
            let mut out = v.to_vec();
            out.resize(t_max, *v.last().expect("nonempty schedule"));
            out
        };
        Self {
            alpha: self.alpha,
            beta: stretch(&self.beta),
            gamma: stretch(&self.gamma),
        }
    }
}

/// On-disk form of [`TpgParams`] plus provenance: which code the values were
/// trained for and at what SNR. JSON with full float precision, so values
/// survive a save/load round trip bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub t_max: usize,
    pub code_id: String,
    pub train_snr_db: f64,
}

impl ParamsFile {
    pub fn new(params: &TpgParams, code_id: impl Into<String>, train_snr_db: f64) -> Self {
        Self {
            alpha: params.alpha,
            beta: params.beta.clone(),
            gamma: params.gamma.clone(),
            t_max: params.t_max(),
            code_id: code_id.into(),
            train_snr_db,
        }
    }

    pub fn params(&self) -> TpgParams {
        TpgParams {
            alpha: self.alpha,
            beta: self.beta.clone(),
            gamma: self.gamma.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.t_max != self.beta.len() {
            return Err(DecodeError::TmaxMismatch {
                declared: self.t_max,
                stored: self.beta.len(),
            });
        }
        self.params().validate()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameter serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, DecodeError> {
        let file: Self = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DecodeError> {
        Ok(std::fs::write(path, self.to_json() + "\n")?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DecodeError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

// ---- single-iteration pieces ----

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) struct StepScratch {
    pub slack: Vec<f64>,
    pub bit_grad: Vec<f64>,
}

impl StepScratch {
    pub fn new(n: usize, constraints: usize) -> Self {
        Self {
            slack: vec![0.0; constraints],
            bit_grad: vec![0.0; n],
        }
    }
}

/// One inner iteration shared by the decoder and the trainer's unrolled
/// forward pass, so both walk the same float path. Writes the pre-projection
/// point to `r_out` and the projected point to `s_out`; returns `false` and
/// leaves `s_out` untouched when the step produced a non-finite value.
#[allow(clippy::too_many_arguments)]
pub(crate) fn tpg_step(
    mats: &PolytopeMatrices,
    s: &[f64],
    y: &[f64],
    gamma: f64,
    beta: f64,
    alpha: f64,
    scratch: &mut StepScratch,
    r_out: &mut [f64],
    s_out: &mut [f64],
) -> bool {
    mats.slack_into(s, &mut scratch.slack);
    mats.apply_dt(&scratch.slack, &mut scratch.bit_grad);
    let mut finite = true;
    for k in 0..s.len() {
        let r = s[k] - gamma * (y[k] + beta * scratch.bit_grad[k]);
        finite &= r.is_finite();
        r_out[k] = r;
    }
    if !finite {
        return false;
    }
    for k in 0..s.len() {
        s_out[k] = sigmoid(alpha * (r_out[k] - 0.5));
    }
    true
}

/// Gradient step `s - gamma * (y + beta * relu(z(s)) * D^T)`.
pub fn gradient_step(
    s: &[f64],
    y: &[f64],
    gamma: f64,
    beta: f64,
    mats: &PolytopeMatrices,
) -> Vec<f64> {
    assert_eq!(s.len(), mats.bit_count());
    assert_eq!(y.len(), mats.bit_count());
    let mut scratch = StepScratch::new(mats.bit_count(), mats.constraint_count());
    mats.slack_into(s, &mut scratch.slack);
    mats.apply_dt(&scratch.slack, &mut scratch.bit_grad);
    s.iter()
        .zip(y)
        .zip(&scratch.bit_grad)
        .map(|((&sk, &yk), &gk)| sk - gamma * (yk + beta * gk))
        .collect()
}

/// Soft projection `sigmoid(alpha * (r - 0.5))`, coordinatewise. Large
/// `alpha` approaches a hard 0/1 rounding at one half.
pub fn projection_step(r: &[f64], alpha: f64) -> Vec<f64> {
    r.iter().map(|&v| sigmoid(alpha * (v - 0.5))).collect()
}

/// Hard decision at one half; exactly 0.5 rounds to 1.
pub fn threshold(s: &[f64]) -> Vec<u8> {
    s.iter().map(|&v| u8::from(v >= 0.5)).collect()
}

fn threshold_into(s: &[f64], out: &mut [u8]) {
    for (o, &v) in out.iter_mut().zip(s) {
        *o = u8::from(v >= 0.5);
    }
}

fn mean_sq_err(s: &[f64], reference: &[u8]) -> f64 {
    let n = s.len() as f64;
    s.iter()
        .zip(reference)
        .map(|(&v, &c)| {
            let d = v - f64::from(c);
            d * d
        })
        .sum::<f64>()
        / n
}

// ---- the decoder ----

#[derive(Debug, Clone)]
pub struct DecodeConfig {
    /// Outer restart budget; at least 1.
    pub r_max: usize,
    /// When no restart converges, return the restart whose thresholded word
    /// scores best under the decoding objective instead of the last one.
    pub best_of_restarts: bool,
    /// Record the per-iteration normalized squared error of the restart that
    /// produced the returned estimate. Needs a reference word at decode time.
    pub capture_trajectory: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            r_max: 1,
            best_of_restarts: false,
            capture_trajectory: false,
        }
    }
}

impl DecodeConfig {
    pub fn with_r_max(r_max: usize) -> Self {
        Self {
            r_max,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub estimate: Vec<u8>,
    /// Whether the estimate satisfies every parity check.
    pub converged: bool,
    /// Inner iterations executed, summed over restarts.
    pub inner_iterations_total: usize,
    pub restarts_used: usize,
    /// `(1/n) * ||s_t - c*||^2` per inner iteration, with the starting point
    /// at index 0. Present when capture was requested and a reference word
    /// was supplied.
    pub trajectory: Option<Vec<f64>>,
}

/// Projected gradient decoder bound to one code and one parameter set.
pub struct TpgDecoder<'a> {
    h: &'a ParityCheckMatrix,
    mats: &'a PolytopeMatrices,
    params: TpgParams,
}

impl<'a> TpgDecoder<'a> {
    pub fn new(
        h: &'a ParityCheckMatrix,
        mats: &'a PolytopeMatrices,
        params: TpgParams,
    ) -> Result<Self, DecodeError> {
        params.validate()?;
        if h.n() != mats.bit_count() {
            return Err(DecodeError::LengthMismatch {
                expected: h.n(),
                got: mats.bit_count(),
            });
        }
        Ok(Self { h, mats, params })
    }

    pub fn params(&self) -> &TpgParams {
        &self.params
    }

    /// Decodes `y` (the received vector, channel-scale). Restarts draw the
    /// starting point uniformly from the unit hypercube using `rng`.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        config: &DecodeConfig,
        rng: &mut R,
    ) -> DecodeResult {
        self.decode_with_reference(y, None, config, rng)
    }

    /// [`decode`](Self::decode) with an optional reference word for
    /// trajectory capture. A restart that produces a non-finite iterate is
    /// abandoned on the spot but still counts toward the budgets.
    pub fn decode_with_reference<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        reference: Option<&[u8]>,
        config: &DecodeConfig,
        rng: &mut R,
    ) -> DecodeResult {
        let n = self.mats.bit_count();
        assert_eq!(y.len(), n, "received vector length mismatch");
        assert!(config.r_max >= 1, "restart budget must be at least 1");
        let t_max = self.params.t_max();

        let mut scratch = StepScratch::new(n, self.mats.constraint_count());
        let mut s = vec![0.0; n];
        let mut s_next = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut estimate = vec![0u8; n];
        let mut total_inner = 0usize;
        let mut best: Option<(f64, Vec<u8>)> = None;
        let mut trajectory: Option<Vec<f64>> = None;

        for restart in 1..=config.r_max {
            for v in s.iter_mut() {
                *v = rng.random::<f64>();
            }
            let mut traj = match reference {
                Some(c) if config.capture_trajectory => {
                    let mut t = Vec::with_capacity(t_max + 1);
                    t.push(mean_sq_err(&s, c));
                    Some(t)
                }
                _ => None,
            };

            let mut aborted = false;
            for t in 0..t_max {
                total_inner += 1;
                let ok = tpg_step(
                    self.mats,
                    &s,
                    y,
                    self.params.gamma[t],
                    self.params.beta[t],
                    self.params.alpha,
                    &mut scratch,
                    &mut r,
                    &mut s_next,
                );
                if !ok {
                    aborted = true;
                    break;
                }
                std::mem::swap(&mut s, &mut s_next);
                if let (Some(tr), Some(c)) = (traj.as_mut(), reference) {
                    tr.push(mean_sq_err(&s, c));
                }
                threshold_into(&s, &mut estimate);
                if self.h.syndrome_is_zero(&estimate) {
                    return DecodeResult {
                        estimate,
                        converged: true,
                        inner_iterations_total: total_inner,
                        restarts_used: restart,
                        trajectory: traj,
                    };
                }
            }
            trajectory = traj;

            if config.best_of_restarts && !aborted {
                let score = self.candidate_score(y, &estimate);
                if best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, estimate.clone()));
                }
            }
        }

        let estimate = match best {
            Some((_, e)) => e,
            None => estimate,
        };
        DecodeResult {
            estimate,
            converged: false,
            inner_iterations_total: total_inner,
            restarts_used: config.r_max,
            trajectory,
        }
    }

    /// Decoding objective of a thresholded candidate: `y . x + beta_T * P(x)`
    /// with the last penalty weight of the schedule.
    fn candidate_score(&self, y: &[f64], candidate: &[u8]) -> f64 {
        let x: Vec<f64> = candidate.iter().map(|&b| f64::from(b)).collect();
        let beta_last = *self.params.beta.last().expect("nonempty schedule");
        self.mats
            .objective(&x, y, beta_last)
            .expect("thresholded candidate is finite")
    }

    /// Runs the inner loop once from the given starting point with no early
    /// exit and records the normalized squared error against `reference` at
    /// every iteration, the starting point included. Stops short only if an
    /// iterate leaves the finite range.
    pub fn trajectory_from(&self, y: &[f64], s1: &[f64], reference: &[u8]) -> Vec<f64> {
        let n = self.mats.bit_count();
        assert_eq!(y.len(), n);
        assert_eq!(s1.len(), n);
        assert_eq!(reference.len(), n);
        let t_max = self.params.t_max();

        let mut scratch = StepScratch::new(n, self.mats.constraint_count());
        let mut s = s1.to_vec();
        let mut s_next = vec![0.0; n];
        let mut r = vec![0.0; n];
        let mut out = Vec::with_capacity(t_max + 1);
        out.push(mean_sq_err(&s, reference));
        for t in 0..t_max {
            let ok = tpg_step(
                self.mats,
                &s,
                y,
                self.params.gamma[t],
                self.params.beta[t],
                self.params.alpha,
                &mut scratch,
                &mut r,
                &mut s_next,
            );
            if !ok {
                break;
            }
            std::mem::swap(&mut s, &mut s_next);
            out.push(mean_sq_err(&s, reference));
        }
        out
    }

    /// [`trajectory_from`](Self::trajectory_from) with a uniform random
    /// starting point drawn from `rng`.
    pub fn trajectory<R: Rng + ?Sized>(
        &self,
        y: &[f64],
        reference: &[u8],
        rng: &mut R,
    ) -> Vec<f64> {
        let s1: Vec<f64> = (0..self.mats.bit_count())
            .map(|_| rng.random::<f64>())
            .collect();
        self.trajectory_from(y, &s1, reference)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::modulate;
    use crate::code::{GeneratorMatrix, ParityCheckMatrix};
    use crate::polytope::PolytopeMatrices;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXAMPLE_ALIST: &str =
        "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";

    fn example() -> (ParityCheckMatrix, PolytopeMatrices) {
        let h = ParityCheckMatrix::parse_alist(EXAMPLE_ALIST).unwrap();
        let mats = PolytopeMatrices::from_parity_check(&h).unwrap();
        (h, mats)
    }

    /// Handcrafted schedule that reliably decodes the 3x6 example.
    fn example_params() -> TpgParams {
        TpgParams::constant(8.0, 1.0, 0.5, 30)
    }

    #[test]
    fn gradient_step_matches_the_worked_example() {
        let (_, mats) = example();
        let s = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        let y = [0.0; 6];
        let r = gradient_step(&s, &y, 1.0, 2.0, &mats);
        assert_eq!(r, vec![-1.0, -1.0, -1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn gradient_step_at_a_codeword_only_follows_the_channel_term() {
        let (_, mats) = example();
        let c = [0.0, 1.0, 1.0, 1.0, 1.0, 0.0];
        let y = [0.3, -0.4, -0.2, -0.9, -1.1, 0.8];
        let r = gradient_step(&c, &y, 0.25, 7.0, &mats);
        for k in 0..6 {
            assert_eq!(r[k], c[k] - 0.25 * y[k]);
        }
    }

    #[test]
    fn projection_fixed_values() {
        assert_eq!(projection_step(&[0.5], 3.7), vec![0.5]);
        let s = projection_step(&[1.0], 8.05);
        assert_relative_eq!(s[0], 0.9824500775551757, max_relative = 1e-12);
    }

    #[test]
    fn projection_sharpens_toward_rounding() {
        let s = projection_step(&[0.9, 0.1], 1e6);
        assert!((s[0] - 1.0).abs() < 1e-6);
        assert!(s[1].abs() < 1e-6);
    }

    #[test]
    fn projection_stays_strictly_inside_the_hypercube() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        use rand::Rng as _;
        for _ in 0..1000 {
            let r: f64 = rng.random_range(-2.0..2.0);
            let alpha: f64 = rng.random_range(0.1..12.0);
            let v = projection_step(&[r], alpha)[0];
            assert!(v > 0.0 && v < 1.0, "projection left (0,1): {v}");
        }
    }

    #[test]
    fn threshold_rounds_half_up() {
        assert_eq!(
            threshold(&[0.5, 0.49999999, 0.50000001, 0.0, 1.0]),
            vec![1, 0, 1, 0, 1]
        );
    }

    #[test]
    fn decodes_every_codeword_of_the_example_noiselessly() {
        let (h, mats) = example();
        let gen = GeneratorMatrix::from_parity_check(&h);
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let config = DecodeConfig::with_r_max(5);
        for msg in 0u8..8 {
            let message = [(msg >> 2) & 1, (msg >> 1) & 1, msg & 1];
            let cw = gen.codeword_from_message(&message).unwrap();
            let y = modulate(&cw.bits);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + u64::from(msg));
            let result = decoder.decode(&y, &config, &mut rng);
            assert!(result.converged, "codeword {msg:03b} did not converge");
            assert_eq!(result.estimate, cw.bits, "codeword {msg:03b}");
            assert!(h.syndrome_check(&result.estimate).unwrap());
        }
    }

    #[test]
    fn exhausted_budgets_are_reported_exactly() {
        let (h, mats) = example();
        // With beta = 0 the iteration reduces to a hard pull toward the sign
        // of y, so a received vector pointing at a non-codeword never clears
        // the syndrome.
        let params = TpgParams::constant(8.0, 0.0, 0.7, 4);
        let decoder = TpgDecoder::new(&h, &mats, params).unwrap();
        let y = modulate(&[1, 1, 1, 1, 1, 0]);
        let config = DecodeConfig::with_r_max(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let result = decoder.decode(&y, &config, &mut rng);
        assert!(!result.converged);
        assert_eq!(result.restarts_used, 3);
        assert_eq!(result.inner_iterations_total, 12);
        assert_eq!(result.estimate, vec![1, 1, 1, 1, 1, 0]);
        assert!(!h.syndrome_check(&result.estimate).unwrap());
    }

    #[test]
    fn identical_seeds_replay_identical_results() {
        let (h, mats) = example();
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let y = [0.4, -0.7, -0.6, -1.2, -0.8, 0.9];
        let config = DecodeConfig::with_r_max(10);
        let a = decoder.decode(&y, &config, &mut ChaCha8Rng::seed_from_u64(21));
        let b = decoder.decode(&y, &config, &mut ChaCha8Rng::seed_from_u64(21));
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_input_fails_without_panicking() {
        let (h, mats) = example();
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let y = [f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0];
        let config = DecodeConfig::with_r_max(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let result = decoder.decode(&y, &config, &mut rng);
        assert!(!result.converged);
        assert_eq!(result.restarts_used, 2);
    }

    #[test]
    fn best_of_restarts_never_scores_worse_than_the_last_restart() {
        let (h, mats) = example();
        let params = TpgParams::constant(6.0, 0.2, 0.9, 2);
        let decoder = TpgDecoder::new(&h, &mats, params).unwrap();
        // A received vector far from every codeword keeps the decoder from
        // converging within the tiny budget.
        let y = [0.1, -0.1, 0.05, -0.05, 0.1, -0.1];
        let config_last = DecodeConfig::with_r_max(6);
        let config_best = DecodeConfig {
            r_max: 6,
            best_of_restarts: true,
            ..Default::default()
        };
        let last = decoder.decode(&y, &config_last, &mut ChaCha8Rng::seed_from_u64(33));
        let best = decoder.decode(&y, &config_best, &mut ChaCha8Rng::seed_from_u64(33));
        if !last.converged && !best.converged {
            let score = |e: &[u8]| decoder.candidate_score(&y, e);
            assert!(score(&best.estimate) <= score(&last.estimate));
        }
    }

    #[test]
    fn trajectory_has_one_entry_per_iteration_plus_start() {
        let (h, mats) = example();
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let c = [0u8, 1, 1, 1, 1, 0];
        let y = modulate(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let traj = decoder.trajectory(&y, &c, &mut rng);
        assert_eq!(traj.len(), 31);
        assert!(traj[0] >= 0.0 && traj[0] <= 1.0);
        assert!(traj.last().unwrap() < &1e-3);
    }

    #[test]
    fn trajectory_started_at_the_codeword_stays_near_it() {
        let (h, mats) = example();
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let c = [0u8, 1, 1, 1, 1, 0];
        let y = modulate(&c);
        let s1: Vec<f64> = c.iter().map(|&b| f64::from(b)).collect();
        let traj = decoder.trajectory_from(&y, &s1, &c);
        assert_eq!(traj[0], 0.0);
        assert!(traj.iter().all(|&e| e <= 1e-2), "diverged: {traj:?}");
        assert!(traj.last().unwrap() < &1e-3);
    }

    #[test]
    fn capture_records_the_trajectory_of_the_returned_attempt() {
        let (h, mats) = example();
        let decoder = TpgDecoder::new(&h, &mats, example_params()).unwrap();
        let c = [0u8, 0, 0, 0, 0, 0];
        let y = modulate(&c);
        let config = DecodeConfig {
            r_max: 3,
            capture_trajectory: true,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let result = decoder.decode_with_reference(&y, Some(&c), &config, &mut rng);
        let traj = result.trajectory.expect("capture was requested");
        assert!(result.converged);
        assert!(traj.len() >= 2);
        assert!(traj.last().unwrap() < &0.25);

        let no_ref = decoder.decode(&y, &config, &mut ChaCha8Rng::seed_from_u64(4));
        assert!(no_ref.trajectory.is_none());
    }

    #[test]
    fn params_validate_rejects_bad_shapes_and_values() {
        let bad_len = TpgParams {
            alpha: 4.0,
            beta: vec![1.0, 1.0],
            gamma: vec![1.0],
        };
        assert!(matches!(
            bad_len.validate(),
            Err(DecodeError::ParamLengths { beta: 2, gamma: 1 })
        ));
        let bad_alpha = TpgParams::constant(0.0, 1.0, 1.0, 2);
        assert!(matches!(
            bad_alpha.validate(),
            Err(DecodeError::BadAlpha { .. })
        ));
        let mut bad_beta = TpgParams::constant(4.0, 1.0, 1.0, 2);
        bad_beta.beta[1] = f64::NAN;
        assert!(matches!(
            bad_beta.validate(),
            Err(DecodeError::NonFinite { what: "beta" })
        ));
        assert!(TpgParams::constant(4.0, 1.0, 1.0, 25).validate().is_ok());
    }

    #[test]
    fn extension_repeats_the_last_value_and_truncation_drops_the_tail() {
        let params = TpgParams {
            alpha: 5.0,
            beta: vec![1.0, 2.0, 3.0],
            gamma: vec![0.5, 0.25, 0.125],
        };
        let longer = params.extended(5);
        assert_eq!(longer.beta, vec![1.0, 2.0, 3.0, 3.0, 3.0]);
        assert_eq!(longer.gamma, vec![0.5, 0.25, 0.125, 0.125, 0.125]);
        assert_eq!(longer.alpha, 5.0);
        let shorter = params.extended(2);
        assert_eq!(shorter.beta, vec![1.0, 2.0]);
        assert_eq!(params.extended(3), params);
    }

    #[test]
    fn params_file_round_trips_bit_for_bit() {
        let params = TpgParams {
            alpha: 4.0 + 1.0 / 3.0,
            beta: vec![0.1 + 0.2, 1e-17, 5e-324, 1234.5678901234567],
            gamma: vec![1.0 / 3.0, 2.0_f64.sqrt(), 0.30000000000000004, 1e300],
        };
        let file = ParamsFile::new(&params, "n6-m3-example", 4.0);
        let text = file.to_json();
        let back = ParamsFile::from_json(&text).unwrap();
        assert_eq!(back.alpha.to_bits(), file.alpha.to_bits());
        for (a, b) in back.beta.iter().zip(&file.beta) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in back.gamma.iter().zip(&file.gamma) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.t_max, 4);
        assert_eq!(back.code_id, "n6-m3-example");
        assert_eq!(back, file);
    }

    #[test]
    fn params_file_rejects_inconsistent_t_max() {
        let params = TpgParams::constant(4.0, 1.0, 1.0, 3);
        let mut file = ParamsFile::new(&params, "x", 4.0);
        file.t_max = 5;
        let text = serde_json::to_string(&file).unwrap();
        assert!(matches!(
            ParamsFile::from_json(&text),
            Err(DecodeError::TmaxMismatch {
                declared: 5,
                stored: 3
            })
        ));
    }

    #[test]
    fn params_file_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.json");
        let file = ParamsFile::new(&TpgParams::constant(4.0, 1.5, 0.5, 25), "n6-m3-x", 4.0);
        file.save(&path).unwrap();
        assert_eq!(ParamsFile::load(&path).unwrap(), file);
    }
}
