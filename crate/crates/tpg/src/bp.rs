//! Flooding sum-product decoder, the classical baseline.
//!
//! Messages live on the edges of the Tanner graph in the LLR domain,
//! positive meaning bit 0. Each iteration updates every variable-to-check
//! message from the channel LLR plus the other incoming check messages,
//! takes a hard decision on the posteriors, stops early if the syndrome
//! clears, and then runs the tanh-rule check update:
//!
//! ```text
//! v2c(e) = llr(v) + sum_{e' at v, e' != e} c2v(e')
//! c2v(e) = 2 * atanh( prod_{e' at c, e' != e} tanh(v2c(e') / 2) )
//! ```
//!
//! Check messages start at zero, so with a budget of one iteration the
//! output is exactly the channel hard decision. Messages are clamped to
//! +-30 in both directions, which keeps saturated inputs (noiseless words,
//! huge LLRs) finite without changing decisions.

use crate::code::ParityCheckMatrix;
use crate::decoder::DecodeResult;

const LLR_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy)]
pub struct BpConfig {
    pub max_iter: usize,
    /// Stop as soon as the hard decision satisfies the syndrome.
    pub early_exit: bool,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            early_exit: true,
        }
    }
}

/// Decodes channel LLRs. `inner_iterations_total` counts BP iterations;
/// `restarts_used` is always 0 and no trajectory is recorded.
pub fn bp_decode(llr: &[f64], h: &ParityCheckMatrix, config: &BpConfig) -> DecodeResult {
    let n = h.n();
    assert_eq!(llr.len(), n, "LLR length mismatch");
    assert!(config.max_iter >= 1, "iteration budget must be at least 1");

    // Edge layout: one contiguous block per check, parallel to its support.
    let mut check_edge_start = Vec::with_capacity(h.m() + 1);
    let mut edge_var = Vec::new();
    check_edge_start.push(0usize);
    for row in h.row_supports() {
        edge_var.extend_from_slice(row);
        check_edge_start.push(edge_var.len());
    }
    let mut var_edges = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut c2v = vec![0.0f64; edge_var.len()];
    let mut v2c = vec![0.0f64; edge_var.len()];
    let mut posterior = vec![0.0f64; n];
    let mut estimate = vec![0u8; n];
    let mut iterations = 0usize;
    let mut converged = false;

    for iter in 1..=config.max_iter {
        iterations = iter;

        for v in 0..n {
            let total: f64 = llr[v] + var_edges[v].iter().map(|&e| c2v[e]).sum::<f64>();
            posterior[v] = total;
            for &e in &var_edges[v] {
                v2c[e] = (total - c2v[e]).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
            estimate[v] = u8::from(total <= 0.0);
        }

        if config.early_exit && h.syndrome_is_zero(&estimate) {
            converged = true;
            break;
        }
        if iter == config.max_iter {
            break;
        }

        for i in 0..h.m() {
            let edges = check_edge_start[i]..check_edge_start[i + 1];
            for e in edges.clone() {
                let mut prod = 1.0f64;
                for other in edges.clone() {
                    if other != e {
                        prod *= (v2c[other] / 2.0).tanh();
                    }
                }
                c2v[e] = (2.0 * prod.atanh()).clamp(-LLR_CLAMP, LLR_CLAMP);
            }
        }
    }

    if !converged {
        converged = h.syndrome_is_zero(&estimate);
    }
    DecodeResult {
        estimate,
        converged,
        inner_iterations_total: iterations,
        restarts_used: 0,
        trajectory: None,
    }
}
