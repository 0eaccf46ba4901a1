//! Shared fixtures and independent reference implementations used by the
//! integration tests. Everything here recomputes results from first
//! principles (dense enumeration over odd subsets, brute-force codebooks)
//! so the library's sparse kernels are checked against code that shares
//! none of their structure.

use std::path::PathBuf;
use tpg::code::ParityCheckMatrix;
use tpg::decoder::TpgParams;

pub const EXAMPLE_ALIST: &str =
    "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";

pub fn example_h() -> ParityCheckMatrix {
    ParityCheckMatrix::parse_alist(EXAMPLE_ALIST).unwrap()
}

pub fn data_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(file)
}

/// All codewords of a small code by exhaustive enumeration.
pub fn brute_force_codewords(h: &ParityCheckMatrix) -> Vec<Vec<u8>> {
    let n = h.n();
    assert!(n <= 20, "exhaustive enumeration only for small codes");
    (0u32..1 << n)
        .map(|mask| (0..n).map(|j| ((mask >> j) & 1) as u8).collect::<Vec<u8>>())
        .filter(|c| h.syndrome_check(c).unwrap())
        .collect()
}

/// Odd-cardinality subsets of `support`, as index masks over the support
/// positions, in no particular order.
fn odd_subset_masks(weight: usize) -> Vec<u32> {
    (1u32..1 << weight)
        .filter(|m| m.count_ones() % 2 == 1)
        .collect()
}

/// Penalty by direct double summation over checks and odd subsets.
pub fn dense_penalty(h: &ParityCheckMatrix, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..h.m() {
        let support = h.row_support(i);
        for mask in odd_subset_masks(support.len()) {
            let z = dense_slack(support, mask, x);
            if z > 0.0 {
                total += z * z;
            }
        }
    }
    0.5 * total
}

/// Penalty gradient by the same direct double summation.
pub fn dense_penalty_gradient(h: &ParityCheckMatrix, x: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    for i in 0..h.m() {
        let support = h.row_support(i);
        for mask in odd_subset_masks(support.len()) {
            let z = dense_slack(support, mask, x);
            if z > 0.0 {
                for (pos, &bit) in support.iter().enumerate() {
                    if mask >> pos & 1 == 1 {
                        grad[bit] += z;
                    } else {
                        grad[bit] -= z;
                    }
                }
            }
        }
    }
    grad
}

/// Signed constraint values `z` for every (check, odd subset) pair, in an
/// arbitrary but complete order; used for hinge-proximity screening.
pub fn dense_raw_slacks(h: &ParityCheckMatrix, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..h.m() {
        let support = h.row_support(i);
        for mask in odd_subset_masks(support.len()) {
            out.push(dense_slack(support, mask, x));
        }
    }
    out
}

fn dense_slack(support: &[usize], mask: u32, x: &[f64]) -> f64 {
    let mut z = 1.0 - mask.count_ones() as f64;
    for (pos, &bit) in support.iter().enumerate() {
        if mask >> pos & 1 == 1 {
            z += x[bit];
        } else {
            z -= x[bit];
        }
    }
    z
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// The unrolled decoder recursion written directly from its definition,
/// dense and allocation-happy: `t` rounds of gradient step plus soft
/// projection starting at `s1`. Returns the visited states `s_1..s_{t+1}`.
pub fn dense_forward(
    h: &ParityCheckMatrix,
    y: &[f64],
    s1: &[f64],
    params: &TpgParams,
    t: usize,
) -> Vec<Vec<f64>> {
    let mut states = vec![s1.to_vec()];
    for step in 0..t {
        let s = states.last().unwrap();
        let pg = dense_penalty_gradient(h, s);
        let r: Vec<f64> = s
            .iter()
            .zip(y)
            .zip(&pg)
            .map(|((&sv, &yv), &g)| sv - params.gamma[step] * (yv + params.beta[step] * g))
            .collect();
        states.push(
            r.iter()
                .map(|&rv| sigmoid(params.alpha * (rv - 0.5)))
                .collect(),
        );
    }
    states
}

/// Random sparse parity-check matrix for oracle comparisons: `m` rows over
/// `n` bits with row weight up to `max_weight`.
pub fn random_h(
    rng: &mut impl rand::Rng,
    n: usize,
    m: usize,
    max_weight: usize,
) -> ParityCheckMatrix {
    let rows: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let w = rng.random_range(1..=max_weight.min(n));
            rand::seq::index::sample(rng, n, w).into_vec()
        })
        .collect();
    ParityCheckMatrix::from_row_supports(n, rows).unwrap()
}
