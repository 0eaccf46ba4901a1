//! Parity-polytope penalty machinery.
//!
//! Each parity check with support `A_i` induces one linear constraint per
//! odd-cardinality subset `S ⊆ A_i`:
//!
//! ```text
//! z_j(x) = 1 - |S_j| + sum_{t in S_j} x_t - sum_{t in A_i \ S_j} x_t <= 0
//! ```
//!
//! Binary words satisfy all of them exactly when every check has even
//! parity. Collecting the subset supports column-by-column gives a pair of
//! sparse 0/1 matrices `Q` (entries of `S_j`) and `R` (entries of
//! `A_i \ S_j`), with `D = Q - R`. The penalty is the squared hinge of the
//! slacks, `P(x) = 1/2 * || relu(z(x)) ||^2`, and its gradient is
//! `relu(z(x)) * D^T`, where the hinge kink at zero contributes nothing.
//!
//! Constraints are numbered check by check, subsets in increasing
//! cardinality and lexicographic order within a cardinality, so column
//! order is reproducible across runs and implementations.

use crate::code::ParityCheckMatrix;
use itertools::Itertools;
use thiserror::Error;

/// Largest check degree accepted when enumerating odd subsets; a check of
/// degree `w` contributes `2^(w-1)` constraints.
pub const MAX_CHECK_DEGREE: usize = 30;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("check {check} has degree {degree}, above the supported maximum {MAX_CHECK_DEGREE}")]
    CheckDegreeTooLarge { check: usize, degree: usize },
    #[error("vector length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },
}

fn check_finite(values: &[f64], what: &'static str) -> Result<(), PolytopeError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(PolytopeError::NonFinite { what })
    }
}

fn check_len(values: &[f64], expected: usize) -> Result<(), PolytopeError> {
    if values.len() == expected {
        Ok(())
    } else {
        Err(PolytopeError::LengthMismatch {
            expected,
            got: values.len(),
        })
    }
}

/// Odd-cardinality subsets of a sorted support, in canonical order:
/// increasing cardinality, lexicographic within a cardinality.
pub fn odd_subsets(support: &[usize]) -> Result<Vec<Vec<usize>>, PolytopeError> {
    let w = support.len();
    if w > MAX_CHECK_DEGREE {
        return Err(PolytopeError::CheckDegreeTooLarge {
            check: usize::MAX,
            degree: w,
        });
    }
    let mut out = Vec::with_capacity(if w == 0 { 0 } else { 1 << (w - 1) });
    let mut size = 1;
    while size <= w {
        out.extend(support.iter().copied().combinations(size));
        size += 2;
    }
    Ok(out)
}

// ---- constraint numbering ----

/// Bijection between constraint columns and (check, odd subset) pairs.
#[derive(Debug, Clone)]
pub struct ConstraintIndex {
    check_offsets: Vec<usize>,
    constraint_check: Vec<usize>,
    subsets: Vec<Vec<usize>>,
}

impl ConstraintIndex {
    pub fn build(h: &ParityCheckMatrix) -> Result<Self, PolytopeError> {
        let mut check_offsets = Vec::with_capacity(h.m() + 1);
        let mut constraint_check = Vec::new();
        let mut subsets = Vec::new();
        check_offsets.push(0);
        for (i, row) in h.row_supports().iter().enumerate() {
            let family = odd_subsets(row).map_err(|e| match e {
                PolytopeError::CheckDegreeTooLarge { degree, .. } => {
                    PolytopeError::CheckDegreeTooLarge { check: i, degree }
                }
                other => other,
            })?;
            for subset in family {
                constraint_check.push(i);
                subsets.push(subset);
            }
            check_offsets.push(subsets.len());
        }
        Ok(Self {
            check_offsets,
            constraint_check,
            subsets,
        })
    }

    /// Total number of constraints, `L = sum_i 2^(|A_i|-1)`.
    pub fn constraint_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn check_count(&self) -> usize {
        self.check_offsets.len() - 1
    }

    /// The check that owns constraint `j`.
    pub fn check_of(&self, j: usize) -> usize {
        self.constraint_check[j]
    }

    /// The odd subset behind constraint `j`, as sorted 0-based bit ids.
    pub fn subset_of(&self, j: usize) -> &[usize] {
        &self.subsets[j]
    }

    /// Column range holding the constraints of check `i`.
    pub fn constraints_of_check(&self, i: usize) -> std::ops::Range<usize> {
        self.check_offsets[i]..self.check_offsets[i + 1]
    }

    /// Column of the (check, subset) pair, if the subset is one of the
    /// check's odd subsets. `subset` must be sorted.
    pub fn index_of(&self, check: usize, subset: &[usize]) -> Option<usize> {
        let range = self.constraints_of_check(check);
        let slot = self.subsets[range.clone()]
            .binary_search_by(|s| {
                s.len()
                    .cmp(&subset.len())
                    .then_with(|| s.as_slice().cmp(subset))
            })
            .ok()?;
        Some(range.start + slot)
    }
}

// ---- sparse constraint operators ----

/// Sparse `Q`, `R`, and implicitly `D = Q - R`, stored per constraint
/// column: the positive support (the subset) and the negative support (the
/// rest of the check).
#[derive(Debug, Clone)]
pub struct PolytopeMatrices {
    n: usize,
    q_offsets: Vec<u32>,
    q_indices: Vec<u32>,
    r_offsets: Vec<u32>,
    r_indices: Vec<u32>,
    shift: Vec<f64>,
}

impl PolytopeMatrices {
    pub fn build(h: &ParityCheckMatrix, index: &ConstraintIndex) -> Self {
        assert_eq!(
            h.m(),
            index.check_count(),
            "index built from another matrix"
        );
        let l = index.constraint_count();
        let mut q_offsets = Vec::with_capacity(l + 1);
        let mut r_offsets = Vec::with_capacity(l + 1);
        let mut q_indices = Vec::new();
        let mut r_indices = Vec::new();
        let mut shift = Vec::with_capacity(l);
        q_offsets.push(0);
        r_offsets.push(0);
        for j in 0..l {
            let subset = index.subset_of(j);
            let row = h.row_support(index.check_of(j));
            q_indices.extend(subset.iter().map(|&b| b as u32));
            r_indices.extend(
                row.iter()
                    .filter(|b| !subset.contains(b))
                    .map(|&b| b as u32),
            );
            q_offsets.push(q_indices.len() as u32);
            r_offsets.push(r_indices.len() as u32);
            shift.push(1.0 - subset.len() as f64);
        }
        Self {
            n: h.n(),
            q_offsets,
            q_indices,
            r_offsets,
            r_indices,
            shift,
        }
    }

    /// Builds the constraint index internally and discards it.
    pub fn from_parity_check(h: &ParityCheckMatrix) -> Result<Self, PolytopeError> {
        Ok(Self::build(h, &ConstraintIndex::build(h)?))
    }

    pub fn bit_count(&self) -> usize {
        self.n
    }

    pub fn constraint_count(&self) -> usize {
        self.shift.len()
    }

    /// Stored entries across `Q` and `R` together.
    pub fn nnz(&self) -> usize {
        self.q_indices.len() + self.r_indices.len()
    }

    /// Positive support of constraint `j` (the odd subset).
    pub fn q_support(&self, j: usize) -> &[u32] {
        &self.q_indices[self.q_offsets[j] as usize..self.q_offsets[j + 1] as usize]
    }

    /// Negative support of constraint `j` (the rest of the check).
    pub fn r_support(&self, j: usize) -> &[u32] {
        &self.r_indices[self.r_offsets[j] as usize..self.r_offsets[j + 1] as usize]
    }

    /// Hinged slacks `relu(z(x))`, written into `out`.
    pub fn slack_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.constraint_count());
        for (j, slot) in out.iter_mut().enumerate() {
            let mut z = self.shift[j];
            for &b in self.q_support(j) {
                z += x[b as usize];
            }
            for &b in self.r_support(j) {
                z -= x[b as usize];
            }
            *slot = if z > 0.0 { z } else { 0.0 };
        }
    }

    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.constraint_count()];
        self.slack_into(x, &mut out);
        out
    }

    /// Signed constraint values `z(x)` before the hinge. Negative entries
    /// are satisfied constraints; values near zero sit on the hinge, where
    /// the penalty gradient is not differentiable.
    pub fn raw_slack(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.constraint_count())
            .map(|j| {
                let mut z = self.shift[j];
                for &b in self.q_support(j) {
                    z += x[b as usize];
                }
                for &b in self.r_support(j) {
                    z -= x[b as usize];
                }
                z
            })
            .collect()
    }

    /// `out = u * D^T`: scatters per-constraint weights onto bits, adding on
    /// the positive support and subtracting on the negative one. Constraints
    /// with zero weight are skipped. Overwrites `out`.
    pub fn apply_dt(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(u.len(), self.constraint_count());
        assert_eq!(out.len(), self.n);
        out.fill(0.0);
        for (j, &w) in u.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &b in self.q_support(j) {
                out[b as usize] += w;
            }
            for &b in self.r_support(j) {
                out[b as usize] -= w;
            }
        }
    }

    /// `out = g * D`: gathers per-bit weights into constraints,
    /// `out_j = sum_{S_j} g - sum_{R_j} g`. Overwrites `out`.
    pub fn apply_d(&self, g: &[f64], out: &mut [f64]) {
        assert_eq!(g.len(), self.n);
        assert_eq!(out.len(), self.constraint_count());
        for (j, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &b in self.q_support(j) {
                acc += g[b as usize];
            }
            for &b in self.r_support(j) {
                acc -= g[b as usize];
            }
            *slot = acc;
        }
    }

    /// Penalty `P(x) = 1/2 * || relu(z(x)) ||^2`. Zero exactly on the
    /// relaxed codeword polytope, in particular at every codeword.
    pub fn penalty(&self, x: &[f64]) -> Result<f64, PolytopeError> {
        check_len(x, self.n)?;
        check_finite(x, "penalty input")?;
        let mut acc = 0.0;
        let mut buf = vec![0.0; self.constraint_count()];
        self.slack_into(x, &mut buf);
        for v in buf {
            acc += v * v;
        }
        Ok(0.5 * acc)
    }

    /// Gradient of [`penalty`](Self::penalty): `relu(z(x)) * D^T`. The hinge
    /// kink at zero slack contributes nothing.
    pub fn penalty_gradient(&self, x: &[f64]) -> Result<Vec<f64>, PolytopeError> {
        check_len(x, self.n)?;
        check_finite(x, "penalty input")?;
        let mut slack = vec![0.0; self.constraint_count()];
        self.slack_into(x, &mut slack);
        let mut out = vec![0.0; self.n];
        self.apply_dt(&slack, &mut out);
        Ok(out)
    }

    /// Penalized decoding objective `lambda . x + beta * P(x)`.
    pub fn objective(&self, x: &[f64], lambda: &[f64], beta: f64) -> Result<f64, PolytopeError> {
        check_len(lambda, self.n)?;
        check_finite(lambda, "objective weights")?;
        if !beta.is_finite() {
            return Err(PolytopeError::NonFinite {
                what: "penalty weight",
            });
        }
        let p = self.penalty(x)?;
        let dot: f64 = lambda.iter().zip(x).map(|(l, v)| l * v).sum();
        Ok(dot + beta * p)
    }

    /// Gradient of [`objective`](Self::objective): `lambda + beta * grad P(x)`.
    pub fn objective_gradient(
        &self,
        x: &[f64],
        lambda: &[f64],
        beta: f64,
    ) -> Result<Vec<f64>, PolytopeError> {
        check_len(lambda, self.n)?;
        check_finite(lambda, "objective weights")?;
        if !beta.is_finite() {
            return Err(PolytopeError::NonFinite {
                what: "penalty weight",
            });
        }
        let mut g = self.penalty_gradient(x)?;
        for (gk, lk) in g.iter_mut().zip(lambda) {
            *gk = lk + beta * *gk;
        }
        Ok(g)
    }

    /// Dense ASCII rendering of `Q`, `R`, and `D` for small codes: one grid
    /// per matrix, rows are bits, columns are constraints in index order,
    /// entries space-separated.
    pub fn dump_dense(&self) -> String {
        let l = self.constraint_count();
        let mut q = vec![vec![0i8; l]; self.n];
        let mut r = vec![vec![0i8; l]; self.n];
        for j in 0..l {
            for &b in self.q_support(j) {
                q[b as usize][j] = 1;
            }
            for &b in self.r_support(j) {
                r[b as usize][j] = 1;
            }
        }
        let grid = |name: &str, cell: &dyn Fn(usize, usize) -> i8| {
            let mut out = format!("{name} ({} bits x {l} constraints)\n", self.n);
            for row in 0..self.n {
                let line = (0..l)
                    .map(|j| cell(row, j).to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&line);
                out.push('\n');
            }
            out
        };
        let mut out = grid("Q", &|i, j| q[i][j]);
        out.push_str(&grid("R", &|i, j| r[i][j]));
        out.push_str(&grid("D", &|i, j| q[i][j] - r[i][j]));
        out
    }
}
