//! Binary linear codes given by sparse parity-check matrices.
//!
//! The matrix lives in support form: per-row and per-column lists of the
//! nonzero positions. Files use the alist format: a header with the
//! dimensions and maximum weights, the per-column and per-row weight lists,
//! then one support line per column and per row with 1-based indices
//! (trailing zeros are padding and are ignored).
//!
//! ```
//! use tpg::code::ParityCheckMatrix;
//!
//! let text = "6 3\n2 3\n1 1 2 2 1 1\n3 2 3\n1\n1\n1 2\n2 3\n3\n3\n1 2 3\n3 4\n4 5 6\n";
//! let h = ParityCheckMatrix::parse_alist(text).unwrap();
//! assert_eq!((h.n(), h.m()), (6, 3));
//! assert_eq!(h.row_support(0), &[0, 1, 2]);
//! ```

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("word length {got} does not match code length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("support index {index} out of range for {limit} positions")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("duplicate index {index} in support list")]
    DuplicateIndex { index: usize },
    #[error("message length {got} does not match code dimension {expected}")]
    MessageLength { expected: usize, got: usize },
}

fn alist_err(line: usize, msg: impl Into<String>) -> CodeError {
    CodeError::Alist {
        line,
        msg: msg.into(),
    }
}

// ---- parity-check matrix ----

/// Sparse binary parity-check matrix with `m` rows (checks) and `n` columns
/// (bits), stored as sorted support lists in both orientations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    m: usize,
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from 0-based row supports. Indices are sorted and
    /// checked for range and duplicates; empty rows are allowed and simply
    /// constrain nothing.
    pub fn from_row_supports(n: usize, row_supports: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let m = row_supports.len();
        let mut rows = row_supports;
        let mut cols = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for pair in row.windows(2) {
                if pair[0] == pair[1] {
                    return Err(CodeError::DuplicateIndex { index: pair[0] });
                }
            }
            for &b in row.iter() {
                if b >= n {
                    return Err(CodeError::IndexOutOfRange { index: b, limit: n });
                }
                cols[b].push(i);
            }
        }
        Ok(Self { m, n, rows, cols })
    }

    /// Number of parity checks (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Code length (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based bit positions participating in check `i`.
    pub fn row_support(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// 0-based checks involving bit `j`.
    pub fn col_support(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    pub fn row_supports(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn max_row_weight(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_col_weight(&self) -> usize {
        self.cols.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Design rate `1 - m/n`. This can differ from the true rate when the
    /// matrix is rank-deficient.
    pub fn design_rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    /// Whether `word` satisfies every parity check. Only the low bit of each
    /// entry is read. Errors when the word length does not match `n`.
    pub fn syndrome_check(&self, word: &[u8]) -> Result<bool, CodeError> {
        if word.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                got: word.len(),
            });
        }
        Ok(self.syndrome_is_zero(word))
    }

    pub(crate) fn syndrome_is_zero(&self, word: &[u8]) -> bool {
        self.rows.iter().all(|row| {
            let mut parity = 0u8;
            for &b in row {
                parity ^= word[b] & 1;
            }
            parity == 0
        })
    }

    /// Parses the alist text format. Errors name the offending 1-based line.
    pub fn parse_alist(text: &str) -> Result<Self, CodeError> {
        let lines: Vec<&str> = text.lines().collect();
        let mut next = 0usize;
        let mut take = |what: &str| -> Result<(usize, &str), CodeError> {
            let lineno = next + 1;
            let line = lines
                .get(next)
                .ok_or_else(|| alist_err(lineno, format!("missing {what}")))?;
            next += 1;
            Ok((lineno, line.trim_end_matches('\r')))
        };

        let (lineno, header) = take("size header")?;
        let header = parse_ints(header, lineno)?;
        if header.len() != 2 {
            return Err(alist_err(lineno, "expected exactly two values: n m"));
        }
        let (n, m) = (header[0], header[1]);
        if n == 0 || m == 0 {
            return Err(alist_err(lineno, "matrix dimensions must be positive"));
        }

        let (lineno, maxima) = take("weight maxima")?;
        let maxima = parse_ints(maxima, lineno)?;
        if maxima.len() != 2 {
            return Err(alist_err(
                lineno,
                "expected exactly two values: max column weight, max row weight",
            ));
        }
        let (max_col, max_row) = (maxima[0], maxima[1]);

        let (lineno, col_w) = take("column weight list")?;
        let col_weights = parse_ints(col_w, lineno)?;
        if col_weights.len() != n {
            return Err(alist_err(
                lineno,
                format!("expected {n} column weights, found {}", col_weights.len()),
            ));
        }
        if let Some(w) = col_weights.iter().find(|&&w| w > max_col) {
            return Err(alist_err(
                lineno,
                format!("column weight {w} exceeds declared maximum {max_col}"),
            ));
        }

        let (lineno, row_w) = take("row weight list")?;
        let row_weights = parse_ints(row_w, lineno)?;
        if row_weights.len() != m {
            return Err(alist_err(
                lineno,
                format!("expected {m} row weights, found {}", row_weights.len()),
            ));
        }
        if let Some(w) = row_weights.iter().find(|&&w| w > max_row) {
            return Err(alist_err(
                lineno,
                format!("row weight {w} exceeds declared maximum {max_row}"),
            ));
        }

        let mut cols = Vec::with_capacity(n);
        for (j, &w) in col_weights.iter().enumerate() {
            let (lineno, line) = take("column support line")?;
            let support = parse_support(line, lineno, w, m, &format!("column {}", j + 1))?;
            cols.push(support);
        }
        let mut rows = Vec::with_capacity(m);
        for (i, &w) in row_weights.iter().enumerate() {
            let (lineno, line) = take("row support line")?;
            let support = parse_support(line, lineno, w, n, &format!("row {}", i + 1))?;
            rows.push((lineno, support));
        }
        for (idx, line) in lines.iter().enumerate().skip(next) {
            if !line.trim().is_empty() {
                return Err(alist_err(idx + 1, "unexpected trailing content"));
            }
        }

        let mut rows_from_cols = vec![Vec::new(); m];
        for (j, col) in cols.iter().enumerate() {
            for &i in col {
                rows_from_cols[i].push(j);
            }
        }
        for (i, (lineno, row)) in rows.iter().enumerate() {
            if *row != rows_from_cols[i] {
                return Err(alist_err(
                    *lineno,
                    format!("row {} support disagrees with the column supports", i + 1),
                ));
            }
        }

        Self::from_row_supports(n, rows.into_iter().map(|(_, r)| r).collect())
    }

    /// Renders the matrix in alist format, with no zero padding.
    pub fn to_alist(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.n, self.m));
        out.push_str(&format!(
            "{} {}\n",
            self.max_col_weight(),
            self.max_row_weight()
        ));
        let weights = |supports: &[Vec<usize>]| {
            supports
                .iter()
                .map(|s| s.len().to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&weights(&self.cols));
        out.push('\n');
        out.push_str(&weights(&self.rows));
        out.push('\n');
        let support_lines = |supports: &[Vec<usize>], out: &mut String| {
            for s in supports {
                let line = s
                    .iter()
                    .map(|&i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push_str(&line);
                out.push('\n');
            }
        };
        support_lines(&self.cols, &mut out);
        support_lines(&self.rows, &mut out);
        out
    }
}

fn parse_ints(line: &str, lineno: usize) -> Result<Vec<usize>, CodeError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| alist_err(lineno, format!("invalid integer token `{tok}`")))
        })
        .collect()
}

fn parse_support(
    line: &str,
    lineno: usize,
    weight: usize,
    limit: usize,
    what: &str,
) -> Result<Vec<usize>, CodeError> {
    let mut support = Vec::with_capacity(weight);
    for tok in parse_ints(line, lineno)? {
        if tok == 0 {
            continue;
        }
        if tok > limit {
            return Err(alist_err(
                lineno,
                format!("{what}: index {tok} out of range 1..={limit}"),
            ));
        }
        support.push(tok - 1);
    }
    if support.len() != weight {
        return Err(alist_err(
            lineno,
            format!(
                "{what}: {} nonzero entries but declared weight {weight}",
                support.len()
            ),
        ));
    }
    support.sort_unstable();
    for pair in support.windows(2) {
        if pair[0] == pair[1] {
            return Err(alist_err(
                lineno,
                format!("{what}: duplicate index {}", pair[0] + 1),
            ));
        }
    }
    Ok(support)
}

// ---- codewords and the generator ----

/// A binary word satisfying every parity check of the matrix it was built
/// from. Entries are 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub bits: Vec<u8>,
}

/// Basis of the GF(2) null space of a parity-check matrix. Codewords are
/// linear combinations of the basis rows.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    n: usize,
    basis: Vec<Vec<u8>>,
}

impl GeneratorMatrix {
    /// Computes a null-space basis by Gaussian elimination over GF(2).
    pub fn from_parity_check(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let mut dense: Vec<Vec<u8>> = h
            .row_supports()
            .iter()
            .map(|row| {
                let mut r = vec![0u8; n];
                for &b in row {
                    r[b] = 1;
                }
                r
            })
            .collect();

        let mut pivot_cols = Vec::new();
        let mut rank = 0usize;
        for col in 0..n {
            let Some(pivot) = (rank..dense.len()).find(|&r| dense[r][col] == 1) else {
                continue;
            };
            dense.swap(rank, pivot);
            let pivot_row = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row[col] == 1 {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }

        let is_pivot = {
            let mut mask = vec![false; n];
            for &c in &pivot_cols {
                mask[c] = true;
            }
            mask
        };
        let mut basis = Vec::with_capacity(n - rank);
        for free in (0..n).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u8; n];
            v[free] = 1;
            for (row, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = dense[row][free];
            }
            basis.push(v);
        }
        Self { n, basis }
    }

    /// Code dimension `k = n - rank(H)`.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn code_length(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    /// XOR of the basis rows selected by the low bits of `message`.
    pub fn codeword_from_message(&self, message: &[u8]) -> Result<Codeword, CodeError> {
        if message.len() != self.basis.len() {
            return Err(CodeError::MessageLength {
                expected: self.basis.len(),
                got: message.len(),
            });
        }
        let mut bits = vec![0u8; self.n];
        for (row, &m) in self.basis.iter().zip(message) {
            if m & 1 == 1 {
                for (b, r) in bits.iter_mut().zip(row) {
                    *b ^= r;
                }
            }
        }
        Ok(Codeword { bits })
    }

    /// Uniform random codeword: each basis row is included with probability
    /// one half. Draws exactly `dimension()` booleans from `rng`.
    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> Codeword {
        let message: Vec<u8> = (0..self.basis.len())
            .map(|_| rng.random::<bool>() as u8)
            .collect();
        self.codeword_from_message(&message)
            .expect("message length matches dimension")
    }
}
