//! LDPC ensembles, Tanner graph construction and syndromes.

mod alist;
mod analysis;
mod ensemble;
mod peg;
mod random;
mod sequence;

use std::sync::OnceLock;

use thiserror::Error;

pub use alist::{read_alist, write_alist};
pub use analysis::{girth, gf2_rank};
pub use ensemble::{parse_ensemble, DegreeDistribution};
pub use peg::peg_construct;
pub use random::random_construct;
pub use sequence::{degree_sequence, DegreeSequence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeError {
    #[error("{side} degree {degree} is below 2")]
    InvalidDegree { side: &'static str, degree: usize },
    #[error("{side} coefficient for degree {degree} is {value}, outside [0, 1]")]
    CoefficientOutOfRange {
        side: &'static str,
        degree: usize,
        value: f64,
    },
    #[error("{side} coefficients sum to {sum}, not 1")]
    NotNormalized { side: &'static str, sum: f64 },
    #[error("design rate {0} is outside (0, 1)")]
    InvalidRate(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("n = {n} is too small for this ensemble: {reason}")]
    TooShort { n: usize, reason: String },
    #[error("symbol {symbol} cannot place edge {edge}: no admissible check left")]
    Unsatisfiable { symbol: usize, edge: usize },
    #[error("degree sequence is unbalanced: {symbol_edges} symbol edges vs {check_edges} check edges")]
    Unbalanced {
        symbol_edges: usize,
        check_edges: usize,
    },
    #[error("check {check} references symbol {symbol} but n = {n}")]
    SymbolOutOfRange {
        check: usize,
        symbol: usize,
        n: usize,
    },
    #[error("duplicate edge between check {check} and symbol {symbol}")]
    DuplicateEdge { check: usize, symbol: usize },
    #[error("expected a word of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A sparse binary parity-check matrix, stored as a Tanner graph with
/// adjacency in both directions.
///
/// Edges are numbered in check-major order: the edges of check `c` are
/// `check_ptr[c]..check_ptr[c + 1]`, sorted by symbol index. Immutable once
/// built.
#[derive(Debug)]
pub struct ParityCheckCode {
    n: usize,
    check_ptr: Vec<usize>,
    check_syms: Vec<usize>,
    sym_ptr: Vec<usize>,
    sym_checks: Vec<usize>,
    sym_edges: Vec<usize>,
    rank: OnceLock<usize>,
}

impl Clone for ParityCheckCode {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            check_ptr: self.check_ptr.clone(),
            check_syms: self.check_syms.clone(),
            sym_ptr: self.sym_ptr.clone(),
            sym_checks: self.sym_checks.clone(),
            sym_edges: self.sym_edges.clone(),
            rank: self.rank.clone(),
        }
    }
}

impl PartialEq for ParityCheckCode {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.check_ptr == other.check_ptr && self.check_syms == other.check_syms
    }
}

impl Eq for ParityCheckCode {}

impl ParityCheckCode {
    /// Builds a code from per-check symbol lists.
    pub fn from_check_lists(n: usize, checks: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let mut check_ptr = Vec::with_capacity(checks.len() + 1);
        let mut check_syms = Vec::new();
        check_ptr.push(0);
        for (c, mut row) in checks.into_iter().enumerate() {
            row.sort_unstable();
            for w in row.windows(2) {
                if w[0] == w[1] {
                    return Err(CodeError::DuplicateEdge {
                        check: c,
                        symbol: w[0],
                    });
                }
            }
            if let Some(&last) = row.last() {
                if last >= n {
                    return Err(CodeError::SymbolOutOfRange {
                        check: c,
                        symbol: last,
                        n,
                    });
                }
            }
            check_syms.extend_from_slice(&row);
            check_ptr.push(check_syms.len());
        }

        let mut sym_deg = vec![0usize; n];
        for &v in &check_syms {
            sym_deg[v] += 1;
        }
        let mut sym_ptr = Vec::with_capacity(n + 1);
        sym_ptr.push(0);
        for &d in &sym_deg {
            sym_ptr.push(sym_ptr.last().unwrap() + d);
        }
        let edges = check_syms.len();
        let mut sym_checks = vec![0usize; edges];
        let mut sym_edges = vec![0usize; edges];
        let mut cursor = sym_ptr[..n].to_vec();
        for c in 0..check_ptr.len() - 1 {
            for e in check_ptr[c]..check_ptr[c + 1] {
                let v = check_syms[e];
                sym_checks[cursor[v]] = c;
                sym_edges[cursor[v]] = e;
                cursor[v] += 1;
            }
        }

        Ok(Self {
            n,
            check_ptr,
            check_syms,
            sym_ptr,
            sym_checks,
            sym_edges,
            rank: OnceLock::new(),
        })
    }

    /// Number of symbol nodes (code length).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of check nodes (syndrome length).
    pub fn m(&self) -> usize {
        self.check_ptr.len() - 1
    }

    /// `n - m`, the dimension when the matrix has full rank.
    pub fn design_dimension(&self) -> usize {
        self.n.saturating_sub(self.m())
    }

    /// `(n - m) / n`.
    pub fn mother_rate(&self) -> f64 {
        self.design_dimension() as f64 / self.n as f64
    }

    pub fn edge_count(&self) -> usize {
        self.check_syms.len()
    }

    /// Symbols adjacent to check `c`, ascending.
    pub fn check_symbols(&self, c: usize) -> &[usize] {
        &self.check_syms[self.check_ptr[c]..self.check_ptr[c + 1]]
    }

    /// Checks adjacent to symbol `v`, ascending.
    pub fn symbol_checks(&self, v: usize) -> &[usize] {
        &self.sym_checks[self.sym_ptr[v]..self.sym_ptr[v + 1]]
    }

    pub(crate) fn check_edge_range(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    #[cfg(test)]
    pub(crate) fn edge_symbol(&self, e: usize) -> usize {
        self.check_syms[e]
    }

    /// Check-major edge indices incident to symbol `v`.
    pub(crate) fn symbol_edges(&self, v: usize) -> &[usize] {
        &self.sym_edges[self.sym_ptr[v]..self.sym_ptr[v + 1]]
    }

    pub fn symbol_degree(&self, v: usize) -> usize {
        self.sym_ptr[v + 1] - self.sym_ptr[v]
    }

    pub fn check_degree(&self, c: usize) -> usize {
        self.check_ptr[c + 1] - self.check_ptr[c]
    }

    pub fn check_lists(&self) -> Vec<Vec<usize>> {
        (0..self.m()).map(|c| self.check_symbols(c).to_vec()).collect()
    }

    /// GF(2) rank of the matrix, computed on first use.
    pub fn rank(&self) -> usize {
        *self.rank.get_or_init(|| {
            let r = gf2_rank(self);
            if r < self.m() {
                log::info!("parity-check matrix has rank {r} < m = {}", self.m());
            }
            r
        })
    }

    /// `n - rank`, the true code dimension.
    pub fn dimension(&self) -> usize {
        self.n - self.rank()
    }

    /// Syndrome `H·word` over GF(2). Bits are `0`/`1` bytes.
    pub fn syndrome(&self, word: &[u8]) -> Result<Vec<u8>, CodeError> {
        if word.len() != self.n {
            return Err(CodeError::LengthMismatch {
                expected: self.n,
                actual: word.len(),
            });
        }
        Ok((0..self.m())
            .map(|c| {
                self.check_symbols(c)
                    .iter()
                    .fold(0u8, |acc, &v| acc ^ (word[v] & 1))
            })
            .collect())
    }

    /// Whether `word` has the given syndrome. Lengths must already match.
    pub(crate) fn satisfies(&self, word: &[u8], target: &[u8]) -> bool {
        (0..self.m()).all(|c| {
            self.check_symbols(c)
                .iter()
                .fold(target[c], |acc, &v| acc ^ word[v])
                == 0
        })
    }

    /// Number of checks whose parity disagrees with `target`.
    pub(crate) fn unsatisfied(&self, word: &[u8], target: &[u8]) -> usize {
        (0..self.m())
            .filter(|&c| {
                self.check_symbols(c)
                    .iter()
                    .fold(target[c], |acc, &v| acc ^ word[v])
                    != 0
            })
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::SplitMix64;
    use proptest::prelude::*;

    fn small_code() -> ParityCheckCode {
        let seq = degree_sequence(&DegreeDistribution::<f64>::regular(3, 6).unwrap(), 60).unwrap();
        peg_construct(&seq, 3).unwrap()
    }

    #[test]
    fn zero_word_has_zero_syndrome() {
        let code = small_code();
        assert!(code.syndrome(&vec![0; 60]).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn unit_word_selects_adjacent_checks() {
        let code = small_code();
        for v in [0, 17, 59] {
            let mut word = vec![0u8; 60];
            word[v] = 1;
            let s = code.syndrome(&word).unwrap();
            let expected: Vec<usize> = code.symbol_checks(v).to_vec();
            let got: Vec<usize> = (0..code.m()).filter(|&c| s[c] == 1).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn syndrome_rejects_wrong_length() {
        let code = small_code();
        assert_eq!(
            code.syndrome(&[0; 59]),
            Err(CodeError::LengthMismatch {
                expected: 60,
                actual: 59
            })
        );
    }

    #[test]
    fn rejects_duplicate_and_out_of_range_edges() {
        assert!(matches!(
            ParityCheckCode::from_check_lists(4, vec![vec![0, 1, 1]]),
            Err(CodeError::DuplicateEdge { check: 0, symbol: 1 })
        ));
        assert!(matches!(
            ParityCheckCode::from_check_lists(4, vec![vec![0, 4]]),
            Err(CodeError::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn both_adjacency_directions_agree() {
        let code = small_code();
        for v in 0..code.n() {
            for (&c, &e) in code.symbol_checks(v).iter().zip(code.symbol_edges(v)) {
                assert!(code.check_edge_range(c).contains(&e));
                assert_eq!(code.edge_symbol(e), v);
            }
        }
    }

    proptest! {
        #[test]
        fn syndrome_is_linear(seed_a in any::<u64>(), seed_b in any::<u64>()) {
            let code = small_code();
            let a = SplitMix64::new(seed_a).bits(60);
            let b = SplitMix64::new(seed_b).bits(60);
            let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let sa = code.syndrome(&a).unwrap();
            let sb = code.syndrome(&b).unwrap();
            let expected: Vec<u8> = sa.iter().zip(&sb).map(|(x, y)| x ^ y).collect();
            prop_assert_eq!(code.syndrome(&sum).unwrap(), expected);
        }
    }
}
