//! MacKay's alist format.
//!
//! ```text
//! n m
//! max_symbol_degree max_check_degree
//! <n symbol degrees>
//! <m check degrees>
//! <n lines: 1-based check indices of each symbol>
//! <m lines: 1-based symbol indices of each check>
//! ```
//!
//! The writer emits single spaces, no zero padding and a trailing newline.
//! The reader also accepts zero-padded adjacency lines and arbitrary
//! whitespace, and cross-checks both adjacency blocks.

use std::fmt::Write as _;

use super::{CodeError, ParityCheckCode};

pub fn write_alist(code: &ParityCheckCode) -> String {
    let n = code.n();
    let m = code.m();
    let sym_deg: Vec<usize> = (0..n).map(|v| code.symbol_degree(v)).collect();
    let chk_deg: Vec<usize> = (0..m).map(|c| code.check_degree(c)).collect();
    let join = |xs: &mut dyn Iterator<Item = usize>| {
        xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };

    let mut out = String::new();
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(
        out,
        "{} {}",
        sym_deg.iter().max().copied().unwrap_or(0),
        chk_deg.iter().max().copied().unwrap_or(0)
    );
    let _ = writeln!(out, "{}", join(&mut sym_deg.iter().copied()));
    let _ = writeln!(out, "{}", join(&mut chk_deg.iter().copied()));
    for v in 0..n {
        let _ = writeln!(out, "{}", join(&mut code.symbol_checks(v).iter().map(|c| c + 1)));
    }
    for c in 0..m {
        let _ = writeln!(out, "{}", join(&mut code.check_symbols(c).iter().map(|v| v + 1)));
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_numbers(&mut self, what: &str) -> Result<Vec<usize>, CodeError> {
        let (idx, line) = self.inner.next().ok_or_else(|| CodeError::Parse {
            line: self.last + 1,
            reason: format!("unexpected end of file, expected {what}"),
        })?;
        self.last = idx + 1;
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| CodeError::Parse {
                    line: idx + 1,
                    reason: format!("`{tok}` is not a non-negative integer"),
                })
            })
            .collect()
    }

    fn err(&self, reason: String) -> CodeError {
        CodeError::Parse {
            line: self.last,
            reason,
        }
    }
}

pub fn read_alist(text: &str) -> Result<ParityCheckCode, CodeError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let header = lines.next_numbers("`n m`")?;
    let [n, m] = header[..] else {
        return Err(lines.err("expected `n m`".into()));
    };
    let maxima = lines.next_numbers("maximum degrees")?;
    if maxima.len() != 2 {
        return Err(lines.err("expected two maximum degrees".into()));
    }
    let sym_deg = lines.next_numbers("symbol degrees")?;
    if sym_deg.len() != n {
        return Err(lines.err(format!("expected {n} symbol degrees")));
    }
    let chk_deg = lines.next_numbers("check degrees")?;
    if chk_deg.len() != m {
        return Err(lines.err(format!("expected {m} check degrees")));
    }

    let mut from_symbols = vec![Vec::new(); m];
    for (v, &deg) in sym_deg.iter().enumerate() {
        let entries: Vec<usize> = lines
            .next_numbers("symbol adjacency")?
            .into_iter()
            .filter(|&c| c != 0)
            .collect();
        if entries.len() != deg {
            return Err(lines.err(format!("symbol {} lists {} checks, degree says {deg}", v + 1, entries.len())));
        }
        for c in entries {
            if c > m {
                return Err(lines.err(format!("check index {c} exceeds m = {m}")));
            }
            from_symbols[c - 1].push(v);
        }
    }
    let mut checks = Vec::with_capacity(m);
    for (c, &deg) in chk_deg.iter().enumerate() {
        let mut entries: Vec<usize> = lines
            .next_numbers("check adjacency")?
            .into_iter()
            .filter(|&v| v != 0)
            .map(|v| v - 1)
            .collect();
        if entries.len() != deg {
            return Err(lines.err(format!("check {} lists {} symbols, degree says {deg}", c + 1, entries.len())));
        }
        entries.sort_unstable();
        let mut other = from_symbols[c].clone();
        other.sort_unstable();
        if entries != other {
            return Err(lines.err(format!("check {} disagrees with the symbol adjacency block", c + 1)));
        }
        checks.push(entries);
    }
    ParityCheckCode::from_check_lists(n, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{degree_sequence, peg_construct, DegreeDistribution};

    const TOY: &str = "4 2\n2 3\n1 2 2 1\n3 3\n1\n1 2\n1 2\n2\n1 2 3\n2 3 4\n";

    #[test]
    fn reads_and_writes_toy_matrix() {
        let code = read_alist(TOY).unwrap();
        assert_eq!(code.n(), 4);
        assert_eq!(code.check_symbols(0), &[0, 1, 2]);
        assert_eq!(code.check_symbols(1), &[1, 2, 3]);
        assert_eq!(write_alist(&code), TOY);
    }

    #[test]
    fn accepts_zero_padding() {
        let padded = "4 2\n2 3\n1 2 2 1\n3 3\n1 0\n1 2\n1 2\n2 0\n1 2 3\n2 3 4\n";
        assert_eq!(read_alist(padded).unwrap(), read_alist(TOY).unwrap());
    }

    #[test]
    fn round_trips_a_peg_code_byte_exactly() {
        let d = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        let code = peg_construct(&degree_sequence(&d, 200).unwrap(), 9).unwrap();
        let text = write_alist(&code);
        let back = read_alist(&text).unwrap();
        assert_eq!(back, code);
        assert_eq!(write_alist(&back), text);
    }

    #[test]
    fn rejects_inconsistent_blocks() {
        let bad = "4 2\n2 3\n1 2 2 1\n3 3\n1\n1 2\n1 2\n2\n1 2 4\n2 3 4\n";
        assert!(matches!(read_alist(bad), Err(CodeError::Parse { line: 9, .. })));
        assert!(matches!(read_alist("4 2\n"), Err(CodeError::Parse { .. })));
        assert!(matches!(read_alist("4 x\n"), Err(CodeError::Parse { line: 1, .. })));
    }
}
