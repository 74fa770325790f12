//! Random socket-matching construction.
//!
//! Much cheaper than progressive edge growth for long codes (no girth
//! control). Used for large Monte Carlo cross-checks.

use super::{CodeError, DegreeSequence, ParityCheckCode};
use crate::prng::{derive_seed, SplitMix64};

const SOCKET_STREAM: u64 = 0x534f_434b_4554_5321;

/// Uniform random matching of symbol sockets to check sockets, with
/// multi-edges repaired by random socket swaps.
pub fn random_construct(seq: &DegreeSequence, seed: u64) -> Result<ParityCheckCode, CodeError> {
    if !seq.is_balanced() {
        return Err(CodeError::Unbalanced {
            symbol_edges: seq.symbol_edges(),
            check_edges: seq.check_edges(),
        });
    }
    let n = seq.n();
    let edges = seq.symbol_edges();
    let mut rng = SplitMix64::new(derive_seed(seed, SOCKET_STREAM));

    // sockets[e] = check attached to edge e; edges grouped by symbol.
    let mut sockets: Vec<usize> = seq
        .check_degrees
        .iter()
        .enumerate()
        .flat_map(|(c, &d)| std::iter::repeat_n(c, d))
        .collect();
    let perm = rng.partial_shuffle(edges, edges);
    sockets = perm.into_iter().map(|i| sockets[i]).collect();

    let mut start = Vec::with_capacity(n + 1);
    start.push(0usize);
    for &d in &seq.symbol_degrees {
        start.push(start.last().unwrap() + d);
    }
    let owner: Vec<usize> = (0..n)
        .flat_map(|v| std::iter::repeat_n(v, seq.symbol_degrees[v]))
        .collect();
    let has = |sockets: &[usize], v: usize, c: usize, skip: usize| {
        (start[v]..start[v + 1]).any(|e| e != skip && sockets[e] == c)
    };

    for v in 0..n {
        for e in start[v]..start[v + 1] {
            let mut attempts = 0;
            while has(&sockets, v, sockets[e], e) {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(CodeError::Unsatisfiable {
                        symbol: v,
                        edge: e - start[v],
                    });
                }
                let f = rng.next_below(edges as u64) as usize;
                let u = owner[f];
                if u == v {
                    continue;
                }
                let (ce, cf) = (sockets[e], sockets[f]);
                if !has(&sockets, v, cf, e) && !has(&sockets, u, ce, f) {
                    sockets.swap(e, f);
                }
            }
        }
    }

    let mut checks = vec![Vec::new(); seq.m()];
    for (e, &c) in sockets.iter().enumerate() {
        checks[c].push(owner[e]);
    }
    ParityCheckCode::from_check_lists(n, checks)
}
