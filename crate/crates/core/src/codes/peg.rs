//! Progressive edge growth with per-check target degrees.
//!
//! Symbols are processed in non-decreasing degree order. The first edge of a
//! symbol goes to the open check with the lowest current degree. Every later
//! edge goes to a check as far as possible from the symbol in the graph
//! built so far: the breadth-first tree rooted at the symbol is expanded
//! until it either stops growing (then any unreached open check qualifies)
//! or would reach every open check (then only the checks first reached at
//! that last level qualify). A check is open while its degree is below its
//! target from the check degree sequence. Among qualifying checks the one
//! with the lowest current degree wins, then the lowest label. Labels are a
//! seed-derived permutation of the check indices.
//!
//! Because check degrees are capped, the last few symbols can be left with
//! only nearby open checks and close a 4-cycle. A final pass removes such
//! cycles by degree-preserving edge swaps.

use std::collections::BTreeSet;

use super::{CodeError, DegreeSequence, ParityCheckCode};
use crate::prng::{derive_seed, SplitMix64};

const LABEL_STREAM: u64 = 0x5045_475f_4c42_4c53;

struct Builder<'a> {
    targets: &'a [usize],
    label: Vec<usize>,
    sym_adj: Vec<Vec<usize>>,
    chk_adj: Vec<Vec<usize>>,
    /// `(current degree, label, check)` of every check still below target.
    open: BTreeSet<(usize, usize, usize)>,
    chk_mark: Vec<u32>,
    sym_mark: Vec<u32>,
    stamp: u32,
}

impl<'a> Builder<'a> {
    fn key(&self, c: usize) -> (usize, usize, usize) {
        (self.chk_adj[c].len(), self.label[c], c)
    }

    fn connect(&mut self, v: usize, c: usize) {
        self.open.remove(&self.key(c));
        self.sym_adj[v].push(c);
        self.chk_adj[c].push(v);
        if self.chk_adj[c].len() < self.targets[c] {
            self.open.insert(self.key(c));
        }
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.chk_mark.fill(0);
            self.sym_mark.fill(0);
            self.stamp = 1;
        }
        self.stamp
    }

    /// Picks the check for the next edge of `v`, which already has edges.
    fn farthest_open_check(&mut self, v: usize) -> Option<usize> {
        let stamp = self.next_stamp();
        self.sym_mark[v] = stamp;
        let mut frontier: Vec<usize> = Vec::new();
        let mut reached_open = 0usize;
        for &c in &self.sym_adj[v] {
            if self.chk_mark[c] != stamp {
                self.chk_mark[c] = stamp;
                frontier.push(c);
                if self.chk_adj[c].len() < self.targets[c] {
                    reached_open += 1;
                }
            }
        }
        let total_open = self.open.len();
        if reached_open == total_open {
            return None;
        }
        loop {
            let mut next: Vec<usize> = Vec::new();
            let mut next_open = 0usize;
            for &c in &frontier {
                for &u in &self.chk_adj[c] {
                    if self.sym_mark[u] == stamp {
                        continue;
                    }
                    self.sym_mark[u] = stamp;
                    for &c2 in &self.sym_adj[u] {
                        if self.chk_mark[c2] != stamp {
                            self.chk_mark[c2] = stamp;
                            next.push(c2);
                            if self.chk_adj[c2].len() < self.targets[c2] {
                                next_open += 1;
                            }
                        }
                    }
                }
            }
            if next.is_empty() {
                // Tree stopped growing: best unreached open check.
                return self
                    .open
                    .iter()
                    .find(|&&(_, _, c)| self.chk_mark[c] != stamp)
                    .map(|&(_, _, c)| c);
            }
            if reached_open + next_open == total_open {
                // Next level covers everything: pick among its new checks.
                return next
                    .iter()
                    .copied()
                    .filter(|&c| self.chk_adj[c].len() < self.targets[c])
                    .min_by_key(|&c| self.key(c));
            }
            reached_open += next_open;
            frontier = next;
        }
    }
}

/// Builds a Tanner graph realizing `seq` by progressive edge growth.
///
/// Deterministic for a fixed `(seq, seed)`; the seed only fixes the check
/// labels used to break ties.
pub fn peg_construct(seq: &DegreeSequence, seed: u64) -> Result<ParityCheckCode, CodeError> {
    if !seq.is_balanced() {
        return Err(CodeError::Unbalanced {
            symbol_edges: seq.symbol_edges(),
            check_edges: seq.check_edges(),
        });
    }
    let n = seq.n();
    let m = seq.m();
    let perm = SplitMix64::new(derive_seed(seed, LABEL_STREAM)).partial_shuffle(m, m);
    let mut label = vec![0usize; m];
    for (rank, &c) in perm.iter().enumerate() {
        label[c] = rank;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (seq.symbol_degrees[v], v));

    let mut b = Builder {
        targets: &seq.check_degrees,
        open: (0..m)
            .filter(|&c| seq.check_degrees[c] > 0)
            .map(|c| (0, label[c], c))
            .collect(),
        label,
        sym_adj: seq.symbol_degrees.iter().map(|&d| Vec::with_capacity(d)).collect(),
        chk_adj: seq.check_degrees.iter().map(|&d| Vec::with_capacity(d)).collect(),
        chk_mark: vec![0; m],
        sym_mark: vec![0; n],
        stamp: 0,
    };

    for v in order {
        for edge in 0..seq.symbol_degrees[v] {
            let pick = if edge == 0 {
                b.open.iter().next().map(|&(_, _, c)| c)
            } else {
                b.farthest_open_check(v)
            };
            match pick {
                Some(c) => b.connect(v, c),
                None => return Err(CodeError::Unsatisfiable { symbol: v, edge }),
            }
        }
    }

    let Builder {
        mut sym_adj,
        mut chk_adj,
        ..
    } = b;
    remove_four_cycles(&mut sym_adj, &mut chk_adj, seed);
    ParityCheckCode::from_check_lists(n, chk_adj)
}

fn in_four_cycle(v: usize, sym_adj: &[Vec<usize>], chk_adj: &[Vec<usize>]) -> bool {
    let mut seen: Vec<usize> = sym_adj[v]
        .iter()
        .flat_map(|&c| chk_adj[c].iter().copied())
        .filter(|&u| u != v)
        .collect();
    let total = seen.len();
    seen.sort_unstable();
    seen.dedup();
    seen.len() != total
}

fn replace(list: &mut [usize], from: usize, to: usize) {
    if let Some(x) = list.iter_mut().find(|x| **x == from) {
        *x = to;
    }
}

/// Swaps `(v, c)`, `(u, d)` into `(v, d)`, `(u, c)`.
fn swap_edges(sym_adj: &mut [Vec<usize>], chk_adj: &mut [Vec<usize>], v: usize, c: usize, u: usize, d: usize) {
    replace(&mut sym_adj[v], c, d);
    replace(&mut sym_adj[u], d, c);
    replace(&mut chk_adj[c], v, u);
    replace(&mut chk_adj[d], u, v);
}

fn remove_four_cycles(sym_adj: &mut [Vec<usize>], chk_adj: &mut [Vec<usize>], seed: u64) {
    let n = sym_adj.len();
    let mut rng = SplitMix64::new(derive_seed(seed, LABEL_STREAM ^ 4));
    for _pass in 0..4 {
        let mut clean = true;
        for v in (0..n).rev() {
            if !in_four_cycle(v, sym_adj, chk_adj) {
                continue;
            }
            clean = false;
            let offset = rng.next_below(n as u64) as usize;
            'edges: for k in 0..sym_adj[v].len() {
                let c = sym_adj[v][k];
                for step in 0..n {
                    let u = (offset + step) % n;
                    if u == v || chk_adj[c].contains(&u) {
                        continue;
                    }
                    for j in 0..sym_adj[u].len() {
                        let d = sym_adj[u][j];
                        if sym_adj[v].contains(&d) {
                            continue;
                        }
                        swap_edges(sym_adj, chk_adj, v, c, u, d);
                        if !in_four_cycle(v, sym_adj, chk_adj) && !in_four_cycle(u, sym_adj, chk_adj) {
                            break 'edges;
                        }
                        swap_edges(sym_adj, chk_adj, v, d, u, c);
                    }
                }
            }
        }
        if clean {
            return;
        }
    }
}
