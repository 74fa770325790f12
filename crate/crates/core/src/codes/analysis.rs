//! Structural measurements on Tanner graphs.

use std::collections::VecDeque;

use super::ParityCheckCode;

/// Length of the shortest cycle in the Tanner graph, `None` if acyclic.
///
/// Breadth-first search from every symbol node; each search stops once it
/// can no longer improve on the best cycle found so far.
pub fn girth(code: &ParityCheckCode) -> Option<usize> {
    let n = code.n();
    let m = code.m();
    // Node ids: symbols 0..n, checks n..n+m.
    let mut dist = vec![usize::MAX; n + m];
    let mut parent = vec![usize::MAX; n + m];
    let mut touched: Vec<usize> = Vec::new();
    let mut best = usize::MAX;
    let mut queue = VecDeque::new();

    for root in 0..n {
        for &t in &touched {
            dist[t] = usize::MAX;
            parent[t] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            if 2 * dist[x] >= best {
                break;
            }
            let neighbors: &[usize] = if x < n {
                code.symbol_checks(x)
            } else {
                code.check_symbols(x - n)
            };
            for &raw in neighbors {
                let y = if x < n { raw + n } else { raw };
                if y == parent[x] {
                    continue;
                }
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    parent[y] = x;
                    touched.push(y);
                    queue.push_back(y);
                } else {
                    best = best.min(dist[x] + dist[y] + 1);
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Rank of the parity-check matrix over GF(2), by dense elimination on
/// bit-packed rows.
pub fn gf2_rank(code: &ParityCheckCode) -> usize {
    let n = code.n();
    let words = n.div_ceil(64);
    let mut rows: Vec<Vec<u64>> = (0..code.m())
        .map(|c| {
            let mut row = vec![0u64; words];
            for &v in code.check_symbols(c) {
                row[v / 64] |= 1 << (v % 64);
            }
            row
        })
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let (done, rest) = rows.split_at_mut(rank + 1);
        let pivot = &done[rank];
        for row in rest.iter_mut() {
            if row[w] & bit != 0 {
                for (a, b) in row[w..].iter_mut().zip(&pivot[w..]) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
