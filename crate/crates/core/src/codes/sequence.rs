//! Conversion of edge-perspective fractions to integer node degrees.

use super::{CodeError, DegreeDistribution};
use crate::scalar::Scalar;

/// Target degree of every symbol and check node of a code to be built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    /// Symbol degrees, non-decreasing.
    pub symbol_degrees: Vec<usize>,
    pub check_degrees: Vec<usize>,
}

impl DegreeSequence {
    pub fn n(&self) -> usize {
        self.symbol_degrees.len()
    }

    pub fn m(&self) -> usize {
        self.check_degrees.len()
    }

    pub fn symbol_edges(&self) -> usize {
        self.symbol_degrees.iter().sum()
    }

    pub fn check_edges(&self) -> usize {
        self.check_degrees.iter().sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.symbol_edges() == self.check_edges()
    }
}

/// Rounds `total * fraction` per bucket so that the counts sum to `total`
/// (largest-remainder apportionment; ties go to the lower degree).
fn apportion(fractions: &[(usize, f64)], total: usize) -> Vec<(usize, usize)> {
    let exact: Vec<f64> = fractions.iter().map(|&(_, f)| f * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    fractions
        .iter()
        .zip(counts)
        .map(|(&(d, _), c)| (d, c))
        .collect()
}

/// Integer degree assignment for a length-`n` code from the ensemble.
///
/// Symbol node counts are the node-perspective fractions rounded so they sum
/// to `n`; `m = round(n (1 - R0))` and check counts are apportioned the same
/// way. Any remaining edge imbalance is absorbed by the check side:
/// individual check target degrees are incremented (or decremented) one at a
/// time, starting from the highest-degree checks, so the symbol-side
/// distribution stays exactly as rounded.
pub fn degree_sequence<T: Scalar>(
    dist: &DegreeDistribution<T>,
    n: usize,
) -> Result<DegreeSequence, CodeError> {
    let dist = dist.to_f64();
    let max_sym = dist.max_symbol_degree();
    if n < max_sym {
        return Err(CodeError::TooShort {
            n,
            reason: format!("maximum symbol degree is {max_sym}"),
        });
    }
    let m = (n as f64 * (1.0 - dist.design_rate())).round() as usize;
    if m < max_sym {
        return Err(CodeError::TooShort {
            n,
            reason: format!("only {m} checks for symbols of degree {max_sym}"),
        });
    }
    let max_chk = dist.max_check_degree();
    if max_chk > n {
        return Err(CodeError::TooShort {
            n,
            reason: format!("check degree {max_chk} exceeds the number of symbols"),
        });
    }

    let symbol_degrees: Vec<usize> = apportion(&dist.symbol_node_fractions(), n)
        .into_iter()
        .flat_map(|(d, c)| std::iter::repeat_n(d, c))
        .collect();
    let mut check_degrees: Vec<usize> = apportion(&dist.check_node_fractions(), m)
        .into_iter()
        .flat_map(|(d, c)| std::iter::repeat_n(d, c))
        .collect();

    let sym_edges: usize = symbol_degrees.iter().sum();
    let mut chk_edges: usize = check_degrees.iter().sum();
    let mut cursor = m;
    let mut stalled = 0;
    while chk_edges != sym_edges {
        if stalled > m {
            return Err(CodeError::TooShort {
                n,
                reason: "edge counts cannot be balanced".into(),
            });
        }
        cursor = if cursor == 0 { m - 1 } else { cursor - 1 };
        let deg = &mut check_degrees[cursor];
        if chk_edges < sym_edges && *deg < n {
            *deg += 1;
            chk_edges += 1;
            stalled = 0;
        } else if chk_edges > sym_edges && *deg > 2 {
            *deg -= 1;
            chk_edges -= 1;
            stalled = 0;
        } else {
            stalled += 1;
        }
    }

    Ok(DegreeSequence {
        symbol_degrees,
        check_degrees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn regular_3_6_length_8() {
        let d = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        let seq = degree_sequence(&d, 8).unwrap();
        assert_eq!(seq.symbol_degrees, vec![3; 8]);
        assert_eq!(seq.check_degrees, vec![6; 4]);
    }

    #[test]
    fn regular_3_6_length_1000() {
        let d = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        let seq = degree_sequence(&d, 1000).unwrap();
        assert_eq!(seq.symbol_degrees, vec![3; 1000]);
        assert_eq!(seq.check_degrees, vec![6; 500]);
        assert_eq!(seq.symbol_edges(), 3000);
        assert_eq!(seq.check_edges(), 3000);
    }

    #[test]
    fn irregular_length_12_is_balanced_on_the_check_side() {
        // λ(x) = x/2 + x²/2 → node fractions 0.6 / 0.4 → 7.2 / 4.8 → 7 / 5.
        // R0 = 1 - (1/4)/(5/12) = 2/5, so m = round(7.2) = 7 checks of
        // degree 4 = 28 edges against 7·2 + 5·3 = 29: one check goes to 5.
        let d = DegreeDistribution::<Rational>::new(
            [(2, Rational::new(1, 2)), (3, Rational::new(1, 2))],
            [(4, Rational::from_integer(1))],
        )
        .unwrap();
        let seq = degree_sequence(&d, 12).unwrap();
        assert_eq!(seq.symbol_degrees, vec![2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3]);
        assert_eq!(seq.m(), 7);
        assert_eq!(seq.check_degrees, vec![4, 4, 4, 4, 4, 4, 5]);
        assert!(seq.is_balanced());
    }

    #[test]
    fn too_short_is_an_error() {
        let d = DegreeDistribution::<f64>::new([(3, 0.5), (8, 0.5)], [(12, 1.0)]).unwrap();
        assert!(matches!(
            degree_sequence(&d, 7),
            Err(CodeError::TooShort { n: 7, .. })
        ));
    }

    #[test]
    fn realized_rate_is_within_one_over_n() {
        let d = DegreeDistribution::<f64>::new([(2, 0.3), (3, 0.4), (7, 0.3)], [(7, 0.6), (8, 0.4)])
            .unwrap();
        for n in [100, 333, 1000, 4097] {
            let seq = degree_sequence(&d, n).unwrap();
            let realized = (n - seq.m()) as f64 / n as f64;
            assert!((realized - d.design_rate()).abs() <= 1.0 / n as f64);
            assert!(seq.is_balanced());
        }
    }
}
