//! Edge-perspective degree distributions and their text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::CodeError;
use crate::scalar::Scalar;

/// An LDPC ensemble given by its edge-perspective polynomials
/// `λ(x) = Σ λ_i x^(i-1)` and `ρ(x) = Σ ρ_j x^(j-1)`.
///
/// `λ_i` is the fraction of edges attached to symbol nodes of degree `i`,
/// `ρ_j` the fraction attached to check nodes of degree `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution<T> {
    lambda: BTreeMap<usize, T>,
    rho: BTreeMap<usize, T>,
}

impl<T: Scalar> DegreeDistribution<T> {
    /// Validates and builds an ensemble. Zero coefficients are dropped.
    pub fn new(
        lambda: impl IntoIterator<Item = (usize, T)>,
        rho: impl IntoIterator<Item = (usize, T)>,
    ) -> Result<Self, CodeError> {
        let lambda = collect_side(lambda, "lambda")?;
        let rho = collect_side(rho, "rho")?;
        let dist = Self { lambda, rho };
        let rate = dist.design_rate();
        if rate <= T::zero() || rate >= T::one() {
            return Err(CodeError::InvalidRate(rate.lossy_f64()));
        }
        Ok(dist)
    }

    /// Regular `(dv, dc)` ensemble.
    pub fn regular(symbol_degree: usize, check_degree: usize) -> Result<Self, CodeError> {
        Self::new([(symbol_degree, T::one())], [(check_degree, T::one())])
    }

    pub fn lambda(&self) -> &BTreeMap<usize, T> {
        &self.lambda
    }

    pub fn rho(&self) -> &BTreeMap<usize, T> {
        &self.rho
    }

    /// `Σ λ_i / i`, the inverse mean symbol-node degree.
    pub fn lambda_integral(&self) -> T {
        integral(&self.lambda)
    }

    /// `Σ ρ_j / j`, the inverse mean check-node degree.
    pub fn rho_integral(&self) -> T {
        integral(&self.rho)
    }

    /// Design rate `1 - (Σ ρ_j/j) / (Σ λ_i/i)`.
    pub fn design_rate(&self) -> T {
        design_rate_of(&self.lambda, &self.rho)
    }

    /// `λ_2`, equal to `λ'(0)`.
    pub fn lambda2(&self) -> T {
        self.lambda.get(&2).copied().unwrap_or_else(T::zero)
    }

    /// `ρ'(1) = Σ ρ_j (j - 1)`.
    pub fn rho_prime_at_one(&self) -> T {
        self.rho
            .iter()
            .fold(T::zero(), |acc, (&j, &c)| acc + c * T::from_count(j - 1))
    }

    pub fn max_symbol_degree(&self) -> usize {
        *self.lambda.keys().next_back().expect("non-empty lambda")
    }

    pub fn max_check_degree(&self) -> usize {
        *self.rho.keys().next_back().expect("non-empty rho")
    }

    pub fn min_symbol_degree(&self) -> usize {
        *self.lambda.keys().next().expect("non-empty lambda")
    }

    /// Node-perspective symbol degree fractions.
    pub fn symbol_node_fractions(&self) -> Vec<(usize, T)> {
        node_fractions(&self.lambda)
    }

    /// Node-perspective check degree fractions.
    pub fn check_node_fractions(&self) -> Vec<(usize, T)> {
        node_fractions(&self.rho)
    }

    pub fn to_f64(&self) -> DegreeDistribution<f64> {
        let conv = |m: &BTreeMap<usize, T>| m.iter().map(|(&d, &c)| (d, c.lossy_f64())).collect();
        DegreeDistribution {
            lambda: conv(&self.lambda),
            rho: conv(&self.rho),
        }
    }

    /// Serializes to the ensemble text format accepted by [`parse_ensemble`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (d, c) in &self.lambda {
            let _ = writeln!(out, "lambda: {d} {c}");
        }
        for (d, c) in &self.rho {
            let _ = writeln!(out, "rho: {d} {c}");
        }
        out
    }
}

fn collect_side<T: Scalar>(
    coeffs: impl IntoIterator<Item = (usize, T)>,
    side: &'static str,
) -> Result<BTreeMap<usize, T>, CodeError> {
    let mut map = BTreeMap::new();
    for (degree, coeff) in coeffs {
        if degree < 2 {
            return Err(CodeError::InvalidDegree { side, degree });
        }
        if coeff < T::zero() || coeff > T::one() {
            return Err(CodeError::CoefficientOutOfRange {
                side,
                degree,
                value: coeff.lossy_f64(),
            });
        }
        if coeff.is_zero() {
            continue;
        }
        let slot = map.entry(degree).or_insert_with(T::zero);
        *slot = *slot + coeff;
    }
    let sum = map.values().fold(T::zero(), |acc, &c| acc + c);
    if map.is_empty() || (sum - T::one()).abs() > T::tolerance() {
        return Err(CodeError::NotNormalized {
            side,
            sum: sum.lossy_f64(),
        });
    }
    Ok(map)
}

fn integral<T: Scalar>(side: &BTreeMap<usize, T>) -> T {
    side.iter()
        .fold(T::zero(), |acc, (&d, &c)| acc + c / T::from_count(d))
}

pub(crate) fn design_rate_of<T: Scalar>(lambda: &BTreeMap<usize, T>, rho: &BTreeMap<usize, T>) -> T {
    T::one() - integral(rho) / integral(lambda)
}

fn node_fractions<T: Scalar>(side: &BTreeMap<usize, T>) -> Vec<(usize, T)> {
    let total = integral(side);
    side.iter()
        .map(|(&d, &c)| (d, c / T::from_count(d) / total))
        .collect()
}

/// Parses an ensemble description.
///
/// One coefficient per line, `lambda: <degree> <coeff>` or
/// `rho: <degree> <coeff>`. Blank lines and `#` comments are ignored.
/// Coefficients are parsed with the scalar's `FromStr`, so rational
/// ensembles may be written as `1/3`.
pub fn parse_ensemble<T>(text: &str) -> Result<DegreeDistribution<T>, CodeError>
where
    T: Scalar + FromStr,
{
    let mut lambda = Vec::new();
    let mut rho = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| CodeError::Parse {
            line: line_no,
            reason: reason.to_string(),
        };
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| bad("expected `lambda:` or `rho:`"))?;
        let mut fields = rest.split_whitespace();
        let degree: usize = fields
            .next()
            .ok_or_else(|| bad("missing degree"))?
            .parse()
            .map_err(|_| bad("degree is not an integer"))?;
        let coeff: T = fields
            .next()
            .ok_or_else(|| bad("missing coefficient"))?
            .parse()
            .map_err(|_| bad("coefficient is not a number"))?;
        if fields.next().is_some() {
            return Err(bad("trailing fields"));
        }
        match key.trim() {
            "lambda" => lambda.push((degree, coeff)),
            "rho" => rho.push((degree, coeff)),
            other => return Err(bad(&format!("unknown key `{other}`"))),
        }
    }
    DegreeDistribution::new(lambda, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn regular_3_6_has_rate_one_half() {
        let d = DegreeDistribution::<Rational>::regular(3, 6).unwrap();
        assert_eq!(d.design_rate(), Rational::new(1, 2));
        let f = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        assert!((f.design_rate() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cycle_code_has_rate_zero_and_is_rejected() {
        let lambda = BTreeMap::from([(2usize, 1.0f64)]);
        let rho = BTreeMap::from([(2usize, 1.0f64)]);
        assert_eq!(design_rate_of(&lambda, &rho), 0.0);
        assert!(matches!(
            DegreeDistribution::<f64>::regular(2, 2),
            Err(CodeError::InvalidRate(_))
        ));
    }

    #[test]
    fn negative_rate_ensemble_is_rejected() {
        // More check edges per check than symbol edges per symbol inverted:
        // 1 - (1/2)/(1/3) = -1/2.
        assert!(matches!(
            DegreeDistribution::<f64>::regular(3, 2),
            Err(CodeError::InvalidRate(r)) if (r + 0.5).abs() < 1e-12
        ));
    }

    #[test]
    fn irregular_rate_and_derivatives() {
        let d = DegreeDistribution::<Rational>::new(
            [(2, Rational::new(2, 5)), (4, Rational::new(3, 5))],
            [(6, Rational::from_integer(1))],
        )
        .unwrap();
        // 1 - (1/6) / (2/5/2 + 3/5/4) = 1 - (1/6)/(7/20) = 11/21
        assert_eq!(d.design_rate(), Rational::new(11, 21));
        assert_eq!(d.lambda2(), Rational::new(2, 5));
        assert_eq!(d.rho_prime_at_one(), Rational::from_integer(5));
    }

    #[test]
    fn rejects_unnormalized() {
        let err = DegreeDistribution::<f64>::new([(3, 0.9)], [(6, 1.0)]).unwrap_err();
        assert!(matches!(err, CodeError::NotNormalized { side: "lambda", .. }));
    }

    #[test]
    fn parses_text_and_round_trips() {
        let text = "# (3,6)\nlambda: 3 1.0\n\nrho: 6 1.0  # checks\n";
        let d: DegreeDistribution<f64> = parse_ensemble(text).unwrap();
        assert_eq!(d, DegreeDistribution::regular(3, 6).unwrap());
        let again: DegreeDistribution<f64> = parse_ensemble(&d.to_text()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn parses_rational_coefficients() {
        let d: DegreeDistribution<Rational> =
            parse_ensemble("lambda: 2 1/2\nlambda: 3 1/2\nrho: 4 1\n").unwrap();
        assert_eq!(d.design_rate(), Rational::new(2, 5));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_ensemble::<f64>("lambda: 3 1\nsigma: 2 1\n").unwrap_err();
        assert!(matches!(err, CodeError::Parse { line: 2, .. }));
        let err = parse_ensemble::<f64>("lambda: 3 0.5\nrho: 6 1\n").unwrap_err();
        assert!(matches!(err, CodeError::NotNormalized { .. }));
    }
}
