//! Reconciliation efficiency models `f(p) >= 1`.

use super::RateError;

/// One measured operating point: at rate `rate` the code corrected BSC
/// crossover up to `ber` with efficiency `f = (1 - rate) / h(ber)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub rate: f64,
    pub ber: f64,
    pub f: f64,
}

const fn row(rate: f64, ber: f64, f: f64) -> ReferenceRow {
    ReferenceRow { rate, ber, f }
}

/// Measured efficiency of randomly punctured and shortened rate-1/2 codes
/// of length 200 000, per reserved fraction δ.
pub const REFERENCE_TABLE: [(f64, &[ReferenceRow]); 3] = [
    (
        0.1,
        &[
            row(0.51, 0.0945, 1.0855),
            row(0.52, 0.092, 1.0836),
            row(0.53, 0.0885, 1.0892),
            row(0.54, 0.0851, 1.0957),
            row(0.55, 0.0834, 1.0877),
        ],
    ),
    (
        0.25,
        &[
            row(0.51, 0.0885, 1.1356),
            row(0.52, 0.0868, 1.1276),
            row(0.53, 0.0834, 1.1355),
            row(0.54, 0.0808, 1.136),
            row(0.55, 0.0773, 1.1457),
            row(0.56, 0.0756, 1.1382),
            row(0.57, 0.0722, 1.1496),
            row(0.58, 0.0705, 1.1423),
            row(0.59, 0.067, 1.1557),
            row(0.6, 0.0645, 1.1598),
            row(0.61, 0.0627, 1.1531),
            row(0.62, 0.0584, 1.183),
            row(0.63, 0.0567, 1.1772),
            row(0.64, 0.055, 1.1715),
            row(0.65, 0.0516, 1.1945),
        ],
    ),
    (
        0.5,
        &[
            row(0.51, 0.0756, 1.2675),
            row(0.52, 0.0739, 1.262),
            row(0.53, 0.0696, 1.2895),
            row(0.54, 0.067, 1.2966),
            row(0.55, 0.0645, 1.3048),
            row(0.56, 0.0619, 1.314),
            row(0.57, 0.0584, 1.3386),
            row(0.58, 0.0559, 1.3513),
            row(0.59, 0.0541, 1.3659),
            row(0.6, 0.0516, 1.3651),
        ],
    ),
];

/// Efficiency as a function of the crossover probability.
#[derive(Debug, Clone, PartialEq)]
pub enum EfficiencyModel {
    Constant(f64),
    /// `f(p) = base + |p - center|`.
    AbsDeviation { base: f64, center: f64 },
    /// Piecewise-linear through `(p, f)` points sorted by `p`, held constant
    /// beyond the end points.
    Table(Vec<(f64, f64)>),
}

impl EfficiencyModel {
    pub fn table(mut points: Vec<(f64, f64)>) -> Result<Self, RateError> {
        if points.is_empty() {
            return Err(RateError::Model("efficiency table is empty".into()));
        }
        if let Some(&(p, f)) = points.iter().find(|&&(p, f)| !(f >= 1.0) || !p.is_finite()) {
            return Err(RateError::Model(format!("invalid efficiency point ({p}, {f}); f must be >= 1")));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(RateError::Model("duplicate crossover probability in efficiency table".into()));
        }
        Ok(Self::Table(points))
    }

    /// Interpolated reference measurements for the tabulated δ closest to
    /// `delta`.
    pub fn reference(delta: f64) -> Self {
        let (_, rows) = REFERENCE_TABLE
            .iter()
            .min_by(|a, b| (a.0 - delta).abs().total_cmp(&(b.0 - delta).abs()))
            .expect("non-empty table");
        Self::table(rows.iter().map(|r| (r.ber, r.f)).collect()).expect("reference rows are valid")
    }

    pub fn efficiency(&self, p: f64) -> f64 {
        let f = match self {
            Self::Constant(f) => *f,
            Self::AbsDeviation { base, center } => base + (p - center).abs(),
            Self::Table(points) => interpolate(points, p),
        };
        f.max(1.0)
    }
}

fn interpolate(points: &[(f64, f64)], p: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if p <= first.0 {
        return first.1;
    }
    if p >= last.0 {
        return last.1;
    }
    let i = points.partition_point(|&(x, _)| x <= p);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    y0 + (y1 - y0) * (p - x0) / (x1 - x0)
}

/// Parses a `p,f` CSV. A header line starting with a non-numeric field is
/// skipped.
pub fn parse_efficiency_csv(text: &str) -> Result<EfficiencyModel, RateError> {
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<(f64, f64)> = match fields[..] {
            [p, f] => p.parse().ok().zip(f.parse().ok()),
            _ => None,
        };
        match parsed {
            Some(pt) => points.push(pt),
            None if idx == 0 => continue,
            None => {
                return Err(RateError::Model(format!(
                    "line {}: expected `p,f`",
                    idx + 1
                )))
            }
        }
    }
    EfficiencyModel::table(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_and_clamps() {
        let m = EfficiencyModel::table(vec![(0.1, 1.2), (0.02, 1.4)]).unwrap();
        assert_eq!(m.efficiency(0.0), 1.4);
        assert_eq!(m.efficiency(0.3), 1.2);
        assert!((m.efficiency(0.06) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn rejects_sub_unit_efficiency() {
        assert!(EfficiencyModel::table(vec![(0.1, 0.9)]).is_err());
        assert!(EfficiencyModel::table(vec![]).is_err());
    }

    #[test]
    fn reference_model_picks_nearest_delta() {
        let m = EfficiencyModel::reference(0.12);
        assert!((m.efficiency(0.0945) - 1.0855).abs() < 1e-12);
        let m = EfficiencyModel::reference(0.4);
        assert!((m.efficiency(0.0516) - 1.3651).abs() < 1e-12);
    }

    #[test]
    fn parses_csv_with_header() {
        let m = parse_efficiency_csv("p,f\n0.05,1.3\n0.1,1.1\n").unwrap();
        assert!((m.efficiency(0.075) - 1.2).abs() < 1e-12);
        assert!(parse_efficiency_csv("p,f\n0.05\n").is_err());
    }
}
