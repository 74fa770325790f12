//! Value lists given as `lo:hi:step` ranges or comma lists.

use crate::CliError;

/// Parses `lo:hi:step` (inclusive, rounded to 1e-9) or `a,b,c`. An empty
/// string is an empty list.
pub fn parse_values(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if text.contains(':') {
        let (lo, hi, step) = parse_range(text, what)?;
        if hi < lo {
            return Ok(Vec::new());
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| round9(lo + i as f64 * step)).collect());
    }
    text.split(',').map(|s| num(s, what)).collect()
}

/// Parses `lo:hi:step` with a positive step.
pub fn parse_range(text: &str, what: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(CliError::Usage(format!("{what}: expected lo:hi:step")));
    };
    let (lo, hi, step) = (num(lo, what)?, num(hi, what)?, num(step, what)?);
    if !(step > 0.0) {
        return Err(CliError::Usage(format!("{what}: step must be positive")));
    }
    Ok((lo, hi, step))
}

fn num(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::Usage(format!("{what}: `{s}` is not a number")))
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}
