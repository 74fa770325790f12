//! Reserved, punctured and shortened positions are uniform over the frame.

use recon_core::prng::derive_seed;
use recon_core::rate_adapt::build_layout;

const N: usize = 10_000;
const D: usize = 1_000;
const S: usize = 400;
const LAYOUTS: u64 = 1_000;

/// Upper 0.001 quantile of χ² with `df` degrees of freedom, by the
/// Wilson–Hilferty cube approximation.
fn chi2_critical(df: f64) -> f64 {
    let z = 3.090_232_306;
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

/// Per-position counts of a class drawn `k` at a time without replacement.
/// Each count is hypergeometric-like with variance `T q (1 - q)`; the sum
/// is fixed, leaving `N - 1` degrees of freedom.
fn statistic(counts: &[u64], k: usize) -> f64 {
    let q = k as f64 / N as f64;
    let expected = LAYOUTS as f64 * q;
    let var = LAYOUTS as f64 * q * (1.0 - q);
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / var).sum()
}

#[test]
fn positions_are_uniform() {
    let mut reserved = vec![0u64; N];
    let mut punctured = vec![0u64; N];
    let mut shortened = vec![0u64; N];
    let mut ones = 0u64;
    for i in 0..LAYOUTS {
        let layout = build_layout(derive_seed(2024, i), N, D, S).unwrap();
        assert_eq!(layout.payload_len(), N - D);
        for &p in &layout.punctured_positions {
            punctured[p] += 1;
            reserved[p] += 1;
        }
        for &p in &layout.shortened_positions {
            shortened[p] += 1;
            reserved[p] += 1;
        }
        ones += layout.shortened_values.iter().map(|&v| v as u64).sum::<u64>();
    }
    let critical = chi2_critical((N - 1) as f64);
    for (name, counts, k) in [("reserved", &reserved, D), ("punctured", &punctured, D - S), ("shortened", &shortened, S)] {
        let x2 = statistic(counts, k);
        assert!(x2 < critical, "{name}: χ² = {x2:.1} >= {critical:.1}");
        // A constant layout would sit far above the critical value.
        assert!(x2 > 0.5 * (N - 1) as f64, "{name}: χ² = {x2:.1} is implausibly small");
    }

    // Shortened values are fair coins: 400 000 draws, 4 standard deviations.
    let draws = (LAYOUTS as usize * S) as f64;
    let z = (ones as f64 - draws / 2.0) / (draws / 4.0).sqrt();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn critical_value_is_sane() {
    // Tabulated χ²(0.999) for 100 degrees of freedom is 149.449.
    assert!((chi2_critical(100.0) - 149.449).abs() < 0.1);
}
