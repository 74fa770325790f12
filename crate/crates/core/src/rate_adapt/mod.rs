//! Puncturing and shortening arithmetic.
//!
//! A frame of `n` symbols reserves `d = ⌊δ n⌋` of them before the channel
//! is known. Once the crossover probability has been estimated the reserved
//! symbols are split into `p` punctured (unknown to both sides) and `s`
//! shortened (known to both sides) symbols, moving the rate of a mother code
//! of rate `R0` to
//!
//! ```text
//! R = (R0 - σ) / (1 - π - σ) = (k - s) / (n - p - s),   π = p/n, σ = s/n
//! ```
//!
//! anywhere in `[(R0 - δ)/(1 - δ), R0/(1 - δ)]`.

mod efficiency;
mod layout;

use thiserror::Error;

use crate::scalar::{Real, Scalar};

pub use efficiency::{parse_efficiency_csv, EfficiencyModel, ReferenceRow, REFERENCE_TABLE};
pub use layout::{
    assemble_frame, build_layout, disassemble_frame, FrameLayout, LayoutError, SymbolRole,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("punctured plus shortened fraction {0} must be below 1")]
    NothingTransmitted(f64),
    #[error("reserved fraction {0} is outside [0, 1)")]
    InvalidDelta(f64),
    #[error("rate {rate} is outside the achievable interval [{min}, {max}]")]
    OutOfRange { rate: f64, min: f64, max: f64 },
    #[error("crossover estimate {0} is outside (0, 0.5)")]
    InvalidCrossover(f64),
    #[error("{0}")]
    Model(String),
    #[error("shortening {shortened} symbols exceeds the code dimension {k}")]
    OverShortened { shortened: usize, k: usize },
}

/// Rate after puncturing a fraction `pi` and shortening a fraction `sigma`
/// of a rate-`r0` code.
pub fn effective_rate<T: Scalar>(r0: T, pi: T, sigma: T) -> Result<T, RateError> {
    let kept = T::one() - pi - sigma;
    if kept <= T::zero() {
        return Err(RateError::NothingTransmitted((pi + sigma).lossy_f64()));
    }
    Ok((r0 - sigma) / kept)
}

/// Integer form `(k - s) / (n - p - s)`.
pub fn effective_rate_from_counts<T: Scalar>(
    k: usize,
    n: usize,
    punctured: usize,
    shortened: usize,
) -> Result<T, RateError> {
    if punctured + shortened >= n {
        return Err(RateError::NothingTransmitted(
            (punctured + shortened) as f64 / n as f64,
        ));
    }
    if shortened > k {
        return Err(RateError::OverShortened { shortened, k });
    }
    Ok(T::from_count(k - shortened) / T::from_count(n - punctured - shortened))
}

/// Interval of rates reachable with reserved fraction `delta`:
/// `[(r0 - δ)/(1 - δ), r0/(1 - δ)]`.
///
/// The lower end is negative when `δ > r0`; such rates are not usable but
/// the interval is reported as computed.
pub fn achievable_range<T: Scalar>(r0: T, delta: T) -> Result<(T, T), RateError> {
    if delta < T::zero() || delta >= T::one() {
        return Err(RateError::InvalidDelta(delta.lossy_f64()));
    }
    let kept = T::one() - delta;
    Ok(((r0 - delta) / kept, r0 / kept))
}

/// Result of fitting a requested rate into the achievable interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateChoice<T> {
    pub requested: T,
    pub rate: T,
    pub clamped: bool,
}

/// Clamps `rate` to the achievable interval, reporting whether it moved.
pub fn clamp_rate<T: Scalar>(r0: T, delta: T, rate: T) -> Result<RateChoice<T>, RateError> {
    let (lo, hi) = achievable_range(r0, delta)?;
    let clamped_rate = if rate < lo {
        lo
    } else if rate > hi {
        hi
    } else {
        rate
    };
    Ok(RateChoice {
        requested: rate,
        rate: clamped_rate,
        clamped: clamped_rate != rate,
    })
}

/// Binary entropy in bits. `h(0) = h(1) = 0`.
pub fn binary_entropy<F: Real>(p: F) -> F {
    if p <= F::zero() || p >= F::one() {
        return F::zero();
    }
    let q = F::one() - p;
    -(p * p.log2() + q * q.log2())
}

/// Rate an efficiency-`f` code needs at crossover `p_star`:
/// `1 - f(p*) h(p*)`.
pub fn target_rate(p_star: f64, model: &EfficiencyModel) -> Result<f64, RateError> {
    if !(p_star > 0.0 && p_star < 0.5) {
        return Err(RateError::InvalidCrossover(p_star));
    }
    Ok(1.0 - model.efficiency(p_star) * binary_entropy(p_star))
}

/// Continuous puncture/shorten fractions `(π, σ)` realizing `rate`:
/// `σ = r0 - rate (1 - δ)`, `π = δ - σ`.
pub fn split_ratios<T: Scalar>(r0: T, rate: T, delta: T) -> Result<(T, T), RateError> {
    let (lo, hi) = achievable_range(r0, delta)?;
    let sigma = r0 - rate * (T::one() - delta);
    let pi = delta - sigma;
    if sigma < -T::tolerance() || pi < -T::tolerance() {
        return Err(RateError::OutOfRange {
            rate: rate.lossy_f64(),
            min: lo.lossy_f64(),
            max: hi.lossy_f64(),
        });
    }
    let clip = |x: T| if x < T::zero() { T::zero() } else { x };
    Ok((clip(pi), clip(sigma)))
}

/// Number of shortened and punctured symbols for `rate`:
/// `s = ⌈(r0 - rate (1 - d/n)) n⌉`, `p = d - s`.
///
/// The ceiling makes the realized rate `(k - s)/(n - d)` at most `rate`
/// and less than `1/(n - d)` below it.
pub fn split_s_p<T: Scalar>(r0: T, rate: T, d: usize, n: usize) -> Result<(usize, usize), RateError> {
    let nn = T::from_count(n);
    let dd = T::from_count(d);
    let exact = (r0 - rate * (T::one() - dd / nn)) * nn;
    let out_of_range = || {
        let (lo, hi) = achievable_range(r0, dd / nn)
            .map(|(a, b)| (a.lossy_f64(), b.lossy_f64()))
            .unwrap_or((f64::NAN, f64::NAN));
        RateError::OutOfRange {
            rate: rate.lossy_f64(),
            min: lo,
            max: hi,
        }
    };
    if d > n {
        return Err(RateError::InvalidDelta(d as f64 / n as f64));
    }
    let s = exact.ceil_to_i64().ok_or_else(out_of_range)?;
    if s < 0 || s as usize > d {
        return Err(out_of_range());
    }
    let s = s as usize;
    Ok((s, d - s))
}

/// Reserved symbol count `⌊δ n⌋`.
pub fn reserved_count(delta: f64, n: usize) -> Result<usize, RateError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(RateError::InvalidDelta(delta));
    }
    // Snap so that e.g. 0.1 * 1000 gives 100, not 99.
    let exact = delta * n as f64;
    let nearest = exact.round();
    let d = if (exact - nearest).abs() < 1e-9 * exact.max(1.0) {
        nearest
    } else {
        exact.floor()
    };
    Ok(d as usize)
}

/// The rate budget of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBudget {
    pub n: usize,
    pub d: usize,
    pub r0: f64,
}

impl RateBudget {
    pub fn new(n: usize, delta: f64, r0: f64) -> Result<Self, RateError> {
        Ok(Self {
            n,
            d: reserved_count(delta, n)?,
            r0,
        })
    }

    pub fn delta(&self) -> f64 {
        self.d as f64 / self.n as f64
    }

    pub fn range(&self) -> (f64, f64) {
        achievable_range(self.r0, self.delta()).expect("d < n")
    }
}
