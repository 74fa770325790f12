//! Discretized density evolution for punctured and shortened ensembles.
//!
//! Message densities live on the grid `{iΔ : -N <= i <= N}`, `N = S/Δ`,
//! plus a point mass at `+∞` for shortened symbols. The channel seen by the
//! decoder is a mixture: BSC(p) with probability `1 - δ`, an erasure
//! (LLR 0) with probability `π` and a perfectly known bit with probability
//! `σ`.
//!
//! The variable side is an ordinary convolution, done with FFTs. The check
//! side uses the quantized two-input rule
//! `Q(2 atanh(tanh(a/2) tanh(b/2)))` on magnitudes, with signs carried by
//! the sum and difference of the positive and negative halves. Once `a - b`
//! exceeds `ln(2/Δ)` the rule rounds to `b` exactly, so only a band of
//! `W ≈ ln(2/Δ)/Δ` bins above the diagonal is tabulated and the rest is
//! handled with suffix sums. The result equals the full table.

use std::fmt::Write as _;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use thiserror::Error;

use crate::codes::DegreeDistribution;
use crate::rate_adapt::{binary_entropy, split_ratios, RateError};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeError {
    #[error("crossover probability {0} is outside (0, 0.5)")]
    InvalidCrossover(f64),
    #[error("invalid channel mixture: pi = {pi}, sigma = {sigma}")]
    InvalidMixture { pi: f64, sigma: f64 },
    #[error("channel LLR {llr} does not fit the support [-{support}, {support}]")]
    OutsideSupport { llr: f64, support: f64 },
    #[error("invalid density evolution configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("density has {actual} bins, expected {expected}")]
    GridMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Scalars density evolution runs on.
pub trait DeReal: Real + FftNum {}
impl<F: Real + FftNum> DeReal for F {}

fn cst<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("constant representable")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig<F> {
    /// Quantization step Δ.
    pub bin_width: F,
    /// Half-width S of the finite support.
    pub support: F,
    pub max_iterations: usize,
    /// Error probability below which the ensemble counts as decoding.
    pub target_error: F,
    /// Give up once the error probability has not dropped by the factor
    /// `1 - stall_ratio` over `stall_window` iterations.
    pub stall_window: usize,
    pub stall_ratio: F,
}

impl<F: Real> Default for DeConfig<F> {
    fn default() -> Self {
        Self {
            bin_width: cst(0.01),
            support: cst(30.0),
            max_iterations: 2000,
            target_error: cst(1e-8),
            stall_window: 25,
            stall_ratio: cst(1e-6),
        }
    }
}

impl<F: Real> DeConfig<F> {
    pub fn with_bin_width(self, bin_width: F) -> Self {
        Self { bin_width, ..self }
    }

    /// Number of positive bins `N`.
    pub fn half_bins(&self) -> usize {
        (self.support / self.bin_width).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), DeError> {
        if !(self.bin_width > F::zero()) || !(self.support > self.bin_width) {
            return Err(DeError::InvalidConfig("need 0 < bin_width < support"));
        }
        if self.half_bins() > u32::MAX as usize / 2 {
            return Err(DeError::InvalidConfig("too many bins"));
        }
        if self.max_iterations == 0 || self.stall_window == 0 {
            return Err(DeError::InvalidConfig("iteration limits must be positive"));
        }
        if !(self.target_error > F::zero()) {
            return Err(DeError::InvalidConfig("target_error must be positive"));
        }
        Ok(())
    }
}

/// The mixture channel: BSC(p) w.p. `1 - δ`, erasure w.p. `π`, known bit
/// w.p. `σ`, with `δ = π + σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleChannel<F> {
    pub p: F,
    pub delta: F,
    pub pi: F,
    pub sigma: F,
}

impl<F: Real> EnsembleChannel<F> {
    pub fn new(p: F, pi: F, sigma: F) -> Result<Self, DeError> {
        if !(p > F::zero() && p < cst(0.5)) {
            return Err(DeError::InvalidCrossover(p.lossy_f64()));
        }
        let delta = pi + sigma;
        if !(pi >= F::zero() && sigma >= F::zero() && delta <= F::one()) {
            return Err(DeError::InvalidMixture {
                pi: pi.lossy_f64(),
                sigma: sigma.lossy_f64(),
            });
        }
        Ok(Self { p, delta, pi, sigma })
    }

    /// Plain BSC(p).
    pub fn bsc(p: F) -> Result<Self, DeError> {
        Self::new(p, F::zero(), F::zero())
    }

    /// The mixture that moves a rate-`r0` ensemble to `rate` with reserved
    /// fraction `delta`.
    pub fn for_rate(p: F, r0: F, rate: F, delta: F) -> Result<Self, DeError> {
        let (pi, sigma) = split_ratios(r0, rate, delta)?;
        Self::new(p, pi, sigma)
    }

    pub fn with_crossover(self, p: F) -> Result<Self, DeError> {
        Self::new(p, self.pi, self.sigma)
    }
}

/// LLR probability mass function on `{iΔ : -N <= i <= N}` plus a mass at
/// `+∞`. `masses[N + i]` is the mass of `iΔ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDensity<F> {
    pub bin_width: F,
    pub masses: Vec<F>,
    pub plus_inf: F,
}

impl<F: Real> QuantizedDensity<F> {
    /// All mass on one finite bin.
    pub fn point(bin_width: F, half_bins: usize, index: i64) -> Self {
        let mut masses = vec![F::zero(); 2 * half_bins + 1];
        masses[(index + half_bins as i64) as usize] = F::one();
        Self {
            bin_width,
            masses,
            plus_inf: F::zero(),
        }
    }

    /// All mass at `+∞`.
    pub fn known(bin_width: F, half_bins: usize) -> Self {
        Self {
            bin_width,
            masses: vec![F::zero(); 2 * half_bins + 1],
            plus_inf: F::one(),
        }
    }

    pub fn half_bins(&self) -> usize {
        self.masses.len() / 2
    }

    pub fn zero_mass(&self) -> F {
        self.masses[self.half_bins()]
    }

    pub fn total_mass(&self) -> F {
        self.masses.iter().fold(self.plus_inf, |acc, &m| acc + m)
    }

    /// Mass on negative bins plus half the zero bin.
    pub fn error_probability(&self) -> F {
        let n = self.half_bins();
        let negative = self.masses[..n].iter().fold(F::zero(), |acc, &m| acc + m);
        negative + self.masses[n] / cst(2.0)
    }

    /// `Σ mass · e^{-x/2}` over the density, `+∞` contributing nothing.
    pub fn bhattacharyya(&self) -> F {
        let n = self.half_bins() as i64;
        let half = self.bin_width / cst(2.0);
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > F::zero())
            .fold(F::zero(), |acc, (i, &m)| {
                let x = F::from_i64(i as i64 - n).unwrap();
                acc + m * (-(x * half)).exp()
            })
    }

    /// Rescales to unit total mass. Keeps round-off from compounding over
    /// many iterations.
    pub fn normalize(&mut self) {
        let total = self.total_mass();
        if total > F::zero() {
            let inv = F::one() / total;
            for m in &mut self.masses {
                *m = *m * inv;
            }
            self.plus_inf = self.plus_inf * inv;
        }
    }

    /// `llr,mass` rows for the non-zero bins, `inf` last.
    pub fn to_csv(&self) -> String {
        let n = self.half_bins() as i64;
        let mut out = String::from("llr,mass\n");
        for (i, m) in self.masses.iter().enumerate() {
            if *m > F::zero() {
                let x = F::from_i64(i as i64 - n).unwrap() * self.bin_width;
                let _ = writeln!(out, "{x},{m}");
            }
        }
        let _ = writeln!(out, "inf,{}", self.plus_inf);
        out
    }
}

/// Error probability of a density.
pub fn error_probability<F: Real>(density: &QuantizedDensity<F>) -> F {
    density.error_probability()
}

/// Channel LLR density: `(1-δ)(1-p)` at `+L`, `(1-δ)p` at `-L` with
/// `L = ln((1-p)/p)` rounded to the grid, `π` at zero and `σ` at `+∞`.
pub fn initial_density<F: Real>(
    ch: &EnsembleChannel<F>,
    bin_width: F,
    support: F,
) -> Result<QuantizedDensity<F>, DeError> {
    let cfg = DeConfig {
        bin_width,
        support,
        ..DeConfig::default()
    };
    cfg.validate()?;
    let n = cfg.half_bins();
    let llr = ((F::one() - ch.p) / ch.p).ln();
    let k = (llr / bin_width).round().to_usize().unwrap_or(usize::MAX);
    if k > n {
        return Err(DeError::OutsideSupport {
            llr: llr.lossy_f64(),
            support: support.lossy_f64(),
        });
    }
    let bsc = F::one() - ch.delta;
    let mut masses = vec![F::zero(); 2 * n + 1];
    masses[n + k] = bsc * (F::one() - ch.p);
    masses[n - k] = masses[n - k] + bsc * ch.p;
    masses[n] = masses[n] + ch.pi;
    Ok(QuantizedDensity {
        bin_width,
        masses,
        plus_inf: ch.sigma,
    })
}

/// Magnitude form of a density: `a[k] = P(kΔ) + P(-kΔ)`,
/// `b[k] = P(kΔ) - P(-kΔ)`, `a[0]` the zero mass.
#[derive(Debug, Clone)]
struct Magnitudes<F> {
    a: Vec<F>,
    b: Vec<F>,
    inf: F,
}

impl<F: Real> Magnitudes<F> {
    fn from_density(d: &QuantizedDensity<F>) -> Self {
        let n = d.half_bins();
        let mut a = vec![F::zero(); n + 1];
        let mut b = vec![F::zero(); n + 1];
        a[0] = d.masses[n];
        for k in 1..=n {
            let (pos, neg) = (d.masses[n + k], d.masses[n - k]);
            a[k] = pos + neg;
            b[k] = pos - neg;
        }
        Self { a, b, inf: d.plus_inf }
    }

    fn to_density(&self, bin_width: F) -> QuantizedDensity<F> {
        let n = self.a.len() - 1;
        let half = cst::<F>(0.5);
        let mut masses = vec![F::zero(); 2 * n + 1];
        masses[n] = self.a[0].max(F::zero());
        for k in 1..=n {
            masses[n + k] = ((self.a[k] + self.b[k]) * half).max(F::zero());
            masses[n - k] = ((self.a[k] - self.b[k]) * half).max(F::zero());
        }
        QuantizedDensity {
            bin_width,
            masses,
            plus_inf: self.inf,
        }
    }

    fn total(&self) -> F {
        self.a.iter().fold(self.inf, |acc, &x| acc + x)
    }
}

/// Banded table of the quantized check rule.
struct BoxplusTable {
    n: usize,
    width: usize,
    /// `out[(j - 1) * width + o]` is the output bin of magnitudes
    /// `(j + o, j)`.
    out: Vec<u32>,
}

impl BoxplusTable {
    fn new<F: Real>(bin_width: F, n: usize) -> Self {
        let delta = bin_width.lossy_f64();
        let width = ((2.0 / delta).ln() / delta).ceil() as usize + 1;
        let mut out = Vec::with_capacity(n * width);
        for j in 1..=n {
            let b = j as f64 * delta;
            for o in 0..width {
                let a = (j + o) as f64 * delta;
                // 2 atanh(tanh(a/2) tanh(b/2)) for a >= b, without cancellation.
                let r = b + (-(a + b)).exp().ln_1p() - (-(a - b)).exp().ln_1p();
                let bin = ((r / delta).round() as usize).min(j);
                out.push(bin as u32);
            }
        }
        Self { n, width, out }
    }

    fn combine<F: Real>(&self, x: &Magnitudes<F>, y: &Magnitudes<F>) -> Magnitudes<F> {
        let n = self.n;
        let w = self.width;
        let mut a = vec![F::zero(); n + 1];
        let mut b = vec![F::zero(); n + 1];
        let suffix = |v: &[F]| {
            let mut s = vec![F::zero(); n + 2];
            for k in (1..=n).rev() {
                s[k] = s[k + 1] + v[k];
            }
            s
        };
        let (xsa, xsb, ysa, ysb) = (suffix(&x.a), suffix(&x.b), suffix(&y.a), suffix(&y.b));

        for j in 1..=n {
            let (xa, xb, ya, yb) = (x.a[j], x.b[j], y.a[j], y.b[j]);
            if xa == F::zero() && ya == F::zero() {
                continue;
            }
            let row = &self.out[(j - 1) * w..j * w];
            let t = row[0] as usize;
            a[t] = a[t] + xa * ya;
            b[t] = b[t] + xb * yb;
            let hi = n.min(j + w - 1);
            for big in j + 1..=hi {
                let t = row[big - j] as usize;
                a[t] = a[t] + x.a[big] * ya + y.a[big] * xa;
                b[t] = b[t] + x.b[big] * yb + y.b[big] * xb;
            }
            if j + w <= n {
                a[j] = a[j] + xsa[j + w] * ya + ysa[j + w] * xa;
                b[j] = b[j] + xsb[j + w] * yb + ysb[j + w] * xb;
            }
        }

        // +∞ is the identity, zero is absorbing.
        for k in 1..=n {
            a[k] = a[k] + x.inf * y.a[k] + y.inf * x.a[k];
            b[k] = b[k] + x.inf * y.b[k] + y.inf * x.b[k];
        }
        let (zx, zy) = (x.a[0], y.a[0]);
        a[0] = a[0] + zx * y.total() + zy * x.total() - zx * zy;
        b[0] = F::zero();
        Magnitudes {
            a,
            b,
            inf: x.inf * y.inf,
        }
    }
}

/// Reusable density evolution state for one ensemble and grid.
pub struct DensityEvolution<F: DeReal> {
    config: DeConfig<F>,
    n: usize,
    lambda: Vec<(usize, F)>,
    rho: Vec<(usize, F)>,
    table: BoxplusTable,
    fft_len: usize,
    forward: Arc<dyn Fft<F>>,
    inverse: Arc<dyn Fft<F>>,
}

/// Result of running density evolution on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DeRun<F> {
    pub converged: bool,
    pub iterations: usize,
    pub final_error: F,
    /// Error probability of the check-to-symbol density per iteration.
    pub error_trace: Vec<F>,
}

impl<F: DeReal> DensityEvolution<F> {
    pub fn new<T: Scalar>(dist: &DegreeDistribution<T>, config: DeConfig<F>) -> Result<Self, DeError> {
        config.validate()?;
        let n = config.half_bins();
        let conv = |m: &std::collections::BTreeMap<usize, T>| {
            m.iter()
                .map(|(&d, &c)| (d, F::from_f64(c.lossy_f64()).unwrap()))
                .collect::<Vec<_>>()
        };
        let lambda = conv(dist.lambda());
        let rho = conv(dist.rho());
        let max_dv = dist.max_symbol_degree();
        let fft_len = (2 * n * max_dv + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            config,
            n,
            lambda,
            rho,
            table: BoxplusTable::new(config.bin_width, n),
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
        })
    }

    pub fn config(&self) -> &DeConfig<F> {
        &self.config
    }

    pub fn initial_density(&self, ch: &EnsembleChannel<F>) -> Result<QuantizedDensity<F>, DeError> {
        initial_density(ch, self.config.bin_width, self.config.support)
    }

    fn check_grid(&self, d: &QuantizedDensity<F>) -> Result<(), DeError> {
        if d.masses.len() != 2 * self.n + 1 {
            return Err(DeError::GridMismatch {
                expected: 2 * self.n + 1,
                actual: d.masses.len(),
            });
        }
        Ok(())
    }

    fn spectrum(&self, d: &QuantizedDensity<F>) -> Vec<Complex<F>> {
        let len = self.fft_len;
        let n = self.n;
        let mut buf = vec![Complex::new(F::zero(), F::zero()); len];
        for (i, &m) in d.masses.iter().enumerate() {
            // Value i - n stored at (i - n) mod len.
            buf[(i + len - n) % len].re = m;
        }
        self.forward.process(&mut buf);
        buf
    }

    /// `p0 ⊛ Σ λ_i p_u^{⊛(i-1)}`, saturated to the support.
    fn variable_side(&self, p0_hat: &[Complex<F>], p0: &QuantizedDensity<F>, pu: &QuantizedDensity<F>) -> QuantizedDensity<F> {
        let len = self.fft_len;
        let n = self.n;
        let pu_hat = self.spectrum(pu);
        let finite0 = p0.total_mass() - p0.plus_inf;
        let finite_u = pu.total_mass() - pu.plus_inf;
        let total_u = pu.total_mass();

        let mut finite_total = F::zero();
        let mut total = F::zero();
        let mut buf = vec![Complex::new(F::zero(), F::zero()); len];
        for &(deg, coef) in &self.lambda {
            let e = (deg - 1) as i32;
            finite_total = finite_total + coef * finite0 * finite_u.powi(e);
            total = total + coef * p0.total_mass() * total_u.powi(e);
            for (out, &u) in buf.iter_mut().zip(&pu_hat) {
                *out = *out + pow_complex(u, deg - 1).scale(coef);
            }
        }
        for (out, &z) in buf.iter_mut().zip(p0_hat) {
            *out = *out * z;
        }
        self.inverse.process(&mut buf);

        let scale = F::one() / F::from_usize(len).unwrap();
        let mut masses = vec![F::zero(); 2 * n + 1];
        let mut clipped = F::zero();
        for (idx, c) in buf.iter().enumerate() {
            let m = c.re * scale;
            if !(m > F::zero()) {
                continue;
            }
            let v = if idx <= len / 2 { idx as i64 } else { idx as i64 - len as i64 };
            let bin = v.clamp(-(n as i64), n as i64);
            if bin != v {
                clipped = clipped + m;
            }
            let slot = (bin + n as i64) as usize;
            masses[slot] = masses[slot] + m;
        }
        if clipped > F::zero() {
            log::trace!("density evolution saturated {clipped} mass at the support edge");
        }
        // Undo FFT round-off so that the finite part has its exact total.
        let sum = masses.iter().fold(F::zero(), |acc, &m| acc + m);
        if sum > F::zero() {
            let fix = finite_total / sum;
            for m in &mut masses {
                *m = *m * fix;
            }
        }
        let mut out = QuantizedDensity {
            bin_width: self.config.bin_width,
            masses,
            plus_inf: (total - finite_total).max(F::zero()),
        };
        out.normalize();
        out
    }

    /// `Σ ρ_j q^{⊞(j-1)}`.
    fn check_side(&self, q: &QuantizedDensity<F>) -> QuantizedDensity<F> {
        let base = Magnitudes::from_density(q);
        let max_pow = self.rho.iter().map(|&(j, _)| j - 1).max().unwrap_or(0);
        let mut squares = vec![base];
        while (1usize << squares.len()) <= max_pow {
            let last = squares.last().unwrap();
            squares.push(self.table.combine(last, last));
        }
        let n = self.n;
        let mut mix = Magnitudes {
            a: vec![F::zero(); n + 1],
            b: vec![F::zero(); n + 1],
            inf: F::zero(),
        };
        for &(j, coef) in &self.rho {
            let mut e = j - 1;
            let mut acc: Option<Magnitudes<F>> = None;
            let mut bit = 0;
            while e > 0 {
                if e & 1 == 1 {
                    acc = Some(match acc {
                        None => squares[bit].clone(),
                        Some(prev) => self.table.combine(&prev, &squares[bit]),
                    });
                }
                e >>= 1;
                bit += 1;
            }
            let power = acc.unwrap_or_else(|| Magnitudes {
                a: vec![F::zero(); n + 1],
                b: vec![F::zero(); n + 1],
                inf: F::one(),
            });
            for k in 0..=n {
                mix.a[k] = mix.a[k] + coef * power.a[k];
                mix.b[k] = mix.b[k] + coef * power.b[k];
            }
            mix.inf = mix.inf + coef * power.inf;
        }
        let mut out = mix.to_density(self.config.bin_width);
        out.normalize();
        out
    }

    /// One round: check-to-symbol density `pu` to the next one.
    pub fn iterate(&self, p0: &QuantizedDensity<F>, pu: &QuantizedDensity<F>) -> Result<QuantizedDensity<F>, DeError> {
        self.check_grid(p0)?;
        self.check_grid(pu)?;
        let p0_hat = self.spectrum(p0);
        Ok(self.check_side(&self.variable_side(&p0_hat, p0, pu)))
    }

    /// Symbol-to-check density `p0 ⊛ λ(pu)`.
    pub fn symbol_side(&self, p0: &QuantizedDensity<F>, pu: &QuantizedDensity<F>) -> Result<QuantizedDensity<F>, DeError> {
        self.check_grid(p0)?;
        self.check_grid(pu)?;
        Ok(self.variable_side(&self.spectrum(p0), p0, pu))
    }

    /// Runs from an all-erasure check-to-symbol density until the error
    /// probability drops below the target, stalls, or the cap is hit.
    pub fn run(&self, ch: &EnsembleChannel<F>) -> Result<DeRun<F>, DeError> {
        let cfg = &self.config;
        let p0 = self.initial_density(ch)?;
        let p0_hat = self.spectrum(&p0);
        let mut pu = QuantizedDensity::point(cfg.bin_width, self.n, 0);
        let mut trace = Vec::new();
        let keep = F::one() - cfg.stall_ratio;
        for it in 1..=cfg.max_iterations {
            pu = self.check_side(&self.variable_side(&p0_hat, &p0, &pu));
            let pe = pu.error_probability();
            trace.push(pe);
            if pe < cfg.target_error {
                return Ok(DeRun {
                    converged: true,
                    iterations: it,
                    final_error: pe,
                    error_trace: trace,
                });
            }
            if it > cfg.stall_window {
                let before = trace[it - 1 - cfg.stall_window];
                if pe > before * keep {
                    break;
                }
            }
        }
        Ok(DeRun {
            converged: false,
            iterations: trace.len(),
            final_error: *trace.last().expect("at least one iteration"),
            error_trace: trace,
        })
    }

    pub fn converges(&self, ch: &EnsembleChannel<F>) -> Result<bool, DeError> {
        Ok(self.run(ch)?.converged)
    }

    /// Largest crossover probability, to within `tol`, for which density
    /// evolution converges with the mixture `(π, σ)` of `template`.
    ///
    /// Bisects between 0 and the capacity limit of the effective rate and
    /// returns the last point known to converge.
    pub fn threshold_for(&self, template: &EnsembleChannel<F>, rate: F, tol: F) -> Result<F, DeError> {
        if !(tol > F::zero()) {
            return Err(DeError::InvalidConfig("tolerance must be positive"));
        }
        let mut lo = F::zero();
        let mut hi = inverse_entropy(F::one() - rate);
        while hi - lo > tol {
            let mid = (lo + hi) / cst(2.0);
            if self.converges(&template.with_crossover(mid)?)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

fn pow_complex<F: DeReal>(z: Complex<F>, e: usize) -> Complex<F> {
    let mut out = Complex::new(F::one(), F::zero());
    for _ in 0..e {
        out = out * z;
    }
    out
}

/// `p` in `[0, 1/2]` with `h(p) = y`, by bisection.
fn inverse_entropy<F: Real>(y: F) -> F {
    if y <= F::zero() {
        return F::zero();
    }
    if y >= F::one() {
        return cst(0.5);
    }
    let (mut lo, mut hi) = (F::zero(), cst::<F>(0.5));
    for _ in 0..60 {
        let mid = (lo + hi) / cst(2.0);
        if binary_entropy(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / cst(2.0)
}

/// One density evolution round for `dist` on channel `ch`.
///
/// Builds the check-rule table on every call; use [`DensityEvolution`] to
/// iterate.
pub fn de_iterate<F: DeReal, T: Scalar>(
    dist: &DegreeDistribution<T>,
    ch: &EnsembleChannel<F>,
    density: &QuantizedDensity<F>,
    config: &DeConfig<F>,
) -> Result<QuantizedDensity<F>, DeError> {
    let de = DensityEvolution::new(dist, *config)?;
    let p0 = de.initial_density(ch)?;
    de.iterate(&p0, density)
}

/// Threshold crossover probability of `dist` at `rate_target` with
/// reserved fraction `delta`, to within `tol`.
pub fn threshold<F: DeReal, T: Scalar>(
    dist: &DegreeDistribution<T>,
    delta: F,
    rate_target: F,
    tol: F,
    config: &DeConfig<F>,
) -> Result<F, DeError> {
    let r0 = F::from_f64(dist.design_rate().lossy_f64()).unwrap();
    let template = EnsembleChannel::for_rate(cst(0.25), r0, rate_target, delta)?;
    DensityEvolution::new(dist, *config)?.threshold_for(&template, rate_target, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport<F> {
    /// `λ_2`.
    pub lambda2: F,
    /// `1 / (e^{-r} ρ'(1))`.
    pub bound: F,
    pub stable: bool,
    /// `e^{-r} = (1-δ) 2√(p(1-p)) + π`.
    pub exp_neg_r: F,
}

/// Stability of the zero-error fixed point: `λ_2 < 1/(e^{-r} ρ'(1))`.
pub fn stability_bound<F: Real, T: Scalar>(dist: &DegreeDistribution<T>, ch: &EnsembleChannel<F>) -> StabilityReport<F> {
    let two = cst::<F>(2.0);
    let exp_neg_r = (F::one() - ch.delta) * two * (ch.p * (F::one() - ch.p)).sqrt() + ch.pi;
    let lambda2 = F::from_f64(dist.lambda2().lossy_f64()).unwrap();
    let rho1 = F::from_f64(dist.rho_prime_at_one().lossy_f64()).unwrap();
    let bound = F::one() / (exp_neg_r * rho1);
    StabilityReport {
        lambda2,
        bound,
        stable: lambda2 < bound,
        exp_neg_r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn coarse() -> DeConfig<f64> {
        DeConfig {
            bin_width: 0.05,
            support: 20.0,
            ..DeConfig::default()
        }
    }

    fn regular36() -> DegreeDistribution<f64> {
        DegreeDistribution::regular(3, 6).unwrap()
    }

    #[test]
    fn initial_density_masses() {
        let ch = EnsembleChannel::new(0.1, 0.0, 0.5).unwrap();
        let d = initial_density(&ch, 0.01, 30.0).unwrap();
        let n = d.half_bins();
        let k = (9f64.ln() / 0.01).round() as usize;
        assert_abs_diff_eq!(d.masses[n + k], 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(d.masses[n - k], 0.05, epsilon = 1e-15);
        assert_eq!(d.plus_inf, 0.5);
        assert_abs_diff_eq!(d.total_mass(), 1.0, epsilon = 1e-12);

        let bsc = initial_density(&EnsembleChannel::bsc(0.1).unwrap(), 0.01, 30.0).unwrap();
        assert_abs_diff_eq!(bsc.error_probability(), 0.1, epsilon = 1e-15);
        assert!(initial_density(&EnsembleChannel::bsc(1e-20).unwrap(), 0.01, 30.0).is_err());
    }

    #[test]
    fn error_probability_conventions() {
        assert_eq!(QuantizedDensity::<f64>::known(0.1, 10).error_probability(), 0.0);
        assert_eq!(QuantizedDensity::<f64>::point(0.1, 10, 0).error_probability(), 0.5);
    }

    /// Full two-input table, no band.
    fn naive_combine(x: &Magnitudes<f64>, y: &Magnitudes<f64>, delta: f64) -> Magnitudes<f64> {
        let n = x.a.len() - 1;
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for i in 1..=n {
            for j in 1..=n {
                let (ta, tb) = ((i as f64 * delta / 2.0).tanh(), (j as f64 * delta / 2.0).tanh());
                let r = 2.0 * (ta * tb).atanh();
                let t = ((r / delta).round() as usize).min(i.min(j));
                a[t] += x.a[i] * y.a[j];
                b[t] += x.b[i] * y.b[j];
            }
        }
        for k in 1..=n {
            a[k] += x.inf * y.a[k] + y.inf * x.a[k];
            b[k] += x.inf * y.b[k] + y.inf * x.b[k];
        }
        a[0] += x.a[0] * y.total() + y.a[0] * x.total() - x.a[0] * y.a[0];
        b[0] = 0.0;
        Magnitudes { a, b, inf: x.inf * y.inf }
    }

    #[test]
    fn banded_rule_matches_full_table() {
        let delta = 0.1;
        let n = 200;
        let table = BoxplusTable::new(delta, n);
        assert!(table.width < n);
        let mut rng = crate::prng::SplitMix64::new(8);
        let mut random_density = || {
            let mut masses: Vec<f64> = (0..2 * n + 1).map(|_| rng.next_f64()).collect();
            let inf = 0.3;
            let s: f64 = masses.iter().sum();
            for m in &mut masses {
                *m *= 0.7 / s;
            }
            Magnitudes::from_density(&QuantizedDensity { bin_width: delta, masses, plus_inf: inf })
        };
        let (x, y) = (random_density(), random_density());
        let fast = table.combine(&x, &y);
        let slow = naive_combine(&x, &y, delta);
        for k in 0..=n {
            assert_abs_diff_eq!(fast.a[k], slow.a[k], epsilon = 1e-14);
            assert_abs_diff_eq!(fast.b[k], slow.b[k], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(fast.total(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn known_density_is_absorbing() {
        let cfg = coarse();
        let de = DensityEvolution::new(&regular36(), cfg).unwrap();
        let ch = EnsembleChannel::bsc(0.05).unwrap();
        let p0 = de.initial_density(&ch).unwrap();
        let inf = QuantizedDensity::known(cfg.bin_width, cfg.half_bins());
        let out = de.iterate(&p0, &inf).unwrap();
        assert_abs_diff_eq!(out.plus_inf, 1.0, epsilon = 1e-12);
        assert_eq!(out.error_probability(), 0.0);
    }

    #[test]
    fn fully_shortened_word_is_error_free() {
        let ch = EnsembleChannel::new(0.1, 0.0, 1.0).unwrap();
        let cfg = coarse();
        let start = QuantizedDensity::point(cfg.bin_width, cfg.half_bins(), 0);
        let out = de_iterate(&regular36(), &ch, &start, &cfg).unwrap();
        assert_eq!(out.error_probability(), 0.0);
    }

    #[test]
    fn first_round_reduces_error_and_conserves_mass() {
        let cfg = coarse();
        let de = DensityEvolution::new(&regular36(), cfg).unwrap();
        let ch = EnsembleChannel::new(0.05, 0.05, 0.05).unwrap();
        let p0 = de.initial_density(&ch).unwrap();
        let mut pu = QuantizedDensity::point(cfg.bin_width, cfg.half_bins(), 0);
        let mut last = pu.error_probability();
        for _ in 0..10 {
            pu = de.iterate(&p0, &pu).unwrap();
            assert_abs_diff_eq!(pu.total_mass(), 1.0, epsilon = 1e-9);
            assert!(pu.masses.iter().all(|&m| m >= 0.0));
            let pe = pu.error_probability();
            assert!(pe < last, "{pe} !< {last}");
            last = pe;
        }
    }

    #[test]
    fn check_power_matches_closed_form_for_bsc() {
        // Starting from erasures, the first round is p0^{⊞5}, whose error
        // probability is (1 - (1-2p)^5)/2 up to quantization.
        let cfg = DeConfig::default();
        let p = 0.05;
        let out = de_iterate(
            &regular36(),
            &EnsembleChannel::bsc(p).unwrap(),
            &QuantizedDensity::point(cfg.bin_width, cfg.half_bins(), 0),
            &cfg,
        )
        .unwrap();
        let exact = (1.0 - (1.0f64 - 2.0 * p).powi(5)) / 2.0;
        assert_abs_diff_eq!(out.error_probability(), exact, epsilon = 1e-9);
    }

    #[test]
    fn converges_well_below_and_fails_well_above() {
        let de = DensityEvolution::new(&regular36(), coarse()).unwrap();
        let good = de.run(&EnsembleChannel::bsc(0.06).unwrap()).unwrap();
        assert!(good.converged);
        // The coarse grid allows quantization wobble in the first rounds.
        assert!(good.error_trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-3)));
        let bad = de.run(&EnsembleChannel::bsc(0.11).unwrap()).unwrap();
        assert!(!bad.converged);
        assert!(bad.iterations < 2000, "stall detection should stop early");
    }

    #[test]
    fn stability_examples() {
        let rho5 = DegreeDistribution::<f64>::new([(2, 0.2), (3, 0.8)], [(6, 1.0)]).unwrap();
        let r = stability_bound(&rho5, &EnsembleChannel::bsc(0.1).unwrap());
        assert_abs_diff_eq!(r.bound, 1.0 / 3.0, epsilon = 1e-12);
        assert!(r.stable);
        let r36 = stability_bound(&regular36(), &EnsembleChannel::bsc(0.3).unwrap());
        assert_eq!(r36.lambda2, 0.0);
        assert!(r36.stable);
        let shortened = stability_bound(&rho5, &EnsembleChannel::new(0.05, 0.0, 0.2).unwrap());
        let punctured = stability_bound(&rho5, &EnsembleChannel::new(0.05, 0.2, 0.0).unwrap());
        assert!(punctured.bound < shortened.bound);
    }

    #[test]
    fn bhattacharyya_of_quantized_channel() {
        let ch = EnsembleChannel::new(0.07, 0.1, 0.2).unwrap();
        let d = initial_density(&ch, 0.01, 30.0).unwrap();
        let closed = stability_bound(&regular36(), &ch).exp_neg_r;
        assert_abs_diff_eq!(d.bhattacharyya(), closed, epsilon = 1e-4);
    }

    #[test]
    fn works_in_single_precision() {
        let cfg = DeConfig::<f32> {
            bin_width: 0.05,
            support: 20.0,
            target_error: 1e-5,
            ..DeConfig::default()
        };
        let de = DensityEvolution::new(&regular36(), cfg).unwrap();
        assert!(de.converges(&EnsembleChannel::bsc(0.05f32).unwrap()).unwrap());
    }
}
