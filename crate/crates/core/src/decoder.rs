//! Belief-propagation syndrome decoding with punctured and shortened
//! symbols.
//!
//! LLRs are `log(P(bit = 0) / P(bit = 1))`. Punctured symbols start at LLR
//! 0; shortened symbols start at `±shortened_llr`, which stands in for an
//! infinite LLR: a symbol whose channel LLR reaches that magnitude is
//! treated as known, always sends `±llr_clamp` and keeps its value in the
//! hard decision. Check node `c` multiplies its outgoing sign by
//! `(-1)^{s_c}` so that the decoder converges to a word with the target
//! syndrome rather than to a codeword.
//!
//! The schedule is flooding: all checks, then all symbols, then a syndrome
//! test on the hard decision.

use std::fmt::Write as _;

use thiserror::Error;

use crate::codes::ParityCheckCode;
use crate::rate_adapt::SymbolRole;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("crossover estimate {0} is outside (0, 0.5)")]
    InvalidCrossover(f64),
    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckRule {
    /// Exact `2 atanh(Π tanh(x/2))`.
    #[default]
    SumProduct,
    /// Sign product times minimum magnitude.
    MinSum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig<F> {
    pub max_iterations: usize,
    /// Bound on every message magnitude.
    pub llr_clamp: F,
    /// Channel LLR magnitude of a shortened (known) symbol.
    pub shortened_llr: F,
    pub check_rule: CheckRule,
    /// Record the unsatisfied-check count after every iteration.
    pub trace: bool,
}

impl<F: Real> Default for DecoderConfig<F> {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            llr_clamp: F::from_f64(32.0).unwrap(),
            shortened_llr: F::from_f64(64.0).unwrap(),
            check_rule: CheckRule::SumProduct,
            trace: false,
        }
    }
}

impl<F: Real> DecoderConfig<F> {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.max_iterations == 0 {
            return Err(DecodeError::InvalidConfig("max_iterations must be at least 1"));
        }
        if !(self.llr_clamp > F::zero()) {
            return Err(DecodeError::InvalidConfig("llr_clamp must be positive"));
        }
        if !(self.shortened_llr >= self.llr_clamp) {
            return Err(DecodeError::InvalidConfig("shortened_llr must be at least llr_clamp"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Converged,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// Hard decision after the last iteration.
    pub word: Vec<u8>,
    pub iterations_used: usize,
    /// Unsatisfied checks after each iteration, when tracing.
    pub trace: Option<Vec<usize>>,
}

impl DecodeOutcome {
    pub fn converged(&self) -> bool {
        self.status == DecodeStatus::Converged
    }

    pub fn trace_csv(&self) -> Option<String> {
        self.trace.as_ref().map(|t| {
            let mut out = String::from("iteration,unsatisfied_checks\n");
            for (i, u) in t.iter().enumerate() {
                let _ = writeln!(out, "{},{u}", i + 1);
            }
            out
        })
    }
}

/// Channel LLRs for a frame: `±log((1-p*)/p*)` at payload positions, 0 at
/// punctured positions and `±shortened_llr` at shortened positions.
pub fn init_llrs<F: Real>(
    roles: &[SymbolRole],
    p_star: F,
    received: &[u8],
    config: &DecoderConfig<F>,
) -> Result<Vec<F>, DecodeError> {
    if !(p_star > F::zero() && p_star < F::from_f64(0.5).unwrap()) {
        return Err(DecodeError::InvalidCrossover(p_star.lossy_f64()));
    }
    if roles.len() != received.len() {
        return Err(DecodeError::LengthMismatch {
            what: "received frame",
            expected: roles.len(),
            actual: received.len(),
        });
    }
    let magnitude = ((F::one() - p_star) / p_star).ln();
    let signed = |bit: u8, mag: F| if bit == 0 { mag } else { -mag };
    Ok(roles
        .iter()
        .zip(received)
        .map(|(role, &bit)| match *role {
            SymbolRole::Payload => signed(bit, magnitude),
            SymbolRole::Punctured => F::zero(),
            SymbolRole::Shortened(v) => signed(v, config.shortened_llr),
        })
        .collect())
}

#[inline]
fn clamp<F: Real>(x: F, bound: F) -> F {
    if x > bound {
        bound
    } else if x < -bound {
        -bound
    } else {
        x
    }
}

#[inline]
fn hard<F: Real>(x: F) -> u8 {
    (x < F::zero()) as u8
}

#[inline]
fn tanh_half<F: Real>(x: F) -> F {
    let e = (-x.abs()).exp();
    let t = (F::one() - e) / (F::one() + e);
    if x < F::zero() {
        -t
    } else {
        t
    }
}

fn update_check_sum_product<F: Real>(v2c: &[F], c2v: &mut [F], flip: bool, bound: F) {
    let one = F::one();
    // c2v holds prefix products of tanh(x/2) during the forward pass.
    let mut acc = one;
    for (out, &x) in c2v.iter_mut().zip(v2c) {
        *out = acc;
        acc = acc * tanh_half(x);
    }
    let mut suffix = one;
    for (out, &x) in c2v.iter_mut().zip(v2c).rev() {
        let prod = *out * suffix;
        suffix = suffix * tanh_half(x);
        let msg = if prod >= one {
            bound
        } else if prod <= -one {
            -bound
        } else {
            clamp(((one + prod) / (one - prod)).ln(), bound)
        };
        *out = if flip { -msg } else { msg };
    }
}

fn update_check_min_sum<F: Real>(v2c: &[F], c2v: &mut [F], flip: bool) {
    let mut negative = flip;
    let (mut min1, mut min2, mut argmin) = (F::infinity(), F::infinity(), 0);
    for (i, &x) in v2c.iter().enumerate() {
        negative ^= x < F::zero();
        let a = x.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            argmin = i;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (i, &x) in v2c.iter().enumerate() {
        let mag = if i == argmin { min2 } else { min1 };
        let neg = negative ^ (x < F::zero());
        c2v[i] = if neg { -mag } else { mag };
    }
}

/// Decodes toward a word with syndrome `target_syndrome`, starting from
/// channel LLRs `llrs`.
pub fn bp_decode<F: Real>(
    code: &ParityCheckCode,
    llrs: &[F],
    target_syndrome: &[u8],
    config: &DecoderConfig<F>,
) -> Result<DecodeOutcome, DecodeError> {
    config.validate()?;
    let n = code.n();
    let m = code.m();
    if llrs.len() != n {
        return Err(DecodeError::LengthMismatch {
            what: "llrs",
            expected: n,
            actual: llrs.len(),
        });
    }
    if target_syndrome.len() != m {
        return Err(DecodeError::LengthMismatch {
            what: "syndrome",
            expected: m,
            actual: target_syndrome.len(),
        });
    }

    let bound = config.llr_clamp;
    let known: Vec<bool> = llrs.iter().map(|l| l.abs() >= config.shortened_llr).collect();
    let mut v2c = vec![F::zero(); code.edge_count()];
    let mut c2v = vec![F::zero(); code.edge_count()];
    for v in 0..n {
        let init = clamp(llrs[v], bound);
        for &e in code.symbol_edges(v) {
            v2c[e] = init;
        }
    }
    let mut word: Vec<u8> = llrs.iter().map(|&l| hard(l)).collect();
    let mut trace = config.trace.then(Vec::new);

    for iteration in 1..=config.max_iterations {
        for c in 0..m {
            let r = code.check_edge_range(c);
            let flip = target_syndrome[c] & 1 == 1;
            match config.check_rule {
                CheckRule::SumProduct => {
                    update_check_sum_product(&v2c[r.clone()], &mut c2v[r], flip, bound)
                }
                CheckRule::MinSum => update_check_min_sum(&v2c[r.clone()], &mut c2v[r], flip),
            }
        }
        for v in 0..n {
            let edges = code.symbol_edges(v);
            if known[v] {
                let out = if llrs[v] < F::zero() { -bound } else { bound };
                for &e in edges {
                    v2c[e] = out;
                }
                continue;
            }
            let total = edges.iter().fold(llrs[v], |acc, &e| acc + c2v[e]);
            for &e in edges {
                v2c[e] = clamp(total - c2v[e], bound);
            }
            word[v] = hard(total);
        }
        if let Some(t) = trace.as_mut() {
            t.push(code.unsatisfied(&word, target_syndrome));
        }
        if code.satisfies(&word, target_syndrome) {
            return Ok(DecodeOutcome {
                status: DecodeStatus::Converged,
                word,
                iterations_used: iteration,
                trace,
            });
        }
    }

    Ok(DecodeOutcome {
        status: DecodeStatus::Exhausted,
        word,
        iterations_used: config.max_iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc_transmit, BscParams};
    use crate::codes::{degree_sequence, peg_construct, DegreeDistribution};
    use crate::prng::SplitMix64;
    use crate::rate_adapt::{assemble_frame, build_layout};

    fn regular_code(n: usize, seed: u64) -> ParityCheckCode {
        let d = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        peg_construct(&degree_sequence(&d, n).unwrap(), seed).unwrap()
    }

    #[test]
    fn init_llr_values() {
        let cfg = DecoderConfig::<f64>::default();
        let roles = [
            SymbolRole::Payload,
            SymbolRole::Payload,
            SymbolRole::Punctured,
            SymbolRole::Shortened(0),
            SymbolRole::Shortened(1),
        ];
        let l = init_llrs(&roles, 0.1, &[0, 1, 1, 1, 0], &cfg).unwrap();
        assert!((l[0] - 9f64.ln()).abs() < 1e-12);
        assert!((l[0] - 2.197).abs() < 1e-3);
        assert!((l[1] + 9f64.ln()).abs() < 1e-12);
        assert_eq!(l[2], 0.0);
        assert_eq!(l[3], 64.0);
        assert_eq!(l[4], -64.0);
        assert!(init_llrs(&roles, 0.5, &[0; 5], &cfg).is_err());
        assert!(init_llrs(&roles, 0.1, &[0; 4], &cfg).is_err());
    }

    #[test]
    fn noiseless_frame_converges_immediately() {
        let code = regular_code(400, 1);
        let x = SplitMix64::new(8).bits(400);
        let s = code.syndrome(&x).unwrap();
        let llrs = init_llrs(&vec![SymbolRole::Payload; 400], 1e-6, &x, &DecoderConfig::default()).unwrap();
        let out = bp_decode(&code, &llrs, &s, &DecoderConfig::default()).unwrap();
        assert!(out.converged());
        assert!(out.iterations_used <= 2);
        assert_eq!(out.word, x);
    }

    #[test]
    fn all_punctured_frame_is_a_fixed_point() {
        let code = regular_code(120, 2);
        let x = SplitMix64::new(1).bits(120);
        let s = code.syndrome(&x).unwrap();
        let cfg = DecoderConfig {
            max_iterations: 25,
            ..Default::default()
        };
        let out = bp_decode(&code, &vec![0.0f64; 120], &s, &cfg).unwrap();
        assert_eq!(out.status, DecodeStatus::Exhausted);
        assert_eq!(out.iterations_used, 25);
    }

    #[test]
    fn corrects_noise_with_puncturing_and_shortening() {
        let n = 2000;
        let code = regular_code(n, 3);
        let layout = build_layout(11, n, 200, 100).unwrap();
        let cfg = DecoderConfig::<f64>::default();
        for trial in 0..5u64 {
            let x = SplitMix64::new(100 + trial).bits(layout.payload_len());
            let fill = SplitMix64::new(200 + trial).bits(layout.punctured());
            let alice = assemble_frame(&x, &layout, &fill).unwrap();
            let s = code.syndrome(&alice).unwrap();
            let y = bsc_transmit(&x, &BscParams::new(0.03, trial).unwrap());
            let bob = assemble_frame(&y, &layout, &vec![0; layout.punctured()]).unwrap();
            let llrs = init_llrs(&layout.roles(), 0.03, &bob, &cfg).unwrap();
            let out = bp_decode(&code, &llrs, &s, &cfg).unwrap();
            assert!(out.converged());
            assert_eq!(code.syndrome(&out.word).unwrap(), s);
            assert_eq!(out.word, alice);
            for (&i, &v) in layout.shortened_positions.iter().zip(&layout.shortened_values) {
                assert_eq!(out.word[i], v);
            }
        }
    }

    #[test]
    fn min_sum_and_f32_also_decode() {
        let code = regular_code(1000, 4);
        let x = SplitMix64::new(2).bits(1000);
        let s = code.syndrome(&x).unwrap();
        let y = bsc_transmit(&x, &BscParams::new(0.02, 5).unwrap());
        let roles = vec![SymbolRole::Payload; 1000];
        let ms = DecoderConfig::<f64> {
            check_rule: CheckRule::MinSum,
            ..Default::default()
        };
        let out = bp_decode(&code, &init_llrs(&roles, 0.02, &y, &ms).unwrap(), &s, &ms).unwrap();
        assert_eq!(out.word, x);
        let cfg32 = DecoderConfig::<f32>::default();
        let out = bp_decode(&code, &init_llrs(&roles, 0.02f32, &y, &cfg32).unwrap(), &s, &cfg32).unwrap();
        assert_eq!(out.word, x);
    }

    #[test]
    fn trace_records_every_iteration() {
        let code = regular_code(300, 6);
        let x = SplitMix64::new(3).bits(300);
        let s = code.syndrome(&x).unwrap();
        let y = bsc_transmit(&x, &BscParams::new(0.02, 1).unwrap());
        let cfg = DecoderConfig::<f64> {
            trace: true,
            ..Default::default()
        };
        let out = bp_decode(&code, &init_llrs(&vec![SymbolRole::Payload; 300], 0.02, &y, &cfg).unwrap(), &s, &cfg).unwrap();
        let trace = out.trace.as_ref().unwrap();
        assert_eq!(trace.len(), out.iterations_used);
        if out.converged() {
            assert_eq!(*trace.last().unwrap(), 0);
        }
        assert!(out.trace_csv().unwrap().starts_with("iteration,unsatisfied_checks\n1,"));
    }

    #[test]
    fn rejects_bad_dimensions_and_config() {
        let code = regular_code(60, 1);
        let cfg = DecoderConfig::<f64>::default();
        assert!(bp_decode(&code, &[0.0; 59], &[0; 30], &cfg).is_err());
        assert!(bp_decode(&code, &[0.0; 60], &[0; 29], &cfg).is_err());
        let bad = DecoderConfig::<f64> {
            shortened_llr: 1.0,
            ..Default::default()
        };
        assert!(bp_decode(&code, &[0.0; 60], &[0; 30], &bad).is_err());
    }
}
