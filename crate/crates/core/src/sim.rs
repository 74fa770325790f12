//! Frame-error-rate simulation of punctured and shortened syndrome decoding.
//!
//! Trial `i` draws its own layout, payload, puncture fill and channel noise
//! from seeds derived from `(seed, i)`. The channel noise of a trial uses
//! the same uniforms at every `p`, so a flip at `p` is also a flip at any
//! larger `p` and frame error rates are coupled across crossover values.

use std::thread;

use thiserror::Error;

use crate::channel::BscParams;
use crate::codes::ParityCheckCode;
use crate::decoder::{bp_decode, init_llrs, DecodeError, DecoderConfig};
use crate::prng::{derive_seed, SplitMix64};
use crate::rate_adapt::{
    assemble_frame, build_layout, disassemble_frame, reserved_count, split_s_p, LayoutError,
    RateError,
};

const TAG_LAYOUT: u64 = 1;
const TAG_PAYLOAD: u64 = 2;
const TAG_FILL: u64 = 3;
const TAG_NOISE: u64 = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("crossover probability {0} is outside (0, 0.5)")]
    InvalidCrossover(f64),
    #[error("invalid simulation parameters: {0}")]
    Invalid(&'static str),
}

/// Decodes frames of one code at one `(rate, δ)` point.
#[derive(Debug, Clone)]
pub struct FrameSimulator<'a> {
    code: &'a ParityCheckCode,
    pub rate: f64,
    pub delta: f64,
    pub reserved: usize,
    pub shortened: usize,
    pub punctured: usize,
    pub decoder: DecoderConfig<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trial {
    pub success: bool,
    pub iterations: usize,
}

/// Trial count and early-stopping rule for one FER estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerSpec {
    pub trials: usize,
    /// Stop as soon as the verdict "failures <= max_failures" is settled.
    pub max_failures: Option<usize>,
    pub seed: u64,
    pub threads: usize,
}

impl FerSpec {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            max_failures: None,
            seed,
            threads: 1,
        }
    }

    /// Largest failure count meeting a frame-error target.
    pub fn with_target(mut self, fer: f64) -> Self {
        self.max_failures = Some((fer * self.trials as f64 + 1e-9).floor() as usize);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FerResult {
    pub trials: usize,
    pub failures: usize,
    /// Trials that would have run without early stopping.
    pub planned: usize,
}

impl FerResult {
    pub fn fer(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    /// Whether the failure count stays within `max_failures`.
    pub fn meets(&self, max_failures: usize) -> bool {
        self.failures <= max_failures
    }
}

impl<'a> FrameSimulator<'a> {
    pub fn new(code: &'a ParityCheckCode, rate: f64, delta: f64, decoder: DecoderConfig<f64>) -> Result<Self, SimError> {
        decoder.validate()?;
        let n = code.n();
        let reserved = reserved_count(delta, n)?;
        let r0 = code.design_dimension() as f64 / n as f64;
        let (shortened, punctured) = split_s_p(r0, rate, reserved, n)?;
        Ok(Self {
            code,
            rate,
            delta,
            reserved,
            shortened,
            punctured,
            decoder,
        })
    }

    pub fn code(&self) -> &ParityCheckCode {
        self.code
    }

    /// One frame at crossover `p`.
    pub fn trial(&self, p: f64, seed: u64, index: u64) -> Result<Trial, SimError> {
        if !(p > 0.0 && p < 0.5) {
            return Err(SimError::InvalidCrossover(p));
        }
        let n = self.code.n();
        let base = derive_seed(seed, index);
        let layout = build_layout(derive_seed(base, TAG_LAYOUT), n, self.reserved, self.shortened)?;
        let x = SplitMix64::new(derive_seed(base, TAG_PAYLOAD)).bits(n - self.reserved);
        let fill = SplitMix64::new(derive_seed(base, TAG_FILL)).bits(self.punctured);
        let channel = BscParams::new(p, derive_seed(base, TAG_NOISE)).map_err(|e| SimError::InvalidCrossover(e.0))?;
        let y = crate::channel::bsc_transmit(&x, &channel);

        let alice = assemble_frame(&x, &layout, &fill)?;
        let syndrome = self.code.syndrome(&alice).expect("frame has length n");
        let bob = assemble_frame(&y, &layout, &vec![0; self.punctured])?;
        let llrs = init_llrs(&layout.roles(), p, &bob, &self.decoder)?;
        let outcome = bp_decode(self.code, &llrs, &syndrome, &self.decoder)?;
        let success = outcome.converged() && disassemble_frame(&outcome.word, &layout)? == x;
        Ok(Trial {
            success,
            iterations: outcome.iterations_used,
        })
    }

    /// Frame error rate over `spec.trials` frames, in trial order. Early
    /// stopping looks only at the ordered prefix, so the result does not
    /// depend on the thread count.
    pub fn frame_error_rate(&self, p: f64, spec: &FerSpec) -> Result<FerResult, SimError> {
        if spec.trials == 0 {
            return Err(SimError::Invalid("at least one trial is needed"));
        }
        let threads = spec.threads.max(1);
        let mut result = FerResult {
            trials: 0,
            failures: 0,
            planned: spec.trials,
        };
        let mut next = 0;
        while next < spec.trials {
            let end = spec.trials.min(next + threads);
            let batch = self.run_batch(p, spec.seed, next, end, threads)?;
            for trial in batch {
                result.trials += 1;
                result.failures += usize::from(!trial.success);
                if let Some(limit) = spec.max_failures {
                    let remaining = spec.trials - result.trials;
                    if result.failures > limit || result.failures + remaining <= limit {
                        return Ok(result);
                    }
                }
            }
            next = end;
        }
        Ok(result)
    }

    fn run_batch(&self, p: f64, seed: u64, start: usize, end: usize, threads: usize) -> Result<Vec<Trial>, SimError> {
        if threads == 1 || end - start == 1 {
            return (start..end).map(|i| self.trial(p, seed, i as u64)).collect();
        }
        thread::scope(|scope| {
            let handles: Vec<_> = (start..end)
                .map(|i| scope.spawn(move || self.trial(p, seed, i as u64)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("trial thread panicked"))
                .collect()
        })
    }
}

/// Grid of crossover probabilities `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossoverGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl CrossoverGrid {
    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn point(&self, i: usize) -> f64 {
        // Round to the step's decimal precision so that CSV output is clean.
        let p = self.lo + i as f64 * self.step;
        (p * 1e9).round() / 1e9
    }
}

/// Largest grid point whose frame error rate meets `spec.max_failures`,
/// found by binary search on the assumption that FER grows with `p`.
pub fn max_correctable(
    sim: &FrameSimulator<'_>,
    grid: &CrossoverGrid,
    spec: &FerSpec,
) -> Result<Option<(f64, FerResult)>, SimError> {
    let limit = spec
        .max_failures
        .ok_or(SimError::Invalid("a frame-error target is required"))?;
    if grid.is_empty() || !(grid.step > 0.0) {
        return Err(SimError::Invalid("empty crossover grid"));
    }
    let probe = |i: usize| -> Result<FerResult, SimError> {
        let p = grid.point(i);
        let r = sim.frame_error_rate(p, spec)?;
        log::debug!("rate {} delta {} p {p}: {}/{} failures", sim.rate, sim.delta, r.failures, r.trials);
        Ok(r)
    };
    let first = probe(0)?;
    if !first.meets(limit) {
        return Ok(None);
    }
    let mut good = (0, first);
    let mut bad = grid.len();
    while bad - good.0 > 1 {
        let mid = (good.0 + bad) / 2;
        let r = probe(mid)?;
        if r.meets(limit) {
            good = (mid, r);
        } else {
            bad = mid;
        }
    }
    Ok(Some((grid.point(good.0), good.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{degree_sequence, peg_construct, DegreeDistribution};

    fn code() -> ParityCheckCode {
        let dist = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        peg_construct(&degree_sequence(&dist, 500).unwrap(), 9).unwrap()
    }

    #[test]
    fn trials_are_reproducible_and_thread_independent() {
        let c = code();
        let sim = FrameSimulator::new(&c, 0.5, 0.1, DecoderConfig { max_iterations: 50, ..DecoderConfig::default() }).unwrap();
        assert_eq!(sim.trial(0.05, 1, 3).unwrap(), sim.trial(0.05, 1, 3).unwrap());
        let spec = FerSpec::new(12, 4);
        let one = sim.frame_error_rate(0.07, &spec).unwrap();
        let three = sim.frame_error_rate(0.07, &spec.with_threads(3)).unwrap();
        assert_eq!(one, three);
        let stop = spec.with_target(0.0);
        assert_eq!(
            sim.frame_error_rate(0.2, &stop).unwrap(),
            sim.frame_error_rate(0.2, &stop.with_threads(4)).unwrap()
        );
    }

    #[test]
    fn early_stop_settles_verdict() {
        let c = code();
        let sim = FrameSimulator::new(&c, 0.5, 0.0, DecoderConfig { max_iterations: 30, ..DecoderConfig::default() }).unwrap();
        let r = sim.frame_error_rate(0.25, &FerSpec::new(100, 1).with_target(0.05)).unwrap();
        assert_eq!(r.failures, 6);
        assert_eq!(r.trials, 6);
        assert!(!r.meets(5));
    }

    #[test]
    fn grid_search_brackets_waterfall() {
        let c = code();
        let sim = FrameSimulator::new(&c, 0.5, 0.0, DecoderConfig { max_iterations: 100, ..DecoderConfig::default() }).unwrap();
        let grid = CrossoverGrid { lo: 0.01, hi: 0.15, step: 0.005 };
        assert_eq!(grid.len(), 29);
        let spec = FerSpec::new(20, 2).with_target(0.1);
        let (p, r) = max_correctable(&sim, &grid, &spec).unwrap().unwrap();
        assert!((0.02..0.09).contains(&p), "{p}");
        assert!(r.meets(2));
        let above = sim.frame_error_rate(p + 0.005, &FerSpec::new(20, 2)).unwrap();
        assert!(above.failures > 2);
        let hopeless = CrossoverGrid { lo: 0.2, hi: 0.3, step: 0.01 };
        assert!(max_correctable(&sim, &hopeless, &spec).unwrap().is_none());
    }
}
