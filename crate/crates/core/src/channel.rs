//! Binary symmetric channel simulation.
//!
//! The flip decision for position `i` is `unit_f64(keyed(seed, i)) < p`, a
//! pure function of `(seed, i)`, so transmissions are reproducible and can be
//! split across threads without changing the result.

use thiserror::Error;

use crate::prng::{keyed, unit_f64};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("crossover probability {0} is outside [0, 0.5)")]
pub struct InvalidCrossover(pub f64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscParams {
    crossover: f64,
    pub seed: u64,
}

impl BscParams {
    pub fn new(crossover: f64, seed: u64) -> Result<Self, InvalidCrossover> {
        if !(0.0..0.5).contains(&crossover) {
            return Err(InvalidCrossover(crossover));
        }
        Ok(Self { crossover, seed })
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }

    /// Whether position `index` is flipped.
    #[inline]
    pub fn flips(&self, index: usize) -> bool {
        unit_f64(keyed(self.seed, index as u64)) < self.crossover
    }
}

/// Sends `bits` through BSC(p).
pub fn bsc_transmit(bits: &[u8], params: &BscParams) -> Vec<u8> {
    bits.iter()
        .enumerate()
        .map(|(i, &b)| b ^ params.flips(i) as u8)
        .collect()
}
