//! The synchronized position function mapping a payload into a frame.
//!
//! Layout generation from `(seed, n, d, s)`, using the stream
//! [`SplitMix64`] keyed by `seed`:
//!
//! 1. the reserved positions are the first `d` entries of a Fisher-Yates
//!    shuffle of `0..n` ([`SplitMix64::partial_shuffle`]);
//! 2. the first `s` reserved positions, in draw order, are shortened and
//!    the remaining `d - s` are punctured;
//! 3. the shortened values are the next `s` bits of the same stream;
//! 4. payload positions are the unreserved positions in ascending order.
//!
//! The reserved set does not depend on `s`, and changing `s` only moves the
//! shortened/punctured boundary.

use std::fmt::Write as _;

use thiserror::Error;

use crate::prng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout needs s <= d <= n, got n = {n}, d = {d}, s = {s}")]
    InvalidCounts { n: usize, d: usize, s: usize },
    #[error("{what}: expected {expected} bits, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
}

/// Role of one frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolRole {
    /// Carries a payload bit that went through the channel.
    Payload,
    /// Random filler unknown to the decoder.
    Punctured,
    /// Value known to both parties.
    Shortened(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    pub n: usize,
    pub seed: u64,
    /// Ascending.
    pub payload_positions: Vec<usize>,
    /// In draw order.
    pub punctured_positions: Vec<usize>,
    /// In draw order, parallel to `shortened_values`.
    pub shortened_positions: Vec<usize>,
    pub shortened_values: Vec<u8>,
}

/// Derives the frame layout both parties share.
pub fn build_layout(seed: u64, n: usize, d: usize, s: usize) -> Result<FrameLayout, LayoutError> {
    if s > d || d > n {
        return Err(LayoutError::InvalidCounts { n, d, s });
    }
    let mut rng = SplitMix64::new(seed);
    let mut reserved = rng.partial_shuffle(n, d);
    let shortened_values = rng.bits(s);
    let punctured_positions = reserved.split_off(s);
    let shortened_positions = reserved;

    let mut is_reserved = vec![false; n];
    for &i in punctured_positions.iter().chain(&shortened_positions) {
        is_reserved[i] = true;
    }
    let payload_positions = (0..n).filter(|&i| !is_reserved[i]).collect();

    Ok(FrameLayout {
        n,
        seed,
        payload_positions,
        punctured_positions,
        shortened_positions,
        shortened_values,
    })
}

impl FrameLayout {
    pub fn payload_len(&self) -> usize {
        self.payload_positions.len()
    }

    pub fn punctured(&self) -> usize {
        self.punctured_positions.len()
    }

    pub fn shortened(&self) -> usize {
        self.shortened_positions.len()
    }

    pub fn roles(&self) -> Vec<SymbolRole> {
        let mut roles = vec![SymbolRole::Payload; self.n];
        for &i in &self.punctured_positions {
            roles[i] = SymbolRole::Punctured;
        }
        for (&i, &v) in self.shortened_positions.iter().zip(&self.shortened_values) {
            roles[i] = SymbolRole::Shortened(v);
        }
        roles
    }

    /// `index,class,value` rows for every position; `value` only for
    /// shortened positions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,class,value\n");
        for (i, role) in self.roles().into_iter().enumerate() {
            let _ = match role {
                SymbolRole::Payload => writeln!(out, "{i},payload,"),
                SymbolRole::Punctured => writeln!(out, "{i},punct,"),
                SymbolRole::Shortened(v) => writeln!(out, "{i},short,{v}"),
            };
        }
        out
    }
}

/// Places `payload` into a length-`n` frame: payload bits in order at the
/// payload positions, the shared values at shortened positions and
/// `puncture_fill` at punctured positions.
pub fn assemble_frame(
    payload: &[u8],
    layout: &FrameLayout,
    puncture_fill: &[u8],
) -> Result<Vec<u8>, LayoutError> {
    if payload.len() != layout.payload_len() {
        return Err(LayoutError::LengthMismatch {
            what: "payload",
            expected: layout.payload_len(),
            actual: payload.len(),
        });
    }
    if puncture_fill.len() != layout.punctured() {
        return Err(LayoutError::LengthMismatch {
            what: "puncture fill",
            expected: layout.punctured(),
            actual: puncture_fill.len(),
        });
    }
    let mut frame = vec![0u8; layout.n];
    for (&i, &b) in layout.payload_positions.iter().zip(payload) {
        frame[i] = b;
    }
    for (&i, &b) in layout.punctured_positions.iter().zip(puncture_fill) {
        frame[i] = b;
    }
    for (&i, &b) in layout.shortened_positions.iter().zip(&layout.shortened_values) {
        frame[i] = b;
    }
    Ok(frame)
}

/// Extracts the payload bits of a frame.
pub fn disassemble_frame(frame: &[u8], layout: &FrameLayout) -> Result<Vec<u8>, LayoutError> {
    if frame.len() != layout.n {
        return Err(LayoutError::LengthMismatch {
            what: "frame",
            expected: layout.n,
            actual: frame.len(),
        });
    }
    Ok(layout.payload_positions.iter().map(|&i| frame[i]).collect())
}
