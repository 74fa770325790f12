//! The one-round-trip reconciliation protocol.
//!
//! ```text
//! Alice                                   Bob
//!   x ── Payload (through the channel) ──▶ y
//!     ◀── Sample (t positions + bits) ───
//!   p*, R, (s, p), layout, x⁺
//!     ── SyndromeAndEstimate ───────────▶ same R, (s, p), layout; decode
//!     ◀── Ack ──────────────────────────
//! ```
//!
//! Both parties derive the frame layout from the pre-shared layout seed
//! mixed with the session nonce, so no layout data crosses the wire. In key
//! mode the payload carries `t` extra bits and both sides drop the sampled
//! positions before building their frames.

mod session;
mod wire;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, ParityCheckCode};
use crate::decoder::{bp_decode, init_llrs, DecodeError, DecoderConfig};
use crate::prng::{derive_seed, SplitMix64};
use crate::rate_adapt::{
    achievable_range, assemble_frame, binary_entropy, build_layout, disassemble_frame,
    effective_rate_from_counts, reserved_count, split_s_p, target_rate, EfficiencyModel,
    FrameLayout, LayoutError, RateError,
};

pub use session::{
    run_alice_stream, run_bob_stream, run_session, Alice, Bob, BobResult, SessionOutcome,
    SessionSeeds,
};
pub use wire::{pack_bits, unpack_bits, WireContext, WireError, WireMessage};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("invalid session configuration: {0}")]
    Config(String),
    #[error("{what}: expected {expected} bits, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("cannot estimate the crossover probability from an empty sample")]
    EmptySample,
    #[error("sample of {t} bits requested from a {len}-bit string")]
    SampleTooLarge { t: usize, len: usize },
    #[error("invalid sample: {0}")]
    BadSample(&'static str),
    #[error("protocol violation: expected {expected}, got {got}")]
    OutOfOrder {
        expected: &'static str,
        got: &'static str,
    },
    #[error("session already finished")]
    Finished,
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reconcile data; sampled bits stay in the strings.
    Data,
    /// Reconcile key material; sampled bits are published and dropped.
    Key,
}

/// How Alice picks the rate once `p*` is known.
#[derive(Debug, Clone, PartialEq)]
pub enum RatePolicy {
    /// `R = 1 - f(p*) h(p*)`.
    Efficiency(EfficiencyModel),
    /// The same rate whatever the estimate.
    Fixed(f64),
}

/// Parameters both parties agree on before the session.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub code: Arc<ParityCheckCode>,
    /// Reserved fraction; `d = ⌊δ n⌋`.
    pub delta: f64,
    /// Sample size `t`.
    pub sample_size: usize,
    pub rate_policy: RatePolicy,
    /// Round the target rate to a multiple of this step.
    pub rate_step: Option<f64>,
    pub layout_seed: u64,
    /// Mixed into the layout seed so that sessions never reuse a layout.
    pub nonce: u64,
    pub mode: Mode,
    pub decoder: DecoderConfig<f64>,
}

impl SessionConfig {
    pub fn new(code: Arc<ParityCheckCode>, delta: f64, sample_size: usize, mode: Mode) -> Self {
        Self {
            code,
            delta,
            sample_size,
            rate_policy: RatePolicy::Efficiency(EfficiencyModel::reference(delta)),
            rate_step: None,
            layout_seed: 0,
            nonce: 0,
            mode,
            decoder: DecoderConfig::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    /// Reserved symbols `d`.
    pub fn reserved(&self) -> usize {
        reserved_count(self.delta, self.n()).unwrap_or(usize::MAX)
    }

    /// Bits Alice sends in step 1: `n - d`, plus `t` in key mode.
    pub fn payload_len(&self) -> usize {
        let base = self.n() - self.reserved();
        match self.mode {
            Mode::Data => base,
            Mode::Key => base + self.sample_size,
        }
    }

    /// Length of the reconciled strings: `ℓ - t` in key mode, `ℓ` in data
    /// mode.
    pub fn key_len(&self) -> usize {
        self.n() - self.reserved()
    }

    pub fn mother_rate(&self) -> f64 {
        self.code.design_dimension() as f64 / self.n() as f64
    }

    pub fn session_layout_seed(&self) -> u64 {
        derive_seed(self.layout_seed, self.nonce)
    }

    pub fn wire_context(&self) -> WireContext {
        WireContext {
            payload_len: self.payload_len(),
            syndrome_len: self.code.m(),
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        reserved_count(self.delta, self.n())?;
        let d = self.reserved();
        if d >= self.n() {
            return Err(ProtocolError::Config("no payload symbols left".into()));
        }
        if self.sample_size == 0 {
            return Err(ProtocolError::Config("sample size t must be at least 1".into()));
        }
        if self.mode == Mode::Data && self.sample_size > self.n() - d {
            return Err(ProtocolError::Config(format!(
                "sample size {} exceeds the payload length {}",
                self.sample_size,
                self.n() - d
            )));
        }
        if let Some(step) = self.rate_step {
            if !(step > 0.0 && step < 1.0) {
                return Err(ProtocolError::Config(format!("rate step {step} must be in (0, 1)")));
            }
        }
        if let RatePolicy::Fixed(r) = self.rate_policy {
            if !(0.0..=1.0).contains(&r) {
                return Err(ProtocolError::Config(format!("fixed rate {r} must be in [0, 1]")));
            }
        }
        self.decoder.validate()?;
        Ok(())
    }
}

/// Rate choice and frame layout for one session, computed identically by
/// both parties from `p*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePlan {
    pub requested_rate: f64,
    pub rate: f64,
    pub clamped: bool,
    pub shortened: usize,
    pub punctured: usize,
    pub layout: FrameLayout,
}

impl FramePlan {
    /// Realized rate `(k - s) / (n - p - s)`.
    pub fn effective_rate(&self, config: &SessionConfig) -> f64 {
        effective_rate_from_counts::<f64>(
            config.code.design_dimension(),
            config.n(),
            self.punctured,
            self.shortened,
        )
        .unwrap_or(0.0)
    }
}

/// Derives the target rate, the puncture/shorten split and the layout.
///
/// Rates outside the achievable interval are clamped to it, and never
/// below 0.
pub fn plan_frame(config: &SessionConfig, p_star: f64) -> Result<FramePlan, ProtocolError> {
    let n = config.n();
    let d = config.reserved();
    let r0 = config.mother_rate();
    let mut requested = match &config.rate_policy {
        RatePolicy::Efficiency(model) => target_rate(p_star, model)?,
        RatePolicy::Fixed(r) => *r,
    };
    if let Some(step) = config.rate_step {
        requested = (requested / step).round() * step;
    }
    let (lo, hi) = achievable_range(r0, d as f64 / n as f64)?;
    let rate = requested.clamp(lo.max(0.0), hi);
    let clamped = rate != requested;
    if clamped {
        log::info!("target rate {requested:.4} clamped to {rate:.4}");
    }
    let (shortened, punctured) = split_s_p(r0, rate, d, n)?;
    let layout = build_layout(config.session_layout_seed(), n, d, shortened)?;
    Ok(FramePlan {
        requested_rate: requested,
        rate,
        clamped,
        shortened,
        punctured,
        layout,
    })
}

/// Step 1: Alice's payload message.
pub fn alice_step1(config: &SessionConfig, x: &[u8]) -> Result<WireMessage, ProtocolError> {
    let want = config.payload_len();
    if x.is_empty() || x.len() != want {
        return Err(ProtocolError::LengthMismatch {
            what: "payload",
            expected: want,
            actual: x.len(),
        });
    }
    Ok(WireMessage::Payload { bits: x.to_vec() })
}

/// Step 2: `t` distinct positions of `y`, ascending, with their values.
pub fn bob_step2(y: &[u8], t: usize, seed: u64) -> Result<(Vec<usize>, Vec<u8>), ProtocolError> {
    if t > y.len() {
        return Err(ProtocolError::SampleTooLarge { t, len: y.len() });
    }
    let mut positions = SplitMix64::new(seed).partial_shuffle(y.len(), t);
    positions.sort_unstable();
    let values = positions.iter().map(|&i| y[i]).collect();
    Ok((positions, values))
}

/// Lower and upper clamp for an estimate from `t` samples.
pub fn estimate_bounds(t: usize) -> (f64, f64) {
    let lo = (0.5 / t as f64).min(0.25);
    (lo, 0.5 - lo)
}

/// Step 3, first half: `p*` as the fraction of sampled positions where
/// Bob's bit differs from Alice's, clamped away from 0 and 1/2.
pub fn alice_estimate(positions: &[usize], values: &[u8], x: &[u8]) -> Result<f64, ProtocolError> {
    check_sample(positions, values, x.len())?;
    let t = positions.len();
    if t == 0 {
        return Err(ProtocolError::EmptySample);
    }
    let mismatches = positions
        .iter()
        .zip(values)
        .filter(|(&i, &v)| x[i] != v)
        .count();
    let (lo, hi) = estimate_bounds(t);
    Ok((mismatches as f64 / t as f64).clamp(lo, hi))
}

fn check_sample(positions: &[usize], values: &[u8], len: usize) -> Result<(), ProtocolError> {
    if positions.len() != values.len() {
        return Err(ProtocolError::BadSample("positions and values differ in length"));
    }
    if positions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProtocolError::BadSample("positions must be strictly increasing"));
    }
    if positions.last().is_some_and(|&p| p >= len) {
        return Err(ProtocolError::BadSample("position out of range"));
    }
    if values.iter().any(|&v| v > 1) {
        return Err(ProtocolError::BadSample("values must be bits"));
    }
    Ok(())
}

/// Removes the (ascending) sampled positions from a string.
pub fn discard_positions(bits: &[u8], positions: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(bits.len().saturating_sub(positions.len()));
    let mut skip = positions.iter().peekable();
    for (i, &b) in bits.iter().enumerate() {
        if skip.peek() == Some(&&i) {
            skip.next();
        } else {
            out.push(b);
        }
    }
    out
}

/// The string a party reconciles: the payload, minus the sample in key
/// mode.
fn working_string(
    config: &SessionConfig,
    bits: &[u8],
    positions: &[usize],
) -> Result<Vec<u8>, ProtocolError> {
    if bits.len() != config.payload_len() {
        return Err(ProtocolError::LengthMismatch {
            what: "payload",
            expected: config.payload_len(),
            actual: bits.len(),
        });
    }
    if positions.len() != config.sample_size {
        return Err(ProtocolError::BadSample("sample size differs from the session's t"));
    }
    Ok(match config.mode {
        Mode::Data => bits.to_vec(),
        Mode::Key => discard_positions(bits, positions),
    })
}

/// Alice's side of step 3.
#[derive(Debug, Clone)]
pub struct AliceFrame {
    pub message: WireMessage,
    pub plan: FramePlan,
    /// The string Bob should end up with.
    pub key: Vec<u8>,
}

/// Step 3: rate, split, layout, frame `x⁺` and its syndrome.
pub fn alice_step3(
    config: &SessionConfig,
    x: &[u8],
    positions: &[usize],
    p_star: f64,
    fill_seed: u64,
) -> Result<AliceFrame, ProtocolError> {
    let key = working_string(config, x, positions)?;
    let plan = plan_frame(config, p_star)?;
    let fill = SplitMix64::new(fill_seed).bits(plan.punctured);
    let frame = assemble_frame(&key, &plan.layout, &fill)?;
    let syndrome = config.code.syndrome(&frame)?;
    Ok(AliceFrame {
        message: WireMessage::SyndromeAndEstimate { syndrome, p_star },
        plan,
        key,
    })
}

/// Step 4: Bob rebuilds the plan and decodes.
pub fn bob_step4(
    config: &SessionConfig,
    y: &[u8],
    positions: &[usize],
    syndrome: &[u8],
    p_star: f64,
) -> Result<BobResult, ProtocolError> {
    if syndrome.len() != config.code.m() {
        return Err(ProtocolError::LengthMismatch {
            what: "syndrome",
            expected: config.code.m(),
            actual: syndrome.len(),
        });
    }
    let own = working_string(config, y, positions)?;
    let plan = plan_frame(config, p_star)?;
    let placeholder = vec![0u8; plan.punctured];
    let frame = assemble_frame(&own, &plan.layout, &placeholder)?;
    let llrs = init_llrs(&plan.layout.roles(), p_star, &frame, &config.decoder)?;
    let outcome = bp_decode(&config.code, &llrs, syndrome, &config.decoder)?;
    let success = outcome.converged();
    let key = if success {
        disassemble_frame(&outcome.word, &plan.layout)?
    } else {
        own
    };
    Ok(BobResult {
        success,
        iterations: outcome.iterations_used,
        plan,
        key,
    })
}

/// Per-session summary, one JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationReport {
    pub success: bool,
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub t: usize,
    pub payload_len: usize,
    pub key_len: usize,
    pub p_true: Option<f64>,
    pub p_star: f64,
    pub requested_rate: f64,
    pub rate: f64,
    pub rate_clamped: bool,
    pub effective_rate: f64,
    pub shortened: usize,
    pub punctured: usize,
    /// Syndrome plus sample bits, `m + t`.
    pub disclosed_bits: usize,
    /// Sample positions as sent, counted apart from `disclosed_bits`.
    pub position_overhead_bits: usize,
    /// `(1 - R_eff) / h(p)`, `p` the true crossover when known.
    pub efficiency: Option<f64>,
    pub no_noise: bool,
    pub iterations: usize,
    /// Bits where Bob's result differs from Alice's, when both are known.
    pub residual_mismatch: Option<usize>,
}

impl ReconciliationReport {
    pub fn new(
        config: &SessionConfig,
        plan: &FramePlan,
        p_star: f64,
        p_true: Option<f64>,
        success: bool,
        iterations: usize,
    ) -> Self {
        let effective_rate = plan.effective_rate(config);
        let p_ref = p_true.unwrap_or(p_star);
        let h = binary_entropy(p_ref);
        Self {
            success,
            mode: config.mode,
            n: config.n(),
            m: config.code.m(),
            d: config.reserved(),
            t: config.sample_size,
            payload_len: config.payload_len(),
            key_len: config.key_len(),
            p_true,
            p_star,
            requested_rate: plan.requested_rate,
            rate: plan.rate,
            rate_clamped: plan.clamped,
            effective_rate,
            shortened: plan.shortened,
            punctured: plan.punctured,
            disclosed_bits: config.code.m() + config.sample_size,
            position_overhead_bits: 32 * config.sample_size,
            efficiency: (h > 0.0).then(|| (1.0 - effective_rate) / h),
            no_noise: h == 0.0,
            iterations,
            residual_mismatch: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `(1 - R) / h(p)`.
pub fn efficiency(rate: f64, p: f64) -> Option<f64> {
    let h = binary_entropy(p);
    (h > 0.0).then(|| (1.0 - rate) / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{degree_sequence, peg_construct, DegreeDistribution};
    use crate::rate_adapt::REFERENCE_TABLE;

    fn code(n: usize) -> Arc<ParityCheckCode> {
        let dist = DegreeDistribution::<f64>::regular(3, 6).unwrap();
        Arc::new(peg_construct(&degree_sequence(&dist, n).unwrap(), 1).unwrap())
    }

    #[test]
    fn payload_lengths() {
        let c = code(8);
        let data = SessionConfig::new(c.clone(), 0.25, 2, Mode::Data);
        assert_eq!(data.payload_len(), 6);
        let key = SessionConfig::new(c, 0.25, 2, Mode::Key);
        assert_eq!(key.payload_len(), 8);
        assert_eq!(key.key_len(), 6);
        assert!(alice_step1(&data, &[]).is_err());
        assert!(alice_step1(&data, &[0; 6]).is_ok());
    }

    #[test]
    fn sampling() {
        let y: Vec<u8> = SplitMix64::new(1).bits(50);
        let (pos, val) = bob_step2(&y, 50, 3).unwrap();
        assert_eq!(pos, (0..50).collect::<Vec<_>>());
        assert_eq!(val, y);
        assert!(bob_step2(&y, 0, 3).unwrap().0.is_empty());
        assert_eq!(bob_step2(&y, 10, 3).unwrap(), bob_step2(&y, 10, 3).unwrap());
        assert!(bob_step2(&y, 51, 3).is_err());
    }

    #[test]
    fn estimates() {
        let x = vec![0u8; 100];
        let positions: Vec<usize> = (0..100).collect();
        let mut values = vec![0u8; 100];
        assert_eq!(alice_estimate(&positions, &values, &x).unwrap(), 0.005);
        for v in values.iter_mut().take(8) {
            *v = 1;
        }
        assert_eq!(alice_estimate(&positions, &values, &x).unwrap(), 0.08);
        assert_eq!(alice_estimate(&positions, &[1; 100], &x).unwrap(), 0.495);
        assert!(matches!(alice_estimate(&[], &[], &x), Err(ProtocolError::EmptySample)));
        assert!(alice_estimate(&[3, 2], &[0, 0], &x).is_err());
    }

    #[test]
    fn worked_example_chain() {
        // p* = 0.08, f(p) = 1.1 + |p - 0.1| gives R = 0.5496, printed as
        // 0.55; with that rounding the split is (225000, 275000).
        let model = EfficiencyModel::AbsDeviation { base: 1.1, center: 0.1 };
        let r = target_rate(0.08, &model).unwrap();
        assert!((r - 0.55).abs() < 1e-3);
        let rounded = (r / 0.01).round() * 0.01;
        assert_eq!(split_s_p(0.5, rounded, 500_000, 1_000_000).unwrap(), (225_000, 275_000));
    }

    #[test]
    fn reference_efficiencies_match_the_formula() {
        // One published row does not satisfy its own formula: BER 0.0541 at
        // R = 0.59 gives f = 1.3506, not 1.3659 (that f needs BER 0.0533).
        let mut outliers = Vec::new();
        for (delta, rows) in REFERENCE_TABLE {
            for row in rows {
                let f = efficiency(row.rate, row.ber).unwrap();
                if (f - row.f).abs() > 0.003 {
                    outliers.push((delta, row.rate, row.ber));
                }
            }
        }
        assert_eq!(outliers, vec![(0.5, 0.59, 0.0541)]);
        assert!((efficiency(0.51, 0.0945).unwrap() - 1.0855).abs() < 1e-3);
        assert_eq!(efficiency(0.5, 0.0), None);
    }

    #[test]
    fn noiseless_data_session_reconciles() {
        let c = code(400);
        let mut cfg = SessionConfig::new(c, 0.1, 20, Mode::Data);
        cfg.layout_seed = 5;
        let x = SplitMix64::new(2).bits(cfg.payload_len());
        let (pos, val) = bob_step2(&x, cfg.sample_size, 9).unwrap();
        let p_star = alice_estimate(&pos, &val, &x).unwrap();
        let frame = alice_step3(&cfg, &x, &pos, p_star, 4).unwrap();
        let WireMessage::SyndromeAndEstimate { syndrome, .. } = &frame.message else {
            panic!("wrong message");
        };
        let bob = bob_step4(&cfg, &x, &pos, syndrome, p_star).unwrap();
        assert!(bob.success);
        assert_eq!(bob.key, frame.key);
        assert_eq!(bob.plan, frame.plan);
    }

    #[test]
    fn pure_mother_code_when_nothing_reserved() {
        let c = code(200);
        let mut cfg = SessionConfig::new(c.clone(), 0.0, 10, Mode::Data);
        cfg.rate_policy = RatePolicy::Fixed(0.5);
        let x = SplitMix64::new(2).bits(200);
        let frame = alice_step3(&cfg, &x, &(0..10).collect::<Vec<_>>(), 0.01, 1).unwrap();
        assert_eq!(frame.plan.shortened + frame.plan.punctured, 0);
        let WireMessage::SyndromeAndEstimate { syndrome, .. } = frame.message else {
            panic!("wrong message");
        };
        assert_eq!(syndrome, c.syndrome(&x).unwrap());
    }

    #[test]
    fn rates_are_clamped_into_range() {
        let c = code(1000);
        let mut cfg = SessionConfig::new(c, 0.1, 10, Mode::Data);
        cfg.rate_policy = RatePolicy::Fixed(0.9);
        let plan = plan_frame(&cfg, 0.01).unwrap();
        assert!(plan.clamped);
        assert_eq!((plan.shortened, plan.punctured), (0, 100));
        cfg.rate_policy = RatePolicy::Fixed(0.1);
        let plan = plan_frame(&cfg, 0.01).unwrap();
        assert_eq!((plan.shortened, plan.punctured), (100, 0));
    }

    #[test]
    fn report_accounting() {
        let c = code(1000);
        let cfg = SessionConfig::new(c, 0.1, 50, Mode::Data);
        let plan = plan_frame(&cfg, 0.05).unwrap();
        let r = ReconciliationReport::new(&cfg, &plan, 0.05, Some(0.0), true, 3);
        assert_eq!(r.disclosed_bits, 500 + 50);
        assert!(r.no_noise && r.efficiency.is_none());
        let json = r.to_json();
        assert!(json.contains("\"disclosed_bits\":550"));
        assert!(json.contains("\"mode\":\"data\""));
        let back: ReconciliationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
