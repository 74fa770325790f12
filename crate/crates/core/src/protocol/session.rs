//! Alice and Bob as state machines, and the transports that drive them.

use std::io::{Read, Write};

use super::{
    alice_estimate, alice_step1, alice_step3, bob_step2, bob_step4, AliceFrame, FramePlan,
    ProtocolError, ReconciliationReport, SessionConfig, WireMessage,
};
use crate::channel::{bsc_transmit, BscParams};
use crate::rate_adapt::FrameLayout;

/// Private randomness of the two parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionSeeds {
    /// Alice's puncture fill.
    pub fill: u64,
    /// Bob's choice of sample positions.
    pub sample: u64,
}

/// Bob's result after step 4.
#[derive(Debug, Clone, PartialEq)]
pub struct BobResult {
    pub success: bool,
    pub iterations: usize,
    pub plan: FramePlan,
    /// The decoded string on success, otherwise Bob's own string.
    pub key: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AliceState {
    Start,
    AwaitSample,
    AwaitAck,
    Done,
    Failed,
}

pub struct Alice {
    config: SessionConfig,
    x: Vec<u8>,
    fill_seed: u64,
    state: AliceState,
    positions: Vec<usize>,
    p_star: Option<f64>,
    frame: Option<AliceFrame>,
    acked: Option<bool>,
}

impl Alice {
    pub fn new(config: SessionConfig, x: Vec<u8>, fill_seed: u64) -> Result<Self, ProtocolError> {
        config.validate()?;
        alice_step1(&config, &x)?;
        Ok(Self {
            config,
            x,
            fill_seed,
            state: AliceState::Start,
            positions: Vec::new(),
            p_star: None,
            frame: None,
            acked: None,
        })
    }

    /// Step 1.
    pub fn start(&mut self) -> Result<WireMessage, ProtocolError> {
        if self.state != AliceState::Start {
            return Err(self.reject("nothing (already started)", "start"));
        }
        let msg = alice_step1(&self.config, &self.x)?;
        self.state = AliceState::AwaitSample;
        Ok(msg)
    }

    /// Handles Bob's message and returns the reply, if any.
    pub fn handle(&mut self, msg: WireMessage) -> Result<Option<WireMessage>, ProtocolError> {
        match (self.state, msg) {
            (AliceState::AwaitSample, WireMessage::Sample { positions, values }) => {
                let step = alice_estimate(&positions, &values, &self.x).and_then(|p_star| {
                    let frame = alice_step3(&self.config, &self.x, &positions, p_star, self.fill_seed)?;
                    Ok((p_star, frame))
                });
                let (p_star, frame) = step.inspect_err(|_| self.state = AliceState::Failed)?;
                let reply = frame.message.clone();
                self.positions = positions;
                self.p_star = Some(p_star);
                self.frame = Some(frame);
                self.state = AliceState::AwaitAck;
                Ok(Some(reply))
            }
            (AliceState::AwaitAck, WireMessage::Ack { success }) => {
                self.acked = Some(success);
                self.state = AliceState::Done;
                Ok(None)
            }
            (AliceState::Done | AliceState::Failed, _) => Err(ProtocolError::Finished),
            (state, other) => Err(self.reject(alice_expects(state), other.kind())),
        }
    }

    fn reject(&mut self, expected: &'static str, got: &'static str) -> ProtocolError {
        self.state = AliceState::Failed;
        ProtocolError::OutOfOrder { expected, got }
    }

    pub fn is_done(&self) -> bool {
        self.state == AliceState::Done
    }

    pub fn p_star(&self) -> Option<f64> {
        self.p_star
    }

    pub fn frame(&self) -> Option<&AliceFrame> {
        self.frame.as_ref()
    }

    pub fn acked(&self) -> Option<bool> {
        self.acked
    }

    /// Positions dropped in key mode.
    pub fn sample_positions(&self) -> &[usize] {
        &self.positions
    }

    /// Alice's view of the session once it is done.
    pub fn report(&self) -> Option<ReconciliationReport> {
        let frame = self.frame.as_ref()?;
        Some(ReconciliationReport::new(
            &self.config,
            &frame.plan,
            self.p_star?,
            None,
            self.acked?,
            0,
        ))
    }
}

fn alice_expects(state: AliceState) -> &'static str {
    match state {
        AliceState::Start => "nothing before start",
        AliceState::AwaitSample => "Sample",
        AliceState::AwaitAck => "Ack",
        AliceState::Done | AliceState::Failed => "nothing",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BobState {
    AwaitPayload,
    AwaitSyndrome,
    Done,
    Failed,
}

pub struct Bob {
    config: SessionConfig,
    sample_seed: u64,
    state: BobState,
    y: Vec<u8>,
    positions: Vec<usize>,
    p_star: Option<f64>,
    result: Option<BobResult>,
}

impl Bob {
    pub fn new(config: SessionConfig, sample_seed: u64) -> Result<Self, ProtocolError> {
        config.validate()?;
        Ok(Self {
            config,
            sample_seed,
            state: BobState::AwaitPayload,
            y: Vec::new(),
            positions: Vec::new(),
            p_star: None,
            result: None,
        })
    }

    pub fn handle(&mut self, msg: WireMessage) -> Result<Option<WireMessage>, ProtocolError> {
        match (self.state, msg) {
            (BobState::AwaitPayload, WireMessage::Payload { bits }) => {
                if bits.len() != self.config.payload_len() {
                    self.state = BobState::Failed;
                    return Err(ProtocolError::LengthMismatch {
                        what: "payload",
                        expected: self.config.payload_len(),
                        actual: bits.len(),
                    });
                }
                let (positions, values) = bob_step2(&bits, self.config.sample_size, self.sample_seed)
                    .inspect_err(|_| self.state = BobState::Failed)?;
                self.y = bits;
                self.positions = positions.clone();
                self.state = BobState::AwaitSyndrome;
                Ok(Some(WireMessage::Sample { positions, values }))
            }
            (BobState::AwaitSyndrome, WireMessage::SyndromeAndEstimate { syndrome, p_star }) => {
                let result = bob_step4(&self.config, &self.y, &self.positions, &syndrome, p_star)
                    .inspect_err(|_| self.state = BobState::Failed)?;
                let ack = WireMessage::Ack { success: result.success };
                self.p_star = Some(p_star);
                self.result = Some(result);
                self.state = BobState::Done;
                Ok(Some(ack))
            }
            (BobState::Done | BobState::Failed, _) => Err(ProtocolError::Finished),
            (state, other) => {
                self.state = BobState::Failed;
                Err(ProtocolError::OutOfOrder {
                    expected: match state {
                        BobState::AwaitPayload => "Payload",
                        _ => "SyndromeAndEstimate",
                    },
                    got: other.kind(),
                })
            }
        }
    }

    pub fn is_done(&self) -> bool {
        self.state == BobState::Done
    }

    pub fn result(&self) -> Option<&BobResult> {
        self.result.as_ref()
    }

    pub fn sample_positions(&self) -> &[usize] {
        &self.positions
    }

    /// Bob's view of the session once it is done.
    pub fn report(&self) -> Option<ReconciliationReport> {
        let r = self.result.as_ref()?;
        Some(ReconciliationReport::new(
            &self.config,
            &r.plan,
            self.p_star?,
            None,
            r.success,
            r.iterations,
        ))
    }
}

/// Everything a simulated session produced.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub report: ReconciliationReport,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub alice_layout: FrameLayout,
    pub bob_layout: FrameLayout,
    pub alice_discarded: Vec<usize>,
    pub bob_discarded: Vec<usize>,
    /// Tags of the messages in the order they crossed the link.
    pub transcript: Vec<u8>,
}

/// Runs a full session in process. Every message is encoded and decoded;
/// the payload goes through `channel`, control messages are delivered
/// intact.
pub fn run_session(
    x: &[u8],
    channel: &BscParams,
    config: &SessionConfig,
    seeds: SessionSeeds,
) -> Result<SessionOutcome, ProtocolError> {
    let ctx = config.wire_context();
    let mut alice = Alice::new(config.clone(), x.to_vec(), seeds.fill)?;
    let mut bob = Bob::new(config.clone(), seeds.sample)?;
    let mut transcript = Vec::with_capacity(4);
    let mut msg = alice.start()?;
    let mut to_bob = true;
    loop {
        transcript.push(msg.tag());
        let delivered = match WireMessage::decode(&msg.encode(), &ctx)? {
            WireMessage::Payload { bits } => WireMessage::Payload {
                bits: bsc_transmit(&bits, channel),
            },
            other => other,
        };
        let reply = if to_bob {
            bob.handle(delivered)?
        } else {
            alice.handle(delivered)?
        };
        match reply {
            Some(next) => {
                msg = next;
                to_bob = !to_bob;
            }
            None => break,
        }
    }

    let frame = alice.frame().expect("alice finished step 3");
    let bob_result = bob.result().expect("bob finished step 4");
    let mut report = ReconciliationReport::new(
        config,
        &frame.plan,
        alice.p_star().expect("estimate made"),
        Some(channel.crossover()),
        alice.acked().expect("ack received"),
        bob_result.iterations,
    );
    let mismatch = frame
        .key
        .iter()
        .zip(&bob_result.key)
        .filter(|(a, b)| a != b)
        .count();
    report.residual_mismatch = Some(mismatch);
    Ok(SessionOutcome {
        report,
        alice_key: frame.key.clone(),
        bob_key: bob_result.key.clone(),
        alice_layout: frame.plan.layout.clone(),
        bob_layout: bob_result.plan.layout.clone(),
        alice_discarded: discarded(config, alice.sample_positions()),
        bob_discarded: discarded(config, bob.sample_positions()),
        transcript,
    })
}

fn discarded(config: &SessionConfig, positions: &[usize]) -> Vec<usize> {
    match config.mode {
        super::Mode::Data => Vec::new(),
        super::Mode::Key => positions.to_vec(),
    }
}

/// Alice's side over a framed byte stream. `noise`, if given, is applied
/// to the payload before it is sent, standing in for the physical channel.
pub fn run_alice_stream<S: Read + Write>(
    stream: &mut S,
    mut alice: Alice,
    noise: Option<&BscParams>,
) -> Result<(Alice, ReconciliationReport), ProtocolError> {
    let ctx = alice.config.wire_context();
    let payload = match (alice.start()?, noise) {
        (WireMessage::Payload { bits }, Some(ch)) => WireMessage::Payload {
            bits: bsc_transmit(&bits, ch),
        },
        (msg, _) => msg,
    };
    payload.write_to(stream)?;
    while !alice.is_done() {
        let incoming = WireMessage::read_from(stream, &ctx)?;
        if let Some(reply) = alice.handle(incoming)? {
            reply.write_to(stream)?;
        }
    }
    let report = alice.report().expect("finished session has a report");
    Ok((alice, report))
}

/// Bob's side over a framed byte stream.
pub fn run_bob_stream<S: Read + Write>(
    stream: &mut S,
    mut bob: Bob,
) -> Result<(Bob, ReconciliationReport), ProtocolError> {
    let ctx = bob.config.wire_context();
    while !bob.is_done() {
        let incoming = WireMessage::read_from(stream, &ctx)?;
        if let Some(reply) = bob.handle(incoming)? {
            reply.write_to(stream)?;
        }
    }
    let report = bob.report().expect("finished session has a report");
    Ok((bob, report))
}
