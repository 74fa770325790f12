//! Binary framing of protocol messages.
//!
//! Each message is a 1-byte tag, a 4-byte big-endian body length and the
//! body. Bit strings are packed MSB-first and zero padded to a byte.
//!
//! | tag  | message               | body                                          |
//! |------|-----------------------|-----------------------------------------------|
//! | 0x01 | `Payload`             | packed bits                                   |
//! | 0x02 | `Sample`              | `t` (u32), `t` positions (u32 each), packed values |
//! | 0x03 | `SyndromeAndEstimate` | packed syndrome, then `p*` as big-endian f64  |
//! | 0x04 | `Ack`                 | one byte, 1 for success                       |
//!
//! Packed bit strings do not carry their length, so decoding needs the
//! payload and syndrome lengths of the session.

use std::io::{Read, Write};

use thiserror::Error;

pub const TAG_PAYLOAD: u8 = 0x01;
pub const TAG_SAMPLE: u8 = 0x02;
pub const TAG_SYNDROME: u8 = 0x03;
pub const TAG_ACK: u8 = 0x04;

/// Largest body accepted from a stream.
pub const MAX_BODY: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("unknown message tag {0:#04x}")]
    UnknownTag(u8),
    #[error("{what}: expected {expected} bytes, got {actual}")]
    BadLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("message body of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("malformed message: {0}")]
    Malformed(&'static str),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Payload { bits: Vec<u8> },
    Sample { positions: Vec<usize>, values: Vec<u8> },
    SyndromeAndEstimate { syndrome: Vec<u8>, p_star: f64 },
    Ack { success: bool },
}

/// Lengths a receiver must know to decode packed bit strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireContext {
    pub payload_len: usize,
    pub syndrome_len: usize,
}

impl WireMessage {
    pub fn tag(&self) -> u8 {
        match self {
            Self::Payload { .. } => TAG_PAYLOAD,
            Self::Sample { .. } => TAG_SAMPLE,
            Self::SyndromeAndEstimate { .. } => TAG_SYNDROME,
            Self::Ack { .. } => TAG_ACK,
        }
    }

    pub fn kind(&self) -> &'static str {
        kind_of(self.tag())
    }

    pub fn encode(&self) -> Vec<u8> {
        let body = match self {
            Self::Payload { bits } => pack_bits(bits),
            Self::Sample { positions, values } => {
                let mut body = Vec::with_capacity(4 + 4 * positions.len() + values.len() / 8 + 1);
                body.extend_from_slice(&(positions.len() as u32).to_be_bytes());
                for &pos in positions {
                    body.extend_from_slice(&(pos as u32).to_be_bytes());
                }
                body.extend(pack_bits(values));
                body
            }
            Self::SyndromeAndEstimate { syndrome, p_star } => {
                let mut body = pack_bits(syndrome);
                body.extend_from_slice(&p_star.to_be_bytes());
                body
            }
            Self::Ack { success } => vec![u8::from(*success)],
        };
        let mut out = Vec::with_capacity(5 + body.len());
        out.push(self.tag());
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend(body);
        out
    }

    /// Decodes one complete frame.
    pub fn decode(frame: &[u8], ctx: &WireContext) -> Result<Self, WireError> {
        if frame.len() < 5 {
            return Err(WireError::BadLength {
                what: "frame header",
                expected: 5,
                actual: frame.len(),
            });
        }
        let len = u32::from_be_bytes(frame[1..5].try_into().unwrap()) as usize;
        if frame.len() != 5 + len {
            return Err(WireError::BadLength {
                what: "frame",
                expected: 5 + len,
                actual: frame.len(),
            });
        }
        Self::decode_body(frame[0], &frame[5..], ctx)
    }

    fn decode_body(tag: u8, body: &[u8], ctx: &WireContext) -> Result<Self, WireError> {
        match tag {
            TAG_PAYLOAD => Ok(Self::Payload {
                bits: unpack_bits(body, ctx.payload_len, "payload")?,
            }),
            TAG_SAMPLE => {
                if body.len() < 4 {
                    return Err(WireError::Malformed("sample without count"));
                }
                let t = u32::from_be_bytes(body[..4].try_into().unwrap()) as usize;
                let want = 4 + 4 * t + t.div_ceil(8);
                if body.len() != want {
                    return Err(WireError::BadLength {
                        what: "sample",
                        expected: want,
                        actual: body.len(),
                    });
                }
                let positions = body[4..4 + 4 * t]
                    .chunks_exact(4)
                    .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize)
                    .collect();
                let values = unpack_bits(&body[4 + 4 * t..], t, "sample values")?;
                Ok(Self::Sample { positions, values })
            }
            TAG_SYNDROME => {
                let packed = ctx.syndrome_len.div_ceil(8);
                if body.len() != packed + 8 {
                    return Err(WireError::BadLength {
                        what: "syndrome",
                        expected: packed + 8,
                        actual: body.len(),
                    });
                }
                let syndrome = unpack_bits(&body[..packed], ctx.syndrome_len, "syndrome")?;
                let p_star = f64::from_be_bytes(body[packed..].try_into().unwrap());
                Ok(Self::SyndromeAndEstimate { syndrome, p_star })
            }
            TAG_ACK => match body {
                [0] => Ok(Self::Ack { success: false }),
                [1] => Ok(Self::Ack { success: true }),
                _ => Err(WireError::Malformed("ack body must be a single 0 or 1 byte")),
            },
            other => Err(WireError::UnknownTag(other)),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), WireError> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R, ctx: &WireContext) -> Result<Self, WireError> {
        let mut header = [0u8; 5];
        r.read_exact(&mut header)?;
        let len = u32::from_be_bytes(header[1..].try_into().unwrap()) as usize;
        if len > MAX_BODY {
            return Err(WireError::TooLarge(len));
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)?;
        Self::decode_body(header[0], &body, ctx)
    }
}

pub(crate) fn kind_of(tag: u8) -> &'static str {
    match tag {
        TAG_PAYLOAD => "Payload",
        TAG_SAMPLE => "Sample",
        TAG_SYNDROME => "SyndromeAndEstimate",
        TAG_ACK => "Ack",
        _ => "unknown",
    }
}

/// Packs 0/1 bytes MSB-first.
pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (7 - i % 8);
    }
    out
}

/// Inverse of [`pack_bits`]; padding bits must be zero.
pub fn unpack_bits(bytes: &[u8], len: usize, what: &'static str) -> Result<Vec<u8>, WireError> {
    if bytes.len() != len.div_ceil(8) {
        return Err(WireError::BadLength {
            what,
            expected: len.div_ceil(8),
            actual: bytes.len(),
        });
    }
    let pad = bytes.len() * 8 - len;
    if pad > 0 && bytes[bytes.len() - 1] & ((1u8 << pad) - 1) != 0 {
        return Err(WireError::Malformed("non-zero padding bits"));
    }
    Ok((0..len).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect())
}
