//! Jigsaw packet wire format.
//!
//! Big-endian, in order:
//!
//! ```text
//! magic 0x4A 0x50 | version 0x01 | mode | seq_no (4) | pair_count (1)
//! | pairs (16 each: x (8) || y (8)) | frag_bitlen (4) | payload | mac (20)
//! ```
//!
//! The MAC is HMAC-SHA1 under K0 over every byte before it, so it binds the
//! sequence number, mode and pairs as well as the fragment.

mod keys;
mod mac;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::EvalPair;

pub use keys::{KeyError, KeyMaterial, MacKey, MAC_KEY_LEN};
pub use mac::{compute_mac, verify_mac, MAC_LEN};

pub const WIRE_MAGIC: [u8; 2] = [0x4A, 0x50];
pub const VERSION: u8 = 1;
pub const PAIR_LEN: usize = 16;
/// magic, version, mode, seq_no, pair_count.
pub const FIXED_HEADER_LEN: usize = 2 + 1 + 1 + 4 + 1;
/// Smallest possible packet: one pair and a one-byte payload.
pub const MIN_PACKET_LEN: usize = FIXED_HEADER_LEN + PAIR_LEN + 4 + 1 + MAC_LEN;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PacketError {
    #[error("malformed packet: {0}")]
    MalformedPacket(String),
    #[error("MAC mismatch")]
    MacMismatch,
    #[error("packet invariant violated: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One global polynomial, one pair per packet.
    #[default]
    Base,
    /// A quadratic per fragment, two pairs per packet.
    Hint,
}

impl Mode {
    pub fn wire_byte(self) -> u8 {
        match self {
            Mode::Base => 0,
            Mode::Hint => 1,
        }
    }

    pub fn from_wire(b: u8) -> Option<Self> {
        match b {
            0 => Some(Mode::Base),
            1 => Some(Mode::Hint),
            _ => None,
        }
    }

    pub fn pair_count(self) -> usize {
        match self {
            Mode::Base => 1,
            Mode::Hint => 2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Base => "base",
            Mode::Hint => "hint",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "base" => Ok(Mode::Base),
            "hint" => Ok(Mode::Hint),
            other => Err(format!("unknown mode {other:?}, expected base or hint")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JigsawPacket {
    pub version: u8,
    pub mode: Mode,
    pub seq_no: u32,
    pub pairs: Vec<EvalPair>,
    pub frag_bitlen: u32,
    pub payload: Vec<u8>,
    pub mac: [u8; MAC_LEN],
}

impl JigsawPacket {
    /// Builds a packet and computes its MAC under `k0`.
    pub fn seal(
        mode: Mode,
        seq_no: u32,
        pairs: Vec<EvalPair>,
        frag_bitlen: u32,
        payload: Vec<u8>,
        k0: &MacKey,
    ) -> Result<Self, PacketError> {
        let mut pkt = Self {
            version: VERSION,
            mode,
            seq_no,
            pairs,
            frag_bitlen,
            payload,
            mac: [0; MAC_LEN],
        };
        pkt.check()?;
        pkt.mac = compute_mac(&pkt.body(), k0.as_bytes());
        Ok(pkt)
    }

    fn check(&self) -> Result<(), PacketError> {
        let fail = |m: String| Err(PacketError::InvariantViolation(m));
        if self.version != VERSION {
            return fail(format!("unsupported version {}", self.version));
        }
        if self.pairs.len() != self.mode.pair_count() {
            return fail(format!(
                "{} mode carries {} pairs, not {}",
                self.mode,
                self.mode.pair_count(),
                self.pairs.len()
            ));
        }
        if self.frag_bitlen == 0 {
            return fail("empty fragment".into());
        }
        let needed = (self.frag_bitlen as usize).div_ceil(8);
        match self.mode {
            Mode::Base if self.payload.len() != needed => fail(format!(
                "payload is {} bytes, fragment needs exactly {needed}",
                self.payload.len()
            )),
            Mode::Hint if self.payload.len() < needed => fail(format!(
                "payload is {} bytes, fragment needs at least {needed}",
                self.payload.len()
            )),
            Mode::Base
                if !self.frag_bitlen.is_multiple_of(8) && self.payload[needed - 1] << (self.frag_bitlen % 8) != 0 =>
            {
                fail("nonzero padding bits after the fragment".into())
            }
            _ => Ok(()),
        }
    }

    /// Every encoded byte before the MAC.
    fn body(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&WIRE_MAGIC);
        out.push(self.version);
        out.push(self.mode.wire_byte());
        out.extend_from_slice(&self.seq_no.to_be_bytes());
        out.push(self.pairs.len() as u8);
        for pair in &self.pairs {
            out.extend_from_slice(&pair.x.to_be_bytes());
            out.extend_from_slice(&pair.y.to_be_bytes());
        }
        out.extend_from_slice(&self.frag_bitlen.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_LEN + PAIR_LEN * self.pairs.len() + 4 + self.payload.len() + MAC_LEN
    }

    pub fn encode(&self) -> Result<Vec<u8>, PacketError> {
        self.check()?;
        let mut out = self.body();
        out.extend_from_slice(&self.mac);
        Ok(out)
    }

    /// Parses a byte image without looking at the MAC. This is what an
    /// eavesdropper without K0 can do.
    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let malformed = |m: &str| PacketError::MalformedPacket(m.to_string());
        if bytes.len() < MIN_PACKET_LEN {
            return Err(malformed("truncated"));
        }
        if bytes[..2] != WIRE_MAGIC {
            return Err(malformed("bad magic"));
        }
        let version = bytes[2];
        if version != VERSION {
            return Err(malformed("unsupported version"));
        }
        let mode = Mode::from_wire(bytes[3]).ok_or_else(|| malformed("unknown mode"))?;
        let seq_no = u32::from_be_bytes(bytes[4..8].try_into().unwrap());
        let pair_count = bytes[8] as usize;
        if pair_count != mode.pair_count() {
            return Err(malformed("pair count does not match mode"));
        }
        let pairs_end = FIXED_HEADER_LEN + PAIR_LEN * pair_count;
        let payload_start = pairs_end + 4;
        if bytes.len() < payload_start + 1 + MAC_LEN {
            return Err(malformed("truncated"));
        }
        let pairs = bytes[FIXED_HEADER_LEN..pairs_end]
            .chunks_exact(PAIR_LEN)
            .map(|c| {
                EvalPair::new(
                    u64::from_be_bytes(c[..8].try_into().unwrap()),
                    u64::from_be_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        let frag_bitlen = u32::from_be_bytes(bytes[pairs_end..payload_start].try_into().unwrap());
        let mac_start = bytes.len() - MAC_LEN;
        let pkt = Self {
            version,
            mode,
            seq_no,
            pairs,
            frag_bitlen,
            payload: bytes[payload_start..mac_start].to_vec(),
            mac: bytes[mac_start..].try_into().unwrap(),
        };
        pkt.check().map_err(|e| match e {
            PacketError::InvariantViolation(m) => PacketError::MalformedPacket(m),
            other => other,
        })?;
        Ok(pkt)
    }

    pub fn fragment_bits(&self) -> usize {
        self.frag_bitlen as usize
    }
}

/// Reads the sequence number without any other validation.
pub fn peek_seq_no(bytes: &[u8]) -> Result<u32, PacketError> {
    bytes
        .get(4..8)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| PacketError::MalformedPacket("truncated".into()))
}

/// Authenticates a packet image and parses it. The MAC is checked over the raw
/// bytes before any field is interpreted.
pub fn verify(bytes: &[u8], k0: &MacKey) -> Result<JigsawPacket, PacketError> {
    if bytes.len() < MIN_PACKET_LEN {
        return Err(PacketError::MalformedPacket("truncated".into()));
    }
    let (body, tag) = bytes.split_at(bytes.len() - MAC_LEN);
    if !verify_mac(body, k0.as_bytes(), tag) {
        return Err(PacketError::MacMismatch);
    }
    JigsawPacket::decode(bytes)
}
