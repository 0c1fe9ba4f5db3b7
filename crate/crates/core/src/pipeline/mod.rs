//! End-to-end sender and receiver.
//!
//! Sender: frame, AONT, cut at random bit offsets, encode the offsets as
//! polynomial roots, seal one packet per fragment. Receiver: check sequence
//! numbers, check every MAC, rebuild the polynomial(s), scan for roots, put
//! the fragments back and accept only what passes the frame check.

mod adversary;
mod receiver;
mod sender;

use thiserror::Error;

use crate::aont::AontError;
use crate::field::FieldError;
use crate::jigsaw::{JigsawError, DEFAULT_MAX_FRAGMENTS};
use crate::packet::{KeyMaterial, PacketError};

pub use adversary::{adversary_reconstruct, AttackOutcome, DEFAULT_ATTACK_BUDGET};
pub use receiver::{receive_reconstruct, receive_with_report, reconstruct_packets, Reconstruction};
pub use sender::{send_prepare, SendAudit, SendResult};

/// Attempts to draw hint-mode splits whose largest fragment fits the payload.
const HINT_SPLIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PipelineError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("modulus {p} must exceed the {bits}-bit message length")]
    ModulusTooSmall { p: u64, bits: u64 },
    #[error(transparent)]
    Aont(#[from] AontError),
    #[error(transparent)]
    Jigsaw(#[from] JigsawError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error("sequence number mismatch: packet {index} has {found:#010x}, expected {expected:#010x}")]
    SeqMismatch { index: usize, expected: u32, found: u32 },
    #[error("MAC mismatch: packet {index} failed authentication ({rejected} rejected in total)")]
    MacMismatch { index: usize, rejected: usize },
    #[error("malformed packet {index}: {reason}")]
    MalformedPacket { index: usize, reason: String },
    #[error("packets mix base and hint mode")]
    MixedModes,
    #[error("interpolation failure: {0}")]
    InterpolationFailure(String),
    #[error("root count mismatch: expected {expected}, found {found}{}", packet.map(|p| format!(" (packet {p})")).unwrap_or_default())]
    RootCountMismatch {
        expected: usize,
        found: usize,
        packet: Option<usize>,
    },
    #[error("reassembly failed: {0}")]
    ReassemblyFailed(JigsawError),
    #[error("reassembly exhausted: no arrangement validated after {tried} candidates")]
    ReassemblyExhausted { tried: u64 },
    #[error("integrity failure: {0}")]
    IntegrityFailure(String),
}

impl PipelineError {
    /// The protocol gate that rejected the input.
    pub fn gate(&self) -> &'static str {
        match self {
            PipelineError::SeqMismatch { .. } => "seq",
            PipelineError::MacMismatch { .. } => "mac",
            PipelineError::MalformedPacket { .. } | PipelineError::MixedModes => "format",
            PipelineError::InterpolationFailure(_) | PipelineError::RootCountMismatch { .. } => "roots",
            PipelineError::ReassemblyFailed(_) | PipelineError::ReassemblyExhausted { .. } => "reassembly",
            PipelineError::IntegrityFailure(_) => "integrity",
            _ => "sender",
        }
    }

    /// Variant name, as used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "Config",
            PipelineError::ModulusTooSmall { .. } => "ModulusTooSmall",
            PipelineError::Aont(_) => "Aont",
            PipelineError::Jigsaw(_) => "Jigsaw",
            PipelineError::Field(_) => "Field",
            PipelineError::Packet(_) => "Packet",
            PipelineError::SeqMismatch { .. } => "SeqMismatch",
            PipelineError::MacMismatch { .. } => "MacMismatch",
            PipelineError::MalformedPacket { .. } => "MalformedPacket",
            PipelineError::MixedModes => "MixedModes",
            PipelineError::InterpolationFailure(_) => "InterpolationFailure",
            PipelineError::RootCountMismatch { .. } => "RootCountMismatch",
            PipelineError::ReassemblyFailed(_) => "ReassemblyFailed",
            PipelineError::ReassemblyExhausted { .. } => "ReassemblyExhausted",
            PipelineError::IntegrityFailure(_) => "IntegrityFailure",
        }
    }

    /// Whether the receiver rejected its input (as opposed to the sender
    /// failing to build packets).
    pub fn is_protocol_rejection(&self) -> bool {
        self.gate() != "sender"
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub n: usize,
    pub keys: KeyMaterial,
    /// Hint-mode payload size in bits. Defaults to the transformed message
    /// length rounded up to a byte, which fits any fragment.
    pub payload_bits: Option<u64>,
    pub max_n: usize,
}

impl SessionConfig {
    pub fn new(n: usize, keys: KeyMaterial) -> Result<Self, PipelineError> {
        let cfg = Self {
            n,
            keys,
            payload_bits: None,
            max_n: DEFAULT_MAX_FRAGMENTS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_payload_bits(mut self, bits: u64) -> Result<Self, PipelineError> {
        self.payload_bits = Some(bits);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n < 2 || self.n > self.max_n {
            return Err(PipelineError::Config(format!(
                "packet count {} outside 2..={}",
                self.n, self.max_n
            )));
        }
        if let Some(s) = self.payload_bits {
            if s == 0 || s % 8 != 0 {
                return Err(PipelineError::Config(format!(
                    "hint payload size {s} must be a positive multiple of 8 bits"
                )));
            }
        }
        Ok(())
    }
}
