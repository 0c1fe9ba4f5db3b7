//! Encryption-less multipath dispersal.
//!
//! A message is framed, passed through an all-or-nothing transform, cut at
//! random bit offsets into N fragments, and sent as N authenticated packets
//! over disjoint routes. The cut positions travel as roots of a polynomial
//! over a prime field, so the receiver needs every packet to put the message
//! back together.

pub mod aont;
pub mod field;
pub mod jigsaw;
pub mod packet;
pub mod pipeline;
pub mod simnet;

pub use aont::{AontError, RawMessage};
pub use field::{is_prime, random_prime, FieldError, PrimeModulus, Secrecy, DEFAULT_PRIME};
pub use jigsaw::{JigsawError, DEFAULT_MAX_FRAGMENTS};
pub use packet::{JigsawPacket, KeyError, KeyMaterial, MacKey, Mode, PacketError};
pub use pipeline::{
    adversary_reconstruct, receive_reconstruct, receive_with_report, send_prepare, AttackOutcome, PipelineError,
    SendAudit, SendResult, SessionConfig, DEFAULT_ATTACK_BUDGET,
};
pub use simnet::{
    deliver, disjoint_paths, run_experiment, write_csv, AdversaryModel, Behavior, ExperimentConfig, ExperimentReport,
    SimError, Topology,
};
