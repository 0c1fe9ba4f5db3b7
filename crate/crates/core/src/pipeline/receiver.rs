use std::collections::HashMap;

use super::PipelineError;
use crate::aont::{aont_inverse, unframe, RawMessage};
use crate::field::{find_roots_scan, poly_interpolate, EvalPair, PrimeModulus};
use crate::jigsaw::{
    bits_from_bytes, extract_hint, hint_roots, message_from_bits, place_fragments, reassemble_base, Bits, Fragment,
    JigsawError,
};
use crate::packet::{peek_seq_no, verify, JigsawPacket, KeyMaterial, Mode, PacketError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    pub message: RawMessage,
    /// Reassembly candidates run through the frame check, including the
    /// accepted one.
    pub candidates_tried: u64,
}

pub fn receive_reconstruct<P: AsRef<[u8]>>(packets: &[P], keys: &KeyMaterial) -> Result<RawMessage, PipelineError> {
    receive_with_report(packets, keys).map(|r| r.message)
}

/// Full receiver: sequence numbers, then MACs, then the algebra.
pub fn receive_with_report<P: AsRef<[u8]>>(packets: &[P], keys: &KeyMaterial) -> Result<Reconstruction, PipelineError> {
    check_sequence_numbers(packets)?;

    let mut verified = Vec::with_capacity(packets.len());
    let mut first_bad = None;
    let mut rejected = 0;
    for (index, bytes) in packets.iter().enumerate() {
        match verify(bytes.as_ref(), &keys.k0) {
            Ok(pkt) => verified.push(pkt),
            Err(PacketError::MacMismatch) => {
                rejected += 1;
                first_bad.get_or_insert(index);
            }
            Err(e) => {
                return Err(PipelineError::MalformedPacket {
                    index,
                    reason: e.to_string(),
                })
            }
        }
    }
    if let Some(index) = first_bad {
        return Err(PipelineError::MacMismatch { index, rejected });
    }
    reconstruct_packets(&verified, keys.modulus)
}

fn check_sequence_numbers<P: AsRef<[u8]>>(packets: &[P]) -> Result<(), PipelineError> {
    let mut seqs = Vec::with_capacity(packets.len());
    for (index, bytes) in packets.iter().enumerate() {
        let seq = peek_seq_no(bytes.as_ref()).map_err(|e| PipelineError::MalformedPacket {
            index,
            reason: e.to_string(),
        })?;
        seqs.push(seq);
    }
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for &s in &seqs {
        *counts.entry(s).or_default() += 1;
    }
    // Majority value, ties to the earliest packet.
    let Some(expected) = seqs
        .iter()
        .copied()
        .max_by_key(|s| (counts[s], std::cmp::Reverse(seqs.iter().position(|x| x == s))))
    else {
        return Ok(());
    };
    match seqs.iter().position(|&s| s != expected) {
        Some(index) => Err(PipelineError::SeqMismatch {
            index,
            expected,
            found: seqs[index],
        }),
        None => Ok(()),
    }
}

/// Everything after authentication: rebuild polynomials, find roots, place
/// fragments, check the frame. Also used by an attacker who holds `p`.
pub fn reconstruct_packets(packets: &[JigsawPacket], modulus: PrimeModulus) -> Result<Reconstruction, PipelineError> {
    if packets.len() < 2 {
        return Err(PipelineError::InterpolationFailure(format!(
            "{} packet(s) cannot carry a split message",
            packets.len()
        )));
    }
    let mode = packets[0].mode;
    if packets.iter().any(|p| p.mode != mode) {
        return Err(PipelineError::MixedModes);
    }
    let total_bits: u64 = packets.iter().map(|p| p.frag_bitlen as u64).sum();
    match mode {
        Mode::Base => reconstruct_base(packets, modulus, total_bits),
        Mode::Hint => reconstruct_hint(packets, modulus, total_bits),
    }
}

fn reconstruct_base(
    packets: &[JigsawPacket],
    modulus: PrimeModulus,
    total_bits: u64,
) -> Result<Reconstruction, PipelineError> {
    let pairs: Vec<EvalPair> = packets.iter().map(|p| p.pairs[0]).collect();
    let poly = poly_interpolate(&pairs, modulus).map_err(|e| PipelineError::InterpolationFailure(e.to_string()))?;
    let roots = find_roots_scan(&poly, total_bits);
    if roots.len() != packets.len() - 1 {
        return Err(PipelineError::RootCountMismatch {
            expected: packets.len() - 1,
            found: roots.len(),
            packet: None,
        });
    }
    let fragments: Vec<Fragment> = packets
        .iter()
        .map(|p| Fragment::new(bits_from_bytes(&p.payload, p.fragment_bits())))
        .collect();
    let candidates = reassemble_base(fragments, &roots, total_bits).map_err(PipelineError::ReassemblyFailed)?;

    let mut tried = 0u64;
    let mut last_failure = String::new();
    for candidate in candidates {
        tried += 1;
        match validate(&candidate) {
            Ok(message) => {
                return Ok(Reconstruction {
                    message,
                    candidates_tried: tried,
                })
            }
            Err(reason) => last_failure = reason,
        }
    }
    if tried == 1 {
        Err(PipelineError::IntegrityFailure(last_failure))
    } else {
        Err(PipelineError::ReassemblyExhausted { tried })
    }
}

fn reconstruct_hint(
    packets: &[JigsawPacket],
    modulus: PrimeModulus,
    total_bits: u64,
) -> Result<Reconstruction, PipelineError> {
    let mut placed = Vec::with_capacity(packets.len());
    for (index, pkt) in packets.iter().enumerate() {
        // A fragment may end exactly at L, so L itself is in range.
        let roots = hint_roots(&pkt.pairs, modulus, total_bits + 1)
            .map_err(|e| PipelineError::InterpolationFailure(e.to_string()))?;
        if roots.len() != 2 {
            return Err(PipelineError::RootCountMismatch {
                expected: 2,
                found: roots.len(),
                packet: Some(index),
            });
        }
        let (start, end) = (roots[0], roots[1]);
        let payload_bits = pkt.payload.len() as u64 * 8;
        if end - start != pkt.frag_bitlen as u64 {
            return Err(PipelineError::ReassemblyFailed(JigsawError::InconsistentRoots {
                start,
                end,
                payload_bits,
            }));
        }
        let payload = Bits::from_slice(&pkt.payload);
        placed.push(extract_hint(&payload, (start, end), payload_bits).map_err(PipelineError::ReassemblyFailed)?);
    }
    let bits = place_fragments(placed, total_bits).map_err(PipelineError::ReassemblyFailed)?;
    let message = validate(&bits).map_err(PipelineError::IntegrityFailure)?;
    Ok(Reconstruction {
        message,
        candidates_tried: 1,
    })
}

/// AONT inverse and frame check on one candidate.
pub(crate) fn validate(bits: &Bits) -> Result<RawMessage, String> {
    let transformed = message_from_bits(bits).map_err(|e| e.to_string())?;
    let framed = aont_inverse(&transformed).map_err(|e| e.to_string())?;
    unframe(&framed).map_err(|e| e.to_string())
}
