use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore};
use serde::Serialize;

use super::{PipelineError, SessionConfig, HINT_SPLIT_ATTEMPTS};
use crate::aont::{aont_transform, frame, RawMessage};
use crate::field::{poly_from_roots, EvalPair};
use crate::jigsaw::{
    bits_to_bytes, embed_hint, make_splits_capped, quad_poly_for_fragment, split, JigsawError, SplitSpec,
};
use crate::packet::{JigsawPacket, Mode};

/// Sender-side record of a split. It contains the split positions, which
/// defeat the scheme if they leak; it is never transmitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SendAudit {
    pub seq_no: u32,
    pub mode: Mode,
    pub total_bits: u64,
    pub positions: Vec<u64>,
    /// Pairs carried by packet k.
    pub pairs: Vec<Vec<EvalPair>>,
    /// Fragment index carried by packet k.
    pub fragment_of_packet: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SendResult {
    pub seq_no: u32,
    pub packets: Vec<Vec<u8>>,
    pub audit: SendAudit,
}

pub fn send_prepare<R: RngCore + CryptoRng>(
    msg: &RawMessage,
    cfg: &SessionConfig,
    rng: &mut R,
) -> Result<SendResult, PipelineError> {
    cfg.validate()?;
    let keys = &cfg.keys;
    let modulus = keys.modulus;
    let n = cfg.n;

    let transformed = aont_transform(&frame(msg), rng)?;
    let total_bits = transformed.bit_length();
    if total_bits > u32::MAX as u64 {
        return Err(PipelineError::Config(format!(
            "message of {total_bits} bits is too large"
        )));
    }
    // Roots live in [0, L], evaluation points in [1, N].
    if modulus.p() <= total_bits.max(n as u64) {
        return Err(PipelineError::ModulusTooSmall {
            p: modulus.p(),
            bits: total_bits,
        });
    }

    let spec = match keys.mode {
        Mode::Base => make_splits_capped(total_bits, n, cfg.max_n, rng)?,
        Mode::Hint => hint_splits(total_bits, cfg, rng)?,
    };
    let fragments = split(&transformed, &spec)?;
    let segments = spec.segments();

    // Packet k carries fragment order[k]; nothing on the wire ties a packet's
    // position or evaluation point to its fragment's place in the message.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let seq_no = rng.next_u32();

    let mut packets = Vec::with_capacity(n);
    let mut audit_pairs = Vec::with_capacity(n);
    match keys.mode {
        Mode::Base => {
            let poly = poly_from_roots(spec.positions(), modulus)?;
            for (k, &frag_idx) in order.iter().enumerate() {
                let x = k as u64 + 1;
                let pairs = vec![EvalPair::new(x, poly.eval(x))];
                let frag = &fragments[frag_idx];
                let pkt = JigsawPacket::seal(
                    Mode::Base,
                    seq_no,
                    pairs.clone(),
                    frag.len() as u32,
                    bits_to_bytes(&frag.bits),
                    &keys.k0,
                )?;
                packets.push(pkt.encode()?);
                audit_pairs.push(pairs);
            }
        }
        Mode::Hint => {
            let payload_bits = hint_payload_bits(total_bits, cfg);
            for &frag_idx in &order {
                let (g_start, g_end) = segments[frag_idx];
                let (_, pairs) = quad_poly_for_fragment(g_start, g_end, modulus)?;
                let frag = &fragments[frag_idx];
                let embedding = embed_hint(frag, g_start, payload_bits, rng)?;
                let pkt = JigsawPacket::seal(
                    Mode::Hint,
                    seq_no,
                    pairs.to_vec(),
                    frag.len() as u32,
                    bits_to_bytes(&embedding.payload),
                    &keys.k0,
                )?;
                packets.push(pkt.encode()?);
                audit_pairs.push(pairs.to_vec());
            }
        }
    }

    Ok(SendResult {
        seq_no,
        packets,
        audit: SendAudit {
            seq_no,
            mode: keys.mode,
            total_bits,
            positions: spec.positions().to_vec(),
            pairs: audit_pairs,
            fragment_of_packet: order,
        },
    })
}

fn hint_payload_bits(total_bits: u64, cfg: &SessionConfig) -> u64 {
    cfg.payload_bits.unwrap_or_else(|| total_bits.div_ceil(8) * 8)
}

// Redraws until every fragment fits the configured payload.
fn hint_splits<R: RngCore>(total_bits: u64, cfg: &SessionConfig, rng: &mut R) -> Result<SplitSpec, PipelineError> {
    let payload_bits = hint_payload_bits(total_bits, cfg);
    let mut longest = 0;
    for _ in 0..HINT_SPLIT_ATTEMPTS {
        let spec = make_splits_capped(total_bits, cfg.n, cfg.max_n, rng)?;
        longest = spec.segments().iter().map(|(s, e)| e - s).max().unwrap_or(0);
        if longest <= payload_bits {
            return Ok(spec);
        }
    }
    Err(JigsawError::FragmentTooLarge {
        len: longest,
        payload_bits,
    }
    .into())
}
