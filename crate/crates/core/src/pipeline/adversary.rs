//! A generic attacker that holds some captured packets but not K0.
//!
//! It decodes whatever it captured (MACs are irrelevant to it), and then:
//!
//! 1. if it knows `p`, runs the honest receiver's algebra;
//! 2. otherwise, or if that fails, searches arrangements of the captured
//!    fragments directly: every ordering of the complete set, then every
//!    ordering with a hole where a short missing fragment would go, trying
//!    each possible filling of the hole. In hint mode each hypothesized
//!    ordering fixes every fragment's global start and therefore its offset
//!    inside the payload.
//!
//! Every candidate arrangement counts against the budget.

use std::collections::HashMap;

use bitvec::field::BitField;

use super::receiver::{reconstruct_packets, validate};
use super::PipelineError;
use crate::aont::{Block, HeaderProbe, RawMessage, BLOCK_LEN};
use crate::field::PrimeModulus;
use crate::jigsaw::{bits_from_bytes, local_offset, message_from_bits, next_permutation, Bits};
use crate::packet::{JigsawPacket, Mode};

pub const DEFAULT_ATTACK_BUDGET: u64 = 1_000_000;

const BLOCK_BITS: u64 = (BLOCK_LEN * 8) as u64;

/// Holes this long have too many fillings to search.
const HOLE_LIMIT: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackOutcome {
    pub recovered: Option<RawMessage>,
    pub candidates_tried: u64,
    pub budget_exhausted: bool,
}

impl AttackOutcome {
    pub fn is_recovered(&self) -> bool {
        self.recovered.is_some()
    }
}

struct Search {
    budget: u64,
    tried: u64,
}

impl Search {
    fn exhausted(&self) -> bool {
        self.tried >= self.budget
    }

    fn attempt(&mut self, bits: &Bits) -> Option<RawMessage> {
        self.tried += 1;
        validate(bits).ok()
    }
}

/// `modulus` is `Some` when the attacker knows `p`.
pub fn adversary_reconstruct<P: AsRef<[u8]>>(
    captured: &[P],
    modulus: Option<PrimeModulus>,
    budget: u64,
) -> AttackOutcome {
    let packets = largest_session(captured);
    let mut search = Search { budget, tried: 0 };
    let done = |search: &Search, recovered: Option<RawMessage>| AttackOutcome {
        budget_exhausted: recovered.is_none() && search.exhausted(),
        recovered,
        candidates_tried: search.tried,
    };
    if packets.is_empty() || budget == 0 {
        return done(&search, None);
    }

    if let Some(m) = modulus {
        match reconstruct_packets(&packets, m) {
            Ok(r) => {
                search.tried += r.candidates_tried;
                return done(&search, Some(r.message));
            }
            Err(PipelineError::ReassemblyExhausted { tried }) => search.tried += tried,
            Err(PipelineError::IntegrityFailure(_)) => search.tried += 1,
            Err(_) => {}
        }
    }

    let recovered = ordering_search(&packets, &mut search);
    done(&search, recovered)
}

// Decodes what it can and keeps the most common sequence number.
fn largest_session<P: AsRef<[u8]>>(captured: &[P]) -> Vec<JigsawPacket> {
    let decoded: Vec<JigsawPacket> = captured
        .iter()
        .filter_map(|b| JigsawPacket::decode(b.as_ref()).ok())
        .collect();
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for p in &decoded {
        *counts.entry(p.seq_no).or_default() += 1;
    }
    let Some((&seq, _)) = counts.iter().max_by_key(|(&s, &c)| (c, std::cmp::Reverse(s))) else {
        return Vec::new();
    };
    decoded.into_iter().filter(|p| p.seq_no == seq).collect()
}

enum Piece<'a> {
    Packet(&'a JigsawPacket),
    Gap(u64),
}

impl Piece<'_> {
    fn len(&self) -> u64 {
        match self {
            Piece::Packet(p) => p.frag_bitlen as u64,
            Piece::Gap(g) => *g,
        }
    }
}

// The fragment a packet would hold if it started at global offset `start`.
fn fragment_at(pkt: &JigsawPacket, start: u64) -> Bits {
    let len = pkt.fragment_bits();
    match pkt.mode {
        Mode::Base => bits_from_bytes(&pkt.payload, len),
        Mode::Hint => {
            let payload_bits = pkt.payload.len() as u64 * 8;
            let at = local_offset(start, len as u64, payload_bits) as usize;
            Bits::from_slice(&pkt.payload)[at..at + len].to_bitvec()
        }
    }
}

fn assemble(pieces: &[Piece<'_>]) -> Bits {
    let mut out = Bits::with_capacity(pieces.iter().map(|p| p.len() as usize).sum());
    for piece in pieces {
        let start = out.len() as u64;
        match piece {
            Piece::Packet(pkt) => out.extend_from_bitslice(&fragment_at(pkt, start)),
            Piece::Gap(g) => out.resize(out.len() + *g as usize, false),
        }
    }
    out
}

fn ordering_search(packets: &[JigsawPacket], search: &mut Search) -> Option<RawMessage> {
    let captured_bits: u64 = packets.iter().map(|p| p.frag_bitlen as u64).sum();
    let mut order: Vec<usize> = (0..packets.len()).collect();

    if captured_bits.is_multiple_of(BLOCK_BITS) {
        loop {
            if search.exhausted() {
                return None;
            }
            let pieces: Vec<Piece> = order.iter().map(|&i| Piece::Packet(&packets[i])).collect();
            if let Some(m) = search.attempt(&assemble(&pieces)) {
                return Some(m);
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
    }

    // One missing fragment. If it is shorter than a block, its length is
    // forced by alignment; the hole then goes at each slot of each ordering
    // and its contents are enumerated as far as the budget allows. Holes of
    // HOLE_LIMIT bits or more are not worth a guess.
    let gap = match captured_bits % BLOCK_BITS {
        0 => BLOCK_BITS,
        r => BLOCK_BITS - r,
    };
    if gap >= HOLE_LIMIT {
        return None;
    }
    let combos = (packets.len() as u64 + 1) * (1..=packets.len() as u64).product::<u64>();
    let fillings = (search.budget.saturating_sub(search.tried) / combos).clamp(1, 1 << gap);
    for slot in 0..=packets.len() {
        order.sort_unstable();
        loop {
            if search.exhausted() {
                return None;
            }
            let mut pieces: Vec<Piece> = order.iter().map(|&i| Piece::Packet(&packets[i])).collect();
            pieces.insert(slot, Piece::Gap(gap));
            let gap_start: u64 = pieces[..slot].iter().map(Piece::len).sum();
            if let Some(m) = try_fillings(assemble(&pieces), gap_start, gap, fillings, search) {
                return Some(m);
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
    }
    None
}

// Fills `[start, start + len)` with 0, 1, 2, ... (at most `count` values, each
// one candidate), running the full frame check only on fillings whose header
// block decodes.
fn try_fillings(mut bits: Bits, start: u64, len: u64, count: u64, search: &mut Search) -> Option<RawMessage> {
    let Ok(t) = message_from_bits(&bits) else {
        search.tried += 1;
        return None;
    };
    let Some(probe) = HeaderProbe::new(&t) else {
        search.tried += 1;
        return None;
    };
    let (start, len) = (start as usize, len as usize);
    let first_block = start / BLOCK_BITS as usize;
    let last_block = (start + len.max(1) - 1) / BLOCK_BITS as usize;
    for value in 0..count {
        if search.exhausted() {
            return None;
        }
        search.tried += 1;
        bits[start..start + len].store_be::<u64>(value);
        let changed: Vec<(usize, Block)> = (first_block..=last_block)
            .map(|b| {
                let from = b * BLOCK_BITS as usize;
                (
                    b,
                    bits[from..from + BLOCK_BITS as usize].load_be::<u128>().to_be_bytes(),
                )
            })
            .collect();
        if probe.plausible(&changed) {
            if let Ok(m) = validate(&bits) {
                return Some(m);
            }
        }
    }
    None
}
