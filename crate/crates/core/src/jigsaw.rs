//! Cutting the transformed message into pieces and putting them back.
//!
//! Split positions are bit offsets into the transformed message. In base mode
//! the receiver learns them as the roots of one global polynomial and fits the
//! unlabelled fragments into the gaps by length, trying every arrangement of
//! equal-length fragments until the AONT frame check passes. In hint mode
//! every fragment is buried at a derived offset inside a fixed-size random
//! payload and carries its own quadratic whose roots are its global start and
//! end, so placement is direct.

use std::collections::BTreeMap;

use bitvec::prelude::*;
use rand::{seq::index::sample, RngCore};
use thiserror::Error;

use crate::aont::{TransformedMessage, BLOCK_LEN};
use crate::field::{
    find_roots_scan, interpolate_monic, poly_from_roots, EvalPair, FieldError, FieldPoly, PrimeModulus,
};

/// MSB-first bit string; byte images carry the tail in the high bits of the
/// last byte with the low bits zero.
pub type Bits = BitVec<u8, Msb0>;

pub const DEFAULT_MAX_FRAGMENTS: usize = 8;

/// Evaluation points for the per-fragment quadratic.
pub const HINT_POINTS: [u64; 2] = [1, 2];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JigsawError {
    #[error("need at least one fragment")]
    NoFragments,
    #[error("{total_bits} bits cannot be cut into {n} nonempty fragments")]
    MessageTooSmall { total_bits: u64, n: usize },
    #[error("{n} fragments exceeds the configured maximum of {max}")]
    TooManyFragments { n: usize, max: usize },
    #[error("split positions {positions:?} are not strictly inside (0, {total_bits})")]
    InvalidSplit { positions: Vec<u64>, total_bits: u64 },
    #[error("split spec covers {spec} bits but the message has {message}")]
    SpecMismatch { spec: u64, message: u64 },
    #[error("fragment lengths do not match the segment lengths implied by the roots")]
    LengthMismatch,
    #[error("no candidate arrangement validated after {tried} attempts")]
    Exhausted { tried: u64 },
    #[error("fragment of {len} bits does not fit in a {payload_bits}-bit payload")]
    FragmentTooLarge { len: u64, payload_bits: u64 },
    #[error("roots ({start}, {end}) describe a span that does not fit a {payload_bits}-bit payload")]
    InconsistentRoots { start: u64, end: u64, payload_bits: u64 },
    #[error("degenerate interval: start and end are both {0}")]
    DegenerateInterval(u64),
    #[error("placed fragments do not tile the message: {0}")]
    Tiling(String),
    #[error("{0} bits is not a whole number of 128-bit blocks")]
    NotBlockAligned(u64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub fn bits_from_bytes(bytes: &[u8], bit_len: usize) -> Bits {
    let mut bits = Bits::from_slice(bytes);
    bits.truncate(bit_len);
    bits
}

/// Byte image with the unused low bits of the final byte cleared.
pub fn bits_to_bytes(bits: &BitSlice<u8, Msb0>) -> Vec<u8> {
    // Copy into a fresh zeroed buffer: a sliced BitVec may keep a nonzero
    // head offset into its first byte.
    let mut out = Bits::repeat(false, bits.len().div_ceil(8) * 8);
    out[..bits.len()].copy_from_bitslice(bits);
    out.into_vec()
}

pub fn message_bits(t: &TransformedMessage) -> Bits {
    Bits::from_vec(t.to_bytes())
}

pub fn message_from_bits(bits: &BitSlice<u8, Msb0>) -> Result<TransformedMessage, JigsawError> {
    if !bits.len().is_multiple_of(BLOCK_LEN * 8) {
        return Err(JigsawError::NotBlockAligned(bits.len() as u64));
    }
    TransformedMessage::from_bytes(&bits_to_bytes(bits)).map_err(|_| JigsawError::NotBlockAligned(bits.len() as u64))
}

/// The N-1 split offsets of one message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    positions: Vec<u64>,
    total_bits: u64,
}

impl SplitSpec {
    pub fn new(positions: Vec<u64>, total_bits: u64) -> Result<Self, JigsawError> {
        let inside = positions.first().is_none_or(|&p| p > 0)
            && positions.last().is_none_or(|&p| p < total_bits)
            && positions.windows(2).all(|w| w[0] < w[1]);
        if !inside || total_bits == 0 {
            return Err(JigsawError::InvalidSplit { positions, total_bits });
        }
        Ok(Self { positions, total_bits })
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    pub fn fragment_count(&self) -> usize {
        self.positions.len() + 1
    }

    /// `[start, end)` of every fragment, in message order.
    pub fn segments(&self) -> Vec<(u64, u64)> {
        boundaries(&self.positions, self.total_bits)
    }
}

fn boundaries(positions: &[u64], total_bits: u64) -> Vec<(u64, u64)> {
    let mut cuts = Vec::with_capacity(positions.len() + 2);
    cuts.push(0);
    cuts.extend_from_slice(positions);
    cuts.push(total_bits);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    pub bits: Bits,
    pub index_hint: Option<usize>,
}

impl Fragment {
    pub fn new(bits: Bits) -> Self {
        Self { bits, index_hint: None }
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

pub fn make_splits<R: RngCore>(total_bits: u64, n: usize, rng: &mut R) -> Result<SplitSpec, JigsawError> {
    make_splits_capped(total_bits, n, DEFAULT_MAX_FRAGMENTS, rng)
}

/// Draws N-1 distinct positions uniformly from `[1, L-1]`.
pub fn make_splits_capped<R: RngCore>(
    total_bits: u64,
    n: usize,
    max_fragments: usize,
    rng: &mut R,
) -> Result<SplitSpec, JigsawError> {
    if n == 0 {
        return Err(JigsawError::NoFragments);
    }
    if n > max_fragments {
        return Err(JigsawError::TooManyFragments { n, max: max_fragments });
    }
    if total_bits < n as u64 {
        return Err(JigsawError::MessageTooSmall { total_bits, n });
    }
    let mut positions: Vec<u64> = sample(rng, (total_bits - 1) as usize, n - 1)
        .into_iter()
        .map(|i| i as u64 + 1)
        .collect();
    positions.sort_unstable();
    SplitSpec::new(positions, total_bits)
}

pub fn split(t: &TransformedMessage, spec: &SplitSpec) -> Result<Vec<Fragment>, JigsawError> {
    split_bits(&message_bits(t), spec)
}

pub fn split_bits(bits: &BitSlice<u8, Msb0>, spec: &SplitSpec) -> Result<Vec<Fragment>, JigsawError> {
    if bits.len() as u64 != spec.total_bits() {
        return Err(JigsawError::SpecMismatch {
            spec: spec.total_bits(),
            message: bits.len() as u64,
        });
    }
    Ok(spec
        .segments()
        .into_iter()
        .enumerate()
        .map(|(i, (start, end))| Fragment {
            bits: bits[start as usize..end as usize].to_bitvec(),
            index_hint: Some(i),
        })
        .collect())
}

/// Concatenates fragments in the given order.
pub fn join(fragments: &[Fragment]) -> Bits {
    let mut out = Bits::with_capacity(fragments.iter().map(|f| f.bits.len()).sum());
    for f in fragments {
        out.extend_from_bitslice(&f.bits);
    }
    out
}

struct TieGroup {
    slots: Vec<usize>,
    pieces: Vec<Bits>,
    perm: Vec<usize>,
}

/// Candidate reassemblies in a fixed order.
///
/// Fragments are matched to the gaps between recovered roots by length.
/// Within each group of equal-length gaps the fragments are sorted by their
/// bits and every permutation is produced in lexicographic order; groups are
/// ordered by length with the longest-length group varying fastest.
pub struct Candidates {
    groups: Vec<TieGroup>,
    segment_count: usize,
    total_bits: u64,
    done: bool,
    yielded: u64,
}

impl Candidates {
    /// How many candidates the full enumeration produces.
    pub fn total(&self) -> u128 {
        self.groups
            .iter()
            .map(|g| (1..=g.pieces.len() as u128).product::<u128>())
            .fold(1u128, |acc, f| acc.saturating_mul(f))
    }

    pub fn yielded(&self) -> u64 {
        self.yielded
    }

    fn current(&self) -> Bits {
        let mut order: Vec<Option<&Bits>> = vec![None; self.segment_count];
        for g in &self.groups {
            for (slot, &piece) in g.slots.iter().zip(&g.perm) {
                order[*slot] = Some(&g.pieces[piece]);
            }
        }
        let mut out = Bits::with_capacity(self.total_bits as usize);
        for piece in order.into_iter().flatten() {
            out.extend_from_bitslice(piece);
        }
        out
    }

    fn advance(&mut self) {
        for g in self.groups.iter_mut().rev() {
            if next_permutation(&mut g.perm) {
                return;
            }
            g.perm.sort_unstable();
        }
        self.done = true;
    }
}

impl Iterator for Candidates {
    type Item = Bits;

    fn next(&mut self) -> Option<Bits> {
        if self.done {
            return None;
        }
        let out = self.current();
        self.yielded += 1;
        self.advance();
        Some(out)
    }
}

pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Sets up trial-and-error reassembly from unordered fragments and the sorted
/// split roots.
pub fn reassemble_base(fragments: Vec<Fragment>, roots: &[u64], total_bits: u64) -> Result<Candidates, JigsawError> {
    if fragments.len() != roots.len() + 1 {
        return Err(JigsawError::LengthMismatch);
    }
    let spec = SplitSpec::new(roots.to_vec(), total_bits).map_err(|_| JigsawError::LengthMismatch)?;
    let segments = spec.segments();

    let mut slots_by_len: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (start, end)) in segments.iter().enumerate() {
        slots_by_len.entry(end - start).or_default().push(i);
    }
    let mut pieces_by_len: BTreeMap<u64, Vec<Bits>> = BTreeMap::new();
    for f in fragments {
        pieces_by_len.entry(f.len()).or_default().push(f.bits);
    }
    if slots_by_len.len() != pieces_by_len.len() {
        return Err(JigsawError::LengthMismatch);
    }

    let mut groups = Vec::with_capacity(slots_by_len.len());
    for ((slot_len, slots), (piece_len, mut pieces)) in slots_by_len.into_iter().zip(pieces_by_len) {
        if slot_len != piece_len || slots.len() != pieces.len() {
            return Err(JigsawError::LengthMismatch);
        }
        pieces.sort();
        groups.push(TieGroup {
            perm: (0..pieces.len()).collect(),
            slots,
            pieces,
        });
    }
    Ok(Candidates {
        groups,
        segment_count: segments.len(),
        total_bits,
        done: false,
        yielded: 0,
    })
}

/// A fragment buried in a fixed-size payload of random filler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HintEmbedding {
    pub g_start: u64,
    pub g_end: u64,
    pub payload: Bits,
}

/// Where inside an S-bit payload a fragment of `len` bits starting at global
/// offset `g_start` sits.
pub fn local_offset(g_start: u64, len: u64, payload_bits: u64) -> u64 {
    g_start % (payload_bits - len + 1)
}

pub fn embed_hint<R: RngCore>(
    fragment: &Fragment,
    g_start: u64,
    payload_bits: u64,
    rng: &mut R,
) -> Result<HintEmbedding, JigsawError> {
    let len = fragment.len();
    if len == 0 || len > payload_bits {
        return Err(JigsawError::FragmentTooLarge { len, payload_bits });
    }
    let mut filler = vec![0u8; payload_bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut filler);
    let mut payload = bits_from_bytes(&filler, payload_bits as usize);
    let at = local_offset(g_start, len, payload_bits) as usize;
    payload[at..at + len as usize].copy_from_bitslice(&fragment.bits);
    Ok(HintEmbedding {
        g_start,
        g_end: g_start + len,
        payload,
    })
}

/// A fragment with its global position in the transformed message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedFragment {
    pub start: u64,
    pub bits: Bits,
}

impl PlacedFragment {
    pub fn end(&self) -> u64 {
        self.start + self.bits.len() as u64
    }
}

pub fn extract_hint(
    payload: &BitSlice<u8, Msb0>,
    roots: (u64, u64),
    payload_bits: u64,
) -> Result<PlacedFragment, JigsawError> {
    let (start, end) = roots;
    let inconsistent = JigsawError::InconsistentRoots {
        start,
        end,
        payload_bits,
    };
    if start >= end || end - start > payload_bits || (payload.len() as u64) < payload_bits {
        return Err(inconsistent);
    }
    let len = end - start;
    let at = local_offset(start, len, payload_bits) as usize;
    Ok(PlacedFragment {
        start,
        bits: payload[at..at + len as usize].to_bitvec(),
    })
}

/// Puts hint-mode fragments in place; they must tile `[0, total_bits)`.
pub fn place_fragments(mut placed: Vec<PlacedFragment>, total_bits: u64) -> Result<Bits, JigsawError> {
    placed.sort_by_key(|p| p.start);
    let mut out = Bits::with_capacity(total_bits as usize);
    for p in &placed {
        if p.start != out.len() as u64 {
            return Err(JigsawError::Tiling(format!(
                "fragment at {} follows coverage ending at {}",
                p.start,
                out.len()
            )));
        }
        out.extend_from_bitslice(&p.bits);
    }
    if out.len() as u64 != total_bits {
        return Err(JigsawError::Tiling(format!(
            "coverage ends at {} of {total_bits} bits",
            out.len()
        )));
    }
    Ok(out)
}

/// The monic quadratic with roots `g_start` and `g_end`, and its values at the
/// two hint points.
pub fn quad_poly_for_fragment(
    g_start: u64,
    g_end: u64,
    modulus: PrimeModulus,
) -> Result<(FieldPoly, [EvalPair; 2]), JigsawError> {
    if g_start == g_end {
        return Err(JigsawError::DegenerateInterval(g_start));
    }
    let poly = poly_from_roots(&[g_start, g_end], modulus)?;
    let pairs = HINT_POINTS.map(|x| EvalPair::new(x, poly.eval(x)));
    Ok((poly, pairs))
}

/// Receiver side of the hint: rebuild the quadratic from its two pairs and
/// scan for its roots below `bound`. Returns them sorted when there are
/// exactly two.
pub fn hint_roots(pairs: &[EvalPair], modulus: PrimeModulus, bound: u64) -> Result<Vec<u64>, JigsawError> {
    let poly = interpolate_monic(pairs, modulus)?;
    Ok(find_roots_scan(&poly, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_PRIME;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut impl Rng, len: usize) -> Bits {
        (0..len).map(|_| rng.gen::<bool>()).collect()
    }

    #[test]
    fn split_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(make_splits(100, 1, &mut rng).unwrap().positions().is_empty());
        let two = make_splits(100, 2, &mut rng).unwrap();
        assert_eq!(two.positions().len(), 1);
        assert!((1..=99).contains(&two.positions()[0]));
        assert_eq!(
            make_splits(3, 4, &mut rng),
            Err(JigsawError::MessageTooSmall { total_bits: 3, n: 4 })
        );
        assert_eq!(
            make_splits(1000, 9, &mut rng),
            Err(JigsawError::TooManyFragments { n: 9, max: 8 })
        );
        assert_eq!(make_splits(4, 4, &mut rng).unwrap().positions(), &[1, 2, 3]);
    }

    #[test]
    fn split_positions_are_uniform() {
        // Chi-square over 10 buckets of [1, 999]; 27.88 is the 0.999 quantile
        // for 9 degrees of freedom.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0u64; 10];
        let draws = 10_000;
        for _ in 0..draws {
            for &p in make_splits(1000, 4, &mut rng).unwrap().positions() {
                counts[((p - 1) * 10 / 999) as usize] += 1;
            }
        }
        let mut width = [0u64; 10];
        for p in 1..=999u64 {
            width[((p - 1) * 10 / 999) as usize] += 1;
        }
        let total = (draws * 3) as f64;
        let chi2: f64 = counts
            .iter()
            .zip(width)
            .map(|(&c, w)| {
                let expected = total * w as f64 / 999.0;
                (c as f64 - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn split_lengths() {
        let t = TransformedMessage::from_bytes(&[0xAB; 4]).unwrap_err();
        assert!(matches!(t, crate::aont::AontError::LengthNotBlockAligned(4)));
        let bits = Bits::from_vec(vec![0xF0, 0x0F, 0xAA, 0x55]);
        let spec = SplitSpec::new(vec![8, 16], 32).unwrap();
        let frags = split_bits(&bits, &spec).unwrap();
        let lens: Vec<u64> = frags.iter().map(Fragment::len).collect();
        assert_eq!(lens, vec![8, 8, 16]);
        assert_eq!(join(&frags), bits);
        let whole = split_bits(&bits, &SplitSpec::new(vec![], 32).unwrap()).unwrap();
        assert_eq!(whole.len(), 1);
        assert_eq!(whole[0].bits, bits);
        assert!(matches!(
            split_bits(&bits, &SplitSpec::new(vec![], 33).unwrap()),
            Err(JigsawError::SpecMismatch { .. })
        ));
    }

    #[test]
    fn invalid_specs() {
        assert!(SplitSpec::new(vec![0], 10).is_err());
        assert!(SplitSpec::new(vec![10], 10).is_err());
        assert!(SplitSpec::new(vec![4, 4], 10).is_err());
        assert!(SplitSpec::new(vec![5, 4], 10).is_err());
    }

    #[test]
    fn distinct_lengths_give_one_candidate() {
        let bits = Bits::from_vec(vec![1, 2, 3, 4, 5, 6]);
        let spec = SplitSpec::new(vec![5, 17], 48).unwrap();
        let mut frags = split_bits(&bits, &spec).unwrap();
        frags.reverse();
        let cands: Vec<Bits> = reassemble_base(frags, spec.positions(), 48).unwrap().collect();
        assert_eq!(cands, vec![bits]);
    }

    #[test]
    fn tied_lengths_enumerate_permutations() {
        let bits = Bits::from_vec(vec![0x11, 0x22, 0x33, 0x44]);
        let spec = SplitSpec::new(vec![8, 16], 32).unwrap();
        let frags = split_bits(&bits, &spec).unwrap();
        let cands = reassemble_base(frags, spec.positions(), 32).unwrap();
        assert_eq!(cands.total(), 2);
        let all: Vec<Bits> = cands.collect();
        assert_eq!(all.len(), 2);
        assert!(all.contains(&bits));
        // Lexicographic: the smaller 8-bit piece goes first.
        assert_eq!(bits_to_bytes(&all[0]), vec![0x11, 0x22, 0x33, 0x44]);
        assert_eq!(bits_to_bytes(&all[1]), vec![0x22, 0x11, 0x33, 0x44]);
    }

    #[test]
    fn enumeration_order_ignores_input_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits = random_bits(&mut rng, 64);
        let spec = SplitSpec::new(vec![8, 16, 24, 40, 56], 64).unwrap();
        let frags = split_bits(&bits, &spec).unwrap();
        let mut shuffled = frags.clone();
        shuffled.rotate_left(2);
        let a: Vec<Bits> = reassemble_base(frags, spec.positions(), 64).unwrap().collect();
        let b: Vec<Bits> = reassemble_base(shuffled, spec.positions(), 64).unwrap().collect();
        assert_eq!(a.len(), 24 * 2);
        assert_eq!(a, b);
        assert!(a.contains(&bits));
    }

    #[test]
    fn length_mismatch() {
        let bits = Bits::from_vec(vec![1, 2, 3, 4]);
        let frags = split_bits(&bits, &SplitSpec::new(vec![8], 32).unwrap()).unwrap();
        assert!(matches!(
            reassemble_base(frags.clone(), &[12], 32),
            Err(JigsawError::LengthMismatch)
        ));
        assert!(matches!(
            reassemble_base(frags, &[], 32),
            Err(JigsawError::LengthMismatch)
        ));
    }

    #[test]
    fn full_size_fragment_sits_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let frag = Fragment::new(random_bits(&mut rng, 40));
        for g in [0, 7, 1000] {
            let h = embed_hint(&frag, g, 40, &mut rng).unwrap();
            assert_eq!(h.payload, frag.bits);
        }
        assert!(matches!(
            embed_hint(&frag, 0, 39, &mut rng),
            Err(JigsawError::FragmentTooLarge {
                len: 40,
                payload_bits: 39
            })
        ));
    }

    #[test]
    fn filler_is_balanced() {
        // Monobit test over all filler bits; 4 sigma band.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut ones, mut total) = (0u64, 0u64);
        for _ in 0..10_000 {
            let len = rng.gen_range(1..=64);
            let frag = Fragment::new(Bits::repeat(true, len));
            let g = rng.gen_range(0..10_000);
            let h = embed_hint(&frag, g, 128, &mut rng).unwrap();
            let at = local_offset(g, len as u64, 128) as usize;
            for (i, bit) in h.payload.iter().by_vals().enumerate() {
                if i < at || i >= at + len {
                    ones += bit as u64;
                    total += 1;
                }
            }
        }
        let deviation = (ones as f64 - total as f64 / 2.0).abs();
        assert!(deviation < 4.0 * (total as f64).sqrt() / 2.0, "{ones} of {total}");
    }

    #[test]
    fn extract_rejects_oversized_span() {
        let payload = Bits::repeat(false, 16);
        assert!(matches!(
            extract_hint(&payload, (0, 17), 16),
            Err(JigsawError::InconsistentRoots { .. })
        ));
    }

    #[test]
    fn quadratic_hint_pairs() {
        let m = PrimeModulus::public(97).unwrap();
        let (poly, pairs) = quad_poly_for_fragment(2, 5, m).unwrap();
        assert_eq!(poly.coeffs(), &[10, 90, 1]);
        assert_eq!(pairs, [EvalPair::new(1, 4), EvalPair::new(2, 0)]);
        assert_eq!(quad_poly_for_fragment(3, 3, m), Err(JigsawError::DegenerateInterval(3)));
        assert_eq!(hint_roots(&pairs, m, 97).unwrap(), vec![2, 5]);
    }

    #[test]
    fn tiling_detects_gaps() {
        let a = PlacedFragment {
            start: 0,
            bits: Bits::repeat(true, 4),
        };
        let b = PlacedFragment {
            start: 5,
            bits: Bits::repeat(false, 3),
        };
        assert!(matches!(
            place_fragments(vec![a.clone(), b], 8),
            Err(JigsawError::Tiling(_))
        ));
        let c = PlacedFragment {
            start: 4,
            bits: Bits::repeat(false, 4),
        };
        assert_eq!(place_fragments(vec![c.clone(), a.clone()], 8).unwrap().count_ones(), 4);
        assert!(matches!(place_fragments(vec![a, c], 9), Err(JigsawError::Tiling(_))));
    }

    proptest! {
        #[test]
        fn split_then_join(bytes in proptest::collection::vec(any::<u8>(), 1..64), n in 1usize..=8, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bits = Bits::from_vec(bytes);
            prop_assume!(bits.len() >= n);
            let spec = make_splits(bits.len() as u64, n, &mut rng).unwrap();
            let frags = split_bits(&bits, &spec).unwrap();
            prop_assert_eq!(frags.iter().map(Fragment::len).sum::<u64>(), bits.len() as u64);
            prop_assert_eq!(join(&frags), bits.clone());
            prop_assert!(reassemble_base(frags, spec.positions(), bits.len() as u64).unwrap().any(|c| c == bits));
        }

        #[test]
        fn embed_extract_round_trip(len in 1usize..200, extra in 0u64..200, g in 0u64..1_000_000, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frag = Fragment::new(random_bits(&mut rng, len));
            let s = len as u64 + extra;
            let h = embed_hint(&frag, g, s, &mut rng).unwrap();
            prop_assert_eq!(h.payload.len() as u64, s);
            let placed = extract_hint(&h.payload, (h.g_start, h.g_end), s).unwrap();
            prop_assert_eq!(placed.start, g);
            prop_assert_eq!(placed.bits, frag.bits);
        }

        #[test]
        fn quadratic_round_trip(a in 0u64..1_000_000, b in 0u64..1_000_000) {
            prop_assume!(a != b);
            let m = PrimeModulus::public(DEFAULT_PRIME).unwrap();
            let (_, pairs) = quad_poly_for_fragment(a, b, m).unwrap();
            let bound = a.max(b) + 1;
            prop_assert_eq!(hint_roots(&pairs, m, bound).unwrap(), vec![a.min(b), a.max(b)]);
        }
    }
}
