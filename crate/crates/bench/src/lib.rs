//! Inputs shared by the benchmarks.

use jigsaw_core::field::{poly_from_roots, FieldPoly};
use jigsaw_core::{KeyMaterial, MacKey, Mode, PrimeModulus, RawMessage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_message(len: usize, seed: u64) -> RawMessage {
    let mut rng = rng(seed);
    RawMessage::new((0..len).map(|_| rng.gen()).collect()).expect("non-empty")
}

pub fn keys(mode: Mode) -> KeyMaterial {
    KeyMaterial {
        k0: MacKey::new([0x42; 20]).expect("nonzero"),
        modulus: PrimeModulus::default(),
        mode,
    }
}

/// A monic polynomial with `degree` distinct roots below `bound`.
pub fn poly_with_roots(degree: usize, bound: u64, seed: u64) -> FieldPoly {
    let mut rng = rng(seed);
    let mut roots = Vec::with_capacity(degree);
    while roots.len() < degree {
        let r = rng.gen_range(0..bound);
        if !roots.contains(&r) {
            roots.push(r);
        }
    }
    poly_from_roots(&roots, PrimeModulus::default()).expect("distinct roots")
}
