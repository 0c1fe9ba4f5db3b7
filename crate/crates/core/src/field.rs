//! Prime-field arithmetic and the polynomial codec that carries split
//! positions: build a monic polynomial from its roots, evaluate it, rebuild it
//! from evaluation pairs, and recover the roots by a bounded scan.
//!
//! Field elements are plain `u64` values in `[0, p)` with `p < 2^64`. Products
//! are formed in 128 bits and reduced exactly.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 2^61 - 1, the default public modulus.
pub const DEFAULT_PRIME: u64 = (1 << 61) - 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("duplicate root {0}")]
    DuplicateRoot(u64),
    #[error("root {root} is not below the modulus {p}")]
    RootOutOfRange { root: u64, p: u64 },
    #[error("duplicate evaluation point x = {0}")]
    DuplicateX(u64),
    #[error("evaluation pair ({x}, {y}) is not reduced modulo {p}")]
    PairOutOfRange { x: u64, y: u64, p: u64 },
    #[error("interpolation needs at least one pair")]
    NoPairs,
    #[error("singular interpolation system")]
    SingularSystem,
}

/// Whether the modulus is shared with everyone who sees the packets or kept
/// between sender and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Secrecy {
    #[default]
    Public,
    Secret,
}

/// A prime modulus below 2^64. Construction runs a deterministic primality
/// test, so holding one is proof the value is prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeModulus {
    p: u64,
    secrecy: Secrecy,
}

impl PrimeModulus {
    pub fn new(p: u64, secrecy: Secrecy) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self { p, secrecy })
    }

    pub fn public(p: u64) -> Result<Self, FieldError> {
        Self::new(p, Secrecy::Public)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn secrecy(&self) -> Secrecy {
        self.secrecy
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u64 {
        v % self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let (s, carry) = a.overflowing_add(b);
        if carry || s >= self.p {
            s.wrapping_sub(self.p)
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.p)
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }

    /// Multiplicative inverse of a nonzero element (Fermat).
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p - 2))
        }
    }
}

impl Default for PrimeModulus {
    fn default() -> Self {
        Self {
            p: DEFAULT_PRIME,
            secrecy: Secrecy::Public,
        }
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

fn pow_mod(base: u64, mut exp: u64, m: u64) -> u64 {
    let m128 = m as u128;
    let mut acc: u128 = 1 % m128;
    let mut b = (base % m) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin. The first twelve primes as witnesses are
/// sufficient for every n < 2^64.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n.is_multiple_of(w) {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = (x as u128 * x as u128 % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A uniformly drawn prime in `[2^62, 2^64)`, for keeping `p` secret.
pub fn random_prime<R: rand::Rng + ?Sized>(rng: &mut R) -> u64 {
    loop {
        let candidate = rng.gen_range(1u64 << 62..=u64::MAX) | 1;
        if is_prime(candidate) {
            return candidate;
        }
    }
}

/// A point on the polynomial, `(x, P(x) mod p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EvalPair {
    pub x: u64,
    pub y: u64,
}

impl EvalPair {
    pub fn new(x: u64, y: u64) -> Self {
        Self { x, y }
    }
}

/// Polynomial over GF(p), constant term first. Trailing zero coefficients are
/// trimmed so the last entry is the leading coefficient; the zero polynomial
/// is stored as `[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPoly {
    coeffs: Vec<u64>,
    modulus: PrimeModulus,
}

impl FieldPoly {
    /// Builds a polynomial from raw coefficients, reducing each mod p.
    pub fn from_coeffs(coeffs: Vec<u64>, modulus: PrimeModulus) -> Self {
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| modulus.reduce(c)).collect();
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        Self { coeffs, modulus }
    }

    pub fn constant(c: u64, modulus: PrimeModulus) -> Self {
        Self::from_coeffs(vec![c], modulus)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn modulus(&self) -> &PrimeModulus {
        &self.modulus
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs == [0]
    }

    pub fn leading(&self) -> u64 {
        *self.coeffs.last().unwrap()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: u64) -> u64 {
        let m = &self.modulus;
        let x = m.reduce(x);
        self.coeffs.iter().rev().fold(0, |acc, &c| m.add(m.mul(acc, x), c))
    }
}

/// Monic `prod (x - r)` over the given roots.
pub fn poly_from_roots(roots: &[u64], modulus: PrimeModulus) -> Result<FieldPoly, FieldError> {
    let mut seen = std::collections::HashSet::with_capacity(roots.len());
    for &r in roots {
        if r >= modulus.p() {
            return Err(FieldError::RootOutOfRange {
                root: r,
                p: modulus.p(),
            });
        }
        if !seen.insert(r) {
            return Err(FieldError::DuplicateRoot(r));
        }
    }
    Ok(FieldPoly::from_coeffs(product_of_linears(roots, &modulus), modulus))
}

// Coefficients of prod (x - r), constant first, length roots.len() + 1.
fn product_of_linears(roots: &[u64], m: &PrimeModulus) -> Vec<u64> {
    let mut coeffs = Vec::with_capacity(roots.len() + 1);
    coeffs.push(1u64);
    for &r in roots {
        let neg_r = m.neg(m.reduce(r));
        coeffs.push(0);
        for k in (0..coeffs.len()).rev() {
            let shifted = if k > 0 { coeffs[k - 1] } else { 0 };
            coeffs[k] = m.add(shifted, m.mul(coeffs[k], neg_r));
        }
    }
    coeffs
}

pub fn poly_eval(poly: &FieldPoly, x: u64) -> u64 {
    poly.eval(x)
}

fn check_pairs(pairs: &[EvalPair], m: &PrimeModulus) -> Result<(), FieldError> {
    let mut seen = std::collections::HashSet::with_capacity(pairs.len());
    for pair in pairs {
        if pair.x >= m.p() || pair.y >= m.p() {
            return Err(FieldError::PairOutOfRange {
                x: pair.x,
                y: pair.y,
                p: m.p(),
            });
        }
        if !seen.insert(pair.x) {
            return Err(FieldError::DuplicateX(pair.x));
        }
    }
    Ok(())
}

// Lagrange coefficients without validation; the caller has checked the pairs.
fn lagrange(pairs: &[EvalPair], m: &PrimeModulus) -> Result<Vec<u64>, FieldError> {
    let n = pairs.len();
    let xs: Vec<u64> = pairs.iter().map(|p| p.x).collect();
    // Master product prod (x - x_j); each basis numerator is it divided by (x - x_i).
    let master = product_of_linears(&xs, m);
    let mut result = vec![0u64; n];
    for (i, pair) in pairs.iter().enumerate() {
        let mut denom = 1u64;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                denom = m.mul(denom, m.sub(pair.x, xj));
            }
        }
        let scale = m.mul(pair.y, m.inv(denom).ok_or(FieldError::SingularSystem)?);
        if scale == 0 {
            continue;
        }
        // Synthetic division of master by (x - x_i).
        let mut carry = 0u64;
        for k in (0..n).rev() {
            carry = m.add(master[k + 1], m.mul(carry, pair.x));
            result[k] = m.add(result[k], m.mul(carry, scale));
        }
    }
    Ok(result)
}

/// Lagrange interpolation: the unique polynomial of degree below `pairs.len()`
/// through every pair.
pub fn poly_interpolate(pairs: &[EvalPair], modulus: PrimeModulus) -> Result<FieldPoly, FieldError> {
    if pairs.is_empty() {
        return Err(FieldError::NoPairs);
    }
    check_pairs(pairs, &modulus)?;
    Ok(FieldPoly::from_coeffs(lagrange(pairs, &modulus)?, modulus))
}

/// The unique monic polynomial of degree `pairs.len()` through every pair.
///
/// A monic degree-d polynomial has d free coefficients, so d pairs pin it:
/// it equals `prod (x - x_j)` plus the Lagrange polynomial of the pairs.
pub fn interpolate_monic(pairs: &[EvalPair], modulus: PrimeModulus) -> Result<FieldPoly, FieldError> {
    check_pairs(pairs, &modulus)?;
    let xs: Vec<u64> = pairs.iter().map(|p| p.x).collect();
    let mut coeffs = product_of_linears(&xs, &modulus);
    for (c, l) in coeffs.iter_mut().zip(lagrange(pairs, &modulus)?) {
        *c = modulus.add(*c, l);
    }
    Ok(FieldPoly::from_coeffs(coeffs, modulus))
}

/// Every `r` in `[0, bound)` with `P(r) = 0`, ascending.
///
/// Walks the range with a forward-difference table, so each step costs
/// `degree` modular additions. A zero polynomial vanishes everywhere and
/// returns the whole range.
pub fn find_roots_scan(poly: &FieldPoly, bound: u64) -> Vec<u64> {
    let m = *poly.modulus();
    let bound = bound.min(m.p());
    let d = poly.degree();
    if poly.is_zero() {
        return (0..bound).collect();
    }
    if d == 0 {
        return Vec::new();
    }
    if bound <= d as u64 + 1 {
        return (0..bound).filter(|&r| poly.eval(r) == 0).collect();
    }

    // diffs[k] holds the k-th forward difference at the current point.
    let mut diffs: Vec<u64> = (0..=d as u64).map(|x| poly.eval(x)).collect();
    for k in 1..=d {
        for i in (k..=d).rev() {
            diffs[i] = m.sub(diffs[i], diffs[i - 1]);
        }
    }

    let mut roots = Vec::with_capacity(d);
    for r in 0..bound {
        if diffs[0] == 0 {
            roots.push(r);
        }
        for k in 0..d {
            diffs[k] = m.add(diffs[k], diffs[k + 1]);
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::index::sample, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p97() -> PrimeModulus {
        PrimeModulus::public(97).unwrap()
    }

    fn trial_division(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2u64;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn roots_to_coefficients() {
        assert_eq!(poly_from_roots(&[], p97()).unwrap().coeffs(), &[1]);
        assert_eq!(poly_from_roots(&[2, 5], p97()).unwrap().coeffs(), &[10, 90, 1]);
        assert_eq!(poly_from_roots(&[0], p97()).unwrap().coeffs(), &[0, 1]);
    }

    #[test]
    fn roots_rejected() {
        assert_eq!(poly_from_roots(&[3, 3], p97()), Err(FieldError::DuplicateRoot(3)));
        assert_eq!(
            poly_from_roots(&[97], p97()),
            Err(FieldError::RootOutOfRange { root: 97, p: 97 })
        );
    }

    #[test]
    fn horner_values() {
        let poly = FieldPoly::from_coeffs(vec![10, 90, 1], p97());
        assert_eq!(poly_eval(&poly, 1), 4);
        assert_eq!(poly_eval(&poly, 2), 0);
        let c = FieldPoly::constant(42, p97());
        for x in [0, 1, 50, 96] {
            assert_eq!(c.eval(x), 42);
        }
    }

    #[test]
    fn interpolation_examples() {
        let pairs = [EvalPair::new(1, 4), EvalPair::new(3, 95), EvalPair::new(4, 95)];
        assert_eq!(poly_interpolate(&pairs, p97()).unwrap().coeffs(), &[10, 90, 1]);
        assert_eq!(poly_interpolate(&[EvalPair::new(5, 7)], p97()).unwrap().coeffs(), &[7]);
        assert_eq!(
            poly_interpolate(&[EvalPair::new(1, 1), EvalPair::new(1, 2)], p97()),
            Err(FieldError::DuplicateX(1))
        );
        assert_eq!(poly_interpolate(&[], p97()), Err(FieldError::NoPairs));
    }

    #[test]
    fn monic_quadratic_from_two_pairs() {
        let poly = interpolate_monic(&[EvalPair::new(1, 4), EvalPair::new(2, 0)], p97()).unwrap();
        assert_eq!(poly.coeffs(), &[10, 90, 1]);
        assert_eq!(find_roots_scan(&poly, 97), vec![2, 5]);
    }

    #[test]
    fn scan_examples() {
        let poly = FieldPoly::from_coeffs(vec![10, 90, 1], p97());
        assert_eq!(find_roots_scan(&poly, 97), vec![2, 5]);
        assert_eq!(find_roots_scan(&poly, 5), vec![2]);
        assert!(find_roots_scan(&FieldPoly::constant(1, p97()), 97).is_empty());
        assert_eq!(find_roots_scan(&FieldPoly::constant(0, p97()), 4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn scan_matches_horner_everywhere() {
        // Brute force over the whole field for a handful of small polynomials.
        let m = PrimeModulus::public(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let deg = rng.gen_range(0..7);
            let coeffs: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..101)).collect();
            let poly = FieldPoly::from_coeffs(coeffs, m);
            let bound = rng.gen_range(0..=101);
            let expected: Vec<u64> = (0..bound).filter(|&r| poly.eval(r) == 0).collect();
            assert_eq!(find_roots_scan(&poly, bound), expected);
        }
    }

    #[test]
    fn random_primes_are_large_primes() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(8);
        let a = random_prime(&mut rng);
        let b = random_prime(&mut rng);
        assert_ne!(a, b);
        for p in [a, b] {
            assert!(p >= 1 << 62);
            assert!(is_prime(p));
        }
    }

    #[test]
    fn primality() {
        assert!(is_prime(DEFAULT_PRIME));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(2));
        assert!(!is_prime((1 << 61) - 3));
        assert_eq!(((1u64 << 61) - 3) % 29, 0);
        assert!(is_prime(18_446_744_073_709_551_557)); // largest prime below 2^64
        assert!(!is_prime(u64::MAX));
        // Strong pseudoprime to bases 2..=11.
        assert!(!is_prime(3_215_031_751));
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn not_prime_modulus_rejected() {
        assert_eq!(PrimeModulus::public(15), Err(FieldError::NotPrime(15)));
    }

    #[test]
    fn arithmetic_near_the_top() {
        let m = PrimeModulus::public(18_446_744_073_709_551_557).unwrap();
        let a = m.p() - 1;
        assert_eq!(m.add(a, a), m.p() - 2);
        assert_eq!(m.sub(0, 1), m.p() - 1);
        assert_eq!(m.mul(a, a), 1);
        assert_eq!(m.mul(m.inv(12345).unwrap(), 12345), 1);
    }

    #[test]
    fn root_recovery_identity_large_prime() {
        let m = PrimeModulus::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let k = rng.gen_range(0..=7);
            let mut roots: Vec<u64> = sample(&mut rng, 999_999, k).into_iter().map(|r| r as u64 + 1).collect();
            let poly = poly_from_roots(&roots, m).unwrap();
            roots.sort_unstable();
            let bound = roots.last().map_or(1, |r| r + 1);
            assert_eq!(find_roots_scan(&poly, bound), roots);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn interpolate_inverts_evaluation(
            roots in proptest::collection::hash_set(0u64..DEFAULT_PRIME, 0..=7)
        ) {
            let m = PrimeModulus::default();
            let roots: Vec<u64> = roots.into_iter().collect();
            let poly = poly_from_roots(&roots, m).unwrap();
            let pairs: Vec<EvalPair> = (1..=roots.len() as u64 + 1)
                .map(|x| EvalPair::new(x, poly.eval(x)))
                .collect();
            let back = poly_interpolate(&pairs, m).unwrap();
            prop_assert_eq!(back.coeffs(), poly.coeffs());
            prop_assert_eq!(back.leading(), 1);
            // The same polynomial from one fewer pair via the monic route.
            let monic = interpolate_monic(&pairs[..roots.len()], m).unwrap();
            prop_assert_eq!(monic.coeffs(), poly.coeffs());
        }

        #[test]
        fn results_stay_reduced(a in any::<u64>(), b in any::<u64>()) {
            let m = PrimeModulus::public(18_446_744_073_709_551_557).unwrap();
            let (a, b) = (m.reduce(a), m.reduce(b));
            prop_assert!(m.add(a, b) < m.p());
            prop_assert!(m.sub(a, b) < m.p());
            prop_assert!(m.mul(a, b) < m.p());
            prop_assert_eq!(m.add(m.sub(a, b), b), a);
        }
    }
}
