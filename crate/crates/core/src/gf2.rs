//! Exact arithmetic in GF(2)[x] and GF(2^m), and the diffusion map.
//!
//! A polynomial over GF(2) is a bit vector: bit `j` is the coefficient
//! of `x^j` (little-endian in the exponent). Reduction modulo a degree-m
//! generator `G(x)` lands in the residue field GF(2^m), represented as
//! an m-bit word in the polynomial basis `{1, x, ..., x^{m-1}}`.
//!
//! The diffusion map sends an input polynomial `P` to
//! `x^m * (P mod G + seed)` in GF(2^m), one LFSR pass per input bit.
//! With a primitive `G` it is GF(2)-affine in `P`, never maps a
//! non-kernel difference to zero, and scatters Hamming weights like a
//! uniform draw from the nonzero field elements.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest degree for which primitivity is established by exhaustive
/// order enumeration (2^24 steps). Beyond this, callers must attest.
pub const MAX_PRIMITIVITY_DEGREE: u32 = 24;

/// Largest degree representable in the `u64` residue word.
pub const MAX_DEGREE: u32 = 63;

// ---------------------------------------------------------------------------
// BitPolynomial
// ---------------------------------------------------------------------------

/// An element of GF(2)[x] of degree < `len`, bit `j` = coefficient of `x^j`.
///
/// The length is fixed at construction; the zero polynomial of length L
/// is distinct from the zero polynomial of any other length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitPolynomial {
    words: Vec<u64>,
    len: usize,
}

impl BitPolynomial {
    /// The zero polynomial of length `len`.
    pub fn zero(len: usize) -> Self {
        assert!(len > 0, "length must be positive");
        BitPolynomial {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// Polynomial from a low word; bits at or above `len` must be clear.
    pub fn from_word(value: u64, len: usize) -> Self {
        let mut p = Self::zero(len);
        assert!(
            len >= 64 || value >> len == 0,
            "value 0x{value:x} does not fit in {len} bits"
        );
        p.words[0] = value;
        p
    }

    /// The monomial `x^j` of length `len` (requires `j < len`).
    pub fn monomial(j: usize, len: usize) -> Self {
        let mut p = Self::zero(len);
        p.set(j, true);
        p
    }

    /// Random polynomial of length `len` from the given word source.
    pub fn random(len: usize, rng: &mut crate::rng::CounterRng) -> Self {
        let mut p = Self::zero(len);
        for w in p.words.iter_mut() {
            *w = rng.next_u64();
        }
        p.mask_tail();
        p
    }

    fn mask_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << tail) - 1;
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false // length is always positive
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn get(&self, j: usize) -> bool {
        assert!(j < self.len, "bit {j} out of range for length {}", self.len);
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        assert!(j < self.len, "bit {j} out of range for length {}", self.len);
        if value {
            self.words[j / 64] |= 1u64 << (j % 64);
        } else {
            self.words[j / 64] &= !(1u64 << (j % 64));
        }
    }

    /// Coefficient-wise XOR (addition in GF(2)[x]); lengths must match.
    pub fn xor(&self, other: &BitPolynomial) -> Result<BitPolynomial> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitPolynomial {
            words,
            len: self.len,
        })
    }

    /// Bits `[start, start + count)` as a shorter polynomial.
    pub fn segment(&self, start: usize, count: usize) -> BitPolynomial {
        assert!(start + count <= self.len, "segment out of range");
        let mut out = BitPolynomial::zero(count);
        for j in 0..count {
            if self.get(start + j) {
                out.set(j, true);
            }
        }
        out
    }

    /// Zero-pad on the high end to `len` (identity if already that long).
    pub fn zero_extend(&self, len: usize) -> Result<BitPolynomial> {
        if len < self.len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: self.len,
            });
        }
        let mut out = BitPolynomial::zero(len);
        out.words[..self.words.len()].copy_from_slice(&self.words);
        Ok(out)
    }

    /// Canonical little-endian byte image (used as an exact-match key).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 + self.words.len() * 8);
        bytes.extend_from_slice(&(self.len as u64).to_le_bytes());
        for w in &self.words {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<BitPolynomial> {
        if bytes.len() < 8 {
            return Err(Error::Parse("polynomial image too short".into()));
        }
        let len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        if len == 0 {
            return Err(Error::Parse("zero-length polynomial".into()));
        }
        let n_words = len.div_ceil(64);
        if bytes.len() != 8 + n_words * 8 {
            return Err(Error::Parse("polynomial image length mismatch".into()));
        }
        let mut words = Vec::with_capacity(n_words);
        for i in 0..n_words {
            let off = 8 + i * 8;
            words.push(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
        }
        let mut p = BitPolynomial { words, len };
        let masked = {
            let mut q = p.clone();
            q.mask_tail();
            q
        };
        if masked != p {
            return Err(Error::Parse("bits set beyond declared length".into()));
        }
        p.mask_tail();
        Ok(p)
    }

    /// `p:<hex>;L=<len>` with the most significant nibble first.
    pub fn to_hex_string(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut hex = String::with_capacity(nibbles);
        for i in (0..nibbles).rev() {
            let mut nib = 0u8;
            for b in 0..4 {
                let j = i * 4 + b;
                if j < self.len && self.get(j) {
                    nib |= 1 << b;
                }
            }
            hex.push(char::from_digit(nib as u32, 16).unwrap());
        }
        format!("p:{hex};L={}", self.len)
    }

    pub fn from_hex_string(text: &str) -> Result<BitPolynomial> {
        let body = text
            .strip_prefix("p:")
            .ok_or_else(|| Error::Parse(format!("missing p: prefix in {text:?}")))?;
        let (hex, tail) = body
            .split_once(";L=")
            .ok_or_else(|| Error::Parse(format!("missing ;L= suffix in {text:?}")))?;
        let len: usize = tail
            .parse()
            .map_err(|_| Error::Parse(format!("bad length in {text:?}")))?;
        if len == 0 {
            return Err(Error::Parse("zero-length polynomial".into()));
        }
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Parse(format!(
                "expected {} hex digits for L={len}",
                len.div_ceil(4)
            )));
        }
        let mut p = BitPolynomial::zero(len);
        for (pos, ch) in hex.chars().rev().enumerate() {
            let nib = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parse(format!("bad hex digit {ch:?}")))?
                as u8;
            for b in 0..4 {
                let j = pos * 4 + b;
                if nib >> b & 1 == 1 {
                    if j >= len {
                        return Err(Error::Parse("bits set beyond declared length".into()));
                    }
                    p.set(j, true);
                }
            }
        }
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Residue
// ---------------------------------------------------------------------------

/// An element of GF(2^m) in the polynomial basis; only the low `m` bits
/// of the word are meaningful under a degree-m generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Residue(pub u64);

impl Residue {
    pub const ZERO: Residue = Residue(0);
    pub const ONE: Residue = Residue(1);

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn hamming_weight(self) -> u32 {
        self.0.count_ones()
    }

    pub fn xor(self, other: Residue) -> Residue {
        Residue(self.0 ^ other.0)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:x}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

/// A degree-m modulus polynomial over GF(2) with a primitivity flag.
///
/// Bit `m` and bit 0 of the coefficient word are always set (monic,
/// nonzero constant term). `primitive_verified` is true only when the
/// multiplicative order of `x` has been checked to be exactly `2^m - 1`,
/// or when the caller attested it for degrees beyond the check bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    modulus: u64,
    degree: u32,
    primitive_verified: bool,
}

/// Built-in primitive moduli, one per supported degree. Each entry is
/// re-validated by `is_primitive` in this module's tests.
pub const BUILTIN_GENERATORS: &[(u32, u64)] = &[
    (4, 0x13),        // x^4 + x + 1
    (8, 0x11d),       // x^8 + x^4 + x^3 + x^2 + 1
    (10, 0x409),      // x^10 + x^3 + 1
    (16, 0x1100b),    // x^16 + x^12 + x^3 + x + 1
    (20, 0x100009),   // x^20 + x^3 + 1
    (24, 0x1000087),  // x^24 + x^7 + x^2 + x + 1
];

impl Generator {
    /// Validate shape and establish primitivity by order enumeration.
    ///
    /// Fails with `DegreeTooLarge` above degree 24; use
    /// [`Generator::attested`] for larger moduli.
    pub fn new(modulus: u64) -> Result<Generator> {
        let g = Self::shape_checked(modulus)?;
        if !is_primitive(&g)? {
            return Err(Error::ConfigInvalid(format!(
                "0x{modulus:x} is not primitive (order of x is below 2^{} - 1)",
                g.degree
            )));
        }
        Ok(Generator {
            primitive_verified: true,
            ..g
        })
    }

    /// Accept a modulus the caller asserts is primitive, skipping the
    /// order check. Shape invariants are still enforced.
    pub fn attested(modulus: u64) -> Result<Generator> {
        let g = Self::shape_checked(modulus)?;
        Ok(Generator {
            primitive_verified: true,
            ..g
        })
    }

    /// Validate shape only; `primitive_verified` stays false.
    pub fn unverified(modulus: u64) -> Result<Generator> {
        Self::shape_checked(modulus)
    }

    fn shape_checked(modulus: u64) -> Result<Generator> {
        if modulus == 0 {
            return Err(Error::Parse("zero modulus".into()));
        }
        let degree = 63 - modulus.leading_zeros();
        if degree < 2 {
            return Err(Error::ConfigInvalid(format!(
                "degree {degree} below the minimum of 2"
            )));
        }
        if modulus & 1 == 0 {
            return Err(Error::ConfigInvalid(
                "modulus must have a nonzero constant term".into(),
            ));
        }
        Ok(Generator {
            modulus,
            degree,
            primitive_verified: false,
        })
    }

    /// The built-in primitive generator of the given degree.
    ///
    /// Each table entry is validated by the order walk once per
    /// process, on first use; later calls are free.
    pub fn builtin(m: u32) -> Result<Generator> {
        static CHECKS: [std::sync::OnceLock<bool>; BUILTIN_GENERATORS.len()] =
            [const { std::sync::OnceLock::new() }; BUILTIN_GENERATORS.len()];
        let (index, (_, modulus)) = BUILTIN_GENERATORS
            .iter()
            .enumerate()
            .find(|(_, (deg, _))| *deg == m)
            .ok_or_else(|| {
                Error::ConfigInvalid(format!(
                    "no built-in generator of degree {m}; available: {:?}",
                    BUILTIN_GENERATORS.iter().map(|(d, _)| *d).collect::<Vec<_>>()
                ))
            })?;
        let ok = CHECKS[index].get_or_init(|| {
            Generator::unverified(*modulus)
                .and_then(|g| is_primitive(&g))
                .unwrap_or(false)
        });
        assert!(*ok, "built-in degree-{m} modulus 0x{modulus:x} failed validation");
        Generator::attested(*modulus)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn primitive_verified(&self) -> bool {
        self.primitive_verified
    }

    /// The residue of `x^m`, i.e. the low part of the modulus.
    pub fn x_to_m(&self) -> Residue {
        Residue(self.modulus ^ (1u64 << self.degree))
    }

    fn mask(&self) -> u64 {
        if self.degree == 63 {
            !(1u64 << 63)
        } else {
            (1u64 << self.degree) - 1
        }
    }

    /// Multiply a residue by `x` (one LFSR step).
    #[inline]
    pub fn times_x(&self, r: Residue) -> Residue {
        let shifted = r.0 << 1;
        if shifted >> self.degree & 1 == 1 {
            Residue((shifted ^ self.modulus) & self.mask())
        } else {
            Residue(shifted & self.mask())
        }
    }

    /// `g:<hex>` with the most significant nibble first.
    pub fn to_hex_string(&self) -> String {
        format!("g:{:x}", self.modulus)
    }

    /// Parse `g:<hex>`, establishing primitivity (or failing) as
    /// [`Generator::new`] does.
    pub fn from_hex_string(text: &str) -> Result<Generator> {
        let hex = text
            .strip_prefix("g:")
            .ok_or_else(|| Error::Parse(format!("missing g: prefix in {text:?}")))?;
        let modulus =
            u64::from_str_radix(hex, 16).map_err(|_| Error::Parse(format!("bad hex {hex:?}")))?;
        Generator::new(modulus)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// `P(x) mod G(x)`. GF(2)-linear in `P`; accepts any input length.
pub fn reduce(p: &BitPolynomial, g: &Generator) -> Residue {
    let mut r: u64 = 0;
    let m = g.degree;
    for j in (0..p.len()).rev() {
        r <<= 1;
        if p.get(j) {
            r |= 1;
        }
        if r >> m & 1 == 1 {
            r ^= g.modulus;
        }
    }
    Residue(r & g.mask())
}

/// Field multiplication in GF(2^m) (shift-and-add with reduction).
pub fn gf2_mul(a: Residue, b: Residue, g: &Generator) -> Residue {
    let mut acc = Residue::ZERO;
    let mut shifted = a;
    let mut rest = b.0 & g.mask();
    while rest != 0 {
        if rest & 1 == 1 {
            acc = acc.xor(shifted);
        }
        shifted = g.times_x(shifted);
        rest >>= 1;
    }
    acc
}

/// The diffusion map: `x^m * (P mod G + seed)` in GF(2^m).
///
/// With a zero seed this is the plain address map; any fixed seed is an
/// affine offset, so Hamming distances between diffused outputs do not
/// depend on it. Requires a verified-primitive generator.
pub fn diffuse(p: &BitPolynomial, g: &Generator, seed: Residue) -> Result<Residue> {
    if !g.primitive_verified {
        return Err(Error::UnverifiedGenerator {
            modulus: g.modulus,
            degree: g.degree,
        });
    }
    Ok(gf2_mul(reduce(p, g).xor(seed), g.x_to_m(), g))
}

/// True iff the multiplicative order of `x` mod `G` is exactly `2^m - 1`.
///
/// Exhaustive: steps the LFSR until the state returns to 1. If the order
/// comes out full, the unit group has 2^m - 1 elements, which already
/// forces `G` irreducible. Bounded at degree 24.
pub fn is_primitive(g: &Generator) -> Result<bool> {
    if g.degree > MAX_PRIMITIVITY_DEGREE {
        return Err(Error::DegreeTooLarge {
            m: g.degree,
            max: MAX_PRIMITIVITY_DEGREE,
        });
    }
    let full = (1u64 << g.degree) - 1;
    let mut state = Residue::ONE;
    for k in 1..=full {
        state = g.times_x(state);
        if state == Residue::ONE {
            return Ok(k == full);
        }
        if state.is_zero() {
            // x is a zero divisor; cannot happen with a nonzero constant term.
            return Ok(false);
        }
    }
    Ok(false)
}

/// Number of length-L inputs that reduce to zero: `2^max(L - m, 0)`.
///
/// Panics if `L - m` exceeds 127 (the count no longer fits in `u128`).
pub fn kernel_size(l: usize, m: u32) -> u128 {
    assert!(l >= 1 && m >= 2, "requires L >= 1 and m >= 2");
    let exp = l.saturating_sub(m as usize);
    assert!(exp <= 127, "kernel size 2^{exp} exceeds u128");
    1u128 << exp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    fn g10() -> Generator {
        Generator::new(0x409).unwrap()
    }

    fn g4() -> Generator {
        Generator::new(0x13).unwrap()
    }

    /// Long-division oracle, digit by digit over plain integers, kept
    /// independent of the word-sliding implementation in `reduce`.
    fn long_division_mod(mut value: u128, modulus: u128) -> u128 {
        let deg_m = 127 - modulus.leading_zeros();
        while value != 0 {
            let deg_v = 127 - value.leading_zeros();
            if deg_v < deg_m {
                break;
            }
            value ^= modulus << (deg_v - deg_m);
        }
        value
    }

    #[test]
    fn reduce_matches_long_division_oracle() {
        // x^10 mod (x^10 + x^3 + 1) = x^3 + 1
        assert_eq!(long_division_mod(1 << 10, 0x409), 0b1001);
        let p = BitPolynomial::monomial(10, 11);
        assert_eq!(reduce(&p, &g10()), Residue(0b1001));

        // degree < m is the identity
        let p = BitPolynomial::monomial(3, 4);
        assert_eq!(reduce(&p, &g4()), Residue(0b1000));

        // zero maps to zero
        assert_eq!(reduce(&BitPolynomial::zero(32), &g10()), Residue::ZERO);
    }

    #[test]
    fn reduce_random_inputs_match_oracle() {
        let mut rng = CounterRng::new(0xBEEF, 0);
        for _ in 0..200 {
            let p = BitPolynomial::random(48, &mut rng);
            let as_int = (p.words[0] as u128) & ((1 << 48) - 1);
            assert_eq!(
                reduce(&p, &g10()).bits() as u128,
                long_division_mod(as_int, 0x409)
            );
        }
    }

    #[test]
    fn mul_identity_annihilator_and_oracle() {
        let g = g4();
        for v in 0..16u64 {
            assert_eq!(gf2_mul(Residue::ONE, Residue(v), &g), Residue(v));
            assert_eq!(gf2_mul(Residue::ZERO, Residue(v), &g), Residue::ZERO);
        }
        // x * x^3 = x^4 = x + 1 mod x^4 + x + 1
        assert_eq!(
            gf2_mul(Residue(0b10), Residue(0b1000), &g),
            Residue(0b0011)
        );
        assert_eq!(long_division_mod(1 << 4, 0x13), 0b0011);
    }

    #[test]
    fn mul_commutes() {
        let g = g10();
        let mut rng = CounterRng::new(7, 1);
        for _ in 0..100 {
            let a = Residue(rng.next_below(1 << 10));
            let b = Residue(rng.next_below(1 << 10));
            assert_eq!(gf2_mul(a, b, &g), gf2_mul(b, a, &g));
        }
    }

    #[test]
    fn diffuse_basics() {
        let g = g10();
        // zero input, zero seed -> zero
        assert_eq!(
            diffuse(&BitPolynomial::zero(16), &g, Residue::ZERO).unwrap(),
            Residue::ZERO
        );
        // e0 -> x^10 mod G = x^3 + 1, weight 2
        let out = diffuse(&BitPolynomial::monomial(0, 16), &g, Residue::ZERO).unwrap();
        assert_eq!(out, Residue(0b1001));
        assert_eq!(out.hamming_weight(), 2);
    }

    #[test]
    fn diffuse_rejects_unverified_generator() {
        let g = Generator::unverified(0x409).unwrap();
        let err = diffuse(&BitPolynomial::zero(8), &g, Residue::ZERO).unwrap_err();
        assert!(matches!(err, Error::UnverifiedGenerator { .. }));
    }

    #[test]
    fn distances_do_not_depend_on_seed() {
        let g = g10();
        let mut rng = CounterRng::new(11, 0);
        let seeds = [Residue::ZERO, Residue::ONE, Residue(1 << 9)];
        for _ in 0..50 {
            let p1 = BitPolynomial::random(40, &mut rng);
            let p2 = BitPolynomial::random(40, &mut rng);
            let d: Vec<u32> = seeds
                .iter()
                .map(|&s| {
                    let a = diffuse(&p1, &g, s).unwrap();
                    let b = diffuse(&p2, &g, s).unwrap();
                    a.xor(b).hamming_weight()
                })
                .collect();
            assert!(d.windows(2).all(|w| w[0] == w[1]), "seed changed a distance");
        }
    }

    #[test]
    fn primitivity_examples() {
        assert!(is_primitive(&Generator::unverified(0x13).unwrap()).unwrap());
        // x^4 + x^3 + x^2 + x + 1 has order 5
        assert!(!is_primitive(&Generator::unverified(0x1f).unwrap()).unwrap());
        assert!(is_primitive(&Generator::unverified(0x409).unwrap()).unwrap());
        let big = Generator::unverified((1 << 30) | 0b11).unwrap();
        assert!(matches!(
            is_primitive(&big),
            Err(Error::DegreeTooLarge { m: 30, .. })
        ));
    }

    #[test]
    fn builtin_table_is_primitive() {
        for &(m, modulus) in BUILTIN_GENERATORS {
            let g = Generator::unverified(modulus).unwrap();
            assert_eq!(g.degree(), m);
            assert!(
                is_primitive(&g).unwrap(),
                "built-in degree-{m} modulus 0x{modulus:x} failed the order check"
            );
        }
    }

    #[test]
    fn cyclic_enumeration_small_degrees() {
        // Powers x^0..x^{2^m-2} are distinct and cover all nonzero residues.
        for m in [4u32, 8, 10] {
            let g = Generator::builtin(m).unwrap();
            let order = (1u64 << m) - 1;
            let mut seen = vec![false; 1 << m];
            let mut state = Residue::ONE;
            for _ in 0..order {
                assert!(!state.is_zero());
                assert!(!seen[state.bits() as usize], "repeat before full order");
                seen[state.bits() as usize] = true;
                state = g.times_x(state);
            }
            assert_eq!(state, Residue::ONE);
            assert_eq!(seen.iter().filter(|&&s| s).count() as u64, order);
        }
    }

    #[test]
    fn kernel_size_formula_and_brute_force() {
        assert_eq!(kernel_size(10, 10), 1);
        assert_eq!(kernel_size(13, 10), 8);
        assert_eq!(kernel_size(4, 10), 1);

        // Brute force: count length-7 inputs reducing to 0 under x^4+x+1.
        let g = g4();
        let count = (0u64..128)
            .filter(|&v| reduce(&BitPolynomial::from_word(v, 7), &g).is_zero())
            .count();
        assert_eq!(count as u128, kernel_size(7, 4));
    }

    #[test]
    fn uniform_fibers_brute_force() {
        // Every nonzero residue has exactly |K| preimages, for (L, m) in
        // {(7, 4), (12, 8)}.
        for (l, m) in [(7usize, 4u32), (12, 8)] {
            let g = Generator::builtin(m).unwrap();
            let mut counts = vec![0u64; 1 << m];
            for v in 0..(1u64 << l) {
                let r = reduce(&BitPolynomial::from_word(v, l), &g);
                counts[r.bits() as usize] += 1;
            }
            let expected = kernel_size(l, m) as u64;
            for (residue, &c) in counts.iter().enumerate() {
                assert_eq!(c, expected, "fiber size off at residue {residue:x}");
            }
        }
    }

    #[test]
    fn generator_serialization() {
        let g = Generator::builtin(10).unwrap();
        assert_eq!(g.to_hex_string(), "g:409");
        let back = Generator::from_hex_string("g:409").unwrap();
        assert_eq!(back.modulus(), 0x409);
        assert!(back.primitive_verified());
        assert_eq!(Generator::builtin(4).unwrap().to_hex_string(), "g:13");
        assert!(Generator::from_hex_string("409").is_err());
        assert!(Generator::from_hex_string("g:1f").is_err()); // not primitive
    }

    #[test]
    fn polynomial_serialization() {
        let p = BitPolynomial::from_word(0x409, 11);
        assert_eq!(p.to_hex_string(), "p:409;L=11");
        let back = BitPolynomial::from_hex_string("p:409;L=11").unwrap();
        assert_eq!(back, p);
        // leading-zero padding to the nibble count of L
        let q = BitPolynomial::from_word(0b1, 9);
        assert_eq!(q.to_hex_string(), "p:001;L=9");
        assert!(BitPolynomial::from_hex_string("p:fff;L=9").is_err());
        assert!(BitPolynomial::from_hex_string("p:40;L=11").is_err());
    }

    #[test]
    fn generator_shape_validation() {
        assert!(Generator::unverified(0x12).is_err()); // even constant term
        assert!(Generator::unverified(0b10).is_err()); // degree 1
        assert!(Generator::unverified(0).is_err());
    }

    proptest! {
        #[test]
        fn reduce_is_linear(a in 0u64..(1 << 30), b in 0u64..(1 << 30)) {
            let g = g10();
            let pa = BitPolynomial::from_word(a, 30);
            let pb = BitPolynomial::from_word(b, 30);
            let sum = pa.xor(&pb).unwrap();
            prop_assert_eq!(
                reduce(&sum, &g),
                reduce(&pa, &g).xor(reduce(&pb, &g))
            );
        }

        #[test]
        fn diffusion_is_linear_with_zero_seed(a in 0u64..(1 << 30), b in 0u64..(1 << 30)) {
            let g = g10();
            let pa = BitPolynomial::from_word(a, 30);
            let pb = BitPolynomial::from_word(b, 30);
            let sum = pa.xor(&pb).unwrap();
            let da = diffuse(&pa, &g, Residue::ZERO).unwrap();
            let db = diffuse(&pb, &g, Residue::ZERO).unwrap();
            prop_assert_eq!(diffuse(&sum, &g, Residue::ZERO).unwrap(), da.xor(db));
        }

        #[test]
        fn spec_string_round_trips(v in 0u64..(1 << 24), extra in 0usize..16) {
            let len = 24 + extra;
            let p = BitPolynomial::from_word(v, len);
            let back = BitPolynomial::from_hex_string(&p.to_hex_string()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
