//! Packed binary strings.
//!
//! A [`BitString`] stores bits in generation order, packed most-significant
//! bit first into 64-bit words. Bits past `len` are always zero, so derived
//! equality and hashing agree with bitwise equality.
//!
//! Substring accessors come in two flavours: [`BitString::range`] takes a
//! 0-indexed half-open range, while [`BitString::sub`] takes the 1-indexed
//! inclusive `(k, j)` pair used by selection rules, with `sub(1, 0)` the empty
//! string.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const WORD: usize = 64;

/// Largest length for which exhaustive enumeration of `{0,1}^n` is allowed.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("length mismatch: {left} vs {right} bits")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit-string encoding {0:?}")]
    Encoding(String),
    #[error("length {len} exceeds exhaustive bound {limit}")]
    UnsupportedScale { len: usize, limit: usize },
    #[error("expected an even length, got {0}")]
    OddLength(usize),
}

/// A finite string over `{0,1}`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn mask_for(bits: usize) -> u64 {
    // high `bits` bits of a word set
    match bits {
        0 => 0,
        b if b >= WORD => u64::MAX,
        b => u64::MAX << (WORD - b),
    }
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(WORD)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self {
            words: vec![u64::MAX; len.div_ceil(WORD)],
            len,
        };
        s.clear_tail();
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Builds a string from the low `len` bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        if len == 0 {
            return Self::new();
        }
        Self {
            words: vec![value << (WORD - len)],
            len,
        }
    }

    /// The first `len` bits of `bytes`, most significant bit of each byte first.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Self {
        assert!(len <= bytes.len() * 8, "not enough bytes for {len} bits");
        let mut words = vec![0u64; len.div_ceil(WORD)];
        for (i, &b) in bytes.iter().enumerate().take(len.div_ceil(8)) {
            words[i / 8] |= (b as u64) << (56 - 8 * (i % 8));
        }
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Self {
        let words: Vec<u64> = (0..len.div_ceil(WORD)).map(|_| rng.gen()).collect();
        let mut s = Self { words, len };
        s.clear_tail();
        s
    }

    /// Iterates over all of `{0,1}^len` in counting order.
    pub fn all_of_length(len: usize) -> Result<impl Iterator<Item = BitString>, BitError> {
        if len > EXHAUSTIVE_LIMIT {
            return Err(BitError::UnsupportedScale {
                len,
                limit: EXHAUSTIVE_LIMIT,
            });
        }
        Ok((0u64..(1u64 << len)).map(move |v| BitString::from_u64(v, len)))
    }

    /// Every string of length at most `max_len`, shortest first.
    pub fn all_up_to(max_len: usize) -> Result<Vec<BitString>, BitError> {
        let mut out = Vec::new();
        for len in 0..=max_len {
            out.extend(Self::all_of_length(len)?);
        }
        Ok(out)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (WORD - 1 - i % WORD)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let m = 1u64 << (WORD - 1 - i % WORD);
        if bit {
            self.words[i / WORD] |= m;
        } else {
            self.words[i / WORD] &= !m;
        }
    }

    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] ^= 1u64 << (WORD - 1 - i % WORD);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            let i = self.len - 1;
            self.words[i / WORD] |= 1u64 << (WORD - 1 - i % WORD);
        }
    }

    pub fn pop(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        let bit = self.get(self.len - 1);
        self.truncate(self.len - 1);
        Some(bit)
    }

    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.words.truncate(len.div_ceil(WORD));
        self.clear_tail();
    }

    pub fn extend_from(&mut self, other: &BitString) {
        let shift = self.len % WORD;
        if shift == 0 {
            self.words.extend_from_slice(&other.words);
        } else {
            for &w in &other.words {
                let last = self.words.len() - 1;
                self.words[last] |= w >> shift;
                self.words.push(w << (WORD - shift));
            }
        }
        self.len += other.len;
        self.words.truncate(self.len.div_ceil(WORD));
        self.clear_tail();
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = BitString::with_capacity(self.len + other.len);
        out.extend_from(self);
        out.extend_from(other);
        out
    }

    /// 64 bits starting at `start`, zero-filled past the end.
    #[inline]
    fn word_at(&self, start: usize) -> u64 {
        let idx = start / WORD;
        let off = start % WORD;
        let hi = self.words.get(idx).copied().unwrap_or(0);
        if off == 0 {
            hi
        } else {
            let lo = self.words.get(idx + 1).copied().unwrap_or(0);
            (hi << off) | (lo >> (WORD - off))
        }
    }

    /// Bits `range.start..range.end` (0-indexed, half-open).
    pub fn range(&self, range: Range<usize>) -> BitString {
        assert!(
            range.start <= range.end && range.end <= self.len,
            "range {range:?} out of bounds for length {}",
            self.len
        );
        let len = range.end - range.start;
        let words = (0..len.div_ceil(WORD))
            .map(|w| self.word_at(range.start + w * WORD))
            .collect();
        let mut s = BitString { words, len };
        s.clear_tail();
        s
    }

    /// The substring `u_{k:j}`: 1-indexed, inclusive; `sub(k, k - 1)` is empty.
    pub fn sub(&self, k: usize, j: usize) -> BitString {
        assert!(k >= 1 && j + 1 >= k, "invalid substring indices ({k}, {j})");
        self.range(k - 1..j)
    }

    pub fn prefix(&self, len: usize) -> BitString {
        self.range(0..len)
    }

    pub fn suffix(&self, len: usize) -> BitString {
        self.range(self.len - len..self.len)
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.prefix(self.len) == *self
    }

    /// `{□, u_1, u_{1:2}, …, u}`, shortest first.
    pub fn prefixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.len).map(move |j| self.prefix(j))
    }

    /// `{□, u_ℓ, u_{ℓ-1:ℓ}, …, u}`, shortest first.
    pub fn suffixes(&self) -> impl Iterator<Item = BitString> + '_ {
        (0..=self.len).map(move |j| self.suffix(j))
    }

    /// The set of distinct substrings, including the empty string.
    pub fn substrings(&self) -> BTreeSet<BitString> {
        let mut set = BTreeSet::new();
        set.insert(BitString::new());
        for k in 0..self.len {
            for j in k + 1..=self.len {
                set.insert(self.range(k..j));
            }
        }
        set
    }

    /// All `(k, j)`, 1-indexed inclusive, with `u_{k:j} = pattern`.
    ///
    /// The empty pattern has no occurrences: attribution only concerns
    /// non-empty windows.
    pub fn occurrences(&self, pattern: &BitString) -> Vec<(usize, usize)> {
        let n = pattern.len;
        if n == 0 || n > self.len {
            return Vec::new();
        }
        (0..=self.len - n)
            .filter(|&start| self.window_distance(start, pattern) == 0)
            .map(|start| (start + 1, start + n))
            .collect()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming_distance(&self, other: &BitString) -> Result<usize, BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Hamming distance between `self[start..start + other.len()]` and `other`,
    /// without materializing the window.
    pub fn window_distance(&self, start: usize, other: &BitString) -> usize {
        assert!(start + other.len <= self.len, "window out of bounds");
        if start.is_multiple_of(WORD) {
            let base = start / WORD;
            return other
                .words
                .iter()
                .enumerate()
                .map(|(w, &b)| (self.words[base + w] ^ b).count_ones() as usize)
                .sum::<usize>()
                - self.tail_excess(start, other);
        }
        let full = other.len / WORD;
        let mut d = 0usize;
        for w in 0..full {
            d += (self.word_at(start + w * WORD) ^ other.words[w]).count_ones() as usize;
        }
        let rem = other.len % WORD;
        if rem > 0 {
            let a = self.word_at(start + full * WORD) & mask_for(rem);
            d += (a ^ other.words[full]).count_ones() as usize;
        }
        d
    }

    // Aligned fast path reads whole words of `self`; discount bits past the window.
    #[inline]
    fn tail_excess(&self, start: usize, other: &BitString) -> usize {
        let rem = other.len % WORD;
        if rem == 0 || other.words.is_empty() {
            return 0;
        }
        let last = start / WORD + other.words.len() - 1;
        (self.words[last] & !mask_for(rem)).count_ones() as usize
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString, BitError> {
        if self.len != other.len {
            return Err(BitError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(BitString {
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
            len: self.len,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Packs into bytes, MSB first, zero-padded in the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len.div_ceil(8));
        for i in 0..self.len.div_ceil(8) {
            out.push((self.words[i / 8] >> (56 - 8 * (i % 8))) as u8);
        }
        out
    }

    /// The value of the first `min(len, 64)` bits as an integer.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD, "to_u64 supports at most 64 bits");
        if self.len == 0 {
            0
        } else {
            self.words[0] >> (WORD - self.len)
        }
    }

    /// `hex:<digits>/<bitlen>` with 4 bits per digit, left-aligned.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(8 + self.len / 4);
        s.push_str("hex:");
        for d in 0..self.len.div_ceil(4) {
            let nib = (self.word_at(4 * d) >> 60) as u32;
            s.push(char::from_digit(nib, 16).expect("nibble"));
        }
        s.push('/');
        s.push_str(&self.len.to_string());
        s
    }

    pub fn from_hex(text: &str) -> Result<BitString, BitError> {
        let bad = || BitError::Encoding(text.to_string());
        let body = text.strip_prefix("hex:").ok_or_else(bad)?;
        let (digits, len) = body.split_once('/').ok_or_else(bad)?;
        let len: usize = len.parse().map_err(|_| bad())?;
        if digits.len() != len.div_ceil(4) {
            return Err(bad());
        }
        let mut s = BitString::with_capacity(len);
        for c in digits.chars() {
            let nib = c.to_digit(16).ok_or_else(bad)?;
            for b in (0..4).rev() {
                s.push((nib >> b) & 1 == 1);
            }
        }
        // padding bits must be zero
        if s.range(len..s.len).count_ones() != 0 {
            return Err(bad());
        }
        s.truncate(len);
        Ok(s)
    }

    /// Parses either `hex:<digits>/<len>` or a literal string of `0`/`1`.
    pub fn parse_any(text: &str) -> Result<BitString, BitError> {
        if text.starts_with("hex:") {
            Self::from_hex(text)
        } else {
            text.parse()
        }
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= mask_for(rem);
            }
        }
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex: shorter strings first, then lexicographic.
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.words.cmp(&other.words))
    }
}

impl FromStr for BitString {
    type Err = BitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BitError::Encoding(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::from_bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("□");
        }
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 64 {
            write!(f, "BitString({self})")
        } else {
            write!(f, "BitString({})", self.to_hex())
        }
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        BitString::parse_any(&s).map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and examples: `bits("0110")`.
///
/// Panics on characters other than `0`/`1`.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bit string")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hamming_examples() {
        assert_eq!(bits("0101").hamming_distance(&bits("0101")), Ok(0));
        assert_eq!(bits("0000").hamming_distance(&bits("1111")), Ok(4));
        assert_eq!(bits("010101").hamming_distance(&bits("000111")), Ok(2));
        assert!(matches!(
            bits("01").hamming_distance(&bits("011")),
            Err(BitError::LengthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn prefixes_and_suffixes() {
        let u = bits("01");
        let p: Vec<_> = u.prefixes().collect();
        assert_eq!(p, vec![BitString::new(), bits("0"), bits("01")]);
        let s: Vec<_> = u.suffixes().collect();
        assert_eq!(s, vec![BitString::new(), bits("1"), bits("01")]);
    }

    #[test]
    fn occurrences_scan_every_window() {
        assert_eq!(
            bits("0110110").occurrences(&bits("11")),
            vec![(2, 3), (5, 6)]
        );
        assert!(bits("0110").occurrences(&BitString::new()).is_empty());
    }

    #[test]
    fn one_indexed_substrings() {
        let u = bits("0110");
        assert_eq!(u.sub(2, 3), bits("11"));
        assert_eq!(u.sub(1, 0), BitString::new());
        assert_eq!(u.sub(4, 4), bits("0"));
    }

    #[test]
    fn hex_encoding() {
        assert_eq!(BitString::from_hex("hex:a/3").unwrap(), bits("101"));
        assert_eq!(bits("101").to_hex(), "hex:a/3");
        assert_eq!(BitString::new().to_hex(), "hex:/0");
        assert_eq!(BitString::from_hex("hex:01/8").unwrap(), bits("00000001"));
        assert!(BitString::from_hex("hex:b/3").is_err(), "nonzero padding");
        assert!(BitString::from_hex("hex:a/9").is_err(), "digit count");
        assert!(BitString::from_hex("a/3").is_err());
    }

    #[test]
    fn exhaustive_guard() {
        assert_eq!(BitString::all_of_length(3).unwrap().count(), 8);
        assert!(BitString::all_of_length(EXHAUSTIVE_LIMIT + 1).is_err());
    }

    fn arb_bits(max: usize) -> impl Strategy<Value = BitString> {
        proptest::collection::vec(any::<bool>(), 0..max).prop_map(BitString::from_bits)
    }

    fn naive_distance(a: &BitString, b: &BitString) -> usize {
        a.iter().zip(b.iter()).filter(|(x, y)| x != y).count()
    }

    proptest! {
        #[test]
        fn hex_round_trip(s in arb_bits(300)) {
            prop_assert_eq!(BitString::from_hex(&s.to_hex()).unwrap(), s);
        }

        #[test]
        fn concat_is_associative_with_identity(a in arb_bits(150), b in arb_bits(150), c in arb_bits(150)) {
            prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
            prop_assert_eq!(a.concat(&BitString::new()), a.clone());
            prop_assert_eq!(BitString::new().concat(&a), a.clone());
            prop_assert_eq!(a.concat(&b).len(), a.len() + b.len());
        }

        #[test]
        fn range_matches_bitwise_copy(s in arb_bits(300), x in 0usize..300, y in 0usize..300) {
            let (lo, hi) = (x.min(y).min(s.len()), x.max(y).min(s.len()));
            let r = s.range(lo..hi);
            let naive = BitString::from_bits((lo..hi).map(|i| s.get(i)));
            prop_assert_eq!(r, naive);
        }

        #[test]
        fn window_distance_matches_naive(s in arb_bits(300), p in arb_bits(140), start in 0usize..300) {
            prop_assume!(p.len() <= s.len());
            let start = start % (s.len() - p.len() + 1);
            let naive = naive_distance(&s.range(start..start + p.len()), &p);
            prop_assert_eq!(s.window_distance(start, &p), naive);
        }

        #[test]
        fn prefix_suffix_counts(s in arb_bits(40)) {
            prop_assert_eq!(s.prefixes().count(), s.len() + 1);
            prop_assert_eq!(s.suffixes().count(), s.len() + 1);
            prop_assert!(s.substrings().len() <= s.len() * (s.len() + 1) / 2 + 1);
        }
    }

    #[test]
    fn metric_axioms_exhaustive() {
        for n in 0..=8 {
            let all: Vec<_> = BitString::all_of_length(n).unwrap().collect();
            for a in &all {
                assert_eq!(a.hamming_distance(a), Ok(0));
                for b in &all {
                    let ab = a.hamming_distance(b).unwrap();
                    assert_eq!(ab, b.hamming_distance(a).unwrap());
                    for c in &all {
                        assert!(
                            ab <= a.hamming_distance(c).unwrap() + c.hamming_distance(b).unwrap()
                        );
                    }
                }
            }
        }
    }
}
