//! Pseudorandom codes.
//!
//! Two backends share one interface:
//!
//! - the **ideal** codec is the exact ledger-backed oracle pair: encoding logs
//!   a fresh uniform block with its message, decoding answers by robust
//!   membership in that log;
//! - the **toy** codec is a concrete keyed construction (nonce, SHA-256 keystream,
//!   repetition code). It decodes honest and lightly perturbed codewords but is
//!   *not* ideal-secure: a single flipped nonce bit destroys decoding, and an
//!   adversary with the key can steer it freely.

mod ideal;
mod toy;

pub use ideal::IdealCodecState;
pub use toy::{toy_decode, toy_encode, toy_gen, PrcKeys, ToyParams, KEYSTREAM};

use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitError, BitString};
use crate::predicate::Predicate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrcError {
    #[error("message has {actual} bits, codec expects k = {expected}")]
    MessageLength { expected: usize, actual: usize },
    #[error("block has {actual} bits, codec expects n = {expected}")]
    CodewordLength { expected: usize, actual: usize },
    #[error("invalid code geometry: {0}")]
    Geometry(String),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Codec descriptor as it appears in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum CodecSpec {
    Ideal {
        n: usize,
        #[serde(default)]
        k: usize,
        #[serde(default = "equality")]
        phi: Predicate,
    },
    Toy {
        n: usize,
        #[serde(default)]
        k: usize,
        #[serde(default)]
        nonce: Option<usize>,
        #[serde(default = "default_rep")]
        rep: usize,
        #[serde(default = "default_tau")]
        tau: f64,
    },
}

fn equality() -> Predicate {
    Predicate::EQUALITY
}

fn default_rep() -> usize {
    ToyParams::DEFAULT_REP
}

fn default_tau() -> f64 {
    ToyParams::DEFAULT_TAU
}

impl CodecSpec {
    pub fn ideal(n: usize, k: usize, phi: Predicate) -> Self {
        CodecSpec::Ideal { n, k, phi }
    }

    pub fn toy(n: usize, k: usize) -> Self {
        CodecSpec::Toy {
            n,
            k,
            nonce: None,
            rep: ToyParams::DEFAULT_REP,
            tau: ToyParams::DEFAULT_TAU,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            CodecSpec::Ideal { n, .. } | CodecSpec::Toy { n, .. } => *n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            CodecSpec::Ideal { k, .. } | CodecSpec::Toy { k, .. } => *k,
        }
    }

    /// Same codec with message size `k`.
    pub fn with_k(&self, new_k: usize) -> Self {
        let mut s = self.clone();
        match &mut s {
            CodecSpec::Ideal { k, .. } | CodecSpec::Toy { k, .. } => *k = new_k,
        }
        s
    }

    pub fn toy_params(&self) -> Option<ToyParams> {
        match *self {
            CodecSpec::Toy {
                n,
                k,
                nonce,
                rep,
                tau,
            } => Some(ToyParams {
                n,
                k,
                nonce_len: nonce.unwrap_or(n / 4),
                rep,
                tau,
            }),
            CodecSpec::Ideal { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), PrcError> {
        if self.n() == 0 {
            return Err(PrcError::Geometry(
                "codeword size n must be positive".into(),
            ));
        }
        match self.toy_params() {
            Some(p) => p.validate(),
            None => Ok(()),
        }
    }
}

/// A generated codec instance: encoder and decoder sides share it.
///
/// For the ideal backend both sides reference one oracle log, so encodes
/// (writes) serialize while decodes (reads) may run concurrently.
#[derive(Debug, Clone)]
pub enum Codec {
    Ideal(Arc<RwLock<IdealCodecState>>),
    Toy(Arc<PrcKeys>),
}

impl Codec {
    /// `Gen(1^λ)`: a fresh oracle log, or a fresh toy key.
    pub fn generate<R: Rng + ?Sized>(
        lambda: usize,
        spec: &CodecSpec,
        rng: &mut R,
    ) -> Result<Self, PrcError> {
        spec.validate()?;
        Ok(match spec {
            CodecSpec::Ideal { n, k, phi } => Codec::Ideal(Arc::new(RwLock::new(
                IdealCodecState::new(*n, *k, phi.clone()),
            ))),
            CodecSpec::Toy { .. } => Codec::Toy(Arc::new(toy_gen(
                lambda,
                spec.toy_params().expect("toy"),
                rng,
            )?)),
        })
    }

    pub fn n(&self) -> usize {
        match self {
            Codec::Ideal(s) => s.read().expect("codec lock").n(),
            Codec::Toy(k) => k.params().n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Codec::Ideal(s) => s.read().expect("codec lock").k(),
            Codec::Toy(k) => k.params().k,
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, Codec::Ideal(_))
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        message: &BitString,
        rng: &mut R,
    ) -> Result<BitString, PrcError> {
        match self {
            Codec::Ideal(s) => s.write().expect("codec lock").encode(message, rng),
            Codec::Toy(k) => toy_encode(k, message, rng),
        }
    }

    /// `Dec(ζ)`; `None` is `⊥`.
    pub fn decode(&self, zeta: &BitString) -> Result<Option<BitString>, PrcError> {
        match self {
            Codec::Ideal(s) => s.read().expect("codec lock").decode(zeta),
            Codec::Toy(k) => toy_decode(k, zeta),
        }
    }

    /// Decodes `haystack[start..start + n]`.
    pub fn decode_window(
        &self,
        haystack: &BitString,
        start: usize,
    ) -> Result<Option<BitString>, PrcError> {
        let n = self.n();
        assert!(start + n <= haystack.len(), "window out of bounds");
        match self {
            Codec::Ideal(s) => s
                .read()
                .expect("codec lock")
                .decode_window(haystack, start, n),
            Codec::Toy(k) => toy_decode(k, &haystack.range(start..start + n)),
        }
    }

    /// Number of logged codewords (ideal backend only).
    pub fn logged(&self) -> Option<usize> {
        match self {
            Codec::Ideal(s) => Some(s.read().expect("codec lock").entries().len()),
            Codec::Toy(_) => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Codec::Ideal(s) => {
                let s = s.read().expect("codec lock");
                format!("ideal(n={}, k={}, phi={:?})", s.n(), s.k(), s.phi())
            }
            Codec::Toy(k) => {
                let p = k.params();
                format!(
                    "toy(n={}, k={}, nonce={}, rep={}, tau={}, prf={KEYSTREAM})",
                    p.n, p.k, p.nonce_len, p.rep, p.tau
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{robust_attr, Ledger, Rule};
    use crate::bits::bits;
    use crate::rng::trial_rng;

    fn flip_random<R: Rng>(y: &BitString, count: usize, rng: &mut R) -> BitString {
        let mut out = y.clone();
        let idx = rand::seq::index::sample(rng, y.len(), count);
        for i in idx.iter() {
            out.flip(i);
        }
        out
    }

    #[test]
    fn ideal_encode_logs_in_order() {
        let mut rng = trial_rng(1, "prc", 0);
        let mut s = IdealCodecState::new(8, 2, Predicate::EQUALITY);
        let a = s.encode(&bits("01"), &mut rng).unwrap();
        let b = s.encode(&bits("10"), &mut rng).unwrap();
        assert_eq!(a.len(), 8);
        assert_eq!(s.entries(), &[(a.clone(), bits("01")), (b, bits("10"))]);
        assert!(s.encode(&bits("1"), &mut rng).is_err());
        assert_eq!(s.decode(&a).unwrap(), Some(bits("01")));
        assert!(s.decode(&bits("1")).is_err());
    }

    #[test]
    fn ideal_decode_first_match_wins() {
        let mut rng = trial_rng(2, "prc", 0);
        let mut s = IdealCodecState::new(4, 1, Predicate::hamming(4));
        s.encode(&bits("0"), &mut rng).unwrap();
        s.encode(&bits("1"), &mut rng).unwrap();
        // radius n accepts everything; the first entry answers
        assert_eq!(s.decode(&bits("1111")).unwrap(), Some(bits("0")));
    }

    #[test]
    fn ideal_decode_within_radius() {
        let mut rng = trial_rng(3, "prc", 0);
        let mut s = IdealCodecState::new(32, 3, Predicate::hamming(2));
        let y = s.encode(&bits("101"), &mut rng).unwrap();
        assert_eq!(
            s.decode(&flip_random(&y, 2, &mut rng)).unwrap(),
            Some(bits("101"))
        );
        assert_eq!(s.decode(&flip_random(&y, 3, &mut rng)).unwrap(), None);
    }

    #[test]
    fn ideal_decode_matches_robust_attribution() {
        let n = 24;
        let phi = Predicate::hamming(5);
        let mut rng = trial_rng(4, "prc-mirror", 0);
        let mut s = IdealCodecState::new(n, 0, phi.clone());
        let mut ledger = Ledger::new(n);
        for _ in 0..64 {
            let y = s.encode(&BitString::new(), &mut rng).unwrap();
            ledger.push_transcript(BitString::new(), &y).unwrap();
        }
        let rule = Rule::Block { n };
        let mut hits = 0;
        for q in 0..10_000 {
            let zeta = if q % 2 == 0 {
                BitString::random(&mut rng, n)
            } else {
                let (y, _) = &s.entries()[rng.gen_range(0..64)];
                let d = rng.gen_range(0..=8);
                flip_random(y, d, &mut rng)
            };
            let dec = s.decode(&zeta).unwrap().is_some();
            hits += dec as usize;
            assert_eq!(dec, robust_attr(&rule, &phi, &ledger, &zeta, None).unwrap());
        }
        assert!(hits > 1000);
    }

    #[test]
    fn ideal_encode_is_uniform_chi_square() {
        // 255 degrees of freedom; upper 1e-3 quantile via Wilson–Hilferty
        let dof = 255.0f64;
        let z = 3.090_232_306;
        let a = 2.0 / (9.0 * dof);
        let critical = dof * (1.0 - a + z * a.sqrt()).powi(3);
        assert!((critical - 330.5).abs() < 0.5);
        let samples = 1_000_000u64;
        let mut counts = vec![0u64; 256];
        let mut rng = trial_rng(5, "prc-chi", 0);
        let mut s = IdealCodecState::new(8, 0, Predicate::EQUALITY);
        for _ in 0..samples {
            let y = s.encode(&BitString::new(), &mut rng).unwrap();
            counts[y.to_u64() as usize] += 1;
        }
        let expect = samples as f64 / 256.0;
        let chi: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        assert!(chi < critical, "chi-square {chi} ≥ {critical}");
    }

    #[test]
    fn toy_geometry_guard() {
        let mut rng = trial_rng(6, "toy", 0);
        let keys = toy_gen(128, ToyParams::new(128, 0), &mut rng).unwrap();
        assert_eq!(keys.ek().len(), 128);
        assert_eq!(keys.ek(), keys.dk());
        let other = toy_gen(128, ToyParams::new(128, 0), &mut rng).unwrap();
        assert_ne!(keys.ek(), other.ek());
        // 96 payload bits hold 19 repeated message bits
        assert!(toy_gen(128, ToyParams::new(128, 19), &mut rng).is_ok());
        assert!(matches!(
            toy_gen(128, ToyParams::new(128, 20), &mut rng),
            Err(PrcError::Geometry(_))
        ));
    }

    #[test]
    fn toy_round_trip_exhaustive() {
        let mut rng = trial_rng(7, "toy", 0);
        for k in 0..=8 {
            let keys = toy_gen(128, ToyParams::new(64, k), &mut rng).unwrap();
            for m in BitString::all_of_length(k).unwrap() {
                let c = toy_encode(&keys, &m, &mut rng).unwrap();
                assert_eq!(c.len(), 64);
                assert_eq!(toy_decode(&keys, &c).unwrap(), Some(m));
            }
        }
    }

    #[test]
    fn toy_zero_bit_is_nonce_and_keystream() {
        let mut rng = trial_rng(8, "toy", 0);
        let keys = toy_gen(128, ToyParams::new(128, 0), &mut rng).unwrap();
        let a = toy_encode(&keys, &BitString::new(), &mut rng).unwrap();
        let b = toy_encode(&keys, &BitString::new(), &mut rng).unwrap();
        assert_ne!(a.prefix(32), b.prefix(32));
        assert_ne!(a, b);
        assert!(toy_decode(&keys, &a).unwrap().is_some());
        assert!(toy_decode(&keys, &BitString::random(&mut rng, 128))
            .unwrap()
            .is_none());
    }

    #[test]
    fn toy_tolerates_payload_noise() {
        // A message bit is lost once 3 of its 5 copies flip, so the ≥ 99% rate
        // at 10% noise holds for zero-bit and single-bit payloads only.
        let mut rng = trial_rng(9, "toy-noise", 0);
        for (k, floor) in [(0, 1.0), (1, 0.985)] {
            let p = ToyParams::new(256, k);
            let keys = toy_gen(128, p, &mut rng).unwrap();
            let budget = p.payload_len() / 10;
            let mut ok = 0;
            let trials = 10_000;
            for _ in 0..trials {
                let m = BitString::random(&mut rng, k);
                let c = toy_encode(&keys, &m, &mut rng).unwrap();
                let mut noisy = c.clone();
                for i in rand::seq::index::sample(&mut rng, p.payload_len(), budget).iter() {
                    noisy.flip(p.nonce_len + i);
                }
                ok += (toy_decode(&keys, &noisy).unwrap() == Some(m)) as usize;
            }
            assert!(ok as f64 >= floor * trials as f64, "k={k}: {ok}/{trials}");
        }
        // within ⌊τ·payload⌋ flips that leave every majority intact
        let m = bits("1011");
        let keys = toy_gen(128, ToyParams::new(128, 4), &mut rng).unwrap();
        let c = toy_encode(&keys, &m, &mut rng).unwrap();
        let mut noisy = c.clone();
        for i in 0..19 {
            // two flips in each message group, the rest in the zero padding
            let pos = if i < 8 { (i / 2) * 5 + i % 2 } else { 20 + i };
            noisy.flip(32 + pos);
        }
        assert_eq!(toy_decode(&keys, &noisy).unwrap(), Some(m.clone()));
        noisy.flip(32 + 95);
        assert_eq!(toy_decode(&keys, &noisy).unwrap(), None);
    }

    #[test]
    fn toy_nonce_is_fragile() {
        let mut rng = trial_rng(10, "toy-nonce", 0);
        let keys = toy_gen(128, ToyParams::new(128, 0), &mut rng).unwrap();
        let mut rejected = 0;
        for _ in 0..1000 {
            let mut c = toy_encode(&keys, &BitString::new(), &mut rng).unwrap();
            c.flip(rng.gen_range(0..32));
            rejected += toy_decode(&keys, &c).unwrap().is_none() as usize;
        }
        assert_eq!(rejected, 1000);
    }

    #[test]
    fn toy_codewords_look_balanced() {
        let mut rng = trial_rng(11, "toy-freq", 0);
        let keys = toy_gen(128, ToyParams::new(64, 4), &mut rng).unwrap();
        let samples = 100_000;
        let mut ones = vec![0u32; 64];
        for _ in 0..samples {
            let m = BitString::random(&mut rng, 4);
            let c = toy_encode(&keys, &m, &mut rng).unwrap();
            for (i, b) in c.iter().enumerate() {
                ones[i] += b as u32;
            }
        }
        for (i, &c) in ones.iter().enumerate() {
            let f = c as f64 / samples as f64;
            assert!((f - 0.5).abs() < 0.01, "position {i}: {f}");
        }
    }

    #[test]
    fn codec_spec_json() {
        let s: CodecSpec =
            serde_json::from_str(r#"{"backend":"ideal","n":128,"k":0,"phi":{"hamming":32}}"#)
                .unwrap();
        assert_eq!(s, CodecSpec::ideal(128, 0, Predicate::hamming(32)));
        let t: CodecSpec =
            serde_json::from_str(r#"{"backend":"toy","n":128,"k":0,"nonce":32,"rep":5,"tau":0.2}"#)
                .unwrap();
        assert_eq!(t.toy_params().unwrap(), ToyParams::new(128, 0));
        assert!(serde_json::from_str::<CodecSpec>(r#"{"backend":"ideal","n":8,"x":1}"#).is_err());
    }
}
