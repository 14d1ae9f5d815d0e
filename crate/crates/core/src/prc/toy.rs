use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PrcError;
use crate::bits::BitString;

/// Identifier of the keyed stream, recorded in reports.
pub const KEYSTREAM: &str = "sha256-ctr";

/// Geometry of the toy code: `nonce ∥ (keystream ⊕ repetition(σ) ∥ 0…)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyParams {
    pub n: usize,
    pub k: usize,
    pub nonce_len: usize,
    pub rep: usize,
    pub tau: f64,
}

impl ToyParams {
    pub const DEFAULT_REP: usize = 5;
    pub const DEFAULT_TAU: f64 = 0.2;

    /// Default geometry: nonce `n/4`, repetition 5, threshold 0.2.
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            nonce_len: n / 4,
            rep: Self::DEFAULT_REP,
            tau: Self::DEFAULT_TAU,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.n.saturating_sub(self.nonce_len)
    }

    /// Largest message the payload region holds.
    pub fn capacity(&self) -> usize {
        self.payload_len().checked_div(self.rep).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), PrcError> {
        let bad = |m: String| Err(PrcError::Geometry(m));
        if self.rep == 0 {
            return bad("repetition factor must be positive".into());
        }
        if self.nonce_len == 0 || self.nonce_len >= self.n {
            return bad(format!(
                "nonce length {} must be in 1..{} (n)",
                self.nonce_len, self.n
            ));
        }
        if self.k > self.capacity() {
            return bad(format!(
                "message size k = {} exceeds payload capacity {} = ({} − {}) / {}",
                self.k,
                self.capacity(),
                self.n,
                self.nonce_len,
                self.rep
            ));
        }
        if !(0.0..0.5).contains(&self.tau) {
            return bad(format!(
                "decode threshold tau = {} must be in [0, 0.5)",
                self.tau
            ));
        }
        Ok(())
    }

    fn threshold(&self) -> usize {
        (self.tau * self.payload_len() as f64 + 1e-9).floor() as usize
    }
}

/// Keys of the toy code. Encoding and decoding share one symmetric key.
#[derive(Debug, Clone, PartialEq)]
pub struct PrcKeys {
    key: BitString,
    params: ToyParams,
}

impl PrcKeys {
    pub fn params(&self) -> &ToyParams {
        &self.params
    }

    pub fn ek(&self) -> &BitString {
        &self.key
    }

    pub fn dk(&self) -> &BitString {
        &self.key
    }
}

/// Draws a fresh `λ`-bit key.
pub fn toy_gen<R: Rng + ?Sized>(
    lambda: usize,
    params: ToyParams,
    rng: &mut R,
) -> Result<PrcKeys, PrcError> {
    params.validate()?;
    Ok(PrcKeys {
        key: BitString::random(rng, lambda),
        params,
    })
}

/// `len` bits of `SHA-256(len(key) ∥ key ∥ len(nonce) ∥ nonce ∥ counter)` blocks.
fn keystream(key: &BitString, nonce: &BitString, len: usize) -> BitString {
    let mut out = BitString::with_capacity(len);
    let mut counter = 0u64;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update((key.len() as u64).to_le_bytes());
        h.update(key.to_bytes());
        h.update((nonce.len() as u64).to_le_bytes());
        h.update(nonce.to_bytes());
        h.update(counter.to_le_bytes());
        let block = h.finalize();
        let take = (len - out.len()).min(256);
        out.extend_from(&BitString::from_bytes(&block, take));
        counter += 1;
    }
    out
}

fn repetition(params: &ToyParams, message: &BitString) -> BitString {
    let mut body = BitString::with_capacity(params.payload_len());
    for b in message.iter() {
        for _ in 0..params.rep {
            body.push(b);
        }
    }
    body.extend_from(&BitString::zeros(params.payload_len() - body.len()));
    body
}

pub fn toy_encode<R: Rng + ?Sized>(
    keys: &PrcKeys,
    message: &BitString,
    rng: &mut R,
) -> Result<BitString, PrcError> {
    let p = &keys.params;
    if message.len() != p.k {
        return Err(PrcError::MessageLength {
            expected: p.k,
            actual: message.len(),
        });
    }
    let nonce = BitString::random(rng, p.nonce_len);
    let stream = keystream(&keys.key, &nonce, p.payload_len());
    let body = stream.xor(&repetition(p, message)).expect("equal lengths");
    Ok(nonce.concat(&body))
}

/// Majority-decodes the payload and accepts when the unmasked payload is within
/// `⌊τ · (n − nonce)⌋` of the re-encoded message.
pub fn toy_decode(keys: &PrcKeys, zeta: &BitString) -> Result<Option<BitString>, PrcError> {
    let p = &keys.params;
    if zeta.len() != p.n {
        return Err(PrcError::CodewordLength {
            expected: p.n,
            actual: zeta.len(),
        });
    }
    let nonce = zeta.prefix(p.nonce_len);
    let stream = keystream(&keys.key, &nonce, p.payload_len());
    let body = zeta
        .range(p.nonce_len..p.n)
        .xor(&stream)
        .expect("equal lengths");
    let message = BitString::from_bits((0..p.k).map(|i| {
        let ones = (0..p.rep).filter(|&r| body.get(i * p.rep + r)).count();
        2 * ones > p.rep
    }));
    let err = body
        .hamming_distance(&repetition(p, &message))
        .expect("equal lengths");
    Ok((err <= p.threshold()).then_some(message))
}
