use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::Rng;

use super::ChainError;
use crate::bits::BitString;

/// Signature algorithm identifier, recorded in reports.
pub const DSS_ALGORITHM: &str = "ed25519";

/// Signature size `k` in bits.
pub const SIGNATURE_BITS: usize = 512;

/// Signing keys over fixed-size messages of `n` bits.
#[derive(Debug, Clone)]
pub struct DssKeys {
    pub pk: DssPublicKey,
    pub sk: DssSecretKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DssPublicKey {
    key: VerifyingKey,
    n: usize,
}

#[derive(Debug, Clone)]
pub struct DssSecretKey {
    key: SigningKey,
    n: usize,
}

impl DssPublicKey {
    pub fn message_bits(&self) -> usize {
        self.n
    }
}

fn message_bytes(y: &BitString) -> Vec<u8> {
    let mut out = (y.len() as u64).to_le_bytes().to_vec();
    out.extend(y.to_bytes());
    out
}

fn check_len(n: usize, y: &BitString) -> Result<(), ChainError> {
    if y.len() != n {
        return Err(ChainError::Size(format!(
            "message has {} bits, signature scheme expects {n}",
            y.len()
        )));
    }
    Ok(())
}

/// `DSS.Gen(1^λ)` for `n`-bit messages.
pub fn dss_gen<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DssKeys {
    let mut seed = [0u8; 32];
    rng.fill(&mut seed);
    let key = SigningKey::from_bytes(&seed);
    DssKeys {
        pk: DssPublicKey {
            key: key.verifying_key(),
            n,
        },
        sk: DssSecretKey { key, n },
    }
}

/// `DSS.Sign(sk, y)`, a `k`-bit signature.
pub fn dss_sign(sk: &DssSecretKey, y: &BitString) -> Result<BitString, ChainError> {
    check_len(sk.n, y)?;
    let sig = sk.key.sign(&message_bytes(y));
    Ok(BitString::from_bytes(&sig.to_bytes(), SIGNATURE_BITS))
}

/// `DSS.Ver(pk, y, σ)`. Malformed signatures verify as `0`.
pub fn dss_verify(pk: &DssPublicKey, y: &BitString, sigma: &BitString) -> Result<bool, ChainError> {
    check_len(pk.n, y)?;
    if sigma.len() != SIGNATURE_BITS {
        return Err(ChainError::Size(format!(
            "signature has {} bits, expected {SIGNATURE_BITS}",
            sigma.len()
        )));
    }
    let bytes: [u8; 64] = sigma.to_bytes().try_into().expect("512 bits");
    let sig = Signature::from_bytes(&bytes);
    Ok(pk.key.verify(&message_bytes(y), &sig).is_ok())
}
