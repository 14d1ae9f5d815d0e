//! Signature-chained watermarking.
//!
//! Each response block carries, through a multi-bit code, the signature of the
//! block before it: `ξ₁ = Enc(σ₀)` for a random `σ₀`, then `σᵢ = Sign(ξᵢ)` and
//! `ξᵢ₊₁ = Enc(σᵢ)`. A `2n`-bit candidate `ζ₁ζ₂` verifies when `ζ₂` decodes
//! to a valid signature of `ζ₁`.
//!
//! For general models the realized block `yᵢ` is signed instead of `ξᵢ`, and
//! only when its predictive potential is at most `βn`; otherwise the next
//! block carries uniform bits.
//!
//! The verifier is sandwiched between two ideal mechanisms: the prefix-locked
//! robust attribution `Attr^φ` below, and the envelope [`atts_eval`] above,
//! which accepts any candidate whose first half opens a selected window.

mod dss;

pub use dss::{
    dss_gen, dss_sign, dss_verify, DssKeys, DssPublicKey, DssSecretKey, DSS_ALGORITHM,
    SIGNATURE_BITS,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::{selected_windows, AttributionError, Ledger, SelectionRule};
use crate::bits::{BitError, BitString};
use crate::model::{predictive_potential, LanguageModel};
use crate::prc::{Codec, CodecSpec, PrcError};
use crate::predicate::Predicate;
use crate::watermark::embed_block;

/// Slack for the potential threshold, matching the selection rules.
const EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("size mismatch: {0}")]
    Size(String),
    #[error("invalid chain parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Prc(#[from] PrcError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Bits(#[from] BitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMode {
    /// Sign codewords; the model must be uniform.
    Uniform,
    /// Sign realized blocks that pass the potential test.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub n: usize,
    #[serde(default = "two")]
    pub m: usize,
    #[serde(default = "sig_bits")]
    pub k: usize,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn two() -> usize {
    2
}

fn sig_bits() -> usize {
    SIGNATURE_BITS
}

impl ChainParams {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            k: SIGNATURE_BITS,
            beta: 0.0,
            gamma: 0.0,
        }
    }

    pub fn response_len(&self) -> usize {
        self.n * self.m
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        let mut errs = Vec::new();
        if self.n == 0 || self.m == 0 {
            errs.push(format!(
                "n = {} and m = {} must be positive",
                self.n, self.m
            ));
        }
        if self.k != SIGNATURE_BITS {
            errs.push(format!(
                "k = {} must equal the {DSS_ALGORITHM} signature size {SIGNATURE_BITS}",
                self.k
            ));
        }
        if !(self.beta >= 0.0 && self.gamma >= 0.0) {
            errs.push("beta and gamma must be non-negative".into());
        } else if !(self.beta < self.gamma || (self.beta == 0.0 && self.gamma == 0.0)) {
            errs.push(format!(
                "beta = {} must be below gamma = {} (or both zero)",
                self.beta, self.gamma
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ChainError::Params(errs.join("; ")))
        }
    }
}

/// `pk = (DSS.pk, PRC.ek, PRC.dk)`.
#[derive(Debug, Clone)]
pub struct ChainPublicKey {
    pub dss: DssPublicKey,
    pub codec: Codec,
}

/// `sk = DSS.sk`.
#[derive(Debug, Clone)]
pub struct ChainSecretKey {
    pub dss: DssSecretKey,
}

#[derive(Debug, Clone)]
pub struct ChainKeys {
    pub pk: ChainPublicKey,
    pub sk: ChainSecretKey,
}

pub fn chain_gen<R: Rng + ?Sized>(
    lambda: usize,
    params: &ChainParams,
    codec: &CodecSpec,
    rng: &mut R,
) -> Result<ChainKeys, ChainError> {
    params.validate()?;
    if codec.n() != params.n || codec.k() != params.k {
        return Err(ChainError::Params(format!(
            "codec (n = {}, k = {}) must match the chain (n = {}, k = {})",
            codec.n(),
            codec.k(),
            params.n,
            params.k
        )));
    }
    let codec = Codec::generate(lambda, codec, rng)?;
    let dss = dss_gen(params.n, rng);
    Ok(ChainKeys {
        pk: ChainPublicKey { dss: dss.pk, codec },
        sk: ChainSecretKey { dss: dss.sk },
    })
}

/// A chained response and its internals.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub response: BitString,
    /// `ξ₁ … ξ_m`.
    pub codewords: Vec<BitString>,
    /// `σ₀ … σ_{m−1}`, the message embedded in each block.
    pub messages: Vec<BitString>,
    /// Whether `σᵢ` is a signature (as opposed to filler) for `i = 1..m`.
    pub signed: Vec<bool>,
}

/// Generates a chained response.
///
/// Draw order: `σ₀`, then per block the codeword, the embedding draws (general
/// mode only), and filler bits when the block is not signed.
pub fn chain_respond_traced<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    keys: &ChainKeys,
    prompt: &BitString,
    params: &ChainParams,
    mode: ChainMode,
    rng: &mut R,
) -> Result<ChainTrace, ChainError> {
    if mode == ChainMode::Uniform && !model.is_uniform() {
        return Err(ChainError::Params(format!(
            "uniform mode requires the uniform model, got {}",
            model.describe()
        )));
    }
    let bound = params.beta * params.n as f64 + EPS;
    let mut response = BitString::with_capacity(params.response_len());
    let mut codewords = Vec::with_capacity(params.m);
    let mut messages = Vec::with_capacity(params.m);
    let mut signed = Vec::with_capacity(params.m);
    let mut sigma = BitString::random(rng, params.k);
    for _ in 0..params.m {
        let xi = keys.pk.codec.encode(&sigma, rng)?;
        messages.push(sigma);
        let before = response.clone();
        // Both modes share this path: the uniform mode signs ξ, which is the
        // realized block there.
        let (block, sign_it) = match mode {
            ChainMode::Uniform => {
                response.extend_from(&xi);
                (xi.clone(), true)
            }
            ChainMode::General => {
                embed_block(model, prompt, &mut response, &xi, rng);
                let y = response.range(before.len()..response.len());
                let b = predictive_potential(model, prompt, &before, &y);
                (y, b <= bound)
            }
        };
        sigma = if sign_it {
            dss_sign(&keys.sk.dss, &block)?
        } else {
            BitString::random(rng, params.k)
        };
        signed.push(sign_it);
        codewords.push(xi);
    }
    Ok(ChainTrace {
        response,
        codewords,
        messages,
        signed,
    })
}

pub fn chain_respond<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    keys: &ChainKeys,
    prompt: &BitString,
    params: &ChainParams,
    mode: ChainMode,
    rng: &mut R,
) -> Result<BitString, ChainError> {
    Ok(chain_respond_traced(model, keys, prompt, params, mode, rng)?.response)
}

/// `Ver(pk, ζ₁ζ₂) = DSS.Ver(ζ₁, PRC.Dec(ζ₂))`, `0` when `ζ₂` decodes to `⊥`.
pub fn chain_verify(pk: &ChainPublicKey, zeta: &BitString) -> Result<bool, ChainError> {
    let n = pk.codec.n();
    if zeta.len() != 2 * n {
        return Err(ChainError::Size(format!(
            "candidate has {} bits, expected 2n = {}",
            zeta.len(),
            2 * n
        )));
    }
    verify_pair(pk, zeta, 0)
}

fn verify_pair(pk: &ChainPublicKey, zeta: &BitString, start: usize) -> Result<bool, ChainError> {
    let n = pk.codec.n();
    match pk.codec.decode_window(zeta, start + n)? {
        None => Ok(false),
        Some(sigma) => dss_verify(&pk.dss, &zeta.range(start..start + n), &sigma),
    }
}

/// Accepts when any stride-`n` pair window `ζ[s..s + 2n]` verifies.
pub fn chain_verify_windowed(pk: &ChainPublicKey, zeta: &BitString) -> Result<bool, ChainError> {
    let n = pk.codec.n();
    if zeta.len() < 2 * n {
        return Err(ChainError::Size(format!(
            "candidate has {} bits, shorter than 2n = {}",
            zeta.len(),
            2 * n
        )));
    }
    let mut start = 0;
    while start + 2 * n <= zeta.len() {
        if verify_pair(pk, zeta, start)? {
            return Ok(true);
        }
        start += n;
    }
    Ok(false)
}

/// `φ = (y₁ = y₁') ∧ Φ(y₂, y₂')`.
pub fn phi_predicate(suffix: &Predicate) -> Predicate {
    Predicate::prefix_locked(suffix.clone())
}

pub fn phi_eval(suffix: &Predicate, y: &BitString, y2: &BitString) -> Result<bool, BitError> {
    phi_predicate(suffix).eval(y, y2)
}

/// `Atts_t(ζ₁ζ₂)`: some selected `2n` window of the ledger starts with `ζ₁`.
pub fn atts_eval(
    rule: &dyn SelectionRule,
    ledger: &Ledger,
    zeta: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, ChainError> {
    let len = zeta.len();
    if len == 0 || !len.is_multiple_of(2) {
        return Err(ChainError::Bits(BitError::OddLength(len)));
    }
    let half = len / 2;
    let head = zeta.prefix(half);
    Ok(selected_windows(rule, ledger, len, model)?
        .iter()
        .any(|(_, w)| w.window_distance(0, &head) == 0))
}
