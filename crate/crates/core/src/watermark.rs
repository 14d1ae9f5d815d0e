//! PRC-embedding watermark.
//!
//! Each response block is steered by a fresh zero-bit codeword through a
//! randomized embedding that preserves the model's next-token distribution
//! exactly. Verification decodes; a response is watermarked when some
//! length-`n` window decodes.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::model::{bernoulli, LanguageModel};
use crate::prc::{Codec, CodecSpec, PrcError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WatermarkError {
    #[error("invalid watermark parameters: {0}")]
    Params(String),
    #[error("candidate has {actual} bits, shorter than the block length {n}")]
    TooShort { n: usize, actual: usize },
    #[error(transparent)]
    Prc(#[from] PrcError),
}

/// Block length `n`, blocks per response `m`, potential bound `β`, noise radius `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WatParams {
    pub n: usize,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
}

fn one() -> usize {
    1
}

impl WatParams {
    pub fn new(n: usize, m: usize, beta: f64, gamma: f64) -> Self {
        Self { n, m, beta, gamma }
    }

    pub fn response_len(&self) -> usize {
        self.n * self.m
    }

    /// Requires `β < γ`, or `β = γ = 0`.
    pub fn validate(&self) -> Result<(), WatermarkError> {
        let mut errs = Vec::new();
        if self.n == 0 {
            errs.push("n must be positive".to_string());
        }
        if self.m == 0 {
            errs.push("m must be positive".to_string());
        }
        if !(self.beta >= 0.0 && self.gamma >= 0.0) {
            errs.push(format!(
                "beta = {} and gamma = {} must be non-negative",
                self.beta, self.gamma
            ));
        } else if !(self.beta < self.gamma || (self.beta == 0.0 && self.gamma == 0.0)) {
            errs.push(format!(
                "beta = {} must be below gamma = {} (or both zero)",
                self.beta, self.gamma
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(WatermarkError::Params(errs.join("; ")))
        }
    }

    /// Whether `γ ∈ [0, 1/4)`, the range the robustness guarantee covers.
    pub fn within_guarantee(&self) -> bool {
        (0.0..0.25).contains(&self.gamma)
    }
}

/// Generator-side key (`sk = ek`).
#[derive(Debug, Clone)]
pub struct SecretKey {
    codec: Codec,
}

/// Verifier-side key (`pk = dk`).
#[derive(Debug, Clone)]
pub struct PublicKey {
    codec: Codec,
}

impl SecretKey {
    pub fn codec(&self) -> &Codec {
        &self.codec
    }
}

impl PublicKey {
    pub fn codec(&self) -> &Codec {
        &self.codec
    }
}

#[derive(Debug, Clone)]
pub struct WatermarkKeys {
    pub pk: PublicKey,
    pub sk: SecretKey,
}

impl WatermarkKeys {
    pub fn from_codec(codec: Codec) -> Self {
        Self {
            pk: PublicKey {
                codec: codec.clone(),
            },
            sk: SecretKey { codec },
        }
    }
}

/// `Gen(1^λ)` of the underlying zero-bit code.
pub fn gen_keys<R: Rng + ?Sized>(
    lambda: usize,
    params: &WatParams,
    codec: &CodecSpec,
    rng: &mut R,
) -> Result<WatermarkKeys, WatermarkError> {
    params.validate()?;
    if codec.n() != params.n {
        return Err(WatermarkError::Params(format!(
            "codec block length {} differs from scheme n = {}",
            codec.n(),
            params.n
        )));
    }
    if codec.k() != 0 {
        return Err(WatermarkError::Params(format!(
            "the watermark uses a zero-bit code, codec has k = {}",
            codec.k()
        )));
    }
    Ok(WatermarkKeys::from_codec(Codec::generate(
        lambda, codec, rng,
    )?))
}

/// Success probability of the embedding: `p − (−1)^ξ · min(p, 1 − p)`.
#[inline]
pub fn embed_prob(xi: bool, p: f64) -> f64 {
    let m = p.min(1.0 - p);
    if xi {
        p + m
    } else {
        p - m
    }
}

/// `Embed(ξ, p)`: one Bernoulli draw at [`embed_prob`].
#[inline]
pub fn embed_bit<R: Rng + ?Sized>(xi: bool, p: f64, rng: &mut R) -> bool {
    bernoulli(rng, embed_prob(xi, p))
}

/// Embeds `source` token by token after the already-emitted `generated` bits,
/// appending to `generated`.
pub fn embed_block<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    prompt: &BitString,
    generated: &mut BitString,
    source: &BitString,
    rng: &mut R,
) {
    for xi in source.iter() {
        let p = model.next_prob(prompt, generated);
        let a = embed_bit(xi, p, rng);
        generated.push(a);
    }
}

/// A watermarked response with the source codeword of each block.
#[derive(Debug, Clone, PartialEq)]
pub struct Traced {
    pub response: BitString,
    pub codewords: Vec<BitString>,
}

/// `Wat_sk(x)` with its source codewords.
///
/// One codeword is drawn at the start of each block, then one embedding draw
/// per token; the context of token `i` is the prompt followed by all `i − 1`
/// tokens already emitted in this response.
pub fn wat_respond_traced<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    sk: &SecretKey,
    prompt: &BitString,
    params: &WatParams,
    rng: &mut R,
) -> Result<Traced, WatermarkError> {
    let mut response = BitString::with_capacity(params.response_len());
    let mut codewords = Vec::with_capacity(params.m);
    for _ in 0..params.m {
        let xi = sk.codec.encode(&BitString::new(), rng)?;
        embed_block(model, prompt, &mut response, &xi, rng);
        codewords.push(xi);
    }
    Ok(Traced {
        response,
        codewords,
    })
}

/// `Wat_sk(x)`: a response of `m · n` tokens.
pub fn wat_respond<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    sk: &SecretKey,
    prompt: &BitString,
    params: &WatParams,
    rng: &mut R,
) -> Result<BitString, WatermarkError> {
    Ok(wat_respond_traced(model, sk, prompt, params, rng)?.response)
}

/// `Wat_sk(x)` advanced one token at a time, for callers that act between
/// tokens. Consumes randomness in the same order as [`wat_respond_traced`].
pub struct WatSession<'a> {
    model: &'a dyn LanguageModel,
    sk: &'a SecretKey,
    prompt: BitString,
    params: WatParams,
    response: BitString,
    codewords: Vec<BitString>,
}

impl<'a> WatSession<'a> {
    pub fn new(
        model: &'a dyn LanguageModel,
        sk: &'a SecretKey,
        prompt: BitString,
        params: WatParams,
    ) -> Self {
        Self {
            model,
            sk,
            prompt,
            params,
            response: BitString::with_capacity(params.response_len()),
            codewords: Vec::with_capacity(params.m),
        }
    }

    pub fn prompt(&self) -> &BitString {
        &self.prompt
    }

    pub fn response(&self) -> &BitString {
        &self.response
    }

    pub fn is_done(&self) -> bool {
        self.response.len() >= self.params.response_len()
    }

    /// Emits the next token; `None` once all `m · n` tokens are out.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<bool>, WatermarkError> {
        if self.is_done() {
            return Ok(None);
        }
        let pos = self.response.len() % self.params.n;
        if pos == 0 {
            self.codewords
                .push(self.sk.codec.encode(&BitString::new(), rng)?);
        }
        let xi = self.codewords.last().expect("codeword drawn").get(pos);
        let p = self.model.next_prob(&self.prompt, &self.response);
        let a = embed_bit(xi, p, rng);
        self.response.push(a);
        Ok(Some(a))
    }

    pub fn into_traced(self) -> Traced {
        Traced {
            response: self.response,
            codewords: self.codewords,
        }
    }
}

/// `Ver_pk(ζ) = 1[Dec(ζ) ≠ ⊥]`; longer candidates pass when any length-`n`
/// window (stride 1) decodes.
pub fn verify(pk: &PublicKey, zeta: &BitString) -> Result<bool, WatermarkError> {
    verify_stride(pk, zeta, 1)
}

/// Like [`verify`] but only tries windows starting at multiples of `n`.
pub fn verify_aligned(pk: &PublicKey, zeta: &BitString) -> Result<bool, WatermarkError> {
    verify_stride(pk, zeta, pk.codec.n())
}

fn verify_stride(pk: &PublicKey, zeta: &BitString, stride: usize) -> Result<bool, WatermarkError> {
    let n = pk.codec.n();
    if zeta.len() < n {
        return Err(WatermarkError::TooShort {
            n,
            actual: zeta.len(),
        });
    }
    let mut start = 0;
    while start + n <= zeta.len() {
        if pk.codec.decode_window(zeta, start)?.is_some() {
            return Ok(true);
        }
        start += stride;
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::model::{sample_response, TableModel, Uniform};
    use crate::predicate::Predicate;
    use crate::rng::trial_rng;

    fn ideal_keys(n: usize, r: usize, seed: u64) -> WatermarkKeys {
        let p = WatParams::new(n, 1, 0.0, 0.0);
        gen_keys(
            128,
            &p,
            &CodecSpec::ideal(n, 0, Predicate::hamming(r)),
            &mut trial_rng(seed, "k", 0),
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(WatParams::new(8, 2, 0.0, 0.0).validate().is_ok());
        assert!(WatParams::new(8, 2, 0.1, 0.2).validate().is_ok());
        assert!(WatParams::new(8, 2, 0.2, 0.2).validate().is_err());
        assert!(WatParams::new(8, 2, 0.3, 0.2).validate().is_err());
        assert!(WatParams::new(0, 2, 0.0, 0.0).validate().is_err());
        assert!(WatParams::new(8, 1, 0.1, 0.2).within_guarantee());
        assert!(!WatParams::new(8, 1, 0.1, 0.3).within_guarantee());
    }

    #[test]
    fn embed_examples() {
        let mut rng = trial_rng(1, "embed", 0);
        for _ in 0..100 {
            assert!(embed_bit(true, 0.5, &mut rng));
            assert!(!embed_bit(false, 0.5, &mut rng));
        }
        assert!((embed_prob(false, 0.7) - 0.4).abs() < 1e-12);
        assert!((embed_prob(true, 0.7) - 1.0).abs() < 1e-12);
        let draws = 100_000;
        let mean0 = (0..draws)
            .filter(|_| embed_bit(false, 0.7, &mut rng))
            .count() as f64
            / draws as f64;
        assert!((mean0 - 0.4).abs() < 0.01);
        let marg = (0..draws)
            .filter(|_| {
                let xi: bool = rng.gen();
                embed_bit(xi, 0.7, &mut rng)
            })
            .count() as f64
            / draws as f64;
        assert!((marg - 0.7).abs() < 0.01);
    }

    #[test]
    fn embedding_pushforward_is_exact() {
        // Σ over uniform ξ of the embedding path probability equals Q̄_n(y).
        let mut entries = std::collections::BTreeMap::new();
        entries.insert(bits("1"), 0.9);
        entries.insert(bits("10"), 0.25);
        entries.insert(BitString::new(), 0.3);
        let q = TableModel::new(2, entries, 0.6);
        let n = 4;
        for y in BitString::all_of_length(n).unwrap() {
            let direct = crate::model::path_measure(&q, &BitString::new(), &BitString::new(), &y);
            let mut push = 0.0;
            for xi in BitString::all_of_length(n).unwrap() {
                let mut prob = 0.5f64.powi(n as i32);
                let mut ctx = BitString::new();
                for (a, x) in y.iter().zip(xi.iter()) {
                    let e = embed_prob(x, q.next_prob(&BitString::new(), &ctx));
                    prob *= if a { e } else { 1.0 - e };
                    ctx.push(a);
                }
                push += prob;
            }
            assert!((push - direct).abs() < 1e-12, "{y}: {push} vs {direct}");
        }
    }

    #[test]
    fn uniform_model_emits_codewords() {
        let keys = ideal_keys(16, 0, 2);
        let p = WatParams::new(16, 3, 0.0, 0.0);
        let mut rng = trial_rng(2, "wat", 0);
        for _ in 0..1000 {
            let t =
                wat_respond_traced(&Uniform, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
            assert_eq!(t.codewords.len(), 3);
            let joined = t
                .codewords
                .iter()
                .fold(BitString::new(), |a, c| a.concat(c));
            assert_eq!(t.response, joined);
        }
        assert_eq!(keys.pk.codec().logged(), Some(3000));
    }

    #[test]
    fn one_encode_per_block() {
        let keys = ideal_keys(8, 0, 3);
        let p = WatParams::new(8, 2, 0.0, 0.0);
        wat_respond(
            &Uniform,
            &keys.sk,
            &bits("1"),
            &p,
            &mut trial_rng(3, "wat", 0),
        )
        .unwrap();
        assert_eq!(keys.pk.codec().logged(), Some(2));
    }

    #[test]
    fn block_error_matches_potential() {
        // E[dist(block, codeword)] = Σ |p_i − 1/2| for a context-free model.
        let q = TableModel::constant(0.8);
        let keys = ideal_keys(64, 0, 4);
        let p = WatParams::new(64, 1, 0.0, 0.0);
        let mut rng = trial_rng(4, "wat", 0);
        let trials = 20_000;
        let mut total = 0usize;
        for _ in 0..trials {
            let t = wat_respond_traced(&q, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
            total += t.response.hamming_distance(&t.codewords[0]).unwrap();
        }
        let mean = total as f64 / trials as f64;
        assert!((mean - 64.0 * 0.3).abs() < 0.15, "{mean}");
    }

    #[test]
    fn verify_examples() {
        let n = 128;
        let keys = ideal_keys(n, 32, 5);
        let p = WatParams::new(n, 1, 0.0, 0.0);
        let mut rng = trial_rng(5, "ver", 0);
        let y = wat_respond(&Uniform, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
        assert!(verify(&keys.pk, &y).unwrap());
        let mut near = y.clone();
        for i in 0..32 {
            near.flip(i * 4);
        }
        assert!(verify(&keys.pk, &near).unwrap());
        let mut miss = 0;
        for _ in 0..1000 {
            miss += !verify(&keys.pk, &BitString::random(&mut rng, n)).unwrap() as usize;
        }
        assert_eq!(miss, 1000);
        assert!(verify(&keys.pk, &y.prefix(100)).is_err());
    }

    #[test]
    fn sliding_window_finds_embedded_block() {
        let n = 32;
        let keys = ideal_keys(n, 0, 6);
        let p = WatParams::new(n, 1, 0.0, 0.0);
        let mut rng = trial_rng(6, "slide", 0);
        let y = wat_respond(&Uniform, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
        let padded = BitString::random(&mut rng, 13)
            .concat(&y)
            .concat(&BitString::random(&mut rng, 7));
        assert!(verify(&keys.pk, &padded).unwrap());
        assert!(!verify_aligned(&keys.pk, &padded).unwrap());
        let aligned = BitString::random(&mut rng, n).concat(&y);
        assert_eq!(
            verify(&keys.pk, &aligned).unwrap(),
            verify_aligned(&keys.pk, &aligned).unwrap()
        );
    }

    #[test]
    fn toy_backend_round_trip() {
        let p = WatParams::new(128, 2, 0.0, 0.0);
        let keys = gen_keys(
            128,
            &p,
            &CodecSpec::toy(128, 0),
            &mut trial_rng(7, "toy", 0),
        )
        .unwrap();
        let mut rng = trial_rng(7, "toy", 1);
        let y = wat_respond(&Uniform, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
        assert!(verify_aligned(&keys.pk, &y).unwrap());
        assert!(verify(&keys.pk, &y.range(128..256)).unwrap());
        assert!(!verify(&keys.pk, &BitString::random(&mut rng, 128)).unwrap());
    }

    #[test]
    fn uniform_response_length_and_sampling_agree() {
        let keys = ideal_keys(4, 0, 8);
        let p = WatParams::new(4, 2, 0.0, 0.0);
        let mut rng = trial_rng(8, "len", 0);
        let y = wat_respond(&Uniform, &keys.sk, &BitString::new(), &p, &mut rng).unwrap();
        assert_eq!(
            y.len(),
            sample_response(&Uniform, &BitString::new(), 8, &mut rng).len()
        );
    }

    #[test]
    fn session_matches_batch_generation() {
        let keys = ideal_keys(8, 1, 5);
        let model = TableModel::constant(0.7);
        let params = WatParams::new(8, 3, 0.0, 0.0);
        let prompt = bits("101");
        let batch = wat_respond_traced(
            &model,
            &keys.sk,
            &prompt,
            &params,
            &mut trial_rng(9, "s", 0),
        )
        .unwrap();
        let mut rng = trial_rng(9, "s", 0);
        let mut session = WatSession::new(&model, &keys.sk, prompt, params);
        while session.step(&mut rng).unwrap().is_some() {}
        assert!(session.is_done());
        assert_eq!(session.into_traced(), batch);
    }
}
