//! Binary language models and the functionals selection rules consume.
//!
//! A model maps a context to the probability that the next token is `1`. The
//! context is passed as a `(prompt, generated)` pair whose concatenation is the
//! usual autoregressive context; keeping the prompt boundary explicit is what
//! lets the copy-instruction model know where its payload ends.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;

/// `Q : {0,1}* → [0,1]`, the probability that the next token is `1`.
pub trait LanguageModel: Send + Sync {
    fn next_prob(&self, prompt: &BitString, generated: &BitString) -> f64;

    /// True only for the model that returns 1/2 on every context.
    fn is_uniform(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

/// `Q(bit | context)`.
pub fn token_prob(p_one: f64, bit: bool) -> f64 {
    if bit {
        p_one
    } else {
        1.0 - p_one
    }
}

/// `U(x) = 1/2` for every context.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Uniform;

impl LanguageModel for Uniform {
    fn next_prob(&self, _: &BitString, _: &BitString) -> f64 {
        0.5
    }

    fn is_uniform(&self) -> bool {
        true
    }

    fn describe(&self) -> String {
        "uniform".into()
    }
}

/// Conditional probabilities keyed by the last `depth` context bits.
///
/// Contexts shorter than `depth` use the whole context as key. Keys missing
/// from the table fall back to `default`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    depth: usize,
    entries: BTreeMap<BitString, f64>,
    default: f64,
}

pub const DEFAULT_TABLE_DEPTH: usize = 3;

impl TableModel {
    pub fn new(depth: usize, entries: BTreeMap<BitString, f64>, default: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&default),
            "default probability out of range"
        );
        assert!(
            entries.values().all(|p| (0.0..=1.0).contains(p)),
            "table probability out of range"
        );
        Self {
            depth,
            entries,
            default,
        }
    }

    /// The same probability on every context.
    pub fn constant(p: f64) -> Self {
        Self::new(DEFAULT_TABLE_DEPTH, BTreeMap::new(), p)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entries(&self) -> &BTreeMap<BitString, f64> {
        &self.entries
    }

    pub fn default_prob(&self) -> f64 {
        self.default
    }

    fn key(&self, prompt: &BitString, generated: &BitString) -> BitString {
        let total = prompt.len() + generated.len();
        let take = self.depth.min(total);
        if take <= generated.len() {
            generated.suffix(take)
        } else {
            prompt.suffix(take - generated.len()).concat(generated)
        }
    }
}

impl LanguageModel for TableModel {
    fn next_prob(&self, prompt: &BitString, generated: &BitString) -> f64 {
        if self.entries.is_empty() {
            return self.default;
        }
        self.entries
            .get(&self.key(prompt, generated))
            .copied()
            .unwrap_or(self.default)
    }

    fn describe(&self) -> String {
        format!(
            "table(depth={}, entries={}, default={})",
            self.depth,
            self.entries.len(),
            self.default
        )
    }
}

/// Reproduces a prompt payload verbatim, then behaves uniformly.
///
/// A prompt `marker ∥ payload` makes the model emit the payload bit by bit
/// with probability one. Prompts without the marker get the uniform model.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyModel {
    marker: BitString,
}

impl Default for CopyModel {
    fn default() -> Self {
        Self {
            marker: BitString::from_u64(1, 8),
        }
    }
}

impl CopyModel {
    pub fn new(marker: BitString) -> Self {
        Self { marker }
    }

    pub fn marker(&self) -> &BitString {
        &self.marker
    }

    /// `marker ∥ payload`.
    pub fn instruction(&self, payload: &BitString) -> BitString {
        self.marker.concat(payload)
    }
}

impl LanguageModel for CopyModel {
    fn next_prob(&self, prompt: &BitString, generated: &BitString) -> f64 {
        let m = self.marker.len();
        if prompt.len() < m || prompt.window_distance(0, &self.marker) != 0 {
            return 0.5;
        }
        let idx = m + generated.len();
        if idx < prompt.len() {
            if prompt.get(idx) {
                1.0
            } else {
                0.0
            }
        } else {
            0.5
        }
    }

    fn describe(&self) -> String {
        format!("copy(marker={})", self.marker.to_hex())
    }
}

/// Serializable descriptor for the built-in models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    // A braced variant, so unknown fields are rejected like everywhere else.
    Uniform {},
    Table {
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default)]
        entries: BTreeMap<String, f64>,
        #[serde(default = "half")]
        default: f64,
    },
    Copy {
        #[serde(default = "default_marker")]
        marker: BitString,
    },
}

fn default_depth() -> usize {
    DEFAULT_TABLE_DEPTH
}

fn half() -> f64 {
    0.5
}

fn default_marker() -> BitString {
    BitString::from_u64(1, 8)
}

/// A built-in model, dispatching statically.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Uniform(Uniform),
    Table(TableModel),
    Copy(CopyModel),
}

impl Model {
    pub fn uniform() -> Self {
        Model::Uniform(Uniform)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self, String> {
        Ok(match spec {
            ModelSpec::Uniform {} => Model::Uniform(Uniform),
            ModelSpec::Table {
                depth,
                entries,
                default,
            } => {
                let check = |p: f64, what: &str| {
                    if (0.0..=1.0).contains(&p) {
                        Ok(p)
                    } else {
                        Err(format!("model.{what}: probability {p} outside [0,1]"))
                    }
                };
                let mut table = BTreeMap::new();
                for (ctx, p) in entries {
                    let key =
                        BitString::parse_any(ctx).map_err(|e| format!("model.entries: {e}"))?;
                    if key.len() > *depth {
                        return Err(format!(
                            "model.entries: context {ctx:?} longer than depth {depth}"
                        ));
                    }
                    table.insert(key, check(*p, "entries")?);
                }
                Model::Table(TableModel::new(*depth, table, check(*default, "default")?))
            }
            ModelSpec::Copy { marker } => Model::Copy(CopyModel::new(marker.clone())),
        })
    }

    pub fn to_spec(&self) -> ModelSpec {
        match self {
            Model::Uniform(_) => ModelSpec::Uniform {},
            Model::Table(t) => ModelSpec::Table {
                depth: t.depth,
                entries: t.entries.iter().map(|(k, v)| (k.to_hex(), *v)).collect(),
                default: t.default,
            },
            Model::Copy(c) => ModelSpec::Copy {
                marker: c.marker.clone(),
            },
        }
    }
}

impl LanguageModel for Model {
    fn next_prob(&self, prompt: &BitString, generated: &BitString) -> f64 {
        match self {
            Model::Uniform(m) => m.next_prob(prompt, generated),
            Model::Table(m) => m.next_prob(prompt, generated),
            Model::Copy(m) => m.next_prob(prompt, generated),
        }
    }

    fn is_uniform(&self) -> bool {
        matches!(self, Model::Uniform(_))
    }

    fn describe(&self) -> String {
        match self {
            Model::Uniform(m) => m.describe(),
            Model::Table(m) => m.describe(),
            Model::Copy(m) => m.describe(),
        }
    }
}

/// One Bernoulli draw with success probability `p`.
///
/// Consumes exactly one `f64` from the stream so draw order is reproducible.
#[inline]
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.gen::<f64>() < p
}

/// Autoregressive sampler `Q̄` with fixed response length `ℓ`.
pub struct SamplingOracle<'m, R> {
    model: &'m dyn LanguageModel,
    response_len: usize,
    rng: R,
}

impl<'m, R: Rng> SamplingOracle<'m, R> {
    pub fn new(model: &'m dyn LanguageModel, response_len: usize, rng: R) -> Self {
        Self {
            model,
            response_len,
            rng,
        }
    }

    pub fn response_len(&self) -> usize {
        self.response_len
    }

    pub fn sample(&mut self, prompt: &BitString) -> BitString {
        sample_response(self.model, prompt, self.response_len, &mut self.rng)
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

/// `u_j ← Ber(Q(x u_1 ⋯ u_{j−1}))` for `j = 1..=len`; one draw per bit.
pub fn sample_response<R: Rng + ?Sized>(
    model: &dyn LanguageModel,
    prompt: &BitString,
    len: usize,
    rng: &mut R,
) -> BitString {
    let mut u = BitString::with_capacity(len);
    for _ in 0..len {
        let p = model.next_prob(prompt, &u);
        u.push(bernoulli(rng, p));
    }
    u
}

/// Path-conditional measure `Q(y | x ρ) = ∏_j Q(y_j | x ρ y_{<j})`.
pub fn path_measure(
    model: &dyn LanguageModel,
    prompt: &BitString,
    prefix: &BitString,
    y: &BitString,
) -> f64 {
    let mut ctx = prefix.clone();
    let mut prob = 1.0;
    for b in y.iter() {
        prob *= token_prob(model.next_prob(prompt, &ctx), b);
        if prob == 0.0 {
            return 0.0;
        }
        ctx.push(b);
    }
    prob
}

/// Predictive potential `B_n(y; x ρ, Q) = Σ_j |1/2 − Q(y_j | x ρ y_{<j})|`.
pub fn predictive_potential(
    model: &dyn LanguageModel,
    prompt: &BitString,
    prefix: &BitString,
    y: &BitString,
) -> f64 {
    let mut ctx = prefix.clone();
    let mut total = 0.0;
    for b in y.iter() {
        total += (0.5 - token_prob(model.next_prob(prompt, &ctx), b)).abs();
        ctx.push(b);
    }
    total
}
