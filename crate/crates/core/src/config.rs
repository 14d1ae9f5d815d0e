//! Run configuration: descriptors for the model, rule, predicate, scheme and
//! game, parsed from JSON and cross-validated before anything runs.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attribution::Rule;
use crate::bits::BitString;
use crate::games::{self, Setup};
use crate::model::{Model, ModelSpec};
use crate::prc::CodecSpec;
use crate::predicate::Predicate;
use crate::unforgeable::{ChainMode, ChainParams, DSS_ALGORITHM, SIGNATURE_BITS};
use crate::watermark::WatParams;

pub const DEFAULT_LAMBDA: usize = 128;

/// Watermarking scheme descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    /// PRC embedding (`Wat`, `Ver = Dec ≠ ⊥`).
    Prc { params: WatParams, codec: CodecSpec },
    /// Signature chain.
    Chain {
        #[serde(default = "uniform_mode")]
        mode: ChainMode,
        params: ChainParams,
        codec: CodecSpec,
        #[serde(default)]
        dss: DssSpec,
    },
}

fn uniform_mode() -> ChainMode {
    ChainMode::Uniform
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DssSpec {
    #[serde(default = "dss_algo")]
    pub algo: String,
    #[serde(default = "sig_bits")]
    pub k: usize,
}

impl Default for DssSpec {
    fn default() -> Self {
        Self {
            algo: dss_algo(),
            k: sig_bits(),
        }
    }
}

fn dss_algo() -> String {
    DSS_ALGORITHM.into()
}

fn sig_bits() -> usize {
    SIGNATURE_BITS
}

impl SchemeSpec {
    pub fn block_len(&self) -> usize {
        match self {
            SchemeSpec::Prc { params, .. } => params.n,
            SchemeSpec::Chain { params, .. } => params.n,
        }
    }

    pub fn response_len(&self) -> usize {
        match self {
            SchemeSpec::Prc { params, .. } => params.response_len(),
            SchemeSpec::Chain { params, .. } => params.response_len(),
        }
    }

    pub fn codec(&self) -> &CodecSpec {
        match self {
            SchemeSpec::Prc { codec, .. } | SchemeSpec::Chain { codec, .. } => codec,
        }
    }

    fn validate(&self, errs: &mut Vec<String>) {
        let codec = self.codec();
        if let Err(e) = codec.validate() {
            errs.push(format!("scheme.codec: {e}"));
        }
        match self {
            SchemeSpec::Prc { params, codec } => {
                if let Err(e) = params.validate() {
                    errs.push(format!("scheme.params: {e}"));
                }
                if codec.n() != params.n {
                    errs.push(format!(
                        "scheme.codec.n = {} differs from scheme.params.n = {}",
                        codec.n(),
                        params.n
                    ));
                }
                if codec.k() != 0 {
                    errs.push(format!(
                        "scheme.codec.k = {} must be 0 for the prc scheme",
                        codec.k()
                    ));
                }
            }
            SchemeSpec::Chain {
                params, codec, dss, ..
            } => {
                if let Err(e) = params.validate() {
                    errs.push(format!("scheme.params: {e}"));
                }
                if codec.n() != params.n {
                    errs.push(format!(
                        "scheme.codec.n = {} differs from scheme.params.n = {}",
                        codec.n(),
                        params.n
                    ));
                }
                if codec.k() != params.k {
                    errs.push(format!(
                        "scheme.codec.k = {} differs from scheme.params.k = {}",
                        codec.k(),
                        params.k
                    ));
                }
                if dss.algo != DSS_ALGORITHM {
                    errs.push(format!(
                        "scheme.dss.algo = {:?}; only {DSS_ALGORITHM:?} is available",
                        dss.algo
                    ));
                }
                if dss.k != params.k {
                    errs.push(format!(
                        "scheme.dss.k = {} differs from scheme.params.k = {}",
                        dss.k, params.k
                    ));
                }
            }
        }
    }
}

/// `{"game": id, "params": {…}, "trials": N, "seed": S}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default)]
    pub game: Option<String>,
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for artifacts; `--out` overrides it.
    #[serde(default)]
    pub dir: Option<String>,
    /// Also write a sample ledger from the run.
    #[serde(default)]
    pub ledger: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_lambda")]
    pub lambda: usize,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub rule: Option<Rule>,
    #[serde(default)]
    pub predicate: Option<Predicate>,
    #[serde(default)]
    pub scheme: Option<SchemeSpec>,
    #[serde(default)]
    pub game: GameSpec,
    /// Prompt for generated transcripts; empty by default.
    #[serde(default)]
    pub prompt: Option<BitString>,
    /// `ℓ`; when given it must equal the scheme's `m · n`.
    #[serde(default)]
    pub response_len: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_lambda() -> usize {
    DEFAULT_LAMBDA
}

/// Parse or validation failure with one message per problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("config: {e}")]))?;
    cfg.validate(None)?;
    Ok(cfg)
}

impl RunConfig {
    /// Cross-field validation. `game` is the id requested on the command line,
    /// if any; it must agree with the config's own.
    pub fn validate(&self, game: Option<&str>) -> Result<(), ConfigErrors> {
        let mut errs = Vec::new();
        if self.lambda == 0 {
            errs.push("lambda must be positive".into());
        }
        if let Some(m) = &self.model {
            if let Err(e) = Model::from_spec(m) {
                errs.push(e);
            }
        }
        if let Some(s) = &self.scheme {
            s.validate(&mut errs);
            if let Some(ell) = self.response_len {
                if ell != s.response_len() {
                    let (m, n) = match s {
                        SchemeSpec::Prc { params, .. } => (params.m, params.n),
                        SchemeSpec::Chain { params, .. } => (params.m, params.n),
                    };
                    errs.push(format!(
                        "response_len = {ell} must equal scheme.params.m · scheme.params.n = {m} · {n} = {}",
                        m * n
                    ));
                }
            }
            if let Some(rn) = self.rule.as_ref().and_then(Rule::block_len) {
                if rn != s.block_len() {
                    errs.push(format!(
                        "rule.n = {rn} differs from scheme.params.n = {}",
                        s.block_len()
                    ));
                }
            }
        }
        if let (Some(ell), Some(rn)) = (
            self.response_len,
            self.rule.as_ref().and_then(Rule::block_len),
        ) {
            if ell % rn != 0 {
                errs.push(format!(
                    "response_len = {ell} is not a multiple of rule.n = {rn}"
                ));
            }
        }
        if let Some(rule) = &self.rule {
            match rule {
                Rule::PotentialBlock { beta, .. } | Rule::DssPotential { beta, .. }
                    if !(0.0..=0.5).contains(beta) =>
                {
                    errs.push(format!("rule.beta = {beta} must be in [0, 0.5]"));
                }
                Rule::Block { n } | Rule::DssBlock { n } if *n == 0 => {
                    errs.push("rule.n must be positive".into());
                }
                Rule::PathMeasure { alpha } if !(alpha.is_finite() && *alpha >= 0.0) => {
                    errs.push(format!(
                        "rule.alpha = {alpha} must be finite and non-negative"
                    ));
                }
                _ => {}
            }
        }
        if self.game.trials == Some(0) {
            errs.push("game.trials must be positive".into());
        }
        let id = match (game, self.game.game.as_deref()) {
            (Some(a), Some(b)) if a != b => {
                errs.push(format!("game.game = {b:?} but {a:?} was requested"));
                None
            }
            (Some(a), _) => Some(a),
            (None, b) => b,
        };
        if let Some(id) = id {
            if !games::GAMES.contains(&id) {
                errs.push(format!(
                    "unknown game {id:?}; expected one of {}",
                    games::GAMES.join(", ")
                ));
            } else if errs.is_empty() {
                if let Err(e) = games::check_params(id, &self.setup(0), self.params()) {
                    errs.extend(e);
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigErrors(errs))
        }
    }

    pub fn params(&self) -> &Value {
        static EMPTY: Value = Value::Null;
        self.game.params.as_ref().unwrap_or(&EMPTY)
    }

    /// Resolved descriptors for a game run with the given seed.
    pub fn setup(&self, seed: u64) -> Setup {
        Setup {
            lambda: self.lambda,
            model: self
                .model
                .as_ref()
                .map(|m| Model::from_spec(m).expect("validated"))
                .unwrap_or_else(Model::uniform),
            rule: self.rule.clone(),
            predicate: self.predicate.clone(),
            scheme: self.scheme.clone(),
            prompt: self.prompt.clone().unwrap_or_default(),
            trials: self.game.trials,
            seed,
        }
    }
}
