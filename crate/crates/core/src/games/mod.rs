//! Security games: scripted adversaries against the attribution and
//! watermarking primitives, producing deterministic [`GameReport`]s.
//!
//! Every trial draws from its own ChaCha8 stream keyed by `(seed, domain,
//! trial)`, so trials run in parallel on the ambient rayon pool and reports do
//! not depend on scheduling. Aggregates are integer counts.

mod adversary;
mod chain;
mod embedding;
mod exhaustive;
mod ledger_games;
pub mod report;
pub mod stats;
mod watermarking;

pub use adversary::{Deferred, EdgeAdversary, FixedString, TimePolicy, TimedAdversary};
pub use report::{sig6, Check, Cmp, GameReport, Rate};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::Value;
use thiserror::Error;

use crate::attribution::{AttributionError, Rule};
use crate::bits::{BitError, BitString};
use crate::config::SchemeSpec;
use crate::model::Model;
use crate::prc::PrcError;
use crate::predicate::Predicate;
use crate::unforgeable::ChainError;
use crate::watermark::WatermarkError;

/// Game identifiers accepted by [`run_game`].
pub const GAMES: &[&str] = &[
    "axioms",
    "non_injectivity",
    "pushforward",
    "concentration",
    "undetectability",
    "faithfulness",
    "exploit",
    "soundness",
    "anytime",
    "disjointness",
    "forgery",
    "chain_modes",
];

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game parameters: {0}")]
    Params(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("unknown game {0:?}")]
    UnknownGame(String),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Watermark(#[from] WatermarkError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Prc(#[from] PrcError),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// Resolved descriptors shared by all games. Absent descriptors fall back to
/// per-game defaults.
#[derive(Debug, Clone)]
pub struct Setup {
    pub lambda: usize,
    pub model: Model,
    pub rule: Option<Rule>,
    pub predicate: Option<Predicate>,
    pub scheme: Option<SchemeSpec>,
    pub prompt: BitString,
    /// Overrides the game's default trial count.
    pub trials: Option<u64>,
    pub seed: u64,
}

impl Setup {
    pub fn new(seed: u64) -> Self {
        Self {
            lambda: crate::config::DEFAULT_LAMBDA,
            model: Model::uniform(),
            rule: None,
            predicate: None,
            scheme: None,
            prompt: BitString::new(),
            trials: None,
            seed,
        }
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = model;
        self
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn with_predicate(mut self, predicate: Predicate) -> Self {
        self.predicate = Some(predicate);
        self
    }

    pub fn with_scheme(mut self, scheme: SchemeSpec) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = Some(trials);
        self
    }

    pub(crate) fn trials_or(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    pub(crate) fn base_report(&self, game: &str, trials: u64) -> GameReport {
        let mut r = GameReport::new(game);
        r.param("lambda", self.lambda)
            .param("seed", self.seed)
            .param("trials", trials)
            .note("model", crate::model::LanguageModel::describe(&self.model));
        r
    }
}

/// Parses a game's parameter object; `null` means all defaults.
pub(crate) fn parse_params<P: DeserializeOwned>(v: &Value) -> Result<P, GameError> {
    let v = if v.is_null() {
        Value::Object(Default::default())
    } else {
        v.clone()
    };
    serde_json::from_value(v).map_err(|e| GameError::Params(e.to_string()))
}

/// Runs `f` on every trial index in parallel, preserving index order.
pub(crate) fn par_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>, GameError>
where
    T: Send,
    F: Fn(u64) -> Result<T, GameError> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Splits `total` into chunks of at most `chunk` and runs them in parallel.
pub(crate) fn par_chunks<T, F>(total: u64, chunk: u64, f: F) -> Result<Vec<T>, GameError>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T, GameError> + Sync + Send,
{
    let chunk = chunk.max(1);
    let count = total.div_ceil(chunk);
    (0..count)
        .into_par_iter()
        .map(|c| f(c, chunk.min(total - c * chunk)))
        .collect()
}

/// Validates the game's parameters against the setup without running it.
pub fn check_params(id: &str, setup: &Setup, params: &Value) -> Result<(), Vec<String>> {
    let res = match id {
        "axioms" => exhaustive::prepare_axioms(setup, params).map(drop),
        "non_injectivity" => exhaustive::prepare_non_injectivity(setup, params).map(drop),
        "pushforward" => embedding::prepare_pushforward(setup, params).map(drop),
        "concentration" => embedding::prepare_concentration(setup, params).map(drop),
        "undetectability" => watermarking::prepare_undetectability(setup, params).map(drop),
        "faithfulness" => watermarking::prepare_faithfulness(setup, params).map(drop),
        "exploit" => watermarking::prepare_exploit(setup, params).map(drop),
        "soundness" => ledger_games::prepare_soundness(setup, params).map(drop),
        "anytime" => ledger_games::prepare_anytime(setup, params).map(drop),
        "disjointness" => ledger_games::prepare_disjointness(setup, params).map(drop),
        "forgery" => chain::prepare_forgery(setup, params).map(drop),
        "chain_modes" => chain::prepare_chain_modes(setup, params).map(drop),
        other => Err(GameError::UnknownGame(other.to_string())),
    };
    res.map_err(|e| vec![format!("game.params: {e}")])
}

/// Runs game `id`.
pub fn run_game(id: &str, setup: &Setup, params: &Value) -> Result<GameReport, GameError> {
    match id {
        "axioms" => exhaustive::axioms(setup, exhaustive::prepare_axioms(setup, params)?),
        "non_injectivity" => {
            exhaustive::non_injectivity(setup, exhaustive::prepare_non_injectivity(setup, params)?)
        }
        "pushforward" => {
            embedding::pushforward(setup, embedding::prepare_pushforward(setup, params)?)
        }
        "concentration" => {
            embedding::concentration(setup, embedding::prepare_concentration(setup, params)?)
        }
        "undetectability" => watermarking::undetectability(
            setup,
            watermarking::prepare_undetectability(setup, params)?,
        ),
        "faithfulness" => {
            watermarking::faithfulness(setup, watermarking::prepare_faithfulness(setup, params)?)
        }
        "exploit" => watermarking::exploit(setup, watermarking::prepare_exploit(setup, params)?),
        "soundness" => {
            ledger_games::soundness(setup, ledger_games::prepare_soundness(setup, params)?)
        }
        "anytime" => ledger_games::anytime(setup, ledger_games::prepare_anytime(setup, params)?),
        "disjointness" => {
            ledger_games::disjointness(setup, ledger_games::prepare_disjointness(setup, params)?)
        }
        "forgery" => chain::forgery(setup, chain::prepare_forgery(setup, params)?),
        "chain_modes" => chain::chain_modes(setup, chain::prepare_chain_modes(setup, params)?),
        other => Err(GameError::UnknownGame(other.to_string())),
    }
}
