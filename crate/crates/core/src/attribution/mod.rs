//! Ledgers, selection rules, and the ideal attribution decisions they induce.
//!
//! A selection rule marks, as each response token arrives, which freshly
//! completed suffixes become attributable. Within one transcript the
//! attribution set is the union of everything ever marked; over a ledger it is
//! the union across transcripts. Substrings straddling two transcripts do not
//! exist.
//!
//! Robust attribution widens the set by a [`Predicate`]: `ζ` is attributable
//! when some selected window `y` of the same length has `ζ ∈ Φ(y)`. It is
//! computed by scanning selected windows, never by materializing expansions.

mod io;
mod ledger;
mod maps;
mod rules;

pub use io::{read_ledger, write_ledger, LedgerIoError};
pub use ledger::{Ledger, LedgerEvent, TimeIndex, Transcript};
pub use maps::{
    attribution_set, check_axioms, first_map_mismatch, non_injectivity_pair, AttributionMap,
    AxiomViolation, InducedMap, RuleFromMap, SetMap,
};
pub use rules::{FnRule, RandomRule, Rule, SelectionRule};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::bits::{BitError, BitString};
use crate::model::LanguageModel;
use crate::predicate::Predicate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributionError {
    #[error("rule {0} requires a language model")]
    MissingModel(String),
    #[error("ledger protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Bits(#[from] BitError),
}

/// `𝒵(x, ρ, ζ)`.
pub fn eval_rule(
    rule: &dyn SelectionRule,
    prompt: &BitString,
    prefix: &BitString,
    suffix: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    rule.decide(prompt, prefix, suffix, model)
}

/// Whether the window `u[start..start + len]` is selected.
fn window_selected(
    rule: &dyn SelectionRule,
    t: &Transcript,
    start: usize,
    len: usize,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    if !rule.admits(start, len) {
        return Ok(false);
    }
    if !rule.reads_content() {
        return Ok(true);
    }
    rule.decide(
        &t.prompt,
        &t.response.prefix(start),
        &t.response.range(start..start + len),
        model,
    )
}

fn check_model(
    rule: &dyn SelectionRule,
    model: Option<&dyn LanguageModel>,
) -> Result<(), AttributionError> {
    if rule.requires_model() && model.is_none() {
        return Err(AttributionError::MissingModel(rule.describe()));
    }
    Ok(())
}

/// `Attr^π(ζ)`: some occurrence `u_{k:j} = ζ` has `𝒵(x, u_{1:k−1}, u_{k:j}) = 1`.
pub fn transcript_attr(
    rule: &dyn SelectionRule,
    transcript: &Transcript,
    zeta: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    check_model(rule, model)?;
    let u = &transcript.response;
    let n = zeta.len();
    if n == 0 || n > u.len() {
        return Ok(false);
    }
    for start in 0..=u.len() - n {
        if rule.admits(start, n)
            && u.window_distance(start, zeta) == 0
            && window_selected(rule, transcript, start, n, model)?
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `Attr_t(ζ)` over the ledger snapshot; the in-progress transcript counts
/// with its current prefix.
pub fn ledger_attr(
    rule: &dyn SelectionRule,
    ledger: &Ledger,
    zeta: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    for t in ledger.transcripts() {
        if transcript_attr(rule, t, zeta, model)? {
            return Ok(true);
        }
    }
    check_model(rule, model)?;
    Ok(false)
}

/// `Attr^Φ_t(ζ)`: some selected window `y` with `len(y) = len(ζ)` has `ζ ∈ Φ(y)`.
pub fn robust_attr(
    rule: &dyn SelectionRule,
    predicate: &Predicate,
    ledger: &Ledger,
    zeta: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    check_model(rule, model)?;
    let n = zeta.len();
    if n == 0 {
        return Ok(false);
    }
    for t in ledger.transcripts() {
        let u = &t.response;
        if n > u.len() {
            continue;
        }
        for start in 0..=u.len() - n {
            if rule.admits(start, n)
                && predicate.eval_window(u, start, zeta)?
                && window_selected(rule, t, start, n, model)?
            {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Every selected window of the ledger with its location, in ledger order.
pub fn selected_windows(
    rule: &dyn SelectionRule,
    ledger: &Ledger,
    len: usize,
    model: Option<&dyn LanguageModel>,
) -> Result<Vec<(TimeIndex, BitString)>, AttributionError> {
    check_model(rule, model)?;
    let mut out = Vec::new();
    for (idx, t) in ledger.transcripts().iter().enumerate() {
        let u = &t.response;
        if len == 0 || len > u.len() {
            continue;
        }
        for start in 0..=u.len() - len {
            if window_selected(rule, t, start, len, model)? {
                out.push((
                    TimeIndex::new(idx + 1, start + len),
                    u.range(start..start + len),
                ));
            }
        }
    }
    Ok(out)
}

/// The `ℓ×ℓ` upper-triangular matrix `z_{k,j} = 𝒵(x, u_{1:k−1}, u_{k:j})`,
/// indexed `[k − 1][j − 1]`.
pub fn selection_vectors(
    rule: &dyn SelectionRule,
    transcript: &Transcript,
    model: Option<&dyn LanguageModel>,
) -> Result<Vec<Vec<bool>>, AttributionError> {
    check_model(rule, model)?;
    let len = transcript.response.len();
    let mut z = vec![vec![false; len]; len];
    for (k, row) in z.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate().skip(k) {
            *cell = window_selected(rule, transcript, k, j + 1 - k, model)?;
        }
    }
    Ok(z)
}

/// Suffixes of `u` selected at its last token, i.e. `trAtt(x, u) ∖ trAtt(x, u_{1:−1})`
/// candidates, longest first.
pub fn selected_suffixes(
    rule: &dyn SelectionRule,
    prompt: &BitString,
    response: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<Vec<BitString>, AttributionError> {
    check_model(rule, model)?;
    let j = response.len();
    let mut out = Vec::new();
    for start in 0..j {
        if !rule.admits(start, j - start) {
            continue;
        }
        let suffix = response.range(start..j);
        if !rule.reads_content() || rule.decide(prompt, &response.prefix(start), &suffix, model)? {
            out.push(suffix);
        }
    }
    Ok(out)
}

/// Whether `trAtt(x, u)` is non-empty.
pub fn transcript_set_nonempty(
    rule: &dyn SelectionRule,
    prompt: &BitString,
    response: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<bool, AttributionError> {
    let t = Transcript::new(prompt.clone(), response.clone());
    for j in 1..=response.len() {
        for start in 0..j {
            if window_selected(rule, &t, start, j - start, model)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Distinct selected strings of the ledger; exhaustive, for small ledgers.
pub fn ledger_attribution_set(
    rule: &dyn SelectionRule,
    ledger: &Ledger,
    model: Option<&dyn LanguageModel>,
) -> Result<BTreeSet<BitString>, AttributionError> {
    let mut out = BTreeSet::new();
    for t in ledger.transcripts() {
        out.extend(attribution_set(rule, &t.prompt, &t.response, model)?);
    }
    Ok(out)
}
