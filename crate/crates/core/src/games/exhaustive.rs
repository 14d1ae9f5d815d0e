//! Exhaustive checks over all short prompts and responses: the attribution
//! axioms, the rule ↔ map round trip, and non-injectivity of rules → maps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Deserialize;

use super::{parse_params, GameError, GameReport, Setup};
use crate::attribution::{
    check_axioms, first_map_mismatch, non_injectivity_pair, InducedMap, RandomRule, Rule,
    RuleFromMap, SelectionRule, SetMap,
};
use crate::bits::{BitString, EXHAUSTIVE_LIMIT};
use crate::model::{CopyModel, LanguageModel, Model, TableModel};
use crate::rng::derive_seed;

fn universe_check(lens: &[(usize, &str)]) -> Result<(), GameError> {
    for (len, name) in lens {
        if *len > EXHAUSTIVE_LIMIT {
            return Err(GameError::Params(format!(
                "{name} = {len} exceeds the exhaustive limit {EXHAUSTIVE_LIMIT}"
            )));
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ axioms

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct AxiomParams {
    #[serde(default = "d2")]
    max_prompt_len: usize,
    #[serde(default = "d6")]
    max_response_len: usize,
    #[serde(default = "d50")]
    random_rules: u64,
}

fn d2() -> usize {
    2
}
fn d6() -> usize {
    6
}
fn d50() -> u64 {
    50
}

pub(super) fn prepare_axioms(_: &Setup, v: &serde_json::Value) -> Result<AxiomParams, GameError> {
    let p: AxiomParams = parse_params(v)?;
    universe_check(&[
        (p.max_prompt_len, "max_prompt_len"),
        (p.max_response_len, "max_response_len"),
    ])?;
    Ok(p)
}

/// A depth-2 table model with every kind of conditional: near-deterministic,
/// biased and uniform.
fn probe_table() -> TableModel {
    let mut e = BTreeMap::new();
    e.insert(BitString::new(), 0.9);
    e.insert(BitString::from_u64(1, 1), 0.3);
    e.insert(BitString::from_u64(0b01, 2), 0.75);
    e.insert(BitString::from_u64(0b10, 2), 1.0);
    TableModel::new(2, e, 0.5)
}

/// The built-in rules with the models they are evaluated under.
fn builtin_rules(setup: &Setup) -> Vec<(Box<dyn SelectionRule>, Option<Model>)> {
    let table = Model::Table(probe_table());
    let copy = Model::Copy(CopyModel::new(BitString::from_u64(1, 1)));
    let mut out: Vec<(Box<dyn SelectionRule>, Option<Model>)> = vec![
        (Box::new(Rule::Constant { value: true }), None),
        (Box::new(Rule::Constant { value: false }), None),
        (Box::new(Rule::Block { n: 1 }), None),
        (Box::new(Rule::Block { n: 2 }), None),
        (Box::new(Rule::Block { n: 3 }), None),
        (Box::new(Rule::DssBlock { n: 1 }), None),
        (Box::new(Rule::DssBlock { n: 2 }), None),
        (
            Box::new(Rule::PotentialBlock { n: 2, beta: 0.0 }),
            Some(Model::uniform()),
        ),
        (
            Box::new(Rule::PotentialBlock { n: 2, beta: 0.25 }),
            Some(table.clone()),
        ),
        (
            Box::new(Rule::DssPotential { n: 1, beta: 0.25 }),
            Some(table.clone()),
        ),
        (
            Box::new(Rule::PathMeasure { alpha: 2.0 }),
            Some(table.clone()),
        ),
        (Box::new(Rule::PathMeasure { alpha: 1.5 }), Some(copy)),
        (
            Box::new(Rule::PathMeasure { alpha: 3.0 }),
            Some(Model::uniform()),
        ),
    ];
    if let Some(rule) = &setup.rule {
        out.push((Box::new(rule.clone()), Some(setup.model.clone())));
    }
    out
}

struct RuleOutcome {
    name: String,
    axiom_violation: Option<String>,
    round_trip_mismatch: Option<String>,
}

fn check_rule(
    rule: &dyn SelectionRule,
    model: Option<&dyn LanguageModel>,
    prompts: &[BitString],
    longest: &[BitString],
    responses: &[BitString],
) -> Result<RuleOutcome, GameError> {
    let induced = InducedMap::new(rule, model)?;
    let mut axiom_violation = None;
    'outer: for x in prompts {
        for u in longest {
            if let Err(v) = check_axioms(&induced, x, u) {
                axiom_violation = Some(v.to_string());
                break 'outer;
            }
        }
    }
    let table = SetMap::tabulate(&induced, prompts, responses);
    let back = RuleFromMap::new(table.clone());
    let again = InducedMap::new(&back, None)?;
    let round_trip_mismatch = first_map_mismatch(&table, &again, prompts, responses)
        .map(|(x, u, z)| format!("x = {x}, u = {u}, ζ = {z}"));
    Ok(RuleOutcome {
        name: rule.describe(),
        axiom_violation,
        round_trip_mismatch,
    })
}

pub(super) fn axioms(setup: &Setup, p: AxiomParams) -> Result<GameReport, GameError> {
    let prompts = BitString::all_up_to(p.max_prompt_len)?;
    let responses = BitString::all_up_to(p.max_response_len)?;
    let longest: Vec<BitString> = BitString::all_of_length(p.max_response_len)?.collect();
    let builtin = builtin_rules(setup);
    let randoms: Vec<RandomRule> = (0..p.random_rules)
        .map(|i| RandomRule::new(derive_seed(setup.seed, "axioms/random", i)))
        .collect();

    let mut jobs: Vec<(&dyn SelectionRule, Option<&dyn LanguageModel>)> = builtin
        .iter()
        .map(|(r, m)| (r.as_ref(), m.as_ref().map(|m| m as &dyn LanguageModel)))
        .collect();
    jobs.extend(randoms.iter().map(|r| (r as &dyn SelectionRule, None)));
    let outcomes: Vec<RuleOutcome> = jobs
        .par_iter()
        .map(|(r, m)| check_rule(*r, *m, &prompts, &longest, &responses))
        .collect::<Result<_, _>>()?;

    let axiom_failures: Vec<&RuleOutcome> = outcomes
        .iter()
        .filter(|o| o.axiom_violation.is_some())
        .collect();
    let trip_failures: Vec<&RuleOutcome> = outcomes
        .iter()
        .filter(|o| o.round_trip_mismatch.is_some())
        .collect();

    let mut r = setup.base_report("axioms", outcomes.len() as u64);
    r.param("max_prompt_len", p.max_prompt_len)
        .param("max_response_len", p.max_response_len)
        .counter("builtin_rules", builtin.len() as u64)
        .counter("random_rules", p.random_rules)
        .counter("prompts", prompts.len() as u64)
        .counter("responses", responses.len() as u64)
        .counter("axiom_violations", axiom_failures.len() as u64)
        .counter("round_trip_mismatches", trip_failures.len() as u64)
        .check_at_most("axiom_violations", axiom_failures.len() as f64, 0.0)
        .check_at_most("round_trip_mismatches", trip_failures.len() as f64, 0.0);
    if let Some(o) = axiom_failures.first() {
        r.note(
            "first_axiom_violation",
            format!(
                "{}: {}",
                o.name,
                o.axiom_violation.as_deref().unwrap_or_default()
            ),
        );
    }
    if let Some(o) = trip_failures.first() {
        r.note(
            "first_round_trip_mismatch",
            format!(
                "{}: {}",
                o.name,
                o.round_trip_mismatch.as_deref().unwrap_or_default()
            ),
        );
    }
    Ok(r)
}

// --------------------------------------------------------- non-injectivity

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct NonInjectivityParams {
    #[serde(default = "d3")]
    max_y_len: usize,
    #[serde(default = "d2")]
    max_prompt_len: usize,
    #[serde(default = "d8")]
    max_response_len: usize,
}

fn d3() -> usize {
    3
}
fn d8() -> usize {
    8
}

pub(super) fn prepare_non_injectivity(
    _: &Setup,
    v: &serde_json::Value,
) -> Result<NonInjectivityParams, GameError> {
    let p: NonInjectivityParams = parse_params(v)?;
    universe_check(&[
        (p.max_y_len, "max_y_len"),
        (p.max_prompt_len, "max_prompt_len"),
        (p.max_response_len, "max_response_len"),
    ])?;
    if p.max_y_len == 0 {
        return Err(GameError::Params("max_y_len must be positive".into()));
    }
    Ok(p)
}

pub(super) fn non_injectivity(
    setup: &Setup,
    p: NonInjectivityParams,
) -> Result<GameReport, GameError> {
    let prompts = BitString::all_up_to(p.max_prompt_len)?;
    let responses = BitString::all_up_to(p.max_response_len)?;
    let ys: Vec<BitString> = BitString::all_up_to(p.max_y_len)?
        .into_iter()
        .filter(|y| !y.is_empty())
        .collect();
    let zero = BitString::from_u64(0, 1);
    let outcomes: Vec<(bool, Option<String>)> = ys
        .par_iter()
        .map(|y| -> Result<_, GameError> {
            let (z, z_prime) = non_injectivity_pair(y);
            let differ = z.decide(&zero, y, y, None)? != z_prime.decide(&zero, y, y, None)?;
            let a = InducedMap::new(&z, None)?;
            let b = InducedMap::new(&z_prime, None)?;
            let mismatch = first_map_mismatch(&a, &b, &prompts, &responses)
                .map(|(x, u, w)| format!("y = {y}: x = {x}, u = {u}, ζ = {w}"));
            Ok((differ, mismatch))
        })
        .collect::<Result<_, _>>()?;
    let differ = outcomes.iter().filter(|(d, _)| *d).count() as u64;
    let mismatches: Vec<&String> = outcomes.iter().filter_map(|(_, m)| m.as_ref()).collect();
    let pairs = ys.len() as u64;

    let mut r = setup.base_report("non_injectivity", pairs);
    r.param("max_y_len", p.max_y_len)
        .param("max_prompt_len", p.max_prompt_len)
        .param("max_response_len", p.max_response_len)
        .counter("pairs", pairs)
        .counter("rules_differ", differ)
        .counter("map_mismatches", mismatches.len() as u64)
        .check_at_least("rules_differ", differ as f64, pairs as f64)
        .check_at_most("map_mismatches", mismatches.len() as f64, 0.0);
    if let Some(m) = mismatches.first() {
        r.note("first_map_mismatch", m.as_str());
    }
    Ok(r)
}
