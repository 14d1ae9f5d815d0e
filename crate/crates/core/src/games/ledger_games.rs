//! Games on the ideal attribution mechanism itself: planting soundness,
//! anytime soundness against timed adversaries, and cross-ledger disjointness.

use rand::Rng;
use serde::Deserialize;

use super::adversary::{Deferred, EdgeAdversary, FixedString, TimePolicy, TimedAdversary};
use super::{par_trials, parse_params, GameError, GameReport, Rate, Setup};
use crate::attribution::{
    ledger_attr, robust_attr, selected_windows, Ledger, Rule, SelectionRule, TimeIndex,
};
use crate::bits::BitString;
use crate::model::{bernoulli, sample_response, LanguageModel, Model};
use crate::predicate::Predicate;
use crate::rng::{trial_rng, TrialRng};

fn some_zero() -> Option<u64> {
    Some(0)
}

// ---------------------------------------------------------------- soundness

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct SoundnessParams {
    /// `len(y)`, drawn before any interaction.
    #[serde(default = "d32")]
    payload_len: usize,
    /// Sampling queries `m`.
    #[serde(default = "d10")]
    transcripts: usize,
    /// `ℓ`; the ledger holds `T = m · ℓ` response bits.
    #[serde(default = "d100")]
    response_len: usize,
    #[serde(default = "some_zero")]
    max_violations: Option<u64>,
    #[serde(default)]
    min_rate: Option<f64>,
}

fn d32() -> usize {
    32
}
fn d10() -> usize {
    10
}
fn d100() -> usize {
    100
}

pub(super) struct Soundness {
    p: SoundnessParams,
    rule: Rule,
    trials: u64,
}

pub(super) fn prepare_soundness(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<Soundness, GameError> {
    let p: SoundnessParams = parse_params(v)?;
    if p.payload_len == 0 || p.payload_len > p.response_len {
        return Err(GameError::Params(format!(
            "payload_len = {} must be in 1..=response_len = {}",
            p.payload_len, p.response_len
        )));
    }
    if p.transcripts == 0 {
        return Err(GameError::Params("transcripts must be positive".into()));
    }
    Ok(Soundness {
        rule: setup
            .rule
            .clone()
            .unwrap_or(Rule::PathMeasure { alpha: 20.0 }),
        trials: setup.trials_or(10_000),
        p,
    })
}

/// The planting prompt: a copy instruction when the model follows them.
fn planting_prompt(model: &Model, y: &BitString) -> BitString {
    match model {
        Model::Copy(c) => c.instruction(y),
        _ => y.clone(),
    }
}

pub(super) fn soundness(setup: &Setup, g: Soundness) -> Result<GameReport, GameError> {
    let Soundness { p, rule, trials } = g;
    let model: &dyn LanguageModel = &setup.model;
    let run = |t: u64| -> Result<(bool, Option<Ledger>), GameError> {
        let mut rng = trial_rng(setup.seed, "soundness", t);
        let y = BitString::random(&mut rng, p.payload_len);
        let prompt = planting_prompt(&setup.model, &y);
        let mut ledger = Ledger::new(p.response_len);
        for _ in 0..p.transcripts {
            let u = sample_response(model, &prompt, p.response_len, &mut rng);
            ledger
                .push_transcript(prompt.clone(), &u)
                .map_err(GameError::from)?;
        }
        let hit = ledger_attr(&rule, &ledger, &y, Some(model))?;
        Ok((hit, (t == 0).then_some(ledger)))
    };
    let results = par_trials(trials, run)?;
    let violations = results.iter().filter(|(hit, _)| *hit).count() as u64;
    let total_bits = (p.transcripts * p.response_len) as u64;

    let mut r = setup.base_report("soundness", trials);
    r.param("payload_len", p.payload_len)
        .param("m", p.transcripts)
        .param("ell", p.response_len)
        .param("T", total_bits)
        .note("rule", rule.describe())
        .counter("violations", violations)
        .rate("violation", Rate::new(violations, trials));
    if let Rule::PathMeasure { alpha } = rule {
        r.param("alpha", alpha)
            .metric("bound_T_2^-alpha", total_bits as f64 * (-alpha).exp2());
    }
    if let Some(max) = p.max_violations {
        r.check_at_most("violations", violations as f64, max as f64);
    }
    if let Some(min) = p.min_rate {
        r.check_at_least("violation_rate", Rate::new(violations, trials).value(), min);
    }
    r.ledger = results.into_iter().next().and_then(|(_, l)| l);
    Ok(r)
}

// ---------------------------------------------------------------- anytime

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolicyKind {
    #[default]
    All,
    Aligned,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AnytimeAdversary {
    #[default]
    Edge,
    Fixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct AnytimeParams {
    #[serde(default = "d16")]
    n: usize,
    /// Blocks per transcript; `ℓ = blocks · n`.
    #[serde(default = "d2")]
    blocks: usize,
    #[serde(default = "d1")]
    transcripts: usize,
    #[serde(default)]
    policy: PolicyKind,
    #[serde(default)]
    adversary: AnytimeAdversary,
    /// Under the aligned policy, hold early outputs until the next aligned
    /// time; when false an early output is a protocol error.
    #[serde(default = "yes")]
    defer: bool,
    /// Target of the fixed adversary; random from the seed when absent.
    #[serde(default)]
    fixed: Option<BitString>,
    #[serde(default)]
    expect_rate: Option<f64>,
    #[serde(default = "tol")]
    tolerance: f64,
    #[serde(default)]
    max_rate: Option<f64>,
}

fn d16() -> usize {
    16
}
fn d2() -> usize {
    2
}
fn d1() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn tol() -> f64 {
    0.02
}

pub(super) struct Anytime {
    p: AnytimeParams,
    rule: Rule,
    phi: Predicate,
    policy: TimePolicy,
    fixed: BitString,
    trials: u64,
}

pub(super) fn prepare_anytime(setup: &Setup, v: &serde_json::Value) -> Result<Anytime, GameError> {
    let p: AnytimeParams = parse_params(v)?;
    if p.n == 0 || p.blocks == 0 || p.transcripts == 0 {
        return Err(GameError::Params(
            "n, blocks and transcripts must be positive".into(),
        ));
    }
    let rule = setup.rule.clone().unwrap_or(Rule::Block { n: p.n });
    let policy = match p.policy {
        PolicyKind::All => TimePolicy::All,
        PolicyKind::Aligned => TimePolicy::BlockAligned(p.n),
    };
    let fixed = p
        .fixed
        .clone()
        .unwrap_or_else(|| BitString::random(&mut trial_rng(setup.seed, "anytime/fixed", 0), p.n));
    Ok(Anytime {
        phi: setup.predicate.clone().unwrap_or(Predicate::EQUALITY),
        trials: setup.trials_or(10_000),
        rule,
        policy,
        fixed,
        p,
    })
}

/// Outcome of one timed interaction.
struct TimedOutcome {
    output: Option<(BitString, TimeIndex)>,
    attr_at_output: bool,
    attr_at_end: bool,
    ledger: Ledger,
}

/// Samples the ledger token by token from `Q̄`, letting the adversary observe
/// every time from genesis on; checks its output time against the policy.
#[allow(clippy::too_many_arguments)]
fn run_timed(
    adv: &mut dyn TimedAdversary,
    policy: TimePolicy,
    rule: &dyn SelectionRule,
    phi: &Predicate,
    model: &dyn LanguageModel,
    prompt: &BitString,
    transcripts: usize,
    ell: usize,
    rng: &mut TrialRng,
) -> Result<TimedOutcome, GameError> {
    let mut ledger = Ledger::new(ell);
    let mut output: Option<(BitString, TimeIndex)> = None;
    let mut attr_at_output = false;
    let mut observe = |ledger: &Ledger, rng: &mut TrialRng| -> Result<(), GameError> {
        if output.is_some() {
            return Ok(());
        }
        if let Some(z) = adv.observe(ledger, rng)? {
            let s = ledger.clock();
            if !policy.admits(s) {
                return Err(GameError::Protocol(format!(
                    "{} output at {s}, outside policy {policy}",
                    adv.describe()
                )));
            }
            attr_at_output = robust_attr(rule, phi, ledger, &z, Some(model))?;
            output = Some((z, s));
        }
        Ok(())
    };
    observe(&ledger, rng)?;
    for _ in 0..transcripts {
        ledger.push_prompt(prompt.clone())?;
        observe(&ledger, rng)?;
        for _ in 0..ell {
            let u = &ledger.transcripts().last().expect("prompted").response;
            let bit = bernoulli(rng, model.next_prob(prompt, u));
            ledger.push_token(bit)?;
            observe(&ledger, rng)?;
        }
    }
    let attr_at_end = match &output {
        Some((z, _)) => robust_attr(rule, phi, &ledger, z, Some(model))?,
        None => false,
    };
    Ok(TimedOutcome {
        output,
        attr_at_output,
        attr_at_end,
        ledger,
    })
}

pub(super) fn anytime(setup: &Setup, g: Anytime) -> Result<GameReport, GameError> {
    let Anytime {
        p,
        rule,
        phi,
        policy,
        fixed,
        trials,
    } = g;
    let model: &dyn LanguageModel = &setup.model;
    let ell = p.n * p.blocks;
    let run = |t: u64| -> Result<TimedOutcome, GameError> {
        let mut rng = trial_rng(setup.seed, "anytime", t);
        let mut adv: Box<dyn TimedAdversary> = match p.adversary {
            AnytimeAdversary::Edge => Box::new(EdgeAdversary::new(&rule, Some(model))),
            AnytimeAdversary::Fixed => Box::new(FixedString::new(fixed.clone())),
        };
        if p.defer && policy != TimePolicy::All {
            adv = Box::new(Deferred::new(adv, policy));
        }
        run_timed(
            adv.as_mut(),
            policy,
            &rule,
            &phi,
            model,
            &setup.prompt,
            p.transcripts,
            ell,
            &mut rng,
        )
    };
    let results = par_trials(trials, run)?;
    let fired = results.iter().filter(|o| o.output.is_some()).count() as u64;
    let violations = results
        .iter()
        .filter(|o| o.output.is_some() && !o.attr_at_output && o.attr_at_end)
        .count() as u64;
    let mean_j = if fired > 0 {
        results
            .iter()
            .filter_map(|o| o.output.as_ref().map(|(_, s)| s.j as f64))
            .sum::<f64>()
            / fired as f64
    } else {
        0.0
    };
    let rate = Rate::new(violations, trials);

    let mut r = setup.base_report("anytime", trials);
    r.param("n", p.n)
        .param("m", p.blocks)
        .param("ell", ell)
        .param("transcripts", p.transcripts)
        .note("policy", policy.to_string())
        .note("rule", rule.describe())
        .note("phi", format!("{phi:?}"))
        .note(
            "adversary",
            match p.adversary {
                AnytimeAdversary::Edge => "edge",
                AnytimeAdversary::Fixed => "fixed",
            },
        )
        .counter("fired", fired)
        .counter("violations", violations)
        .rate("violation", rate)
        .metric("mean_output_j", mean_j);
    if let Some(expect) = p.expect_rate {
        r.check_at_least("violation_rate_low", rate.value(), expect - p.tolerance)
            .check_at_most("violation_rate_high", rate.value(), expect + p.tolerance);
    }
    let max = p.max_rate.or(match (p.policy, p.expect_rate) {
        (PolicyKind::Aligned, None) => Some(1e-3),
        _ => None,
    });
    if let Some(max) = max {
        r.check_at_most("violation_rate", rate.value(), max);
    }
    r.ledger = results.into_iter().next().map(|o| o.ledger);
    Ok(r)
}

// ------------------------------------------------------------ disjointness

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct DisjointParams {
    #[serde(default = "d32")]
    n: usize,
    #[serde(default = "d2")]
    blocks: usize,
    #[serde(default = "d1")]
    transcripts: usize,
    #[serde(default = "some_zero")]
    max_hits: Option<u64>,
}

pub(super) struct Disjointness {
    p: DisjointParams,
    rule: Rule,
    phi: Predicate,
    trials: u64,
}

pub(super) fn prepare_disjointness(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<Disjointness, GameError> {
    let p: DisjointParams = parse_params(v)?;
    if p.n == 0 || p.blocks == 0 || p.transcripts == 0 {
        return Err(GameError::Params(
            "n, blocks and transcripts must be positive".into(),
        ));
    }
    Ok(Disjointness {
        rule: setup.rule.clone().unwrap_or(Rule::Block { n: p.n }),
        phi: setup.predicate.clone().unwrap_or(Predicate::EQUALITY),
        trials: setup.trials_or(10_000),
        p,
    })
}

fn independent_ledger(
    setup: &Setup,
    p: &DisjointParams,
    domain: &str,
    t: u64,
) -> Result<(Ledger, TrialRng), GameError> {
    let ell = p.n * p.blocks;
    let mut rng = trial_rng(setup.seed, domain, t);
    let mut ledger = Ledger::new(ell);
    for _ in 0..p.transcripts {
        let u = sample_response(&setup.model, &setup.prompt, ell, &mut rng);
        ledger.push_transcript(setup.prompt.clone(), &u)?;
    }
    Ok((ledger, rng))
}

pub(super) fn disjointness(setup: &Setup, g: Disjointness) -> Result<GameReport, GameError> {
    let Disjointness {
        p,
        rule,
        phi,
        trials,
    } = g;
    let model: &dyn LanguageModel = &setup.model;
    let run = |t: u64| -> Result<(bool, bool), GameError> {
        let (a, mut rng) = independent_ledger(setup, &p, "disjointness/a", t)?;
        let (b, _) = independent_ledger(setup, &p, "disjointness/b", t)?;
        let windows = selected_windows(&rule, &a, p.n, Some(model))?;
        if windows.is_empty() {
            return Ok((false, false));
        }
        let (_, z) = &windows[rng.gen_range(0..windows.len())];
        Ok((true, robust_attr(&rule, &phi, &b, z, Some(model))?))
    };
    let results = par_trials(trials, run)?;
    let queries = results.iter().filter(|(q, _)| *q).count() as u64;
    let hits = results.iter().filter(|(_, h)| *h).count() as u64;

    let mut r = setup.base_report("disjointness", trials);
    r.param("n", p.n)
        .param("m", p.blocks)
        .param("transcripts", p.transcripts)
        .note("rule", rule.describe())
        .note("phi", format!("{phi:?}"))
        .counter("queries", queries)
        .counter("cross_hits", hits)
        .rate("cross_hit", Rate::new(hits, queries));
    if let Some(max) = p.max_hits {
        r.check_at_most("cross_hits", hits as f64, max as f64);
    }
    Ok(r)
}
