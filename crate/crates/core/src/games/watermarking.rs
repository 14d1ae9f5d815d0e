//! Games against the PRC watermark: the undetectability battery,
//! faithfulness to the ideal robust attribution, and the conservative-target
//! exploit.

use rand::seq::index::sample;
use rand::Rng;
use serde::Deserialize;

use super::adversary::{Deferred, EdgeAdversary, TimePolicy, TimedAdversary};
use super::stats::ball_fraction;
use super::{par_chunks, par_trials, parse_params, GameError, GameReport, Rate, Setup};
use crate::attribution::{robust_attr, Ledger, Rule, SelectionRule};
use crate::bits::BitString;
use crate::config::SchemeSpec;
use crate::model::{sample_response, LanguageModel};
use crate::prc::CodecSpec;
use crate::predicate::{radius, Predicate};
use crate::rng::{trial_rng, TrialRng};
use crate::watermark::{
    gen_keys, verify, wat_respond, WatParams, WatSession, WatermarkError, WatermarkKeys,
};

/// Flips `count` distinct uniformly chosen positions of `y`.
pub(super) fn flip_random(y: &BitString, count: usize, rng: &mut TrialRng) -> BitString {
    let mut out = y.clone();
    for i in sample(rng, y.len(), count.min(y.len())).iter() {
        out.flip(i);
    }
    out
}

fn prc_scheme(
    setup: &Setup,
    default: impl FnOnce() -> (WatParams, CodecSpec),
) -> Result<(WatParams, CodecSpec), GameError> {
    match &setup.scheme {
        None => Ok(default()),
        Some(SchemeSpec::Prc { params, codec }) => Ok((*params, codec.clone())),
        Some(SchemeSpec::Chain { .. }) => Err(GameError::Params(
            "this game needs the prc scheme, the config has a chain scheme".into(),
        )),
    }
}

fn check_keys(lambda: usize, params: &WatParams, codec: &CodecSpec) -> Result<(), GameError> {
    // Key generation validates the pairing; the ideal backend draws nothing.
    gen_keys(lambda, params, codec, &mut trial_rng(0, "probe", 0))?;
    Ok(())
}

// ---------------------------------------------------------- undetectability

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct UndetectParams {
    #[serde(default = "hundred_k")]
    samples: u64,
    /// Defaults to 0.02 for the ideal backend; other backends are diagnostic.
    #[serde(default)]
    max_advantage: Option<f64>,
    #[serde(default = "ten_k")]
    chunk: u64,
}

fn hundred_k() -> u64 {
    100_000
}
fn ten_k() -> u64 {
    10_000
}

pub(super) struct Undetect {
    p: UndetectParams,
    params: WatParams,
    codec: CodecSpec,
}

pub(super) fn prepare_undetectability(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<Undetect, GameError> {
    let mut p: UndetectParams = parse_params(v)?;
    if let Some(t) = setup.trials {
        p.samples = t;
    }
    let (params, codec) = prc_scheme(setup, || {
        (
            WatParams::new(128, 2, 0.0, 0.0),
            CodecSpec::ideal(128, 0, Predicate::EQUALITY),
        )
    })?;
    check_keys(setup.lambda, &params, &codec)?;
    Ok(Undetect { p, params, codec })
}

const WIDTHS: [usize; 3] = [2, 4, 8];
const LAGS: [usize; 4] = [1, 2, 3, 4];

/// Integer sufficient statistics of the distinguisher battery.
#[derive(Debug, Clone, PartialEq)]
struct Battery {
    samples: u64,
    /// Samples with bit `i` set.
    bit: Vec<u64>,
    /// Samples with weight above `ℓ/2`.
    majority: u64,
    /// Samples whose lag-`L` agreement count exceeds half the pairs.
    lag: [u64; LAGS.len()],
    /// Samples whose aligned `w`-bit pattern chi-square exceeds its mean.
    chi: [u64; WIDTHS.len()],
    /// Aligned `w`-bit sub-blocks with each pattern, over all samples.
    pattern: [Vec<u64>; WIDTHS.len()],
}

impl Battery {
    fn new(ell: usize) -> Self {
        Self {
            samples: 0,
            bit: vec![0; ell],
            majority: 0,
            lag: [0; LAGS.len()],
            chi: [0; WIDTHS.len()],
            pattern: WIDTHS.map(|w| vec![0; 1 << w]),
        }
    }

    fn add(&mut self, u: &BitString) {
        let ell = u.len();
        self.samples += 1;
        for (i, c) in self.bit.iter_mut().enumerate() {
            *c += u.get(i) as u64;
        }
        self.majority += (2 * u.count_ones() > ell) as u64;
        for (slot, &l) in self.lag.iter_mut().zip(&LAGS) {
            if l < ell {
                let agree = (0..ell - l).filter(|&i| u.get(i) == u.get(i + l)).count();
                *slot += (2 * agree > ell - l) as u64;
            }
        }
        for (wi, &w) in WIDTHS.iter().enumerate() {
            let blocks = ell / w;
            if blocks == 0 {
                continue;
            }
            let mut counts = vec![0i64; 1 << w];
            for b in 0..blocks {
                let p = u.range(b * w..(b + 1) * w).to_u64() as usize;
                counts[p] += 1;
                self.pattern[wi][p] += 1;
            }
            // χ² > df  ⟺  Σ (2^w c − B)² > (2^w − 1) · 2^w · B, in integers.
            let cells = 1i64 << w;
            let b = blocks as i64;
            let stat: i64 = counts.iter().map(|&c| (cells * c - b).pow(2)).sum();
            self.chi[wi] += (stat > (cells - 1) * cells * b) as u64;
        }
    }

    fn merge(&mut self, o: &Battery) {
        self.samples += o.samples;
        self.bit.iter_mut().zip(&o.bit).for_each(|(a, b)| *a += b);
        self.majority += o.majority;
        self.lag.iter_mut().zip(&o.lag).for_each(|(a, b)| *a += b);
        self.chi.iter_mut().zip(&o.chi).for_each(|(a, b)| *a += b);
        for (a, b) in self.pattern.iter_mut().zip(&o.pattern) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

fn advantage(a: u64, na: u64, b: u64, nb: u64) -> f64 {
    if na == 0 || nb == 0 {
        return 0.0;
    }
    (a as f64 / na as f64 - b as f64 / nb as f64).abs()
}

fn max_adv<'a>(pairs: impl Iterator<Item = (&'a u64, &'a u64)>, na: u64, nb: u64) -> f64 {
    pairs
        .map(|(a, b)| advantage(*a, na, *b, nb))
        .fold(0.0, f64::max)
}

pub(super) fn undetectability(setup: &Setup, g: Undetect) -> Result<GameReport, GameError> {
    let Undetect { p, params, codec } = g;
    let ell = params.response_len();
    let model: &dyn LanguageModel = &setup.model;
    let ideal = matches!(codec, CodecSpec::Ideal { .. });
    // The toy backend keeps one key for the whole run; the ideal backend's
    // key is only its log, so each chunk starts a fresh one.
    let shared = if ideal {
        None
    } else {
        Some(gen_keys(
            setup.lambda,
            &params,
            &codec,
            &mut trial_rng(setup.seed, "undetectability/key", 0),
        )?)
    };
    let chunks = par_chunks(p.samples, p.chunk, |c, size| {
        let mut rng_q = trial_rng(setup.seed, "undetectability/model", c);
        let mut rng_w = trial_rng(setup.seed, "undetectability/wat", c);
        let keys: WatermarkKeys = match &shared {
            Some(k) => k.clone(),
            None => gen_keys(setup.lambda, &params, &codec, &mut rng_w)?,
        };
        let (mut bq, mut bw) = (Battery::new(ell), Battery::new(ell));
        for _ in 0..size {
            bq.add(&sample_response(model, &setup.prompt, ell, &mut rng_q));
            bw.add(&wat_respond(
                model,
                &keys.sk,
                &setup.prompt,
                &params,
                &mut rng_w,
            )?);
        }
        Ok((bq, bw))
    })?;
    let (mut q, mut w) = (Battery::new(ell), Battery::new(ell));
    for (a, b) in &chunks {
        q.merge(a);
        w.merge(b);
    }
    let (nq, nw) = (q.samples, w.samples);
    let families: Vec<(String, f64)> = {
        let mut f = vec![
            (
                "bit_frequency".to_string(),
                max_adv(q.bit.iter().zip(&w.bit), nq, nw),
            ),
            (
                "weight_majority".to_string(),
                advantage(q.majority, nq, w.majority, nw),
            ),
        ];
        for (i, l) in LAGS.iter().enumerate() {
            f.push((format!("lag_{l}"), advantage(q.lag[i], nq, w.lag[i], nw)));
        }
        for (i, wd) in WIDTHS.iter().enumerate() {
            f.push((
                format!("chi_square_w{wd}"),
                advantage(q.chi[i], nq, w.chi[i], nw),
            ));
            let tq: u64 = q.pattern[i].iter().sum();
            let tw: u64 = w.pattern[i].iter().sum();
            f.push((
                format!("pattern_w{wd}"),
                max_adv(q.pattern[i].iter().zip(&w.pattern[i]), tq, tw),
            ));
        }
        f
    };
    let max = families.iter().map(|(_, a)| *a).fold(0.0, f64::max);
    let threshold = p.max_advantage.or(ideal.then_some(0.02));

    let mut r = setup.base_report("undetectability", p.samples);
    r.param("n", params.n)
        .param("m", params.m)
        .param("ell", ell)
        .param("samples", p.samples)
        .note("codec", format!("{codec:?}"))
        .note(
            "battery",
            "bit_frequency(each position); weight_majority; lag_L agreement>half (L=1..4); \
             chi_square_wW>df and pattern_wW frequencies on aligned W-bit sub-blocks (W=2,4,8)",
        );
    for (name, a) in &families {
        r.metric(&format!("advantage/{name}"), *a);
    }
    r.metric("max_advantage", max);
    match threshold {
        Some(t) => {
            r.check_at_most("max_advantage", max, t);
        }
        None => {
            r.note("mode", "diagnostic: no threshold");
        }
    }
    Ok(r)
}

// ------------------------------------------------------------- faithfulness

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FaithAdversary {
    /// Replays a perturbed block of its own transcript and asks a fresh
    /// uniform string.
    #[default]
    Honest,
    /// Perturbs a block past the conservative target radius.
    Exploit,
    /// Queries the edge-of-inclusion candidate at its output time.
    EdgeCoin,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PolicyKind {
    #[default]
    All,
    Aligned,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct FaithParams {
    #[serde(default)]
    adversary: FaithAdversary,
    #[serde(default = "one")]
    transcripts: usize,
    #[serde(default)]
    policy: PolicyKind,
    /// Bits flipped in the replayed block; defaults to the target radius
    /// (honest) or `⌊(δ − γ/2)n⌋` (exploit).
    #[serde(default)]
    flips: Option<usize>,
    /// Also ask one fresh uniform string per trial.
    #[serde(default = "yes")]
    fresh_queries: bool,
    #[serde(default = "zero")]
    max_false_negatives: Option<u64>,
    #[serde(default = "ten")]
    max_false_positives: Option<u64>,
    #[serde(default)]
    min_false_positive_rate: Option<f64>,
    #[serde(default)]
    min_mismatch_rate: Option<f64>,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn zero() -> Option<u64> {
    Some(0)
}
fn ten() -> Option<u64> {
    Some(10)
}

pub(super) struct Faith {
    p: FaithParams,
    params: WatParams,
    codec: CodecSpec,
    rule: Rule,
    target: Predicate,
    flips: usize,
    trials: u64,
}

fn codec_radius(codec: &CodecSpec) -> Option<usize> {
    match codec {
        CodecSpec::Ideal { phi, .. } => phi.hamming_radius(),
        CodecSpec::Toy { .. } => None,
    }
}

pub(super) fn prepare_faithfulness(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<Faith, GameError> {
    let p: FaithParams = parse_params(v)?;
    if p.transcripts == 0 {
        return Err(GameError::Params("transcripts must be positive".into()));
    }
    let (params, codec) = prc_scheme(setup, || {
        (
            WatParams::new(128, 2, 0.0, 0.25),
            CodecSpec::ideal(128, 0, Predicate::hamming(32)),
        )
    })?;
    check_keys(setup.lambda, &params, &codec)?;
    let n = params.n;
    let rule = setup.rule.clone().unwrap_or(if params.beta == 0.0 {
        Rule::Block { n }
    } else {
        Rule::PotentialBlock {
            n,
            beta: params.beta,
        }
    });
    let noise = radius(params.gamma, n);
    let conservative = !setup.model.is_uniform() || p.adversary == FaithAdversary::Exploit;
    let target = match (&setup.predicate, codec_radius(&codec)) {
        (Some(phi), _) => phi.clone(),
        (None, Some(r)) if conservative => Predicate::hamming(r.saturating_sub(noise)),
        (None, Some(r)) => Predicate::hamming(r),
        (None, None) => Predicate::EQUALITY,
    };
    let flips = match (p.flips, p.adversary) {
        (Some(f), _) => f,
        (None, FaithAdversary::Exploit) => {
            let delta_n = codec_radius(&codec).ok_or_else(|| {
                GameError::Params("the exploit adversary needs a Hamming-ball codec".into())
            })?;
            delta_n.saturating_sub(radius(params.gamma / 2.0, n))
        }
        (None, _) => target.hamming_radius().unwrap_or(0),
    };
    if flips > n {
        return Err(GameError::Params(format!(
            "flips = {flips} exceeds n = {n}"
        )));
    }
    Ok(Faith {
        trials: setup.trials_or(10_000),
        p,
        params,
        codec,
        rule,
        target,
        flips,
    })
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    queries: u64,
    fp: u64,
    fn_: u64,
}

impl Tally {
    fn record(&mut self, ver: bool, attr: bool) {
        self.queries += 1;
        self.fp += (ver && !attr) as u64;
        self.fn_ += (!ver && attr) as u64;
    }

    fn add(&mut self, o: Tally) {
        self.queries += o.queries;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

fn ver(keys: &WatermarkKeys, zeta: &BitString) -> Result<bool, GameError> {
    match verify(&keys.pk, zeta) {
        Ok(v) => Ok(v),
        Err(WatermarkError::TooShort { .. }) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

struct FaithTrial {
    replay: Tally,
    fresh: Tally,
    ledger: Ledger,
}

fn faith_replay(setup: &Setup, g: &Faith, t: u64) -> Result<FaithTrial, GameError> {
    let model: &dyn LanguageModel = &setup.model;
    let mut rng = trial_rng(setup.seed, "faithfulness", t);
    let keys = gen_keys(setup.lambda, &g.params, &g.codec, &mut rng)?;
    let ell = g.params.response_len();
    let n = g.params.n;
    let mut ledger = Ledger::new(ell);
    for _ in 0..g.p.transcripts {
        let u = wat_respond(model, &keys.sk, &setup.prompt, &g.params, &mut rng)?;
        ledger.push_transcript(setup.prompt.clone(), &u)?;
    }
    let mut out = FaithTrial {
        replay: Tally::default(),
        fresh: Tally::default(),
        ledger: Ledger::new(ell),
    };
    let ti = rng.gen_range(0..g.p.transcripts);
    let b = rng.gen_range(0..g.params.m);
    let y = ledger.transcripts()[ti].response.range(b * n..(b + 1) * n);
    let zeta = flip_random(&y, g.flips, &mut rng);
    out.replay.record(
        ver(&keys, &zeta)?,
        robust_attr(&g.rule, &g.target, &ledger, &zeta, Some(model))?,
    );
    if g.p.fresh_queries {
        let zeta = BitString::random(&mut rng, n);
        out.fresh.record(
            ver(&keys, &zeta)?,
            robust_attr(&g.rule, &g.target, &ledger, &zeta, Some(model))?,
        );
    }
    out.ledger = ledger;
    Ok(out)
}

fn faith_edge(setup: &Setup, g: &Faith, t: u64) -> Result<FaithTrial, GameError> {
    let model: &dyn LanguageModel = &setup.model;
    let mut rng = trial_rng(setup.seed, "faithfulness", t);
    let keys = gen_keys(setup.lambda, &g.params, &g.codec, &mut rng)?;
    let ell = g.params.response_len();
    let policy = match g.p.policy {
        PolicyKind::All => TimePolicy::All,
        PolicyKind::Aligned => TimePolicy::BlockAligned(g.params.n),
    };
    let edge = EdgeAdversary::new(&g.rule as &dyn SelectionRule, Some(model));
    let mut adv: Box<dyn TimedAdversary> = match policy {
        TimePolicy::All => Box::new(edge),
        aligned => Box::new(Deferred::new(edge, aligned)),
    };
    let mut out = FaithTrial {
        replay: Tally::default(),
        fresh: Tally::default(),
        ledger: Ledger::new(ell),
    };
    let mut ledger = Ledger::new(ell);
    let mut asked = false;
    let mut ask =
        |ledger: &Ledger, rng: &mut TrialRng, tally: &mut Tally| -> Result<(), GameError> {
            if asked {
                return Ok(());
            }
            if let Some(z) = adv.observe(ledger, rng)? {
                if !policy.admits(ledger.clock()) {
                    return Err(GameError::Protocol(format!(
                        "query at {} outside policy {policy}",
                        ledger.clock()
                    )));
                }
                asked = true;
                tally.record(
                    ver(&keys, &z)?,
                    robust_attr(&g.rule, &g.target, ledger, &z, Some(model))?,
                );
            }
            Ok(())
        };
    ask(&ledger, &mut rng, &mut out.replay)?;
    for _ in 0..g.p.transcripts {
        ledger.push_prompt(setup.prompt.clone())?;
        ask(&ledger, &mut rng, &mut out.replay)?;
        let mut session = WatSession::new(model, &keys.sk, setup.prompt.clone(), g.params);
        while let Some(bit) = session.step(&mut rng)? {
            ledger.push_token(bit)?;
            ask(&ledger, &mut rng, &mut out.replay)?;
        }
    }
    out.ledger = ledger;
    Ok(out)
}

pub(super) fn faithfulness(setup: &Setup, g: Faith) -> Result<GameReport, GameError> {
    let results = par_trials(g.trials, |t| match g.p.adversary {
        FaithAdversary::EdgeCoin => faith_edge(setup, &g, t),
        _ => faith_replay(setup, &g, t),
    })?;
    let (mut replay, mut fresh) = (Tally::default(), Tally::default());
    for r in &results {
        replay.add(r.replay);
        fresh.add(r.fresh);
    }
    let mut all = replay;
    all.add(fresh);
    let n = g.params.n;

    let mut r = setup.base_report("faithfulness", g.trials);
    r.param("n", n)
        .param("m", g.params.m)
        .param("ell", g.params.response_len())
        .param("beta", g.params.beta)
        .param("gamma", g.params.gamma)
        .param("flips", g.flips)
        .param("transcripts", g.p.transcripts)
        .note("codec", format!("{:?}", g.codec))
        .note("rule", g.rule.describe())
        .note("target", format!("{:?}", g.target))
        .note(
            "adversary",
            match g.p.adversary {
                FaithAdversary::Honest => "honest",
                FaithAdversary::Exploit => "exploit",
                FaithAdversary::EdgeCoin => "edge_coin",
            },
        )
        .counter("queries", all.queries)
        .counter("false_positives", all.fp)
        .counter("false_negatives", all.fn_)
        .counter("replay_false_negatives", replay.fn_)
        .counter("replay_false_positives", replay.fp)
        .counter("fresh_false_positives", fresh.fp)
        .rate("false_positive", Rate::new(all.fp, all.queries))
        .rate("false_negative", Rate::new(all.fn_, all.queries))
        .rate("mismatch", Rate::new(all.fp + all.fn_, all.queries))
        .rate(
            "replay_false_positive",
            Rate::new(replay.fp, replay.queries),
        );
    if let Some(rad) = g.target.hamming_radius() {
        // Chance that one uniform string lands in one selected window's ball.
        r.metric("ball_fraction_per_window", ball_fraction(n, rad));
    }
    if let Some(max) = g.p.max_false_negatives {
        r.check_at_most("false_negatives", all.fn_ as f64, max as f64);
    }
    if let Some(max) = g.p.max_false_positives {
        r.check_at_most("false_positives", all.fp as f64, max as f64);
    }
    if let Some(min) = g.p.min_false_positive_rate {
        r.check_at_least(
            "replay_false_positive_rate",
            Rate::new(replay.fp, replay.queries).value(),
            min,
        );
    }
    if let Some(min) = g.p.min_mismatch_rate {
        r.check_at_least(
            "mismatch_rate",
            Rate::new(all.fp + all.fn_, all.queries).value(),
            min,
        );
    }
    r.ledger = results.into_iter().next().map(|t| t.ledger);
    Ok(r)
}

// ------------------------------------------------------------------ exploit

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ExploitParams {
    #[serde(default = "delta")]
    delta: f64,
    #[serde(default = "gamma")]
    gamma: f64,
    #[serde(default = "d128")]
    n: usize,
    #[serde(default)]
    beta: f64,
    /// Defaults to `⌊(δ − γ/2)n⌋`.
    #[serde(default)]
    flips: Option<usize>,
    #[serde(default = "min_rate")]
    min_rate: Option<f64>,
}

fn delta() -> f64 {
    0.3
}
fn gamma() -> f64 {
    0.1
}
fn d128() -> usize {
    128
}
fn min_rate() -> Option<f64> {
    Some(0.99)
}

pub(super) struct Exploit {
    p: ExploitParams,
    params: WatParams,
    codec: CodecSpec,
    rule: Rule,
    target: Predicate,
    flips: usize,
    trials: u64,
}

pub(super) fn prepare_exploit(setup: &Setup, v: &serde_json::Value) -> Result<Exploit, GameError> {
    let p: ExploitParams = parse_params(v)?;
    if !(p.gamma > 0.0 && p.delta > p.gamma) {
        return Err(GameError::Precondition(format!(
            "need delta > gamma > 0, got delta = {}, gamma = {}",
            p.delta, p.gamma
        )));
    }
    if p.delta > 1.0 {
        return Err(GameError::Params(format!("delta = {} exceeds 1", p.delta)));
    }
    let n = p.n;
    let params = WatParams::new(n, 1, p.beta, p.gamma);
    let codec = CodecSpec::ideal(n, 0, Predicate::hamming_fraction(p.delta, n));
    check_keys(setup.lambda, &params, &codec)?;
    let flips = p.flips.unwrap_or(radius(p.delta - p.gamma / 2.0, n));
    if flips > n {
        return Err(GameError::Params(format!(
            "flips = {flips} exceeds n = {n}"
        )));
    }
    Ok(Exploit {
        trials: setup.trials_or(1_000),
        params,
        codec,
        rule: setup
            .rule
            .clone()
            .unwrap_or(Rule::PotentialBlock { n, beta: p.beta }),
        target: Predicate::hamming_fraction(p.delta - p.gamma, n),
        flips,
        p,
    })
}

pub(super) fn exploit(setup: &Setup, g: Exploit) -> Result<GameReport, GameError> {
    let model: &dyn LanguageModel = &setup.model;
    let run = |t: u64| -> Result<(bool, bool, Option<Ledger>), GameError> {
        let mut rng = trial_rng(setup.seed, "exploit", t);
        let keys = gen_keys(setup.lambda, &g.params, &g.codec, &mut rng)?;
        let y = wat_respond(model, &keys.sk, &setup.prompt, &g.params, &mut rng)?;
        let mut ledger = Ledger::new(g.params.response_len());
        ledger.push_transcript(setup.prompt.clone(), &y)?;
        let y2 = flip_random(&y, g.flips, &mut rng);
        let v = verify(&keys.pk, &y2)?;
        let a = robust_attr(&g.rule, &g.target, &ledger, &y2, Some(model))?;
        Ok((v, a, (t == 0).then_some(ledger)))
    };
    let results = par_trials(g.trials, run)?;
    let ver_ok = results.iter().filter(|r| r.0).count() as u64;
    let attr_ok = results.iter().filter(|r| r.1).count() as u64;
    let joint = results.iter().filter(|r| r.0 && !r.1).count() as u64;
    let n = g.p.n;
    let rate = Rate::new(joint, g.trials);

    let mut r = setup.base_report("exploit", g.trials);
    r.param("n", n)
        .param("delta", g.p.delta)
        .param("gamma", g.p.gamma)
        .param("beta", g.p.beta)
        .param("flips", g.flips)
        .param("codec_radius", radius(g.p.delta, n))
        .param("target_radius", g.target.hamming_radius().unwrap_or(0))
        .note("rule", g.rule.describe())
        .counter("verified", ver_ok)
        .counter("attributed", attr_ok)
        .counter("false_positives", joint)
        .rate("ver1_attr0", rate);
    if let Some(min) = g.p.min_rate {
        r.check_at_least("ver1_attr0_rate", rate.value(), min);
    }
    r.ledger = results.into_iter().next().and_then(|r| r.2);
    Ok(r)
}
