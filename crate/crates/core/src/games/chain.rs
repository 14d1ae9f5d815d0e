//! Games against the signature chain: scripted forgers and the equivalence of
//! the general and uniform modes under the uniform model.

use rand::Rng;
use serde::Deserialize;

use super::stats::total_variation;
use super::watermarking::flip_random;
use super::{par_chunks, par_trials, parse_params, GameError, GameReport, Rate, Setup};
use crate::attribution::{robust_attr, Ledger, Rule, SelectionRule};
use crate::bits::{BitString, EXHAUSTIVE_LIMIT};
use crate::config::SchemeSpec;
use crate::model::{LanguageModel, Model};
use crate::prc::CodecSpec;
use crate::predicate::Predicate;
use crate::rng::trial_rng;
use crate::unforgeable::{
    atts_eval, chain_gen, chain_respond, chain_respond_traced, chain_verify, phi_predicate,
    ChainKeys, ChainMode, ChainParams,
};

fn chain_scheme(
    setup: &Setup,
    default: impl FnOnce() -> (ChainMode, ChainParams, CodecSpec),
) -> Result<(ChainMode, ChainParams, CodecSpec), GameError> {
    match &setup.scheme {
        None => Ok(default()),
        Some(SchemeSpec::Chain {
            mode,
            params,
            codec,
            ..
        }) => Ok((*mode, *params, codec.clone())),
        Some(SchemeSpec::Prc { .. }) => Err(GameError::Params(
            "this game needs the chain scheme, the config has a prc scheme".into(),
        )),
    }
}

fn default_chain(n: usize, m: usize, radius: usize) -> (ChainMode, ChainParams, CodecSpec) {
    let params = ChainParams::new(n, m);
    let codec = CodecSpec::ideal(n, params.k, Predicate::hamming(radius));
    (ChainMode::Uniform, params, codec)
}

// ------------------------------------------------------------------ forgery

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ForgeryParams {
    /// Overrides the scheme's mode.
    #[serde(default)]
    mode: Option<ChainMode>,
    /// Suffix bits flipped by the robustness witness; defaults to the codec radius.
    #[serde(default)]
    flips: Option<usize>,
    #[serde(default = "min_perturbed")]
    min_perturbed_rate: f64,
}

fn min_perturbed() -> f64 {
    0.999
}

pub(super) struct Forgery {
    mode: ChainMode,
    params: ChainParams,
    codec: CodecSpec,
    rule: Rule,
    flips: usize,
    min_perturbed_rate: f64,
    trials: u64,
}

pub(super) fn prepare_forgery(setup: &Setup, v: &serde_json::Value) -> Result<Forgery, GameError> {
    let p: ForgeryParams = parse_params(v)?;
    let (mode, params, codec) = chain_scheme(setup, || default_chain(128, 3, 32))?;
    let mode = p.mode.unwrap_or(mode);
    if params.m < 2 {
        return Err(GameError::Params(format!(
            "m = {} leaves no adjacent block pair",
            params.m
        )));
    }
    chain_gen(setup.lambda, &params, &codec, &mut trial_rng(0, "probe", 0))?;
    if mode == ChainMode::Uniform && !setup.model.is_uniform() {
        return Err(GameError::Precondition(
            "uniform mode requires the uniform model".into(),
        ));
    }
    let n = params.n;
    let rule = setup.rule.clone().unwrap_or(match mode {
        ChainMode::Uniform => Rule::DssBlock { n },
        ChainMode::General => Rule::DssPotential {
            n,
            beta: params.beta,
        },
    });
    let codec_radius = match &codec {
        CodecSpec::Ideal { phi, .. } => phi.hamming_radius().unwrap_or(0),
        CodecSpec::Toy { .. } => 0,
    };
    let flips = p.flips.unwrap_or(codec_radius);
    if flips > n {
        return Err(GameError::Params(format!(
            "flips = {flips} exceeds n = {n}"
        )));
    }
    Ok(Forgery {
        trials: setup.trials_or(10_000),
        mode,
        params,
        codec,
        rule,
        flips,
        min_perturbed_rate: p.min_perturbed_rate,
    })
}

const FORGERS: [&str; 4] = ["splice", "prefix_flip", "unsigned_prefix", "dss_forgery"];

#[derive(Debug, Default, Clone)]
struct ForgeryTrial {
    honest_pairs: u64,
    honest_verified: u64,
    honest_benign: u64,
    /// Per forger: (Ver = 1, Ver = 1 ∧ Atts = 0).
    forgers: [(u64, u64); FORGERS.len()],
    perturbed_verified: bool,
    perturbed_attributed: bool,
    ledger: Option<Ledger>,
}

fn forgery_trial(setup: &Setup, g: &Forgery, t: u64) -> Result<ForgeryTrial, GameError> {
    let model: &dyn LanguageModel = &setup.model;
    let mut rng = trial_rng(setup.seed, "forgery", t);
    let keys: ChainKeys = chain_gen(setup.lambda, &g.params, &g.codec, &mut rng)?;
    let trace = chain_respond_traced(model, &keys, &setup.prompt, &g.params, g.mode, &mut rng)?;
    let (n, m) = (g.params.n, g.params.m);
    let mut ledger = Ledger::new(g.params.response_len());
    ledger.push_transcript(setup.prompt.clone(), &trace.response)?;
    let block = |i: usize| trace.response.range(i * n..(i + 1) * n);
    let atts = |z: &BitString| atts_eval(&g.rule, &ledger, z, Some(model));

    let mut out = ForgeryTrial::default();
    for i in 0..m - 1 {
        let z = block(i).concat(&block(i + 1));
        out.honest_pairs += 1;
        out.honest_verified += chain_verify(&keys.pk, &z)? as u64;
        out.honest_benign += atts(&z)? as u64;
    }

    let i = rng.gen_range(0..m - 1);
    let candidates = [
        // Fresh prefix spliced onto an honest signed suffix.
        BitString::random(&mut rng, n).concat(&block(i + 1)),
        // One prefix bit flipped in an honest pair.
        {
            let mut head = block(i);
            head.flip(rng.gen_range(0..n));
            head.concat(&block(i + 1))
        },
        // The last block, whose signature is never embedded, before a signed suffix.
        block(m - 1).concat(&block(1 + rng.gen_range(0..m - 1))),
        // A fresh message with a random signature, encoded with the public codec.
        {
            let sigma = BitString::random(&mut rng, g.params.k);
            let head = BitString::random(&mut rng, n);
            head.concat(&keys.pk.codec.encode(&sigma, &mut rng)?)
        },
    ];
    for (slot, z) in out.forgers.iter_mut().zip(&candidates) {
        let v = chain_verify(&keys.pk, z)?;
        slot.0 += v as u64;
        slot.1 += (v && !atts(z)?) as u64;
    }

    let suffix = flip_random(&block(i + 1), g.flips, &mut rng);
    let z = block(i).concat(&suffix);
    out.perturbed_verified = chain_verify(&keys.pk, &z)?;
    let phi = phi_predicate(&Predicate::hamming(g.flips));
    out.perturbed_attributed = robust_attr(&g.rule, &phi, &ledger, &z, Some(model))?;
    if t == 0 {
        out.ledger = Some(ledger);
    }
    Ok(out)
}

pub(super) fn forgery(setup: &Setup, g: Forgery) -> Result<GameReport, GameError> {
    let results = par_trials(g.trials, |t| forgery_trial(setup, &g, t))?;
    let mut total = ForgeryTrial::default();
    let (mut pv, mut pa) = (0u64, 0u64);
    for r in &results {
        total.honest_pairs += r.honest_pairs;
        total.honest_verified += r.honest_verified;
        total.honest_benign += r.honest_benign;
        for (a, b) in total.forgers.iter_mut().zip(&r.forgers) {
            a.0 += b.0;
            a.1 += b.1;
        }
        pv += r.perturbed_verified as u64;
        pa += (r.perturbed_verified && r.perturbed_attributed) as u64;
    }
    let trials = g.trials;

    let mut r = setup.base_report("forgery", trials);
    r.param("n", g.params.n)
        .param("m", g.params.m)
        .param("k", g.params.k)
        .param("ell", g.params.response_len())
        .param("beta", g.params.beta)
        .param("flips", g.flips)
        .note(
            "mode",
            match g.mode {
                ChainMode::Uniform => "uniform",
                ChainMode::General => "general",
            },
        )
        .note("rule", g.rule.describe())
        .note("codec", format!("{:?}", g.codec))
        .rate(
            "honest_verified",
            Rate::new(total.honest_verified, total.honest_pairs),
        )
        .rate(
            "honest_benign",
            Rate::new(total.honest_benign, total.honest_pairs),
        )
        .rate("perturbed_verified", Rate::new(pv, trials))
        .rate("perturbed_verified_and_attributed", Rate::new(pa, trials))
        .check_at_least(
            "honest_verified_rate",
            Rate::new(total.honest_verified, total.honest_pairs).value(),
            1.0,
        )
        .check_at_least(
            "perturbed_verified_and_attributed_rate",
            Rate::new(pa, trials).value(),
            g.min_perturbed_rate,
        );
    for (name, (accepted, forged)) in FORGERS.iter().zip(&total.forgers) {
        r.counter(&format!("{name}/accepted"), *accepted)
            .counter(&format!("{name}/forgeries"), *forged)
            .check_at_most(&format!("{name}/forgeries"), *forged as f64, 0.0);
    }
    r.check_at_most("prefix_flip/accepted", total.forgers[1].0 as f64, 0.0);
    r.ledger = results.into_iter().next().and_then(|t| t.ledger);
    Ok(r)
}

// -------------------------------------------------------------- chain modes

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ChainModesParams {
    #[serde(default = "d2")]
    n: usize,
    #[serde(default = "d2")]
    m: usize,
    #[serde(default = "hundred_k")]
    samples: u64,
    #[serde(default = "tv")]
    max_tv: f64,
    #[serde(default = "ten_k")]
    chunk: u64,
}

fn d2() -> usize {
    2
}
fn hundred_k() -> u64 {
    100_000
}
fn ten_k() -> u64 {
    10_000
}
fn tv() -> f64 {
    0.01
}

pub(super) struct ChainModes {
    p: ChainModesParams,
    params: ChainParams,
    codec: CodecSpec,
}

pub(super) fn prepare_chain_modes(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<ChainModes, GameError> {
    let mut p: ChainModesParams = parse_params(v)?;
    if let Some(t) = setup.trials {
        p.samples = t;
    }
    let (_, params, codec) = chain_scheme(setup, || default_chain(p.n, p.m, 0))?;
    let cells = params.n * params.m;
    if cells > EXHAUSTIVE_LIMIT {
        return Err(GameError::Params(format!(
            "response length {cells} exceeds {EXHAUSTIVE_LIMIT}; the histogram has 2^ℓ cells"
        )));
    }
    chain_gen(setup.lambda, &params, &codec, &mut trial_rng(0, "probe", 0))?;
    Ok(ChainModes { p, params, codec })
}

pub(super) fn chain_modes(setup: &Setup, g: ChainModes) -> Result<GameReport, GameError> {
    let ChainModes { p, params, codec } = g;
    let uniform = Model::uniform();
    let ell = params.response_len();
    let cells = 1usize << ell;
    let chunks = par_chunks(p.samples, p.chunk, |c, size| {
        let mut hist = [vec![0u64; cells], vec![0u64; cells]];
        for (mode, h) in [ChainMode::Uniform, ChainMode::General]
            .into_iter()
            .zip(&mut hist)
        {
            let domain = format!("chain_modes/{mode:?}");
            let mut rng = trial_rng(setup.seed, &domain, c);
            let keys = chain_gen(setup.lambda, &params, &codec, &mut rng)?;
            for _ in 0..size {
                let u = chain_respond(&uniform, &keys, &setup.prompt, &params, mode, &mut rng)?;
                h[u.to_u64() as usize] += 1;
            }
        }
        Ok(hist)
    })?;
    let (mut hu, mut hg) = (vec![0u64; cells], vec![0u64; cells]);
    for [a, b] in &chunks {
        hu.iter_mut().zip(a).for_each(|(x, y)| *x += y);
        hg.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
    let tv = total_variation(&hu, &hg);
    let expected = 1.0 / cells as f64;
    let uniformity = hu
        .iter()
        .chain(&hg)
        .map(|&c| (c as f64 / p.samples as f64 - expected).abs())
        .fold(0.0, f64::max);

    let mut r = setup.base_report("chain_modes", p.samples);
    r.param("n", params.n)
        .param("m", params.m)
        .param("k", params.k)
        .param("ell", ell)
        .param("samples", p.samples)
        .metric("tv_general_vs_uniform", tv)
        .metric("max_cell_deviation_from_uniform", uniformity)
        .check_at_most("tv_general_vs_uniform", tv, p.max_tv);
    Ok(r)
}
