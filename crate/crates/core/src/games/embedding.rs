//! The embedding channel: exact pushforward of the model distribution and
//! concentration of the per-block Hamming error.

use rand::Rng;
use serde::Deserialize;

use super::stats::{binomial_tail, chernoff_bound, poisson_binomial_tail, total_variation};
use super::{par_chunks, par_trials, parse_params, GameError, GameReport, Rate, Setup};
use crate::bits::{BitString, EXHAUSTIVE_LIMIT};
use crate::model::{sample_response, TableModel};
use crate::prc::{Codec, CodecSpec};
use crate::predicate::Predicate;
use crate::rng::trial_rng;
use crate::watermark::{embed_bit, embed_block};

// -------------------------------------------------------------- pushforward

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct PushforwardParams {
    #[serde(default = "default_ps")]
    ps: Vec<f64>,
    #[serde(default = "d4")]
    n: usize,
    /// Blocks per distribution for the TV comparison.
    #[serde(default = "million")]
    samples: u64,
    /// Blocks whose bits enter the `Pr[Y = U]` estimate.
    #[serde(default = "hundred_k")]
    agreement_samples: u64,
    #[serde(default = "tv")]
    max_tv: f64,
    #[serde(default = "agree_tol")]
    agreement_tolerance: f64,
    /// Samples per independently keyed chunk.
    #[serde(default = "ten_k")]
    chunk: u64,
}

fn default_ps() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}
fn d4() -> usize {
    4
}
fn million() -> u64 {
    1_000_000
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
fn agree_tol() -> f64 {
    0.005
}

pub(super) fn prepare_pushforward(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<PushforwardParams, GameError> {
    let mut p: PushforwardParams = parse_params(v)?;
    if p.n == 0 || p.n > EXHAUSTIVE_LIMIT {
        return Err(GameError::Params(format!(
            "n = {} must be in 1..={EXHAUSTIVE_LIMIT}",
            p.n
        )));
    }
    if let Some(&bad) = p.ps.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(GameError::Params(format!(
            "probability {bad} outside [0, 1]"
        )));
    }
    if p.ps.is_empty() {
        return Err(GameError::Params("ps must be non-empty".into()));
    }
    if let Some(t) = setup.trials {
        p.samples = t;
    }
    if p.agreement_samples > p.samples {
        return Err(GameError::Params(format!(
            "agreement_samples = {} exceeds samples = {}",
            p.agreement_samples, p.samples
        )));
    }
    Ok(p)
}

struct PushChunk {
    watermarked: Vec<u64>,
    sampled: Vec<u64>,
    agree: u64,
    agree_bits: u64,
}

fn pushforward_chunk(
    setup: &Setup,
    p: &PushforwardParams,
    q: f64,
    q_idx: usize,
    c: u64,
    size: u64,
) -> Result<PushChunk, GameError> {
    let model = TableModel::constant(q);
    let domain = format!("pushforward/{q_idx}");
    let mut rng = trial_rng(setup.seed, &domain, c);
    let codec = Codec::generate(
        setup.lambda,
        &CodecSpec::ideal(p.n, 0, Predicate::EQUALITY),
        &mut rng,
    )?;
    let cells = 1usize << p.n;
    let mut out = PushChunk {
        watermarked: vec![0; cells],
        sampled: vec![0; cells],
        agree: 0,
        agree_bits: 0,
    };
    let first = c * p.chunk;
    for s in 0..size {
        let xi = codec.encode(&BitString::new(), &mut rng)?;
        let mut y = BitString::with_capacity(p.n);
        embed_block(&model, &setup.prompt, &mut y, &xi, &mut rng);
        out.watermarked[y.to_u64() as usize] += 1;
        if first + s < p.agreement_samples {
            out.agree += (p.n - y.window_distance(0, &xi)) as u64;
            out.agree_bits += p.n as u64;
        }
        let a = sample_response(&model, &setup.prompt, p.n, &mut rng);
        out.sampled[a.to_u64() as usize] += 1;
    }
    Ok(out)
}

pub(super) fn pushforward(setup: &Setup, p: PushforwardParams) -> Result<GameReport, GameError> {
    let mut r = setup.base_report("pushforward", p.samples);
    r.param("n", p.n)
        .param("samples", p.samples)
        .param("agreement_samples", p.agreement_samples)
        .param("ps", p.ps.clone());
    let mut worst_tv: f64 = 0.0;
    let mut worst_agree: f64 = 0.0;
    for (idx, &q) in p.ps.iter().enumerate() {
        let chunks = par_chunks(p.samples, p.chunk, |c, size| {
            pushforward_chunk(setup, &p, q, idx, c, size)
        })?;
        let cells = 1usize << p.n;
        let (mut wm, mut sm) = (vec![0u64; cells], vec![0u64; cells]);
        let (mut agree, mut bits) = (0u64, 0u64);
        for ch in chunks {
            wm.iter_mut()
                .zip(&ch.watermarked)
                .for_each(|(a, b)| *a += b);
            sm.iter_mut().zip(&ch.sampled).for_each(|(a, b)| *a += b);
            agree += ch.agree;
            bits += ch.agree_bits;
        }
        let tv = total_variation(&wm, &sm);
        let expected = 1.0 - (q - 0.5).abs();
        let agreement = Rate::new(agree, bits);
        let dev = (agreement.value() - expected).abs();
        worst_tv = worst_tv.max(tv);
        worst_agree = worst_agree.max(dev);
        let key = format!("p={q}");
        r.metric(&format!("{key}/tv"), tv)
            .metric(&format!("{key}/agreement_expected"), expected)
            .rate(&format!("{key}/agreement"), agreement);
    }
    r.metric("max_tv", worst_tv)
        .metric("max_agreement_deviation", worst_agree)
        .check_at_most("max_tv", worst_tv, p.max_tv)
        .check_at_most(
            "max_agreement_deviation",
            worst_agree,
            p.agreement_tolerance,
        );
    Ok(r)
}

// ------------------------------------------------------------ concentration

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Profile {
    /// `|p_i − 1/2| = β` at every position: the worst case for a fixed sum.
    #[default]
    Flat,
    /// `|p_i − 1/2| = 2β` on even positions, `0` on odd ones.
    Split,
    /// `p_i = 1/2` everywhere: a noiseless channel.
    Half,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct ConcentrationParams {
    #[serde(default = "beta")]
    beta: f64,
    #[serde(default = "gamma")]
    gamma: f64,
    #[serde(default = "d256")]
    n: usize,
    #[serde(default)]
    profile: Profile,
    #[serde(default = "some_zero")]
    max_tail_count: Option<u64>,
    /// When set, the tail frequency must match the exact oracle this closely.
    #[serde(default)]
    oracle_tolerance: Option<f64>,
}

fn beta() -> f64 {
    0.1
}
fn gamma() -> f64 {
    0.2
}
fn d256() -> usize {
    256
}
fn some_zero() -> Option<u64> {
    Some(0)
}

pub(super) struct Concentration {
    p: ConcentrationParams,
    /// `|p_i − 1/2|` per position.
    means: Vec<f64>,
    threshold: usize,
    trials: u64,
}

pub(super) fn prepare_concentration(
    setup: &Setup,
    v: &serde_json::Value,
) -> Result<Concentration, GameError> {
    let p: ConcentrationParams = parse_params(v)?;
    if p.n == 0 {
        return Err(GameError::Params("n must be positive".into()));
    }
    if !(p.beta >= 0.0 && p.gamma >= 0.0) {
        return Err(GameError::Params(
            "beta and gamma must be non-negative".into(),
        ));
    }
    if p.beta >= p.gamma && !(p.beta == 0.0 && p.gamma == 0.0) {
        return Err(GameError::Precondition(format!(
            "beta = {} must be below gamma = {}",
            p.beta, p.gamma
        )));
    }
    let means: Vec<f64> = match p.profile {
        Profile::Flat => vec![p.beta; p.n],
        Profile::Split => (0..p.n)
            .map(|i| if i % 2 == 0 { 2.0 * p.beta } else { 0.0 })
            .collect(),
        Profile::Half => vec![0.0; p.n],
    };
    if let Some(bad) = means.iter().find(|m| **m > 0.5) {
        return Err(GameError::Params(format!(
            "profile needs |p − 1/2| = {bad} > 1/2; lower beta"
        )));
    }
    // `Σ Z_i ≥ γn` with integer `Σ Z_i`.
    let threshold = ((p.gamma * p.n as f64) - 1e-9).ceil().max(0.0) as usize;
    Ok(Concentration {
        trials: setup.trials_or(10_000),
        means,
        threshold,
        p,
    })
}

pub(super) fn concentration(setup: &Setup, g: Concentration) -> Result<GameReport, GameError> {
    let Concentration {
        p,
        means,
        threshold,
        trials,
    } = g;
    let run = |t: u64| -> Result<usize, GameError> {
        let mut rng = trial_rng(setup.seed, "concentration", t);
        let mut errors = 0;
        for m in &means {
            let xi: bool = rng.gen();
            // Orient the bias at random; the error rate is |p − 1/2| either way.
            let q = if rng.gen::<bool>() { 0.5 + m } else { 0.5 - m };
            errors += (embed_bit(xi, q, &mut rng) != xi) as usize;
        }
        Ok(errors)
    };
    let errors = par_trials(trials, run)?;
    let tail = errors.iter().filter(|e| **e >= threshold).count() as u64;
    let mean_err = errors.iter().sum::<usize>() as f64 / trials.max(1) as f64;
    let oracle = poisson_binomial_tail(&means, threshold);
    let freq = Rate::new(tail, trials);

    let mut r = setup.base_report("concentration", trials);
    r.param("n", p.n)
        .param("beta", p.beta)
        .param("gamma", p.gamma)
        .note(
            "profile",
            match p.profile {
                Profile::Flat => "flat",
                Profile::Split => "split",
                Profile::Half => "half",
            },
        )
        .counter("threshold", threshold as u64)
        .counter("tail_blocks", tail)
        .rate("tail", freq)
        .metric("mean_errors", mean_err)
        .metric("oracle_tail", oracle)
        .metric("chernoff_bound", chernoff_bound(p.n, p.beta, p.gamma));
    if p.profile == Profile::Flat {
        r.metric("binomial_tail", binomial_tail(p.n, p.beta, threshold));
    }
    if let Some(max) = p.max_tail_count {
        r.check_at_most("tail_blocks", tail as f64, max as f64);
    }
    if let Some(tol) = p.oracle_tolerance {
        r.check_at_most("oracle_deviation", (freq.value() - oracle).abs(), tol);
    }
    Ok(r)
}
