//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every criterion runs at its full sample size and tolerance. Reference
//! values that the games also compute (ball volume, binomial tails) are
//! recomputed here by direct summation before the run.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use attest::attribution::Rule;
use attest::config::SchemeSpec;
use attest::games::{run_game, GameReport, Setup};
use attest::model::{CopyModel, TableModel};
use attest::prc::CodecSpec;
use attest::watermark::WatParams;
use attest::{bits, Model, Predicate};
use serde_json::{json, Value};

struct Run {
    game: &'static str,
    setup: Setup,
    params: Value,
}

impl Run {
    fn new(game: &'static str, setup: Setup, params: Value) -> Self {
        Self {
            game,
            setup,
            params,
        }
    }

    fn exec(&self) -> Result<GameReport, String> {
        run_game(self.game, &self.setup, &self.params).map_err(|e| format!("{}: {e}", self.game))
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn summarize(r: &GameReport) -> String {
    let mut parts: Vec<String> = r
        .checks
        .iter()
        .map(|(k, c)| {
            let op = if c.passed() { "ok" } else { "BREACH" };
            format!("{k}={} [{op}]", attest::games::sig6(c.observed))
        })
        .collect();
    if parts.is_empty() {
        parts.push("no checks".into());
    }
    format!("{}: {}", r.game, parts.join(", "))
}

/// Runs the reports of one criterion and folds in its extra conditions.
fn judge(
    runs: &[Run],
    extra: impl Fn(&[GameReport]) -> Vec<(String, bool)>,
    budget: Option<Duration>,
) -> (Outcome, Vec<String>) {
    let start = Instant::now();
    let mut reports = Vec::new();
    for run in runs {
        match run.exec() {
            Ok(r) => reports.push(r),
            Err(e) => {
                let outcome = Outcome {
                    pass: false,
                    detail: format!("error: {e}"),
                };
                return (outcome, Vec::new());
            }
        }
    }
    let elapsed = start.elapsed();
    let mut pass = reports.iter().all(GameReport::passed);
    let mut detail: Vec<String> = reports.iter().map(summarize).collect();
    for (what, ok) in extra(&reports) {
        pass &= ok;
        detail.push(format!("{what} [{}]", if ok { "ok" } else { "BREACH" }));
    }
    match budget {
        Some(b) => {
            let ok = elapsed <= b;
            pass &= ok;
            detail.push(format!(
                "runtime {:.1}s <= {}s [{}]",
                elapsed.as_secs_f64(),
                b.as_secs(),
                if ok { "ok" } else { "BREACH" }
            ));
        }
        None => detail.push(format!("runtime {:.1}s", elapsed.as_secs_f64())),
    }
    let jsons = reports.iter().map(GameReport::emit_json).collect();
    let outcome = Outcome {
        pass,
        detail: detail.join("; "),
    };
    (outcome, jsons)
}

fn none(_: &[GameReport]) -> Vec<(String, bool)> {
    Vec::new()
}

fn rate(r: &GameReport, key: &str) -> f64 {
    r.rates[key].value()
}

/// `C(n, k)` for `n ≤ 128` by Pascal's rule, exact in `u128` up to the sizes used here.
fn choose(n: usize, k: usize) -> u128 {
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k]
}

/// `|Ham_r(y)| / 2^n`.
fn ball_fraction(n: usize, r: usize) -> f64 {
    let size: u128 = (0..=r).map(|k| choose(n, k)).sum();
    size as f64 / 2f64.powi(n as i32)
}

/// `Pr[Bin(n, p) ≥ t]` by direct summation.
fn binomial_tail(n: usize, p: f64, t: usize) -> f64 {
    (t..=n)
        .map(|k| choose(n, k) as f64 * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

fn faithfulness_scheme() -> SchemeSpec {
    SchemeSpec::Prc {
        params: WatParams::new(128, 2, 0.0, 0.25),
        codec: CodecSpec::ideal(128, 0, Predicate::hamming(32)),
    }
}

fn ideal_scheme() -> SchemeSpec {
    SchemeSpec::Prc {
        params: WatParams::new(128, 2, 0.0, 0.0),
        codec: CodecSpec::ideal(128, 0, Predicate::EQUALITY),
    }
}

fn skewed_table() -> Model {
    let entries = [("0", 0.3), ("11", 0.8), ("01", 0.15)]
        .into_iter()
        .map(|(k, v)| (bits(k), v))
        .collect();
    Model::Table(TableModel::new(2, entries, 0.6))
}

fn copy_model() -> Model {
    Model::Copy(CopyModel::new(bits("00000001")))
}

fn criteria() -> Vec<(u32, &'static str, Vec<Run>)> {
    vec![
        (
            1,
            "axioms and rule/map round trip, |x| <= 2, |u| <= 6, 50 random rules",
            vec![Run::new(
                "axioms",
                Setup::new(101),
                json!({"max_prompt_len": 2, "max_response_len": 6, "random_rules": 50}),
            )],
        ),
        (
            2,
            "distinct rules induce identical maps, |u| <= 8",
            vec![Run::new(
                "non_injectivity",
                Setup::new(102),
                json!({"max_response_len": 8}),
            )],
        ),
        (
            3,
            "embedding pushforward, n = 4, p in 0.1..0.9",
            vec![Run::new(
                "pushforward",
                Setup::new(103),
                json!({
                    "n": 4, "samples": 1_000_000, "agreement_samples": 100_000,
                    "max_tv": 0.01, "agreement_tolerance": 0.005
                }),
            )],
        ),
        (
            4,
            "uniform-model faithfulness, ideal, n = 128, gamma = 0.25",
            vec![Run::new(
                "faithfulness",
                Setup::new(104)
                    .with_scheme(faithfulness_scheme())
                    .with_trials(10_000),
                json!({
                    "adversary": "honest", "max_false_negatives": 0, "max_false_positives": 10
                }),
            )],
        ),
        (
            5,
            "embedding Hamming concentration, beta = 0.1, gamma = 0.2",
            vec![
                Run::new(
                    "concentration",
                    Setup::new(105).with_trials(10_000),
                    json!({
                        "beta": 0.1, "gamma": 0.2, "n": 256, "max_tail_count": 0
                    }),
                ),
                Run::new(
                    "concentration",
                    Setup::new(1051).with_trials(10_000),
                    json!({
                        "beta": 0.1, "gamma": 0.2, "n": 16, "max_tail_count": null, "oracle_tolerance": 0.01
                    }),
                ),
            ],
        ),
        (
            6,
            "planting soundness, path measure alpha = 20, T = 10^3, with necessity control",
            vec![
                Run::new(
                    "soundness",
                    Setup::new(106)
                        .with_model(copy_model())
                        .with_rule(Rule::PathMeasure { alpha: 20.0 })
                        .with_trials(10_000),
                    json!({
                        "payload_len": 32, "transcripts": 10, "response_len": 100, "max_violations": 0
                    }),
                ),
                Run::new(
                    "soundness",
                    Setup::new(1061)
                        .with_model(copy_model())
                        .with_rule(Rule::Constant { value: true })
                        .with_trials(10_000),
                    json!({
                        "payload_len": 32, "transcripts": 10, "response_len": 100,
                        "max_violations": null, "min_rate": 0.99
                    }),
                ),
            ],
        ),
        (
            7,
            "anytime soundness: edge adversary vs time policy",
            vec![
                Run::new(
                    "anytime",
                    Setup::new(107).with_trials(10_000),
                    json!({
                        "n": 16, "policy": "all", "adversary": "edge", "expect_rate": 0.5, "tolerance": 0.02
                    }),
                ),
                Run::new(
                    "anytime",
                    Setup::new(1071)
                        .with_predicate(Predicate::hamming(32))
                        .with_trials(10_000),
                    json!({
                        "n": 128, "blocks": 2, "policy": "aligned", "adversary": "edge", "max_rate": 0.001
                    }),
                ),
            ],
        ),
        (
            8,
            "conservative-target exploit, delta = 0.3, gamma = 0.1, n = 128",
            vec![Run::new(
                "exploit",
                Setup::new(108).with_trials(1_000),
                json!({
                    "delta": 0.3, "gamma": 0.1, "n": 128, "min_rate": 0.99
                }),
            )],
        ),
        (
            9,
            "unforgeable chain and mode equivalence",
            vec![
                Run::new(
                    "forgery",
                    Setup::new(109).with_trials(10_000),
                    json!({"min_perturbed_rate": 0.999}),
                ),
                Run::new(
                    "chain_modes",
                    Setup::new(1091),
                    json!({"samples": 100_000, "max_tv": 0.01}),
                ),
            ],
        ),
        (
            10,
            "undetectability battery, ideal backend; toy backend diagnostic",
            vec![
                Run::new(
                    "undetectability",
                    Setup::new(110).with_scheme(ideal_scheme()),
                    json!({
                        "samples": 100_000, "max_advantage": 0.02
                    }),
                ),
                Run::new(
                    "undetectability",
                    Setup::new(1101)
                        .with_model(skewed_table())
                        .with_scheme(ideal_scheme()),
                    json!({
                        "samples": 100_000, "max_advantage": 0.02
                    }),
                ),
                Run::new(
                    "undetectability",
                    Setup::new(1102).with_scheme(SchemeSpec::Prc {
                        params: WatParams::new(128, 2, 0.0, 0.0),
                        codec: CodecSpec::toy(128, 0),
                    }),
                    json!({"samples": 100_000}),
                ),
            ],
        ),
    ]
}

type ExtraCheck = Box<dyn Fn(&[GameReport]) -> Vec<(String, bool)>>;

fn extra_checks(id: u32) -> ExtraCheck {
    match id {
        4 => {
            Box::new(|rs: &[GameReport]| {
                let oracle = ball_fraction(128, 32);
                let reported = rs[0].metrics["ball_fraction_per_window"];
                vec![
                (
                    format!("ball-volume oracle {oracle:.3e} per window, per-query bound 5e-4 holds"),
                    oracle * 4.0 <= 5e-4,
                ),
                (
                    format!("reported ball fraction {reported:.3e} matches oracle"),
                    ((reported - oracle) / oracle).abs() < 1e-5,
                ),
            ]
            })
        }
        5 => Box::new(|rs: &[GameReport]| {
            // Flat profile at n = 16: each position errs with probability β = 0.1,
            // and γn = 3.2 rounds up to 4 errors.
            let oracle = binomial_tail(16, 0.1, 4);
            let reported = rs[1].metrics["oracle_tail"];
            vec![(
                format!("n = 16 oracle tail {oracle:.6} matches game oracle {reported:.6}"),
                (oracle - reported).abs() < 1e-9,
            )]
        }),
        7 => Box::new(|rs: &[GameReport]| {
            let r = rate(&rs[0], "violation");
            vec![(
                format!("policy=all rate {r:.4} in 0.5 +- 0.02"),
                (r - 0.5).abs() <= 0.02,
            )]
        }),
        9 => Box::new(|rs: &[GameReport]| {
            let honest = rate(&rs[0], "honest_verified");
            let perturbed = rate(&rs[0], "perturbed_verified_and_attributed");
            vec![
                (format!("honest pairs verify at {honest}"), honest == 1.0),
                (
                    format!("perturbed suffix accepted at {perturbed}"),
                    perturbed >= 1.0 - 1e-3,
                ),
            ]
        }),
        10 => Box::new(|rs: &[GameReport]| {
            let toy = rs[2]
                .metrics
                .get("max_advantage")
                .copied()
                .unwrap_or(f64::NAN);
            vec![(format!("toy backend advantage {toy:.4} (diagnostic)"), true)]
        }),
        _ => Box::new(none),
    }
}

fn budget(id: u32) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(60)),
        3 | 4 => Some(Duration::from_secs(120)),
        _ => None,
    }
}

fn main() -> ExitCode {
    let mut all = true;
    let mut rerun = Vec::new();
    for (id, title, runs) in criteria() {
        let (outcome, jsons) = judge(&runs, extra_checks(id), budget(id));
        all &= outcome.pass;
        println!(
            "criterion {id:>2} {} {title} -- {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        rerun.extend(
            runs.into_iter()
                .zip(jsons.into_iter().map(Some).chain(std::iter::repeat(None))),
        );
    }

    // Determinism: every run above, repeated with the same seed.
    let start = Instant::now();
    let mut mismatched = Vec::new();
    let mut errors = Vec::new();
    for (run, first) in &rerun {
        match (first, run.exec()) {
            (Some(a), Ok(b)) if *a == b.emit_json() => {}
            (Some(_), Ok(_)) => mismatched.push(run.game),
            (None, _) => errors.push(format!("{}: no first run", run.game)),
            (_, Err(e)) => errors.push(e),
        }
    }
    let pass = mismatched.is_empty() && errors.is_empty();
    all &= pass;
    println!(
        "criterion 11 {} byte-identical report JSON on repeat -- {} runs, mismatched {:?}, errors {:?}, runtime {:.1}s",
        if pass { "PASS" } else { "FAIL" },
        rerun.len(),
        mismatched,
        errors,
        start.elapsed().as_secs_f64()
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
