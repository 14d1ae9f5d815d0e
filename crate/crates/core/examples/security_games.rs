//! Runs a few security games programmatically and prints their reports.
//!
//! The same games are available from the command line through
//! `attest run <game> --config <file>`; the JSON files under
//! `examples/configs/` are ready-made configurations.
//!
//! Run with `cargo run --release --example security_games`.

use attest::attribution::Rule;
use attest::config::SchemeSpec;
use attest::games::{run_game, Setup};
use attest::model::TableModel;
use attest::prc::CodecSpec;
use attest::watermark::WatParams;
use attest::{Model, Predicate};
use serde_json::json;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs = [
        (
            "concentration",
            Setup::new(1),
            json!({"n": 256, "beta": 0.1, "gamma": 0.2}),
        ),
        ("exploit", Setup::new(2).with_trials(200), json!({})),
        (
            "faithfulness",
            Setup::new(3)
                .with_model(Model::Table(TableModel::constant(0.6)))
                .with_rule(Rule::PotentialBlock { n: 128, beta: 0.05 })
                .with_scheme(SchemeSpec::Prc {
                    params: WatParams::new(128, 2, 0.05, 0.25),
                    codec: CodecSpec::ideal(128, 0, Predicate::hamming(32)),
                })
                .with_trials(100),
            json!({}),
        ),
        ("disjointness", Setup::new(4).with_trials(200), json!({})),
    ];
    let mut all_passed = true;
    for (game, setup, params) in runs {
        let report = run_game(game, &setup, &params)?;
        all_passed &= report.passed();
        println!("{}", report.emit_text());
    }
    println!("all passed: {all_passed}");
    Ok(())
}
