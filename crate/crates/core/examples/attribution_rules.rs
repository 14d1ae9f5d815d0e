//! Selection rules and the attribution sets they induce.
//!
//! Builds a small two-transcript ledger, lists what each built-in rule
//! selects, shows the robust (Hamming-ball) variant of attribution, and
//! exhibits two different rules that induce the same attribution map.
//!
//! Run with `cargo run --example attribution_rules`.

use attest::attribution::{
    attribution_set, check_axioms, first_map_mismatch, ledger_attr, non_injectivity_pair,
    robust_attr, selected_windows, InducedMap, Ledger, Rule, SelectionRule,
};
use attest::model::TableModel;
use attest::{bits, BitString, LanguageModel, Model, Predicate};

fn show(set: impl IntoIterator<Item = BitString>) -> String {
    let items: Vec<String> = set.into_iter().map(|s| s.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let uniform = Model::uniform();
    let q: &dyn LanguageModel = &uniform;

    let mut ledger = Ledger::new(8);
    ledger.push_transcript(bits("01"), &bits("10110010"))?;
    ledger.push_transcript(bits("1"), &bits("01101111"))?;
    println!(
        "ledger: {} transcripts, clock {}",
        ledger.transcripts().len(),
        ledger.clock()
    );

    let rules = [
        Rule::Block { n: 4 },
        Rule::DssBlock { n: 4 },
        Rule::PotentialBlock { n: 4, beta: 0.0 },
        Rule::PathMeasure { alpha: 4.0 },
    ];
    for rule in &rules {
        let windows = selected_windows(rule, &ledger, 4, Some(q))?;
        let located: Vec<String> = windows.iter().map(|(t, w)| format!("{w}@{t}")).collect();
        println!(
            "{:<32} length-4 windows: {}",
            rule.describe(),
            located.join(" ")
        );
    }

    // Exact attribution versus the Hamming-ball relaxation.
    let block = Rule::Block { n: 4 };
    let probe = bits("1011");
    let noisy = bits("1001");
    let ball = Predicate::hamming(1);
    println!();
    println!(
        "Attr({probe})       = {}",
        ledger_attr(&block, &ledger, &probe, None)?
    );
    println!(
        "Attr({noisy})       = {}",
        ledger_attr(&block, &ledger, &noisy, None)?
    );
    println!(
        "Attr^Ham1({noisy})  = {}",
        robust_attr(&block, &ball, &ledger, &noisy, None)?
    );

    // Potential bounds depend on the model, not on the bits: a uniform model
    // has zero potential everywhere, a p = 0.9 model has 0.4 per position.
    let skewed = Model::Table(TableModel::constant(0.9));
    let rule = Rule::PotentialBlock { n: 4, beta: 0.25 };
    let prompt = bits("0");
    let response = bits("11110000");
    println!();
    for (name, q) in [("uniform", &uniform), ("p=0.9", &skewed)] {
        let set = attribution_set(&rule, &prompt, &response, Some(q as &dyn LanguageModel))?;
        println!("{} under {name:<7} selects {}", rule.describe(), show(set));
    }

    // Every induced map satisfies the axioms.
    let map = InducedMap::new(&block, None)?;
    let verdict = check_axioms(&map, &prompt, &response);
    println!();
    println!("axioms for {}: {:?}", block.describe(), verdict);

    // Distinct rules, identical maps: the first also selects y right after
    // its first occurrence, which adds nothing to the set.
    let y = bits("10");
    let x0 = bits("0");
    let (a, b) = non_injectivity_pair(&y);
    let on_repeat = (a.decide(&x0, &y, &y, None)?, b.decide(&x0, &y, &y, None)?);
    let (ma, mb) = (InducedMap::new(&a, None)?, InducedMap::new(&b, None)?);
    let prompts = BitString::all_up_to(2)?;
    let responses = BitString::all_up_to(6)?;
    println!(
        "{} vs {}: decisions on the repeat {:?}, first map mismatch {:?}",
        a.describe(),
        b.describe(),
        on_repeat,
        first_map_mismatch(&ma, &mb, &prompts, &responses)
    );
    Ok(())
}
