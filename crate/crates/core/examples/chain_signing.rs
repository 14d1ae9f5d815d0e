//! Signature-chained blocks: generation, verification and failed forgeries.
//!
//! Each block `y_i` is embedded from a codeword of the signature over the
//! previous block, so any adjacent pair `y_{i-1} y_i` carries a verifiable
//! signature. Splicing blocks from different responses, or flipping bits in
//! the signed block, breaks verification.
//!
//! Run with `cargo run --release --example chain_signing`.

use attest::attribution::{robust_attr, Ledger, Rule};
use attest::prc::CodecSpec;
use attest::rng::trial_rng;
use attest::unforgeable::{
    atts_eval, chain_gen, chain_respond_traced, chain_verify, phi_predicate, ChainMode, ChainParams,
};
use attest::{bits, LanguageModel, Model, Predicate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = trial_rng(11, "example/chain", 0);
    let params = ChainParams::new(128, 3);
    let radius = Predicate::hamming(32);
    let codec = CodecSpec::ideal(params.n, params.k, radius.clone());
    let keys = chain_gen(128, &params, &codec, &mut rng)?;
    let model = Model::uniform();
    let q: &dyn LanguageModel = &model;
    let n = params.n;

    let a = chain_respond_traced(q, &keys, &bits("01"), &params, ChainMode::Uniform, &mut rng)?;
    let b = chain_respond_traced(q, &keys, &bits("10"), &params, ChainMode::Uniform, &mut rng)?;
    println!("signed blocks: {:?}", a.signed);

    for i in 0..params.m - 1 {
        let pair = a.response.range(i * n..(i + 2) * n);
        println!(
            "verify(blocks {}..{}) = {}",
            i + 1,
            i + 2,
            chain_verify(&keys.pk, &pair)?
        );
    }

    let splice = a.response.prefix(n).concat(&b.response.range(n..2 * n));
    println!(
        "verify(splice of two responses) = {}",
        chain_verify(&keys.pk, &splice)?
    );

    let mut forged = a.response.prefix(2 * n);
    forged.flip(5);
    println!(
        "verify(first half flipped)      = {}",
        chain_verify(&keys.pk, &forged)?
    );

    let mut perturbed = a.response.prefix(2 * n);
    for i in 0..20 {
        perturbed.flip(n + 3 * i);
    }
    println!(
        "verify(second half, 20 flips)   = {}",
        chain_verify(&keys.pk, &perturbed)?
    );

    // The verifier sits between the robust attribution with a prefix-locked
    // predicate and the upper envelope over selected double blocks.
    let mut ledger = Ledger::new(params.response_len());
    ledger.push_transcript(bits("01"), &a.response)?;
    ledger.push_transcript(bits("10"), &b.response)?;
    let rule = Rule::DssBlock { n };
    let phi = phi_predicate(&radius);
    println!();
    println!(
        "perturbed pair: robust attr = {}, envelope = {}",
        robust_attr(&rule, &phi, &ledger, &perturbed, Some(q))?,
        atts_eval(&rule, &ledger, &perturbed, Some(q))?
    );
    println!(
        "spliced pair:   robust attr = {}, envelope = {}",
        robust_attr(&rule, &phi, &ledger, &splice, Some(q))?,
        atts_eval(&rule, &ledger, &splice, Some(q))?
    );
    Ok(())
}
