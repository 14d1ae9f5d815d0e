//! Watermark a response, verify it, and watch verification track noise.
//!
//! Generates keys for the ideal zero-bit code with a Hamming-ball decoder,
//! produces a watermarked response under a skewed model, verifies it, then
//! flips an increasing number of bits in one block until the block no longer
//! decodes. An unwatermarked sample from the same model is checked too.
//!
//! Run with `cargo run --example watermark_roundtrip`.

use attest::model::{sample_response, TableModel};
use attest::prc::CodecSpec;
use attest::rng::trial_rng;
use attest::watermark::{gen_keys, verify, verify_aligned, wat_respond_traced, WatParams};
use attest::{bits, LanguageModel, Model, Predicate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = trial_rng(7, "example/watermark", 0);
    let (n, m) = (128, 2);
    let params = WatParams::new(n, m, 0.0, 0.25);
    let codec = CodecSpec::ideal(n, 0, Predicate::hamming_fraction(0.25, n));
    let keys = gen_keys(128, &params, &codec, &mut rng)?;

    let model = Model::Table(TableModel::constant(0.7));
    let q: &dyn LanguageModel = &model;
    let prompt = bits("0110");

    let traced = wat_respond_traced(q, &keys.sk, &prompt, &params, &mut rng)?;
    let first = traced.response.prefix(n);
    let distance = first.window_distance(0, &traced.codewords[0]);
    println!("model: {}", q.describe());
    println!(
        "response weight {} / {}",
        traced.response.count_ones(),
        traced.response.len()
    );
    println!("block 1 differs from its codeword in {distance} of {n} positions");
    println!(
        "verify(response)          = {}",
        verify(&keys.pk, &traced.response)?
    );
    println!(
        "verify_aligned(response)  = {}",
        verify_aligned(&keys.pk, &traced.response)?
    );

    let plain = sample_response(q, &prompt, params.response_len(), &mut rng);
    println!("verify(unwatermarked)     = {}", verify(&keys.pk, &plain)?);

    println!();
    println!("flips  verify(block 1)");
    let mut noisy = first.clone();
    for step in 0..=6 {
        let flips = step * 8;
        while noisy.window_distance(0, &first) < flips {
            let i = noisy.window_distance(0, &first);
            noisy.flip(i);
        }
        println!("{flips:>5}  {}", verify(&keys.pk, &noisy)?);
    }
    Ok(())
}
