//! Ledgers as event streams: append, snapshot, and round-trip through JSONL.
//!
//! Run with `cargo run --example ledger_io`.

use attest::attribution::{ledger_attr, read_ledger, write_ledger, Ledger, Rule, TimeIndex};
use attest::bits;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut ledger = Ledger::new(6);
    ledger.push_transcript(bits("101"), &bits("110100"))?;
    ledger.push_prompt(bits("0"))?;
    for bit in [true, true, false] {
        ledger.push_token(bit)?;
    }
    println!(
        "clock {} (at boundary: {})",
        ledger.clock(),
        ledger.at_boundary()
    );

    let text = write_ledger(&ledger);
    print!("{text}");

    let back = read_ledger(&text, Some(6))?;
    assert_eq!(back, ledger);
    println!("round trip ok: {} transcripts", back.transcripts().len());

    // Attribution is evaluated on snapshots; the in-progress transcript
    // counts with its current prefix.
    let rule = Rule::Block { n: 3 };
    let zeta = bits("110");
    for t in [
        TimeIndex::new(1, 3),
        TimeIndex::new(2, 0),
        TimeIndex::new(2, 3),
    ] {
        let snap = ledger.snapshot(t)?;
        println!(
            "Attr_{t}({zeta}) = {}",
            ledger_attr(&rule, &snap, &zeta, None)?
        );
    }
    let earlier = ledger.snapshot(TimeIndex::new(1, 6))?;
    println!(
        "snapshot is a prefix of the ledger: {}",
        earlier.is_prefix_of(&ledger)
    );
    Ok(())
}
