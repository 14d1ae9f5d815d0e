//! Line-oriented JSON ledger files.
//!
//! One object per event:
//!
//! ```text
//! {"ev":"prompt","i":1,"x":"hex:a/3"}
//! {"ev":"token","i":1,"j":1,"bit":1}
//! ```
//!
//! A `{"ev":"transcript","i":1,"x":..,"u":..}` record is accepted on read as
//! shorthand for a prompt followed by `len(u)` tokens. Writing always emits
//! the expanded event form, one event per line, keys in the order above.

use serde::Deserialize;
use thiserror::Error;

use super::{AttributionError, Ledger, LedgerEvent, TimeIndex};
use crate::bits::BitString;

#[derive(Debug, Error)]
pub enum LedgerIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot infer the response length: no complete transcript")]
    UnknownLength,
}

#[derive(Deserialize)]
#[serde(tag = "ev", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Prompt {
        i: usize,
        x: BitString,
    },
    Token {
        i: usize,
        j: usize,
        bit: u8,
    },
    Transcript {
        i: usize,
        x: BitString,
        u: BitString,
    },
}

fn parse_lines(text: &str) -> Result<Vec<(usize, Record)>, LedgerIoError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| {
            serde_json::from_str(l)
                .map(|r| (idx + 1, r))
                .map_err(|e| LedgerIoError::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Infers `ℓ` from the records: the length of the first transcript that is
/// followed by another prompt, else the length of the only transcript.
fn infer_len(records: &[(usize, Record)]) -> Option<usize> {
    let mut lens: Vec<usize> = Vec::new();
    for (_, r) in records {
        match r {
            Record::Prompt { .. } => lens.push(0),
            Record::Transcript { u, .. } => lens.push(u.len()),
            Record::Token { .. } => {
                if let Some(last) = lens.last_mut() {
                    *last += 1;
                }
            }
        }
        if lens.len() == 2 {
            return Some(lens[0]);
        }
    }
    lens.first().copied()
}

fn protocol(line: usize, e: AttributionError) -> LedgerIoError {
    LedgerIoError::Parse {
        line,
        message: e.to_string(),
    }
}

/// Parses a ledger file. `response_len` fixes `ℓ`; when absent it is inferred.
pub fn read_ledger(text: &str, response_len: Option<usize>) -> Result<Ledger, LedgerIoError> {
    let records = parse_lines(text)?;
    let ell = match response_len.or_else(|| infer_len(&records)) {
        Some(ell) => ell,
        None if records.is_empty() => 0,
        None => {
            if let Some((line, Record::Token { .. })) = records.first() {
                return Err(LedgerIoError::Parse {
                    line: *line,
                    message: "token event before any prompt".into(),
                });
            }
            return Err(LedgerIoError::UnknownLength);
        }
    };
    let mut ledger = Ledger::new(ell);
    for (line, record) in records {
        let mismatch = |claimed: TimeIndex, actual: TimeIndex| LedgerIoError::Parse {
            line,
            message: format!("record claims time {claimed}, ledger is at {actual}"),
        };
        match record {
            Record::Prompt { i, x } => {
                let t = ledger
                    .append(LedgerEvent::Prompt(x))
                    .map_err(|e| protocol(line, e))?;
                if t != TimeIndex::new(i, 0) {
                    return Err(mismatch(TimeIndex::new(i, 0), t));
                }
            }
            Record::Token { i, j, bit } => {
                let b = match bit {
                    0 => false,
                    1 => true,
                    other => {
                        return Err(LedgerIoError::Parse {
                            line,
                            message: format!("bit must be 0 or 1, got {other}"),
                        })
                    }
                };
                let t = ledger
                    .append(LedgerEvent::Token(b))
                    .map_err(|e| protocol(line, e))?;
                if t != TimeIndex::new(i, j) {
                    return Err(mismatch(TimeIndex::new(i, j), t));
                }
            }
            Record::Transcript { i, x, u } => {
                let t = ledger
                    .push_transcript(x, &u)
                    .map_err(|e| protocol(line, e))?;
                if t.i != i {
                    return Err(mismatch(TimeIndex::new(i, u.len()), t));
                }
            }
        }
    }
    Ok(ledger)
}

/// Canonical event-per-line serialization.
pub fn write_ledger(ledger: &Ledger) -> String {
    let mut out = String::new();
    for (t, e) in ledger.events() {
        match e {
            LedgerEvent::Prompt(x) => {
                out.push_str(&format!(
                    "{{\"ev\":\"prompt\",\"i\":{},\"x\":\"{}\"}}\n",
                    t.i,
                    x.to_hex()
                ));
            }
            LedgerEvent::Token(b) => {
                out.push_str(&format!(
                    "{{\"ev\":\"token\",\"i\":{},\"j\":{},\"bit\":{}}}\n",
                    t.i, t.j, b as u8
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;

    #[test]
    fn empty_file_is_empty_ledger() {
        let l = read_ledger("", None).unwrap();
        assert!(l.is_empty());
        assert_eq!(write_ledger(&l), "");
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let mut l = Ledger::new(3);
        l.push_transcript(bits("101"), &bits("011")).unwrap();
        l.push_transcript(BitString::new(), &bits("110")).unwrap();
        l.push_prompt(bits("1")).unwrap();
        l.push_token(true).unwrap();
        let text = write_ledger(&l);
        let back = read_ledger(&text, None).unwrap();
        assert_eq!(back, l);
        assert_eq!(write_ledger(&back), text);
    }

    #[test]
    fn transcript_shortcut_expands() {
        let text = "{\"ev\":\"transcript\",\"i\":1,\"x\":\"hex:a/3\",\"u\":\"hex:6/4\"}\n";
        let l = read_ledger(text, None).unwrap();
        assert_eq!(l.response_len(), 4);
        assert_eq!(l.transcripts()[0].prompt, bits("101"));
        assert_eq!(l.transcripts()[0].response, bits("0110"));
        assert_eq!(write_ledger(&l).lines().count(), 5);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let token_first = "{\"ev\":\"token\",\"i\":1,\"j\":1,\"bit\":1}\n";
        match read_ledger(token_first, Some(2)) {
            Err(LedgerIoError::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let bad = "{\"ev\":\"prompt\",\"i\":1,\"x\":\"hex:0/1\"}\nnot json\n";
        match read_ledger(bad, Some(2)) {
            Err(LedgerIoError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        let wrong_time = "{\"ev\":\"prompt\",\"i\":2,\"x\":\"hex:0/1\"}\n";
        assert!(read_ledger(wrong_time, Some(2)).is_err());
    }

    #[test]
    fn length_is_inferred_from_a_completed_transcript() {
        let text = "{\"ev\":\"prompt\",\"i\":1,\"x\":\"hex:/0\"}\n\
                    {\"ev\":\"token\",\"i\":1,\"j\":1,\"bit\":1}\n\
                    {\"ev\":\"token\",\"i\":1,\"j\":2,\"bit\":0}\n\
                    {\"ev\":\"prompt\",\"i\":2,\"x\":\"hex:/0\"}\n\
                    {\"ev\":\"token\",\"i\":2,\"j\":1,\"bit\":0}\n";
        let l = read_ledger(text, None).unwrap();
        assert_eq!(l.response_len(), 2);
        assert_eq!(l.clock(), TimeIndex::new(2, 1));
    }
}
