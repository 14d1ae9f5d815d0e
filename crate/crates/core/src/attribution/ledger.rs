use std::fmt;

use serde::{Deserialize, Serialize};

use super::AttributionError;
use crate::bits::BitString;

/// Global time `(i, j)`: transcript `i` (1-based) after `j` response tokens.
///
/// `j = 0` is the prompt position and `(0, 0)` is genesis. Field order makes
/// the derived ordering lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeIndex {
    pub i: usize,
    pub j: usize,
}

impl TimeIndex {
    pub const GENESIS: TimeIndex = TimeIndex { i: 0, j: 0 };

    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for TimeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// A prompt and the response generated for it so far.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub prompt: BitString,
    pub response: BitString,
}

impl Transcript {
    pub fn new(prompt: BitString, response: BitString) -> Self {
        Self { prompt, response }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LedgerEvent {
    Prompt(BitString),
    Token(bool),
}

/// Append-only log of prompt/response interaction with fixed response length.
///
/// The clock is implied by the contents: at `(i, j)` transcripts `1..i` are
/// present, the first `i − 1` are complete, and transcript `i` holds `j`
/// response bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    response_len: usize,
    transcripts: Vec<Transcript>,
}

impl Ledger {
    pub fn new(response_len: usize) -> Self {
        Self {
            response_len,
            transcripts: Vec::new(),
        }
    }

    pub fn response_len(&self) -> usize {
        self.response_len
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn is_empty(&self) -> bool {
        self.transcripts.is_empty()
    }

    pub fn clock(&self) -> TimeIndex {
        match self.transcripts.last() {
            None => TimeIndex::GENESIS,
            Some(t) => TimeIndex::new(self.transcripts.len(), t.response.len()),
        }
    }

    /// Whether the latest transcript (if any) has all `ℓ` tokens.
    pub fn at_boundary(&self) -> bool {
        self.transcripts
            .last()
            .is_none_or(|t| t.response.len() == self.response_len)
    }

    pub fn append(&mut self, event: LedgerEvent) -> Result<TimeIndex, AttributionError> {
        match event {
            LedgerEvent::Prompt(x) => self.push_prompt(x),
            LedgerEvent::Token(b) => self.push_token(b),
        }
    }

    pub fn push_prompt(&mut self, prompt: BitString) -> Result<TimeIndex, AttributionError> {
        if !self.at_boundary() {
            return Err(AttributionError::Protocol(format!(
                "prompt at {} before transcript completed ({} of {} tokens)",
                self.clock(),
                self.clock().j,
                self.response_len
            )));
        }
        self.transcripts
            .push(Transcript::new(prompt, BitString::new()));
        Ok(self.clock())
    }

    pub fn push_token(&mut self, bit: bool) -> Result<TimeIndex, AttributionError> {
        let ell = self.response_len;
        match self.transcripts.last_mut() {
            None => Err(AttributionError::Protocol("token before any prompt".into())),
            Some(t) if t.response.len() >= ell => Err(AttributionError::Protocol(format!(
                "token after transcript {} completed at j = {ell}",
                self.transcripts.len()
            ))),
            Some(t) => {
                t.response.push(bit);
                Ok(self.clock())
            }
        }
    }

    /// Appends a full transcript as one prompt event and `ℓ` token events.
    pub fn push_transcript(
        &mut self,
        prompt: BitString,
        response: &BitString,
    ) -> Result<TimeIndex, AttributionError> {
        if response.len() != self.response_len {
            return Err(AttributionError::Protocol(format!(
                "response has {} tokens, ledger requires {}",
                response.len(),
                self.response_len
            )));
        }
        self.push_prompt(prompt)?;
        self.transcripts
            .last_mut()
            .expect("just pushed")
            .response
            .extend_from(response);
        Ok(self.clock())
    }

    /// `Π_t` for any `t` not later than the current clock.
    pub fn snapshot(&self, t: TimeIndex) -> Result<Ledger, AttributionError> {
        if t > self.clock() {
            return Err(AttributionError::Protocol(format!(
                "snapshot {t} is after clock {}",
                self.clock()
            )));
        }
        if t.j > self.response_len {
            return Err(AttributionError::Protocol(format!("invalid time {t}")));
        }
        let mut transcripts = self.transcripts[..t.i].to_vec();
        if let Some(last) = transcripts.last_mut() {
            last.response.truncate(t.j);
        }
        Ok(Ledger {
            response_len: self.response_len,
            transcripts,
        })
    }

    /// Whether `self` is an earlier state of `later`.
    pub fn is_prefix_of(&self, later: &Ledger) -> bool {
        if self.response_len != later.response_len
            || self.transcripts.len() > later.transcripts.len()
        {
            return false;
        }
        let n = self.transcripts.len();
        self.transcripts
            .iter()
            .zip(&later.transcripts)
            .enumerate()
            .all(|(idx, (a, b))| {
                a.prompt == b.prompt
                    && if idx + 1 == n {
                        a.response.is_prefix_of(&b.response)
                    } else {
                        a.response == b.response
                    }
            })
    }

    /// The event sequence that rebuilds this ledger from genesis.
    pub fn events(&self) -> impl Iterator<Item = (TimeIndex, LedgerEvent)> + '_ {
        self.transcripts.iter().enumerate().flat_map(|(idx, t)| {
            let i = idx + 1;
            std::iter::once((TimeIndex::new(i, 0), LedgerEvent::Prompt(t.prompt.clone()))).chain(
                t.response
                    .iter()
                    .enumerate()
                    .map(move |(j, b)| (TimeIndex::new(i, j + 1), LedgerEvent::Token(b))),
            )
        })
    }
}
