//! Query-time policies and adversaries that act at ledger times.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GameError;
use crate::attribution::{selected_suffixes, Ledger, SelectionRule, TimeIndex};
use crate::bits::BitString;
use crate::model::LanguageModel;
use crate::rng::TrialRng;

/// Times at which an adversary may output or query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimePolicy {
    /// Every `(i, j)`.
    All,
    /// Exactly the times `(i, j)` with `j ≡ 0 (mod n)`.
    BlockAligned(usize),
}

impl TimePolicy {
    pub fn admits(&self, t: TimeIndex) -> bool {
        match self {
            TimePolicy::All => true,
            TimePolicy::BlockAligned(n) => *n > 0 && t.j.is_multiple_of(*n),
        }
    }
}

impl fmt::Display for TimePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePolicy::All => write!(f, "all"),
            TimePolicy::BlockAligned(n) => write!(f, "block_aligned({n})"),
        }
    }
}

/// An adversary observing the ledger at every time, starting at genesis, that
/// outputs at most one candidate string.
pub trait TimedAdversary {
    /// Sees the ledger at its current clock; `Some(ζ)` outputs `ζ` now.
    fn observe(
        &mut self,
        ledger: &Ledger,
        rng: &mut TrialRng,
    ) -> Result<Option<BitString>, GameError>;

    fn describe(&self) -> String;
}

impl<A: TimedAdversary + ?Sized> TimedAdversary for Box<A> {
    fn observe(
        &mut self,
        ledger: &Ledger,
        rng: &mut TrialRng,
    ) -> Result<Option<BitString>, GameError> {
        (**self).observe(ledger, rng)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Outputs a string fixed in advance, at genesis.
#[derive(Debug, Clone)]
pub struct FixedString {
    target: BitString,
    done: bool,
}

impl FixedString {
    pub fn new(target: BitString) -> Self {
        Self {
            target,
            done: false,
        }
    }
}

impl TimedAdversary for FixedString {
    fn observe(&mut self, _: &Ledger, _: &mut TrialRng) -> Result<Option<BitString>, GameError> {
        if self.done {
            return Ok(None);
        }
        self.done = true;
        Ok(Some(self.target.clone()))
    }

    fn describe(&self) -> String {
        format!("fixed({})", self.target.to_hex())
    }
}

/// Edge-of-inclusion: at the first in-progress time `(i, j)` where appending a
/// bit `a` would newly select a suffix, outputs the longest such suffix of
/// `u_{1:j} a`. When both bits qualify it flips a fair coin.
pub struct EdgeAdversary<'a> {
    rule: &'a dyn SelectionRule,
    model: Option<&'a dyn LanguageModel>,
    fired: bool,
}

impl<'a> EdgeAdversary<'a> {
    pub fn new(rule: &'a dyn SelectionRule, model: Option<&'a dyn LanguageModel>) -> Self {
        Self {
            rule,
            model,
            fired: false,
        }
    }

    /// The suffix `u_{1:j} a` would select, if any, for each `a`.
    fn candidates(
        &self,
        prompt: &BitString,
        response: &BitString,
    ) -> Result<[Option<BitString>; 2], GameError> {
        let mut out = [None, None];
        for (slot, a) in out.iter_mut().zip([false, true]) {
            let mut u = response.clone();
            u.push(a);
            *slot = selected_suffixes(self.rule, prompt, &u, self.model)?
                .into_iter()
                .next();
        }
        Ok(out)
    }
}

impl TimedAdversary for EdgeAdversary<'_> {
    fn observe(
        &mut self,
        ledger: &Ledger,
        rng: &mut TrialRng,
    ) -> Result<Option<BitString>, GameError> {
        if self.fired || ledger.at_boundary() {
            return Ok(None);
        }
        let t = ledger.transcripts().last().expect("in-progress transcript");
        let out = match self.candidates(&t.prompt, &t.response)? {
            [None, None] => None,
            [Some(z), None] | [None, Some(z)] => Some(z),
            [Some(z0), Some(z1)] => Some(if rng.gen::<bool>() { z1 } else { z0 }),
        };
        self.fired = out.is_some();
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("edge({})", self.rule.describe())
    }
}

/// Holds the inner adversary's output until the next time the policy admits.
pub struct Deferred<A> {
    inner: A,
    policy: TimePolicy,
    pending: Option<BitString>,
}

impl<A: TimedAdversary> Deferred<A> {
    pub fn new(inner: A, policy: TimePolicy) -> Self {
        Self {
            inner,
            policy,
            pending: None,
        }
    }
}

impl<A: TimedAdversary> TimedAdversary for Deferred<A> {
    fn observe(
        &mut self,
        ledger: &Ledger,
        rng: &mut TrialRng,
    ) -> Result<Option<BitString>, GameError> {
        if let Some(z) = self.inner.observe(ledger, rng)? {
            self.pending = Some(z);
        }
        if self.policy.admits(ledger.clock()) {
            return Ok(self.pending.take());
        }
        Ok(None)
    }

    fn describe(&self) -> String {
        format!("{} deferred to {}", self.inner.describe(), self.policy)
    }
}
