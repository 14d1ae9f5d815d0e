//! Relations on equal-length bit strings and their expansions.
//!
//! A predicate `Φ` relates a reference string `y` to a candidate `ζ` of the
//! same length; its expansion `Φ(y)` is the set of candidates it accepts.
//! Expansions are never materialized: [`Predicate::eval`] answers membership
//! directly, and exhaustive witness search is confined to short strings.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::{BitError, BitString};

/// An equal-length relation `ζ ∈ Φ(y)`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    /// `‖y − ζ‖₀ ≤ r`.
    Hamming(usize),
    /// Equal first halves, inner predicate on the second halves.
    PrefixLocked(Box<Predicate>),
    /// `ζ ∈ outer(w)` for some `w ∈ inner(y)`; decided by exhaustive search.
    Composed {
        outer: Box<Predicate>,
        inner: Box<Predicate>,
    },
    /// Explicit membership table of `(y, ζ)` pairs.
    Table(Arc<BTreeSet<(BitString, BitString)>>),
}

impl Predicate {
    pub const EQUALITY: Predicate = Predicate::Hamming(0);

    pub fn hamming(radius: usize) -> Self {
        Predicate::Hamming(radius)
    }

    /// `Ham_{⌊fraction·n⌋}`, the radius convention used for `γn`-style bounds.
    pub fn hamming_fraction(fraction: f64, n: usize) -> Self {
        Predicate::Hamming(radius(fraction, n))
    }

    pub fn prefix_locked(suffix: Predicate) -> Self {
        Predicate::PrefixLocked(Box::new(suffix))
    }

    pub fn table<I: IntoIterator<Item = (BitString, BitString)>>(pairs: I) -> Self {
        Predicate::Table(Arc::new(pairs.into_iter().collect()))
    }

    /// Whether `ζ ∈ Φ(y)`.
    pub fn eval(&self, y: &BitString, zeta: &BitString) -> Result<bool, BitError> {
        if y.len() != zeta.len() {
            return Err(BitError::LengthMismatch {
                left: y.len(),
                right: zeta.len(),
            });
        }
        match self {
            Predicate::Hamming(r) => Ok(y.hamming_distance(zeta)? <= *r),
            Predicate::PrefixLocked(inner) => {
                let n = y.len();
                if !n.is_multiple_of(2) {
                    return Err(BitError::OddLength(n));
                }
                let h = n / 2;
                if y.window_distance(0, &zeta.prefix(h)) != 0 {
                    return Ok(false);
                }
                inner.eval(&y.range(h..n), &zeta.range(h..n))
            }
            Predicate::Composed { outer, inner } => {
                let n = y.len();
                for w in BitString::all_of_length(n)? {
                    if inner.eval(y, &w)? && outer.eval(&w, zeta)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Predicate::Table(pairs) => Ok(pairs.contains(&(y.clone(), zeta.clone()))),
        }
    }

    /// Whether `ζ` is within Hamming radius of `y` at offset `start` of
    /// `haystack`, without copying when the predicate is a Hamming ball.
    pub(crate) fn eval_window(
        &self,
        haystack: &BitString,
        start: usize,
        zeta: &BitString,
    ) -> Result<bool, BitError> {
        match self {
            Predicate::Hamming(r) => Ok(haystack.window_distance(start, zeta) <= *r),
            _ => self.eval(&haystack.range(start..start + zeta.len()), zeta),
        }
    }

    /// Materializes `Φ(y)`; only for `len(y) ≤` [`EXHAUSTIVE_LIMIT`](crate::bits::EXHAUSTIVE_LIMIT).
    pub fn expansion(&self, y: &BitString) -> Result<BTreeSet<BitString>, BitError> {
        let mut out = BTreeSet::new();
        for z in BitString::all_of_length(y.len())? {
            if self.eval(y, &z)? {
                out.insert(z);
            }
        }
        Ok(out)
    }

    /// Hamming radius, when this predicate is a plain ball.
    pub fn hamming_radius(&self) -> Option<usize> {
        match self {
            Predicate::Hamming(r) => Some(*r),
            _ => None,
        }
    }
}

/// `outer ∘ inner`, whose expansion is `outer(inner(y))`.
///
/// Hamming balls compose by adding radii; `Ham_0` is the identity on either
/// side. Anything else becomes a witness search that only evaluates on
/// strings of length at most [`EXHAUSTIVE_LIMIT`](crate::bits::EXHAUSTIVE_LIMIT).
pub fn compose(outer: &Predicate, inner: &Predicate) -> Predicate {
    match (outer, inner) {
        (Predicate::Hamming(a), Predicate::Hamming(b)) => Predicate::Hamming(a + b),
        (Predicate::Hamming(0), p) | (p, Predicate::Hamming(0)) => p.clone(),
        _ => Predicate::Composed {
            outer: Box::new(outer.clone()),
            inner: Box::new(inner.clone()),
        },
    }
}

/// `⌊fraction · n⌋`, tolerant of floating-point error just below an integer.
pub fn radius(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor().max(0.0) as usize
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Hamming(r) => write!(f, "Ham({r})"),
            Predicate::PrefixLocked(p) => write!(f, "PrefixLocked({p:?})"),
            Predicate::Composed { outer, inner } => write!(f, "{outer:?}∘{inner:?}"),
            Predicate::Table(t) => write!(f, "Table({} pairs)", t.len()),
        }
    }
}
