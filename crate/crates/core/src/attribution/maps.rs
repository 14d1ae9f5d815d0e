//! Transcript-level attribution maps and their correspondence with rules.
//!
//! A map assigns each `(x, u)` a set `trAtt(x, u)` of substrings of `u`.
//! Valid maps start empty, never lose members as `u` grows, and only gain
//! suffixes of the current response. Every rule induces such a map; every
//! such map is induced by the rule that selects exactly its new arrivals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::rules::{FnRule, SelectionRule};
use super::{check_model, transcript_attr, AttributionError, Transcript};
use crate::bits::BitString;
use crate::model::LanguageModel;

/// Membership oracle `ζ ∈ trAtt(x, u)`.
pub trait AttributionMap {
    fn contains(&self, prompt: &BitString, response: &BitString, zeta: &BitString) -> bool;
}

/// The map induced by a rule: the union over `j` of the suffixes selected at
/// token `j`.
pub struct InducedMap<'a> {
    rule: &'a dyn SelectionRule,
    model: Option<&'a dyn LanguageModel>,
}

impl<'a> InducedMap<'a> {
    pub fn new(
        rule: &'a dyn SelectionRule,
        model: Option<&'a dyn LanguageModel>,
    ) -> Result<Self, AttributionError> {
        check_model(rule, model)?;
        Ok(Self { rule, model })
    }
}

impl AttributionMap for InducedMap<'_> {
    fn contains(&self, prompt: &BitString, response: &BitString, zeta: &BitString) -> bool {
        let t = Transcript::new(prompt.clone(), response.clone());
        transcript_attr(self.rule, &t, zeta, self.model).expect("model checked at construction")
    }
}

/// A map given extensionally on a finite universe; absent keys map to `∅`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SetMap {
    sets: BTreeMap<(BitString, BitString), BTreeSet<BitString>>,
}

impl SetMap {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Tabulates `map` over every `(x, u)` pair given.
    pub fn tabulate<M: AttributionMap + ?Sized>(
        map: &M,
        prompts: &[BitString],
        responses: &[BitString],
    ) -> Self {
        let mut sets = BTreeMap::new();
        for x in prompts {
            for u in responses {
                sets.insert((x.clone(), u.clone()), attribution_set_of(map, x, u));
            }
        }
        Self { sets }
    }

    pub fn set(&self, prompt: &BitString, response: &BitString) -> Option<&BTreeSet<BitString>> {
        self.sets.get(&(prompt.clone(), response.clone()))
    }
}

impl AttributionMap for SetMap {
    fn contains(&self, prompt: &BitString, response: &BitString, zeta: &BitString) -> bool {
        self.set(prompt, response).is_some_and(|s| s.contains(zeta))
    }
}

/// `𝒵(x, ρ, ζ) = 1[ζ ∈ trAtt(x, ρζ) ∖ trAtt(x, ρζ_{1:−1})]`.
pub struct RuleFromMap<M> {
    map: M,
}

impl<M> RuleFromMap<M> {
    pub fn new(map: M) -> Self {
        Self { map }
    }
}

impl<M: AttributionMap + Send + Sync> SelectionRule for RuleFromMap<M> {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        _: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        if suffix.is_empty() {
            return Ok(false);
        }
        let full = prefix.concat(suffix);
        let before = full.prefix(full.len() - 1);
        Ok(self.map.contains(prompt, &full, suffix) && !self.map.contains(prompt, &before, suffix))
    }

    fn describe(&self) -> String {
        "rule-from-map".into()
    }
}

fn attribution_set_of<M: AttributionMap + ?Sized>(
    map: &M,
    prompt: &BitString,
    response: &BitString,
) -> BTreeSet<BitString> {
    response
        .substrings()
        .into_iter()
        .filter(|z| !z.is_empty() && map.contains(prompt, response, z))
        .collect()
}

/// `trAtt(x, u)` for the map induced by `rule`, built by the inductive union.
pub fn attribution_set(
    rule: &dyn SelectionRule,
    prompt: &BitString,
    response: &BitString,
    model: Option<&dyn LanguageModel>,
) -> Result<BTreeSet<BitString>, AttributionError> {
    check_model(rule, model)?;
    let mut set = BTreeSet::new();
    for j in 1..=response.len() {
        for k in 1..=j {
            let (prefix, suffix) = (response.sub(1, k - 1), response.sub(k, j));
            if rule.admits(prefix.len(), suffix.len())
                && rule.decide(prompt, &prefix, &suffix, model)?
            {
                set.insert(suffix);
            }
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    NonEmptyInitialization {
        prompt: BitString,
    },
    NotASubstring {
        prompt: BitString,
        response: BitString,
        member: BitString,
    },
    Monotonicity {
        prompt: BitString,
        response: BitString,
        lost: BitString,
    },
    SuffixJump {
        prompt: BitString,
        response: BitString,
        gained: BitString,
    },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::NonEmptyInitialization { prompt } => {
                write!(f, "trAtt({prompt}, □) is non-empty")
            }
            AxiomViolation::NotASubstring {
                prompt,
                response,
                member,
            } => {
                write!(
                    f,
                    "{member} ∈ trAtt({prompt}, {response}) is not a substring"
                )
            }
            AxiomViolation::Monotonicity {
                prompt,
                response,
                lost,
            } => {
                write!(f, "extending to ({prompt}, {response}) dropped {lost}")
            }
            AxiomViolation::SuffixJump {
                prompt,
                response,
                gained,
            } => {
                write!(f, "({prompt}, {response}) gained non-suffix {gained}")
            }
        }
    }
}

/// Checks the three axioms along every prefix of `response`.
///
/// Membership is probed over all strings up to `len(response)` so members that
/// are not substrings are caught as well.
pub fn check_axioms<M: AttributionMap + ?Sized>(
    map: &M,
    prompt: &BitString,
    response: &BitString,
) -> Result<(), AxiomViolation> {
    let universe = BitString::all_up_to(response.len()).expect("short response");
    let set_at = |u: &BitString| -> BTreeSet<BitString> {
        universe
            .iter()
            .filter(|z| z.len() <= u.len() && map.contains(prompt, u, z))
            .cloned()
            .collect()
    };
    let mut prev = set_at(&BitString::new());
    if !prev.is_empty() {
        return Err(AxiomViolation::NonEmptyInitialization {
            prompt: prompt.clone(),
        });
    }
    for j in 1..=response.len() {
        let u = response.prefix(j);
        let cur = set_at(&u);
        let subs = u.substrings();
        if let Some(z) = cur.iter().find(|z| !subs.contains(*z)) {
            return Err(AxiomViolation::NotASubstring {
                prompt: prompt.clone(),
                response: u,
                member: z.clone(),
            });
        }
        if let Some(z) = prev.difference(&cur).next() {
            return Err(AxiomViolation::Monotonicity {
                prompt: prompt.clone(),
                response: u,
                lost: z.clone(),
            });
        }
        let suffixes: BTreeSet<_> = u.suffixes().collect();
        if let Some(z) = cur.difference(&prev).find(|z| !suffixes.contains(*z)) {
            return Err(AxiomViolation::SuffixJump {
                prompt: prompt.clone(),
                response: u,
                gained: z.clone(),
            });
        }
        prev = cur;
    }
    Ok(())
}

/// First `(x, u, ζ)` on which the maps disagree, over all substrings `ζ` of `u`.
pub fn first_map_mismatch<A, B>(
    a: &A,
    b: &B,
    prompts: &[BitString],
    responses: &[BitString],
) -> Option<(BitString, BitString, BitString)>
where
    A: AttributionMap + ?Sized,
    B: AttributionMap + ?Sized,
{
    for x in prompts {
        for u in responses {
            for z in u.substrings() {
                if a.contains(x, u, &z) != b.contains(x, u, &z) {
                    return Some((x.clone(), u.clone(), z));
                }
            }
        }
    }
    None
}

/// Two distinct rules inducing the same map, for a fixed non-empty `y`.
///
/// The first also selects `y` when it repeats right after its first
/// appearance under prompt `0`, which adds nothing new to the set.
pub fn non_injectivity_pair(y: &BitString) -> (FnRule, FnRule) {
    assert!(!y.is_empty(), "y must be non-empty");
    let zero = BitString::from_u64(0, 1);
    let (y1, z1) = (y.clone(), zero.clone());
    let with_repeat = FnRule::new("Z", move |x, rho, zeta| {
        *x == z1 && *zeta == y1 && (rho.is_empty() || *rho == y1)
    });
    let y2 = y.clone();
    let first_only = FnRule::new("Z'", move |x, rho, zeta| {
        *x == zero && *zeta == y2 && rho.is_empty()
    });
    (with_repeat, first_only)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{RandomRule, Rule};
    use crate::bits::bits;

    fn universe() -> (Vec<BitString>, Vec<BitString>) {
        (
            BitString::all_up_to(1).unwrap(),
            BitString::all_up_to(5).unwrap(),
        )
    }

    #[test]
    fn induced_set_by_unrolling() {
        let b2 = Rule::Block { n: 2 };
        let set = attribution_set(&b2, &BitString::new(), &bits("0110"), None).unwrap();
        assert_eq!(set, [bits("01"), bits("10")].into_iter().collect());
        for u in BitString::all_up_to(4).unwrap() {
            let zero = Rule::Constant { value: false };
            assert!(attribution_set(&zero, &bits("1"), &u, None)
                .unwrap()
                .is_empty());
        }
        assert!(
            attribution_set(&RandomRule::new(3), &bits("1"), &BitString::new(), None)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn induced_membership_agrees_with_the_union() {
        let (xs, us) = universe();
        for rule in [RandomRule::new(1), RandomRule::new(2)] {
            let m = InducedMap::new(&rule, None).unwrap();
            for x in &xs {
                for u in &us {
                    let set = attribution_set(&rule, x, u, None).unwrap();
                    for z in u.substrings() {
                        assert_eq!(m.contains(x, u, &z), set.contains(&z));
                    }
                }
            }
        }
    }

    #[test]
    fn constant_one_round_trips_to_first_occurrences() {
        let one = Rule::Constant { value: true };
        let (xs, us) = universe();
        let induced = InducedMap::new(&one, None).unwrap();
        let table = SetMap::tabulate(&induced, &xs, &us);
        let back = RuleFromMap::new(table.clone());
        // a repeated substring is only selected the first time it completes
        assert!(back
            .decide(&bits("0"), &BitString::new(), &bits("1"), None)
            .unwrap());
        assert!(!back
            .decide(&bits("0"), &bits("1"), &bits("1"), None)
            .unwrap());
        let reinduced = InducedMap::new(&back, None).unwrap();
        assert_eq!(first_map_mismatch(&table, &reinduced, &xs, &us), None);
    }

    #[test]
    fn empty_map_gives_constant_zero() {
        let back = RuleFromMap::new(SetMap::empty());
        for rho in BitString::all_up_to(3).unwrap() {
            for z in BitString::all_up_to(3).unwrap() {
                assert!(!back.decide(&bits("1"), &rho, &z, None).unwrap());
            }
        }
    }

    #[test]
    fn axioms_hold_for_induced_maps() {
        let (xs, us) = universe();
        let r = RandomRule::new(5);
        let m = InducedMap::new(&r, None).unwrap();
        for x in &xs {
            for u in us.iter().filter(|u| u.len() == 5) {
                check_axioms(&m, x, u).unwrap();
            }
        }
    }

    struct Shrinking;
    impl AttributionMap for Shrinking {
        fn contains(&self, _: &BitString, u: &BitString, z: &BitString) -> bool {
            // only the latest token is ever attributable
            !u.is_empty() && *z == u.suffix(1)
        }
    }

    struct Prophetic;
    impl AttributionMap for Prophetic {
        fn contains(&self, _: &BitString, u: &BitString, z: &BitString) -> bool {
            u.len() >= 2 && *z == u.prefix(1)
        }
    }

    #[test]
    fn axiom_checker_catches_violations() {
        let x = BitString::new();
        assert!(matches!(
            check_axioms(&Shrinking, &x, &bits("01")),
            Err(AxiomViolation::Monotonicity { .. })
        ));
        assert!(matches!(
            check_axioms(&Prophetic, &x, &bits("011")),
            Err(AxiomViolation::SuffixJump { .. })
        ));
    }

    #[test]
    fn non_injective_rules_differ_but_agree_as_maps() {
        let y = bits("10");
        let (z, z2) = non_injectivity_pair(&y);
        assert!(z.decide(&bits("0"), &y, &y, None).unwrap());
        assert!(!z2.decide(&bits("0"), &y, &y, None).unwrap());
        let xs = BitString::all_up_to(1).unwrap();
        let us = BitString::all_up_to(6).unwrap();
        let (a, b) = (
            InducedMap::new(&z, None).unwrap(),
            InducedMap::new(&z2, None).unwrap(),
        );
        assert_eq!(first_map_mismatch(&a, &b, &xs, &us), None);
    }
}
