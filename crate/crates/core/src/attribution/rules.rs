use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AttributionError;
use crate::bits::BitString;
use crate::model::{path_measure, predictive_potential, LanguageModel};
use crate::rng::mix64;

/// Slack for comparisons against real-valued thresholds.
const EPS: f64 = 1e-12;

/// A deterministic decision on `(prompt x, response prefix ρ, response suffix ζ)`.
///
/// The induced attribution map adds `u_{k:j}` to the transcript's attribution
/// set when `decide(x, u_{1:k−1}, u_{k:j})` holds.
pub trait SelectionRule: Send + Sync {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        model: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError>;

    /// Necessary condition on `(len(ρ), len(ζ))` alone. Scanners skip windows
    /// it rejects without materializing them.
    fn admits(&self, _prefix_len: usize, _suffix_len: usize) -> bool {
        true
    }

    /// When false, `decide` equals `admits` on lengths and never reads bits.
    fn reads_content(&self) -> bool {
        true
    }

    fn requires_model(&self) -> bool {
        false
    }

    fn describe(&self) -> String;
}

impl<R: SelectionRule + ?Sized> SelectionRule for &R {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        model: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        (**self).decide(prompt, prefix, suffix, model)
    }
    fn admits(&self, p: usize, s: usize) -> bool {
        (**self).admits(p, s)
    }
    fn reads_content(&self) -> bool {
        (**self).reads_content()
    }
    fn requires_model(&self) -> bool {
        (**self).requires_model()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<R: SelectionRule + ?Sized> SelectionRule for Arc<R> {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        model: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        (**self).decide(prompt, prefix, suffix, model)
    }
    fn admits(&self, p: usize, s: usize) -> bool {
        (**self).admits(p, s)
    }
    fn reads_content(&self) -> bool {
        (**self).reads_content()
    }
    fn requires_model(&self) -> bool {
        (**self).requires_model()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// The built-in selection rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule {
    /// Selects every substring (`true`) or nothing (`false`).
    Constant { value: bool },
    /// Aligned blocks: `len(ρ) ≡ 0 (mod n)` and `len(ζ) = n`.
    Block { n: usize },
    /// Aligned blocks whose predictive potential is at most `β·n`.
    PotentialBlock { n: usize, beta: f64 },
    /// Aligned double blocks: `len(ρ) ≡ 0 (mod n)` and `len(ζ) = 2n`.
    DssBlock { n: usize },
    /// Aligned double blocks with both halves potential-bounded.
    DssPotential { n: usize, beta: f64 },
    /// Suffixes with path-conditional measure at most `2^{−α}`.
    PathMeasure { alpha: f64 },
}

impl Rule {
    pub fn block_len(&self) -> Option<usize> {
        match self {
            Rule::Block { n }
            | Rule::PotentialBlock { n, .. }
            | Rule::DssBlock { n }
            | Rule::DssPotential { n, .. } => Some(*n),
            _ => None,
        }
    }

    fn need_model<'m>(
        &self,
        model: Option<&'m dyn LanguageModel>,
    ) -> Result<&'m dyn LanguageModel, AttributionError> {
        model.ok_or_else(|| AttributionError::MissingModel(self.describe()))
    }
}

impl SelectionRule for Rule {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        model: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        if self.requires_model() {
            self.need_model(model)?;
        }
        if !self.admits(prefix.len(), suffix.len()) {
            return Ok(false);
        }
        Ok(match self {
            Rule::Constant { value } => *value,
            Rule::Block { .. } | Rule::DssBlock { .. } => true,
            Rule::PotentialBlock { n, beta } => {
                let q = self.need_model(model)?;
                predictive_potential(q, prompt, prefix, suffix) <= beta * *n as f64 + EPS
            }
            Rule::DssPotential { n, beta } => {
                let q = self.need_model(model)?;
                let bound = beta * *n as f64 + EPS;
                let first = suffix.prefix(*n);
                predictive_potential(q, prompt, prefix, &first) <= bound && {
                    let ctx = prefix.concat(&first);
                    predictive_potential(q, prompt, &ctx, &suffix.range(*n..2 * n)) <= bound
                }
            }
            Rule::PathMeasure { alpha } => {
                let q = self.need_model(model)?;
                path_measure(q, prompt, prefix, suffix) <= (-alpha).exp2() * (1.0 + EPS)
            }
        })
    }

    fn admits(&self, p: usize, s: usize) -> bool {
        match self {
            Rule::Constant { value } => *value && s > 0,
            Rule::Block { n } | Rule::PotentialBlock { n, .. } => {
                *n > 0 && p.is_multiple_of(*n) && s == *n
            }
            Rule::DssBlock { n } | Rule::DssPotential { n, .. } => {
                *n > 0 && p.is_multiple_of(*n) && s == 2 * n
            }
            Rule::PathMeasure { .. } => s > 0,
        }
    }

    fn reads_content(&self) -> bool {
        self.requires_model()
    }

    fn requires_model(&self) -> bool {
        matches!(
            self,
            Rule::PotentialBlock { .. } | Rule::DssPotential { .. } | Rule::PathMeasure { .. }
        )
    }

    fn describe(&self) -> String {
        match self {
            Rule::Constant { value } => format!("constant({})", *value as u8),
            Rule::Block { n } => format!("block(n={n})"),
            Rule::PotentialBlock { n, beta } => format!("potential-block(n={n}, beta={beta})"),
            Rule::DssBlock { n } => format!("dss-block(n={n})"),
            Rule::DssPotential { n, beta } => format!("dss-potential(n={n}, beta={beta})"),
            Rule::PathMeasure { alpha } => format!("path-measure(alpha={alpha})"),
        }
    }
}

struct MixHasher(u64);

impl Hasher for MixHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.0 = mix64(self.0 ^ u64::from_le_bytes(buf));
        }
    }
}

/// A rule whose decision on every `(x, ρ, ζ)` is an independent fair coin,
/// fixed by `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomRule {
    pub seed: u64,
}

impl RandomRule {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl SelectionRule for RandomRule {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        _: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        let mut h = MixHasher(mix64(self.seed));
        (prompt, prefix, suffix).hash(&mut h);
        Ok(mix64(h.finish()) & 1 == 1)
    }

    fn describe(&self) -> String {
        format!("random(seed={})", self.seed)
    }
}

type DecideFn = dyn Fn(&BitString, &BitString, &BitString) -> bool + Send + Sync;

/// A model-free rule defined by a closure.
#[derive(Clone)]
pub struct FnRule {
    name: String,
    f: Arc<DecideFn>,
}

impl FnRule {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&BitString, &BitString, &BitString) -> bool + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnRule({})", self.name)
    }
}

impl SelectionRule for FnRule {
    fn decide(
        &self,
        prompt: &BitString,
        prefix: &BitString,
        suffix: &BitString,
        _: Option<&dyn LanguageModel>,
    ) -> Result<bool, AttributionError> {
        Ok((self.f)(prompt, prefix, suffix))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::model::{CopyModel, TableModel, Uniform};

    fn e() -> BitString {
        BitString::new()
    }

    #[test]
    fn block_alignment() {
        let r = Rule::Block { n: 4 };
        assert!(r.decide(&e(), &bits("0110"), &bits("1111"), None).unwrap());
        assert!(!r.decide(&e(), &bits("011"), &bits("1111"), None).unwrap());
        assert!(!r.decide(&e(), &bits("0110"), &bits("111"), None).unwrap());
    }

    #[test]
    fn path_measure_threshold_under_uniform() {
        let r = Rule::PathMeasure { alpha: 3.0 };
        let q: &dyn LanguageModel = &Uniform;
        assert!(r.decide(&e(), &e(), &bits("0101"), Some(q)).unwrap());
        assert!(r.decide(&e(), &e(), &bits("010"), Some(q)).unwrap());
        assert!(!r.decide(&e(), &e(), &bits("01"), Some(q)).unwrap());
        let copy = CopyModel::default();
        let x = copy.instruction(&bits("0101"));
        assert!(!r.decide(&x, &e(), &bits("0101"), Some(&copy)).unwrap());
    }

    #[test]
    fn model_rules_reject_missing_model() {
        for r in [
            Rule::PathMeasure { alpha: 1.0 },
            Rule::PotentialBlock { n: 2, beta: 0.1 },
            Rule::DssPotential { n: 2, beta: 0.1 },
        ] {
            assert!(matches!(
                r.decide(&e(), &e(), &bits("01"), None),
                Err(AttributionError::MissingModel(_))
            ));
        }
        assert!(Rule::Block { n: 2 }
            .decide(&e(), &e(), &bits("01"), None)
            .is_ok());
    }

    #[test]
    fn potential_rule_reduces_to_block_under_uniform() {
        let pot = Rule::PotentialBlock { n: 3, beta: 0.0 };
        let block = Rule::Block { n: 3 };
        for rho in BitString::all_up_to(4).unwrap() {
            for z in BitString::all_up_to(4).unwrap() {
                assert_eq!(
                    pot.decide(&e(), &rho, &z, Some(&Uniform)).unwrap(),
                    block.decide(&e(), &rho, &z, None).unwrap()
                );
            }
        }
    }

    #[test]
    fn potential_rule_threshold() {
        // Q ≡ 0.7: each token contributes 0.2, so B_4 = 0.8 against βn
        let q = TableModel::constant(0.7);
        let z = bits("1010");
        assert!(Rule::PotentialBlock { n: 4, beta: 0.2 }
            .decide(&e(), &e(), &z, Some(&q))
            .unwrap());
        assert!(!Rule::PotentialBlock { n: 4, beta: 0.19 }
            .decide(&e(), &e(), &z, Some(&q))
            .unwrap());
    }

    #[test]
    fn dss_potential_checks_both_halves() {
        let copy = CopyModel::default();
        let x = copy.instruction(&bits("11"));
        let r = Rule::DssPotential { n: 2, beta: 0.1 };
        // first half is copied deterministically: potential 1.0 > 0.2
        assert!(!r.decide(&x, &e(), &bits("1101"), Some(&copy)).unwrap());
        // once past the payload the model is uniform
        assert!(r
            .decide(&x, &bits("11"), &bits("0101"), Some(&copy))
            .unwrap());
        assert!(!r
            .decide(&x, &bits("1"), &bits("0101"), Some(&copy))
            .unwrap());
    }

    #[test]
    fn random_rule_is_deterministic_and_balanced() {
        let r = RandomRule::new(9);
        let mut ones = 0;
        let all = BitString::all_up_to(6).unwrap();
        for z in &all {
            let a = r.decide(&bits("1"), &bits("0"), z, None).unwrap();
            assert_eq!(a, r.decide(&bits("1"), &bits("0"), z, None).unwrap());
            ones += a as usize;
        }
        let frac = ones as f64 / all.len() as f64;
        assert!((0.4..0.6).contains(&frac), "{frac}");
        assert_ne!(
            (0..64)
                .map(|s| RandomRule::new(s)
                    .decide(&e(), &e(), &bits("1"), None)
                    .unwrap())
                .filter(|b| *b)
                .count(),
            0
        );
    }

    #[test]
    fn descriptor_json() {
        let r: Rule =
            serde_json::from_str(r#"{"type":"potential_block","n":16,"beta":0.1}"#).unwrap();
        assert_eq!(r, Rule::PotentialBlock { n: 16, beta: 0.1 });
        assert!(serde_json::from_str::<Rule>(r#"{"type":"block","n":4,"m":1}"#).is_err());
    }
}
