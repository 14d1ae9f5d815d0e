use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use super::stats::wilson;
use crate::attribution::Ledger;
use crate::rng::STREAM_ALGORITHM;

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float")
}

/// A success count over a trial count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
}

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        assert!(successes <= trials, "{successes} successes out of {trials}");
        Self { successes, trials }
    }

    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    fn to_json(self) -> Value {
        let (lo, hi) = wilson(self.successes, self.trials);
        json!({
            "successes": self.successes,
            "trials": self.trials,
            "value": sig6(self.value()),
            "ci95": [sig6(lo), sig6(hi)],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    AtMost,
    AtLeast,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::AtMost => "<=",
            Cmp::AtLeast => ">=",
        }
    }
}

/// An acceptance threshold and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub observed: f64,
    pub cmp: Cmp,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.cmp {
            Cmp::AtMost => self.observed <= self.threshold,
            Cmp::AtLeast => self.observed >= self.threshold,
        }
    }
}

/// Outcome of one game run: parameters, counters, rates with 95% Wilson
/// intervals, derived metrics, and acceptance checks.
///
/// Everything is keyed by name in sorted maps, so the JSON rendering is
/// canonical: equal runs produce byte-identical output.
#[derive(Debug, Clone, Default)]
pub struct GameReport {
    pub game: String,
    pub params: BTreeMap<String, Value>,
    pub counters: BTreeMap<String, u64>,
    pub rates: BTreeMap<String, Rate>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: BTreeMap<String, Check>,
    pub notes: BTreeMap<String, String>,
    /// A sample ledger from the run, written alongside the report on request.
    pub ledger: Option<Ledger>,
}

impl GameReport {
    pub fn new(game: &str) -> Self {
        let mut r = Self {
            game: game.to_string(),
            ..Self::default()
        };
        r.note("rng", STREAM_ALGORITHM);
        r
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn counter(&mut self, key: &str, value: u64) -> &mut Self {
        self.counters.insert(key.to_string(), value);
        self
    }

    pub fn rate(&mut self, key: &str, rate: Rate) -> &mut Self {
        self.rates.insert(key.to_string(), rate);
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.notes.insert(key.to_string(), value.into());
        self
    }

    pub fn check_at_most(&mut self, key: &str, observed: f64, threshold: f64) -> &mut Self {
        self.checks.insert(
            key.to_string(),
            Check {
                observed,
                cmp: Cmp::AtMost,
                threshold,
            },
        );
        self
    }

    pub fn check_at_least(&mut self, key: &str, observed: f64, threshold: f64) -> &mut Self {
        self.checks.insert(
            key.to_string(),
            Check {
                observed,
                cmp: Cmp::AtLeast,
                threshold,
            },
        );
        self
    }

    /// Whether every check passes (vacuously true without checks).
    pub fn passed(&self) -> bool {
        self.checks.values().all(Check::passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, c)| !c.passed())
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let checks: Map<String, Value> = self
            .checks
            .iter()
            .map(|(k, c)| {
                (
                    k.clone(),
                    json!({
                        "observed": sig6(c.observed),
                        "op": c.cmp.symbol(),
                        "threshold": c.threshold,
                        "pass": c.passed(),
                    }),
                )
            })
            .collect();
        json!({
            "game": self.game,
            "params": self.params,
            "counters": self.counters,
            "rates": self.rates.iter().map(|(k, r)| (k.clone(), r.to_json())).collect::<Map<_, _>>(),
            "metrics": self.metrics.iter().map(|(k, v)| (k.clone(), json!(sig6(*v)))).collect::<Map<_, _>>(),
            "checks": checks,
            "notes": self.notes,
            "pass": self.passed(),
        })
    }

    /// Pretty JSON with sorted keys and a trailing newline.
    pub fn emit_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    /// Human-readable summary with aligned columns.
    pub fn emit_text(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        rows.push(("game".into(), self.game.clone()));
        for (k, v) in &self.params {
            rows.push((format!("param {k}"), v.to_string()));
        }
        for (k, v) in &self.counters {
            rows.push((format!("count {k}"), v.to_string()));
        }
        for (k, r) in &self.rates {
            let (lo, hi) = wilson(r.successes, r.trials);
            rows.push((
                format!("rate {k}"),
                format!(
                    "{} ({}/{}) ci95 [{}, {}]",
                    sig6(r.value()),
                    r.successes,
                    r.trials,
                    sig6(lo),
                    sig6(hi)
                ),
            ));
        }
        for (k, v) in &self.metrics {
            rows.push((format!("metric {k}"), sig6(*v).to_string()));
        }
        for (k, c) in &self.checks {
            rows.push((
                format!("check {k}"),
                format!(
                    "{} {} {}  {}",
                    sig6(c.observed),
                    c.cmp.symbol(),
                    c.threshold,
                    if c.passed() { "PASS" } else { "FAIL" }
                ),
            ));
        }
        for (k, v) in &self.notes {
            rows.push((format!("note {k}"), v.clone()));
        }
        rows.push((
            "result".into(),
            if self.passed() { "PASS" } else { "FAIL" }.into(),
        ));
        let width = rows
            .iter()
            .map(|(k, _)| k.chars().count())
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GameReport {
        let mut r = GameReport::new("demo");
        r.param("n", 128)
            .counter("trials", 10)
            .rate("hit", Rate::new(3, 10));
        r.metric("tv", 0.001234567891)
            .check_at_most("tv", 0.001234567891, 0.01);
        r
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.001234567891), 0.00123457);
        assert_eq!(sig6(123456789.0), 123457000.0);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(sig6(1.0 / 3.0), 0.333333);
    }

    #[test]
    fn json_is_deterministic_and_sorted() {
        let a = sample().emit_json();
        assert_eq!(a, sample().emit_json());
        let v: Value = serde_json::from_str(&a).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(v["rates"]["hit"]["value"], json!(0.3));
        assert!(v["rates"]["hit"]["ci95"].is_array());
        assert_eq!(v["pass"], json!(true));
    }

    #[test]
    fn every_rate_has_an_interval_and_text_aligns() {
        let t = sample().emit_text();
        assert!(t.contains("ci95"));
        let cols: Vec<usize> = t.lines().map(|l| l.find("  ").unwrap()).collect();
        let starts: Vec<usize> = t
            .lines()
            .map(|l| l.len() - l[l.find("  ").unwrap()..].trim_start().len())
            .collect();
        assert!(cols.iter().all(|&c| c <= starts[0]));
        assert!(starts.iter().all(|&s| s == starts[0]));
    }

    #[test]
    fn failing_check_fails_report() {
        let mut r = sample();
        r.check_at_least("rate", 0.5, 0.99);
        assert!(!r.passed());
        assert_eq!(r.failed_checks(), vec!["rate"]);
    }
}
