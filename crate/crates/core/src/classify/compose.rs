use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::BinaryClassifier;
use crate::normalize::NormalizedMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    MissingWhy,
    MissingWhat,
}

impl Hint {
    /// Hook output line.
    pub fn line(self) -> &'static str {
        match self {
            Hint::MissingWhy => "missing: why",
            Hint::MissingWhat => "missing: what",
        }
    }
}

impl fmt::Display for Hint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.line())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Composition {
    pub good: bool,
    pub hints: BTreeSet<Hint>,
    pub p_missing_why: f64,
    pub p_missing_what: f64,
}

impl Composition {
    /// `min(1 − p_missing_why, 1 − p_missing_what)`.
    pub fn confidence(&self) -> f64 {
        (1.0 - self.p_missing_why).min(1.0 - self.p_missing_what)
    }
}

/// Good iff neither detector fires.
pub fn compose_good(cwhy: &dyn BinaryClassifier, cwhat: &dyn BinaryClassifier, message: &NormalizedMessage) -> Composition {
    let why = cwhy.predict(message);
    let what = cwhat.predict(message);
    let mut hints = BTreeSet::new();
    if why.label {
        hints.insert(Hint::MissingWhy);
    }
    if what.label {
        hints.insert(Hint::MissingWhat);
    }
    Composition { good: hints.is_empty(), hints, p_missing_why: why.probability, p_missing_what: what.probability }
}

/// Single model trained with `good` as the positive class. The missing
/// probabilities are both reported as `1 − p_good`; no hints can be derived.
pub fn compose_good_direct(cgood: &dyn BinaryClassifier, message: &NormalizedMessage) -> Composition {
    let p = cgood.predict(message);
    Composition { good: p.label, hints: BTreeSet::new(), p_missing_why: 1.0 - p.probability, p_missing_what: 1.0 - p.probability }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::FnClassifier;

    fn run(why: f64, what: f64) -> Composition {
        let m = NormalizedMessage::from_text("x");
        compose_good(&FnClassifier::new(move |_| why), &FnClassifier::new(move |_| what), &m)
    }

    #[test]
    fn truth_table() {
        let c = run(0.1, 0.2);
        assert!(c.good && c.hints.is_empty());
        assert!((c.confidence() - 0.8).abs() < 1e-12);
        let c = run(0.9, 0.2);
        assert!(!c.good);
        assert_eq!(c.hints, BTreeSet::from([Hint::MissingWhy]));
        let c = run(0.2, 0.9);
        assert_eq!(c.hints, BTreeSet::from([Hint::MissingWhat]));
        let c = run(0.9, 0.9);
        assert_eq!(c.hints, BTreeSet::from([Hint::MissingWhy, Hint::MissingWhat]));
    }

    #[test]
    fn direct_mode() {
        let m = NormalizedMessage::from_text("x");
        let c = compose_good_direct(&FnClassifier::new(|_| 0.7), &m);
        assert!(c.good);
        assert!((c.confidence() - 0.7).abs() < 1e-12);
    }
}
