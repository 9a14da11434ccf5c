use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");

/// Upper bound on rewrite steps; every suffix rule shortens the word so this
/// only matters for pathological exception tables.
const MAX_STEPS: usize = 32;

/// Rule-based English lemmatizer: an exception table for irregular forms and
/// a small ordered set of suffix rules, applied until a fixed point.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

impl Default for Lemmatizer {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Lemmatizer {
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED_EXCEPTIONS).expect("bundled lemma exceptions are valid")
    }

    pub fn empty() -> Self {
        Lemmatizer {
            exceptions: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }

    /// Parses `form<TAB>lemma` lines. Blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut exceptions = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (form, lemma) = line.split_once('\t').ok_or_else(|| {
                Error::Data(format!("lemma exceptions line {}: expected form<TAB>lemma", n + 1))
            })?;
            let (form, lemma) = (form.trim().to_lowercase(), lemma.trim().to_lowercase());
            if form.is_empty() || lemma.is_empty() {
                return Err(Error::Data(format!("lemma exceptions line {}: empty field", n + 1)));
            }
            exceptions.insert(form, lemma);
        }
        // A lemma that is itself a form would make the mapping order-dependent.
        let mut chained: Vec<_> = exceptions
            .iter()
            .filter(|(_, lemma)| exceptions.get(*lemma).is_some_and(|l| l != *lemma))
            .map(|(form, _)| form.clone())
            .collect();
        chained.sort();
        if let Some(form) = chained.first() {
            return Err(Error::Data(format!(
                "lemma exception for {form:?} maps to another exception form"
            )));
        }
        Ok(Lemmatizer { exceptions })
    }

    pub fn lemmatize(&self, word: &str) -> String {
        let mut current = word.to_lowercase();
        for _ in 0..MAX_STEPS {
            match self.step(&current) {
                Some(next) => current = next,
                None => break,
            }
        }
        current
    }

    fn step(&self, w: &str) -> Option<String> {
        if !w.chars().all(|c| c.is_ascii_lowercase()) {
            return None;
        }
        if let Some(lemma) = self.exceptions.get(w) {
            return (lemma != w).then(|| lemma.clone());
        }
        if w.len() <= 3 {
            return None;
        }
        if let Some(stem) = w.strip_suffix("ies").or_else(|| w.strip_suffix("ied")) {
            if stem.len() >= 2 {
                return Some(format!("{stem}y"));
            }
        }
        if let Some(stem) = w.strip_suffix("sses") {
            return Some(format!("{stem}ss"));
        }
        for suffix in ["xes", "ches", "shes", "zzes"] {
            if w.ends_with(suffix) {
                return Some(w[..w.len() - 2].to_string());
            }
        }
        if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
            let stem = &w[..w.len() - 1];
            if stem.len() >= 3 {
                return Some(stem.to_string());
            }
        }
        if let Some(stem) = w.strip_suffix("ing") {
            if stem.len() >= 3 && has_vowel(stem) {
                return Some(restore(stem));
            }
        }
        if let Some(stem) = w.strip_suffix("ed") {
            if !w.ends_with("eed") && stem.len() >= 3 && has_vowel(stem) {
                return Some(restore(stem));
            }
        }
        None
    }
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

/// Undoes consonant doubling (`trapp` -> `trap`) or restores a dropped final
/// `e` (`evacuat` -> `evacuate`) on a stem left by removing -ing/-ed.
fn restore(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    let last = b[n - 1];
    if b[n - 2] == last && !matches!(last, b'l' | b's' | b'z' | b'a' | b'e' | b'i' | b'o' | b'u') {
        return stem[..n - 1].to_string();
    }
    if n >= 4 {
        for ending in ["at", "bl", "iz", "dg", "ag", "iv", "uc"] {
            if stem.ends_with(ending) {
                return format!("{stem}e");
            }
        }
    }
    stem.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_rules() {
        let l = Lemmatizer::bundled();
        assert_eq!(l.lemmatize("powerlines"), "powerline");
        assert_eq!(l.lemmatize("trapped"), "trap");
        assert_eq!(l.lemmatize("flood"), "flood");
        assert_eq!(l.lemmatize("floods"), "flood");
        assert_eq!(l.lemmatize("Flooded"), "flood");
        assert_eq!(l.lemmatize("blocking"), "block");
        assert_eq!(l.lemmatize("evacuated"), "evacuate");
        assert_eq!(l.lemmatize("damaged"), "damage");
        assert_eq!(l.lemmatize("cities"), "city");
        assert_eq!(l.lemmatize("churches"), "church");
        assert_eq!(l.lemmatize("falling"), "fall");
        assert_eq!(l.lemmatize("missing"), "miss");
        assert_eq!(l.lemmatize("need"), "need");
        assert_eq!(l.lemmatize("efforts"), "effort");
        assert_eq!(l.lemmatize("this"), "this");
        assert_eq!(l.lemmatize("eating"), "eat");
    }

    #[test]
    fn exceptions_apply_first() {
        let l = Lemmatizer::bundled();
        assert_eq!(l.lemmatize("children"), "child");
        assert_eq!(l.lemmatize("people"), "people");
        assert_eq!(l.lemmatize("feet"), "foot");
    }

    #[test]
    fn non_alphabetic_is_lowercased_only() {
        let l = Lemmatizer::bundled();
        assert_eq!(l.lemmatize("'S"), "'s");
        assert_eq!(l.lemmatize("77078"), "77078");
        assert_eq!(l.lemmatize("N"), "n");
    }

    #[test]
    fn chained_exceptions_rejected() {
        assert!(Lemmatizer::from_tsv("a\tb\nb\tc\n").is_err());
        assert!(Lemmatizer::from_tsv("mice\tmouse\n").is_ok());
        assert!(Lemmatizer::from_tsv("things\tthing\nthing\tthing\n").is_ok());
        assert!(Lemmatizer::from_tsv("mice mouse\n").is_err());
    }

    #[test]
    fn never_empty() {
        let l = Lemmatizer::bundled();
        for w in ["s", "ed", "ing", "ies", "sses", "xes", "aing"] {
            assert!(!l.lemmatize(w).is_empty(), "{w}");
        }
    }

    #[test]
    fn idempotent_over_dictionary_words() {
        let l = Lemmatizer::bundled();
        let words = include_str!("../../data/segmentation_words.txt");
        let mut checked = 0;
        for line in words.lines() {
            let w = line.split_whitespace().next().unwrap();
            for form in [
                w.to_string(),
                format!("{w}s"),
                format!("{w}es"),
                format!("{w}ed"),
                format!("{w}ing"),
                format!("{w}{}ing", &w[w.len() - 1..]),
                format!("{w}ies"),
                w.to_uppercase(),
            ] {
                let once = l.lemmatize(&form);
                assert!(!once.is_empty());
                assert_eq!(l.lemmatize(&once), once, "{form}");
                checked += 1;
            }
        }
        assert!(checked >= 10_000);
    }
}
