use std::collections::HashMap;

use crate::error::{Error, Result};

pub const BUNDLED_INVENTORY: &str = include_str!("../../data/phonemes.tsv");
pub const BUNDLED_G2P_RULES: &str = include_str!("../../data/g2p_rules.tsv");
pub const BUNDLED_G2P_EXCEPTIONS: &str = include_str!("../../data/g2p_exceptions.tsv");

/// Phoneme symbols with their fixed articulatory feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeInventory {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major `symbols.len() x feature_dim`, values in {-1, 0, 1}.
    features: Vec<f64>,
    feature_dim: usize,
}

impl PhonemeInventory {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_INVENTORY).expect("bundled inventory is valid")
    }

    /// Parses `phoneme<TAB>f1 ... fn` lines; every row must have the same width.
    pub fn parse(text: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        let mut index = HashMap::new();
        let mut features = Vec::new();
        let mut feature_dim = None;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with("# ") {
                continue;
            }
            let err = |m: &str| Error::Data(format!("phoneme inventory line {}: {m}", n + 1));
            let (sym, rest) = line.split_once('\t').ok_or_else(|| err("expected phoneme<TAB>features"))?;
            let values: Vec<f64> = rest
                .split_whitespace()
                .map(|v| match v {
                    "-1" => Ok(-1.0),
                    "0" => Ok(0.0),
                    "1" | "+1" => Ok(1.0),
                    _ => Err(err(&format!("feature value {v:?} not in {{-1, 0, 1}}"))),
                })
                .collect::<Result<_>>()?;
            match feature_dim {
                None => feature_dim = Some(values.len()),
                Some(d) if d != values.len() => return Err(err(&format!("expected {d} features"))),
                _ => {}
            }
            if index.insert(sym.to_string(), symbols.len()).is_some() {
                return Err(err(&format!("duplicate phoneme {sym:?}")));
            }
            symbols.push(sym.to_string());
            features.extend(values);
        }
        let feature_dim = feature_dim.ok_or_else(|| Error::Data("empty phoneme inventory".into()))?;
        Ok(PhonemeInventory {
            symbols,
            index,
            features,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn features(&self, idx: usize) -> &[f64] {
        &self.features[idx * self.feature_dim..(idx + 1) * self.feature_dim]
    }

    /// Serializes back to the TSV format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.symbols.iter().enumerate() {
            let vals: Vec<String> = self.features(i).iter().map(|v| format!("{}", *v as i32)).collect();
            out.push_str(&format!("{s}\t{}\n", vals.join(" ")));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ctx {
    Letter(char),
    Boundary,
    Vowel,
    Consonant,
}

impl Ctx {
    fn matches(self, c: Option<char>) -> bool {
        match (self, c) {
            (Ctx::Boundary, None) => true,
            (Ctx::Letter(l), Some(c)) => l == c,
            (Ctx::Vowel, Some(c)) => is_vowel(c),
            (Ctx::Consonant, Some(c)) => !is_vowel(c),
            _ => false,
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

#[derive(Debug, Clone, PartialEq)]
struct Rule {
    left: Vec<Ctx>,
    focus: Vec<char>,
    right: Vec<Ctx>,
    phonemes: Vec<String>,
}

impl Rule {
    fn width(&self) -> usize {
        self.left.len() + self.focus.len() + self.right.len()
    }

    fn matches_at(&self, letters: &[char], i: usize) -> bool {
        if i + self.focus.len() > letters.len() || letters[i..i + self.focus.len()] != self.focus[..] {
            return false;
        }
        let at = |p: isize| -> Option<char> {
            (p >= 0 && (p as usize) < letters.len()).then(|| letters[p as usize])
        };
        let left_ok = self
            .left
            .iter()
            .rev()
            .enumerate()
            .all(|(k, ctx)| ctx.matches(at(i as isize - 1 - k as isize)));
        let end = i + self.focus.len();
        let right_ok = self
            .right
            .iter()
            .enumerate()
            .all(|(k, ctx)| ctx.matches(at((end + k) as isize)));
        left_ok && right_ok
    }
}

/// Ordered grapheme-to-phoneme rewrite rules plus whole-word exceptions.
#[derive(Debug, Clone)]
pub struct G2PRules {
    rules: Vec<Rule>,
    defaults: HashMap<char, Vec<String>>,
    exceptions: HashMap<String, Vec<String>>,
    source: (String, String),
}

fn parse_context(s: &str, line: usize) -> Result<Vec<Ctx>> {
    s.chars()
        .map(|c| match c {
            '#' => Ok(Ctx::Boundary),
            'V' => Ok(Ctx::Vowel),
            'C' => Ok(Ctx::Consonant),
            c if c.is_ascii_lowercase() => Ok(Ctx::Letter(c)),
            _ => Err(Error::Data(format!("g2p rules line {line}: bad context symbol {c:?}"))),
        })
        .collect()
}

fn parse_phonemes(s: &str) -> Vec<String> {
    if s.trim() == "-" {
        return Vec::new();
    }
    s.split_whitespace().map(str::to_string).collect()
}

impl G2PRules {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_G2P_RULES, BUNDLED_G2P_EXCEPTIONS).expect("bundled g2p tables are valid")
    }

    /// Parses the rule and exception tables. Every letter a-z needs a plain
    /// single-letter rule with a non-silent output, which makes conversion
    /// total over alphabetic input.
    pub fn parse(rules_text: &str, exceptions_text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (n, line) in rules_text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with("# ") {
                continue;
            }
            let bad = |m: &str| Error::Data(format!("g2p rules line {}: {m}", n + 1));
            let (pattern, phon) = line.split_once('\t').ok_or_else(|| bad("expected pattern<TAB>phonemes"))?;
            let open = pattern.find('[').ok_or_else(|| bad("missing ["))?;
            let close = pattern.find(']').ok_or_else(|| bad("missing ]"))?;
            if close <= open + 1 {
                return Err(bad("empty focus"));
            }
            let focus: Vec<char> = pattern[open + 1..close].chars().collect();
            if !focus.iter().all(|c| c.is_ascii_lowercase()) {
                return Err(bad("focus must be lowercase letters"));
            }
            rules.push(Rule {
                left: parse_context(&pattern[..open], n + 1)?,
                focus,
                right: parse_context(&pattern[close + 1..], n + 1)?,
                phonemes: parse_phonemes(phon),
            });
        }
        // longest context first; sort is stable so file order breaks ties
        rules.sort_by_key(|r| std::cmp::Reverse(r.width()));

        let mut defaults = HashMap::new();
        for r in &rules {
            if r.focus.len() == 1 && r.left.is_empty() && r.right.is_empty() && !r.phonemes.is_empty() {
                defaults.entry(r.focus[0]).or_insert_with(|| r.phonemes.clone());
            }
        }
        if let Some(missing) = ('a'..='z').find(|c| !defaults.contains_key(c)) {
            return Err(Error::Data(format!("g2p rules: no default rule for letter {missing:?}")));
        }

        let mut exceptions = HashMap::new();
        for (n, line) in exceptions_text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with("# ") {
                continue;
            }
            let (word, phon) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("g2p exceptions line {}: expected word<TAB>phonemes", n + 1)))?;
            let phon = parse_phonemes(phon);
            if phon.is_empty() {
                return Err(Error::Data(format!("g2p exceptions line {}: empty pronunciation", n + 1)));
            }
            exceptions.insert(word.trim().to_lowercase(), phon);
        }
        Ok(G2PRules {
            rules,
            defaults,
            exceptions,
            source: (rules_text.to_string(), exceptions_text.to_string()),
        })
    }

    /// The original rule and exception texts.
    pub fn source(&self) -> (&str, &str) {
        (&self.source.0, &self.source.1)
    }

    /// Every phoneme symbol the tables can emit.
    pub fn symbols(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .rules
            .iter()
            .flat_map(|r| r.phonemes.iter())
            .chain(self.exceptions.values().flatten())
            .map(String::as_str)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Converts a word to phoneme symbols. Letters outside a-z are dropped.
pub fn grapheme_to_phoneme(word: &str, rules: &G2PRules) -> Vec<String> {
    let letters: Vec<char> = word
        .to_lowercase()
        .chars()
        .filter(|c| c.is_ascii_lowercase())
        .collect();
    if letters.is_empty() {
        return Vec::new();
    }
    let key: String = letters.iter().collect();
    if let Some(p) = rules.exceptions.get(&key) {
        return p.clone();
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < letters.len() {
        match rules.rules.iter().find(|r| r.matches_at(&letters, i)) {
            Some(r) => {
                out.extend(r.phonemes.iter().cloned());
                i += r.focus.len();
            }
            None => {
                out.extend(rules.defaults[&letters[i]].iter().cloned());
                i += 1;
            }
        }
    }
    if out.is_empty() {
        out = letters.iter().flat_map(|c| rules.defaults[c].iter().cloned()).collect();
    }
    out
}
