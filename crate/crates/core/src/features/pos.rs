use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::textnorm::is_url;

pub const BUNDLED_POS_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");

/// The 25 coarse tags of the Twitter POS tagset.
pub const TAGSET: [&str; 25] = [
    "N", "O", "^", "S", "Z", "V", "A", "R", "!", "D", "P", "&", "T", "X", "Y", "#", "@", "~", "U", "E", "$", ",",
    "G", "L", "M",
];

/// Coarse fallback tagger for records that arrive without POS tags.
#[derive(Debug, Clone)]
pub struct PosTagger {
    lexicon: HashMap<String, String>,
    source: String,
}

impl PosTagger {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_POS_LEXICON).expect("bundled POS lexicon is valid")
    }

    /// `word<TAB>tag` lines; the first entry for a word wins.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with("# ") {
                continue;
            }
            let (w, t) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("POS lexicon line {}: expected word<TAB>tag", n + 1)))?;
            let t = t.trim();
            if !TAGSET.contains(&t) {
                return Err(Error::Data(format!("POS lexicon line {}: unknown tag {t:?}", n + 1)));
            }
            lexicon.entry(w.trim().to_lowercase()).or_insert_with(|| t.to_string());
        }
        Ok(PosTagger {
            lexicon,
            source: text.to_string(),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn tag(&self, token: &str) -> String {
        let first = token.chars().next();
        let tag = match first {
            None => ",",
            Some('#') if token.len() > 1 => "^",
            Some('@') if token.len() > 1 => "@",
            _ if is_url(token) => "U",
            _ if is_numeral(token) => "$",
            _ if !token.chars().any(char::is_alphanumeric) => ",",
            _ => {
                if let Some(t) = self.lexicon.get(&token.to_lowercase()) {
                    return t.clone();
                }
                let lower = token.to_lowercase();
                if first.is_some_and(char::is_uppercase) {
                    "^"
                } else if lower.len() > 4 && lower.ends_with("ly") {
                    "R"
                } else if lower.len() > 4 && (lower.ends_with("ing") || lower.ends_with("ed")) {
                    "V"
                } else {
                    "N"
                }
            }
        };
        tag.to_string()
    }

    pub fn tag_all<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens.iter().map(|t| self.tag(t.as_ref())).collect()
    }
}

fn is_numeral(s: &str) -> bool {
    s.chars().any(|c| c.is_ascii_digit())
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | ':' | '/' | '-' | '%'))
}
