use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_WORDS: &str = include_str!("../../data/segmentation_words.txt");

/// Unigram log-frequency dictionary used to split hashtag bodies into words.
#[derive(Debug, Clone)]
pub struct SegmentationDict {
    words: HashMap<String, f64>,
    max_word_len: usize,
}

impl SegmentationDict {
    pub fn bundled() -> Self {
        Self::from_wordlist(BUNDLED_WORDS).expect("bundled wordlist is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_wordlist(&text)
    }

    /// Parses `word<SPACE>count` lines into log relative frequencies.
    pub fn from_wordlist(text: &str) -> Result<Self> {
        let mut counts: HashMap<String, f64> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Data(format!("wordlist line {}: expected `word count`", n + 1)));
            };
            let count: f64 = count
                .parse()
                .ok()
                .filter(|c: &f64| c.is_finite() && *c > 0.0)
                .ok_or_else(|| Error::Data(format!("wordlist line {}: bad count", n + 1)))?;
            *counts.entry(word.to_lowercase()).or_default() += count;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts<S: Into<String>>(counts: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let counts: Vec<(String, f64)> = counts.into_iter().map(|(w, c)| (w.into(), c)).collect();
        if counts.is_empty() {
            return Err(Error::Data("segmentation dictionary is empty".into()));
        }
        let total: f64 = counts.iter().map(|(_, c)| c).sum();
        let mut max_word_len = 0;
        let mut words = HashMap::with_capacity(counts.len());
        for (w, c) in counts {
            max_word_len = max_word_len.max(w.chars().count());
            words.insert(w, (c / total).ln());
        }
        Ok(SegmentationDict {
            words,
            max_word_len,
        })
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    /// Score of one segment: its log frequency, or `-(20 + 3 * chars)` when unknown.
    pub fn score(&self, word: &str) -> f64 {
        self.words
            .get(word)
            .copied()
            .unwrap_or_else(|| unknown_penalty(word.chars().count()))
    }
}

pub fn unknown_penalty(chars: usize) -> f64 {
    -(20.0 + 3.0 * chars as f64)
}

/// Splits a hashtag such as `#HurricaneIrma` into `["hurricane", "irma"]`.
///
/// Maximises the summed segment score over all cut sets by dynamic
/// programming; among equal scores the segmentation with fewer pieces wins,
/// then the one found first scanning cut points left to right.
pub fn segment_hashtag(tag: &str, dict: &SegmentationDict) -> Vec<String> {
    let body = tag.strip_prefix('#').unwrap_or(tag).to_lowercase();
    let chars: Vec<char> = body.chars().collect();
    let n = chars.len();
    if n == 0 {
        return Vec::new();
    }
    // best[j] = (score, pieces, previous cut) for the prefix chars[..j]
    let mut best: Vec<(f64, usize, usize)> = vec![(f64::NEG_INFINITY, 0, 0); n + 1];
    best[0] = (0.0, 0, 0);
    for j in 1..=n {
        for i in 0..j {
            let piece: String = chars[i..j].iter().collect();
            let cand = (best[i].0 + dict.score(&piece), best[i].1 + 1);
            let cur = best[j];
            if cand.0 > cur.0 || (cand.0 == cur.0 && cand.1 < cur.1) {
                best[j] = (cand.0, cand.1, i);
            }
        }
    }
    let mut cuts = vec![n];
    let mut j = n;
    while j > 0 {
        j = best[j].2;
        cuts.push(j);
    }
    cuts.reverse();
    cuts.windows(2)
        .map(|w| chars[w[0]..w[1]].iter().collect())
        .collect()
}
