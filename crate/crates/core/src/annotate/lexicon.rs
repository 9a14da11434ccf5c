use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::textnorm::{TextPipeline, Token};

/// Longest phrase (in lemmas) a lexicon may hold.
pub const MAX_PHRASE_LEN: usize = 2;

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: HashMap<String, usize>,
    terminal: bool,
}

/// Lemmatized unigram/bigram phrases plus a lemma-level trie for matching.
#[derive(Debug, Clone)]
pub struct Lexicon {
    phrases: BTreeSet<String>,
    nodes: Vec<TrieNode>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            phrases: BTreeSet::new(),
            nodes: vec![TrieNode::default()],
        }
    }
}

/// One lexicon hit: the half-open token range and the phrase it matched.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexiconMatch {
    pub start: usize,
    pub end: usize,
    pub phrase: String,
}

impl Lexicon {
    /// Builds a lexicon from already-lemmatized phrases (lemmas separated by
    /// single spaces).
    pub fn from_lemma_phrases<S: AsRef<str>>(phrases: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut lex = Lexicon::default();
        for p in phrases {
            let lemmas: Vec<&str> = p.as_ref().split_whitespace().collect();
            lex.insert(&lemmas)?;
        }
        Ok(lex)
    }

    /// Parses one phrase per line, lemmatizing each with `pipeline`. Blank
    /// lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, pipeline: &TextPipeline) -> Result<Self> {
        let mut lex = Lexicon::default();
        let mut bad = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lemmas: Vec<String> = pipeline.tokenize(line).into_iter().map(|t| t.lemma).collect();
            if lemmas.len() > MAX_PHRASE_LEN {
                bad.push(format!("line {}: {:?} has {} words", n + 1, line, lemmas.len()));
                continue;
            }
            let refs: Vec<&str> = lemmas.iter().map(String::as_str).collect();
            lex.insert(&refs)?;
        }
        if !bad.is_empty() {
            return Err(Error::Data(format!(
                "lexicon phrases longer than {MAX_PHRASE_LEN} words: {}",
                bad.join("; ")
            )));
        }
        Ok(lex)
    }

    pub fn load(path: &Path, pipeline: &TextPipeline) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lex = Self::parse(&text, pipeline)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        log::info!("{}: {} unique lexicon phrases", path.display(), lex.len());
        Ok(lex)
    }

    fn insert(&mut self, lemmas: &[&str]) -> Result<()> {
        if lemmas.is_empty() || lemmas.len() > MAX_PHRASE_LEN {
            return Err(Error::Data(format!(
                "lexicon phrase must have 1..={MAX_PHRASE_LEN} words: {lemmas:?}"
            )));
        }
        let mut node = 0;
        for lemma in lemmas {
            node = match self.nodes[node].children.get(*lemma) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(lemma.to_string(), next);
                    next
                }
            };
        }
        self.nodes[node].terminal = true;
        self.phrases.insert(lemmas.join(" "));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.phrases.iter().map(String::as_str)
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.contains(phrase)
    }

    /// Checks that the trie spells out exactly the stored phrase set.
    pub fn index_consistent(&self) -> bool {
        let mut found = BTreeSet::new();
        let mut stack = vec![(0usize, Vec::<&str>::new())];
        while let Some((node, path)) = stack.pop() {
            if self.nodes[node].terminal {
                found.insert(path.join(" "));
            }
            for (lemma, &child) in &self.nodes[node].children {
                let mut next = path.clone();
                next.push(lemma);
                stack.push((child, next));
            }
        }
        found == self.phrases
    }

    /// Every occurrence of every phrase, overlaps included, sorted by start
    /// then length.
    pub fn match_tokens(&self, tokens: &[Token]) -> Vec<LexiconMatch> {
        let mut out = Vec::new();
        for start in 0..tokens.len() {
            let mut node = 0;
            for (end, tok) in tokens.iter().enumerate().skip(start) {
                match self.nodes[node].children.get(&tok.lemma) {
                    Some(&next) => node = next,
                    None => break,
                }
                if self.nodes[node].terminal {
                    out.push(LexiconMatch {
                        start,
                        end: end + 1,
                        phrase: tokens[start..=end]
                            .iter()
                            .map(|t| t.lemma.as_str())
                            .collect::<Vec<_>>()
                            .join(" "),
                    });
                }
            }
        }
        out
    }
}

pub fn match_lexicon(tokens: &[Token], lex: &Lexicon) -> Vec<LexiconMatch> {
    lex.match_tokens(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::TokenKind;
    use proptest::prelude::*;

    fn toks(lemmas: &[&str]) -> Vec<Token> {
        lemmas
            .iter()
            .enumerate()
            .map(|(i, l)| Token {
                surface: l.to_string(),
                lemma: l.to_string(),
                span: (i, i + 1),
                kind: TokenKind::Word,
            })
            .collect()
    }

    #[test]
    fn load_counts_and_lemmatizes() {
        let p = TextPipeline::default();
        let lex = Lexicon::parse("hurricane maria\nneed help\nflood\n", &p).unwrap();
        assert_eq!(lex.len(), 3);
        let lex = Lexicon::parse("# comment\nfloods\nflood\n\n", &p).unwrap();
        assert_eq!(lex.phrases().collect::<Vec<_>>(), ["flood"]);
        assert!(lex.index_consistent());
    }

    #[test]
    fn three_word_phrase_rejected() {
        let p = TextPipeline::default();
        let err = Lexicon::parse("flood\nhurricane maria recovery\n", &p).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn overlapping_bigrams() {
        let lex = Lexicon::from_lemma_phrases(["hurricane maria", "maria recovery", "recovery effort"]).unwrap();
        let m = match_lexicon(&toks(&["hurricane", "maria", "recovery", "effort"]), &lex);
        let ranges: Vec<_> = m.iter().map(|m| (m.start, m.end)).collect();
        assert_eq!(ranges, [(0, 2), (1, 3), (2, 4)]);
    }

    #[test]
    fn empty_lexicon_matches_nothing() {
        let lex = Lexicon::default();
        assert!(match_lexicon(&toks(&["a", "b"]), &lex).is_empty());
        assert!(lex.is_empty() && lex.index_consistent());
    }

    proptest! {
        #[test]
        fn trie_matches_window_scan(
            seq in prop::collection::vec(0u8..6, 0..15),
            phrases in prop::collection::vec(prop::collection::vec(0u8..6, 1..=2), 0..50),
        ) {
            let word = |w: &u8| format!("w{w}");
            let phrases: Vec<String> = phrases.iter().map(|p| p.iter().map(word).collect::<Vec<_>>().join(" ")).collect();
            let lex = Lexicon::from_lemma_phrases(&phrases).unwrap();
            prop_assert!(lex.index_consistent());
            let lemmas: Vec<String> = seq.iter().map(word).collect();
            let tokens = toks(&lemmas.iter().map(String::as_str).collect::<Vec<_>>());
            let got = match_lexicon(&tokens, &lex);
            let mut expected = Vec::new();
            for i in 0..lemmas.len() {
                for len in 1..=2 {
                    if i + len <= lemmas.len() {
                        let window = lemmas[i..i + len].join(" ");
                        if phrases.contains(&window) {
                            expected.push(LexiconMatch { start: i, end: i + len, phrase: window });
                        }
                    }
                }
            }
            prop_assert_eq!(got, expected);
        }
    }
}
