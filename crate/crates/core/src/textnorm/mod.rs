//! Tokenization, noise removal, hashtag segmentation and lemmatization.

mod lemma;
mod segment;
mod tokenize;

pub use lemma::Lemmatizer;
pub use segment::{segment_hashtag, unknown_penalty, SegmentationDict};
pub use tokenize::{is_url, strip_noise, tokenize, Token, TokenKind};

use crate::error::{Error, Result};

/// Shared resources for turning raw tweet text into model tokens.
#[derive(Debug, Clone, Default)]
pub struct TextPipeline {
    pub lemmatizer: Lemmatizer,
    pub segmentation: SegmentationDict,
}

impl Default for SegmentationDict {
    fn default() -> Self {
        SegmentationDict::bundled()
    }
}

impl TextPipeline {
    pub fn new(lemmatizer: Lemmatizer, segmentation: SegmentationDict) -> Self {
        TextPipeline {
            lemmatizer,
            segmentation,
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        tokenize(text, &self.lemmatizer)
    }

    /// Replaces every hashtag token with its segmented words. The new tokens
    /// carry the hashtag's span and kind `HashtagDerived`; the `#` is gone.
    pub fn expand_hashtags(&self, tokens: Vec<Token>) -> Vec<Token> {
        let mut out = Vec::with_capacity(tokens.len());
        for tok in tokens {
            if tok.kind != TokenKind::Hashtag {
                out.push(tok);
                continue;
            }
            for word in segment_hashtag(&tok.surface, &self.segmentation) {
                out.push(Token {
                    lemma: self.lemmatizer.lemmatize(&word),
                    surface: word,
                    span: tok.span,
                    kind: TokenKind::HashtagDerived,
                });
            }
        }
        out
    }

    /// Full preprocessing: tokenize, drop mentions and URLs, expand hashtags.
    pub fn prepare(&self, text: &str) -> Vec<Token> {
        self.expand_hashtags(strip_noise(self.tokenize(text)))
    }

    /// Like [`prepare`](Self::prepare), carrying POS tags aligned to
    /// [`tokenize`] output along: dropped tokens lose their tag and
    /// hashtag-derived words inherit the hashtag's tag.
    pub fn prepare_with_pos(&self, text: &str, pos: Option<&[String]>) -> Result<(Vec<Token>, Option<Vec<String>>)> {
        let raw = self.tokenize(text);
        let Some(pos) = pos else {
            return Ok((self.expand_hashtags(strip_noise(raw)), None));
        };
        if pos.len() != raw.len() {
            return Err(Error::Data(format!(
                "{} POS tags for {} tokens",
                pos.len(),
                raw.len()
            )));
        }
        let mut tokens = Vec::new();
        let mut tags = Vec::new();
        for (tok, tag) in raw.into_iter().zip(pos) {
            for t in self.expand_hashtags(strip_noise(vec![tok])) {
                tokens.push(t);
                tags.push(tag.clone());
            }
        }
        Ok((tokens, Some(tags)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prepare_expands_hashtags() {
        let p = TextPipeline::default();
        let toks = p.prepare("@fema #HurricaneIrma hit http://t.co/a Orlando.");
        let s: Vec<_> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, ["hurricane", "irma", "hit", "Orlando", "."]);
        assert_eq!(toks[0].span, toks[1].span);
        assert_eq!(toks[0].kind, TokenKind::HashtagDerived);
    }

    #[test]
    fn pos_tags_follow_tokens() {
        let p = TextPipeline::default();
        let pos: Vec<String> = ["@", "V", "#", "N"].iter().map(|s| s.to_string()).collect();
        let (toks, tags) = p.prepare_with_pos("@fema send #HurricaneIrma help", Some(&pos)).unwrap();
        let s: Vec<_> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(s, ["send", "hurricane", "irma", "help"]);
        assert_eq!(tags.unwrap(), ["V", "#", "#", "N"]);
        assert!(p.prepare_with_pos("a b", Some(&pos)).is_err());
    }

    proptest! {
        #[test]
        fn tokenization_round_trip(text in "[a-zA-Z0-9#@'.,!? \\t\\n:/éü’-]{0,60}") {
            let toks = tokenize(&text, &Lemmatizer::bundled());
            let mut rebuilt = String::new();
            let mut prev = 0;
            for t in &toks {
                prop_assert!(t.span.0 >= prev && t.span.1 > t.span.0);
                let gap = &text[prev..t.span.0];
                prop_assert!(gap.chars().all(char::is_whitespace), "gap {:?}", gap);
                rebuilt.push_str(gap);
                prop_assert_eq!(&text[t.span.0..t.span.1], t.surface.as_str());
                rebuilt.push_str(&t.surface);
                prev = t.span.1;
            }
            let tail = &text[prev..];
            prop_assert!(tail.chars().all(char::is_whitespace));
            rebuilt.push_str(tail);
            prop_assert_eq!(rebuilt, text);
        }

        #[test]
        fn lemma_is_fixed_point(text in "[a-zA-Z'#]{1,12}( [a-zA-Z]{1,12}){0,4}") {
            let lem = Lemmatizer::bundled();
            for t in tokenize(&text, &lem) {
                prop_assert_eq!(lem.lemmatize(&t.lemma), t.lemma.clone());
                prop_assert_eq!(t.lemma.to_lowercase(), t.lemma);
            }
        }
    }
}
