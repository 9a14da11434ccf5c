use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::Token;

/// Span encoding tag. The discriminant is the class index used by the tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    S = 0,
    B = 1,
    M = 2,
    E = 3,
    O = 4,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::S, Tag::B, Tag::M, Tag::E, Tag::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }

    pub fn is_keyword(self) -> bool {
        self != Tag::O
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Tag> {
        Ok(match s {
            "S" => Tag::S,
            "B" => Tag::B,
            "M" => Tag::M,
            "E" => Tag::E,
            "O" => Tag::O,
            _ => return Err(Error::Data(format!("unknown tag {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanSource {
    Lexicon,
    UserHashtag,
    Chained,
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpan {
    pub start: usize,
    pub end: usize,
    pub source: SpanSource,
    pub surface: String,
}

impl GoldSpan {
    pub fn new(tokens: &[Token], start: usize, end: usize, source: SpanSource) -> Self {
        GoldSpan {
            start,
            end,
            source,
            surface: surface_of(tokens, start, end),
        }
    }

    pub fn range(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

pub fn surface_of(tokens: &[Token], start: usize, end: usize) -> String {
    tokens[start..end]
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub tokens: Vec<Token>,
    pub main_tags: Vec<Tag>,
    /// `true` marks a keyword token; always `main_tags[t] != O`.
    pub aux_labels: Vec<bool>,
    pub spans: Vec<GoldSpan>,
}

impl LabeledSequence {
    /// Verifies tag well-formedness, the aux projection and the span/tag bijection.
    pub fn check(&self) -> Result<()> {
        let n = self.tokens.len();
        if self.main_tags.len() != n || self.aux_labels.len() != n {
            return Err(Error::Data("tag and token counts differ".into()));
        }
        if self.main_tags.iter().zip(&self.aux_labels).any(|(t, a)| t.is_keyword() != *a) {
            return Err(Error::Data("aux labels are not the projection of main tags".into()));
        }
        let decoded = spans_from_tags(&self.main_tags)?;
        let spans: Vec<_> = self.spans.iter().map(GoldSpan::range).collect();
        if decoded != spans {
            return Err(Error::Data(format!("spans {spans:?} disagree with tags {decoded:?}")));
        }
        Ok(())
    }
}

/// Encodes disjoint spans as S/B/M/E/O tags.
pub fn to_labeled_sequence(tokens: Vec<Token>, mut spans: Vec<GoldSpan>) -> Result<LabeledSequence> {
    spans.sort_by_key(GoldSpan::range);
    let n = tokens.len();
    let mut tags = vec![Tag::O; n];
    let mut prev_end = 0;
    for s in &spans {
        if s.start >= s.end || s.end > n {
            return Err(Error::Data(format!("span [{}, {}) out of range for {n} tokens", s.start, s.end)));
        }
        if s.start < prev_end {
            return Err(Error::Data(format!("span [{}, {}) overlaps a previous span", s.start, s.end)));
        }
        prev_end = s.end;
        if s.end - s.start == 1 {
            tags[s.start] = Tag::S;
        } else {
            tags[s.start] = Tag::B;
            tags[s.start + 1..s.end - 1].fill(Tag::M);
            tags[s.end - 1] = Tag::E;
        }
    }
    let aux_labels = tags.iter().map(|t| t.is_keyword()).collect();
    Ok(LabeledSequence {
        tokens,
        main_tags: tags,
        aux_labels,
        spans,
    })
}

/// Decodes a well-formed tag sequence into spans; malformed input is an error.
pub fn spans_from_tags(tags: &[Tag]) -> Result<Vec<(usize, usize)>> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (t, tag) in tags.iter().enumerate() {
        match (tag, open) {
            (Tag::O, None) => {}
            (Tag::S, None) => spans.push((t, t + 1)),
            (Tag::B, None) => open = Some(t),
            (Tag::M, Some(_)) => {}
            (Tag::E, Some(s)) => {
                spans.push((s, t + 1));
                open = None;
            }
            _ => return Err(Error::Data(format!("ill-formed tag {tag} at position {t}"))),
        }
    }
    if open.is_some() {
        return Err(Error::Data("unterminated span at end of sequence".into()));
    }
    Ok(spans)
}

/// Makes any tag sequence well-formed.
///
/// M or E with no open span becomes O. A span left open by S, B, O or the
/// end of the sequence is closed on its last token: a lone B becomes S,
/// otherwise the trailing M becomes E.
pub fn repair_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut out = tags.to_vec();
    let mut open: Option<usize> = None;
    let close = |out: &mut Vec<Tag>, start: usize, last: usize| {
        if start == last {
            out[start] = Tag::S;
        } else {
            out[last] = Tag::E;
        }
    };
    for t in 0..tags.len() {
        match (tags[t], open) {
            (Tag::M, Some(_)) => {}
            (Tag::E, Some(_)) => open = None,
            (Tag::M | Tag::E, None) => out[t] = Tag::O,
            (tag, start) => {
                if let Some(s) = start {
                    close(&mut out, s, t - 1);
                }
                open = (tag == Tag::B).then_some(t);
            }
        }
    }
    if let Some(s) = open {
        close(&mut out, s, tags.len() - 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::TokenKind;
    use proptest::prelude::*;

    fn toks(n: usize) -> Vec<Token> {
        (0..n)
            .map(|i| Token {
                surface: format!("t{i}"),
                lemma: format!("t{i}"),
                span: (i, i + 1),
                kind: TokenKind::Word,
            })
            .collect()
    }

    fn span(tokens: &[Token], s: usize, e: usize) -> GoldSpan {
        GoldSpan::new(tokens, s, e, SpanSource::Lexicon)
    }

    #[test]
    fn single_and_long_spans() {
        let t = toks(3);
        let seq = to_labeled_sequence(t.clone(), vec![span(&t, 0, 1)]).unwrap();
        assert_eq!(seq.main_tags, [Tag::S, Tag::O, Tag::O]);
        assert_eq!(seq.aux_labels, [true, false, false]);
        let t = toks(4);
        let seq = to_labeled_sequence(t.clone(), vec![span(&t, 0, 4)]).unwrap();
        assert_eq!(seq.main_tags, [Tag::B, Tag::M, Tag::M, Tag::E]);
        seq.check().unwrap();
    }

    #[test]
    fn overlapping_spans_are_rejected() {
        let t = toks(4);
        assert!(to_labeled_sequence(t.clone(), vec![span(&t, 0, 2), span(&t, 1, 3)]).is_err());
        let out_of_range = GoldSpan {
            start: 3,
            end: 5,
            source: SpanSource::Lexicon,
            surface: String::new(),
        };
        assert!(to_labeled_sequence(t.clone(), vec![out_of_range]).is_err());
    }

    #[test]
    fn repair_rules() {
        use Tag::*;
        assert_eq!(repair_tags(&[S, O, B, M, E]), [S, O, B, M, E]);
        assert_eq!(repair_tags(&[M, E]), [O, O]);
        assert_eq!(repair_tags(&[B, M, O]), [B, E, O]);
        assert_eq!(repair_tags(&[B, O]), [S, O]);
        assert_eq!(repair_tags(&[B, B, M]), [S, B, E]);
        assert_eq!(repair_tags(&[B, M, S]), [B, E, S]);
        assert_eq!(repair_tags(&[]), []);
    }

    fn arb_tags() -> impl Strategy<Value = Vec<Tag>> {
        prop::collection::vec(prop::sample::select(Tag::ALL.to_vec()), 0..20)
    }

    proptest! {
        #[test]
        fn repair_is_well_formed_and_idempotent(tags in arb_tags()) {
            let fixed = repair_tags(&tags);
            prop_assert!(spans_from_tags(&fixed).is_ok());
            prop_assert_eq!(repair_tags(&fixed), fixed.clone());
        }

        #[test]
        fn labels_round_trip(n in 1usize..15, cuts in prop::collection::vec(any::<bool>(), 30)) {
            // derive a random disjoint span set from coin flips
            let t = toks(n);
            let mut spans = Vec::new();
            let mut i = 0;
            let mut k = 0;
            while i < n {
                let take = cuts[k % cuts.len()];
                let len = 1 + (k * 7 + i) % 3;
                k += 1;
                if take && i + len <= n {
                    spans.push(span(&t, i, i + len));
                    i += len;
                } else {
                    i += 1;
                }
            }
            let seq = to_labeled_sequence(t, spans.clone()).unwrap();
            seq.check().unwrap();
            let decoded = spans_from_tags(&seq.main_tags).unwrap();
            prop_assert_eq!(decoded, spans.iter().map(GoldSpan::range).collect::<Vec<_>>());
        }
    }
}
