//! Weak-supervision annotation: lexicon matching, bigram chaining, user
//! hashtags, and S/B/M/E/O encoding.

mod labels;
mod lexicon;
mod record;

pub use labels::{
    repair_tags, spans_from_tags, surface_of, to_labeled_sequence, GoldSpan, LabeledSequence, SpanSource, Tag,
};
pub use lexicon::{match_lexicon, Lexicon, LexiconMatch, MAX_PHRASE_LEN};
pub use record::{
    annotate_tweet, parse_annotated, read_annotated, write_annotated, write_conll, AnnotatedRecord, Annotation,
};

use crate::textnorm::{segment_hashtag, SegmentationDict, Token, TokenKind};

/// Unions matches that share at least one token into maximal spans.
/// Spans of three or more tokens can only come from chaining and are marked
/// [`SpanSource::Chained`].
pub fn chain_matches(tokens: &[Token], matches: &[LexiconMatch]) -> Vec<GoldSpan> {
    let mut ranges: Vec<(usize, usize)> = matches.iter().map(|m| (m.start, m.end)).collect();
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in ranges {
        match merged.last_mut() {
            Some(last) if s < last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    merged
        .into_iter()
        .map(|(s, e)| {
            let source = if e - s >= 3 {
                SpanSource::Chained
            } else {
                SpanSource::Lexicon
            };
            GoldSpan::new(tokens, s, e, source)
        })
        .collect()
}

/// Token ranges of consecutive hashtag-derived tokens that came from the
/// same hashtag.
pub fn hashtag_runs(tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != TokenKind::HashtagDerived {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < tokens.len() && tokens[j].kind == TokenKind::HashtagDerived && tokens[j].span == tokens[i].span {
            j += 1;
        }
        runs.push((i, j));
        i = j;
    }
    runs
}

fn source_rank(s: SpanSource) -> u8 {
    match s {
        SpanSource::UserHashtag => 2,
        SpanSource::Chained => 1,
        SpanSource::Lexicon => 0,
    }
}

/// Unions overlapping spans. The merged span takes the source of its longest
/// member, preferring user hashtags, then chains, on ties.
pub fn union_spans(tokens: &[Token], mut spans: Vec<GoldSpan>) -> Vec<GoldSpan> {
    spans.sort_by_key(GoldSpan::range);
    let mut out: Vec<(usize, usize, usize, SpanSource)> = Vec::new();
    for s in spans {
        let len = s.end - s.start;
        match out.last_mut() {
            Some(last) if s.start < last.1 => {
                last.1 = last.1.max(s.end);
                if (len, source_rank(s.source)) > (last.2, source_rank(last.3)) {
                    last.2 = len;
                    last.3 = s.source;
                }
            }
            _ => out.push((s.start, s.end, len, s.source)),
        }
    }
    out.into_iter()
        .map(|(s, e, _, source)| GoldSpan::new(tokens, s, e, source))
        .collect()
}

/// Adds user hashtags as gold spans over their segmented words.
///
/// `user_hashtags = None` takes every hashtag present in the tokens. Returns
/// the merged spans and one warning per hashtag not found in the tweet.
pub fn merge_user_hashtags(
    tokens: &[Token],
    spans: Vec<GoldSpan>,
    user_hashtags: Option<&[String]>,
    dict: &SegmentationDict,
) -> (Vec<GoldSpan>, Vec<String>) {
    let runs = hashtag_runs(tokens);
    let mut warnings = Vec::new();
    let mut added = Vec::new();
    match user_hashtags {
        None => added.extend(runs.iter().copied()),
        Some(tags) => {
            for tag in tags {
                let words = segment_hashtag(tag, dict);
                let body = words.concat();
                let hits: Vec<_> = runs
                    .iter()
                    .copied()
                    .filter(|&(s, e)| {
                        let run: Vec<&str> = tokens[s..e].iter().map(|t| t.surface.as_str()).collect();
                        run == words || run.concat() == body
                    })
                    .collect();
                if body.is_empty() || hits.is_empty() {
                    warnings.push(format!("user hashtag {tag:?} not found in tweet"));
                }
                added.extend(hits);
            }
        }
    }
    let mut all = spans;
    all.extend(
        added
            .into_iter()
            .map(|(s, e)| GoldSpan::new(tokens, s, e, SpanSource::UserHashtag)),
    );
    (union_spans(tokens, all), warnings)
}
