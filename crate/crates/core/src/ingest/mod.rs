//! Corpus reading, relevance filtering, deduplication and benchmark splits.

mod corpus;
mod naive_bayes;
mod split;

use std::collections::HashSet;

pub use corpus::{
    filter_language, load_corpus, parse_corpus, write_corpus_jsonl, Corpus, CorpusFormat, Relevance,
    TweetRecord,
};
pub use naive_bayes::{bag_of_words, classify_relevance, train_naive_bayes, NaiveBayesModel};
pub use split::{split_benchmark, BenchmarkSplit, DisasterLabeled, SplitSpec, MULTIPLE_DISASTERS};

use crate::textnorm::is_url;

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\''];

/// Dedup key: lowercased text without URLs or mentions, whitespace collapsed.
pub fn dedup_key(text: &str) -> String {
    text.split_whitespace()
        .filter(|chunk| {
            let bare = chunk.trim_end_matches(URL_TRAILING);
            !(bare.starts_with('@') && bare.len() > 1) && !is_url(bare)
        })
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps the first record for each [`dedup_key`], preserving order.
pub fn deduplicate(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    let mut seen = HashSet::new();
    records
        .into_iter()
        .filter(|r| seen.insert(dedup_key(&r.text)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trailing_url_is_a_duplicate() {
        let recs = vec![
            TweetRecord::new("1", "Flood in  Manila"),
            TweetRecord::new("2", "flood in manila https://t.co/abc"),
            TweetRecord::new("3", "@pagasa flood in manila"),
        ];
        let out = deduplicate(recs);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "1");
    }

    #[test]
    fn distinct_input_is_unchanged() {
        let recs = vec![TweetRecord::new("1", "a"), TweetRecord::new("2", "b")];
        assert_eq!(deduplicate(recs.clone()), recs);
    }

    proptest! {
        #[test]
        fn idempotent_and_stable(texts in prop::collection::vec("(flood|help|@x|http://t.co/q|FLOOD| ){1,4}", 0..12)) {
            let recs: Vec<_> = texts.iter().enumerate().map(|(i, t)| TweetRecord::new(i.to_string(), t.clone())).collect();
            let once = deduplicate(recs.clone());
            prop_assert_eq!(deduplicate(once.clone()), once.clone());
            let positions: Vec<usize> = once.iter().map(|r| r.id.parse().unwrap()).collect();
            prop_assert!(positions.windows(2).all(|w| w[0] < w[1]));
            let keys: HashSet<_> = recs.iter().map(|r| dedup_key(&r.text)).collect();
            prop_assert_eq!(keys.len(), once.len());
        }
    }
}
