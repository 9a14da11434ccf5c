use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::corpus::{Relevance, TweetRecord};
use crate::error::{Error, Result};
use crate::textnorm::{strip_noise, tokenize, Lemmatizer, TokenKind};

const CLASSES: [Relevance; 2] = [Relevance::OnTopic, Relevance::OffTopic];

/// Multinomial Naive Bayes over lowercased bag-of-words, Laplace smoothed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub vocabulary: BTreeMap<String, usize>,
    /// Indexed on_topic, off_topic.
    pub class_log_priors: [f64; 2],
    pub word_log_likelihoods: BTreeMap<Relevance, BTreeMap<String, f64>>,
    /// Log-likelihood assigned to a word never seen in training.
    pub unseen_log_likelihoods: [f64; 2],
    pub smoothing_alpha: f64,
}

/// Lowercased word, number and hashtag tokens; mentions, URLs and
/// punctuation are dropped.
pub fn bag_of_words(text: &str) -> Vec<String> {
    strip_noise(tokenize(text, &Lemmatizer::empty()))
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct)
        .map(|t| t.surface.to_lowercase())
        .collect()
}

pub fn train_naive_bayes(labeled: &[TweetRecord], alpha: f64) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("smoothing alpha must be > 0, got {alpha}")));
    }
    if labeled.is_empty() {
        return Err(Error::Data("no labeled tweets to train on".into()));
    }
    let mut doc_counts = [0usize; 2];
    let mut word_counts: [BTreeMap<String, u64>; 2] = Default::default();
    for rec in labeled {
        let class = rec
            .relevance_label
            .ok_or_else(|| Error::Data(format!("tweet {} has no relevance_label", rec.id)))?;
        doc_counts[class.index()] += 1;
        for w in bag_of_words(&rec.text) {
            *word_counts[class.index()].entry(w).or_default() += 1;
        }
    }
    if doc_counts.contains(&0) {
        return Err(Error::Data("both on_topic and off_topic examples are required".into()));
    }

    let mut vocab: Vec<&String> = word_counts[0].keys().chain(word_counts[1].keys()).collect();
    vocab.sort();
    vocab.dedup();
    if vocab.is_empty() {
        return Err(Error::Data("labeled tweets contain no words".into()));
    }
    let v = vocab.len() as f64;
    let total_docs = labeled.len() as f64;

    let mut word_log_likelihoods = BTreeMap::new();
    let mut class_log_priors = [0.0; 2];
    let mut unseen_log_likelihoods = [0.0; 2];
    for class in CLASSES {
        let c = class.index();
        let n_words: u64 = word_counts[c].values().sum();
        let denom = n_words as f64 + alpha * v;
        class_log_priors[c] = (doc_counts[c] as f64 / total_docs).ln();
        unseen_log_likelihoods[c] = (alpha / denom).ln();
        let table = vocab
            .iter()
            .map(|w| {
                let n = word_counts[c].get(*w).copied().unwrap_or(0) as f64;
                ((*w).clone(), ((n + alpha) / denom).ln())
            })
            .collect();
        word_log_likelihoods.insert(class, table);
    }
    Ok(NaiveBayesModel {
        vocabulary: vocab.into_iter().enumerate().map(|(i, w)| (w.clone(), i)).collect(),
        class_log_priors,
        word_log_likelihoods,
        unseen_log_likelihoods,
        smoothing_alpha: alpha,
    })
}

impl NaiveBayesModel {
    /// Class log-prior plus summed word log-likelihoods, per class.
    pub fn joint_log_probs(&self, text: &str) -> [f64; 2] {
        // Summing over sorted word counts keeps the result independent of word order.
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        for w in bag_of_words(text) {
            *counts.entry(w).or_default() += 1.0;
        }
        let mut joint = self.class_log_priors;
        for (w, n) in &counts {
            for class in CLASSES {
                let c = class.index();
                joint[c] += n * self.word_log_likelihoods[&class]
                    .get(w)
                    .copied()
                    .unwrap_or(self.unseen_log_likelihoods[c]);
            }
        }
        joint
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("model serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// Returns the arg-max class and its posterior probability. Ties go to on_topic.
pub fn classify_relevance(model: &NaiveBayesModel, tweet: &TweetRecord) -> (Relevance, f64) {
    let [on, off] = model.joint_log_probs(&tweet.text);
    let (class, mine, other) = if on >= off {
        (Relevance::OnTopic, on, off)
    } else {
        (Relevance::OffTopic, off, on)
    };
    (class, 1.0 / (1.0 + (other - mine).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(id: &str, text: &str, label: Relevance) -> TweetRecord {
        let mut r = TweetRecord::new(id, text);
        r.relevance_label = Some(label);
        r
    }

    /// Joint probability computed from raw counts, without logs.
    fn oracle_joint(docs: &[TweetRecord], alpha: f64, text: &str) -> [f64; 2] {
        let mut vocab: Vec<String> = docs.iter().flat_map(|d| bag_of_words(&d.text)).collect();
        vocab.sort();
        vocab.dedup();
        let mut out = [0.0; 2];
        for class in CLASSES {
            let in_class: Vec<_> = docs.iter().filter(|d| d.relevance_label == Some(class)).collect();
            let words: Vec<String> = in_class.iter().flat_map(|d| bag_of_words(&d.text)).collect();
            let mut p = in_class.len() as f64 / docs.len() as f64;
            for w in bag_of_words(text) {
                let n = words.iter().filter(|x| **x == w).count() as f64;
                p *= (n + alpha) / (words.len() as f64 + alpha * vocab.len() as f64);
            }
            out[class.index()] = p;
        }
        out
    }

    #[test]
    fn words_prefer_their_own_class() {
        let docs = [
            rec("1", "flood", Relevance::OnTopic),
            rec("2", "rescue", Relevance::OnTopic),
            rec("3", "pizza", Relevance::OffTopic),
            rec("4", "movie", Relevance::OffTopic),
        ];
        let m = train_naive_bayes(&docs, 1.0).unwrap();
        let on = &m.word_log_likelihoods[&Relevance::OnTopic];
        let off = &m.word_log_likelihoods[&Relevance::OffTopic];
        // on_topic: 2 words, vocab 4 -> (1+1)/(2+4) = 1/3 seen, 1/6 unseen
        assert!((on["flood"] - (1.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((on["pizza"] - (1.0f64 / 6.0).ln()).abs() < 1e-12);
        for w in ["flood", "rescue"] {
            assert!(on[w] > off[w]);
        }
        for w in ["pizza", "movie"] {
            assert!(off[w] > on[w]);
        }
    }

    #[test]
    fn symmetric_classes_have_equal_likelihoods() {
        let docs = [
            rec("1", "storm rain", Relevance::OnTopic),
            rec("2", "storm rain", Relevance::OffTopic),
        ];
        let m = train_naive_bayes(&docs, 1.0).unwrap();
        for w in ["storm", "rain"] {
            assert_eq!(
                m.word_log_likelihoods[&Relevance::OnTopic][w],
                m.word_log_likelihoods[&Relevance::OffTopic][w]
            );
        }
    }

    #[test]
    fn classify_small_corpus() {
        let docs = [rec("1", "flood flood", Relevance::OnTopic), rec("2", "cat", Relevance::OffTopic)];
        let m = train_naive_bayes(&docs, 1.0).unwrap();
        let (class, posterior) = classify_relevance(&m, &TweetRecord::new("q", "flood"));
        assert_eq!(class, Relevance::OnTopic);
        // on: 0.5 * 3/4, off: 0.5 * 1/3
        let expected = 0.375 / (0.375 + 1.0 / 6.0);
        assert!((posterior - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_text_uses_prior_and_ties_go_on_topic() {
        let docs = [
            rec("1", "a", Relevance::OffTopic),
            rec("2", "b", Relevance::OffTopic),
            rec("3", "c", Relevance::OnTopic),
        ];
        let m = train_naive_bayes(&docs, 1.0).unwrap();
        assert_eq!(classify_relevance(&m, &TweetRecord::new("q", "")).0, Relevance::OffTopic);

        let docs = [rec("1", "a", Relevance::OffTopic), rec("2", "b", Relevance::OnTopic)];
        let m = train_naive_bayes(&docs, 1.0).unwrap();
        let (class, p) = classify_relevance(&m, &TweetRecord::new("q", ""));
        assert_eq!(class, Relevance::OnTopic);
        assert_eq!(p, 0.5);
    }

    #[test]
    fn training_errors() {
        assert!(train_naive_bayes(&[], 1.0).is_err());
        assert!(train_naive_bayes(&[rec("1", "a", Relevance::OnTopic)], 1.0).is_err());
        let both = [rec("1", "a", Relevance::OnTopic), rec("2", "b", Relevance::OffTopic)];
        assert!(train_naive_bayes(&both, 0.0).is_err());
        assert!(train_naive_bayes(&[TweetRecord::new("1", "a")], 1.0).is_err());
        let wordless = [rec("1", "", Relevance::OnTopic), rec("2", "!!", Relevance::OffTopic)];
        assert!(train_naive_bayes(&wordless, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let docs = [rec("1", "flood", Relevance::OnTopic), rec("2", "cat", Relevance::OffTopic)];
        let m = train_naive_bayes(&docs, 0.5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nb.json");
        m.save(&path).unwrap();
        assert_eq!(NaiveBayesModel::load(&path).unwrap(), m);
    }

    fn corpus_strategy() -> impl Strategy<Value = (Vec<(String, bool)>, String, f64)> {
        let word = prop::sample::select(vec!["flood", "help", "cat", "rain", "fire", "movie", "#sos"]);
        let doc = (prop::collection::vec(word.clone(), 0..6), any::<bool>())
            .prop_map(|(ws, on)| (ws.join(" "), on));
        (
            prop::collection::vec(doc, 2..20),
            prop::collection::vec(word, 0..5).prop_map(|ws| ws.join(" ")),
            prop::sample::select(vec![0.5, 1.0, 2.0]),
        )
    }

    proptest! {
        #[test]
        fn matches_brute_force_joint((docs, query, alpha) in corpus_strategy()) {
            let mut docs: Vec<TweetRecord> = docs
                .into_iter()
                .enumerate()
                .map(|(i, (t, on))| rec(&i.to_string(), &t, if on { Relevance::OnTopic } else { Relevance::OffTopic }))
                .collect();
            docs[0].relevance_label = Some(Relevance::OnTopic);
            docs[1].relevance_label = Some(Relevance::OffTopic);
            prop_assume!(docs.iter().any(|d| !bag_of_words(&d.text).is_empty()));
            let m = train_naive_bayes(&docs, alpha).unwrap();
            let joint = m.joint_log_probs(&query);
            let oracle = oracle_joint(&docs, alpha, &query);
            for c in 0..2 {
                prop_assert!((joint[c] - oracle[c].ln()).abs() < 1e-9);
            }
            // likelihoods are normalised over the vocabulary
            for class in CLASSES {
                let total: f64 = m.word_log_likelihoods[&class].values().map(|l| l.exp()).sum();
                prop_assert!((total - 1.0).abs() < 1e-6);
            }
            // bag-of-words: order does not matter
            let mut rev: Vec<&str> = query.split(' ').collect();
            rev.reverse();
            let (a, pa) = classify_relevance(&m, &TweetRecord::new("x", query.clone()));
            let (b, pb) = classify_relevance(&m, &TweetRecord::new("x", rev.join(" ")));
            prop_assert_eq!(a, b);
            prop_assert!((pa - pb).abs() < 1e-12);
        }
    }
}
