//! Span-level precision, recall and F1, plus agreement rendering.

mod render;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use render::{render_agreement, Rendered};

pub type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    ExactSpan,
    TokenLevel,
}

/// Micro-averaged counts and scores for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub n_gold: usize,
    pub n_pred: usize,
    pub n_correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    pub fn from_counts(n_gold: usize, n_pred: usize, n_correct: usize) -> Self {
        assert!(n_correct <= n_gold.min(n_pred), "more correct than gold or predicted");
        let precision = if n_pred == 0 { 0.0 } else { n_correct as f64 / n_pred as f64 };
        let recall = if n_gold == 0 { 0.0 } else { n_correct as f64 / n_gold as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            n_gold,
            n_pred,
            n_correct,
            precision,
            recall,
            f1,
        }
    }
}

/// Spans of one tweet split into exact matches, missed gold and spurious predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub id: String,
    pub matched: Vec<Span>,
    pub missed: Vec<Span>,
    pub spurious: Vec<Span>,
}

pub fn agreement(id: &str, pred: &[Span], gold: &[Span]) -> Agreement {
    let p: BTreeSet<Span> = pred.iter().copied().collect();
    let g: BTreeSet<Span> = gold.iter().copied().collect();
    Agreement {
        id: id.to_string(),
        matched: p.intersection(&g).copied().collect(),
        missed: g.difference(&p).copied().collect(),
        spurious: p.difference(&g).copied().collect(),
    }
}

fn token_set(spans: &[Span]) -> BTreeSet<usize> {
    spans.iter().flat_map(|&(s, e)| s..e).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub name: String,
    pub mode: MatchMode,
    #[serde(flatten)]
    pub score: Score,
    pub tweets: Vec<Agreement>,
}

/// Scores predictions against gold for one subset. Both maps must cover the
/// same tweet ids.
pub fn score_spans(
    name: &str,
    pred: &BTreeMap<String, Vec<Span>>,
    gold: &BTreeMap<String, Vec<Span>>,
    mode: MatchMode,
) -> Result<SubsetReport> {
    if pred.len() != gold.len() || pred.keys().zip(gold.keys()).any(|(a, b)| a != b) {
        let only_pred: Vec<&String> = pred.keys().filter(|k| !gold.contains_key(*k)).collect();
        let only_gold: Vec<&String> = gold.keys().filter(|k| !pred.contains_key(*k)).collect();
        return Err(Error::Data(format!(
            "prediction and gold ids differ: {} only predicted (first {:?}), {} only gold (first {:?})",
            only_pred.len(),
            only_pred.first(),
            only_gold.len(),
            only_gold.first()
        )));
    }
    let (mut n_gold, mut n_pred, mut n_correct) = (0, 0, 0);
    let mut tweets = Vec::with_capacity(gold.len());
    for (id, g) in gold {
        let p = &pred[id];
        let a = agreement(id, p, g);
        match mode {
            MatchMode::ExactSpan => {
                n_correct += a.matched.len();
                n_gold += a.matched.len() + a.missed.len();
                n_pred += a.matched.len() + a.spurious.len();
            }
            MatchMode::TokenLevel => {
                let (gt, pt) = (token_set(g), token_set(p));
                n_correct += gt.intersection(&pt).count();
                n_gold += gt.len();
                n_pred += pt.len();
            }
        }
        tweets.push(a);
    }
    Ok(SubsetReport {
        name: name.to_string(),
        mode,
        score: Score::from_counts(n_gold, n_pred, n_correct),
        tweets,
    })
}

/// Reports for several subsets plus their pooled score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub subsets: Vec<SubsetReport>,
    pub combined: Score,
}

impl EvalReport {
    pub fn new(subsets: Vec<SubsetReport>) -> Self {
        let sum = |f: fn(&Score) -> usize| subsets.iter().map(|s| f(&s.score)).sum::<usize>();
        let combined = Score::from_counts(sum(|s| s.n_gold), sum(|s| s.n_pred), sum(|s| s.n_correct));
        EvalReport { subsets, combined }
    }

    /// Aligned plain-text table, one row per subset.
    pub fn table(&self) -> String {
        let width = self.subsets.iter().map(|s| s.name.len()).max().unwrap_or(0).max(8);
        let mut out = format!(
            "{:<width$}  {:>7} {:>7} {:>7}  {:>9} {:>9} {:>9}\n",
            "subset", "gold", "pred", "correct", "precision", "recall", "f1"
        );
        let row = |name: &str, s: &Score| {
            format!(
                "{:<width$}  {:>7} {:>7} {:>7}  {:>8.2}% {:>8.2}% {:>8.2}%\n",
                name,
                s.n_gold,
                s.n_pred,
                s.n_correct,
                100.0 * s.precision,
                100.0 * s.recall,
                100.0 * s.f1
            )
        };
        for s in &self.subsets {
            out.push_str(&row(&s.name, &s.score));
        }
        out.push_str(&row("combined", &self.combined));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one(id: &str, spans: &[Span]) -> BTreeMap<String, Vec<Span>> {
        BTreeMap::from([(id.to_string(), spans.to_vec())])
    }

    #[test]
    fn perfect_and_empty() {
        let g = one("t", &[(0, 2), (3, 4)]);
        let r = score_spans("a", &g, &g, MatchMode::ExactSpan).unwrap();
        assert_eq!((r.score.precision, r.score.recall, r.score.f1), (1.0, 1.0, 1.0));
        let r = score_spans("a", &one("t", &[]), &g, MatchMode::ExactSpan).unwrap();
        assert_eq!((r.score.precision, r.score.recall, r.score.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn two_gold_one_correct() {
        let r = score_spans("a", &one("t", &[(0, 2)]), &one("t", &[(0, 2), (3, 4)]), MatchMode::ExactSpan).unwrap();
        assert_eq!(r.score.precision, 1.0);
        assert_eq!(r.score.recall, 0.5);
        assert!((r.score.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_error_counts_as_miss_in_exact_mode_only() {
        let pred = one("t", &[(0, 3)]);
        let gold = one("t", &[(0, 2)]);
        let e = score_spans("a", &pred, &gold, MatchMode::ExactSpan).unwrap();
        assert_eq!(e.score.n_correct, 0);
        let t = score_spans("a", &pred, &gold, MatchMode::TokenLevel).unwrap();
        assert_eq!((t.score.n_gold, t.score.n_pred, t.score.n_correct), (2, 3, 2));
    }

    #[test]
    fn id_mismatch_is_an_error() {
        assert!(score_spans("a", &one("x", &[]), &one("y", &[]), MatchMode::ExactSpan).is_err());
    }

    #[test]
    fn combined_pools_counts() {
        let a = score_spans("a", &one("t", &[(0, 1)]), &one("t", &[(0, 1)]), MatchMode::ExactSpan).unwrap();
        let b = score_spans("b", &one("u", &[]), &one("u", &[(2, 3)]), MatchMode::ExactSpan).unwrap();
        let r = EvalReport::new(vec![a, b]);
        assert_eq!((r.combined.n_gold, r.combined.n_pred, r.combined.n_correct), (2, 1, 1));
        let table = r.table();
        assert_eq!(table.lines().count(), 4);
        assert!(table.contains("combined"));
    }

    fn spans_strategy() -> impl Strategy<Value = Vec<Span>> {
        prop::collection::vec((0usize..12, 1usize..4), 0..5).prop_map(|v| v.into_iter().map(|(s, l)| (s, s + l)).collect())
    }

    proptest! {
        #[test]
        fn swap_and_additivity(
            tweets in prop::collection::vec((spans_strategy(), spans_strategy()), 1..6),
            token_mode in any::<bool>(),
        ) {
            let mode = if token_mode { MatchMode::TokenLevel } else { MatchMode::ExactSpan };
            let mut pred = BTreeMap::new();
            let mut gold = BTreeMap::new();
            let mut sum = (0, 0, 0);
            for (i, (p, g)) in tweets.iter().enumerate() {
                let id = format!("t{i}");
                let single = score_spans("x", &one(&id, p), &one(&id, g), mode).unwrap().score;
                sum = (sum.0 + single.n_gold, sum.1 + single.n_pred, sum.2 + single.n_correct);
                pred.insert(id.clone(), p.clone());
                gold.insert(id, g.clone());
            }
            let fwd = score_spans("x", &pred, &gold, mode).unwrap().score;
            let rev = score_spans("x", &gold, &pred, mode).unwrap().score;
            prop_assert_eq!(fwd.precision, rev.recall);
            prop_assert_eq!(fwd.recall, rev.precision);
            prop_assert_eq!((fwd.n_gold, fwd.n_pred, fwd.n_correct), sum);
            prop_assert!((0.0..=1.0).contains(&fwd.f1));
            if mode == MatchMode::ExactSpan {
                let sets_equal = tweets.iter().all(|(p, g)| {
                    p.iter().collect::<BTreeSet<_>>() == g.iter().collect::<BTreeSet<_>>()
                });
                prop_assert_eq!(fwd.f1 == 1.0, sets_equal && fwd.n_gold > 0);
            }
        }
    }
}
