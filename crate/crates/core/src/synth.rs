//! Template tweets with planted lexicon phrases, for end-to-end runs
//! without a real corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::TweetRecord;

pub const UNIGRAMS: [&str; 25] = [
    "flooding", "stranded", "rescue", "shelter", "evacuation", "injured", "trapped", "collapsed", "outage",
    "debris", "landslide", "wildfire", "tornado", "earthquake", "aftershock", "looting", "casualties",
    "missing", "donations", "volunteers", "ambulance", "generator", "sandbags", "curfew", "hospital",
];

pub const BIGRAMS: [&str; 25] = [
    "power lines", "need help", "roof damage", "water rising", "road closed", "gas leak", "boil notice",
    "fallen trees", "bridge down", "storm surge", "food shortage", "medical aid", "safe zone", "relief camp",
    "fire spreading", "downed wires", "flash warning", "emergency crews", "high winds", "mud slide",
    "heavy rain", "search teams", "blood drive", "cell towers", "dam breach",
];

const FILLER: [&str; 60] = [
    "we", "are", "the", "in", "on", "at", "near", "please", "now", "today", "still", "after", "our", "my", "is",
    "was", "there", "so", "very", "everyone", "street", "avenue", "downtown", "north", "south", "city",
    "county", "people", "family", "house", "car", "stay", "send", "see", "reported", "update", "just", "many",
    "some", "this", "that", "morning", "night", "here", "area", "no", "with", "from", "and", "for", "a",
    "photo", "video", "live", "more", "all", "local", "news", "around", "across",
];

const DISASTERS: [&str; 4] = ["harvey", "irma", "maria", "florence"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub tweets: usize,
    pub distractor_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            tweets: 2000,
            distractor_fraction: 0.2,
            seed: 7,
        }
    }
}

/// The 50 planted phrases, one per line.
pub fn lexicon_text() -> String {
    let mut s = String::new();
    for p in UNIGRAMS.iter().chain(BIGRAMS.iter()) {
        s.push_str(p);
        s.push('\n');
    }
    s
}

fn filler(rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<String>) {
    for _ in 0..n {
        out.push(FILLER.choose(rng).expect("nonempty").to_string());
    }
}

/// Tweets in id order `s0000`, `s0001`, ... A `distractor_fraction` share
/// holds no phrase, only filler and lone halves of bigram phrases; the rest
/// plant one to three phrases between filler runs.
pub fn generate(spec: &SynthSpec) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_distract = (spec.tweets as f64 * spec.distractor_fraction).round() as usize;
    let mut kinds: Vec<bool> = (0..spec.tweets).map(|i| i < n_distract).collect();
    kinds.shuffle(&mut rng);
    let width = spec.tweets.saturating_sub(1).to_string().len().max(4);
    kinds
        .into_iter()
        .enumerate()
        .map(|(i, distractor)| {
            let mut words = Vec::new();
            if distractor {
                let n = rng.gen_range(6..=14);
                filler(&mut rng, n, &mut words);
                // one side only, so two halves never form a phrase
                let side = rng.gen_range(0..2);
                for _ in 0..rng.gen_range(1..=2) {
                    let half = BIGRAMS.choose(&mut rng).expect("nonempty").split(' ').nth(side);
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, half.expect("two words").to_string());
                }
            } else {
                let k = rng.gen_range(1..=3);
                let lead = rng.gen_range(0..=3);
                filler(&mut rng, lead, &mut words);
                for _ in 0..k {
                    let p = if rng.gen_bool(0.5) {
                        UNIGRAMS.choose(&mut rng)
                    } else {
                        BIGRAMS.choose(&mut rng)
                    };
                    words.extend(p.expect("nonempty").split(' ').map(String::from));
                    let gap = rng.gen_range(1..=4);
                    filler(&mut rng, gap, &mut words);
                }
            }
            let disaster = DISASTERS.choose(&mut rng).expect("nonempty");
            let mut r = TweetRecord::new(format!("s{i:0width$}"), words.join(" ")).with_disaster(*disaster);
            r.user_hashtags = Some(Vec::new());
            r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate_tweet, Lexicon};
    use crate::textnorm::TextPipeline;

    #[test]
    fn fifty_distinct_phrases_without_shared_words() {
        let mut words: Vec<&str> = UNIGRAMS.iter().chain(BIGRAMS.iter()).flat_map(|p| p.split(' ')).collect();
        assert_eq!(words.len(), 75);
        words.sort_unstable();
        words.dedup();
        assert_eq!(words.len(), 75);
        assert!(FILLER.iter().all(|f| !words.contains(f)));
    }

    #[test]
    fn planted_tweets_have_spans_and_distractors_do_not() {
        let spec = SynthSpec {
            tweets: 200,
            ..Default::default()
        };
        let tweets = generate(&spec);
        assert_eq!(tweets, generate(&spec));
        let p = TextPipeline::default();
        let lex = Lexicon::parse(&lexicon_text(), &p).unwrap();
        assert_eq!(lex.len(), 50);
        let empty = tweets
            .iter()
            .filter(|t| annotate_tweet(t, &lex, &p).unwrap().record.spans.is_empty())
            .count();
        assert_eq!(empty, 40);
    }
}
