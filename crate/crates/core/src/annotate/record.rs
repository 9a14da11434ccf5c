use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::labels::{to_labeled_sequence, GoldSpan, LabeledSequence, Tag};
use super::lexicon::{match_lexicon, Lexicon};
use super::{chain_matches, merge_user_hashtags};
use crate::error::{Error, LineError, Result};
use crate::ingest::{DisasterLabeled, TweetRecord};
use crate::textnorm::{TextPipeline, Token, TokenKind};

/// One line of the annotated JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRecord {
    pub id: String,
    #[serde(default)]
    pub disaster: String,
    pub tokens: Vec<String>,
    pub lemmas: Vec<String>,
    pub tags: Vec<Tag>,
    pub aux: Vec<u8>,
    pub spans: Vec<GoldSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Vec<String>>,
}

impl DisasterLabeled for AnnotatedRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn disaster(&self) -> &str {
        &self.disaster
    }
}

impl AnnotatedRecord {
    pub fn from_sequence(id: &str, disaster: &str, seq: &LabeledSequence, pos: Option<Vec<String>>) -> Self {
        AnnotatedRecord {
            id: id.to_string(),
            disaster: disaster.to_string(),
            tokens: seq.tokens.iter().map(|t| t.surface.clone()).collect(),
            lemmas: seq.tokens.iter().map(|t| t.lemma.clone()).collect(),
            tags: seq.main_tags.clone(),
            aux: seq.aux_labels.iter().map(|&k| k as u8).collect(),
            spans: seq.spans.clone(),
            pos,
        }
    }

    /// Rebuilds the labeled sequence. Character offsets are not stored, so
    /// tokens get their index as a placeholder span.
    pub fn to_sequence(&self) -> Result<LabeledSequence> {
        let n = self.tokens.len();
        if self.lemmas.len() != n || self.tags.len() != n || self.aux.len() != n {
            return Err(Error::Data(format!("record {}: field lengths differ", self.id)));
        }
        if self.pos.as_ref().is_some_and(|p| p.len() != n) {
            return Err(Error::Data(format!("record {}: pos length differs", self.id)));
        }
        let tokens = self
            .tokens
            .iter()
            .zip(&self.lemmas)
            .enumerate()
            .map(|(i, (s, l))| Token {
                surface: s.clone(),
                lemma: l.clone(),
                span: (i, i + 1),
                kind: TokenKind::Word,
            })
            .collect();
        let seq = LabeledSequence {
            tokens,
            main_tags: self.tags.clone(),
            aux_labels: self.aux.iter().map(|&a| a != 0).collect(),
            spans: self.spans.clone(),
        };
        seq.check()
            .map_err(|e| Error::Data(format!("record {}: {e}", self.id)))?;
        Ok(seq)
    }
}

#[derive(Debug, Clone)]
pub struct Annotation {
    pub record: AnnotatedRecord,
    pub sequence: LabeledSequence,
    pub warnings: Vec<String>,
}

/// Gold annotation for one tweet: lexicon matches chained into spans,
/// merged with the tweet's hashtags, encoded as tags.
pub fn annotate_tweet(tweet: &TweetRecord, lexicon: &Lexicon, pipeline: &TextPipeline) -> Result<Annotation> {
    let (tokens, pos) = pipeline
        .prepare_with_pos(&tweet.text, tweet.pos_tags.as_deref())
        .map_err(|e| Error::Data(format!("tweet {}: {e}", tweet.id)))?;
    let matches = match_lexicon(&tokens, lexicon);
    let spans = chain_matches(&tokens, &matches);
    let (spans, warnings) =
        merge_user_hashtags(&tokens, spans, tweet.user_hashtags.as_deref(), &pipeline.segmentation);
    let sequence = to_labeled_sequence(tokens, spans)?;
    let record = AnnotatedRecord::from_sequence(&tweet.id, &tweet.disaster, &sequence, pos);
    let warnings = warnings
        .into_iter()
        .map(|w| format!("tweet {}: {w}", tweet.id))
        .collect();
    Ok(Annotation {
        record,
        sequence,
        warnings,
    })
}

pub fn write_annotated(path: &Path, records: &[AnnotatedRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Two-column `token<TAB>tag` export, one blank line between tweets.
pub fn write_conll(path: &Path, records: &[AnnotatedRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "# id = {}", r.id);
        for (tok, tag) in r.tokens.iter().zip(&r.tags) {
            let _ = writeln!(out, "{tok}\t{tag}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn parse_annotated(text: &str) -> std::result::Result<Vec<AnnotatedRecord>, LineError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| LineError { line: n + 1, message };
        let rec: AnnotatedRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        rec.to_sequence().map_err(|e| err(e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_annotated(path: &Path) -> Result<Vec<AnnotatedRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_annotated(&text).map_err(|first| Error::Malformed {
        path: path.to_path_buf(),
        count: 1,
        first,
    })
}
