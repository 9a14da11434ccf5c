use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    OnTopic,
    OffTopic,
}

impl Relevance {
    pub fn index(self) -> usize {
        match self {
            Relevance::OnTopic => 0,
            Relevance::OffTopic => 1,
        }
    }
}

/// One tweet as read from a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub disaster: String,
    /// Hashtags as typed, with `#`. `None` means "take them from the text".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_hashtags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_label: Option<Relevance>,
    /// User-supplied language tag; only consulted by [`filter_language`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        TweetRecord {
            id: id.into(),
            text: text.into(),
            disaster: String::new(),
            user_hashtags: None,
            pos_tags: None,
            relevance_label: None,
            lang: None,
        }
    }

    pub fn with_disaster(mut self, disaster: impl Into<String>) -> Self {
        self.disaster = disaster.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    /// `id<TAB>disaster<TAB>text`, no header.
    Tsv,
}

impl CorpusFormat {
    /// Guesses from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            _ => Err(Error::Config(format!("unknown corpus format {s:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

/// Records that parsed, plus the lines that did not.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub records: Vec<TweetRecord>,
    pub errors: Vec<LineError>,
}

/// Reads a corpus file. Bad lines (including repeated ids) are skipped and
/// collected; loading fails once more than `max_errors` lines are bad.
pub fn load_corpus(path: &Path, format: CorpusFormat, max_errors: usize) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let corpus = parse_corpus(&text, format);
    if corpus.errors.len() > max_errors {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            count: corpus.errors.len(),
            first: corpus.errors[0].clone(),
        });
    }
    for e in &corpus.errors {
        log::warn!("{}: {e}", path.display());
    }
    Ok(corpus)
}

pub fn parse_corpus(text: &str, format: CorpusFormat) -> Corpus {
    let mut corpus = Corpus::default();
    let mut seen = HashSet::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            CorpusFormat::Jsonl => parse_json_line(line),
            CorpusFormat::Tsv => parse_tsv_line(line),
        };
        let err = |message: String| LineError {
            line: n + 1,
            message,
        };
        match parsed {
            Ok(rec) if !seen.insert(rec.id.clone()) => {
                corpus.errors.push(err(format!("duplicate id {:?}", rec.id)))
            }
            Ok(rec) => corpus.records.push(rec),
            Err(msg) => corpus.errors.push(err(msg)),
        }
    }
    corpus
}

fn parse_json_line(line: &str) -> std::result::Result<TweetRecord, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    // Numeric ids are common in tweet dumps.
    let mut value = value;
    if let Some(id) = value.get("id").filter(|v| v.is_number()).map(|v| v.to_string()) {
        value["id"] = serde_json::Value::String(id);
    }
    let rec: TweetRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
    if rec.id.is_empty() {
        return Err("empty id".into());
    }
    Ok(rec)
}

fn parse_tsv_line(line: &str) -> std::result::Result<TweetRecord, String> {
    let mut cols = line.splitn(3, '\t');
    match (cols.next(), cols.next(), cols.next()) {
        (Some(id), Some(disaster), Some(text)) if !id.is_empty() => {
            Ok(TweetRecord::new(id, text).with_disaster(disaster))
        }
        _ => Err("expected id<TAB>disaster<TAB>text".into()),
    }
}

pub fn write_corpus_jsonl(path: &Path, records: &[TweetRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Keeps records whose language tag is absent or equal to `lang`.
pub fn filter_language(records: Vec<TweetRecord>, lang: &str) -> Vec<TweetRecord> {
    records
        .into_iter()
        .filter(|r| r.lang.as_deref().is_none_or(|l| l.eq_ignore_ascii_case(lang)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_jsonl() {
        let c = parse_corpus(r#"{"id": "1", "text": "flood in manila"}"#, CorpusFormat::Jsonl);
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.records[0].id, "1");
        assert_eq!(c.records[0].text, "flood in manila");
        assert!(c.errors.is_empty());
    }

    #[test]
    fn empty_input() {
        let c = parse_corpus("", CorpusFormat::Jsonl);
        assert!(c.records.is_empty() && c.errors.is_empty());
    }

    #[test]
    fn missing_text_is_a_line_error() {
        let text = "{\"id\": \"1\", \"text\": \"a\"}\n{\"id\": \"2\"}\n{\"id\": 3, \"text\": \"c\"}\n";
        let c = parse_corpus(text, CorpusFormat::Jsonl);
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.records[1].id, "3");
        assert_eq!(c.errors.len(), 1);
        assert_eq!(c.errors[0].line, 2);
        assert!(c.errors[0].message.contains("text"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "{\"id\": \"1\", \"text\": \"a\"}\n{\"id\": \"1\", \"text\": \"b\"}\n";
        let c = parse_corpus(text, CorpusFormat::Jsonl);
        assert_eq!(c.records.len(), 1);
        assert_eq!(c.errors[0].line, 2);
    }

    #[test]
    fn tsv_rows() {
        let c = parse_corpus("7\tharvey\tneed help\tnow\nbad line\n", CorpusFormat::Tsv);
        assert_eq!(c.records[0].text, "need help\tnow");
        assert_eq!(c.records[0].disaster, "harvey");
        assert_eq!(c.errors.len(), 1);
    }

    #[test]
    fn error_threshold_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, "{}\n{}\n{\"id\":\"1\",\"text\":\"x\"}\n").unwrap();
        assert!(load_corpus(&path, CorpusFormat::Jsonl, 1).is_err());
        let c = load_corpus(&path, CorpusFormat::Jsonl, 2).unwrap();
        assert_eq!(c.records.len(), 1);
        assert!(load_corpus(&dir.path().join("missing"), CorpusFormat::Jsonl, 0).is_err());
    }

    #[test]
    fn language_hook() {
        let mut a = TweetRecord::new("a", "x");
        a.lang = Some("es".into());
        let b = TweetRecord::new("b", "y");
        let mut c = TweetRecord::new("c", "z");
        c.lang = Some("EN".into());
        let kept: Vec<_> = filter_language(vec![a, b, c], "en").into_iter().map(|r| r.id).collect();
        assert_eq!(kept, ["b", "c"]);
    }
}
