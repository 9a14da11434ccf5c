use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lemma::Lemmatizer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Word,
    Number,
    Punct,
    Hashtag,
    Mention,
    Url,
    /// A word produced by segmenting a hashtag; shares the hashtag's span.
    HashtagDerived,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    /// Byte offsets into the original text.
    pub span: (usize, usize),
    pub kind: TokenKind,
}

static URL_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?i)^(?:https?://\S+|www\.\S+|t\.co/\S+|[a-z0-9][a-z0-9-]*(?:\.[a-z0-9-]+)*\.[a-z]{2,}/\S*)",
    )
    .unwrap()
});

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '’'];

pub fn is_url(s: &str) -> bool {
    URL_RE.find(s).is_some_and(|m| m.end() == s.len())
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '’'
}

/// Splits `text` into tokens. Lemmas are filled in with `lemmatizer`.
///
/// Whitespace separates tokens; inside a whitespace-delimited chunk, URLs,
/// `#hashtags` and `@mentions` stay whole, letter/digit runs form words or
/// numbers, an apostrophe followed by letters right after a word becomes a
/// clitic token (`'s`), and every other character is punctuation (runs of
/// the same character are kept together).
pub fn tokenize(text: &str, lemmatizer: &Lemmatizer) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_end = chars[i..]
            .iter()
            .find(|(_, ch)| ch.is_whitespace())
            .map_or(text.len(), |&(b, _)| b);

        let at_chunk_start = i == 0 || chars[i - 1].1.is_whitespace();
        if at_chunk_start {
            if let Some(m) = URL_RE.find(&text[start..chunk_end]) {
                let url = text[start..start + m.end()].trim_end_matches(URL_TRAILING);
                if !url.is_empty() {
                    let end = start + url.len();
                    tokens.push(make(text, start, end, TokenKind::Url, lemmatizer));
                    while i < chars.len() && chars[i].0 < end {
                        i += 1;
                    }
                    continue;
                }
            }
        }

        let next_is_word = chars.get(i + 1).is_some_and(|&(_, n)| is_word_char(n));
        if (c == '#' || c == '@') && next_is_word {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j].1) {
                j += 1;
            }
            let kind = if c == '#' {
                TokenKind::Hashtag
            } else {
                TokenKind::Mention
            };
            tokens.push(make(text, start, byte_at(j), kind, lemmatizer));
            i = j;
            continue;
        }

        if c.is_alphanumeric() {
            let mut j = i;
            let mut kind = TokenKind::Word;
            if c.is_ascii_digit() {
                kind = TokenKind::Number;
                while j < chars.len() {
                    let ch = chars[j].1;
                    let sep_between_digits = matches!(ch, '.' | ',' | ':')
                        && j > i
                        && chars[j - 1].1.is_ascii_digit()
                        && chars.get(j + 1).is_some_and(|&(_, n)| n.is_ascii_digit());
                    if ch.is_ascii_digit() || sep_between_digits {
                        j += 1;
                    } else {
                        break;
                    }
                }
                if j < chars.len() && chars[j].1.is_alphanumeric() {
                    kind = TokenKind::Word;
                }
            }
            while j < chars.len() && chars[j].1.is_alphanumeric() {
                j += 1;
            }
            tokens.push(make(text, start, byte_at(j), kind, lemmatizer));
            i = j;
            continue;
        }

        let follows_word = tokens
            .last()
            .is_some_and(|t| t.span.1 == start && t.kind == TokenKind::Word);
        let next_is_letter = chars.get(i + 1).is_some_and(|&(_, n)| n.is_alphabetic());
        if is_apostrophe(c) && follows_word && next_is_letter {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1.is_alphabetic() {
                j += 1;
            }
            tokens.push(make(text, start, byte_at(j), TokenKind::Word, lemmatizer));
            i = j;
            continue;
        }

        let mut j = i + 1;
        while j < chars.len() && chars[j].1 == c {
            j += 1;
        }
        tokens.push(make(text, start, byte_at(j), TokenKind::Punct, lemmatizer));
        i = j;
    }
    tokens
}

fn make(text: &str, start: usize, end: usize, kind: TokenKind, lemmatizer: &Lemmatizer) -> Token {
    let surface = text[start..end].to_string();
    let lemma = match kind {
        TokenKind::Word | TokenKind::HashtagDerived => lemmatizer.lemmatize(&surface),
        _ => surface.to_lowercase(),
    };
    Token {
        surface,
        lemma,
        span: (start, end),
        kind,
    }
}

/// Drops URL and `@mention` tokens.
pub fn strip_noise(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| {
            !matches!(t.kind, TokenKind::Url | TokenKind::Mention)
                && !(t.surface.starts_with('@') && t.surface.len() > 1)
                && !is_url(&t.surface)
        })
        .collect()
}
