//! Corpus ingestion: text normalization, paragraph sequencing and the
//! word ↔ index vocabulary.
//!
//! The unit of context is the paragraph; one non-blank input line is one
//! paragraph. Normalization lowercases, strips punctuation, and keeps a
//! dash or apostrophe only when it sits between letters (composed words
//! like `tire-bouchon`, elisions like `l'arbre`).

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{CoreError, Result};

/// One paragraph: its position in the corpus and its normalized tokens.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Paragraph {
    pub id: usize,
    pub tokens: Vec<String>,
}

/// Insertion-ordered bijection between word forms and dense indices.
#[derive(Debug, Default, Clone)]
pub struct Vocabulary {
    forms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Index of `word`, inserting it at the next free index if unseen.
    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = u32::try_from(self.forms.len()).expect("vocabulary exceeds u32 range");
        self.forms.push(word.to_owned());
        self.index.insert(word.to_owned(), i);
        i
    }

    pub fn index_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Like [`index_of`](Self::index_of) but failing with a lookup error.
    pub fn require(&self, word: &str) -> Result<u32> {
        self.index_of(word).ok_or_else(|| CoreError::Lookup {
            word: word.to_owned(),
        })
    }

    pub fn form(&self, index: u32) -> Option<&str> {
        self.forms.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.forms.iter().map(String::as_str)
    }

    /// Rebuild from an index-ordered list of forms (deserialization path).
    pub fn from_forms(forms: Vec<String>) -> Result<Self> {
        let mut v = Vocabulary::new();
        for (pos, f) in forms.iter().enumerate() {
            let i = v.intern(f);
            if i as usize != pos {
                return Err(CoreError::format(
                    None,
                    format!("duplicate word form {f:?} in vocabulary"),
                ));
            }
        }
        Ok(v)
    }
}

/// An ordered, fully indexed paragraph sequence.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub paragraphs: Vec<Paragraph>,
    pub vocabulary: Arc<Vocabulary>,
    fingerprint: [u8; 32],
}

/// Exact corpus counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CorpusStats {
    pub paragraphs: usize,
    pub token_occurrences: usize,
    pub vocabulary_size: usize,
}

const APOSTROPHES: [char; 2] = ['\'', '\u{2019}'];

fn is_combining_mark(c: char) -> bool {
    // Combining Diacritical Marks block; enough to keep NFD-decomposed
    // accents attached to their base letter.
    ('\u{0300}'..='\u{036F}').contains(&c)
}

fn is_letterish(c: char) -> bool {
    (c.is_alphabetic() && !c.is_uppercase()) || is_combining_mark(c)
}

/// Normalize raw text into tokens: lowercase everything, delete
/// punctuation, keep `-` and apostrophes only between letters, then split
/// on whitespace. Digits and diacritics survive. Empty input gives an
/// empty list.
pub fn normalize_text(raw: &str) -> Vec<String> {
    let lower: Vec<char> = raw.to_lowercase().chars().collect();
    let mut cleaned = String::with_capacity(raw.len());
    for (i, &c) in lower.iter().enumerate() {
        // a few exotic capitals (math alphanumerics) have no lowercase
        // mapping; they are dropped rather than kept uppercase
        if (c.is_alphanumeric() && !c.is_uppercase()) || is_combining_mark(c) {
            cleaned.push(c);
        } else if c == '-' || APOSTROPHES.contains(&c) {
            let flanked = i > 0
                && is_letterish(lower[i - 1])
                && lower.get(i + 1).copied().is_some_and(is_letterish);
            if flanked {
                cleaned.push(c);
            }
        } else if c.is_whitespace() {
            cleaned.push(' ');
        }
        // anything else is punctuation or a symbol: dropped
    }
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Load a corpus: one paragraph per non-blank line, UTF-8, LF or CRLF.
///
/// The vocabulary is built in first-occurrence order. Lines that do not
/// decode as UTF-8 fail with their line number; a source with no
/// non-blank line is an empty-corpus error.
pub fn load_corpus<R: BufRead>(mut source: R) -> Result<Corpus> {
    let mut paragraphs = Vec::new();
    let mut vocabulary = Vocabulary::new();
    let mut hasher = Sha256::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;

    loop {
        buf.clear();
        let n = source.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let line = std::str::from_utf8(&buf).map_err(|e| {
            CoreError::format(line_no, format!("invalid UTF-8 in corpus: {e}"))
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens = normalize_text(line);
        for t in &tokens {
            vocabulary.intern(t);
            hasher.update(t.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
        paragraphs.push(Paragraph {
            id: paragraphs.len(),
            tokens,
        });
    }

    if paragraphs.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }

    Ok(Corpus {
        paragraphs,
        vocabulary: Arc::new(vocabulary),
        fingerprint: hasher.finalize().into(),
    })
}

/// Build a corpus from already tokenized paragraphs (tests, generators).
pub fn corpus_from_token_lists<S: AsRef<str>>(paragraphs: &[Vec<S>]) -> Result<Corpus> {
    if paragraphs.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let mut vocabulary = Vocabulary::new();
    let mut hasher = Sha256::new();
    let mut out = Vec::with_capacity(paragraphs.len());
    for (id, toks) in paragraphs.iter().enumerate() {
        let tokens: Vec<String> = toks.iter().map(|t| t.as_ref().to_owned()).collect();
        for t in &tokens {
            vocabulary.intern(t);
            hasher.update(t.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
        out.push(Paragraph { id, tokens });
    }
    Ok(Corpus {
        paragraphs: out,
        vocabulary: Arc::new(vocabulary),
        fingerprint: hasher.finalize().into(),
    })
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.paragraphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paragraphs.is_empty()
    }

    /// SHA-256 over the normalized token stream; identifies the corpus
    /// content independently of line endings or trailing whitespace.
    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    /// Total occurrences of each vocabulary word across all paragraphs.
    pub fn token_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.vocabulary.len()];
        for p in &self.paragraphs {
            for t in &p.tokens {
                if let Some(i) = self.vocabulary.index_of(t) {
                    counts[i as usize] += 1;
                }
            }
        }
        counts
    }
}

/// Exact paragraph / token-occurrence / vocabulary counts.
pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    CorpusStats {
        paragraphs: corpus.paragraphs.len(),
        token_occurrences: corpus.paragraphs.iter().map(|p| p.tokens.len()).sum(),
        vocabulary_size: corpus.vocabulary.len(),
    }
}
