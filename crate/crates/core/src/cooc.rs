//! Direct co-occurrence knowledge over a growing paragraph prefix:
//! which words have shared a paragraph, how a new paragraph relates to a
//! traced word pair, and paragraph-level pointwise mutual information.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Paragraph, Vocabulary};
use crate::error::{CoreError, Result};

/// Relation of one paragraph to a word pair (X, Y). Exactly one holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    XOnly,
    YOnly,
    DirectCooc,
    SecondOrder,
    ThirdOrMore,
}

pub const CATEGORY_COUNT: usize = 5;

impl Category {
    pub const ALL: [Category; CATEGORY_COUNT] = [
        Category::XOnly,
        Category::YOnly,
        Category::DirectCooc,
        Category::SecondOrder,
        Category::ThirdOrMore,
    ];

    pub fn index(self) -> usize {
        match self {
            Category::XOnly => 0,
            Category::YOnly => 1,
            Category::DirectCooc => 2,
            Category::SecondOrder => 3,
            Category::ThirdOrMore => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::XOnly => "X_ONLY",
            Category::YOnly => "Y_ONLY",
            Category::DirectCooc => "DIRECT_COOC",
            Category::SecondOrder => "SECOND_ORDER",
            Category::ThirdOrMore => "THIRD_OR_MORE",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CoreError::Parameter(format!("unknown category {s:?}")))
    }
}

/// How many distinct prior co-occurrents of both pair members a paragraph
/// must contain to count as a second-order co-occurrence.
pub const SECOND_ORDER_WITNESS_THRESHOLD: usize = 3;

/// Classification result, carrying the witness words when the paragraph
/// is a second-order co-occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub category: Category,
    pub witnesses: Option<Vec<String>>,
}

/// Per-word direct co-occurrent sets and paragraph postings over the
/// prefix `[0, n)` of a corpus, extendable one paragraph at a time.
#[derive(Debug, Clone)]
pub struct CoocIndex {
    vocabulary: Arc<Vocabulary>,
    prefix_len: usize,
    /// for each word, the words seen in at least one common paragraph
    /// (a word co-occurs with itself once it has occurred)
    cooccurrents: Vec<BTreeSet<u32>>,
    /// for each word, the ascending ids of paragraphs containing it
    postings: Vec<Vec<u32>>,
}

/// Serializable snapshot of a [`CoocIndex`] (checkpointing).
#[derive(Debug, Serialize, Deserialize)]
pub struct CoocIndexSnapshot {
    pub prefix_len: usize,
    pub cooccurrents: Vec<Vec<u32>>,
    pub postings: Vec<Vec<u32>>,
}

/// Outcome of a PMI query: defined value, or the distinct signal that the
/// two words never share a paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pmi {
    Defined(f64),
    Undefined,
}

/// PMI query with the counts behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PmiDetail {
    pub n_x: usize,
    pub n_y: usize,
    pub n_xy: usize,
    pub n_paragraphs: usize,
    pub value: Pmi,
}

impl CoocIndex {
    /// Index the first `prefix_len` paragraphs of `corpus`.
    pub fn build(corpus: &Corpus, prefix_len: usize) -> Result<Self> {
        if prefix_len > corpus.len() {
            return Err(CoreError::Parameter(format!(
                "prefix length {prefix_len} exceeds corpus size {}",
                corpus.len()
            )));
        }
        let mut index = CoocIndex {
            vocabulary: Arc::clone(&corpus.vocabulary),
            prefix_len: 0,
            cooccurrents: vec![BTreeSet::new(); corpus.vocabulary.len()],
            postings: vec![Vec::new(); corpus.vocabulary.len()],
        };
        for p in &corpus.paragraphs[..prefix_len] {
            index.extend(p)?;
        }
        Ok(index)
    }

    /// Incorporate the next paragraph; its id must equal the current
    /// prefix length.
    pub fn extend(&mut self, paragraph: &Paragraph) -> Result<()> {
        if paragraph.id != self.prefix_len {
            return Err(CoreError::Sequencing(format!(
                "index covers prefix {} but got paragraph id {}",
                self.prefix_len, paragraph.id
            )));
        }
        let mut distinct: BTreeSet<u32> = BTreeSet::new();
        for t in &paragraph.tokens {
            distinct.insert(self.vocabulary.require(t)?);
        }
        let id = paragraph.id as u32;
        for &w in &distinct {
            self.postings[w as usize].push(id);
            for &x in &distinct {
                self.cooccurrents[w as usize].insert(x);
            }
        }
        self.prefix_len += 1;
        Ok(())
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    /// Words that have shared at least one paragraph with `word`.
    pub fn cooccurrents(&self, word: &str) -> Result<&BTreeSet<u32>> {
        let i = self.vocabulary.require(word)?;
        Ok(&self.cooccurrents[i as usize])
    }

    /// Number of prefix paragraphs containing `word`.
    pub fn paragraph_count(&self, word: &str) -> Result<usize> {
        let i = self.vocabulary.require(word)?;
        Ok(self.postings[i as usize].len())
    }

    /// Number of prefix paragraphs containing both words.
    pub fn joint_paragraph_count(&self, x: &str, y: &str) -> Result<usize> {
        let xi = self.vocabulary.require(x)? as usize;
        let yi = self.vocabulary.require(y)? as usize;
        Ok(intersection_size(&self.postings[xi], &self.postings[yi]))
    }

    /// Put a paragraph into exactly one category relative to (x, y),
    /// evaluated against this index (the corpus state *before* the
    /// paragraph is incorporated).
    ///
    /// Precedence: both → direct co-occurrence; one → that occurrence
    /// category; neither → second order iff at least
    /// [`SECOND_ORDER_WITNESS_THRESHOLD`] distinct paragraph words each
    /// co-occurred with both x and y before; otherwise the residual
    /// category.
    pub fn classify(&self, paragraph: &Paragraph, x: &str, y: &str) -> Result<Classification> {
        if x == y {
            return Err(CoreError::Parameter(format!(
                "traced pair members must differ (got {x:?} twice)"
            )));
        }
        let xi = self.vocabulary.require(x)?;
        let yi = self.vocabulary.require(y)?;

        let mut has_x = false;
        let mut has_y = false;
        let mut distinct: BTreeSet<u32> = BTreeSet::new();
        for t in &paragraph.tokens {
            // tokens of a paragraph under classification may be unknown
            // to the vocabulary only if the paragraph is foreign to the
            // corpus; such tokens cannot witness anything
            if let Some(i) = self.vocabulary.index_of(t) {
                distinct.insert(i);
                has_x |= i == xi;
                has_y |= i == yi;
            }
        }

        let category = match (has_x, has_y) {
            (true, true) => Category::DirectCooc,
            (true, false) => Category::XOnly,
            (false, true) => Category::YOnly,
            (false, false) => {
                let witnesses: Vec<u32> = distinct
                    .iter()
                    .copied()
                    .filter(|&w| {
                        w != xi
                            && w != yi
                            && self.cooccurrents[w as usize].contains(&xi)
                            && self.cooccurrents[w as usize].contains(&yi)
                    })
                    .collect();
                if witnesses.len() >= SECOND_ORDER_WITNESS_THRESHOLD {
                    return Ok(Classification {
                        category: Category::SecondOrder,
                        witnesses: Some(
                            witnesses
                                .iter()
                                .map(|&w| {
                                    self.vocabulary
                                        .form(w)
                                        .expect("witness came from the vocabulary")
                                        .to_owned()
                                })
                                .collect(),
                        ),
                    });
                }
                Category::ThirdOrMore
            }
        };
        Ok(Classification {
            category,
            witnesses: None,
        })
    }

    /// Paragraph-level pointwise mutual information over the prefix:
    /// ln(n_xy·N / (n_x·n_y)). Words that never occur are lookup
    /// errors; a pair that never shares a paragraph is the distinct
    /// undefined signal, not an error.
    pub fn pmi(&self, x: &str, y: &str) -> Result<PmiDetail> {
        let n_x = self.paragraph_count(x)?;
        let n_y = self.paragraph_count(y)?;
        if n_x == 0 {
            return Err(CoreError::Lookup { word: x.to_owned() });
        }
        if n_y == 0 {
            return Err(CoreError::Lookup { word: y.to_owned() });
        }
        let n_xy = self.joint_paragraph_count(x, y)?;
        let n = self.prefix_len;
        let value = if n_xy == 0 {
            Pmi::Undefined
        } else {
            Pmi::Defined(((n_xy as f64 * n as f64) / (n_x as f64 * n_y as f64)).ln())
        };
        Ok(PmiDetail {
            n_x,
            n_y,
            n_xy,
            n_paragraphs: n,
            value,
        })
    }

    pub fn snapshot(&self) -> CoocIndexSnapshot {
        CoocIndexSnapshot {
            prefix_len: self.prefix_len,
            cooccurrents: self
                .cooccurrents
                .iter()
                .map(|s| s.iter().copied().collect())
                .collect(),
            postings: self.postings.clone(),
        }
    }

    pub fn from_snapshot(snapshot: CoocIndexSnapshot, vocabulary: Arc<Vocabulary>) -> Result<Self> {
        if snapshot.cooccurrents.len() != vocabulary.len()
            || snapshot.postings.len() != vocabulary.len()
        {
            return Err(CoreError::Validation(
                "index snapshot does not match the vocabulary".into(),
            ));
        }
        Ok(CoocIndex {
            vocabulary,
            prefix_len: snapshot.prefix_len,
            cooccurrents: snapshot
                .cooccurrents
                .into_iter()
                .map(|v| v.into_iter().collect())
                .collect(),
            postings: snapshot.postings,
        })
    }
}

/// Read a pairs file: UTF-8, tab-separated, two columns, one pair per
/// line, `#` starts a comment line. Each field is normalized with the
/// corpus rules and must come out as exactly one token.
pub fn read_pairs<R: std::io::BufRead>(source: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| {
            CoreError::format(line_no, format!("cannot read pairs file: {e}"))
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let (w1, w2) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(CoreError::format(
                    line_no,
                    "expected exactly two tab-separated columns",
                ))
            }
        };
        let norm = |raw: &str| -> Result<String> {
            let toks = crate::corpus::normalize_text(raw);
            match toks.as_slice() {
                [one] => Ok(one.clone()),
                _ => Err(CoreError::format(
                    line_no,
                    format!("{raw:?} does not normalize to a single word"),
                )),
            }
        };
        pairs.push((norm(w1)?, norm(w2)?));
    }
    Ok(pairs)
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_from_token_lists;

    fn para(id: usize, tokens: &[&str]) -> Paragraph {
        Paragraph {
            id,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn empty_prefix_has_empty_sets() {
        let c = corpus_from_token_lists(&[vec!["a", "b"]]).unwrap();
        let idx = CoocIndex::build(&c, 0).unwrap();
        assert!(idx.cooccurrents("a").unwrap().is_empty());
        assert_eq!(idx.paragraph_count("a").unwrap(), 0);
    }

    #[test]
    fn single_paragraph_cooccurrents_include_self() {
        let c = corpus_from_token_lists(&[vec!["a", "b"]]).unwrap();
        let idx = CoocIndex::build(&c, 1).unwrap();
        let a = idx.cooccurrents("a").unwrap();
        let ai = c.vocabulary.index_of("a").unwrap();
        let bi = c.vocabulary.index_of("b").unwrap();
        assert_eq!(a.iter().copied().collect::<Vec<_>>(), vec![ai, bi]);
    }

    #[test]
    fn out_of_range_prefix_is_parameter_error() {
        let c = corpus_from_token_lists(&[vec!["a"]]).unwrap();
        assert!(matches!(
            CoocIndex::build(&c, 2),
            Err(CoreError::Parameter(_))
        ));
    }

    #[test]
    fn extend_matches_build_and_checks_sequence() {
        let c = corpus_from_token_lists(&[vec!["a", "b"], vec!["a"], vec!["b", "c"]]).unwrap();
        let mut idx = CoocIndex::build(&c, 0).unwrap();
        for p in &c.paragraphs {
            idx.extend(p).unwrap();
        }
        let built = CoocIndex::build(&c, 3).unwrap();
        assert_eq!(idx.prefix_len(), built.prefix_len());
        for w in ["a", "b", "c"] {
            assert_eq!(idx.cooccurrents(w).unwrap(), built.cooccurrents(w).unwrap());
            assert_eq!(
                idx.paragraph_count(w).unwrap(),
                built.paragraph_count(w).unwrap()
            );
        }
        // replaying paragraph 0 is out of sequence now
        assert!(matches!(
            idx.extend(&c.paragraphs[0]),
            Err(CoreError::Sequencing(_))
        ));
    }

    #[test]
    fn extend_singleton_adds_only_self_pair() {
        let c = corpus_from_token_lists(&[vec!["a"]]).unwrap();
        let idx = CoocIndex::build(&c, 1).unwrap();
        let ai = c.vocabulary.index_of("a").unwrap();
        assert_eq!(
            idx.cooccurrents("a").unwrap().iter().copied().collect::<Vec<_>>(),
            vec![ai]
        );
    }

    #[test]
    fn classify_occurrence_cases() {
        let c = corpus_from_token_lists(&[vec!["a", "b", "c", "d"]]).unwrap();
        let idx = CoocIndex::build(&c, 0).unwrap();
        let r = idx.classify(&para(0, &["a", "c"]), "a", "b").unwrap();
        assert_eq!(r.category, Category::XOnly);
        let r = idx.classify(&para(0, &["b", "c"]), "a", "b").unwrap();
        assert_eq!(r.category, Category::YOnly);
        let r = idx.classify(&para(0, &["a", "b", "d"]), "a", "b").unwrap();
        assert_eq!(r.category, Category::DirectCooc);
        assert!(r.witnesses.is_none());
    }

    #[test]
    fn classify_second_order_with_witnesses() {
        // c, e, f each co-occur with both a and b in the prior corpus
        let c = corpus_from_token_lists(&[
            vec!["a", "c", "e", "f"],
            vec!["b", "c", "e", "f"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 2).unwrap();
        let r = idx.classify(&para(2, &["c", "e", "f"]), "a", "b").unwrap();
        assert_eq!(r.category, Category::SecondOrder);
        assert_eq!(
            r.witnesses.unwrap(),
            vec!["c".to_string(), "e".to_string(), "f".to_string()]
        );
    }

    #[test]
    fn two_witnesses_fall_to_third_or_more() {
        let c = corpus_from_token_lists(&[
            vec!["a", "c", "e", "f"],
            vec!["b", "c", "e", "f"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 2).unwrap();
        let r = idx.classify(&para(2, &["c", "e"]), "a", "b").unwrap();
        assert_eq!(r.category, Category::ThirdOrMore);
        assert!(r.witnesses.is_none());
    }

    #[test]
    fn duplicated_witness_tokens_count_once() {
        let c = corpus_from_token_lists(&[
            vec!["a", "c", "e"],
            vec!["b", "c", "e"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 2).unwrap();
        // only two distinct witness types however often they repeat
        let r = idx
            .classify(&para(2, &["c", "c", "c", "e", "e"]), "a", "b")
            .unwrap();
        assert_eq!(r.category, Category::ThirdOrMore);
    }

    #[test]
    fn classify_rejects_equal_pair_and_oov() {
        let c = corpus_from_token_lists(&[vec!["a", "b"]]).unwrap();
        let idx = CoocIndex::build(&c, 1).unwrap();
        assert!(matches!(
            idx.classify(&para(1, &["a"]), "a", "a"),
            Err(CoreError::Parameter(_))
        ));
        assert!(matches!(
            idx.classify(&para(1, &["a"]), "a", "zzz"),
            Err(CoreError::Lookup { .. })
        ));
    }

    #[test]
    fn precedence_direct_beats_witnesses() {
        let c = corpus_from_token_lists(&[
            vec!["a", "c", "e", "f"],
            vec!["b", "c", "e", "f"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 2).unwrap();
        let r = idx
            .classify(&para(2, &["a", "b", "c", "e", "f"]), "a", "b")
            .unwrap();
        assert_eq!(r.category, Category::DirectCooc);
    }

    #[test]
    fn pmi_hand_computed_fixture() {
        let c = corpus_from_token_lists(&[
            vec!["a", "b"],
            vec!["a", "c"],
            vec!["b", "c"],
            vec!["d"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 4).unwrap();
        let d = idx.pmi("a", "b").unwrap();
        assert_eq!((d.n_x, d.n_y, d.n_xy, d.n_paragraphs), (2, 2, 1, 4));
        match d.value {
            Pmi::Defined(v) => assert!(v.abs() < 1e-15, "log(1*4/(2*2)) = 0, got {v}"),
            Pmi::Undefined => panic!("defined pair"),
        }
        // a and d never share a paragraph
        assert_eq!(idx.pmi("a", "d").unwrap().value, Pmi::Undefined);
        // symmetry is exact
        assert_eq!(idx.pmi("b", "a").unwrap().value, d.value);
    }

    #[test]
    fn pmi_perfect_association_is_positive() {
        let c = corpus_from_token_lists(&[
            vec!["x", "y"],
            vec!["x", "y"],
            vec!["z"],
            vec!["z"],
        ])
        .unwrap();
        let idx = CoocIndex::build(&c, 4).unwrap();
        match idx.pmi("x", "y").unwrap().value {
            Pmi::Defined(v) => assert!((v - (4.0f64 / 2.0).ln()).abs() < 1e-15),
            Pmi::Undefined => panic!(),
        }
    }

    #[test]
    fn pmi_unseen_word_is_lookup_error() {
        let c = corpus_from_token_lists(&[vec!["a"], vec!["b"]]).unwrap();
        let idx = CoocIndex::build(&c, 1).unwrap();
        // "b" is in the vocabulary but has not occurred within the prefix
        assert!(matches!(
            idx.pmi("a", "b"),
            Err(CoreError::Lookup { .. })
        ));
    }

    #[test]
    fn pairs_file_parses_comments_and_tabs() {
        let data = "# traced pairs\nvoiture\troute\n\nChat\tChien\n";
        let pairs = read_pairs(std::io::Cursor::new(data)).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("voiture".to_string(), "route".to_string()),
                ("chat".to_string(), "chien".to_string()),
            ]
        );
    }

    #[test]
    fn pairs_file_rejects_bad_columns_and_multiword_fields() {
        let err = read_pairs(std::io::Cursor::new("only_one_column\n")).unwrap_err();
        assert!(matches!(err, CoreError::Format { line: Some(1), .. }));
        let err = read_pairs(std::io::Cursor::new("two words\tok\n")).unwrap_err();
        assert!(matches!(err, CoreError::Format { line: Some(1), .. }));
    }

    #[test]
    fn snapshot_round_trip() {
        let c = corpus_from_token_lists(&[vec!["a", "b"], vec!["b", "c"]]).unwrap();
        let idx = CoocIndex::build(&c, 2).unwrap();
        let snap = idx.snapshot();
        let restored =
            CoocIndex::from_snapshot(snap, Arc::clone(&c.vocabulary)).unwrap();
        assert_eq!(restored.prefix_len(), 2);
        for w in ["a", "b", "c"] {
            assert_eq!(
                restored.cooccurrents(w).unwrap(),
                idx.cooccurrents(w).unwrap()
            );
            assert_eq!(
                restored.paragraph_count(w).unwrap(),
                idx.paragraph_count(w).unwrap()
            );
        }
    }
}
