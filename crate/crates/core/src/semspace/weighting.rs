//! Weighting schemes applied to the raw count matrix before the SVD.
//!
//! Each scheme is a strategy behind [`Weighting`], registered by name and
//! selected at runtime (`--weighting` on the CLI). `raw` is the default:
//! the reduction sees plain occurrence counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::TermDocMatrix;
use crate::error::{CoreError, Result};

/// A transform from raw counts to the real-valued matrix fed to the SVD.
pub trait Weighting: Send + Sync {
    /// Registry name, as accepted on the command line.
    fn name(&self) -> &'static str;

    /// Apply to a raw-count matrix. Applying any scheme to an already
    /// weighted matrix is a state error.
    fn apply(&self, matrix: &TermDocMatrix) -> Result<TermDocMatrix>;
}

struct RawCounts;

impl Weighting for RawCounts {
    fn name(&self) -> &'static str {
        "raw"
    }

    fn apply(&self, matrix: &TermDocMatrix) -> Result<TermDocMatrix> {
        ensure_unweighted(matrix)?;
        Ok(matrix.mark_weighted(self.name()))
    }
}

struct LogEntropy;

impl Weighting for LogEntropy {
    fn name(&self) -> &'static str {
        "log-entropy"
    }

    /// entry ← log(1+count) · (1 − H_w / log N), with H_w the entropy of
    /// the word's distribution over paragraphs and N the paragraph count.
    /// A word confined to one paragraph keeps full weight; a word spread
    /// uniformly over all paragraphs vanishes.
    fn apply(&self, matrix: &TermDocMatrix) -> Result<TermDocMatrix> {
        ensure_unweighted(matrix)?;
        let (col_ptr, row_idx, values) = matrix.raw_entries();

        let mut row_total = vec![0.0f64; matrix.rows()];
        for (r, v) in row_idx.iter().zip(values) {
            row_total[*r as usize] += v;
        }
        let mut row_entropy = vec![0.0f64; matrix.rows()];
        for (r, v) in row_idx.iter().zip(values) {
            let p = v / row_total[*r as usize];
            row_entropy[*r as usize] -= p * p.ln();
        }
        let log_n = (matrix.cols() as f64).ln();
        let global: Vec<f64> = row_entropy
            .iter()
            .map(|h| {
                if log_n > 0.0 {
                    let factor = 1.0 - h / log_n;
                    // a uniformly spread word has factor 0 up to float
                    // noise; its row vanishes rather than lingering at
                    // the 1e-17 scale
                    if factor < 1e-12 {
                        0.0
                    } else {
                        factor
                    }
                } else {
                    1.0 // single-column matrix: entropy is always zero
                }
            })
            .collect();

        // rows of maximal entropy vanish entirely, so the result is
        // rebuilt rather than value-mapped: explicit zeros are never stored
        let mut entries: Vec<Vec<(u32, f64)>> = Vec::with_capacity(matrix.cols());
        for j in 0..matrix.cols() {
            let mut col = Vec::with_capacity(col_ptr[j + 1] - col_ptr[j]);
            for off in col_ptr[j]..col_ptr[j + 1] {
                let w = global[row_idx[off] as usize];
                let v = (1.0 + values[off]).ln() * w;
                if v != 0.0 {
                    col.push((row_idx[off], v));
                }
            }
            entries.push(col);
        }
        Ok(TermDocMatrix::from_columns(
            matrix.rows(),
            &entries,
            Some(self.name()),
        ))
    }
}

fn ensure_unweighted(matrix: &TermDocMatrix) -> Result<()> {
    match matrix.weighted_with() {
        Some(scheme) => Err(CoreError::State(format!(
            "matrix already weighted with {scheme:?}"
        ))),
        None => Ok(()),
    }
}

static REGISTRY: &[&dyn Weighting] = &[&RawCounts, &LogEntropy];

/// Look up a weighting strategy by registry name.
pub fn weighting_by_name(name: &str) -> Option<&'static dyn Weighting> {
    REGISTRY.iter().copied().find(|w| w.name() == name)
}

/// Names of all registered weighting schemes.
pub fn weighting_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|w| w.name()).collect()
}

/// Enumerated scheme tag used in configs and serialized spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingScheme {
    Raw,
    LogEntropy,
}

impl WeightingScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightingScheme::Raw => "raw",
            WeightingScheme::LogEntropy => "log-entropy",
        }
    }

    pub fn strategy(self) -> &'static dyn Weighting {
        weighting_by_name(self.name()).expect("registered scheme")
    }
}

impl fmt::Display for WeightingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightingScheme {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(WeightingScheme::Raw),
            "log-entropy" => Ok(WeightingScheme::LogEntropy),
            other => Err(CoreError::Parameter(format!(
                "unknown weighting scheme {other:?} (expected one of {:?})",
                weighting_names()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_from_token_lists;
    use crate::semspace::matrix::build_count_matrix;

    #[test]
    fn raw_is_identity() {
        let c = corpus_from_token_lists(&[vec!["a", "b", "a"], vec!["b"]]).unwrap();
        let m = build_count_matrix(&c).unwrap();
        let w = weighting_by_name("raw").unwrap().apply(&m).unwrap();
        assert_eq!(w.entry(0, 0), 2.0);
        assert_eq!(w.entry(1, 0), 1.0);
        assert_eq!(w.entry(1, 1), 1.0);
        assert_eq!(w.weighted_with(), Some("raw"));
    }

    #[test]
    fn double_weighting_is_a_state_error() {
        let c = corpus_from_token_lists(&[vec!["a"]]).unwrap();
        let m = build_count_matrix(&c).unwrap();
        let w = WeightingScheme::Raw.strategy().apply(&m).unwrap();
        assert!(matches!(
            WeightingScheme::LogEntropy.strategy().apply(&w),
            Err(CoreError::State(_))
        ));
    }

    #[test]
    fn log_entropy_single_paragraph_word_keeps_full_weight() {
        // "b" appears 3 times, all in paragraph 1 of 3: entropy 0, factor 1
        let c = corpus_from_token_lists(&[
            vec!["a", "x"],
            vec!["b", "b", "b", "a"],
            vec!["a", "x"],
        ])
        .unwrap();
        let m = build_count_matrix(&c).unwrap();
        let w = WeightingScheme::LogEntropy.strategy().apply(&m).unwrap();
        let b = c.vocabulary.index_of("b").unwrap();
        let expected = (1.0f64 + 3.0).ln();
        assert!((w.entry(b, 1) - expected).abs() < 1e-15);
    }

    #[test]
    fn log_entropy_uniform_word_vanishes() {
        // "a" appears once in every paragraph: normalized entropy 1, row 0
        let c = corpus_from_token_lists(&[vec!["a", "x"], vec!["a", "y"], vec!["a", "z"]])
            .unwrap();
        let m = build_count_matrix(&c).unwrap();
        let w = WeightingScheme::LogEntropy.strategy().apply(&m).unwrap();
        let a = c.vocabulary.index_of("a").unwrap();
        for j in 0..3 {
            assert!(w.entry(a, j).abs() < 1e-12);
        }
        // the vanished row leaves no explicitly stored zeros behind
        assert_eq!(w.nnz(), 3);
    }

    #[test]
    fn log_entropy_hand_computed_two_paragraph_split() {
        // "a" appears 3 times in paragraph 0 and 1 time in paragraph 1 of
        // a 4-paragraph corpus: p = (3/4, 1/4),
        // H = -(3/4)ln(3/4) - (1/4)ln(1/4), factor = 1 - H/ln 4
        let c = corpus_from_token_lists(&[
            vec!["a", "a", "a"],
            vec!["a"],
            vec!["x"],
            vec!["y"],
        ])
        .unwrap();
        let m = build_count_matrix(&c).unwrap();
        let w = WeightingScheme::LogEntropy.strategy().apply(&m).unwrap();
        let h: f64 = -(0.75f64.ln() * 0.75 + 0.25f64.ln() * 0.25);
        let factor = 1.0 - h / 4.0f64.ln();
        let a = c.vocabulary.index_of("a").unwrap();
        assert!((w.entry(a, 0) - 4.0f64.ln() * factor).abs() < 1e-12);
        assert!((w.entry(a, 1) - 2.0f64.ln() * factor).abs() < 1e-12);
    }

    #[test]
    fn registry_knows_both_schemes() {
        assert_eq!(weighting_names(), vec!["raw", "log-entropy"]);
        assert!(weighting_by_name("raw").is_some());
        assert!(weighting_by_name("log-entropy").is_some());
        assert!(weighting_by_name("tfidf").is_none());
        assert!("nope".parse::<WeightingScheme>().is_err());
    }
}
