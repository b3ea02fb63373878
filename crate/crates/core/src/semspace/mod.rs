//! Semantic spaces: sparse count matrix → weighting → truncated SVD →
//! k-dimensional word vectors compared by cosine.
//!
//! A word's vector is its row of U_k·Σ_k (singular-value scaled), the
//! convention under which all similarity queries below operate. Text
//! vectors are sums of word vectors, so expressions can be compared even
//! when they share no word.

pub mod matrix;
pub mod serialize;
pub mod svd;
pub mod weighting;

use std::sync::Arc;

pub use matrix::{build_count_matrix, TermDocMatrix};
pub use svd::SvdFactors;
pub use weighting::{weighting_by_name, weighting_names, Weighting, WeightingScheme};

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{CoreError, Result};

/// A reduced word-vector space: `k` dimensions, the retained singular
/// values, and one k-vector per vocabulary word.
#[derive(Debug, Clone)]
pub struct SemanticSpace {
    k: usize,
    singular_values: Vec<f64>,
    /// row-major vocab_len × k
    word_vectors: Vec<f64>,
    vocabulary: Arc<Vocabulary>,
    weighting: WeightingScheme,
    corpus_fingerprint: [u8; 32],
    token_counts: Vec<u64>,
}

/// Sum of word vectors for a token list, with the out-of-vocabulary
/// tokens that were skipped along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct TextVector {
    pub vector: Vec<f64>,
    pub skipped: Vec<String>,
}

impl SemanticSpace {
    /// Reduce a weighted (or raw-count) matrix to its top-`k` factors and
    /// keep the scaled left rows as word vectors.
    pub fn from_matrix(
        matrix: &TermDocMatrix,
        k: usize,
        vocabulary: Arc<Vocabulary>,
        weighting: WeightingScheme,
        corpus_fingerprint: [u8; 32],
        token_counts: Vec<u64>,
    ) -> Result<Self> {
        if matrix.rows() != vocabulary.len() {
            return Err(CoreError::Parameter(format!(
                "matrix has {} rows but the vocabulary holds {} words",
                matrix.rows(),
                vocabulary.len()
            )));
        }
        let factors = svd::truncated_svd_operator(matrix, k)?;
        Ok(Self::from_factors(
            &factors,
            k,
            vocabulary,
            weighting,
            corpus_fingerprint,
            token_counts,
        ))
    }

    /// Build the public view from existing factors (steppers hold their
    /// own factor state and emit spaces per step).
    pub fn from_factors(
        factors: &SvdFactors,
        k: usize,
        vocabulary: Arc<Vocabulary>,
        weighting: WeightingScheme,
        corpus_fingerprint: [u8; 32],
        token_counts: Vec<u64>,
    ) -> Self {
        Self::from_left_factors(
            &factors.u,
            &factors.s,
            factors.rows,
            factors.rank,
            k,
            vocabulary,
            weighting,
            corpus_fingerprint,
            token_counts,
        )
    }

    /// Public view of a left factorization U·diag(s): the first
    /// `min(k, rank)` scaled columns become word-vector components,
    /// padded with zeros up to `k` when the rank falls short.
    #[allow(clippy::too_many_arguments)]
    pub fn from_left_factors(
        u: &[f64],
        s: &[f64],
        rows: usize,
        rank: usize,
        k: usize,
        vocabulary: Arc<Vocabulary>,
        weighting: WeightingScheme,
        corpus_fingerprint: [u8; 32],
        token_counts: Vec<u64>,
    ) -> Self {
        debug_assert_eq!(rows, vocabulary.len());
        let vocab_len = vocabulary.len();
        let take = k.min(rank);
        let mut word_vectors = vec![0.0; vocab_len * k];
        let mut singular_values = vec![0.0; k];
        for c in 0..take {
            singular_values[c] = s[c];
            if s[c] == 0.0 {
                continue;
            }
            for r in 0..vocab_len {
                word_vectors[r * k + c] = u[c * rows + r] * s[c];
            }
        }
        SemanticSpace {
            k,
            singular_values,
            word_vectors,
            vocabulary,
            weighting,
            corpus_fingerprint,
            token_counts,
        }
    }

    /// Assemble a space from raw parts (deserialization, interchange,
    /// synthetic spaces in tests). Parts are validated for shape.
    pub fn from_raw_parts(
        vocabulary: Arc<Vocabulary>,
        k: usize,
        singular_values: Vec<f64>,
        word_vectors: Vec<f64>,
        weighting: WeightingScheme,
        corpus_fingerprint: [u8; 32],
        token_counts: Vec<u64>,
    ) -> Result<Self> {
        if singular_values.len() != k {
            return Err(CoreError::Parameter(format!(
                "expected {k} singular values, got {}",
                singular_values.len()
            )));
        }
        if word_vectors.len() != vocabulary.len() * k {
            return Err(CoreError::Parameter(format!(
                "expected {} vector components, got {}",
                vocabulary.len() * k,
                word_vectors.len()
            )));
        }
        if token_counts.len() != vocabulary.len() {
            return Err(CoreError::Parameter(
                "token count table does not match the vocabulary".into(),
            ));
        }
        if singular_values.windows(2).any(|w| w[0] < w[1]) {
            return Err(CoreError::Parameter(
                "singular values are not non-increasing".into(),
            ));
        }
        Ok(SemanticSpace {
            k,
            singular_values,
            word_vectors,
            vocabulary,
            weighting,
            corpus_fingerprint,
            token_counts,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocabulary
    }

    pub fn weighting(&self) -> WeightingScheme {
        self.weighting
    }

    pub fn corpus_fingerprint(&self) -> [u8; 32] {
        self.corpus_fingerprint
    }

    /// Corpus occurrence totals per word, in vocabulary order.
    pub fn token_counts(&self) -> &[u64] {
        &self.token_counts
    }

    /// The stored k-vector of an in-vocabulary word.
    pub fn word_vector(&self, word: &str) -> Result<&[f64]> {
        let i = self.vocabulary.require(word)? as usize;
        Ok(&self.word_vectors[i * self.k..(i + 1) * self.k])
    }

    pub fn word_vector_by_index(&self, index: u32) -> &[f64] {
        let i = index as usize;
        &self.word_vectors[i * self.k..(i + 1) * self.k]
    }

    /// Linear combination of the in-vocabulary tokens' vectors, with
    /// multiplicity. Tokens outside the vocabulary are skipped and
    /// reported; a text with no known token is an error.
    pub fn text_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Result<TextVector> {
        let mut vector = vec![0.0; self.k];
        let mut skipped = Vec::new();
        let mut any = false;
        for t in tokens {
            let t = t.as_ref();
            match self.vocabulary.index_of(t) {
                Some(i) => {
                    any = true;
                    let row = self.word_vector_by_index(i);
                    for (acc, x) in vector.iter_mut().zip(row) {
                        *acc += x;
                    }
                }
                None => skipped.push(t.to_owned()),
            }
        }
        if !any {
            return Err(CoreError::AllTokensOutOfVocabulary);
        }
        Ok(TextVector { vector, skipped })
    }

    /// Cosine between two in-vocabulary words.
    pub fn word_cosine(&self, w1: &str, w2: &str) -> Result<f64> {
        cosine(self.word_vector(w1)?, self.word_vector(w2)?)
    }
}

/// dot(u,v)/(‖u‖·‖v‖), clamped into [-1, 1] against rounding overshoot.
/// A zero vector has no direction, hence no defined similarity.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(CoreError::Parameter(format!(
            "cosine of vectors with different dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(CoreError::UndefinedSimilarity);
    }
    let d = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok((d / (nu * nv)).clamp(-1.0, 1.0))
}

/// Convenience: count, weight and reduce a corpus in one call.
pub fn build_space(corpus: &Corpus, k: usize, weighting: WeightingScheme) -> Result<SemanticSpace> {
    let counts = build_count_matrix(corpus)?;
    let weighted = weighting.strategy().apply(&counts)?;
    SemanticSpace::from_matrix(
        &weighted,
        k,
        Arc::clone(&corpus.vocabulary),
        weighting,
        corpus.fingerprint(),
        corpus.token_counts(),
    )
}
