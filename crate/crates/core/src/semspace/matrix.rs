//! Sparse word-by-paragraph occurrence matrix in compressed-column form.
//! Rows are vocabulary words, columns are paragraphs.

use crate::corpus::Corpus;
use crate::error::{CoreError, Result};

/// Sparse term–document matrix. Entries are raw counts until a weighting
/// scheme has been applied; no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
    weighted_with: Option<&'static str>,
}

impl TermDocMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Name of the weighting scheme applied, if any.
    pub fn weighted_with(&self) -> Option<&'static str> {
        self.weighted_with
    }

    /// Entries of column `j` as `(row, value)` pairs, rows ascending.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.row_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn entry(&self, row: u32, col: usize) -> f64 {
        let lo = self.col_ptr[col];
        let hi = self.col_ptr[col + 1];
        match self.row_idx[lo..hi].binary_search(&row) {
            Ok(off) => self.values[lo + off],
            Err(_) => 0.0,
        }
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        let lo = self.col_ptr[j];
        let hi = self.col_ptr[j + 1];
        self.values[lo..hi].iter().sum()
    }

    /// y = A·x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        y.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for off in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[off] as usize] += self.values[off] * xj;
            }
        }
    }

    /// y = Aᵀ·x
    pub fn rmatvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for (j, yj) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for off in self.col_ptr[j]..self.col_ptr[j + 1] {
                acc += self.values[off] * x[self.row_idx[off] as usize];
            }
            *yj = acc;
        }
    }

    pub fn frobenius_norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// The submatrix of the first `n` columns.
    pub fn prefix(&self, n: usize) -> Result<TermDocMatrix> {
        if n > self.cols {
            return Err(CoreError::Parameter(format!(
                "prefix length {n} exceeds column count {}",
                self.cols
            )));
        }
        let end = self.col_ptr[n];
        Ok(TermDocMatrix {
            rows: self.rows,
            cols: n,
            col_ptr: self.col_ptr[..=n].to_vec(),
            row_idx: self.row_idx[..end].to_vec(),
            values: self.values[..end].to_vec(),
            weighted_with: self.weighted_with,
        })
    }

    /// Assemble from per-column `(row, value)` entries, rows ascending
    /// within each column.
    pub(crate) fn from_columns(
        rows: usize,
        columns: &[Vec<(u32, f64)>],
        weighted_with: Option<&'static str>,
    ) -> TermDocMatrix {
        let mut col_ptr = Vec::with_capacity(columns.len() + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for col in columns {
            debug_assert!(col.windows(2).all(|w| w[0].0 < w[1].0));
            for &(r, v) in col {
                row_idx.push(r);
                values.push(v);
            }
            col_ptr.push(row_idx.len());
        }
        TermDocMatrix {
            rows,
            cols: columns.len(),
            col_ptr,
            row_idx,
            values,
            weighted_with,
        }
    }

    pub(crate) fn mark_weighted(&self, scheme: &'static str) -> TermDocMatrix {
        let mut m = self.clone();
        m.weighted_with = Some(scheme);
        m
    }

    pub(crate) fn raw_entries(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.col_ptr, &self.row_idx, &self.values)
    }
}

/// Count word occurrences per paragraph into a sparse matrix whose rows
/// cover the full corpus vocabulary.
pub fn build_count_matrix(corpus: &Corpus) -> Result<TermDocMatrix> {
    if corpus.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }
    let rows = corpus.vocabulary.len();
    let cols = corpus.paragraphs.len();
    let mut col_ptr = Vec::with_capacity(cols + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    col_ptr.push(0);

    let mut counts: Vec<(u32, f64)> = Vec::new();
    for p in &corpus.paragraphs {
        counts.clear();
        for t in &p.tokens {
            let w = corpus
                .vocabulary
                .index_of(t)
                .expect("corpus invariant: every token is in the vocabulary");
            match counts.iter_mut().find(|(r, _)| *r == w) {
                Some((_, c)) => *c += 1.0,
                None => counts.push((w, 1.0)),
            }
        }
        counts.sort_unstable_by_key(|(r, _)| *r);
        for &(r, c) in &counts {
            row_idx.push(r);
            values.push(c);
        }
        col_ptr.push(row_idx.len());
    }

    Ok(TermDocMatrix {
        rows,
        cols,
        col_ptr,
        row_idx,
        values,
        weighted_with: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_from_token_lists;

    #[test]
    fn counts_by_hand() {
        let c = corpus_from_token_lists(&[vec!["a", "b", "a"], vec!["b"]]).unwrap();
        let m = build_count_matrix(&c).unwrap();
        assert_eq!(m.entry(0, 0), 2.0); // a in paragraph 0
        assert_eq!(m.entry(1, 0), 1.0); // b in paragraph 0
        assert_eq!(m.entry(1, 1), 1.0); // b in paragraph 1
        assert_eq!(m.entry(0, 1), 0.0);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn repeated_word_is_one_entry() {
        let c = corpus_from_token_lists(&[vec!["x", "x", "x", "x", "x"]]).unwrap();
        let m = build_count_matrix(&c).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.entry(0, 0), 5.0);
    }

    #[test]
    fn column_sums_equal_paragraph_lengths() {
        let paras = vec![
            vec!["a", "b", "c", "a"],
            vec!["b"],
            vec!["c", "c", "d", "a", "e"],
        ];
        let c = corpus_from_token_lists(&paras).unwrap();
        let m = build_count_matrix(&c).unwrap();
        for (j, p) in paras.iter().enumerate() {
            assert_eq!(m.column_sum(j), p.len() as f64);
        }
    }

    #[test]
    fn matvec_against_dense() {
        let c = corpus_from_token_lists(&[vec!["a", "b"], vec!["b", "c"], vec!["a", "c", "c"]])
            .unwrap();
        let m = build_count_matrix(&c).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut y = vec![0.0; m.rows()];
        m.matvec(&x, &mut y);
        // dense rows: a=[1,0,1], b=[1,1,0], c=[0,1,2]
        assert_eq!(y, vec![1.5, -1.0, -1.0]);

        let xr = [1.0, 2.0, 3.0];
        let mut yr = vec![0.0; m.cols()];
        m.rmatvec(&xr, &mut yr);
        assert_eq!(yr, vec![3.0, 5.0, 7.0]);
    }

    #[test]
    fn prefix_slices_columns() {
        let c = corpus_from_token_lists(&[vec!["a"], vec!["b"], vec!["c"]]).unwrap();
        let m = build_count_matrix(&c).unwrap();
        let p = m.prefix(2).unwrap();
        assert_eq!(p.cols(), 2);
        assert_eq!(p.rows(), 3);
        assert_eq!(p.nnz(), 2);
        assert!(m.prefix(4).is_err());
    }
}
