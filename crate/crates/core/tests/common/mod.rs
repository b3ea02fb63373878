//! Shared test fixtures: independent oracles (one-sided Jacobi SVD,
//! brute-force co-occurrence scans, direct PMI counting) and seeded
//! corpus generators. Everything here is deliberately independent of the
//! library's own computation paths.
#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use semtrace_core::cooc::{Category, SECOND_ORDER_WITNESS_THRESHOLD};
use semtrace_core::corpus::{corpus_from_token_lists, Corpus};
use semtrace_core::semspace::matrix::TermDocMatrix;

/// Singular values by one-sided Jacobi orthogonalization of the columns.
/// Converges to machine precision on the small dense matrices used in
/// tests; shares no code with the Lanczos path under test.
pub fn jacobi_singular_values(dense: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut g: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| dense[i * cols + j]).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let app = dot(&g[p], &g[p]);
                let aqq = dot(&g[q], &g[q]);
                let apq = dot(&g[p], &g[q]);
                if apq.abs() <= 1e-30 + 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = g.split_at_mut(q);
                for (xp, xq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*xp, *xq);
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigmas: Vec<f64> = g.iter().map(|col| dot(col, col).sqrt()).collect();
    sigmas.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    sigmas.truncate(rows.min(cols));
    sigmas
}

/// Row-major dense copy of a sparse matrix.
pub fn to_dense(m: &TermDocMatrix) -> Vec<f64> {
    let mut out = vec![0.0; m.rows() * m.cols()];
    for j in 0..m.cols() {
        for (r, v) in m.column(j) {
            out[r as usize * m.cols() + j] = v;
        }
    }
    out
}

pub fn frobenius_sq(dense: &[f64]) -> f64 {
    dense.iter().map(|v| v * v).sum()
}

/// ‖A − B‖²_F for row-major dense matrices of equal shape.
pub fn frobenius_diff_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A random corpus: `n_paragraphs` paragraphs of 1..=max_len words drawn
/// uniformly from a `vocab` of `w0..w{vocab-1}`, with multiplicities.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    n_paragraphs: usize,
    max_len: usize,
) -> Corpus {
    let words: Vec<String> = (0..vocab).map(|i| format!("w{i}")).collect();
    let mut paragraphs = Vec::with_capacity(n_paragraphs);
    for _ in 0..n_paragraphs {
        let len = rng.gen_range(1..=max_len);
        let tokens: Vec<String> = (0..len)
            .map(|_| words[rng.gen_range(0..vocab)].clone())
            .collect();
        paragraphs.push(tokens);
    }
    corpus_from_token_lists(&paragraphs).expect("non-empty by construction")
}

/// A corpus with Zipf-distributed word choice: frequent words dominate,
/// giving count matrices whose spectra decay smoothly without the exact
/// symmetries that planted-cluster constructions suffer from.
pub fn zipf_corpus(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    n_paragraphs: usize,
    max_len: usize,
) -> Corpus {
    let weights: Vec<f64> = (0..vocab).map(|i| 1.0 / (i as f64 + 1.0).powf(1.2)).collect();
    let total: f64 = weights.iter().sum();
    let mut paragraphs: Vec<Vec<String>> = Vec::with_capacity(n_paragraphs);
    for _ in 0..n_paragraphs {
        let len = rng.gen_range(2..=max_len);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                let mut pick = rng.gen_range(0.0..total);
                let mut w = 0;
                while w + 1 < vocab && pick > weights[w] {
                    pick -= weights[w];
                    w += 1;
                }
                format!("w{w}")
            })
            .collect();
        paragraphs.push(tokens);
    }
    corpus_from_token_lists(&paragraphs).expect("non-empty by construction")
}

/// Smallest relative separation between adjacent retained singular
/// values (σ_i − σ_{i+1})/σ_1 for i ≤ k, over every traced prefix. When
/// any retained value repeats (or pinches the first discarded one) the
/// retained vectors are free to rotate and cosine comparisons between
/// algorithms stop being meaningful, so validation corpora are screened
/// for simple spectra throughout.
pub fn min_spectral_separation(corpus: &Corpus, start: usize, end: usize, k: usize) -> f64 {
    use semtrace_core::semspace::svd::truncated_svd_operator;
    let matrix = semtrace_core::semspace::build_count_matrix(corpus).expect("non-empty");
    let mut worst = f64::INFINITY;
    for n in start..=end {
        let prefix = matrix.prefix(n).expect("within corpus");
        let probe = (k + 1).min(prefix.rows().min(prefix.cols()));
        let f = truncated_svd_operator(&prefix, probe).expect("valid probe");
        let scale = f.s[0].max(f64::MIN_POSITIVE);
        for i in 0..probe - 1 {
            worst = worst.min((f.s[i] - f.s[i + 1]) / scale);
        }
    }
    worst
}

/// Brute-force paragraph classification by scanning the full prefix; the
/// independent oracle for `CoocIndex::classify`.
pub fn classify_by_scan(
    corpus: &Corpus,
    prefix_len: usize,
    paragraph_tokens: &[String],
    x: &str,
    y: &str,
) -> Category {
    let has = |tokens: &[String], w: &str| tokens.iter().any(|t| t == w);
    let has_x = has(paragraph_tokens, x);
    let has_y = has(paragraph_tokens, y);
    match (has_x, has_y) {
        (true, true) => Category::DirectCooc,
        (true, false) => Category::XOnly,
        (false, true) => Category::YOnly,
        (false, false) => {
            let mut witnesses: Vec<&str> = Vec::new();
            for t in paragraph_tokens {
                let t = t.as_str();
                if t == x || t == y || witnesses.contains(&t) {
                    continue;
                }
                let cooc_with = |target: &str| {
                    corpus.paragraphs[..prefix_len]
                        .iter()
                        .any(|p| has(&p.tokens, t) && has(&p.tokens, target))
                };
                if cooc_with(x) && cooc_with(y) {
                    witnesses.push(t);
                }
            }
            if witnesses.len() >= SECOND_ORDER_WITNESS_THRESHOLD {
                Category::SecondOrder
            } else {
                Category::ThirdOrMore
            }
        }
    }
}

/// Direct paragraph-scan counts for PMI: (n_x, n_y, n_xy, N).
pub fn pmi_counts_by_scan(
    corpus: &Corpus,
    prefix_len: usize,
    x: &str,
    y: &str,
) -> (usize, usize, usize, usize) {
    let mut n_x = 0;
    let mut n_y = 0;
    let mut n_xy = 0;
    for p in &corpus.paragraphs[..prefix_len] {
        let hx = p.tokens.iter().any(|t| t == x);
        let hy = p.tokens.iter().any(|t| t == y);
        n_x += usize::from(hx);
        n_y += usize::from(hy);
        n_xy += usize::from(hx && hy);
    }
    (n_x, n_y, n_xy, prefix_len)
}

/// Pearson through the raw-moment identity, a different algebraic route
/// than the library's centered two-pass form.
pub fn pearson_by_moments(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let cov = sxy / n - (sx / n) * (sy / n);
    let vx = sxx / n - (sx / n) * (sx / n);
    let vy = syy / n - (sy / n) * (sy / n);
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
