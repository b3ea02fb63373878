//! Deterministic truncated SVD for sparse matrices.
//!
//! Golub–Kahan–Lanczos bidiagonalization with full reorthogonalization on
//! both Krylov bases. The projected matrix B = Uᵀ A V is kept as a small
//! dense matrix (bidiagonal in the unbroken case, upper triangular after
//! restarts), and its dense SVD supplies Ritz values and vectors. The
//! starting vector comes from a fixed-seed generator, so the factorization
//! is identical from run to run.
//!
//! Breakdowns (an invariant subspace found before `k` triplets converge)
//! are handled by restarting with a fresh direction orthogonal to the
//! current basis; when the subspace is exhausted the remaining singular
//! values are exactly zero and the factors are zero-padded.

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};

/// Convergence tolerance on singular-value residuals.
pub const SINGULAR_VALUE_TOLERANCE: f64 = 1e-10;

/// Thin truncated factors A ≈ U·diag(s)·Vᵀ with U (m×k) and V (n×k)
/// orthonormal columns and s non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub rank: usize,
    /// m×k, column-major: `u[c * m + r]`.
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    /// n×k, column-major.
    pub v: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// true when the spectrum is (numerically) repeated across the
    /// truncation boundary: the kept head is then one deterministic
    /// choice among equivalent ones
    pub boundary_degenerate: bool,
}

/// Anything that can apply itself and its transpose to a vector.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// y = A·x
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// y = Aᵀ·x
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
    /// Scale estimate used for breakdown thresholds (e.g. ‖A‖_F).
    fn norm_estimate(&self) -> f64;
}

impl LinearOperator for super::matrix::TermDocMatrix {
    fn rows(&self) -> usize {
        self.rows()
    }
    fn cols(&self) -> usize {
        self.cols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.rmatvec(x, y);
    }
    fn norm_estimate(&self) -> f64 {
        self.frobenius_norm_squared().sqrt()
    }
}

/// splitmix64; deterministic start vectors without pulling in an RNG crate.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Subtract the projections of `w` onto every basis vector, optionally
/// recording the coefficients. Two passes keep the basis orthogonal to
/// machine precision.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], mut coeffs: Option<&mut [f64]>) {
    for _pass in 0..2 {
        for (i, q) in basis.iter().enumerate() {
            let c = dot(w, q);
            for (wv, qv) in w.iter_mut().zip(q) {
                *wv -= c * qv;
            }
            if let Some(cs) = coeffs.as_deref_mut() {
                cs[i] += c;
            }
        }
    }
}

struct GklState {
    us: Vec<Vec<f64>>,
    vs: Vec<Vec<f64>>,
    /// column j holds the coefficients uᵢᵀ A vⱼ for the uᵢ present when
    /// vⱼ was processed; later uᵢ are orthogonal to A vⱼ by construction
    b_cols: Vec<Vec<f64>>,
    /// ‖remainder of Aᵀu_last‖ — zero after a breakdown or restart.
    beta_last: f64,
    rng: SplitMix64,
}

impl GklState {
    fn projected(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.us.len(), self.vs.len(), |i, j| {
            self.b_cols[j].get(i).copied().unwrap_or(0.0)
        })
    }

    /// A fresh unit vector orthogonal to the current right basis, or None
    /// if the orthogonal complement is numerically empty.
    fn fresh_right(&mut self, n: usize) -> Option<Vec<f64>> {
        for _attempt in 0..4 {
            let mut v: Vec<f64> = (0..n).map(|_| self.rng.next_unit()).collect();
            orthogonalize(&mut v, &self.vs, None);
            let nv = norm(&v);
            if nv > 1e-8 {
                for x in &mut v {
                    *x /= nv;
                }
                return Some(v);
            }
        }
        None
    }
}

/// Ritz decomposition of the projected matrix, sorted by descending
/// singular value.
struct RitzTriplets {
    sigmas: Vec<f64>,
    /// residual bound per triplet: β_last · |last row of P|
    residuals: Vec<f64>,
    p: DMatrix<f64>,
    q: DMatrix<f64>,
}

fn ritz(state: &GklState) -> RitzTriplets {
    let b = state.projected();
    let svd = b.svd(true, true);
    let p_full = svd.u.expect("left vectors requested");
    let q_full = svd.v_t.expect("right vectors requested").transpose();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &bb| {
        svd.singular_values[bb]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let last_u = state.us.len().saturating_sub(1);
    let mut sigmas = Vec::with_capacity(order.len());
    let mut residuals = Vec::with_capacity(order.len());
    let mut p = DMatrix::zeros(p_full.nrows(), order.len());
    let mut q = DMatrix::zeros(q_full.nrows(), order.len());
    for (col, &idx) in order.iter().enumerate() {
        sigmas.push(svd.singular_values[idx]);
        residuals.push(state.beta_last * p_full[(last_u, idx)].abs());
        p.set_column(col, &p_full.column(idx));
        q.set_column(col, &q_full.column(idx));
    }
    RitzTriplets {
        sigmas,
        residuals,
        p,
        q,
    }
}

/// Truncated SVD of a sparse operator: the `k` largest singular triplets.
///
/// Deterministic for a fixed operator and `k`. Rank-deficient inputs with
/// fewer than `k` nonzero singular values succeed, padded with zeros.
pub fn truncated_svd_operator<A: LinearOperator>(a: &A, k: usize) -> Result<SvdFactors> {
    let (m, n) = (a.rows(), a.cols());
    let max_rank = m.min(n);
    if k == 0 || k > max_rank {
        return Err(CoreError::Parameter(format!(
            "k = {k} out of range 1..={max_rank} for a {m}x{n} matrix"
        )));
    }

    let scale = a.norm_estimate();
    let breakdown_tol = 1e-13 * scale.max(1.0);

    let mut state = GklState {
        us: Vec::new(),
        vs: Vec::new(),
        b_cols: Vec::new(),
        beta_last: 0.0,
        rng: SplitMix64(0x005E_ED0F_1E57),
    };

    // Zero operator: every singular value is zero.
    if scale == 0.0 {
        return Ok(zero_padded(
            SvdFactors {
                rank: 0,
                u: Vec::new(),
                s: Vec::new(),
                v: Vec::new(),
                rows: m,
                cols: n,
                boundary_degenerate: false,
            },
            k,
        ));
    }

    let mut v_next = state
        .fresh_right(n)
        .expect("nonzero operator has a starting direction");
    let mut work_m = vec![0.0; m];
    let mut work_n = vec![0.0; n];
    let check_every = 4.max(k / 2);
    let mut exhausted = false;
    // Residual-based early stopping cannot rule out a repeated singular
    // value still growing in the Krylov basis. Multiplicities reveal
    // themselves through (near-)breakdowns, so any restart or collapsed
    // recurrence coefficient downgrades the run: it must then explore
    // the subspace to exhaustion, where B carries A exactly.
    let suspicion_tol = 1e-8 * scale;
    let mut generic_run = true;

    // The right basis may need up to n columns: restarts and a start
    // vector with a null-space component both spend columns that carry
    // no singular direction.
    while state.vs.len() < n && !exhausted {
        // Left expansion: w = A v_j, orthogonalized against U.
        state.vs.push(v_next.clone());
        a.apply(&v_next, &mut work_m);
        let mut coeffs = vec![0.0; state.us.len()];
        orthogonalize(&mut work_m, &state.us, Some(&mut coeffs));
        let alpha = norm(&work_m);
        if alpha > breakdown_tol {
            generic_run &= alpha > suspicion_tol;
            coeffs.push(alpha);
            state.us.push(work_m.iter().map(|x| x / alpha).collect());
            state.b_cols.push(coeffs);

            // Right expansion: z = Aᵀ u_i, orthogonalized against V.
            a.apply_transpose(state.us.last().expect("just pushed"), &mut work_n);
            orthogonalize(&mut work_n, &state.vs, None);
            let beta = norm(&work_n);
            state.beta_last = beta;
            if beta > breakdown_tol {
                generic_run &= beta > suspicion_tol;
                v_next = work_n.iter().map(|x| x / beta).collect();
            } else {
                generic_run = false;
                state.beta_last = 0.0;
                match state.fresh_right(n) {
                    Some(v) => v_next = v,
                    None => exhausted = true,
                }
            }
        } else {
            // A v_j added nothing on the left: restart on the right.
            generic_run = false;
            state.b_cols.push(coeffs);
            state.beta_last = 0.0;
            match state.fresh_right(n) {
                Some(v) => v_next = v,
                None => exhausted = true,
            }
        }

        let dim = state.vs.len();
        // Safe to stop: the right basis spans R^n, its complement is
        // numerically empty, or the left basis is complete with nothing
        // left over — in each case B carries A exactly.
        let at_limit =
            dim >= n || exhausted || (state.us.len() == m && state.beta_last == 0.0);
        let check_now =
            generic_run && state.us.len() >= k && dim % check_every == 0;
        if at_limit || check_now {
            let triplets = ritz(&state);
            if at_limit {
                return Ok(assemble(&state, triplets, k, m, n));
            }
            let sigma_max = triplets.sigmas.first().copied().unwrap_or(0.0);
            let tol = SINGULAR_VALUE_TOLERANCE * sigma_max.max(breakdown_tol);
            let top_converged = triplets
                .sigmas
                .iter()
                .zip(&triplets.residuals)
                .take(k)
                .all(|(_, r)| *r <= tol);
            if top_converged {
                return Ok(assemble(&state, triplets, k, m, n));
            }
        }
    }

    let triplets = ritz(&state);
    Ok(assemble(&state, triplets, k, m, n))
}

fn assemble(state: &GklState, triplets: RitzTriplets, k: usize, m: usize, n: usize) -> SvdFactors {
    let avail = triplets.sigmas.len().min(k);
    let boundary_degenerate = match (triplets.sigmas.get(k - 1), triplets.sigmas.get(k)) {
        (Some(&kept), Some(&cut)) => {
            let scale = triplets.sigmas[0].max(f64::MIN_POSITIVE);
            (kept - cut).abs() <= 1e-8 * scale
        }
        _ => false,
    };
    let mut u = vec![0.0; m * avail];
    let mut v = vec![0.0; n * avail];
    for c in 0..avail {
        for (i, basis_vec) in state.us.iter().enumerate() {
            let w = triplets.p[(i, c)];
            if w == 0.0 {
                continue;
            }
            let col = &mut u[c * m..(c + 1) * m];
            for (cv, bv) in col.iter_mut().zip(basis_vec) {
                *cv += w * bv;
            }
        }
        for (i, basis_vec) in state.vs.iter().enumerate() {
            let w = triplets.q[(i, c)];
            if w == 0.0 {
                continue;
            }
            let col = &mut v[c * n..(c + 1) * n];
            for (cv, bv) in col.iter_mut().zip(basis_vec) {
                *cv += w * bv;
            }
        }
    }
    zero_padded(
        SvdFactors {
            rank: avail,
            u,
            s: triplets.sigmas[..avail].to_vec(),
            v,
            rows: m,
            cols: n,
            boundary_degenerate,
        },
        k,
    )
}

fn zero_padded(mut f: SvdFactors, k: usize) -> SvdFactors {
    while f.rank < k {
        f.u.extend(std::iter::repeat(0.0).take(f.rows));
        f.v.extend(std::iter::repeat(0.0).take(f.cols));
        f.s.push(0.0);
        f.rank += 1;
    }
    f
}

impl SvdFactors {
    /// Row `r` of U·diag(s): the singular-value-scaled left factor row.
    pub fn scaled_left_row(&self, r: usize) -> Vec<f64> {
        (0..self.rank)
            .map(|c| self.u[c * self.rows + r] * self.s[c])
            .collect()
    }

    /// Dense reconstruction U·diag(s)·Vᵀ (test-sized matrices only).
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for c in 0..self.rank {
            let s = self.s[c];
            if s == 0.0 {
                continue;
            }
            for i in 0..self.rows {
                let ui = self.u[c * self.rows + i] * s;
                if ui == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    out[i * self.cols + j] += ui * self.v[c * self.cols + j];
                }
            }
        }
        out
    }

    /// Max-norm orthogonality defect of the left factor, ‖UᵀU − I‖_max.
    pub fn left_orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.rank {
            if self.s[a] == 0.0 {
                continue;
            }
            for b in a..self.rank {
                if self.s[b] == 0.0 {
                    continue;
                }
                let d = dot(
                    &self.u[a * self.rows..(a + 1) * self.rows],
                    &self.u[b * self.rows..(b + 1) * self.rows],
                );
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}
