//! Space-advance strategies for the paragraph-by-paragraph trace.
//!
//! Each strategy sits behind [`SpaceStepper`], is registered by name and
//! selected at runtime (`--mode` on the CLI):
//!
//! * `exact` — recompute the truncated SVD of the weighted prefix matrix
//!   from scratch at every step; the reference semantics.
//! * `incremental` — maintain thin SVD factors and fold each new
//!   paragraph column in with a rank-one append update (Brand 2006),
//!   re-orthogonalizing when drift accumulates and falling back to a
//!   full recompute when it cannot be repaired. Validated against
//!   `exact`, never trusted blindly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{CoreError, Result};
use crate::semspace::matrix::{build_count_matrix, TermDocMatrix};
use crate::semspace::svd::truncated_svd_operator;
use crate::semspace::{SemanticSpace, WeightingScheme};

/// Shared read-only inputs for a trace run.
pub struct TraceContext {
    raw_matrix: TermDocMatrix,
    pub weighting: WeightingScheme,
    pub k: usize,
    vocabulary: std::sync::Arc<crate::corpus::Vocabulary>,
    fingerprint: [u8; 32],
    token_counts: Vec<u64>,
}

impl TraceContext {
    pub fn new(corpus: &Corpus, k: usize, weighting: WeightingScheme) -> Result<Self> {
        Ok(TraceContext {
            raw_matrix: build_count_matrix(corpus)?,
            weighting,
            k,
            vocabulary: std::sync::Arc::clone(&corpus.vocabulary),
            fingerprint: corpus.fingerprint(),
            token_counts: corpus.token_counts(),
        })
    }

    pub fn rows(&self) -> usize {
        self.raw_matrix.rows()
    }

    pub fn weighted_prefix(&self, n: usize) -> Result<TermDocMatrix> {
        self.weighting.strategy().apply(&self.raw_matrix.prefix(n)?)
    }

    /// Raw count column of paragraph `id` as a dense vector.
    fn raw_column(&self, id: usize) -> DVector<f64> {
        let mut c = DVector::zeros(self.raw_matrix.rows());
        for (r, v) in self.raw_matrix.column(id) {
            c[r as usize] = v;
        }
        c
    }

    /// Public space view from left factors (column-major u, m×rank).
    fn space_from_left(&self, u: &[f64], s: &[f64], rank: usize) -> SemanticSpace {
        SemanticSpace::from_left_factors(
            u,
            s,
            self.rows(),
            rank,
            self.k,
            std::sync::Arc::clone(&self.vocabulary),
            self.weighting,
            self.fingerprint,
            self.token_counts.clone(),
        )
    }
}

/// A maintenance or recovery action taken by a stepper, kept in the
/// ledger metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackEvent {
    /// prefix length after the step during which the event fired
    pub prefix_len: usize,
    pub kind: FallbackKind,
    /// orthogonality defect that triggered it
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackKind {
    Reorthogonalized,
    ExactRecompute,
}

/// Serializable stepper state for checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "stepper", rename_all = "snake_case")]
pub enum StepperSnapshot {
    Exact,
    Incremental {
        rows: usize,
        rank: usize,
        /// column-major rows×rank
        u: Vec<f64>,
        s: Vec<f64>,
    },
}

/// One strategy for advancing the semantic space by one paragraph.
pub trait SpaceStepper {
    /// Registry name, as accepted on the command line.
    fn name(&self) -> &'static str;

    /// Build the space over the starting prefix.
    fn init(&mut self, ctx: &TraceContext, prefix_len: usize) -> Result<SemanticSpace>;

    /// Advance from prefix `new_prefix_len - 1` to `new_prefix_len`.
    fn step(&mut self, ctx: &TraceContext, new_prefix_len: usize) -> Result<SemanticSpace>;

    /// Maintenance and fallback events so far.
    fn events(&self) -> &[FallbackEvent];

    fn snapshot(&self) -> StepperSnapshot;

    /// Restore from a checkpoint snapshot taken at `prefix_len`.
    fn restore(
        &mut self,
        snapshot: StepperSnapshot,
        events: Vec<FallbackEvent>,
        ctx: &TraceContext,
        prefix_len: usize,
    ) -> Result<()>;
}

type StepperFactory = fn() -> Box<dyn SpaceStepper>;

static REGISTRY: &[(&str, StepperFactory)] = &[
    ("exact", || Box::new(ExactStepper)),
    ("incremental", || Box::new(IncrementalStepper::new())),
];

/// Instantiate a stepper by registry name.
pub fn stepper_by_name(name: &str) -> Option<Box<dyn SpaceStepper>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, factory)| factory())
}

/// Names of all registered step modes.
pub fn stepper_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

/// Reference semantics: truncated SVD of the weighted prefix matrix,
/// recomputed in full at every step.
struct ExactStepper;

impl SpaceStepper for ExactStepper {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn init(&mut self, ctx: &TraceContext, prefix_len: usize) -> Result<SemanticSpace> {
        let weighted = ctx.weighted_prefix(prefix_len)?;
        let f = truncated_svd_operator(&weighted, ctx.k)?;
        Ok(ctx.space_from_left(&f.u, &f.s, f.rank))
    }

    fn step(&mut self, ctx: &TraceContext, new_prefix_len: usize) -> Result<SemanticSpace> {
        self.init(ctx, new_prefix_len)
    }

    fn events(&self) -> &[FallbackEvent] {
        &[]
    }

    fn snapshot(&self) -> StepperSnapshot {
        StepperSnapshot::Exact
    }

    fn restore(
        &mut self,
        snapshot: StepperSnapshot,
        _events: Vec<FallbackEvent>,
        _ctx: &TraceContext,
        _prefix_len: usize,
    ) -> Result<()> {
        match snapshot {
            StepperSnapshot::Exact => Ok(()),
            other => Err(CoreError::Validation(format!(
                "checkpoint stepper state {other:?} does not match mode \"exact\""
            ))),
        }
    }
}

/// Relative cutoff under which a singular value counts as numerically
/// zero and its triplet is dropped from the incremental factors.
const DROP_TOL: f64 = 1e-12;
/// Orthogonality defect beyond which the factors are re-orthogonalized.
const REORTH_THRESHOLD: f64 = 1e-11;
/// Defect beyond which re-orthogonalization is not trusted and the
/// factors are rebuilt from the matrix.
const RECOMPUTE_THRESHOLD: f64 = 1e-8;
/// Full defect checks are amortized over this many steps.
const DEFECT_CHECK_INTERVAL: usize = 8;

/// Column-append SVD updating. The internal factors track the full
/// numerical rank of the prefix (each update is then exact up to
/// rounding); the public space is their top-k view.
struct IncrementalStepper {
    u: DMatrix<f64>,
    s: DVector<f64>,
    events: Vec<FallbackEvent>,
    initialized: bool,
}

impl IncrementalStepper {
    fn new() -> Self {
        IncrementalStepper {
            u: DMatrix::zeros(0, 0),
            s: DVector::zeros(0),
            events: Vec::new(),
            initialized: false,
        }
    }

    fn rank(&self) -> usize {
        self.s.len()
    }

    fn recompute(&mut self, ctx: &TraceContext, prefix_len: usize) -> Result<()> {
        let weighted = ctx.weighted_prefix(prefix_len)?;
        let full = ctx.rows().min(prefix_len);
        let f = truncated_svd_operator(&weighted, full)?;
        let kept = f.s.iter().take_while(|&&s| s > DROP_TOL * f.s[0].max(1e-300)).count();
        self.u = DMatrix::from_column_slice(f.rows, kept, &f.u[..f.rows * kept]);
        self.s = DVector::from_column_slice(&f.s[..kept]);
        Ok(())
    }

    fn drop_negligible(&mut self) {
        let r = self.rank();
        if r == 0 {
            return;
        }
        let cutoff = DROP_TOL * self.s[0];
        let kept = (0..r).take_while(|&i| self.s[i] > cutoff).count().max(1);
        if kept < r {
            self.u = self.u.columns(0, kept).into_owned();
            self.s = self.s.rows(0, kept).into_owned();
        }
    }

    fn orthogonality_defect(&self) -> f64 {
        let gram = self.u.transpose() * &self.u;
        let mut worst = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// QR-polish the left factor and rotate the singular values along.
    fn reorthogonalize(&mut self) {
        let qr = self.u.clone().qr();
        let q = qr.q();
        let r = qr.r();
        let scaled = r * DMatrix::from_diagonal(&self.s);
        let svd = scaled.svd(true, false);
        let (p, sig) = (svd.u.expect("left vectors requested"), svd.singular_values);
        let mut order: Vec<usize> = (0..sig.len()).collect();
        order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).expect("finite"));
        let mut u_new = DMatrix::zeros(self.u.nrows(), order.len());
        let mut s_new = DVector::zeros(order.len());
        let qp = q * p;
        for (col, &idx) in order.iter().enumerate() {
            u_new.set_column(col, &qp.column(idx));
            s_new[col] = sig[idx];
        }
        self.u = u_new;
        self.s = s_new;
        self.drop_negligible();
    }

    /// Fold in one new column: project onto the current left space,
    /// split off the orthogonal remainder, and diagonalize the small
    /// augmented core.
    fn append_column(&mut self, c: &DVector<f64>) {
        let c_norm = c.norm();
        if c_norm == 0.0 {
            return; // empty paragraph: the factorization is unchanged
        }
        let r = self.rank();
        let mut p = self.u.transpose() * c;
        let mut residual = c - &self.u * &p;
        // second orthogonalization pass
        let corr = self.u.transpose() * &residual;
        residual -= &self.u * &corr;
        p += corr;
        let rho = residual.norm();
        let scale = self.s.get(0).copied().unwrap_or(0.0).max(c_norm);

        if rho > DROP_TOL * scale {
            // the column opens a new left direction
            let mut core = DMatrix::zeros(r + 1, r + 1);
            for i in 0..r {
                core[(i, i)] = self.s[i];
                core[(i, r)] = p[i];
            }
            core[(r, r)] = rho;
            let j = residual / rho;
            let svd = core.svd(true, false);
            let (pk, sig) = (svd.u.expect("left vectors"), svd.singular_values);
            let mut order: Vec<usize> = (0..sig.len()).collect();
            order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).expect("finite"));
            let mut extended = DMatrix::zeros(self.u.nrows(), r + 1);
            extended.columns_mut(0, r).copy_from(&self.u);
            extended.set_column(r, &j);
            let mut u_new = DMatrix::zeros(self.u.nrows(), r + 1);
            let mut s_new = DVector::zeros(r + 1);
            let rotated = extended * pk;
            for (col, &idx) in order.iter().enumerate() {
                u_new.set_column(col, &rotated.column(idx));
                s_new[col] = sig[idx];
            }
            self.u = u_new;
            self.s = s_new;
        } else {
            // the column lies in the current left span
            let mut core = DMatrix::zeros(r, r + 1);
            for i in 0..r {
                core[(i, i)] = self.s[i];
                core[(i, r)] = p[i];
            }
            let svd = core.svd(true, false);
            let (pk, sig) = (svd.u.expect("left vectors"), svd.singular_values);
            let mut order: Vec<usize> = (0..sig.len()).collect();
            order.sort_by(|&a, &b| sig[b].partial_cmp(&sig[a]).expect("finite"));
            let rotated = &self.u * pk;
            let mut u_new = DMatrix::zeros(self.u.nrows(), order.len());
            let mut s_new = DVector::zeros(order.len());
            for (col, &idx) in order.iter().enumerate() {
                u_new.set_column(col, &rotated.column(idx));
                s_new[col] = sig[idx];
            }
            self.u = u_new;
            self.s = s_new;
        }
        self.drop_negligible();
    }
}

impl SpaceStepper for IncrementalStepper {
    fn name(&self) -> &'static str {
        "incremental"
    }

    fn init(&mut self, ctx: &TraceContext, prefix_len: usize) -> Result<SemanticSpace> {
        if ctx.weighting != WeightingScheme::Raw {
            return Err(CoreError::Parameter(
                "incremental mode requires raw weighting: entropy weights change globally \
                 with every added paragraph, which a column-append update cannot express"
                    .into(),
            ));
        }
        self.recompute(ctx, prefix_len)?;
        self.initialized = true;
        self.events.clear();
        Ok(ctx.space_from_left(self.u.as_slice(), self.s.as_slice(), self.rank()))
    }

    fn step(&mut self, ctx: &TraceContext, new_prefix_len: usize) -> Result<SemanticSpace> {
        if !self.initialized {
            return Err(CoreError::State(
                "incremental stepper used before init".into(),
            ));
        }
        let column = ctx.raw_column(new_prefix_len - 1);
        self.append_column(&column);

        // keyed on absolute prefix length so a resumed run checks (and
        // possibly re-orthogonalizes) at exactly the same steps as an
        // uninterrupted one
        if new_prefix_len % DEFECT_CHECK_INTERVAL == 0 {
            let defect = self.orthogonality_defect();
            if defect > RECOMPUTE_THRESHOLD {
                self.recompute(ctx, new_prefix_len)?;
                self.events.push(FallbackEvent {
                    prefix_len: new_prefix_len,
                    kind: FallbackKind::ExactRecompute,
                    defect,
                });
            } else if defect > REORTH_THRESHOLD {
                self.reorthogonalize();
                self.events.push(FallbackEvent {
                    prefix_len: new_prefix_len,
                    kind: FallbackKind::Reorthogonalized,
                    defect,
                });
            }
        }
        Ok(ctx.space_from_left(self.u.as_slice(), self.s.as_slice(), self.rank()))
    }

    fn events(&self) -> &[FallbackEvent] {
        &self.events
    }

    fn snapshot(&self) -> StepperSnapshot {
        StepperSnapshot::Incremental {
            rows: self.u.nrows(),
            rank: self.rank(),
            u: self.u.as_slice().to_vec(),
            s: self.s.as_slice().to_vec(),
        }
    }

    fn restore(
        &mut self,
        snapshot: StepperSnapshot,
        events: Vec<FallbackEvent>,
        _ctx: &TraceContext,
        _prefix_len: usize,
    ) -> Result<()> {
        match snapshot {
            StepperSnapshot::Incremental { rows, rank, u, s } => {
                if u.len() != rows * rank || s.len() != rank {
                    return Err(CoreError::Validation(
                        "inconsistent incremental stepper snapshot".into(),
                    ));
                }
                self.u = DMatrix::from_column_slice(rows, rank, &u);
                self.s = DVector::from_column_slice(&s);
                self.events = events;
                self.initialized = true;
                Ok(())
            }
            other => Err(CoreError::Validation(format!(
                "checkpoint stepper state {other:?} does not match mode \"incremental\""
            ))),
        }
    }
}
