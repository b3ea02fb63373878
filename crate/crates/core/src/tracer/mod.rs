//! The paragraph-by-paragraph similarity trace.
//!
//! Starting from a prefix of the corpus, each step appends one paragraph,
//! rebuilds (or updates) the semantic space, and books every traced
//! pair's cosine change to the category of the appended paragraph. The
//! per-category sums telescope: they add up to exactly the difference
//! between the final and initial cosine of the pair.

pub mod checkpoint;
pub mod stepper;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cooc::{Category, CoocIndex, CATEGORY_COUNT};
use crate::corpus::Corpus;
use crate::error::{CoreError, Result};
use crate::semspace::WeightingScheme;

pub use checkpoint::Checkpoint;
pub use stepper::{
    stepper_by_name, stepper_names, FallbackEvent, FallbackKind, SpaceStepper, StepperSnapshot,
    TraceContext,
};

/// Trace parameters. `mode` names a registered stepper strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub start_len: usize,
    pub end_len: usize,
    pub k: usize,
    pub weighting: WeightingScheme,
    pub mode: String,
    pub incremental_tolerance: f64,
    pub checkpoint_every: usize,
}

pub const DEFAULT_START_LEN: usize = 2000;
pub const DEFAULT_DIMENSIONS: usize = 400;
pub const DEFAULT_INCREMENTAL_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_CHECKPOINT_EVERY: usize = 100;

impl TraceConfig {
    pub fn new(start_len: usize, end_len: usize, k: usize) -> Self {
        TraceConfig {
            start_len,
            end_len,
            k,
            weighting: WeightingScheme::Raw,
            mode: "exact".into(),
            incremental_tolerance: DEFAULT_INCREMENTAL_TOLERANCE,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
        }
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.start_len < 1 || self.start_len >= self.end_len || self.end_len > corpus.len() {
            return Err(CoreError::Parameter(format!(
                "need 1 <= start < end <= corpus size; got start {}, end {}, corpus {}",
                self.start_len,
                self.end_len,
                corpus.len()
            )));
        }
        if self.k < 1 || self.k > corpus.vocabulary.len().min(self.start_len) {
            return Err(CoreError::Parameter(format!(
                "k = {} infeasible: must be in 1..={} (min of vocabulary size and start length)",
                self.k,
                corpus.vocabulary.len().min(self.start_len)
            )));
        }
        if stepper_by_name(&self.mode).is_none() {
            return Err(CoreError::Parameter(format!(
                "unknown mode {:?} (expected one of {:?})",
                self.mode,
                stepper_names()
            )));
        }
        if self.mode == "incremental" && self.weighting != WeightingScheme::Raw {
            return Err(CoreError::Parameter(
                "incremental mode supports only raw weighting".into(),
            ));
        }
        if self.checkpoint_every == 0 {
            return Err(CoreError::Parameter(
                "checkpoint interval must be at least 1".into(),
            ));
        }
        if !self.incremental_tolerance.is_finite() || self.incremental_tolerance <= 0.0 {
            return Err(CoreError::Parameter(
                "incremental tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A pair of words whose similarity is traced. Both members must occur
/// within the starting prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracedPair {
    pub w1: String,
    pub w2: String,
}

impl TracedPair {
    pub fn new(w1: impl Into<String>, w2: impl Into<String>) -> Self {
        TracedPair {
            w1: w1.into(),
            w2: w2.into(),
        }
    }
}

/// A pair rejected during pre-flight validation, with the reason.
#[derive(Debug, Clone, Serialize)]
pub struct RejectedPair {
    pub w1: String,
    pub w2: String,
    pub reason: String,
}

/// Split raw pairs into tractable ones and rejects. A pair is tractable
/// when its members differ, are in the vocabulary, and both occur within
/// the first `start_len` paragraphs.
pub fn validate_pairs(
    corpus: &Corpus,
    raw_pairs: &[(String, String)],
    start_len: usize,
) -> (Vec<TracedPair>, Vec<RejectedPair>) {
    let mut seen = vec![false; corpus.vocabulary.len()];
    for p in corpus.paragraphs.iter().take(start_len) {
        for t in &p.tokens {
            if let Some(i) = corpus.vocabulary.index_of(t) {
                seen[i as usize] = true;
            }
        }
    }
    let occurs_early = |w: &str| -> bool {
        corpus
            .vocabulary
            .index_of(w)
            .map(|i| seen[i as usize])
            .unwrap_or(false)
    };

    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for (w1, w2) in raw_pairs {
        let reason = if w1 == w2 {
            Some("pair members must differ".to_string())
        } else if corpus.vocabulary.index_of(w1).is_none() {
            Some(format!("{w1:?} is not in the vocabulary"))
        } else if corpus.vocabulary.index_of(w2).is_none() {
            Some(format!("{w2:?} is not in the vocabulary"))
        } else if !occurs_early(w1) {
            Some(format!("{w1:?} does not occur in the first {start_len} paragraphs"))
        } else if !occurs_early(w2) {
            Some(format!("{w2:?} does not occur in the first {start_len} paragraphs"))
        } else {
            None
        };
        match reason {
            None => ok.push(TracedPair::new(w1, w2)),
            Some(reason) => rejected.push(RejectedPair {
                w1: w1.clone(),
                w2: w2.clone(),
                reason,
            }),
        }
    }
    (ok, rejected)
}

/// Per-pair outcome of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub category: Category,
    pub cos_before: f64,
    pub cos_after: f64,
    pub delta: f64,
}

/// One appended paragraph: entries are aligned with the traced pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub paragraph_id: usize,
    pub entries: Vec<StepEntry>,
}

/// Accumulated outcome for one traced pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairLedger {
    pub pair: TracedPair,
    pub initial_cosine: f64,
    pub final_cosine: f64,
    /// accumulated similarity gain per category, indexed by
    /// [`Category::index`]
    pub gains: [f64; CATEGORY_COUNT],
}

impl PairLedger {
    pub fn total_gain(&self) -> f64 {
        self.final_cosine - self.initial_cosine
    }

    pub fn gain(&self, category: Category) -> f64 {
        self.gains[category.index()]
    }
}

/// Full trace output: per-pair accumulations plus the step time series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainLedger {
    pub config: TraceConfig,
    pub corpus_fingerprint: String,
    pub pairs: Vec<PairLedger>,
    pub steps: Vec<StepRecord>,
    pub fallback_events: Vec<FallbackEvent>,
    /// false when the run stopped early at a checkpoint
    pub completed: bool,
}

/// Execution knobs that are not part of the traced configuration.
#[derive(Default)]
pub struct TraceOptions<'a> {
    /// resume from this checkpoint instead of starting fresh
    pub resume: Option<Checkpoint>,
    /// write checkpoints here every `checkpoint_every` steps
    pub checkpoint_dir: Option<&'a Path>,
    /// stop (with a checkpoint) once the prefix reaches this length;
    /// used to exercise interruption
    pub stop_at_prefix: Option<usize>,
    /// called after every step with (current prefix, end)
    #[allow(clippy::type_complexity)]
    pub progress: Option<&'a mut dyn FnMut(usize, usize)>,
}

/// Outcome of [`run_trace`]: the ledger plus checkpoint bookkeeping.
pub struct TraceOutcome {
    pub ledger: GainLedger,
    pub checkpoints: Vec<PathBuf>,
}

/// Replay the growth of the corpus from `start_len` to `end_len`
/// paragraphs, attributing every cosine change of every traced pair to
/// the category of the paragraph that caused it.
///
/// Classification of a step's paragraph happens against the index state
/// *before* that paragraph is incorporated; the index is then extended
/// once per step. Deterministic for a fixed corpus, pair list and
/// configuration.
pub fn run_trace(
    corpus: &Corpus,
    pairs: &[TracedPair],
    config: &TraceConfig,
    mut options: TraceOptions<'_>,
) -> Result<TraceOutcome> {
    config.validate(corpus)?;
    if pairs.is_empty() {
        return Err(CoreError::Validation("no tractable pairs to trace".into()));
    }
    let raw: Vec<(String, String)> = pairs
        .iter()
        .map(|p| (p.w1.clone(), p.w2.clone()))
        .collect();
    let (_, rejected) = validate_pairs(corpus, &raw, config.start_len);
    if let Some(r) = rejected.first() {
        return Err(CoreError::Validation(format!(
            "pair {}/{} is not tractable: {}",
            r.w1, r.w2, r.reason
        )));
    }

    let fingerprint = crate::semspace::serialize::to_hex(&corpus.fingerprint());
    let ctx = TraceContext::new(corpus, config.k, config.weighting)?;
    let mut stepper =
        stepper_by_name(&config.mode).expect("mode validated against the registry");

    let mut index;
    let mut initial_cosines;
    let mut prev_cosines;
    let mut gains;
    let mut steps: Vec<StepRecord>;
    let mut cursor;

    match options.resume.take() {
        Some(cp) => {
            cp.validate_against(&fingerprint, config, pairs)?;
            if cp.prefix_len < config.start_len || cp.prefix_len > config.end_len {
                return Err(CoreError::Validation(format!(
                    "checkpoint prefix {} is outside the traced range",
                    cp.prefix_len
                )));
            }
            index = CoocIndex::from_snapshot(cp.index, std::sync::Arc::clone(&corpus.vocabulary))?;
            if index.prefix_len() != cp.prefix_len {
                return Err(CoreError::Validation(
                    "checkpoint index does not cover its declared prefix".into(),
                ));
            }
            stepper.restore(cp.stepper, cp.fallback_events, &ctx, cp.prefix_len)?;
            initial_cosines = cp.initial_cosines;
            prev_cosines = cp.prev_cosines;
            gains = cp.gains;
            steps = cp.steps;
            cursor = cp.prefix_len;
        }
        None => {
            index = CoocIndex::build(corpus, config.start_len)?;
            let space = stepper.init(&ctx, config.start_len)?;
            initial_cosines = Vec::with_capacity(pairs.len());
            for p in pairs {
                initial_cosines.push(space.word_cosine(&p.w1, &p.w2)?);
            }
            prev_cosines = initial_cosines.clone();
            gains = vec![[0.0; CATEGORY_COUNT]; pairs.len()];
            steps = Vec::with_capacity(config.end_len - config.start_len);
            cursor = config.start_len;
        }
    }

    let mut checkpoints = Vec::new();
    let mut completed = true;

    while cursor < config.end_len {
        if options.stop_at_prefix.is_some_and(|stop| cursor >= stop) {
            completed = false;
            break;
        }
        let paragraph = &corpus.paragraphs[cursor];

        // categories come from the pre-step corpus state
        let categories: Vec<Category> = pairs
            .iter()
            .map(|p| {
                index
                    .classify(paragraph, &p.w1, &p.w2)
                    .map(|c| c.category)
            })
            .collect::<Result<_>>()?;

        let space_after = stepper.step(&ctx, cursor + 1)?;

        let mut entries = Vec::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            let cos_before = prev_cosines[i];
            let cos_after = space_after.word_cosine(&p.w1, &p.w2)?;
            let delta = cos_after - cos_before;
            gains[i][categories[i].index()] += delta;
            prev_cosines[i] = cos_after;
            entries.push(StepEntry {
                category: categories[i],
                cos_before,
                cos_after,
                delta,
            });
        }
        steps.push(StepRecord {
            step: cursor - config.start_len,
            paragraph_id: cursor,
            entries,
        });

        index.extend(paragraph)?;
        cursor += 1;

        if let Some(cb) = options.progress.as_mut() {
            cb(cursor, config.end_len);
        }

        let due = (cursor - config.start_len) % config.checkpoint_every == 0;
        if due && cursor < config.end_len {
            if let Some(dir) = options.checkpoint_dir {
                let cp = Checkpoint {
                    version: checkpoint::CHECKPOINT_VERSION,
                    config: config.clone(),
                    corpus_fingerprint: fingerprint.clone(),
                    pairs: pairs.to_vec(),
                    prefix_len: cursor,
                    initial_cosines: initial_cosines.clone(),
                    prev_cosines: prev_cosines.clone(),
                    gains: gains.clone(),
                    steps: steps.clone(),
                    fallback_events: stepper.events().to_vec(),
                    index: index.snapshot(),
                    stepper: stepper.snapshot(),
                };
                checkpoints.push(cp.save(dir)?);
            }
        }
    }

    let pair_ledgers = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| PairLedger {
            pair: p.clone(),
            initial_cosine: initial_cosines[i],
            final_cosine: prev_cosines[i],
            gains: gains[i],
        })
        .collect();

    Ok(TraceOutcome {
        ledger: GainLedger {
            config: config.clone(),
            corpus_fingerprint: fingerprint,
            pairs: pair_ledgers,
            steps,
            fallback_events: stepper.events().to_vec(),
            completed,
        },
        checkpoints,
    })
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub w1: String,
    pub w2: String,
    pub total: f64,
    pub gains: [f64; CATEGORY_COUNT],
}

/// Per-pair gain distribution plus the arithmetic-mean AVERAGE row.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub average: SummaryRow,
}

pub fn ledger_summary(ledger: &GainLedger) -> Result<Summary> {
    if ledger.pairs.is_empty() {
        return Err(CoreError::Validation("ledger holds no pairs".into()));
    }
    let rows: Vec<SummaryRow> = ledger
        .pairs
        .iter()
        .map(|p| SummaryRow {
            w1: p.pair.w1.clone(),
            w2: p.pair.w2.clone(),
            total: p.total_gain(),
            gains: p.gains,
        })
        .collect();
    let n = rows.len() as f64;
    let mut average = SummaryRow {
        w1: "AVERAGE".into(),
        w2: String::new(),
        total: rows.iter().map(|r| r.total).sum::<f64>() / n,
        gains: [0.0; CATEGORY_COUNT],
    };
    for c in 0..CATEGORY_COUNT {
        average.gains[c] = rows.iter().map(|r| r.gains[c]).sum::<f64>() / n;
    }
    Ok(Summary { rows, average })
}

/// One plot-ready point of a pair's trajectory: the corpus size in
/// paragraphs, the cosine at that size, and the category of the paragraph
/// whose addition produced it (None for the starting point).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesPoint {
    pub paragraphs: usize,
    pub cosine: f64,
    pub category: Option<Category>,
}

/// The step series for one traced pair; its length is always
/// `end_len − start_len + 1` on a completed ledger.
pub fn export_timeseries(ledger: &GainLedger, pair: &TracedPair) -> Result<Vec<TimeseriesPoint>> {
    let idx = ledger
        .pairs
        .iter()
        .position(|p| &p.pair == pair)
        .ok_or_else(|| CoreError::Lookup {
            word: format!("{}/{}", pair.w1, pair.w2),
        })?;
    let mut out = Vec::with_capacity(ledger.steps.len() + 1);
    out.push(TimeseriesPoint {
        paragraphs: ledger.config.start_len,
        cosine: ledger.pairs[idx].initial_cosine,
        category: None,
    });
    for s in &ledger.steps {
        out.push(TimeseriesPoint {
            paragraphs: s.paragraph_id + 1,
            cosine: s.entries[idx].cos_after,
            category: Some(s.entries[idx].category),
        });
    }
    Ok(out)
}

/// Floats in CSV output carry 12 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// Write the full per-step ledger CSV:
/// `step,paragraph_id,pair_w1,pair_w2,category,cos_before,cos_after,delta`.
pub fn write_trace_csv<W: Write>(ledger: &GainLedger, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "paragraph_id",
        "pair_w1",
        "pair_w2",
        "category",
        "cos_before",
        "cos_after",
        "delta",
    ])
    .map_err(csv_err)?;
    for s in &ledger.steps {
        for (i, e) in s.entries.iter().enumerate() {
            w.write_record([
                s.step.to_string(),
                s.paragraph_id.to_string(),
                ledger.pairs[i].pair.w1.clone(),
                ledger.pairs[i].pair.w2.clone(),
                e.category.as_str().to_string(),
                format_float(e.cos_before),
                format_float(e.cos_after),
                format_float(e.delta),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write the summary CSV:
/// `w1,w2,total,occ_w1,occ_w2,direct,second_order,third_or_more`,
/// one row per pair plus the terminal AVERAGE row.
pub fn write_summary_csv<W: Write>(summary: &Summary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "w1",
        "w2",
        "total",
        "occ_w1",
        "occ_w2",
        "direct",
        "second_order",
        "third_or_more",
    ])
    .map_err(csv_err)?;
    for row in summary.rows.iter().chain(std::iter::once(&summary.average)) {
        w.write_record([
            row.w1.clone(),
            row.w2.clone(),
            format_float(row.total),
            format_float(row.gains[Category::XOnly.index()]),
            format_float(row.gains[Category::YOnly.index()]),
            format_float(row.gains[Category::DirectCooc.index()]),
            format_float(row.gains[Category::SecondOrder.index()]),
            format_float(row.gains[Category::ThirdOrMore.index()]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write one pair's trajectory CSV: `paragraphs,cosine,category`, where
/// the first row carries the INITIAL marker.
pub fn write_timeseries_csv<W: Write>(
    ledger: &GainLedger,
    pair: &TracedPair,
    out: W,
) -> Result<()> {
    let series = export_timeseries(ledger, pair)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["paragraphs", "cosine", "category"])
        .map_err(csv_err)?;
    for p in series {
        w.write_record([
            p.paragraphs.to_string(),
            format_float(p.cosine),
            p.category.map_or("INITIAL".to_string(), |c| c.as_str().to_string()),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CoreError {
    CoreError::State(format!("CSV write failed: {e}"))
}
