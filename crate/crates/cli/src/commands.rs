use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use semtrace_core::cooc::{read_pairs, CoocIndex, Pmi};
use semtrace_core::corpus::{corpus_stats, load_corpus, normalize_text, Corpus};
use semtrace_core::error::{CoreError, Result};
use semtrace_core::eval::{
    read_norms, read_vocab_items, run_association_eval, run_vocab_test, AssociationOptions,
};
use semtrace_core::semspace::serialize::{read_space, to_hex, write_space, write_space_json};
use semtrace_core::semspace::svd::truncated_svd_operator;
use semtrace_core::semspace::{
    build_count_matrix, cosine, SemanticSpace, WeightingScheme,
};
use semtrace_core::tracer::{
    ledger_summary, run_trace, validate_pairs, write_summary_csv, write_timeseries_csv,
    write_trace_csv, Checkpoint, TraceConfig, TraceOptions, DEFAULT_CHECKPOINT_EVERY,
    DEFAULT_DIMENSIONS, DEFAULT_INCREMENTAL_TOLERANCE, DEFAULT_START_LEN,
};

use crate::config::{resolve, FileConfig};
use crate::lock::DirLock;
use crate::manifest::RunManifest;
use crate::{BuildArgs, PmiArgs, QueryArgs, TraceArgs};

const OUT_ENV: &str = "SEMTRACE_OUT";

fn default_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_ENV).map(PathBuf::from)
}

fn open_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| {
        CoreError::Io(std::io::Error::new(
            e.kind(),
            format!("cannot open corpus {}: {e}", path.display()),
        ))
    })?;
    load_corpus(BufReader::new(file))
}

fn parse_weighting(name: Option<String>, file: Option<String>) -> Result<WeightingScheme> {
    resolve(name, file, "raw".to_string()).parse()
}

pub fn build(args: BuildArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let k = resolve(args.dimensions, file_cfg.dimensions, DEFAULT_DIMENSIONS);
    let weighting = parse_weighting(args.weighting, file_cfg.weighting)?;
    let out = resolve(
        args.out,
        file_cfg.out,
        default_out_dir().map(|d| d.join("space.bin")).unwrap_or_default(),
    );
    if out.as_os_str().is_empty() {
        return Err(CoreError::Parameter(format!(
            "no output path: pass --out or set {OUT_ENV}"
        )));
    }

    let t0 = Instant::now();
    let corpus = open_corpus(&args.corpus)?;
    let stats = corpus_stats(&corpus);
    eprintln!(
        "loaded {} paragraphs, {} tokens, {} words",
        stats.paragraphs, stats.token_occurrences, stats.vocabulary_size
    );
    let load_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let counts = build_count_matrix(&corpus)?;
    let weighted = weighting.strategy().apply(&counts)?;
    let factors = truncated_svd_operator(&weighted, k)?;
    if factors.boundary_degenerate {
        eprintln!(
            "warning: singular values repeat across the k = {k} truncation boundary; \
             the retained head is one deterministic choice among equivalent ones"
        );
    }
    let space = SemanticSpace::from_factors(
        &factors,
        k,
        corpus.vocabulary.clone(),
        weighting,
        corpus.fingerprint(),
        corpus.token_counts(),
    );
    let reduce_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_space(&space, BufWriter::new(File::create(&out)?))?;
    if let Some(json_path) = &args.json {
        write_space_json(&space, BufWriter::new(File::create(json_path)?))?;
    }

    let mut manifest = RunManifest::new(
        "build",
        to_hex(&corpus.fingerprint()),
        serde_json::json!({
            "corpus": args.corpus.display().to_string(),
            "dimensions": k,
            "weighting": weighting.name(),
            "out": out.display().to_string(),
        }),
    );
    manifest.record_timing("load_corpus", load_secs);
    manifest.record_timing("reduce", reduce_secs);
    manifest.record_artifact(&out)?;
    if let Some(json_path) = &args.json {
        manifest.record_artifact(json_path)?;
    }
    manifest.record_timing("write", t2.elapsed().as_secs_f64());
    let manifest_path = out.with_extension("manifest.json");
    manifest.write(&manifest_path)?;
    eprintln!(
        "wrote {} (k = {k_}, manifest {})",
        out.display(),
        manifest_path.display(),
        k_ = k
    );
    Ok(())
}

/// A single normalized token resolves as a word vector (strict on
/// unknown words); anything longer is composed by text_vector.
fn resolve_text_vector(space: &SemanticSpace, raw: &str) -> Result<Vec<f64>> {
    let tokens = normalize_text(raw);
    match tokens.as_slice() {
        [] => Err(CoreError::Parameter(format!(
            "{raw:?} contains no usable token"
        ))),
        [word] => Ok(space.word_vector(word)?.to_vec()),
        _ => {
            let tv = space.text_vector(&tokens)?;
            if !tv.skipped.is_empty() {
                eprintln!("note: out-of-vocabulary tokens skipped: {:?}", tv.skipped);
            }
            Ok(tv.vector)
        }
    }
}

pub fn query(args: QueryArgs) -> Result<()> {
    let space = read_space(BufReader::new(File::open(&args.space)?))?;
    let u = resolve_text_vector(&space, &args.text1)?;
    let v = resolve_text_vector(&space, &args.text2)?;
    println!("{:.6}", cosine(&u, &v)?);
    Ok(())
}

pub fn pmi(args: PmiArgs) -> Result<()> {
    let corpus = open_corpus(&args.corpus)?;
    let pairs = read_pairs(BufReader::new(File::open(&args.pairs)?))?;
    let index = CoocIndex::build(&corpus, corpus.len())?;

    let stdout = std::io::stdout();
    let mut w = csv::Writer::from_writer(stdout.lock());
    w.write_record(["w1", "w2", "n_x", "n_y", "n_xy", "N", "pmi"])
        .map_err(|e| CoreError::State(format!("CSV write failed: {e}")))?;
    for (w1, w2) in &pairs {
        let record = match index.pmi(w1, w2) {
            Ok(detail) => {
                let value = match detail.value {
                    Pmi::Defined(v) => format!("{v:.6}"),
                    Pmi::Undefined => "undefined".to_string(),
                };
                [
                    w1.clone(),
                    w2.clone(),
                    detail.n_x.to_string(),
                    detail.n_y.to_string(),
                    detail.n_xy.to_string(),
                    detail.n_paragraphs.to_string(),
                    value,
                ]
            }
            Err(_) => [
                w1.clone(),
                w2.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error".to_string(),
            ],
        };
        w.write_record(record)
            .map_err(|e| CoreError::State(format!("CSV write failed: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace(args: TraceArgs) -> Result<()> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let out_dir = resolve(args.out, file_cfg.out.clone(), PathBuf::new());
    let out_dir = if out_dir.as_os_str().is_empty() {
        default_out_dir().ok_or_else(|| {
            CoreError::Parameter(format!("no output directory: pass --out or set {OUT_ENV}"))
        })?
    } else {
        out_dir
    };

    let t0 = Instant::now();
    let corpus = open_corpus(&args.corpus)?;
    let load_secs = t0.elapsed().as_secs_f64();

    let config = TraceConfig {
        start_len: resolve(args.start, file_cfg.start, DEFAULT_START_LEN),
        end_len: resolve(args.end, file_cfg.end, corpus.len()),
        k: resolve(args.dimensions, file_cfg.dimensions, DEFAULT_DIMENSIONS),
        weighting: parse_weighting(args.weighting, file_cfg.weighting.clone())?,
        mode: resolve(args.mode, file_cfg.mode.clone(), "exact".to_string()),
        incremental_tolerance: resolve(
            args.incremental_tolerance,
            file_cfg.incremental_tolerance,
            DEFAULT_INCREMENTAL_TOLERANCE,
        ),
        checkpoint_every: resolve(
            args.checkpoint_every,
            file_cfg.checkpoint_every,
            DEFAULT_CHECKPOINT_EVERY,
        ),
    };
    config.validate(&corpus)?;

    let raw_pairs = read_pairs(BufReader::new(File::open(&args.pairs)?))?;
    let (pairs, rejected) = validate_pairs(&corpus, &raw_pairs, config.start_len);
    for r in &rejected {
        eprintln!("rejected pair {} / {}: {}", r.w1, r.w2, r.reason);
    }
    if pairs.is_empty() {
        return Err(CoreError::Validation(format!(
            "no tractable pair: {} of {} rejected",
            rejected.len(),
            raw_pairs.len()
        )));
    }

    let _lock = DirLock::acquire(&out_dir)?;
    let fingerprint = to_hex(&corpus.fingerprint());

    // resume when a matching checkpoint is present
    let resume = match Checkpoint::find_latest(&out_dir)? {
        Some(path) => {
            let cp = Checkpoint::load(&path)?;
            cp.validate_against(&fingerprint, &config, &pairs)
                .map_err(|e| {
                    CoreError::Validation(format!(
                        "cannot resume from {}: {e} (use a fresh output directory to start over)",
                        path.display()
                    ))
                })?;
            eprintln!(
                "resuming from checkpoint at {} paragraphs ({})",
                cp.prefix_len,
                path.display()
            );
            Some(cp)
        }
        None => None,
    };

    let t1 = Instant::now();
    let every = config.checkpoint_every;
    let start_len = config.start_len;
    let mut progress = |prefix: usize, end: usize| {
        if (prefix - start_len) % every == 0 || prefix == end {
            eprintln!("step {} / {} (prefix {prefix})", prefix - start_len, end - start_len);
        }
    };
    let outcome = run_trace(
        &corpus,
        &pairs,
        &config,
        TraceOptions {
            resume,
            checkpoint_dir: Some(&out_dir),
            stop_at_prefix: None,
            progress: Some(&mut progress),
        },
    )?;
    let trace_secs = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let ledger = &outcome.ledger;
    let trace_path = out_dir.join("trace.csv");
    write_trace_csv(ledger, BufWriter::new(File::create(&trace_path)?))?;
    let summary = ledger_summary(ledger)?;
    let summary_path = out_dir.join("summary.csv");
    write_summary_csv(&summary, BufWriter::new(File::create(&summary_path)?))?;
    let mut series_paths = Vec::new();
    for p in &ledger.pairs {
        let path = out_dir.join(format!("timeseries_{}_{}.csv", p.pair.w1, p.pair.w2));
        write_timeseries_csv(ledger, &p.pair, BufWriter::new(File::create(&path)?))?;
        series_paths.push(path);
    }

    let mut manifest = RunManifest::new(
        "trace",
        fingerprint,
        serde_json::to_value(&config)
            .map_err(|e| CoreError::State(format!("config echo failed: {e}")))?,
    );
    manifest.record_timing("load_corpus", load_secs);
    manifest.record_timing("trace", trace_secs);
    manifest.record_artifact(&trace_path)?;
    manifest.record_artifact(&summary_path)?;
    for p in &series_paths {
        manifest.record_artifact(p)?;
    }
    manifest.record_checkpoints(&outcome.checkpoints);
    if !ledger.fallback_events.is_empty() {
        eprintln!(
            "note: {} stepper maintenance/fallback events (see manifest)",
            ledger.fallback_events.len()
        );
    }
    manifest.record_timing("write_outputs", t2.elapsed().as_secs_f64());
    manifest.write(&out_dir.join("manifest.json"))?;

    eprintln!(
        "traced {} steps x {} pairs into {}",
        ledger.steps.len(),
        ledger.pairs.len(),
        out_dir.display()
    );
    Ok(())
}

pub fn eval_vocab(space_path: &Path, items_path: &Path) -> Result<()> {
    let space = read_space(BufReader::new(File::open(space_path)?))?;
    let items = read_vocab_items(BufReader::new(File::open(items_path)?))?;
    let report = run_vocab_test(&space, &items)?;
    eprintln!(
        "vocabulary test: accuracy {:.3} over {} items ({} skipped, {} ties)",
        report.accuracy,
        report.evaluated,
        report.skipped.len(),
        report.ties
    );
    let stdout = std::io::stdout();
    serde_json::to_writer_pretty(stdout.lock(), &report)
        .map_err(|e| CoreError::State(format!("report serialization failed: {e}")))?;
    println!();
    Ok(())
}

pub fn eval_assoc(space_path: &Path, norms_path: &Path, freq_percentile: Option<f64>) -> Result<()> {
    let space = read_space(BufReader::new(File::open(space_path)?))?;
    let norms = read_norms(BufReader::new(File::open(norms_path)?))?;
    let report = run_association_eval(
        &space,
        &norms,
        AssociationOptions {
            frequency_percentile: freq_percentile,
        },
    )?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    eprintln!(
        "association norms: best1 {} best2 {} best3 {} worst3 {} | r = {} over {} pairs",
        fmt(report.mean_best1),
        fmt(report.mean_best2),
        fmt(report.mean_best3),
        fmt(report.mean_worst3),
        fmt(report.pearson_r),
        report.pair_count
    );
    let stdout = std::io::stdout();
    serde_json::to_writer_pretty(stdout.lock(), &report)
        .map_err(|e| CoreError::State(format!("report serialization failed: {e}")))?;
    println!();
    Ok(())
}
