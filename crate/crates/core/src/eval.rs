//! Evaluation harnesses for a semantic space: a four-alternative
//! vocabulary test and a comparison against human association norms.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read};

use serde::{Deserialize, Serialize};

use crate::corpus::normalize_text;
use crate::error::{CoreError, Result};
use crate::semspace::{cosine, SemanticSpace};

/// The four definition kinds of a vocabulary item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefLabel {
    Correct,
    Close,
    Far,
    Unrelated,
}

impl DefLabel {
    pub const ALL: [DefLabel; 4] = [
        DefLabel::Correct,
        DefLabel::Close,
        DefLabel::Far,
        DefLabel::Unrelated,
    ];

    pub fn index(self) -> usize {
        match self {
            DefLabel::Correct => 0,
            DefLabel::Close => 1,
            DefLabel::Far => 2,
            DefLabel::Unrelated => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DefLabel::Correct => "correct",
            DefLabel::Close => "close",
            DefLabel::Far => "far",
            DefLabel::Unrelated => "unrelated",
        }
    }
}

impl fmt::Display for DefLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One vocabulary-test item: a stem word and four labeled definitions.
#[derive(Debug, Clone)]
pub struct VocabItem {
    pub stem: String,
    /// token lists indexed by [`DefLabel::index`]
    pub definitions: [Vec<String>; 4],
}

#[derive(Debug, Deserialize)]
struct VocabItemRecord {
    stem: String,
    correct: String,
    close: String,
    far: String,
    unrelated: String,
}

/// Parse the vocabulary-test file: a JSON array of records with `stem`,
/// `correct`, `close`, `far` and `unrelated` strings. Definitions are
/// normalized with the corpus rules.
pub fn read_vocab_items<R: Read>(source: R) -> Result<Vec<VocabItem>> {
    let records: Vec<VocabItemRecord> = serde_json::from_reader(source)
        .map_err(|e| CoreError::format(Some(e.line()), format!("vocabulary items: {e}")))?;
    if records.is_empty() {
        return Err(CoreError::format(None, "vocabulary item file is empty"));
    }
    let mut items = Vec::with_capacity(records.len());
    for r in records {
        let stem_tokens = normalize_text(&r.stem);
        let stem = match stem_tokens.as_slice() {
            [one] => one.clone(),
            _ => {
                return Err(CoreError::format(
                    None,
                    format!("stem {:?} does not normalize to a single word", r.stem),
                ))
            }
        };
        items.push(VocabItem {
            stem,
            definitions: [
                normalize_text(&r.correct),
                normalize_text(&r.close),
                normalize_text(&r.far),
                normalize_text(&r.unrelated),
            ],
        });
    }
    Ok(items)
}

/// Outcome of one multiple-choice comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipleChoice {
    /// index of the winning alternative
    pub chosen: usize,
    /// cosine per alternative; None when the alternative had no known word
    pub cosines: Vec<Option<f64>>,
    /// true when another alternative tied the winner exactly
    pub tie: bool,
}

/// Pick the alternative whose text vector is closest to the stem by
/// cosine. Ties break toward the lowest index and are flagged;
/// alternatives with no in-vocabulary word score as absent.
pub fn multiple_choice(
    space: &SemanticSpace,
    stem: &str,
    alternatives: &[Vec<String>],
) -> Result<MultipleChoice> {
    if alternatives.is_empty() {
        return Err(CoreError::Parameter("no alternatives given".into()));
    }
    let stem_vec = space.word_vector(stem)?;
    let mut cosines = Vec::with_capacity(alternatives.len());
    for alt in alternatives {
        match space.text_vector(alt) {
            Ok(tv) => cosines.push(Some(cosine(stem_vec, &tv.vector)?)),
            Err(CoreError::AllTokensOutOfVocabulary) => cosines.push(None),
            Err(e) => return Err(e),
        }
    }
    let mut best: Option<(usize, f64)> = None;
    let mut tie = false;
    for (i, c) in cosines.iter().enumerate() {
        let Some(c) = *c else { continue };
        match best {
            None => best = Some((i, c)),
            Some((_, b)) if c > b => {
                best = Some((i, c));
                tie = false;
            }
            Some((_, b)) if c == b => tie = true,
            Some(_) => {}
        }
    }
    match best {
        Some((chosen, _)) => Ok(MultipleChoice {
            chosen,
            cosines,
            tie,
        }),
        None => Err(CoreError::Validation(
            "every alternative is entirely out of vocabulary".into(),
        )),
    }
}

/// Aggregate vocabulary-test outcome.
#[derive(Debug, Clone, Serialize)]
pub struct VocabReport {
    /// fraction of evaluated items picking the correct definition
    pub accuracy: f64,
    /// fraction of picks per definition label (correct, close, far,
    /// unrelated); sums to 1 over evaluated items
    pub distribution: [f64; 4],
    pub evaluated: usize,
    pub skipped: Vec<SkippedItem>,
    pub ties: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedItem {
    pub stem: String,
    pub reason: String,
}

/// Run every item through [`multiple_choice`] against its own four
/// definitions; items whose stem is out of vocabulary are skipped and
/// reported.
pub fn run_vocab_test(space: &SemanticSpace, items: &[VocabItem]) -> Result<VocabReport> {
    if items.is_empty() {
        return Err(CoreError::Validation("no vocabulary items".into()));
    }
    let mut picks = [0usize; 4];
    let mut skipped = Vec::new();
    let mut ties = 0usize;
    for item in items {
        let alternatives: Vec<Vec<String>> = item.definitions.to_vec();
        match multiple_choice(space, &item.stem, &alternatives) {
            Ok(mc) => {
                picks[mc.chosen] += 1;
                ties += usize::from(mc.tie);
            }
            Err(CoreError::Lookup { word }) => skipped.push(SkippedItem {
                stem: item.stem.clone(),
                reason: format!("stem {word:?} is not in the vocabulary"),
            }),
            Err(CoreError::Validation(reason)) => skipped.push(SkippedItem {
                stem: item.stem.clone(),
                reason,
            }),
            Err(e) => return Err(e),
        }
    }
    let evaluated: usize = picks.iter().sum();
    if evaluated == 0 {
        return Err(CoreError::Validation(
            "every vocabulary item was skipped".into(),
        ));
    }
    let mut distribution = [0.0; 4];
    for (d, p) in distribution.iter_mut().zip(picks) {
        *d = p as f64 / evaluated as f64;
    }
    Ok(VocabReport {
        accuracy: distribution[DefLabel::Correct.index()],
        distribution,
        evaluated,
        skipped,
        ties,
    })
}

/// One inducing word with its human-ranked associates.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub inducing: String,
    pub associates: Vec<Associate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Associate {
    pub word: String,
    pub rank: u32,
    pub frequency: f64,
}

/// Parse association norms: tab-separated
/// `inducing associate rank frequency`, `#` comments, ranks strictly
/// increasing within an inducing word.
pub fn read_norms<R: BufRead>(source: R) -> Result<Vec<NormEntry>> {
    let mut by_word: BTreeMap<String, Vec<Associate>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| {
            CoreError::format(line_no, format!("cannot read norms file: {e}"))
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(CoreError::format(
                line_no,
                format!("expected 4 tab-separated columns, got {}", fields.len()),
            ));
        }
        let rank: u32 = fields[2].parse().map_err(|_| {
            CoreError::format(line_no, format!("bad rank {:?}", fields[2]))
        })?;
        let frequency: f64 = fields[3].parse().map_err(|_| {
            CoreError::format(line_no, format!("bad frequency {:?}", fields[3]))
        })?;
        let inducing = fields[0].to_string();
        if !by_word.contains_key(&inducing) {
            order.push(inducing.clone());
        }
        by_word.entry(inducing).or_default().push(Associate {
            word: fields[1].to_string(),
            rank,
            frequency,
        });
    }
    if order.is_empty() {
        return Err(CoreError::format(None, "norms file holds no entries"));
    }
    let mut entries = Vec::with_capacity(order.len());
    for inducing in order {
        let associates = by_word.remove(&inducing).expect("collected above");
        for w in associates.windows(2) {
            if w[1].rank <= w[0].rank {
                return Err(CoreError::format(
                    None,
                    format!("ranks for {inducing:?} are not strictly increasing"),
                ));
            }
        }
        entries.push(NormEntry {
            inducing,
            associates,
        });
    }
    Ok(entries)
}

/// Association-norm comparison outcome.
#[derive(Debug, Clone, Serialize)]
pub struct AssociationReport {
    /// mean cosine between inducing word and its best-ranked associate
    pub mean_best1: Option<f64>,
    pub mean_best2: Option<f64>,
    pub mean_best3: Option<f64>,
    /// mean cosine over the three worst-ranked associates
    pub mean_worst3: Option<f64>,
    /// Pearson correlation between human frequencies and cosines over
    /// the (possibly frequency-filtered) in-vocabulary pairs
    pub pearson_r: Option<f64>,
    /// pairs entering the correlation
    pub pair_count: usize,
    /// entries skipped entirely (inducing word out of vocabulary or no
    /// usable associate)
    pub entries_skipped: usize,
    /// associates dropped for being out of vocabulary
    pub associates_excluded: usize,
    /// entries too short for the best-3/worst-3 means (kept for the
    /// correlation)
    pub entries_below_rank_minimum: usize,
}

/// Options for [`run_association_eval`].
#[derive(Debug, Clone, Copy, Default)]
pub struct AssociationOptions {
    /// restrict the correlation to pairs whose two words both sit in the
    /// top fraction of the corpus frequency distribution (e.g. 0.2)
    pub frequency_percentile: Option<f64>,
}

/// Compare the space against human association norms: per-rank mean
/// cosines (best 1st/2nd/3rd, mean of the 3 worst) and the Pearson
/// correlation between response frequencies and cosines.
pub fn run_association_eval(
    space: &SemanticSpace,
    norms: &[NormEntry],
    options: AssociationOptions,
) -> Result<AssociationReport> {
    if norms.is_empty() {
        return Err(CoreError::Validation("no association norms".into()));
    }
    if let Some(q) = options.frequency_percentile {
        if !(0.0 < q && q <= 1.0) {
            return Err(CoreError::Parameter(format!(
                "frequency percentile must be in (0, 1], got {q}"
            )));
        }
    }
    let min_count = options
        .frequency_percentile
        .map(|q| frequency_cutoff(space.token_counts(), q));
    let frequent_enough = |word: &str| -> bool {
        match min_count {
            None => true,
            Some(cut) => space
                .vocabulary()
                .index_of(word)
                .map(|i| space.token_counts()[i as usize] >= cut)
                .unwrap_or(false),
        }
    };

    let mut best = [MeanAcc::default(), MeanAcc::default(), MeanAcc::default()];
    let mut worst3 = MeanAcc::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut entries_skipped = 0usize;
    let mut associates_excluded = 0usize;
    let mut entries_below_rank_minimum = 0usize;

    for entry in norms {
        let Ok(ind_vec) = space.word_vector(&entry.inducing) else {
            entries_skipped += 1;
            continue;
        };
        let mut usable: Vec<(&Associate, f64)> = Vec::new();
        for a in &entry.associates {
            match space.word_vector(&a.word) {
                Ok(v) => usable.push((a, cosine(ind_vec, v)?)),
                Err(_) => associates_excluded += 1,
            }
        }
        if usable.is_empty() {
            entries_skipped += 1;
            continue;
        }
        for (a, c) in &usable {
            if frequent_enough(&entry.inducing) && frequent_enough(&a.word) {
                xs.push(a.frequency);
                ys.push(*c);
            }
        }
        if usable.len() < 6 {
            entries_below_rank_minimum += 1;
            continue;
        }
        for (slot, acc) in best.iter_mut().enumerate() {
            acc.push(usable[slot].1);
        }
        for (_, c) in &usable[usable.len() - 3..] {
            worst3.push(*c);
        }
    }

    Ok(AssociationReport {
        mean_best1: best[0].mean(),
        mean_best2: best[1].mean(),
        mean_best3: best[2].mean(),
        mean_worst3: worst3.mean(),
        pearson_r: pearson(&xs, &ys),
        pair_count: xs.len(),
        entries_skipped,
        associates_excluded,
        entries_below_rank_minimum,
    })
}

/// Smallest token count a word needs to sit inside the top `q` fraction
/// of the vocabulary by corpus frequency.
fn frequency_cutoff(token_counts: &[u64], q: f64) -> u64 {
    if token_counts.is_empty() {
        return 0;
    }
    let mut sorted: Vec<u64> = token_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let keep = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[keep - 1]
}

#[derive(Default)]
struct MeanAcc {
    sum: f64,
    n: usize,
}

impl MeanAcc {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Pearson correlation coefficient; None when either side has no
/// variance or fewer than two points.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_from_token_lists;
    use crate::semspace::{build_space, WeightingScheme};

    fn space() -> SemanticSpace {
        let c = corpus_from_token_lists(&[
            vec!["chat", "souris", "jardin"],
            vec!["chat", "souris"],
            vec!["avion", "ciel", "nuage"],
            vec!["avion", "ciel"],
            vec!["jardin", "nuage"],
        ])
        .unwrap();
        build_space(&c, 3, WeightingScheme::Raw).unwrap()
    }

    fn tl(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stem_itself_wins_with_cosine_one() {
        let s = space();
        let alts = vec![tl(&["avion"]), tl(&["chat"]), tl(&["ciel"])];
        let mc = multiple_choice(&s, "chat", &alts).unwrap();
        assert_eq!(mc.chosen, 1);
        assert!((mc.cosines[1].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absent_alternative_is_reported_not_fatal() {
        let s = space();
        let alts = vec![tl(&["zzz", "yyy"]), tl(&["souris"])];
        let mc = multiple_choice(&s, "chat", &alts).unwrap();
        assert_eq!(mc.cosines[0], None);
        assert_eq!(mc.chosen, 1);
    }

    #[test]
    fn exact_tie_breaks_to_lowest_index_and_is_flagged() {
        let s = space();
        let alts = vec![tl(&["souris"]), tl(&["souris"]), tl(&["jardin"])];
        let mc = multiple_choice(&s, "chat", &alts).unwrap();
        assert_eq!(mc.chosen, 0);
        assert!(mc.tie);
        assert_eq!(mc.cosines[0], mc.cosines[1]);
    }

    #[test]
    fn all_absent_alternatives_error() {
        let s = space();
        let alts = vec![tl(&["zzz"]), tl(&["yyy"])];
        assert!(matches!(
            multiple_choice(&s, "chat", &alts),
            Err(CoreError::Validation(_))
        ));
    }

    #[test]
    fn oov_stem_is_lookup_error() {
        let s = space();
        assert!(matches!(
            multiple_choice(&s, "zzzz", &[tl(&["chat"])]),
            Err(CoreError::Lookup { .. })
        ));
    }

    #[test]
    fn single_item_distribution_is_unit_mass() {
        let s = space();
        let items = vec![VocabItem {
            stem: "chat".into(),
            definitions: [
                tl(&["chat", "souris"]),
                tl(&["avion"]),
                tl(&["ciel"]),
                tl(&["nuage"]),
            ],
        }];
        let r = run_vocab_test(&s, &items).unwrap();
        assert_eq!(r.evaluated, 1);
        let mass: f64 = r.distribution.iter().sum();
        assert!((mass - 1.0).abs() < 1e-15);
        assert_eq!(r.distribution.iter().filter(|d| **d == 1.0).count(), 1);
    }

    #[test]
    fn skipped_stems_are_counted() {
        let s = space();
        let items = vec![
            VocabItem {
                stem: "inconnu".into(),
                definitions: [tl(&["chat"]), tl(&["avion"]), tl(&["ciel"]), tl(&["nuage"])],
            },
            VocabItem {
                stem: "chat".into(),
                definitions: [
                    tl(&["souris"]),
                    tl(&["avion"]),
                    tl(&["ciel"]),
                    tl(&["nuage"]),
                ],
            },
        ];
        let r = run_vocab_test(&s, &items).unwrap();
        assert_eq!(r.evaluated, 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.skipped[0].stem, "inconnu");
    }

    #[test]
    fn vocab_items_json_round_trip() {
        let json = r#"[
            {"stem": "Chat", "correct": "petite souris", "close": "le jardin",
             "far": "un avion", "unrelated": "le ciel"}
        ]"#;
        let items = read_vocab_items(json.as_bytes()).unwrap();
        assert_eq!(items[0].stem, "chat");
        assert_eq!(items[0].definitions[0], tl(&["petite", "souris"]));
        assert!(read_vocab_items("[]".as_bytes()).is_err());
        assert!(read_vocab_items("{not json".as_bytes()).is_err());
    }

    #[test]
    fn norms_parse_and_validate_ranks() {
        let data = "# norms\nchat\tsouris\t1\t0.55\nchat\tjardin\t2\t0.20\n";
        let norms = read_norms(std::io::Cursor::new(data)).unwrap();
        assert_eq!(norms.len(), 1);
        assert_eq!(norms[0].associates.len(), 2);

        let bad = "chat\tsouris\t2\t0.5\nchat\tjardin\t1\t0.2\n";
        assert!(read_norms(std::io::Cursor::new(bad)).is_err());
        assert!(read_norms(std::io::Cursor::new("")).is_err());
    }

    #[test]
    fn pearson_perfect_and_degenerate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(pearson(&xs, &[1.0, 1.0, 1.0, 1.0]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }

    #[test]
    fn association_eval_counts_exclusions() {
        let s = space();
        let norms = vec![
            NormEntry {
                inducing: "chat".into(),
                associates: vec![
                    Associate {
                        word: "souris".into(),
                        rank: 1,
                        frequency: 0.6,
                    },
                    Associate {
                        word: "fantome".into(),
                        rank: 2,
                        frequency: 0.2,
                    },
                ],
            },
            NormEntry {
                inducing: "inconnu".into(),
                associates: vec![Associate {
                    word: "souris".into(),
                    rank: 1,
                    frequency: 0.9,
                }],
            },
        ];
        let r = run_association_eval(&s, &norms, AssociationOptions::default()).unwrap();
        assert_eq!(r.entries_skipped, 1);
        assert_eq!(r.associates_excluded, 1);
        assert_eq!(r.pair_count, 1);
        // one usable associate < 6: no rank means
        assert_eq!(r.mean_best1, None);
        assert_eq!(r.entries_below_rank_minimum, 1);
    }

    #[test]
    fn frequency_cutoff_selects_top_fraction() {
        let counts = vec![10, 50, 30, 5, 1];
        // top 40% of 5 words = 2 words: counts 50 and 30
        assert_eq!(frequency_cutoff(&counts, 0.4), 30);
        assert_eq!(frequency_cutoff(&counts, 1.0), 1);
    }
}
