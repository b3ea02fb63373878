//! Trace checkpoints: everything needed to resume a run mid-way and
//! reproduce the uninterrupted outputs byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stepper::{FallbackEvent, StepperSnapshot};
use super::{StepRecord, TraceConfig, TracedPair};
use crate::cooc::CoocIndexSnapshot;
use crate::error::{CoreError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TraceConfig,
    pub corpus_fingerprint: String,
    pub pairs: Vec<TracedPair>,
    /// paragraphs incorporated so far; the next step appends this one
    pub prefix_len: usize,
    pub initial_cosines: Vec<f64>,
    /// cosine of each pair after the last completed step
    pub prev_cosines: Vec<f64>,
    pub gains: Vec<[f64; 5]>,
    pub steps: Vec<StepRecord>,
    pub fallback_events: Vec<FallbackEvent>,
    pub index: CoocIndexSnapshot,
    pub stepper: StepperSnapshot,
}

impl Checkpoint {
    pub fn file_name(prefix_len: usize) -> String {
        format!("checkpoint_{prefix_len:08}.json")
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(Self::file_name(self.prefix_len));
        let tmp = dir.join(format!(".{}.tmp", Self::file_name(self.prefix_len)));
        let file = fs::File::create(&tmp)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| CoreError::State(format!("checkpoint serialization failed: {e}")))?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let file = fs::File::open(path)?;
        let cp: Checkpoint = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| CoreError::format(None, format!("unreadable checkpoint: {e}")))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(CoreError::format(
                None,
                format!("unsupported checkpoint version {}", cp.version),
            ));
        }
        Ok(cp)
    }

    /// The most advanced checkpoint in `dir`, if any.
    pub fn find_latest(dir: &Path) -> Result<Option<PathBuf>> {
        if !dir.is_dir() {
            return Ok(None);
        }
        let mut best: Option<(usize, PathBuf)> = None;
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if let Some(num) = name
                .strip_prefix("checkpoint_")
                .and_then(|s| s.strip_suffix(".json"))
            {
                if let Ok(n) = num.parse::<usize>() {
                    if best.as_ref().map_or(true, |(b, _)| n > *b) {
                        best = Some((n, entry.path()));
                    }
                }
            }
        }
        Ok(best.map(|(_, p)| p))
    }

    /// A checkpoint may only seed a run with the same corpus, pairs and
    /// configuration.
    pub fn validate_against(
        &self,
        fingerprint: &str,
        config: &TraceConfig,
        pairs: &[TracedPair],
    ) -> Result<()> {
        if self.corpus_fingerprint != fingerprint {
            return Err(CoreError::Validation(
                "checkpoint was produced from a different corpus".into(),
            ));
        }
        if &self.config != config {
            return Err(CoreError::Validation(
                "checkpoint configuration does not match the requested run".into(),
            ));
        }
        if self.pairs != pairs {
            return Err(CoreError::Validation(
                "checkpoint traces a different pair set".into(),
            ));
        }
        let n = self.pairs.len();
        if self.initial_cosines.len() != n
            || self.prev_cosines.len() != n
            || self.gains.len() != n
        {
            return Err(CoreError::Validation("corrupt checkpoint tables".into()));
        }
        Ok(())
    }
}
