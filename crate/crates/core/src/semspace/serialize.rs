//! Semantic-space persistence.
//!
//! The canonical form is a self-describing binary container:
//!
//! ```text
//! magic            8 bytes  "SEMSPACE"
//! format version   u32 LE
//! k                u32 LE
//! vocabulary size  u32 LE
//! weighting        u32 LE   (0 = raw, 1 = log-entropy)
//! fingerprint      32 bytes (SHA-256 of the normalized corpus)
//! token counts     vocab × u64 LE
//! vocabulary       per word: u32 LE byte length + UTF-8 bytes
//! singular values  k × f64 LE
//! word vectors     vocab × k × f64 LE, vocabulary order
//! ```
//!
//! Writing is deterministic: the same space yields the same bytes. A JSON
//! export is provided for interchange; the binary form is canonical.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SemanticSpace, WeightingScheme};
use crate::corpus::Vocabulary;
use crate::error::{CoreError, Result};

const MAGIC: &[u8; 8] = b"SEMSPACE";
const FORMAT_VERSION: u32 = 1;

fn scheme_code(w: WeightingScheme) -> u32 {
    match w {
        WeightingScheme::Raw => 0,
        WeightingScheme::LogEntropy => 1,
    }
}

fn scheme_from_code(code: u32) -> Result<WeightingScheme> {
    match code {
        0 => Ok(WeightingScheme::Raw),
        1 => Ok(WeightingScheme::LogEntropy),
        other => Err(CoreError::format(
            None,
            format!("unknown weighting code {other} in space file"),
        )),
    }
}

pub fn write_space<W: Write>(space: &SemanticSpace, mut out: W) -> Result<()> {
    let vocab = space.vocabulary();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(space.k() as u32).to_le_bytes())?;
    out.write_all(&(vocab.len() as u32).to_le_bytes())?;
    out.write_all(&scheme_code(space.weighting()).to_le_bytes())?;
    out.write_all(&space.corpus_fingerprint())?;
    for c in space.token_counts() {
        out.write_all(&c.to_le_bytes())?;
    }
    for form in vocab.forms() {
        out.write_all(&(form.len() as u32).to_le_bytes())?;
        out.write_all(form.as_bytes())?;
    }
    for s in space.singular_values() {
        out.write_all(&s.to_le_bytes())?;
    }
    for i in 0..vocab.len() {
        for x in space.word_vector_by_index(i as u32) {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| CoreError::format(None, "truncated space file"))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact_array::<4, _>(r)?))
}

pub fn read_space<R: Read>(mut input: R) -> Result<SemanticSpace> {
    let magic = read_exact_array::<8, _>(&mut input)?;
    if &magic != MAGIC {
        return Err(CoreError::format(None, "not a semantic-space file"));
    }
    let version = read_u32(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(CoreError::format(
            None,
            format!("unsupported space format version {version}"),
        ));
    }
    let k = read_u32(&mut input)? as usize;
    let vocab_len = read_u32(&mut input)? as usize;
    let weighting = scheme_from_code(read_u32(&mut input)?)?;
    let fingerprint = read_exact_array::<32, _>(&mut input)?;

    let mut token_counts = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        token_counts.push(u64::from_le_bytes(read_exact_array::<8, _>(&mut input)?));
    }
    let mut forms = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let len = read_u32(&mut input)? as usize;
        let mut buf = vec![0u8; len];
        input
            .read_exact(&mut buf)
            .map_err(|_| CoreError::format(None, "truncated space file"))?;
        forms.push(String::from_utf8(buf).map_err(|e| {
            CoreError::format(None, format!("invalid UTF-8 in vocabulary: {e}"))
        })?);
    }
    let mut singular_values = Vec::with_capacity(k);
    for _ in 0..k {
        singular_values.push(f64::from_le_bytes(read_exact_array::<8, _>(&mut input)?));
    }
    let mut word_vectors = Vec::with_capacity(vocab_len * k);
    for _ in 0..vocab_len * k {
        word_vectors.push(f64::from_le_bytes(read_exact_array::<8, _>(&mut input)?));
    }

    let vocabulary = Arc::new(Vocabulary::from_forms(forms)?);
    SemanticSpace::from_raw_parts(
        vocabulary,
        k,
        singular_values,
        word_vectors,
        weighting,
        fingerprint,
        token_counts,
    )
}

/// JSON interchange form of a space.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub format_version: u32,
    pub k: usize,
    pub weighting: WeightingScheme,
    /// hex-encoded SHA-256 of the normalized corpus
    pub corpus_fingerprint: String,
    pub vocabulary: Vec<String>,
    pub token_counts: Vec<u64>,
    pub singular_values: Vec<f64>,
    /// one k-array per vocabulary word
    pub vectors: Vec<Vec<f64>>,
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn space_to_json(space: &SemanticSpace) -> SpaceJson {
    let vocab = space.vocabulary();
    SpaceJson {
        format_version: FORMAT_VERSION,
        k: space.k(),
        weighting: space.weighting(),
        corpus_fingerprint: to_hex(&space.corpus_fingerprint()),
        vocabulary: vocab.forms().map(str::to_owned).collect(),
        token_counts: space.token_counts().to_vec(),
        singular_values: space.singular_values().to_vec(),
        vectors: (0..vocab.len())
            .map(|i| space.word_vector_by_index(i as u32).to_vec())
            .collect(),
    }
}

pub fn write_space_json<W: Write>(space: &SemanticSpace, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &space_to_json(space))
        .map_err(|e| CoreError::format(None, format!("JSON export failed: {e}")))
}
