//! Single-file persistence of a fitted ensemble.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes   "PLRTYBND"
//! format_version   u32
//! metadata_len     u64
//! metadata         JSON, metadata_len bytes
//! payload_len      u64       number of f64 values
//! payload          payload_len × f64
//! checksum         32 bytes  SHA-256 of every preceding byte
//! ```
//!
//! The metadata holds everything except the linear weights: preprocessing
//! settings and stopwords, the tf-idf vocabulary, the OOV policy, per-view
//! specs, weights, class order and calibration constants, the embedding
//! file digest, and an opaque configuration snapshot. Each binary head's
//! weights followed by its bias occupy a contiguous run of the payload.
//! Values are always stored as `f64`, whatever precision was trained.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bow::{BowError, TfIdfConfig, TfIdfModel};
use crate::corpus::SentimentLabel;
use crate::embedding::{EmbeddingFormat, OovPolicy};
use crate::ensemble::{EnsembleModel, View, ViewSpec};
use crate::linear::{BinaryHead, BinaryLinearModel, ModelKind, MulticlassModel, PlattCalibration, Strategy};
use crate::preprocess::Preprocessor;
use crate::scalar::Precision;
use crate::Scalar;

pub const MAGIC: &[u8; 8] = b"PLRTYBND";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX_LEN: usize = 8 + 4 + 8;
const CHECKSUM_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("not a model bundle (bad magic bytes)")]
    BadMagic,
    #[error("bundle format version {found} is newer than supported version {FORMAT_VERSION}")]
    UnsupportedVersion { found: u32 },
    #[error("bundle is truncated")]
    Truncated,
    #[error("bundle checksum mismatch (file is corrupted)")]
    Corrupted,
    #[error("bundle metadata is invalid: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error("bundle is inconsistent: {0}")]
    Inconsistent(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<BowError> for BundleError {
    fn from(e: BowError) -> Self {
        Self::Inconsistent(e.to_string())
    }
}

/// Identifies the embedding file a model was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingRef {
    /// SHA-256 of the file contents, lowercase hex.
    pub digest: String,
    pub dim: usize,
    pub format: EmbeddingFormat,
    pub vocab_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle<T> {
    pub model: EnsembleModel<T>,
    pub embedding: Option<EmbeddingRef>,
    pub config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    format_version: u32,
    precision: Precision,
    preprocessing: Preprocessor,
    tfidf: TfIdfMeta,
    oov: OovPolicy<f64>,
    embedding: Option<EmbeddingRef>,
    views: Vec<ViewMeta>,
    config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct TfIdfMeta {
    terms: Vec<String>,
    doc_count: usize,
    doc_freq: Vec<usize>,
    config: TfIdfConfig,
}

#[derive(Serialize, Deserialize)]
struct ViewMeta {
    spec: ViewSpec,
    weight: f64,
    kind: ModelKind,
    strategy: Strategy,
    classes: Vec<SentimentLabel>,
    dim: usize,
    heads: Vec<HeadMeta>,
}

#[derive(Serialize, Deserialize)]
struct HeadMeta {
    positive: usize,
    negative: Option<usize>,
    /// Start of `dim` weights plus one bias in the payload.
    offset: usize,
    platt: Option<PlattCalibration<f64>>,
}

/// Summary of a bundle for display, readable without choosing a precision.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleInfo {
    pub format_version: u32,
    pub precision: Precision,
    pub views: Vec<(ViewSpec, f64)>,
    pub vocab_size: usize,
    pub embedding: Option<EmbeddingRef>,
    pub classes: Vec<SentimentLabel>,
    pub payload_values: usize,
}

impl<T: Scalar> ModelBundle<T> {
    pub fn new(model: EnsembleModel<T>, embedding: Option<EmbeddingRef>, config: serde_json::Value) -> Self {
        Self {
            model,
            embedding,
            config,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut payload: Vec<f64> = Vec::new();
        let views = m
            .views
            .iter()
            .map(|v| ViewMeta {
                spec: v.spec,
                weight: v.weight.widen(),
                kind: v.model.kind,
                strategy: v.model.strategy,
                classes: v.model.classes.clone(),
                dim: v.model.dim,
                heads: v
                    .model
                    .heads
                    .iter()
                    .map(|h| {
                        let offset = payload.len();
                        payload.extend(h.model.weights.iter().map(|w| w.widen()));
                        payload.push(h.model.bias.widen());
                        HeadMeta {
                            positive: h.positive,
                            negative: h.negative,
                            offset,
                            platt: h.calibration.map(|p| PlattCalibration {
                                a: p.a.widen(),
                                b: p.b.widen(),
                            }),
                        }
                    })
                    .collect(),
            })
            .collect();
        let meta = Metadata {
            format_version: FORMAT_VERSION,
            precision: T::PRECISION,
            preprocessing: m.preprocessor.clone(),
            tfidf: TfIdfMeta {
                terms: m.tfidf.terms().to_vec(),
                doc_count: m.tfidf.doc_count(),
                doc_freq: m.tfidf.doc_freqs().to_vec(),
                config: m.tfidf.config(),
            },
            oov: OovPolicy {
                seed: m.oov.seed,
                range_half_width: m.oov.range_half_width.widen(),
            },
            embedding: self.embedding.clone(),
            views,
            config: self.config.clone(),
        };
        let json = serde_json::to_vec(&meta).expect("bundle metadata serializes");

        let mut out = Vec::with_capacity(PREFIX_LEN + json.len() + 8 + payload.len() * 8 + CHECKSUM_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        for v in &payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let checksum = Sha256::digest(&out);
        out.extend_from_slice(&checksum);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        let (meta, payload) = parse(bytes)?;
        let model = rebuild::<T>(&meta, &payload)?;
        Ok(Self {
            model,
            embedding: meta.embedding,
            config: meta.config,
        })
    }

    /// Writes to a temporary sibling file, then renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), BundleError> {
        let path = path.as_ref();
        let tmp = temp_path(path);
        let result = (|| {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        Ok(result?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BundleError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Reads the summary fields of a bundle.
pub fn inspect(bytes: &[u8]) -> Result<BundleInfo, BundleError> {
    let (meta, payload) = parse(bytes)?;
    Ok(BundleInfo {
        format_version: meta.format_version,
        precision: meta.precision,
        views: meta.views.iter().map(|v| (v.spec, v.weight)).collect(),
        vocab_size: meta.tfidf.terms.len(),
        embedding: meta.embedding.clone(),
        classes: SentimentLabel::ALL.to_vec(),
        payload_values: payload.len(),
    })
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], BundleError> {
    let end = pos.checked_add(n).ok_or(BundleError::Truncated)?;
    let out = bytes.get(*pos..end).ok_or(BundleError::Truncated)?;
    *pos = end;
    Ok(out)
}

fn parse(bytes: &[u8]) -> Result<(Metadata, Vec<f64>), BundleError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(BundleError::BadMagic);
    }
    let mut pos = MAGIC.len();
    let version = u32::from_le_bytes(take(bytes, &mut pos, 4)?.try_into().unwrap());
    if version > FORMAT_VERSION {
        return Err(BundleError::UnsupportedVersion { found: version });
    }
    if bytes.len() < PREFIX_LEN + CHECKSUM_LEN {
        return Err(BundleError::Truncated);
    }
    let (body, checksum) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(BundleError::Corrupted);
    }
    if version == 0 {
        return Err(BundleError::Inconsistent("format version 0".into()));
    }

    let meta_len = u64::from_le_bytes(take(body, &mut pos, 8)?.try_into().unwrap());
    let meta_len = usize::try_from(meta_len).map_err(|_| BundleError::Truncated)?;
    let meta: Metadata = serde_json::from_slice(take(body, &mut pos, meta_len)?)?;
    if meta.format_version != version {
        return Err(BundleError::Inconsistent(format!(
            "header version {version} but metadata version {}",
            meta.format_version
        )));
    }
    let count = u64::from_le_bytes(take(body, &mut pos, 8)?.try_into().unwrap());
    let bytes_needed = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(8))
        .ok_or(BundleError::Truncated)?;
    let payload = take(body, &mut pos, bytes_needed)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if pos != body.len() {
        return Err(BundleError::Inconsistent("trailing bytes after payload".into()));
    }
    Ok((meta, payload))
}

fn rebuild<T: Scalar>(meta: &Metadata, payload: &[f64]) -> Result<EnsembleModel<T>, BundleError> {
    let tfidf = TfIdfModel::from_parts(
        meta.tfidf.terms.clone(),
        meta.tfidf.doc_count,
        meta.tfidf.doc_freq.clone(),
        meta.tfidf.config,
    )?;
    let mut views = Vec::with_capacity(meta.views.len());
    for (i, v) in meta.views.iter().enumerate() {
        let bad = |what: &str| BundleError::Inconsistent(format!("view {i}: {what}"));
        if v.classes.len() < 2 {
            return Err(bad("fewer than two classes"));
        }
        let expected_dim = match v.spec.vectorizer.uses_embeddings() {
            true => meta.embedding.as_ref().map(|e| e.dim).ok_or_else(|| bad("embedding view without embedding reference"))?,
            false => tfidf.vocab_size(),
        };
        if v.dim != expected_dim {
            return Err(bad("feature dimension does not match its vectorizer"));
        }
        let mut heads = Vec::with_capacity(v.heads.len());
        for h in &v.heads {
            let k = v.classes.len();
            if h.positive >= k || h.negative.is_some_and(|n| n >= k || n == h.positive) {
                return Err(bad("head class index out of range"));
            }
            let run = payload
                .get(h.offset..h.offset + v.dim + 1)
                .ok_or_else(|| bad("head weights outside payload"))?;
            let cast = |x: f64| T::of(x);
            heads.push(BinaryHead {
                model: BinaryLinearModel {
                    weights: run[..v.dim].iter().copied().map(cast).collect(),
                    bias: cast(run[v.dim]),
                    kind: v.kind,
                },
                calibration: h.platt.map(|p| PlattCalibration {
                    a: cast(p.a),
                    b: cast(p.b),
                }),
                positive: h.positive,
                negative: h.negative,
            });
        }
        views.push(View {
            spec: v.spec,
            weight: T::of(v.weight),
            model: MulticlassModel {
                kind: v.kind,
                strategy: v.strategy,
                classes: v.classes.clone(),
                dim: v.dim,
                heads,
            },
        });
    }
    let embedding_dim = views
        .iter()
        .any(|v| v.spec.vectorizer.uses_embeddings())
        .then(|| meta.embedding.as_ref().map(|e| e.dim))
        .flatten();
    Ok(EnsembleModel {
        preprocessor: meta.preprocessing.clone(),
        tfidf,
        oov: OovPolicy {
            seed: meta.oov.seed,
            range_half_width: T::of(meta.oov.range_half_width),
        },
        embedding_dim,
        views,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabeledDocument;
    use crate::ensemble::{fit_ensemble, EnsembleConfig};
    use SentimentLabel::*;

    fn bow_bundle() -> ModelBundle<f64> {
        let corpus = vec![
            LabeledDocument::new("1", Positive, "great fun"),
            LabeledDocument::new("2", Negative, "awful mess"),
            LabeledDocument::new("3", Neutral, "the report"),
            LabeledDocument::new("4", Positive, "fun times"),
        ];
        let cfg = EnsembleConfig::<f64>::default().with_views(vec![ViewSpec::default_views()[0]]);
        let model = fit_ensemble(&corpus, &cfg, None).unwrap();
        ModelBundle::new(model, None, serde_json::json!({"seed": 0}))
    }

    #[test]
    fn round_trip_is_exact() {
        let b = bow_bundle();
        let bytes = b.to_bytes();
        let back = ModelBundle::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn inspect_reports_summary() {
        let b = bow_bundle();
        let info = inspect(&b.to_bytes()).unwrap();
        assert_eq!(info.format_version, FORMAT_VERSION);
        assert_eq!(info.vocab_size, b.model.tfidf.vocab_size());
        assert_eq!(info.precision, Precision::F64);
        assert_eq!(info.views.len(), 1);
    }

    #[test]
    fn flipped_bytes_are_detected() {
        let bytes = bow_bundle().to_bytes();
        for pos in [0, 9, 13, 30, bytes.len() / 2, bytes.len() - 1] {
            let mut bad = bytes.clone();
            bad[pos] ^= 0x5a;
            assert!(ModelBundle::<f64>::from_bytes(&bad).is_err(), "flip at {pos} accepted");
        }
        assert!(matches!(
            ModelBundle::<f64>::from_bytes(&bytes[..bytes.len() - 5]),
            Err(BundleError::Corrupted)
        ));
        assert!(matches!(ModelBundle::<f64>::from_bytes(b"PLR"), Err(BundleError::BadMagic)));
    }

    #[test]
    fn future_version_is_unsupported() {
        let mut bytes = bow_bundle().to_bytes();
        bytes[8..12].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
        assert!(matches!(
            ModelBundle::<f64>::from_bytes(&bytes),
            Err(BundleError::UnsupportedVersion { found }) if found == FORMAT_VERSION + 1
        ));
    }

    #[test]
    fn single_precision_round_trip() {
        let b = bow_bundle();
        let bytes = b.to_bytes();
        let narrow = ModelBundle::<f32>::from_bytes(&bytes).unwrap();
        let again = ModelBundle::<f32>::from_bytes(&narrow.to_bytes()).unwrap();
        assert_eq!(again, narrow);
    }

    #[test]
    fn save_is_atomic_and_loadable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bundle");
        let b = bow_bundle();
        b.save(&path).unwrap();
        assert_eq!(ModelBundle::<f64>::load(&path).unwrap(), b);
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
