//! Pre-trained word vectors and sentence composition by (weighted) averaging.
//!
//! Two on-disk formats are understood:
//!
//! * word2vec binary: an ASCII header `"<vocab_size> <dim>\n"`, then for each
//!   entry the word bytes, a single space, and `dim` little-endian `f32`s,
//!   optionally followed by a newline.
//! * plain text: `word v1 v2 ... vD` per line, with an optional
//!   `"<vocab_size> <dim>"` header line.
//!
//! Tokens missing from the table are ignored when composing. A document with
//! no known token gets a pseudo-random vector derived from the OOV seed and
//! the document key, so reruns are reproducible.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::vector::DenseVector;
use crate::Scalar;

const MAX_DIM: usize = 1 << 16;
const MAX_WORD_BYTES: usize = 4096;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("file truncated: header promises {expected} entries, entry {entry} is incomplete")]
    TruncatedFile { expected: usize, entry: usize },
    #[error("embedding dimension is zero")]
    DimensionZero,
    #[error("malformed entry {entry}: {reason}")]
    MalformedEntry { entry: usize, reason: String },
    #[error("non-finite value in vector for {word:?}")]
    NonFinite { word: String },
    #[error("{0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingFormat {
    Binary,
    Text,
}

impl EmbeddingFormat {
    /// `.txt`/`.vec` files are text, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("txt") || ext.eq_ignore_ascii_case("vec") => {
                Self::Text
            }
            _ => Self::Binary,
        }
    }
}

/// Word → vector lookup, entries kept in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<T>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Builds a table from `(word, vector)` pairs. A repeated word keeps its
    /// first vector.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<T>)>,
        S: Into<String>,
    {
        if dim == 0 {
            return Err(EmbeddingError::DimensionZero);
        }
        let mut table = Self::new(dim);
        for (entry, (word, vector)) in entries.into_iter().enumerate() {
            let word = word.into();
            if vector.len() != dim {
                return Err(EmbeddingError::MalformedEntry {
                    entry,
                    reason: format!("{word:?} has {} values, expected {dim}", vector.len()),
                });
            }
            table.insert(word, &vector)?;
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vector: &[T]) -> Result<(), EmbeddingError> {
        debug_assert_eq!(vector.len(), self.dim);
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { word });
        }
        if self.index.contains_key(&word) {
            return Ok(());
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[T]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// Parses the word2vec binary format, keeping at most `vocab_limit` entries.
pub fn read_word2vec_binary<T: Scalar, R: BufRead>(
    mut reader: R,
    vocab_limit: Option<usize>,
) -> Result<EmbeddingTable<T>, EmbeddingError> {
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    if header.last() != Some(&b'\n') {
        return Err(EmbeddingError::MalformedHeader("missing newline".into()));
    }
    let header = std::str::from_utf8(&header)
        .map_err(|_| EmbeddingError::MalformedHeader("not ASCII".into()))?;
    let (vocab_size, dim) = parse_header(header)
        .ok_or_else(|| EmbeddingError::MalformedHeader(header.trim_end().escape_debug().to_string()))?;
    if dim == 0 {
        return Err(EmbeddingError::DimensionZero);
    }
    if dim > MAX_DIM {
        return Err(EmbeddingError::MalformedHeader(format!("dimension {dim} exceeds {MAX_DIM}")));
    }

    let wanted = vocab_limit.map_or(vocab_size, |l| l.min(vocab_size));
    let mut table = EmbeddingTable::new(dim);
    table.words.reserve(wanted.min(1 << 20));
    let mut word = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut vector = vec![T::zero(); dim];
    for entry in 0..wanted {
        let truncated = EmbeddingError::TruncatedFile {
            expected: vocab_size,
            entry,
        };
        word.clear();
        read_word(&mut reader, &mut word, entry)?.then_some(()).ok_or(truncated)?;
        reader.read_exact(&mut raw).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => EmbeddingError::TruncatedFile {
                expected: vocab_size,
                entry,
            },
            _ => EmbeddingError::Io(e),
        })?;
        for (v, bytes) in vector.iter_mut().zip(raw.chunks_exact(4)) {
            *v = T::of(f32::from_le_bytes(bytes.try_into().unwrap()) as f64);
        }
        table.insert(String::from_utf8_lossy(&word).into_owned(), &vector)?;
    }
    Ok(table)
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut fields = line.split_whitespace();
    let n = fields.next()?.parse().ok()?;
    let d = fields.next()?.parse().ok()?;
    fields.next().is_none().then_some((n, d))
}

/// Reads one space-terminated word, skipping newlines that separate entries.
/// Returns `false` on end of input.
fn read_word<R: BufRead>(reader: &mut R, word: &mut Vec<u8>, entry: usize) -> Result<bool, EmbeddingError> {
    loop {
        let buf = reader.fill_buf()?;
        if buf.is_empty() {
            return Ok(false);
        }
        let mut consumed = 0;
        let mut done = false;
        for &b in buf {
            consumed += 1;
            if b == b' ' {
                done = true;
                break;
            }
            if b == b'\n' && word.is_empty() {
                continue;
            }
            word.push(b);
        }
        reader.consume(consumed);
        if word.len() > MAX_WORD_BYTES {
            return Err(EmbeddingError::MalformedEntry {
                entry,
                reason: format!("word longer than {MAX_WORD_BYTES} bytes"),
            });
        }
        if done {
            if word.is_empty() {
                return Err(EmbeddingError::MalformedEntry {
                    entry,
                    reason: "empty word".into(),
                });
            }
            return Ok(true);
        }
    }
}

/// Parses the plain-text format. A first line consisting of exactly two
/// integers is taken as a header.
pub fn read_text<T: Scalar, R: BufRead>(
    reader: R,
    vocab_limit: Option<usize>,
) -> Result<EmbeddingTable<T>, EmbeddingError> {
    let mut table: Option<EmbeddingTable<T>> = None;
    let mut header_dim = None;
    let limit = vocab_limit.unwrap_or(usize::MAX);
    let mut vector = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line_no == 0 {
            if let Some((_, dim)) = parse_header(line) {
                if dim == 0 {
                    return Err(EmbeddingError::DimensionZero);
                }
                header_dim = Some(dim);
                continue;
            }
        }
        if table.as_ref().is_some_and(|t| t.vocab_size() >= limit) {
            break;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap().to_string();
        vector.clear();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| EmbeddingError::MalformedEntry {
                entry: line_no,
                reason: format!("bad number {f:?}"),
            })?;
            vector.push(T::of(v));
        }
        let table = table.get_or_insert_with(|| EmbeddingTable::new(header_dim.unwrap_or(vector.len())));
        if vector.len() != table.dim {
            return Err(EmbeddingError::MalformedEntry {
                entry: line_no,
                reason: format!("{} values, expected {}", vector.len(), table.dim),
            });
        }
        if table.dim == 0 {
            return Err(EmbeddingError::DimensionZero);
        }
        table.insert(word, &vector)?;
    }
    match (table, header_dim) {
        (Some(t), _) => Ok(t),
        (None, Some(dim)) => Ok(EmbeddingTable::new(dim)),
        (None, None) => Err(EmbeddingError::MalformedHeader("empty embedding file".into())),
    }
}

/// Loads an embedding file and returns it with the SHA-256 digest (hex) of
/// the complete file contents.
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    format: EmbeddingFormat,
    vocab_limit: Option<usize>,
) -> Result<(EmbeddingTable<T>, String), EmbeddingError> {
    let mut reader = BufReader::with_capacity(1 << 20, HashingReader::new(File::open(path)?));
    let table = match format {
        EmbeddingFormat::Binary => read_word2vec_binary(&mut reader, vocab_limit)?,
        EmbeddingFormat::Text => read_text(&mut reader, vocab_limit)?,
    };
    // entries past the vocabulary limit still count toward the digest
    io::copy(&mut reader, &mut io::sink())?;
    Ok((table, reader.into_inner().finish()))
}

/// SHA-256 (hex) of a file's bytes.
pub fn file_digest(path: impl AsRef<Path>) -> io::Result<String> {
    let mut reader = HashingReader::new(File::open(path)?);
    io::copy(&mut reader, &mut io::sink())?;
    Ok(reader.finish())
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> HashingReader<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
        }
    }

    fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Fallback for documents without a single known token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OovPolicy<T> {
    pub seed: u64,
    /// Components are drawn uniformly from `[-range_half_width, range_half_width]`.
    pub range_half_width: T,
}

impl<T: Scalar> Default for OovPolicy<T> {
    fn default() -> Self {
        Self {
            seed: 0,
            range_half_width: T::of(0.25),
        }
    }
}

impl<T: Scalar> OovPolicy<T> {
    pub fn new(seed: u64, range_half_width: T) -> Self {
        assert!(range_half_width > T::zero(), "range_half_width must be positive");
        Self {
            seed,
            range_half_width,
        }
    }

    /// The generator is ChaCha8 keyed by `SHA-256(seed as u64 LE ‖ doc_key)`;
    /// each component takes the top 53 bits of one `u64` draw as a uniform
    /// `u ∈ [0, 1)` and maps it to `(2u − 1)·range_half_width`.
    pub fn random_vector(&self, dim: usize, doc_key: &str) -> DenseVector<T> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(doc_key.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(key);
        let h = self.range_half_width.widen();
        (0..dim)
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                T::of((2.0 * u - 1.0) * h)
            })
            .collect::<Vec<_>>()
            .into()
    }
}

/// Mean of the vectors of all in-table tokens, counting repeats.
pub fn combine_mean<T: Scalar, S: AsRef<str>>(
    table: &EmbeddingTable<T>,
    tokens: &[S],
    policy: &OovPolicy<T>,
    doc_key: &str,
) -> DenseVector<T> {
    let mut acc = vec![T::zero(); table.dim()];
    let mut count = 0usize;
    for v in tokens.iter().filter_map(|t| table.get(t.as_ref())) {
        for (a, &x) in acc.iter_mut().zip(v) {
            *a += x;
        }
        count += 1;
    }
    if count == 0 {
        return policy.random_vector(table.dim(), doc_key);
    }
    let n = T::of_usize(count);
    acc.iter_mut().for_each(|a| *a /= n);
    acc.into()
}

/// `Σ w_t·v_t / Σ w_t` over every occurrence of a token found both in the
/// table and in `weights`. Falls back to [`combine_mean`] when that sum of
/// weights is not positive.
pub fn combine_weighted_mean<T: Scalar, S: AsRef<str>>(
    table: &EmbeddingTable<T>,
    tokens: &[S],
    weights: &HashMap<String, T>,
    policy: &OovPolicy<T>,
    doc_key: &str,
) -> DenseVector<T> {
    let mut acc = vec![T::zero(); table.dim()];
    let mut total = T::zero();
    for tok in tokens {
        let tok = tok.as_ref();
        let (Some(v), Some(&w)) = (table.get(tok), weights.get(tok)) else {
            continue;
        };
        for (a, &x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
        total += w;
    }
    if total > T::zero() {
        acc.iter_mut().for_each(|a| *a /= total);
        acc.into()
    } else {
        combine_mean(table, tokens, policy, doc_key)
    }
}
