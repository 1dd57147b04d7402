//! Bag-of-words features weighted by tf-idf.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::SparseVector;
use crate::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BowError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("min_df must be at least 1")]
    InvalidMinDf,
    #[error("inconsistent tf-idf state: {0}")]
    Inconsistent(String),
}

/// How inverse document frequency is computed from `N` documents and a
/// term's document frequency `df`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfMode {
    /// `ln((1 + N) / (1 + df)) + 1`
    #[default]
    Smoothed,
    /// `N / df`, no logarithm.
    PaperLiteral,
}

impl IdfMode {
    pub fn idf<T: Scalar>(self, doc_count: usize, doc_freq: usize) -> T {
        let n = T::of_usize(doc_count);
        let df = T::of_usize(doc_freq);
        match self {
            Self::Smoothed => ((T::one() + n) / (T::one() + df)).ln() + T::one(),
            Self::PaperLiteral => n / df,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfIdfConfig {
    pub mode: IdfMode,
    pub l2_normalize: bool,
    pub min_df: usize,
}

impl Default for TfIdfConfig {
    fn default() -> Self {
        Self {
            mode: IdfMode::Smoothed,
            l2_normalize: true,
            min_df: 1,
        }
    }
}

impl TfIdfConfig {
    /// Raw `tf × N/df` weights with no normalization.
    pub fn paper_literal() -> Self {
        Self {
            mode: IdfMode::PaperLiteral,
            l2_normalize: false,
            min_df: 1,
        }
    }
}

/// Fitted vocabulary: terms in lexicographic order, their document
/// frequencies and idf weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel<T> {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_count: usize,
    doc_freq: Vec<usize>,
    idf: Vec<T>,
    config: TfIdfConfig,
}

impl<T: Scalar> TfIdfModel<T> {
    pub fn fit<D, S>(corpus: &[D], config: TfIdfConfig) -> Result<Self, BowError>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if corpus.is_empty() {
            return Err(BowError::EmptyCorpus);
        }
        if config.min_df == 0 {
            return Err(BowError::InvalidMinDf);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in corpus {
            let mut seen: Vec<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_default() += 1;
            }
        }
        let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|&(_, n)| n >= config.min_df)
            .map(|(t, n)| (t.to_string(), n))
            .unzip();
        Self::from_parts(terms, corpus.len(), doc_freq, config)
    }

    /// Rebuilds a model from persisted state; idf values are recomputed.
    pub fn from_parts(
        terms: Vec<String>,
        doc_count: usize,
        doc_freq: Vec<usize>,
        config: TfIdfConfig,
    ) -> Result<Self, BowError> {
        if terms.len() != doc_freq.len() {
            return Err(BowError::Inconsistent(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        if !terms.windows(2).all(|w| w[0] < w[1]) {
            return Err(BowError::Inconsistent("terms are not strictly sorted".into()));
        }
        if let Some(&bad) = doc_freq.iter().find(|&&d| d == 0 || d > doc_count) {
            return Err(BowError::Inconsistent(format!(
                "document frequency {bad} outside 1..={doc_count}"
            )));
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let idf = doc_freq
            .iter()
            .map(|&df| config.mode.idf(doc_count, df))
            .collect();
        Ok(Self {
            terms,
            index,
            doc_count,
            doc_freq,
            idf,
            config,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn doc_freqs(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn config(&self) -> TfIdfConfig {
        self.config
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<T> {
        self.index_of(term).map(|i| self.idf[i])
    }

    pub fn idf_values(&self) -> &[T] {
        &self.idf
    }

    fn term_counts<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for tok in tokens {
            if let Some(i) = self.index_of(tok.as_ref()) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        counts
    }

    /// tf-idf vector of one document. Unknown tokens are skipped.
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S]) -> SparseVector<T> {
        let v = SparseVector::from_entries(
            self.vocab_size(),
            self.term_counts(tokens)
                .into_iter()
                .map(|(i, n)| (i, T::of_usize(n) * self.idf[i])),
        );
        if self.config.l2_normalize {
            v.normalized()
        } else {
            v
        }
    }

    /// Raw (never normalized) `tf × idf` weight per in-vocabulary term of
    /// one document.
    pub fn term_weights<S: AsRef<str>>(&self, tokens: &[S]) -> HashMap<String, T> {
        self.term_counts(tokens)
            .into_iter()
            .map(|(i, n)| (self.terms[i].clone(), T::of_usize(n) * self.idf[i]))
            .collect()
    }
}
