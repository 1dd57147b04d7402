//! Multi-view soft-voting ensemble.
//!
//! Every view pairs one text representation with one multiclass linear
//! classifier. All views are trained on the same documents; a prediction is
//! the weight-normalized sum of the views' class distributions, and the label
//! is its argmax (ties resolved toward the canonical class order).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bow::{BowError, TfIdfConfig, TfIdfModel};
use crate::corpus::{summarize, Document, LabeledDocument, SentimentLabel};
use crate::embedding::{combine_mean, combine_weighted_mean, EmbeddingTable, OovPolicy};
use crate::linear::{fit_multiclass, LinearError, ModelKind, MulticlassModel, Strategy, TrainConfig};
use crate::preprocess::Preprocessor;
use crate::vector::{DenseVector, FeatureVector, SparseVector};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training corpus has no examples of: {0:?}")]
    MissingClass(Vec<SentimentLabel>),
    #[error("an embedding view is configured but no embedding table was supplied")]
    MissingEmbeddings,
    #[error("embedding table has dimension {found}, model expects {expected}")]
    EmbeddingDimension { expected: usize, found: usize },
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Bow(#[from] BowError),
    #[error(transparent)]
    Linear(#[from] LinearError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vectorizer {
    BagOfWordsTfIdf,
    EmbeddingMean,
    EmbeddingWeightedMean,
}

impl Vectorizer {
    pub fn uses_embeddings(self) -> bool {
        !matches!(self, Self::BagOfWordsTfIdf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    SvmOvO,
    LogisticOvR,
}

impl Classifier {
    pub fn kind(self) -> ModelKind {
        match self {
            Self::SvmOvO => ModelKind::HingeSvm,
            Self::LogisticOvR => ModelKind::Logistic,
        }
    }

    pub fn strategy(self) -> Strategy {
        match self {
            Self::SvmOvO => Strategy::OneVsOne,
            Self::LogisticOvR => Strategy::OneVsRest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewSpec {
    pub vectorizer: Vectorizer,
    pub classifier: Classifier,
}

impl ViewSpec {
    pub const fn new(vectorizer: Vectorizer, classifier: Classifier) -> Self {
        Self {
            vectorizer,
            classifier,
        }
    }

    /// tf-idf + SVM, mean embedding + SVM, tf-idf-weighted embedding + logistic.
    pub fn default_views() -> Vec<ViewSpec> {
        vec![
            Self::new(Vectorizer::BagOfWordsTfIdf, Classifier::SvmOvO),
            Self::new(Vectorizer::EmbeddingMean, Classifier::SvmOvO),
            Self::new(Vectorizer::EmbeddingWeightedMean, Classifier::LogisticOvR),
        ]
    }
}

/// Textual form `<vectorizer>:<classifier>`, e.g. `tfidf:svm_ovo`.
impl fmt::Display for ViewSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = match self.vectorizer {
            Vectorizer::BagOfWordsTfIdf => "tfidf",
            Vectorizer::EmbeddingMean => "mean_embedding",
            Vectorizer::EmbeddingWeightedMean => "weighted_embedding",
        };
        let c = match self.classifier {
            Classifier::SvmOvO => "svm_ovo",
            Classifier::LogisticOvR => "logistic_ovr",
        };
        write!(f, "{v}:{c}")
    }
}

impl FromStr for ViewSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (v, c) = s
            .split_once(':')
            .ok_or_else(|| format!("view {s:?} is not of the form <vectorizer>:<classifier>"))?;
        let vectorizer = match v.trim() {
            "tfidf" => Vectorizer::BagOfWordsTfIdf,
            "mean_embedding" => Vectorizer::EmbeddingMean,
            "weighted_embedding" => Vectorizer::EmbeddingWeightedMean,
            other => {
                return Err(format!(
                    "unknown vectorizer {other:?} (tfidf, mean_embedding, weighted_embedding)"
                ))
            }
        };
        let classifier = match c.trim() {
            "svm_ovo" => Classifier::SvmOvO,
            "logistic_ovr" => Classifier::LogisticOvR,
            other => return Err(format!("unknown classifier {other:?} (svm_ovo, logistic_ovr)")),
        };
        Ok(Self::new(vectorizer, classifier))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig<T> {
    pub views: Vec<ViewSpec>,
    pub weights: Vec<T>,
    pub tfidf: TfIdfConfig,
    pub oov: OovPolicy<T>,
    pub train: TrainConfig<T>,
    pub preprocessor: Preprocessor,
}

impl<T: Scalar> Default for EnsembleConfig<T> {
    fn default() -> Self {
        let views = ViewSpec::default_views();
        Self {
            weights: vec![T::one(); views.len()],
            views,
            tfidf: TfIdfConfig::default(),
            oov: OovPolicy::default(),
            train: TrainConfig::default(),
            preprocessor: Preprocessor::new(crate::preprocess::StopwordList::english(), false),
        }
    }
}

impl<T: Scalar> EnsembleConfig<T> {
    /// Restricts the ensemble to the given views with unit weights.
    pub fn with_views(mut self, views: Vec<ViewSpec>) -> Self {
        self.weights = vec![T::one(); views.len()];
        self.views = views;
        self
    }

    pub fn needs_embeddings(&self) -> bool {
        self.views.iter().any(|v| v.vectorizer.uses_embeddings())
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        validate_weights(self.views.len(), &self.weights)?;
        self.train.validate()?;
        if self.oov.range_half_width.is_nan() || self.oov.range_half_width <= T::zero() {
            return Err(EnsembleError::InvalidConfig("OOV range must be positive".into()));
        }
        Ok(())
    }
}

fn validate_weights<T: Scalar>(views: usize, weights: &[T]) -> Result<(), EnsembleError> {
    if views == 0 {
        return Err(EnsembleError::InvalidConfig("at least one view is required".into()));
    }
    if weights.len() != views {
        return Err(EnsembleError::InvalidConfig(format!(
            "{} view weights for {views} views",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(EnsembleError::InvalidConfig("view weights must be finite and >= 0".into()));
    }
    if weights.iter().all(|w| *w == T::zero()) {
        return Err(EnsembleError::InvalidConfig("view weights are all zero".into()));
    }
    Ok(())
}

/// A feature vector from either family of views.
#[derive(Debug, Clone, PartialEq)]
pub enum Features<T> {
    Sparse(SparseVector<T>),
    Dense(DenseVector<T>),
}

impl<T: Scalar> FeatureVector<T> for Features<T> {
    fn dim(&self) -> usize {
        match self {
            Self::Sparse(v) => v.dim(),
            Self::Dense(v) => v.dim(),
        }
    }

    fn dot(&self, weights: &[T]) -> T {
        match self {
            Self::Sparse(v) => v.dot(weights),
            Self::Dense(v) => v.dot(weights),
        }
    }

    fn add_scaled_to(&self, scale: T, target: &mut [T]) {
        match self {
            Self::Sparse(v) => v.add_scaled_to(scale, target),
            Self::Dense(v) => v.add_scaled_to(scale, target),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct View<T> {
    pub spec: ViewSpec,
    pub weight: T,
    pub model: MulticlassModel<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub label: SentimentLabel,
    /// Probabilities in canonical class order.
    pub distribution: [T; SentimentLabel::COUNT],
}

/// Fitted ensemble. Embedding vectors are not part of the model; pass the
/// same table used in training to every prediction call.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<T> {
    pub preprocessor: Preprocessor,
    pub tfidf: TfIdfModel<T>,
    pub oov: OovPolicy<T>,
    /// Dimension of the embedding table used in training, if any view uses one.
    pub embedding_dim: Option<usize>,
    pub views: Vec<View<T>>,
}

/// `Σ_v (w_v / Σw)·p_v` and its argmax.
pub fn soft_vote<T: Scalar>(
    distributions: &[[T; SentimentLabel::COUNT]],
    weights: &[T],
) -> Prediction<T> {
    assert_eq!(distributions.len(), weights.len());
    let total: T = weights.iter().copied().sum();
    let mut acc = [T::zero(); SentimentLabel::COUNT];
    for (dist, &w) in distributions.iter().zip(weights) {
        let share = w / total;
        for (a, &p) in acc.iter_mut().zip(dist) {
            *a += share * p;
        }
    }
    let best = crate::linear::multiclass_argmax(&acc);
    Prediction {
        label: SentimentLabel::ALL[best],
        distribution: acc,
    }
}

fn featurize<T: Scalar>(
    vectorizer: Vectorizer,
    tfidf: &TfIdfModel<T>,
    embeddings: Option<&EmbeddingTable<T>>,
    oov: &OovPolicy<T>,
    tokens: &[String],
    doc_key: &str,
) -> Result<Features<T>, EnsembleError> {
    let table = || embeddings.ok_or(EnsembleError::MissingEmbeddings);
    Ok(match vectorizer {
        Vectorizer::BagOfWordsTfIdf => Features::Sparse(tfidf.transform(tokens)),
        Vectorizer::EmbeddingMean => Features::Dense(combine_mean(table()?, tokens, oov, doc_key)),
        Vectorizer::EmbeddingWeightedMean => {
            let weights = tfidf.term_weights(tokens);
            Features::Dense(combine_weighted_mean(table()?, tokens, &weights, oov, doc_key))
        }
    })
}

fn view_seed(seed: u64, view: usize) -> u64 {
    seed.wrapping_add((view as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Preprocesses the corpus once, fits the shared tf-idf vocabulary, and
/// trains every configured view.
pub fn fit_ensemble<T: Scalar>(
    corpus: &[LabeledDocument],
    config: &EnsembleConfig<T>,
    embeddings: Option<&EmbeddingTable<T>>,
) -> Result<EnsembleModel<T>, EnsembleError> {
    if corpus.is_empty() {
        return Err(EnsembleError::EmptyCorpus);
    }
    let missing = summarize(corpus).missing_classes();
    if !missing.is_empty() {
        return Err(EnsembleError::MissingClass(missing));
    }
    config.validate()?;
    if config.needs_embeddings() && embeddings.is_none() {
        return Err(EnsembleError::MissingEmbeddings);
    }

    let tokens: Vec<Vec<String>> = corpus
        .iter()
        .map(|d| config.preprocessor.process(&d.doc.text))
        .collect();
    let labels: Vec<SentimentLabel> = corpus.iter().map(|d| d.label).collect();
    let tfidf = TfIdfModel::fit(&tokens, config.tfidf)?;

    let mut views = Vec::with_capacity(config.views.len());
    for (i, (&spec, &weight)) in config.views.iter().zip(&config.weights).enumerate() {
        let xs = corpus
            .iter()
            .zip(&tokens)
            .map(|(d, t)| featurize(spec.vectorizer, &tfidf, embeddings, &config.oov, t, &d.doc.id))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = TrainConfig {
            seed: view_seed(config.train.seed, i),
            ..config.train
        };
        let model = fit_multiclass(&xs, &labels, spec.classifier.kind(), spec.classifier.strategy(), &cfg)?;
        views.push(View { spec, weight, model });
    }

    Ok(EnsembleModel {
        preprocessor: config.preprocessor.clone(),
        tfidf,
        oov: config.oov,
        embedding_dim: config.needs_embeddings().then(|| embeddings.map(|e| e.dim())).flatten(),
        views,
    })
}

impl<T: Scalar> EnsembleModel<T> {
    pub fn weights(&self) -> Vec<T> {
        self.views.iter().map(|v| v.weight).collect()
    }

    /// Replaces the view weights (same validation as training).
    pub fn set_weights(&mut self, weights: &[T]) -> Result<(), EnsembleError> {
        validate_weights(self.views.len(), weights)?;
        for (v, &w) in self.views.iter_mut().zip(weights) {
            v.weight = w;
        }
        Ok(())
    }

    fn check_embeddings(&self, embeddings: Option<&EmbeddingTable<T>>) -> Result<(), EnsembleError> {
        match (self.embedding_dim, embeddings) {
            (Some(_), None) => Err(EnsembleError::MissingEmbeddings),
            (Some(expected), Some(t)) if t.dim() != expected => Err(EnsembleError::EmbeddingDimension {
                expected,
                found: t.dim(),
            }),
            _ => Ok(()),
        }
    }

    /// Per-view class distributions of one document, in view order.
    pub fn view_distributions(
        &self,
        doc: &Document,
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Result<Vec<[T; SentimentLabel::COUNT]>, EnsembleError> {
        self.check_embeddings(embeddings)?;
        let tokens = self.preprocessor.process(&doc.text);
        self.views
            .iter()
            .map(|view| {
                let x = featurize(view.spec.vectorizer, &self.tfidf, embeddings, &self.oov, &tokens, &doc.id)?;
                Ok(view.model.predict_proba_full(&x)?)
            })
            .collect()
    }

    pub fn predict(
        &self,
        doc: &Document,
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Result<Prediction<T>, EnsembleError> {
        let dists = self.view_distributions(doc, embeddings)?;
        Ok(soft_vote(&dists, &self.weights()))
    }

    pub fn predict_batch(
        &self,
        docs: &[Document],
        embeddings: Option<&EmbeddingTable<T>>,
    ) -> Result<Vec<Prediction<T>>, EnsembleError> {
        docs.iter().map(|d| self.predict(d, embeddings)).collect()
    }
}
