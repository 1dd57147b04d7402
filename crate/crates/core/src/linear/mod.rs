//! Linear classifiers: L2-regularized logistic regression and hinge-loss SVM
//! trained by averaged SGD, Platt calibration, and one-vs-rest / one-vs-one
//! multiclass wrappers that emit class distributions.

mod loss;
mod multiclass;
mod platt;
mod sgd;

pub use loss::{hinge_loss, logistic_gradient, logistic_loss, objective, optimal_bias};
pub use multiclass::{fit_multiclass, BinaryHead, MulticlassModel, Strategy};
pub(crate) use multiclass::argmax as multiclass_argmax;
pub use platt::{fit_platt, platt_gradient, platt_nll, PlattCalibration};
pub use sgd::{fit_binary, fit_binary_logistic, fit_binary_svm, FitOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SentimentLabel;
use crate::scalar::sigmoid;
use crate::vector::FeatureVector;
use crate::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinearError {
    #[error("no training examples")]
    EmptyInput,
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("binary training data contains a single class")]
    SingleClassInput,
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training labels are missing class(es): {0:?}")]
    MissingClass(Vec<SentimentLabel>),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    HingeSvm,
}

/// Optimizer settings shared by both losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    /// Inverse regularization strength `C`; the objective is
    /// `‖w‖²/(2C) + Σ loss_i`.
    pub regularization_c: T,
    pub max_epochs: usize,
    /// Training stops once the per-example objective improves by less than
    /// this between consecutive epochs.
    pub tolerance: T,
    /// Initial step size `η₀` of the schedule `η₀ / (1 + η₀·λ·t)`, `λ = 1/(C·n)`.
    pub learning_rate: T,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            regularization_c: T::one(),
            max_epochs: 200,
            tolerance: T::of(1e-6),
            learning_rate: T::of(0.1),
            seed: 0,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<(), LinearError> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.regularization_c) {
            return Err(LinearError::InvalidConfig("regularization_c must be > 0".into()));
        }
        if self.max_epochs == 0 {
            return Err(LinearError::InvalidConfig("max_epochs must be > 0".into()));
        }
        if !positive(self.tolerance) {
            return Err(LinearError::InvalidConfig("tolerance must be > 0".into()));
        }
        if !positive(self.learning_rate) {
            return Err(LinearError::InvalidConfig("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

/// `w·x + b` with dense weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryLinearModel<T> {
    pub weights: Vec<T>,
    pub bias: T,
    pub kind: ModelKind,
}

impl<T: Scalar> BinaryLinearModel<T> {
    pub fn zeros(dim: usize, kind: ModelKind) -> Self {
        Self {
            weights: vec![T::zero(); dim],
            bias: T::zero(),
            kind,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim<X: FeatureVector<T>>(&self, x: &X) -> Result<(), LinearError> {
        if x.dim() == self.dim() {
            Ok(())
        } else {
            Err(LinearError::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            })
        }
    }

    pub fn decision_value<X: FeatureVector<T>>(&self, x: &X) -> Result<T, LinearError> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// `σ(w·x + b)`, the logistic probability of the positive class.
    pub fn predict_proba_logistic<X: FeatureVector<T>>(&self, x: &X) -> Result<T, LinearError> {
        self.decision_value(x).map(sigmoid)
    }
}

fn check_training_set<T: Scalar, X: FeatureVector<T>>(
    xs: &[X],
    n_labels: usize,
) -> Result<usize, LinearError> {
    if xs.is_empty() {
        return Err(LinearError::EmptyInput);
    }
    if xs.len() != n_labels {
        return Err(LinearError::LengthMismatch {
            features: xs.len(),
            labels: n_labels,
        });
    }
    let dim = xs[0].dim();
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(LinearError::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    Ok(dim)
}
