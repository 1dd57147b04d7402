//! One-vs-rest and one-vs-one reductions producing class distributions.

use serde::{Deserialize, Serialize};

use super::platt::{fit_platt, PlattCalibration};
use super::sgd::fit_binary;
use super::{check_training_set, BinaryLinearModel, LinearError, ModelKind, TrainConfig};
use crate::corpus::SentimentLabel;
use crate::scalar::sigmoid;
use crate::vector::FeatureVector;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    OneVsRest,
    OneVsOne,
}

/// One binary subproblem. `positive` and `negative` index the model's class
/// list; `negative` is `None` for a class-vs-rest head.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryHead<T> {
    pub model: BinaryLinearModel<T>,
    pub calibration: Option<PlattCalibration<T>>,
    pub positive: usize,
    pub negative: Option<usize>,
}

impl<T: Scalar> BinaryHead<T> {
    /// Probability of the head's positive side.
    pub fn probability<X: FeatureVector<T>>(&self, x: &X) -> Result<T, LinearError> {
        let score = self.model.decision_value(x)?;
        Ok(match &self.calibration {
            Some(platt) => platt.probability(score),
            None => sigmoid(score),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel<T> {
    pub kind: ModelKind,
    pub strategy: Strategy,
    /// Classes present at training time, in canonical order.
    pub classes: Vec<SentimentLabel>,
    pub dim: usize,
    pub heads: Vec<BinaryHead<T>>,
}

/// Trains one binary model per class (OvR) or per class pair (OvO).
///
/// With two classes both strategies train a single head. Hinge-loss heads
/// are calibrated with Platt scaling on their own training scores.
pub fn fit_multiclass<T: Scalar, X: FeatureVector<T>>(
    xs: &[X],
    labels: &[SentimentLabel],
    kind: ModelKind,
    strategy: Strategy,
    cfg: &TrainConfig<T>,
) -> Result<MulticlassModel<T>, LinearError> {
    let dim = check_training_set(xs, labels.len())?;
    let classes: Vec<SentimentLabel> = SentimentLabel::ALL
        .into_iter()
        .filter(|c| labels.contains(c))
        .collect();
    if classes.len() < 2 {
        let missing = SentimentLabel::ALL
            .into_iter()
            .filter(|c| !classes.contains(c))
            .collect();
        return Err(LinearError::MissingClass(missing));
    }
    let k = classes.len();
    let pairs: Vec<(usize, Option<usize>)> = match strategy {
        Strategy::OneVsRest if k > 2 => (0..k).map(|c| (c, None)).collect(),
        _ => (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, Some(j))))
            .collect(),
    };

    let mut heads = Vec::with_capacity(pairs.len());
    for (h, (positive, negative)) in pairs.into_iter().enumerate() {
        let pos_label = classes[positive];
        let (sub_x, sub_y): (Vec<&X>, Vec<bool>) = xs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| negative.is_none_or(|n| l == pos_label || l == classes[n]))
            .map(|(x, &l)| (x, l == pos_label))
            .unzip();
        let head_cfg = TrainConfig {
            seed: head_seed(cfg.seed, h),
            ..*cfg
        };
        let model = fit_binary(kind, &sub_x, &sub_y, &head_cfg)?.model;
        let calibration = match kind {
            ModelKind::HingeSvm => {
                let scores: Vec<T> = sub_x
                    .iter()
                    .map(|x| x.dot(&model.weights) + model.bias)
                    .collect();
                Some(fit_platt(&scores, &sub_y)?)
            }
            ModelKind::Logistic => None,
        };
        heads.push(BinaryHead {
            model,
            calibration,
            positive,
            negative,
        });
    }
    Ok(MulticlassModel {
        kind,
        strategy,
        classes,
        dim,
        heads,
    })
}

fn head_seed(seed: u64, head: usize) -> u64 {
    seed ^ (head as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl<T: Scalar> MulticlassModel<T> {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class distribution ordered like [`Self::classes`].
    ///
    /// Class-vs-rest heads: independent probabilities divided by their sum
    /// (uniform if all are zero). Pairwise heads: `score_i = 2/(k(k−1)) Σ_j p_ij`
    /// with `p_ji = 1 − p_ij`, then normalized.
    pub fn predict_proba<X: FeatureVector<T>>(&self, x: &X) -> Result<Vec<T>, LinearError> {
        if x.dim() != self.dim {
            return Err(LinearError::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        let k = self.classes.len();
        let mut scores = vec![T::zero(); k];
        for head in &self.heads {
            let p = head.probability(x)?;
            match head.negative {
                None => scores[head.positive] = p,
                Some(n) => {
                    scores[head.positive] += p;
                    scores[n] += T::one() - p;
                }
            }
        }
        if self.heads.iter().any(|h| h.negative.is_some()) {
            let scale = T::of(2.0) / T::of_usize(k * (k - 1));
            scores.iter_mut().for_each(|s| *s *= scale);
        }
        Ok(normalize(scores))
    }

    /// Distribution over all three labels in canonical order; classes
    /// absent at training time get probability zero.
    pub fn predict_proba_full<X: FeatureVector<T>>(
        &self,
        x: &X,
    ) -> Result<[T; SentimentLabel::COUNT], LinearError> {
        let p = self.predict_proba(x)?;
        let mut out = [T::zero(); SentimentLabel::COUNT];
        for (c, v) in self.classes.iter().zip(p) {
            out[c.index()] = v;
        }
        Ok(out)
    }

    pub fn predict<X: FeatureVector<T>>(&self, x: &X) -> Result<SentimentLabel, LinearError> {
        let p = self.predict_proba(x)?;
        Ok(self.classes[argmax(&p)])
    }
}

pub(crate) fn normalize<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    let sum: T = v.iter().copied().sum();
    if sum > T::zero() && sum.is_finite() {
        v.iter_mut().for_each(|x| *x = (*x / sum).min(T::one()));
    } else {
        let u = T::one() / T::of_usize(v.len());
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::DenseVector;
    use SentimentLabel::*;

    fn head(positive: usize, negative: Option<usize>, bias: f64) -> BinaryHead<f64> {
        BinaryHead {
            model: BinaryLinearModel {
                weights: vec![0.0],
                bias,
                kind: ModelKind::Logistic,
            },
            calibration: None,
            positive,
            negative,
        }
    }

    /// A constant head emitting probability `p` via its bias.
    fn const_head(positive: usize, negative: Option<usize>, p: f64) -> BinaryHead<f64> {
        let logit = if p == 1.0 {
            800.0
        } else if p == 0.0 {
            -800.0
        } else {
            (p / (1.0 - p)).ln()
        };
        head(positive, negative, logit)
    }

    fn model(strategy: Strategy, heads: Vec<BinaryHead<f64>>) -> MulticlassModel<f64> {
        MulticlassModel {
            kind: ModelKind::Logistic,
            strategy,
            classes: SentimentLabel::ALL.to_vec(),
            dim: 1,
            heads,
        }
    }

    #[test]
    fn ovr_already_normalized() {
        let m = model(
            Strategy::OneVsRest,
            vec![const_head(0, None, 0.2), const_head(1, None, 0.2), const_head(2, None, 0.6)],
        );
        let p = m.predict_proba(&DenseVector::new(vec![1.0])).unwrap();
        for (got, want) in p.iter().zip([0.2, 0.2, 0.6]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ovr_all_zero_is_uniform() {
        let m = model(
            Strategy::OneVsRest,
            vec![head(0, None, -1e4), head(1, None, -1e4), head(2, None, -1e4)],
        );
        let p = m.predict_proba(&DenseVector::new(vec![0.0])).unwrap();
        assert_eq!(p, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn ovo_coupling_hand_example() {
        // p(P over N) = 1, p(P over U) = 1, p(N over U) = 0.5
        let m = model(
            Strategy::OneVsOne,
            vec![const_head(0, Some(1), 1.0), const_head(0, Some(2), 1.0), const_head(1, Some(2), 0.5)],
        );
        let p = m.predict_proba(&DenseVector::new(vec![0.0])).unwrap();
        for (got, want) in p.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12, "{p:?}");
        }
        assert_eq!(m.predict(&DenseVector::new(vec![0.0])).unwrap(), Positive);
    }

    #[test]
    fn argmax_ties_pick_first() {
        assert_eq!(argmax(&[0.3, 0.3, 0.3]), 0);
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
    }

    #[test]
    fn missing_class_and_dimension_errors() {
        let xs = vec![DenseVector::new(vec![1.0]), DenseVector::new(vec![2.0])];
        let err = fit_multiclass(&xs, &[Neutral, Neutral], ModelKind::Logistic, Strategy::OneVsRest, &TrainConfig::default());
        assert_eq!(err, Err(LinearError::MissingClass(vec![Positive, Negative])));
        let m = fit_multiclass(&xs, &[Positive, Neutral], ModelKind::HingeSvm, Strategy::OneVsOne, &TrainConfig::default()).unwrap();
        assert!(matches!(
            m.predict_proba(&DenseVector::new(vec![1.0, 2.0])),
            Err(LinearError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn two_classes_collapse_to_one_head() {
        let xs: Vec<DenseVector<f64>> = (0..20)
            .map(|i| DenseVector::new(vec![if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + i as f64 * 0.05)]))
            .collect();
        let labels: Vec<_> = (0..20).map(|i| if i % 2 == 0 { Positive } else { Negative }).collect();
        let cfg = TrainConfig::default();
        for kind in [ModelKind::Logistic, ModelKind::HingeSvm] {
            let ovr = fit_multiclass(&xs, &labels, kind, Strategy::OneVsRest, &cfg).unwrap();
            let ovo = fit_multiclass(&xs, &labels, kind, Strategy::OneVsOne, &cfg).unwrap();
            assert_eq!(ovr.heads.len(), 1);
            assert_eq!(ovo.heads.len(), 1);
            let binary = &ovr.heads[0].model;
            for x in &xs {
                let sign_says = if binary.decision_value(x).unwrap() > 0.0 { Positive } else { Negative };
                assert_eq!(ovr.predict(x).unwrap(), sign_says);
                assert_eq!(ovo.predict(x).unwrap(), sign_says);
            }
            let full = ovr.predict_proba_full(&xs[0]).unwrap();
            assert_eq!(full[Neutral.index()], 0.0);
        }
    }
}
