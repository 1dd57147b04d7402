//! Averaged stochastic gradient descent for L2-regularized linear models.
//!
//! Each step on example `i` minimizes `λ/2·‖w‖² + loss(y_i·(w·x_i + b))` with
//! `λ = 1/(C·n)`, so one epoch is a pass over `objective / n`. Weights and
//! their running average are kept in scaled form (`w = W/D`,
//! `w̄ = (A + F·W)/E`) so that a step touches only the nonzero features of
//! `x_i`; shrinkage and averaging are folded into the scalars `D`, `E`, `F`.
//!
//! Weights follow `η_t = η₀/(1 + η₀·λ·t)`. The unregularized bias gets no
//! help from strong convexity, so it steps with the slower
//! `η₀/√(1 + η₀·λ·t)`; after every epoch the reported bias is the exact
//! minimizer of the objective for the averaged weights. Averaging starts
//! after the first epoch and decays polynomially, so early iterates fade.
//! An epoch whose averaged model scores worse than the kept one is not
//! adopted; the stopping rule still looks at the fresh average.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::loss::{loss_slope, objective, optimal_bias, signed};
use super::{check_training_set, BinaryLinearModel, LinearError, ModelKind, TrainConfig};
use crate::vector::FeatureVector;
use crate::Scalar;

/// `γ` of the polynomial-decay average `w̄ ← (1 − μ)·w̄ + μ·w`,
/// `μ = (γ + 1)/(k + 1 + γ)` at the `k`-th averaged step.
const AVERAGING_DECAY: f64 = 4.0;

/// A trained model plus its per-epoch training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome<T> {
    pub model: BinaryLinearModel<T>,
    pub epochs: usize,
    /// `objective / n` of the kept model after each epoch.
    pub objective_history: Vec<T>,
}

pub fn fit_binary_logistic<T: Scalar, X: FeatureVector<T>>(
    xs: &[X],
    ys: &[bool],
    cfg: &TrainConfig<T>,
) -> Result<BinaryLinearModel<T>, LinearError> {
    fit_binary(ModelKind::Logistic, xs, ys, cfg).map(|o| o.model)
}

pub fn fit_binary_svm<T: Scalar, X: FeatureVector<T>>(
    xs: &[X],
    ys: &[bool],
    cfg: &TrainConfig<T>,
) -> Result<BinaryLinearModel<T>, LinearError> {
    fit_binary(ModelKind::HingeSvm, xs, ys, cfg).map(|o| o.model)
}

pub fn fit_binary<T: Scalar, X: FeatureVector<T>>(
    kind: ModelKind,
    xs: &[X],
    ys: &[bool],
    cfg: &TrainConfig<T>,
) -> Result<FitOutcome<T>, LinearError> {
    cfg.validate()?;
    let dim = check_training_set(xs, ys.len())?;
    if ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
        return Err(LinearError::SingleClassInput);
    }
    let n = xs.len();
    let lambda = T::one() / (cfg.regularization_c * T::of_usize(n));
    let eta0 = cfg.learning_rate;
    if eta0 * lambda >= T::one() {
        return Err(LinearError::InvalidConfig(
            "learning_rate / (regularization_c · n) must be below 1".into(),
        ));
    }

    let mut state = Asgd::new(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::new();
    let mut t = 0usize;
    let avg_start = n;
    let per_example = T::one() / T::of_usize(n);
    let gamma = T::of(AVERAGING_DECAY);
    let mut last: Option<T> = None;
    let mut best = (vec![T::zero(); dim], T::zero());

    for _ in 0..cfg.max_epochs {
        shuffle(&mut order, &mut rng);
        for &i in &order {
            let decay = T::one() + eta0 * lambda * T::of_usize(t);
            let mu = if t < avg_start {
                T::one()
            } else {
                ((gamma + T::one()) / (T::of_usize(t - avg_start + 2) + gamma)).min(T::one())
            };
            state.step(kind, &xs[i], ys[i], eta0 / decay, eta0 / decay.sqrt(), lambda, mu);
            t += 1;
        }
        let (w, b) = finish(kind, &state, xs, ys);
        let obj = objective(kind, &w, b, xs, ys, cfg.regularization_c) * per_example;
        let converged = last
            .is_some_and(|prev: T| prev >= obj && prev - obj < cfg.tolerance);
        last = Some(obj);
        match history.last() {
            Some(&kept) if kept <= obj => history.push(kept),
            _ => {
                best = (w, b);
                history.push(obj);
            }
        }
        if converged {
            break;
        }
    }

    let (weights, bias) = best;
    Ok(FitOutcome {
        model: BinaryLinearModel { weights, bias, kind },
        epochs: history.len(),
        objective_history: history,
    })
}

/// Averaged weights with the bias refit exactly for them.
fn finish<T: Scalar, X: FeatureVector<T>>(kind: ModelKind, state: &Asgd<T>, xs: &[X], ys: &[bool]) -> (Vec<T>, T) {
    let w = state.averaged();
    let scores: Vec<T> = xs.iter().map(|x| x.dot(&w)).collect();
    let b = optimal_bias(kind, &scores, ys);
    (w, b)
}

/// Fisher-Yates driven by raw `u64` draws so the permutation does not depend
/// on the platform's pointer width.
fn shuffle(order: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..order.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
}

struct Asgd<T> {
    w: Vec<T>,
    w_div: T,
    a: Vec<T>,
    a_div: T,
    w_frac: T,
    /// While false the average equals the current iterate and `a` is stale.
    averaging: bool,
    bias: T,
}

impl<T: Scalar> Asgd<T> {
    fn new(dim: usize) -> Self {
        Self {
            w: vec![T::zero(); dim],
            w_div: T::one(),
            a: vec![T::zero(); dim],
            a_div: T::one(),
            w_frac: T::one(),
            averaging: false,
            bias: T::zero(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step<X: FeatureVector<T>>(&mut self, kind: ModelKind, x: &X, y: bool, eta: T, eta_bias: T, lambda: T, mu: T) {
        let limit = T::of(1e5);
        if self.w_div > limit || self.a_div > limit {
            self.renormalize();
        }
        let s = signed::<T>(y);
        let score = x.dot(&self.w) / self.w_div + self.bias;
        self.w_div /= T::one() - eta * lambda;
        let g = loss_slope(kind, s * score) * s;
        let etd = -eta * g * self.w_div;
        if etd != T::zero() {
            x.add_scaled_to(etd, &mut self.w);
        }
        self.bias -= eta_bias * g;

        if mu >= T::one() {
            self.averaging = false;
            self.a_div = self.w_div;
            self.w_frac = T::one();
        } else {
            if !self.averaging {
                self.a.iter_mut().for_each(|v| *v = T::zero());
                self.averaging = true;
            }
            if etd != T::zero() {
                x.add_scaled_to(-self.w_frac * etd, &mut self.a);
            }
            self.a_div /= T::one() - mu;
            self.w_frac += mu * self.a_div / self.w_div;
        }
    }

    fn renormalize(&mut self) {
        if self.averaging {
            for (a, &w) in self.a.iter_mut().zip(&self.w) {
                *a = (*a + self.w_frac * w) / self.a_div;
            }
            self.w_frac = T::zero();
        } else {
            self.w_frac = T::one();
        }
        for w in &mut self.w {
            *w /= self.w_div;
        }
        self.w_div = T::one();
        self.a_div = T::one();
    }

    fn averaged(&self) -> Vec<T> {
        if self.averaging {
            self.a
                .iter()
                .zip(&self.w)
                .map(|(&a, &w)| (a + self.w_frac * w) / self.a_div)
                .collect()
        } else {
            self.w.iter().map(|&w| w / self.w_div).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::hinge_loss;
    use crate::vector::{DenseVector, SparseVector};

    fn points(raw: &[(f64, f64, bool)]) -> (Vec<DenseVector<f64>>, Vec<bool>) {
        raw.iter()
            .map(|&(a, b, y)| (DenseVector::new(vec![a, b]), y))
            .unzip()
    }

    #[test]
    fn zero_model_has_unit_mean_hinge() {
        let (xs, ys) = points(&[(1.0, 2.0, true), (-3.0, 0.5, false), (0.0, 0.0, true)]);
        let zero = BinaryLinearModel::<f64>::zeros(2, ModelKind::HingeSvm);
        let mean: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, &y)| hinge_loss(signed::<f64>(y) * zero.decision_value(x).unwrap()))
            .sum::<f64>()
            / xs.len() as f64;
        assert_eq!(mean, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let (xs, ys) = points(&[(1.0, 2.0, true), (2.0, 2.0, true)]);
        let cfg = TrainConfig::default();
        assert_eq!(fit_binary_svm(&xs, &ys, &cfg), Err(LinearError::SingleClassInput));
        assert_eq!(
            fit_binary_logistic(&xs, &ys[..1], &cfg),
            Err(LinearError::LengthMismatch { features: 2, labels: 1 })
        );
        let empty: Vec<DenseVector<f64>> = Vec::new();
        assert_eq!(fit_binary_logistic(&empty, &[], &cfg), Err(LinearError::EmptyInput));
        let mixed = vec![DenseVector::new(vec![1.0]), DenseVector::new(vec![1.0, 2.0])];
        assert!(matches!(
            fit_binary_logistic(&mixed, &[true, false], &cfg),
            Err(LinearError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn one_dimensional_signs_are_exact() {
        let xs: Vec<DenseVector<f64>> = [1.0, -1.0, 1.0, -1.0].iter().map(|&v| DenseVector::new(vec![v])).collect();
        let ys = [true, false, true, false];
        let cfg = TrainConfig {
            regularization_c: 100.0,
            ..TrainConfig::default()
        };
        let m = fit_binary_svm(&xs, &ys, &cfg).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(m.decision_value(x).unwrap() > 0.0, y);
        }
    }

    #[test]
    fn sparse_and_dense_inputs_train_identically() {
        let raw = [(1.0, 0.0, true), (0.0, 2.0, false), (1.5, 0.5, true), (0.0, 1.0, false), (2.0, 0.0, true)];
        let (dense, ys) = points(&raw);
        let sparse: Vec<SparseVector<f64>> = raw
            .iter()
            .map(|&(a, b, _)| SparseVector::from_entries(2, vec![(0, a), (1, b)]))
            .collect();
        let cfg = TrainConfig::default();
        let a = fit_binary(ModelKind::Logistic, &dense, &ys, &cfg).unwrap();
        let b = fit_binary(ModelKind::Logistic, &sparse, &ys, &cfg).unwrap();
        assert_eq!(a.epochs, b.epochs);
        for (p, q) in a.model.weights.iter().zip(&b.model.weights) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (xs, ys) = points(&[(1.0, 2.0, true), (-3.0, 0.5, false), (0.5, 0.1, true), (-1.0, -1.0, false)]);
        let cfg = TrainConfig {
            seed: 11,
            ..TrainConfig::default()
        };
        let a = fit_binary(ModelKind::HingeSvm, &xs, &ys, &cfg).unwrap();
        let b = fit_binary(ModelKind::HingeSvm, &xs, &ys, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_state_matches_plain_recursion() {
        // Replays the update rule on explicit vectors and compares.
        let (xs, ys) = points(&[(1.0, 2.0, true), (-3.0, 0.5, false), (0.5, -0.1, true)]);
        let (lambda, eta) = (0.05, 0.3);
        let mut state = Asgd::<f64>::new(2);
        let (mut w, mut b) = (vec![0.0; 2], 0.0);
        let mut aw = vec![0.0; 2];
        for t in 0..40 {
            let i = t % 3;
            let mu = if t < 3 { 1.0 } else { 1.0 / (t - 3 + 2) as f64 };
            state.step(ModelKind::Logistic, &xs[i], ys[i], eta, 2.0 * eta, lambda, mu);

            let s = signed::<f64>(ys[i]);
            let score = xs[i].dot(&w) + b;
            let g = loss_slope(ModelKind::Logistic, s * score) * s;
            for (wj, xj) in w.iter_mut().zip(xs[i].as_slice()) {
                *wj = (1.0 - eta * lambda) * *wj - eta * g * xj;
            }
            b -= 2.0 * eta * g;
            for (a, wj) in aw.iter_mut().zip(&w) {
                *a += mu * (wj - *a);
            }
            if t == 20 {
                state.renormalize();
            }
        }
        let sw = state.averaged();
        for (p, q) in sw.iter().zip(&aw) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }
}
