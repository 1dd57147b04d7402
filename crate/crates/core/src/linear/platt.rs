//! Sigmoid calibration of decision values, `P(y = +1 | s) = 1 / (1 + exp(a·s + b))`.

use serde::{Deserialize, Serialize};

use super::LinearError;
use crate::scalar::{sigmoid, softplus};
use crate::Scalar;

const MAX_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
const MIN_STEP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibration<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> PlattCalibration<T> {
    pub fn probability(&self, score: T) -> T {
        sigmoid(-(self.a * score + self.b))
    }
}

/// Smoothed targets `t₊ = (N₊ + 1)/(N₊ + 2)` and `t₋ = 1/(N₋ + 2)`.
fn targets<T: Scalar>(ys: &[bool]) -> (T, T) {
    let pos = ys.iter().filter(|&&y| y).count();
    let neg = ys.len() - pos;
    let hi = T::of_usize(pos + 1) / T::of_usize(pos + 2);
    let lo = T::one() / T::of_usize(neg + 2);
    (hi, lo)
}

/// Negative log-likelihood of the smoothed targets under `(a, b)`.
pub fn platt_nll<T: Scalar>(a: T, b: T, scores: &[T], ys: &[bool]) -> T {
    let (hi, lo) = targets::<T>(ys);
    scores
        .iter()
        .zip(ys)
        .map(|(&s, &y)| {
            let t = if y { hi } else { lo };
            let f = a * s + b;
            t * softplus(f) + (T::one() - t) * softplus(-f)
        })
        .sum()
}

/// Gradient of [`platt_nll`] w.r.t. `(a, b)`.
pub fn platt_gradient<T: Scalar>(a: T, b: T, scores: &[T], ys: &[bool]) -> (T, T) {
    let (hi, lo) = targets::<T>(ys);
    let mut ga = T::zero();
    let mut gb = T::zero();
    for (&s, &y) in scores.iter().zip(ys) {
        let t = if y { hi } else { lo };
        let p = sigmoid(-(a * s + b));
        ga += (t - p) * s;
        gb += t - p;
    }
    (ga, gb)
}

/// Fits `(a, b)` by damped Newton iterations with backtracking, stopping
/// when the per-example gradient falls below 1e-8.
pub fn fit_platt<T: Scalar>(scores: &[T], ys: &[bool]) -> Result<PlattCalibration<T>, LinearError> {
    if scores.len() != ys.len() {
        return Err(LinearError::LengthMismatch {
            features: scores.len(),
            labels: ys.len(),
        });
    }
    let pos = ys.iter().filter(|&&y| y).count();
    let neg = ys.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(LinearError::SingleClassInput);
    }
    let (hi, lo) = targets::<T>(ys);
    let n = T::of_usize(ys.len());
    let ridge = T::of(1e-12);

    let mut a = T::zero();
    let mut b = (T::of_usize(neg + 1) / T::of_usize(pos + 1)).ln();
    let mut fval = platt_nll(a, b, scores, ys);

    for _ in 0..MAX_ITER {
        let (mut h11, mut h22, mut h21) = (ridge, ridge, T::zero());
        let (mut g1, mut g2) = (T::zero(), T::zero());
        for (&s, &y) in scores.iter().zip(ys) {
            let t = if y { hi } else { lo };
            let p = sigmoid(-(a * s + b));
            let d2 = p * (T::one() - p);
            h11 += s * s * d2;
            h22 += d2;
            h21 += s * d2;
            g1 += (t - p) * s;
            g2 += t - p;
        }
        if (g1 / n).abs() < T::of(GRAD_TOL) && (g2 / n).abs() < T::of(GRAD_TOL) {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let descent = g1 * da + g2 * db;

        let mut step = T::one();
        while step >= T::of(MIN_STEP) {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = platt_nll(na, nb, scores, ys);
            if nf < fval + T::of(1e-4) * step * descent {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= T::of(2.0);
        }
        if step < T::of(MIN_STEP) {
            break;
        }
    }
    Ok(PlattCalibration { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_probability_at_threshold() {
        let p = PlattCalibration { a: -1.7, b: 0.4 };
        assert_eq!(p.probability(-p.b / p.a), 0.5);
    }

    #[test]
    fn monotone_for_negative_slope() {
        let p = PlattCalibration { a: -2.0f64, b: 0.3 };
        let mut prev = 0.0;
        for i in -50..=50 {
            let q = p.probability(i as f64 * 0.2);
            assert!(q > prev);
            prev = q;
        }
    }

    #[test]
    fn separated_scores_give_negative_slope() {
        let scores: [f64; 8] = [-2.0, -1.5, -1.0, -0.2, 0.3, 1.0, 1.4, 2.2];
        let ys = [false, false, false, true, false, true, true, true];
        let p = fit_platt(&scores, &ys).unwrap();
        assert!(p.a < 0.0);
        let (ga, gb) = platt_gradient(p.a, p.b, &scores, &ys);
        assert!(ga.abs() < 1e-7 && gb.abs() < 1e-7);
    }

    #[test]
    fn single_class_is_rejected() {
        assert_eq!(fit_platt(&[0.1, 0.2], &[true, true]), Err(LinearError::SingleClassInput));
    }
}
