//! Full-batch training objectives and their gradients.

use super::ModelKind;
use crate::scalar::{sigmoid, softplus};
use crate::vector::FeatureVector;
use crate::Scalar;

/// `log(1 + exp(-m))` for margin `m = y·f(x)`.
#[inline]
pub fn logistic_loss<T: Scalar>(margin: T) -> T {
    softplus(-margin)
}

/// `max(0, 1 - m)`.
#[inline]
pub fn hinge_loss<T: Scalar>(margin: T) -> T {
    (T::one() - margin).max(T::zero())
}

/// Derivative (subgradient for the hinge) of the loss w.r.t. the margin.
#[inline]
pub(crate) fn loss_slope<T: Scalar>(kind: ModelKind, margin: T) -> T {
    match kind {
        ModelKind::Logistic => -sigmoid(-margin),
        ModelKind::HingeSvm => {
            if margin < T::one() {
                -T::one()
            } else {
                T::zero()
            }
        }
    }
}

#[inline]
pub(crate) fn signed<T: Scalar>(positive: bool) -> T {
    if positive {
        T::one()
    } else {
        -T::one()
    }
}

/// `‖w‖²/(2C) + Σ_i loss(y_i·(w·x_i + b))`.
pub fn objective<T: Scalar, X: FeatureVector<T>>(
    kind: ModelKind,
    weights: &[T],
    bias: T,
    xs: &[X],
    ys: &[bool],
    c: T,
) -> T {
    let reg = weights.iter().map(|&w| w * w).sum::<T>() / (T::of(2.0) * c);
    let data: T = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let m = signed::<T>(y) * (x.dot(weights) + bias);
            match kind {
                ModelKind::Logistic => logistic_loss(m),
                ModelKind::HingeSvm => hinge_loss(m),
            }
        })
        .sum();
    reg + data
}

/// Gradient of the logistic [`objective`] w.r.t. `(w, b)`.
pub fn logistic_gradient<T: Scalar, X: FeatureVector<T>>(
    weights: &[T],
    bias: T,
    xs: &[X],
    ys: &[bool],
    c: T,
) -> (Vec<T>, T) {
    let mut grad: Vec<T> = weights.iter().map(|&w| w / c).collect();
    let mut grad_b = T::zero();
    for (x, &y) in xs.iter().zip(ys) {
        let s = signed::<T>(y);
        let g = loss_slope(ModelKind::Logistic, s * (x.dot(weights) + bias)) * s;
        x.add_scaled_to(g, &mut grad);
        grad_b += g;
    }
    (grad, grad_b)
}

/// Exact minimizer over `b` of `Σ_i loss(y_i·(s_i + b))` for fixed scores.
///
/// The hinge sum is piecewise linear with slope `−P` far left and `+1` added
/// at each breakpoint `y_i − s_i`, so it is flat between the `P`-th and
/// `(P+1)`-th smallest breakpoints (`P` = positives); the midpoint is used.
/// The logistic sum is strictly convex; its root is bracketed and refined by
/// safeguarded Newton steps. Both classes must be present.
pub fn optimal_bias<T: Scalar>(kind: ModelKind, scores: &[T], ys: &[bool]) -> T {
    let positives = ys.iter().filter(|&&y| y).count();
    debug_assert!(positives > 0 && positives < ys.len());
    match kind {
        ModelKind::HingeSvm => {
            let mut breaks: Vec<T> = scores
                .iter()
                .zip(ys)
                .map(|(&s, &y)| signed::<T>(y) - s)
                .collect();
            breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
            (breaks[positives - 1] + breaks[positives]) / T::of(2.0)
        }
        ModelKind::Logistic => logistic_bias(scores, ys),
    }
}

fn logistic_bias<T: Scalar>(scores: &[T], ys: &[bool]) -> T {
    // derivative and curvature of Σ softplus(−y(s + b)) w.r.t. b
    let eval = |b: T| {
        let mut g = T::zero();
        let mut h = T::zero();
        for (&s, &y) in scores.iter().zip(ys) {
            let p = sigmoid(s + b);
            g += p - if y { T::one() } else { T::zero() };
            h += p * (T::one() - p);
        }
        (g, h)
    };
    let mut lo = -T::one();
    let mut hi = T::one();
    while eval(lo).0 > T::zero() {
        lo *= T::of(2.0);
    }
    while eval(hi).0 < T::zero() {
        hi *= T::of(2.0);
    }
    let tol = T::epsilon() * T::of_usize(4 * scores.len());
    let mut b = (lo + hi) / T::of(2.0);
    for _ in 0..200 {
        let (g, h) = eval(b);
        if g.abs() <= tol {
            break;
        }
        if g > T::zero() {
            hi = b;
        } else {
            lo = b;
        }
        let newton = b - g / h;
        let next = if h > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) / T::of(2.0)
        };
        if next == b {
            break;
        }
        b = next;
    }
    b
}
