//! Population statistics used by the rationality checks.

use crate::scalar::Scalar;

pub fn mean<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    xs.iter().fold(S::zero(), |a, &x| a + x) / S::of(xs.len() as f64)
}

/// Population variance (divides by `len`, not `len - 1`).
pub fn variance<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    let m = mean(xs);
    xs.iter().fold(S::zero(), |a, &x| a + (x - m) * (x - m)) / S::of(xs.len() as f64)
}

pub fn std_dev<S: Scalar>(xs: &[S]) -> S {
    variance(xs).sqrt()
}

/// `std / mean`, or `None` when the mean is below `eps`.
pub fn coefficient_of_variation<S: Scalar>(xs: &[S], eps: S) -> Option<S> {
    let m = mean(xs);
    (m.abs() >= eps).then(|| std_dev(xs) / m)
}

/// `max_t |x_t - x_{t-1}| / mean(x)`, or `None` when the mean is below `eps`.
pub fn max_jump_ratio<S: Scalar>(xs: &[S], eps: S) -> Option<S> {
    let m = mean(xs);
    if m.abs() < eps {
        return None;
    }
    let jump = xs
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(S::zero(), S::max);
    Some(jump / m)
}
