use crate::error::{Error, Result};
use crate::nn::DenseMatrix;
use crate::scalar::Scalar;

/// Mean binary cross-entropy on logits and its gradient w.r.t. the logits.
///
/// Uses `max(x,0) - x·y + ln(1 + e^{-|x|})`, which never overflows.
pub fn bce_with_logits<T: Scalar>(logits: &[T], targets: &[T]) -> Result<(T, Vec<T>)> {
    if logits.is_empty() {
        return Err(Error::Empty("bce_with_logits on zero logits".into()));
    }
    if logits.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} targets", logits.len()),
            actual: format!("{}", targets.len()),
        });
    }
    let count = T::of_usize(logits.len());
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(logits.len());
    for (&x, &y) in logits.iter().zip(targets) {
        loss += x.max(T::zero()) - x * y + (-x.abs()).exp().ln_1p();
        grad.push((sigmoid(x) - y) / count);
    }
    Ok((loss / count, grad))
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Mean softmax cross-entropy over the selected rows; gradient is w.r.t. the
/// full logit matrix (zero on unselected rows).
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &DenseMatrix<T>,
    rows: &[usize],
    labels: &[usize],
) -> Result<(T, DenseMatrix<T>)> {
    if rows.is_empty() {
        return Err(Error::Empty("softmax_cross_entropy on zero rows".into()));
    }
    let count = T::of_usize(rows.len());
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    let mut loss = T::zero();
    for (&r, &y) in rows.iter().zip(labels) {
        let row = logits.row(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + sum.ln();
        loss += log_z - row[y];
        let g = grad.row_mut(r);
        for (c, &v) in row.iter().enumerate() {
            g[c] = (v - log_z).exp() / count;
        }
        g[y] -= T::one() / count;
    }
    Ok((loss / count, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_logit_positive_target_is_ln2() {
        let (l, g) = bce_with_logits(&[0.0f64], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(g, vec![-0.5]);
    }

    #[test]
    fn large_logit_is_stable() {
        let (l, _) = bce_with_logits(&[40.0f64, -800.0], &[1.0, 0.0]).unwrap();
        assert!(l.is_finite());
        assert!(l < 1e-15);
        let (l, _) = bce_with_logits(&[800.0f64], &[0.0]).unwrap();
        assert_eq!(l, 800.0);
    }

    #[test]
    fn matches_naive_formula_on_random_batch() {
        use rand::Rng;
        let mut rng = crate::rng::rng_from(11);
        let logits: Vec<f64> = (0..64).map(|_| rng.random_range(-8.0..8.0)).collect();
        let targets: Vec<f64> = (0..64).map(|_| f64::from(rng.random_range(0..2u8))).collect();
        let naive = logits
            .iter()
            .zip(&targets)
            .map(|(&x, &y)| {
                let p = (1.0 / (1.0 + (-x).exp())).clamp(1e-12, 1.0 - 1e-12);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 64.0;
        let (l, _) = bce_with_logits(&logits, &targets).unwrap();
        assert!((l - naive).abs() < 1e-9, "{l} vs {naive}");
    }

    #[test]
    fn empty_input_errors() {
        assert!(bce_with_logits::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn softmax_gradient_rows_sum_to_zero() {
        let logits = DenseMatrix::from_fn(3, 4, |r, c| (r as f64) * 0.3 - c as f64);
        let (l, g) = softmax_cross_entropy(&logits, &[0, 2], &[1, 3]).unwrap();
        assert!(l > 0.0);
        for r in [0, 2] {
            assert!(g.row(r).iter().sum::<f64>().abs() < 1e-15);
        }
        assert!(g.row(1).iter().all(|&v| v == 0.0));
    }
}
