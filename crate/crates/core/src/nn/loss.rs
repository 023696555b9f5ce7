//! Binary cross-entropy loss.

use super::{Matrix, Scalar};

/// Probabilities are clamped into `[CLAMP, 1 - CLAMP]` before the logs; the
/// gradient treats the clamp as the identity so it matches the closed form
/// `(p - d) / (K p (1 - p))` elementwise.
pub const BCE_CLAMP: f64 = 1e-7;

/// Mean binary cross-entropy over a batch.
///
/// `p` holds probabilities (one row per sample, K columns), `labels` holds
/// 0/1 targets of the same shape. Returns the scalar loss
/// `-(1/K) sum_i d_i ln p_i + (1 - d_i) ln(1 - p_i)` averaged over rows,
/// and its gradient with respect to `p`.
pub fn bce_loss<T: Scalar>(p: &Matrix<T>, labels: &Matrix<T>) -> (f64, Matrix<T>) {
    assert_eq!(p.rows(), labels.rows(), "batch size mismatch");
    assert_eq!(p.cols(), labels.cols(), "label width mismatch");
    let k = p.cols();
    let rows = p.rows();
    let lo = T::from_f64(BCE_CLAMP);
    let hi = T::from_f64(1.0 - BCE_CLAMP);
    let scale = T::from_f64(1.0 / (k as f64 * rows as f64));

    let mut grad = Matrix::zeros(rows, k);
    let mut loss = 0.0f64;
    for r in 0..rows {
        let pr = p.row(r);
        let dr = labels.row(r);
        let gr = grad.row_mut(r);
        for j in 0..k {
            let pc = pr[j].max(lo).min(hi);
            let d = dr[j];
            loss -= (d.to_f64()) * pc.to_f64().ln()
                + (1.0 - d.to_f64()) * (1.0 - pc.to_f64()).ln();
            gr[j] = scale * (pc - d) / (pc * (T::one() - pc));
        }
    }
    (loss / (k as f64 * rows as f64), grad)
}
