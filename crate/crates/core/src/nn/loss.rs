use super::{Mat, Scalar};

/// Row-wise softmax, max-shifted.
pub fn softmax_rows<F: Scalar>(logits: &Mat<F>) -> Mat<F> {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    out
}

/// Mean cross-entropy over rows and its gradient w.r.t. the logits, the
/// gradient already multiplied by `weight / T`.
pub fn cross_entropy<F: Scalar>(logits: &Mat<F>, targets: &[usize], weight: F) -> (F, Mat<F>) {
    assert_eq!(logits.rows, targets.len());
    let t_len = targets.len();
    if t_len == 0 {
        return (F::zero(), Mat::zeros(0, logits.cols));
    }
    let probs = softmax_rows(logits);
    let n = F::c(t_len as f64);
    let mut loss = F::zero();
    let mut grad = probs.clone();
    for (r, &y) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let lse = max + row.iter().fold(F::zero(), |s, &v| s + (v - max).exp()).ln();
        loss = loss + (lse - row[y]);
        let g = grad.row_mut(r);
        g[y] = g[y] - F::one();
        for v in g.iter_mut() {
            *v = *v * weight / n;
        }
    }
    (loss / n, grad)
}
