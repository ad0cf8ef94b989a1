use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Row-wise L2 normalization; also returns the original norms.
pub fn l2_normalize_rows<T: Scalar>(z: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>)> {
    let d = z.row_len();
    let mut out = z.clone();
    let mut norms = Vec::with_capacity(z.rows());
    for (i, row) in out.data.chunks_mut(d).enumerate() {
        let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > T::ZERO) || !norm.is_finite() {
            return Err(Error::Numeric(format!("embedding row {i} has norm {norm:?}")));
        }
        for v in row.iter_mut() {
            *v = *v / norm;
        }
        norms.push(norm);
    }
    Ok((out, norms))
}

/// NT-Xent loss over `2N` embeddings where rows `2i` and `2i + 1` are the two
/// views of instance `i`, and its gradient with respect to `z`.
///
/// For anchor `i` with positive `p(i)`, the term is
/// `-log(exp(s_ip / t) / sum_{k != i} exp(s_ik / t))` with cosine
/// similarity `s`; the loss averages over all `2N` anchors.
pub fn nt_xent_loss<T: Scalar>(z: &Tensor<T>, temperature: f64) -> Result<(T, Tensor<T>)> {
    if z.shape.len() != 2 {
        return Err(Error::Shape(format!("expected 2N x D embeddings, got {:?}", z.shape)));
    }
    let (m, d) = (z.shape[0], z.shape[1]);
    if m < 2 || m % 2 != 0 {
        return Err(Error::Shape(format!("need an even number (>= 2) of rows, got {m}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::param("temperature", format!("must be > 0, got {temperature}")));
    }
    let (u, norms) = l2_normalize_rows(z)?;
    let inv_t = T::from_f64(1.0 / temperature);

    let mut sim = vec![T::ZERO; m * m];
    T::gemm(m, d, m, inv_t, &u.data, false, &u.data, true, T::ZERO, &mut sim);

    // Per-anchor softmax over k != i, with max subtraction.
    let scale = T::from_f64(1.0 / m as f64);
    let mut loss = T::ZERO;
    let mut g = vec![T::ZERO; m * m];
    for i in 0..m {
        let pos = i ^ 1;
        let row = &sim[i * m..(i + 1) * m];
        let max = row
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &v)| v)
            .fold(row[pos], |a, b| if b > a { b } else { a });
        let denom: T = (0..m).filter(|&k| k != i).map(|k| (row[k] - max).exp()).sum();
        let lse = max + denom.ln();
        loss += lse - row[pos];
        for k in (0..m).filter(|&k| k != i) {
            let p = (row[k] - lse).exp();
            g[i * m + k] = (p - if k == pos { T::ONE } else { T::ZERO }) * scale;
        }
    }
    loss *= scale;

    // dL/du_i = (1/t) sum_k (g_ik + g_ki) u_k
    let mut sym = vec![T::ZERO; m * m];
    for i in 0..m {
        for k in 0..m {
            sym[i * m + k] = g[i * m + k] + g[k * m + i];
        }
    }
    let mut du = vec![T::ZERO; m * d];
    T::gemm(m, m, d, inv_t, &sym, false, &u.data, false, T::ZERO, &mut du);

    // Back through the normalization: (I - u u^T) du / |z|
    let mut grad = Tensor::zeros(vec![m, d]);
    for i in 0..m {
        let ui = u.row(i);
        let dui = &du[i * d..(i + 1) * d];
        let dot: T = ui.iter().zip(dui).map(|(&a, &b)| a * b).sum();
        let inv_norm = T::ONE / norms[i];
        for (o, (&a, &b)) in grad.row_mut(i).iter_mut().zip(ui.iter().zip(dui)) {
            *o = (b - dot * a) * inv_norm;
        }
    }
    Ok((loss, grad))
}
