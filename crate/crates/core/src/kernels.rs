//! Dense numeric primitives shared by the encoder: RMSNorm, SwiGLU feed
//! forward, and segmented (windowed) attention.
//!
//! All math is f64. Softmax uses max-subtraction only; no further
//! stabilization tricks are applied.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix data length {got} does not equal rows*cols = {expected}")]
    BadShape { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("head dimension must be positive")]
    EmptyHeadDim,
    #[error("epsilon must be positive")]
    BadEps,
    #[error("segment ids must form contiguous groups (segment {0} reappears)")]
    NonContiguousSegments(usize),
}

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, KernelError> {
        if data.len() != rows * cols {
            return Err(KernelError::BadShape {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::NonFinite("matrix data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// y = self · x, treating self as a [rows ← cols] linear map.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, KernelError> {
        if x.len() != self.cols {
            return Err(KernelError::DimMismatch {
                context: "matvec input",
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Applies `self` as a linear map to every row of `xs`, returning a
    /// [xs.rows × self.rows] matrix.
    pub fn map_rows(&self, xs: &DenseMatrix) -> Result<DenseMatrix, KernelError> {
        let mut out = DenseMatrix::zeros(xs.rows, self.rows);
        for i in 0..xs.rows {
            let y = self.matvec(xs.row(i))?;
            out.row_mut(i).copy_from_slice(&y);
        }
        Ok(out)
    }
}

pub fn silu(z: f64) -> f64 {
    z / (1.0 + (-z).exp())
}

/// RMS normalization: out_i = x_i / sqrt(mean(x²) + eps) · weight_i.
pub fn rms_norm(x: &[f64], weight: &[f64], eps: f64) -> Result<Vec<f64>, KernelError> {
    if x.len() != weight.len() {
        return Err(KernelError::DimMismatch {
            context: "rms_norm weight",
            expected: x.len(),
            got: weight.len(),
        });
    }
    if x.is_empty() {
        return Err(KernelError::DimMismatch {
            context: "rms_norm input",
            expected: 1,
            got: 0,
        });
    }
    if eps < 0.0 {
        return Err(KernelError::BadEps);
    }
    let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inv = 1.0 / (mean_sq + eps).sqrt();
    Ok(x.iter().zip(weight).map(|(v, w)| v * inv * w).collect())
}

/// Gated feed-forward: w_down( silu(w_gate·x) ⊙ (w_up·x) ).
pub fn swiglu_ffn(
    x: &[f64],
    w_gate: &DenseMatrix,
    w_up: &DenseMatrix,
    w_down: &DenseMatrix,
) -> Result<Vec<f64>, KernelError> {
    let gate = w_gate.matvec(x)?;
    let up = w_up.matvec(x)?;
    if gate.len() != up.len() {
        return Err(KernelError::DimMismatch {
            context: "swiglu gate/up widths",
            expected: gate.len(),
            got: up.len(),
        });
    }
    let hidden: Vec<f64> = gate.iter().zip(&up).map(|(g, u)| silu(*g) * u).collect();
    w_down.matvec(&hidden)
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Scaled dot-product attention restricted to contiguous segments. Tokens
/// never attend across segments; a single segment for all tokens is full
/// attention.
pub fn segmented_attention(
    q: &DenseMatrix,
    k: &DenseMatrix,
    v: &DenseMatrix,
    segments: &[usize],
) -> Result<DenseMatrix, KernelError> {
    let n = q.rows;
    let dh = q.cols;
    if dh == 0 {
        return Err(KernelError::EmptyHeadDim);
    }
    for (m, name) in [(k, "K shape"), (v, "V shape")] {
        if m.rows != n || m.cols != dh {
            return Err(KernelError::DimMismatch {
                context: name,
                expected: n * dh,
                got: m.rows * m.cols,
            });
        }
    }
    if segments.len() != n {
        return Err(KernelError::DimMismatch {
            context: "segment ids",
            expected: n,
            got: segments.len(),
        });
    }
    // Contiguity check: a segment id may not reappear after a different one.
    let mut seen: Vec<usize> = Vec::new();
    for &s in segments {
        match seen.last() {
            Some(&last) if last == s => {}
            _ => {
                if seen.contains(&s) {
                    return Err(KernelError::NonContiguousSegments(s));
                }
                seen.push(s);
            }
        }
    }

    let scale = 1.0 / (dh as f64).sqrt();
    let mut out = DenseMatrix::zeros(n, dh);
    let mut start = 0;
    while start < n {
        let seg = segments[start];
        let mut end = start;
        while end < n && segments[end] == seg {
            end += 1;
        }
        for i in start..end {
            let mut logits: Vec<f64> = (start..end)
                .map(|j| {
                    q.row(i)
                        .iter()
                        .zip(k.row(j))
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        * scale
                })
                .collect();
            if logits.iter().any(|v| !v.is_finite()) {
                return Err(KernelError::NonFinite("attention logits"));
            }
            softmax_in_place(&mut logits);
            for (p, j) in logits.iter().zip(start..end) {
                for c in 0..dh {
                    out.data[i * dh + c] += p * v.get(j, c);
                }
            }
        }
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn full_attention(
        q: &DenseMatrix,
        k: &DenseMatrix,
        v: &DenseMatrix,
    ) -> DenseMatrix {
        segmented_attention(q, k, v, &vec![0; q.rows()]).unwrap()
    }

    #[test]
    fn rms_norm_identity_case() {
        let out = rms_norm(&[1.0; 4], &[1.0; 4], 0.0).unwrap();
        assert_eq!(out, vec![1.0; 4]);
    }

    #[test]
    fn rms_norm_zero_input() {
        let out = rms_norm(&[0.0, 0.0], &[1.0, 1.0], 1e-6).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn rms_norm_hand_computed() {
        // rms([3,4]) = sqrt((9+16)/2) = sqrt(12.5)
        let out = rms_norm(&[3.0, 4.0], &[1.0, 1.0], 0.0).unwrap();
        let rms = 12.5f64.sqrt();
        assert!((out[0] - 3.0 / rms).abs() < 1e-5);
        assert!((out[1] - 4.0 / rms).abs() < 1e-5);
        assert!((out[0] - 0.84853).abs() < 1e-5);
        assert!((out[1] - 1.13137).abs() < 1e-5);
    }

    #[test]
    fn rms_norm_dim_mismatch() {
        assert!(rms_norm(&[1.0, 2.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn swiglu_zero_input() {
        let w = DenseMatrix::new(3, 2, vec![1.0; 6]).unwrap();
        let wd = DenseMatrix::new(2, 3, vec![1.0; 6]).unwrap();
        let out = swiglu_ffn(&[0.0, 0.0], &w, &w, &wd).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn swiglu_scalar_silu() {
        // d=m=1, unit weights: out = silu(1)*1 = 1/(1+e^-1)
        let one = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let out = swiglu_ffn(&[1.0], &one, &one, &one).unwrap();
        assert!((out[0] - 0.73106).abs() < 1e-5);
    }

    #[test]
    fn swiglu_saturates_negative() {
        let one = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
        let out = swiglu_ffn(&[-20.0], &one, &one, &one).unwrap();
        assert!(out[0].abs() < 1e-6);
    }

    #[test]
    fn attention_single_token_returns_v() {
        let q = DenseMatrix::new(1, 2, vec![0.3, -0.7]).unwrap();
        let k = DenseMatrix::new(1, 2, vec![2.0, 1.0]).unwrap();
        let v = DenseMatrix::new(1, 2, vec![5.0, -3.0]).unwrap();
        let out = segmented_attention(&q, &k, &v, &[0]).unwrap();
        assert_eq!(out.row(0), v.row(0));
    }

    #[test]
    fn attention_identical_keys_average_values() {
        let q = DenseMatrix::new(2, 2, vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let k = DenseMatrix::new(2, 2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        let v = DenseMatrix::new(2, 2, vec![4.0, 0.0, 0.0, 2.0]).unwrap();
        let out = segmented_attention(&q, &k, &v, &[0, 0]).unwrap();
        for i in 0..2 {
            assert!((out.get(i, 0) - 2.0).abs() < 1e-12);
            assert!((out.get(i, 1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn segmented_matches_pairwise_oracle() {
        // Two independent pairs must equal two separate full-attention runs.
        let q = DenseMatrix::new(4, 2, vec![0.1, 0.9, -0.4, 0.2, 1.1, -0.6, 0.0, 0.5]).unwrap();
        let k = DenseMatrix::new(4, 2, vec![0.7, -0.2, 0.3, 0.8, -0.5, 0.1, 0.9, 0.4]).unwrap();
        let v = DenseMatrix::new(4, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap();
        let out = segmented_attention(&q, &k, &v, &[0, 0, 1, 1]).unwrap();

        let sub = |m: &DenseMatrix, lo: usize| {
            DenseMatrix::new(2, 2, m.data()[lo * 2..(lo + 2) * 2].to_vec()).unwrap()
        };
        let first = full_attention(&sub(&q, 0), &sub(&k, 0), &sub(&v, 0));
        let second = full_attention(&sub(&q, 2), &sub(&k, 2), &sub(&v, 2));
        for c in 0..2 {
            assert!((out.get(0, c) - first.get(0, c)).abs() < 1e-12);
            assert!((out.get(1, c) - first.get(1, c)).abs() < 1e-12);
            assert!((out.get(2, c) - second.get(0, c)).abs() < 1e-12);
            assert!((out.get(3, c) - second.get(1, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_contiguous_segments_rejected() {
        let m = DenseMatrix::new(3, 1, vec![0.0; 3]).unwrap();
        let err = segmented_attention(&m, &m, &m, &[0, 1, 0]).unwrap_err();
        assert_eq!(err, KernelError::NonContiguousSegments(0));
    }

    #[test]
    fn nan_input_rejected() {
        assert!(DenseMatrix::new(1, 1, vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn rms_norm_scale_invariant(
            x in proptest::collection::vec(-10.0f64..10.0, 1..16),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
            let w = vec![1.0; x.len()];
            let base = rms_norm(&x, &w, 0.0).unwrap();
            let scaled_x: Vec<f64> = x.iter().map(|v| v * c).collect();
            let scaled = rms_norm(&scaled_x, &w, 0.0).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn attention_rows_sum_to_one(
            vals in proptest::collection::vec(-2.0f64..2.0, 24),
        ) {
            // Probe row-sum via constant V: output must be that constant.
            let q = DenseMatrix::new(4, 3, vals[0..12].to_vec()).unwrap();
            let k = DenseMatrix::new(4, 3, vals[12..24].to_vec()).unwrap();
            let v = DenseMatrix::new(4, 3, vec![1.0; 12]).unwrap();
            let out = segmented_attention(&q, &k, &v, &[0, 0, 1, 1]).unwrap();
            for x in out.data() {
                prop_assert!((x - 1.0).abs() < 1e-6);
            }
        }

        #[test]
        fn within_segment_permutation_equivariance(
            vals in proptest::collection::vec(-2.0f64..2.0, 36),
        ) {
            let q = DenseMatrix::new(6, 2, vals[0..12].to_vec()).unwrap();
            let k = DenseMatrix::new(6, 2, vals[12..24].to_vec()).unwrap();
            let v = DenseMatrix::new(6, 2, vals[24..36].to_vec()).unwrap();
            let segs = [0usize, 0, 0, 1, 1, 1];
            // Swap tokens 0<->2 (within segment 0) and 3<->5 (within segment 1).
            let perm = [2usize, 1, 0, 5, 4, 3];
            let permute = |m: &DenseMatrix| {
                let mut data = Vec::new();
                for &p in &perm { data.extend_from_slice(m.row(p)); }
                DenseMatrix::new(6, 2, data).unwrap()
            };
            let base = segmented_attention(&q, &k, &v, &segs).unwrap();
            let permuted =
                segmented_attention(&permute(&q), &permute(&k), &permute(&v), &segs).unwrap();
            for i in 0..6 {
                for c in 0..2 {
                    prop_assert!((permuted.get(i, c) - base.get(perm[i], c)).abs() < 1e-9);
                }
            }
        }
    }
}
