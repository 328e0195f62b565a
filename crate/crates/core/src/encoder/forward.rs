//! Forward path of the toy encoder: patch embedding, the interleaved
//! window/full attention stack, and the 2x2 patch merger.

use crate::kernels::{rms_norm, segmented_attention, silu, swiglu_ffn, DenseMatrix};
use crate::rope::apply_rope_2d;

use super::{EncoderConfig, EncoderError, EncoderWeights, WindowLayout};

const NORM_EPS: f64 = 1e-6;
const ROPE_THETA: f64 = 10_000.0;

/// One RGB frame, row-major pixels, 3 channels per pixel.
#[derive(Debug, Clone)]
pub struct Frame {
    pub h: usize,
    pub w: usize,
    /// h*w*3 values, [row][col][channel].
    pub data: Vec<f64>,
}

impl Frame {
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Result<Self, EncoderError> {
        if data.len() != h * w * 3 {
            return Err(EncoderError::FrameSizeMismatch {
                expected_h: h,
                expected_w: w,
                got_h: data.len() / (w.max(1) * 3),
                got_w: w,
            });
        }
        Ok(Frame { h, w, data })
    }

    pub fn zeros(h: usize, w: usize) -> Self {
        Frame {
            h,
            w,
            data: vec![0.0; h * w * 3],
        }
    }

    fn pixel(&self, r: usize, c: usize, ch: usize) -> f64 {
        self.data[(r * self.w + c) * 3 + ch]
    }
}

/// Embeds a one- or two-frame temporal group into a grid of patch features.
/// The embedding always consumes two frames; a single frame is duplicated so
/// images and videos share one weight shape.
pub fn patch_embed(
    frames: &[Frame],
    weights: &EncoderWeights,
    config: &EncoderConfig,
) -> Result<DenseMatrix, EncoderError> {
    config.validate()?;
    let pair: [&Frame; 2] = match frames {
        [single] => [single, single],
        [first, second] => [first, second],
        _ => return Err(EncoderError::BadTemporalGroup(frames.len())),
    };
    let (h, w) = (pair[0].h, pair[0].w);
    if pair[1].h != h || pair[1].w != w {
        return Err(EncoderError::FrameSizeMismatch {
            expected_h: h,
            expected_w: w,
            got_h: pair[1].h,
            got_w: pair[1].w,
        });
    }
    let p = config.patch;
    if h % p != 0 || w % p != 0 {
        return Err(EncoderError::FrameSizeMismatch {
            expected_h: (h / p) * p,
            expected_w: (w / p) * p,
            got_h: h,
            got_w: w,
        });
    }
    let (grid_h, grid_w) = (h / p, w / p);
    let mut out = DenseMatrix::zeros(grid_h * grid_w, config.hidden);
    let mut patch_vec = vec![0.0; EncoderWeights::patch_input_dim(config)];
    for gr in 0..grid_h {
        for gc in 0..grid_w {
            let mut idx = 0;
            for frame in pair {
                for pr in 0..p {
                    for pc in 0..p {
                        for ch in 0..3 {
                            patch_vec[idx] = frame.pixel(gr * p + pr, gc * p + pc, ch);
                            idx += 1;
                        }
                    }
                }
            }
            let mut feat = weights.patch_embed_w.matvec(&patch_vec)?;
            for (f, b) in feat.iter_mut().zip(&weights.patch_embed_b) {
                *f += b;
            }
            out.row_mut(gr * grid_w + gc).copy_from_slice(&feat);
        }
    }
    Ok(out)
}

fn add_bias_rows(m: &mut DenseMatrix, bias: &[f64]) {
    for i in 0..m.rows() {
        for (v, b) in m.row_mut(i).iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn permute_rows(m: &DenseMatrix, order: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for (slot, &src) in order.iter().enumerate() {
        out.row_mut(slot).copy_from_slice(m.row(src));
    }
    out
}

/// Pre-norm transformer stack: norm -> multi-head attention (2D rotary on
/// Q/K, windowed or full per layer) -> residual -> norm -> SwiGLU ->
/// residual.
pub fn vit_forward(
    features: &DenseMatrix,
    layout: &WindowLayout,
    vit_ids: &[(u64, u64)],
    config: &EncoderConfig,
    weights: &EncoderWeights,
) -> Result<DenseMatrix, EncoderError> {
    config.validate()?;
    let n = features.rows();
    if layout.num_patches() != n || vit_ids.len() != n {
        return Err(EncoderError::ConfigMismatch(format!(
            "layout/ids cover {}/{} patches, features hold {}",
            layout.num_patches(),
            vit_ids.len(),
            n
        )));
    }
    if features.cols() != config.hidden {
        return Err(EncoderError::ConfigMismatch(format!(
            "feature width {} != hidden {}",
            features.cols(),
            config.hidden
        )));
    }
    let dh = config.head_dim();
    let full_segments = vec![0usize; n];

    let mut x = features.clone();
    for (li, lw) in weights.layers.iter().enumerate() {
        // Attention sub-block.
        let mut normed = DenseMatrix::zeros(n, config.hidden);
        for i in 0..n {
            normed
                .row_mut(i)
                .copy_from_slice(&rms_norm(x.row(i), &lw.attn_norm, NORM_EPS)?);
        }
        let mut q = lw.wq.map_rows(&normed)?;
        let mut k = lw.wk.map_rows(&normed)?;
        let mut v = lw.wv.map_rows(&normed)?;
        add_bias_rows(&mut q, &lw.bq);
        add_bias_rows(&mut k, &lw.bk);
        add_bias_rows(&mut v, &lw.bv);

        // Rotate Q and K per head by the patch's global grid coordinates.
        for m in [&mut q, &mut k] {
            for i in 0..n {
                let coords = vit_ids[i];
                let row = m.row_mut(i);
                for head in 0..config.heads {
                    let s = head * dh;
                    let rotated = apply_rope_2d(&row[s..s + dh], coords, dh, ROPE_THETA)?;
                    row[s..s + dh].copy_from_slice(&rotated);
                }
            }
        }

        let segments: &[usize] = if config.full_attn_layers.contains(&li) {
            &full_segments
        } else {
            &layout.segments
        };
        let qp = permute_rows(&q, &layout.order);
        let kp = permute_rows(&k, &layout.order);
        let vp = permute_rows(&v, &layout.order);

        let mut attn_window_order = DenseMatrix::zeros(n, config.hidden);
        for head in 0..config.heads {
            let s = head * dh;
            let slice = |m: &DenseMatrix| {
                let mut out = DenseMatrix::zeros(n, dh);
                for i in 0..n {
                    out.row_mut(i).copy_from_slice(&m.row(i)[s..s + dh]);
                }
                out
            };
            let head_out =
                segmented_attention(&slice(&qp), &slice(&kp), &slice(&vp), segments)?;
            for i in 0..n {
                attn_window_order.row_mut(i)[s..s + dh].copy_from_slice(head_out.row(i));
            }
        }
        let attn = permute_rows(&attn_window_order, &layout.inverse);
        let mut proj = lw.wo.map_rows(&attn)?;
        add_bias_rows(&mut proj, &lw.bo);
        for i in 0..n {
            for (xv, pv) in x.row_mut(i).iter_mut().zip(proj.row(i)) {
                *xv += pv;
            }
        }

        // Feed-forward sub-block.
        for i in 0..n {
            let normed = rms_norm(x.row(i), &lw.ffn_norm, NORM_EPS)?;
            let ff = swiglu_ffn(&normed, &lw.w_gate, &lw.w_up, &lw.w_down)?;
            for (xv, fv) in x.row_mut(i).iter_mut().zip(&ff) {
                *xv += fv;
            }
        }
    }
    Ok(x)
}

/// Merges each 2x2 block of patch features (row-major concat order) through
/// a two-layer MLP down to the LLM embedding width.
pub fn merge_patches(
    features: &DenseMatrix,
    grid_h: usize,
    grid_w: usize,
    weights: &EncoderWeights,
    config: &EncoderConfig,
) -> Result<DenseMatrix, EncoderError> {
    config.validate()?;
    if grid_h % 2 != 0 || grid_w % 2 != 0 {
        return Err(EncoderError::OddGrid(grid_h, grid_w));
    }
    if features.rows() != grid_h * grid_w || features.cols() != config.hidden {
        return Err(EncoderError::ConfigMismatch(format!(
            "features {}x{} do not match grid {}x{} and hidden {}",
            features.rows(),
            features.cols(),
            grid_h,
            grid_w,
            config.hidden
        )));
    }
    let h = config.hidden;
    let (mh, mw) = (grid_h / 2, grid_w / 2);
    let mut out = DenseMatrix::zeros(mh * mw, config.merger_out);
    let mut concat = vec![0.0; 4 * h];
    for mr in 0..mh {
        for mc in 0..mw {
            for (slot, (dr, dc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                let patch = (2 * mr + dr) * grid_w + (2 * mc + dc);
                concat[slot * h..(slot + 1) * h].copy_from_slice(features.row(patch));
            }
            let mut mid = weights.merger_w1.matvec(&concat)?;
            for (v, b) in mid.iter_mut().zip(&weights.merger_b1) {
                *v = silu(*v + b);
            }
            let mut tok = weights.merger_w2.matvec(&mid)?;
            for (v, b) in tok.iter_mut().zip(&weights.merger_b2) {
                *v += b;
            }
            out.row_mut(mr * mw + mc).copy_from_slice(&tok);
        }
    }
    Ok(out)
}
