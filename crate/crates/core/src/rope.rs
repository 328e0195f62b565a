//! Rotary position embeddings: classic 1D (text), 2D (ViT patches), and the
//! multi-axis form whose position id carries (temporal, height, width)
//! components, with the temporal component aligned to absolute time for
//! video.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RopeError {
    #[error("head_dim must be even and positive (got {0})")]
    OddHeadDim(usize),
    #[error("section split {0}+{1}+{2} pairs does not equal head_dim/2 = {3}")]
    BadSectionSplit(usize, usize, usize, usize),
    #[error("vector length {got} does not match head_dim {expected}")]
    BadVectorLen { expected: usize, got: usize },
    #[error("ids_per_second must be positive (got {0})")]
    BadTimeScale(f64),
    #[error("frame times must be strictly increasing and non-negative (index {0})")]
    NonMonotonicTimes(usize),
}

/// Channel-pair allocation and frequency ladder parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeConfig {
    /// Number of channels rotated per head; must be even.
    pub head_dim: usize,
    pub base_theta: f64,
    /// (temporal, height, width) channel-pair counts; sums to head_dim/2.
    pub section_split: (usize, usize, usize),
    /// Temporal position ids per second of absolute time.
    pub ids_per_second: f64,
}

impl Default for RopeConfig {
    fn default() -> Self {
        RopeConfig {
            head_dim: 128,
            base_theta: 10_000.0,
            section_split: (16, 24, 24),
            ids_per_second: 2.0,
        }
    }
}

impl RopeConfig {
    pub fn validate(&self) -> Result<(), RopeError> {
        if self.head_dim == 0 || self.head_dim % 2 != 0 {
            return Err(RopeError::OddHeadDim(self.head_dim));
        }
        let (t, h, w) = self.section_split;
        if t + h + w != self.head_dim / 2 {
            return Err(RopeError::BadSectionSplit(t, h, w, self.head_dim / 2));
        }
        if self.ids_per_second <= 0.0 {
            return Err(RopeError::BadTimeScale(self.ids_per_second));
        }
        Ok(())
    }
}

/// Per-token (temporal, height, width) position ids, plus the id the next
/// span should start from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MRopeIds {
    pub triples: Vec<(u64, u64, u64)>,
    pub next_start: u64,
}

/// Inverse-frequency ladder: freq_i = theta^(-2i/head_dim).
pub fn rope_frequencies(config: &RopeConfig) -> Result<Vec<f64>, RopeError> {
    if config.head_dim == 0 || config.head_dim % 2 != 0 {
        return Err(RopeError::OddHeadDim(config.head_dim));
    }
    Ok((0..config.head_dim / 2)
        .map(|i| config.base_theta.powf(-2.0 * i as f64 / config.head_dim as f64))
        .collect())
}

fn rotate_pairs(vec: &mut [f64], pairs: &[(usize, f64)]) {
    for &(pair_idx, angle) in pairs {
        let (c, s) = (angle.cos(), angle.sin());
        let a = vec[2 * pair_idx];
        let b = vec[2 * pair_idx + 1];
        vec[2 * pair_idx] = a * c - b * s;
        vec[2 * pair_idx + 1] = a * s + b * c;
    }
}

/// Rotates each channel pair of `vec` by its section's position id times its
/// slice of the frequency ladder: temporal pairs first, then height, then
/// width.
pub fn apply_mrope(
    vec: &[f64],
    ids: (u64, u64, u64),
    config: &RopeConfig,
) -> Result<Vec<f64>, RopeError> {
    config.validate()?;
    if vec.len() != config.head_dim {
        return Err(RopeError::BadVectorLen {
            expected: config.head_dim,
            got: vec.len(),
        });
    }
    let freqs = rope_frequencies(config)?;
    let (t_pairs, h_pairs, _) = config.section_split;
    let mut out = vec.to_vec();
    let rotations: Vec<(usize, f64)> = (0..config.head_dim / 2)
        .map(|i| {
            let pos = if i < t_pairs {
                ids.0
            } else if i < t_pairs + h_pairs {
                ids.1
            } else {
                ids.2
            };
            (i, pos as f64 * freqs[i])
        })
        .collect();
    rotate_pairs(&mut out, &rotations);
    Ok(out)
}

/// Classic 1D rotary embedding at position `pos` over the full ladder.
pub fn apply_rope_1d(vec: &[f64], pos: u64, head_dim: usize, base_theta: f64) -> Result<Vec<f64>, RopeError> {
    if head_dim == 0 || head_dim % 2 != 0 {
        return Err(RopeError::OddHeadDim(head_dim));
    }
    if vec.len() != head_dim {
        return Err(RopeError::BadVectorLen {
            expected: head_dim,
            got: vec.len(),
        });
    }
    let mut out = vec.to_vec();
    let rotations: Vec<(usize, f64)> = (0..head_dim / 2)
        .map(|i| {
            let freq = base_theta.powf(-2.0 * i as f64 / head_dim as f64);
            (i, pos as f64 * freq)
        })
        .collect();
    rotate_pairs(&mut out, &rotations);
    Ok(out)
}

/// 2D rotary embedding for ViT patches: the first half of the channel pairs
/// rotates by the row coordinate, the second half by the column coordinate.
pub fn apply_rope_2d(
    vec: &[f64],
    coords: (u64, u64),
    head_dim: usize,
    base_theta: f64,
) -> Result<Vec<f64>, RopeError> {
    if head_dim == 0 || head_dim % 2 != 0 {
        return Err(RopeError::OddHeadDim(head_dim));
    }
    if vec.len() != head_dim {
        return Err(RopeError::BadVectorLen {
            expected: head_dim,
            got: vec.len(),
        });
    }
    let pairs = head_dim / 2;
    let row_pairs = pairs / 2;
    let mut out = vec.to_vec();
    let rotations: Vec<(usize, f64)> = (0..pairs)
        .map(|i| {
            let freq = base_theta.powf(-2.0 * i as f64 / head_dim as f64);
            let pos = if i < row_pairs { coords.0 } else { coords.1 };
            (i, pos as f64 * freq)
        })
        .collect();
    rotate_pairs(&mut out, &rotations);
    Ok(out)
}

/// Text span: all three components share the same id, advancing by one per
/// token.
pub fn mrope_ids_text(start: u64, length: usize) -> MRopeIds {
    let triples = (0..length as u64)
        .map(|i| (start + i, start + i, start + i))
        .collect();
    MRopeIds {
        triples,
        next_start: start + length as u64,
    }
}

/// Image span: temporal id constant, height/width ids from the token's
/// position in the merged grid. The next span starts past the largest id
/// used here.
pub fn mrope_ids_image(start: u64, merged_h: usize, merged_w: usize) -> MRopeIds {
    let mut triples = Vec::with_capacity(merged_h * merged_w);
    for r in 0..merged_h as u64 {
        for c in 0..merged_w as u64 {
            triples.push((start, start + r, start + c));
        }
    }
    MRopeIds {
        triples,
        next_start: start + merged_h.max(merged_w) as u64,
    }
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// Video span: each frame group gets a temporal id proportional to its
/// absolute timestamp (round(t * ids_per_second)); height/width ids restart
/// per frame exactly as for images.
pub fn mrope_ids_video(
    start: u64,
    frame_times: &[f64],
    merged_h: usize,
    merged_w: usize,
    config: &RopeConfig,
) -> Result<MRopeIds, RopeError> {
    config.validate()?;
    for (i, win) in frame_times.windows(2).enumerate() {
        if win[1] <= win[0] {
            return Err(RopeError::NonMonotonicTimes(i + 1));
        }
    }
    if let Some(&first) = frame_times.first() {
        if first < 0.0 {
            return Err(RopeError::NonMonotonicTimes(0));
        }
    }
    let mut triples = Vec::with_capacity(frame_times.len() * merged_h * merged_w);
    let mut last_offset = 0u64;
    for &t in frame_times {
        let offset = round_half_up(t * config.ids_per_second);
        last_offset = offset;
        for r in 0..merged_h as u64 {
            for c in 0..merged_w as u64 {
                triples.push((start + offset, start + r, start + c));
            }
        }
    }
    let extent = if frame_times.is_empty() {
        0
    } else {
        (last_offset + 1).max(merged_h.max(merged_w) as u64)
    };
    Ok(MRopeIds {
        triples,
        next_start: start + extent,
    })
}

/// Row-major (row, col) coordinate pairs for every patch in the ViT grid.
pub fn rope2d_ids_vit(grid_h: usize, grid_w: usize) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(grid_h * grid_w);
    for r in 0..grid_h as u64 {
        for c in 0..grid_w as u64 {
            out.push((r, c));
        }
    }
    out
}
