//! Redesigned ViT at desk scale: patch embedding with two-frame temporal
//! grouping, no-padding window partitioning, interleaved window/full
//! attention blocks (pre-norm, RMSNorm + SwiGLU), and the 2x2 patch merger.

mod forward;
mod weights;
mod window;

pub use forward::{merge_patches, patch_embed, vit_forward, Frame};
pub use weights::{EncoderWeights, LayerWeights};
pub use window::{window_partition, WindowLayout};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kernels::KernelError;
use crate::rope::RopeError;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Rope(#[from] RopeError),
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("frame size mismatch: expected {expected_h}x{expected_w}, got {got_h}x{got_w}")]
    FrameSizeMismatch {
        expected_h: usize,
        expected_w: usize,
        got_h: usize,
        got_w: usize,
    },
    #[error("temporal group must be 1 or 2 frames (got {0})")]
    BadTemporalGroup(usize),
    #[error("grid dimensions must be even for merging (got {0}x{1})")]
    OddGrid(usize, usize),
    #[error("weight io: {0}")]
    WeightIo(String),
}

/// Vision encoder hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub hidden: usize,
    pub layers: usize,
    pub heads: usize,
    pub intermediate: usize,
    /// Patch side in pixels.
    pub patch: usize,
    /// Window side in pixels; window/patch patches per window side.
    pub window: usize,
    /// Layer indices that run full self-attention instead of windowed.
    pub full_attn_layers: BTreeSet<usize>,
    /// Output width of the patch merger (the LLM embedding width).
    pub merger_out: usize,
}

impl EncoderConfig {
    /// Full-scale configuration shared by all released model sizes except
    /// for the merger output width.
    fn full_scale(merger_out: usize) -> Self {
        EncoderConfig {
            hidden: 1280,
            layers: 32,
            heads: 16,
            intermediate: 3456,
            patch: 14,
            window: 112,
            full_attn_layers: [7, 15, 23, 31].into_iter().collect(),
            merger_out,
        }
    }

    pub fn preset_3b() -> Self {
        Self::full_scale(2048)
    }

    pub fn preset_7b() -> Self {
        Self::full_scale(3584)
    }

    pub fn preset_72b() -> Self {
        Self::full_scale(8192)
    }

    /// Small deterministic configuration for tests and the CLI default.
    pub fn toy() -> Self {
        EncoderConfig {
            hidden: 16,
            layers: 2,
            heads: 2,
            intermediate: 32,
            patch: 14,
            window: 112,
            full_attn_layers: [1].into_iter().collect(),
            merger_out: 24,
        }
    }

    /// Patches per window side.
    pub fn window_patches(&self) -> usize {
        self.window / self.patch
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.hidden == 0 || self.heads == 0 || self.hidden % self.heads != 0 {
            return Err(EncoderError::ConfigMismatch(format!(
                "hidden {} not divisible by heads {}",
                self.hidden, self.heads
            )));
        }
        if self.head_dim() % 2 != 0 {
            return Err(EncoderError::ConfigMismatch(format!(
                "head_dim {} must be even for rotary embedding",
                self.head_dim()
            )));
        }
        if self.patch == 0 || self.window % self.patch != 0 {
            return Err(EncoderError::ConfigMismatch(format!(
                "window {} not a multiple of patch {}",
                self.window, self.patch
            )));
        }
        if let Some(&bad) = self.full_attn_layers.iter().find(|&&i| i >= self.layers) {
            return Err(EncoderError::ConfigMismatch(format!(
                "full-attention layer index {bad} out of range (layers = {})",
                self.layers
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_table() {
        for (cfg, out) in [
            (EncoderConfig::preset_3b(), 2048),
            (EncoderConfig::preset_7b(), 3584),
            (EncoderConfig::preset_72b(), 8192),
        ] {
            assert_eq!(cfg.hidden, 1280);
            assert_eq!(cfg.layers, 32);
            assert_eq!(cfg.heads, 16);
            assert_eq!(cfg.intermediate, 3456);
            assert_eq!(cfg.patch, 14);
            assert_eq!(cfg.window, 112);
            assert_eq!(
                cfg.full_attn_layers,
                [7, 15, 23, 31].into_iter().collect()
            );
            assert_eq!(cfg.merger_out, out);
            assert_eq!(cfg.window_patches(), 8);
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = EncoderConfig::toy();
        cfg.heads = 3;
        assert!(cfg.validate().is_err());

        let mut cfg = EncoderConfig::toy();
        cfg.full_attn_layers = [99].into_iter().collect();
        assert!(cfg.validate().is_err());
    }
}
