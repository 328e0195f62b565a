//! Multimodal input machinery for a native dynamic-resolution vision-language
//! pipeline: image/video tokenization geometry, windowed-attention ViT blocks,
//! multi-axis rotary position embeddings aligned to absolute time, patch
//! merging, sequence packing, absolute-coordinate grounding metrics, and the
//! QwenVL HTML document format.
//!
//! Everything runs at desk scale in double precision; all public functions are
//! pure and thread-safe.

pub mod docformat;
pub mod encoder;
pub mod geometry;
pub mod grounding;
pub mod kernels;
pub mod packing;
pub mod ppm;
pub mod report;
pub mod rope;
pub mod videopipe;
