//! JSON report schemas emitted by the CLI. Struct field order fixes the key
//! order, keeping golden files byte-stable.

use serde::{Deserialize, Serialize};

use crate::geometry::PatchGrid;
use crate::packing::BalanceReport;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MRopeSummary {
    pub start: u64,
    pub next_start: u64,
    pub token_count: usize,
    pub first: Option<(u64, u64, u64)>,
    pub last: Option<(u64, u64, u64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageReport {
    pub grid: PatchGrid,
    pub vit_tokens: usize,
    pub llm_tokens: usize,
    pub mrope: MRopeSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoReport {
    pub source_fps: f64,
    pub duration: f64,
    pub effective_fps: f64,
    pub frame_count: usize,
    pub group_count: usize,
    pub timestamps: Vec<f64>,
    pub group_times: Vec<f64>,
    pub temporal_ids: Vec<u64>,
    pub grid: PatchGrid,
    pub tokens_per_frame: usize,
    pub total_tokens: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForwardReport {
    pub grid: PatchGrid,
    pub output_rows: usize,
    pub output_cols: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub l2_norm: f64,
    pub output_path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackBinReport {
    pub ids: Vec<serde_json::Value>,
    pub total_length: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackReport {
    pub capacity: usize,
    pub bin_count: usize,
    pub bins: Vec<PackBinReport>,
    pub balance: BalanceReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundingEvalReport {
    pub samples: usize,
    pub matched_pairs: usize,
    pub mean_iou: f64,
    pub accuracy_at_0_5: f64,
    pub count_accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalEvalReport {
    pub pairs: usize,
    pub miou: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: String,
}
