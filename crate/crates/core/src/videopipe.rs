//! Video input pipeline: dynamic-FPS frame sampling, two-frame temporal
//! grouping, token budget enforcement, and timestamp formatting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{llm_token_count, smart_resize, GeometryError, PatchGrid};

/// Hard cap on sampled frames per video.
pub const MAX_FRAMES: usize = 768;
/// Hard cap on total visual tokens per video.
pub const MAX_VIDEO_TOKENS: usize = 24_576;

#[derive(Debug, Error, PartialEq)]
pub enum VideoError {
    #[error("duration and fps values must be positive")]
    NonPositiveInput,
    #[error("negative timestamp {0}")]
    NegativeTimestamp(f64),
    #[error("token budget {0} cannot hold a single minimal frame")]
    BudgetTooSmall(usize),
    #[error("malformed timestamp '{0}'")]
    MalformedTimestamp(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Result of sampling a clip: frame timestamps plus the timestamps of the
/// two-frame groups fed to the patch embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSampling {
    pub timestamps: Vec<f64>,
    pub source_fps: f64,
    pub effective_fps: f64,
    /// Timestamp of each group = its first member's timestamp.
    pub group_times: Vec<f64>,
}

/// A temporal group: indices into `timestamps`. The second member repeats
/// the first when the frame count is odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGroup {
    pub first: usize,
    pub second: usize,
}

fn snap(t: f64, source_fps: f64) -> f64 {
    (t * source_fps).round() / source_fps
}

fn sample_at(duration: f64, source_fps: f64, fps: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 / fps;
        if t >= duration {
            break;
        }
        let snapped = snap(t, source_fps);
        if out.last().map_or(true, |&last| snapped > last) {
            out.push(snapped);
        }
        k += 1;
    }
    out
}

/// Samples frame timestamps at `target_fps`, snapped to the source frame
/// grid. If the count would exceed `max_frames` the rate drops to
/// max_frames/duration. At least two frames are always returned so pairing
/// forms a true pair.
pub fn sample_frames(
    duration: f64,
    source_fps: f64,
    target_fps: f64,
    max_frames: usize,
) -> Result<FrameSampling, VideoError> {
    if duration <= 0.0 || source_fps <= 0.0 || target_fps <= 0.0 || max_frames == 0 {
        return Err(VideoError::NonPositiveInput);
    }
    let mut effective_fps = target_fps;
    let mut timestamps = sample_at(duration, source_fps, effective_fps);
    if timestamps.len() > max_frames {
        effective_fps = max_frames as f64 / duration;
        timestamps = sample_at(duration, source_fps, effective_fps);
        timestamps.truncate(max_frames);
    }
    while timestamps.len() < 2 {
        let next = timestamps
            .last()
            .map_or(0.0, |&last| last + 1.0 / source_fps);
        timestamps.push(next);
    }
    let group_times = pair_frames(&timestamps)
        .iter()
        .map(|g| timestamps[g.first])
        .collect();
    Ok(FrameSampling {
        timestamps,
        source_fps,
        effective_fps,
        group_times,
    })
}

/// Pairs consecutive frames; an odd trailing frame is duplicated to complete
/// its pair.
pub fn pair_frames(timestamps: &[f64]) -> Vec<FrameGroup> {
    let mut groups = Vec::with_capacity(timestamps.len().div_ceil(2));
    let mut i = 0;
    while i < timestamps.len() {
        let second = if i + 1 < timestamps.len() { i + 1 } else { i };
        groups.push(FrameGroup { first: i, second });
        i += 2;
    }
    groups
}

/// Shrinks the spatial budget first, then the group count, until
/// groups x tokens-per-frame fits in `max_tokens`.
pub fn enforce_token_budget(
    grid: &PatchGrid,
    n_groups: usize,
    max_tokens: usize,
) -> Result<(PatchGrid, usize), VideoError> {
    if max_tokens == 0 {
        return Err(VideoError::BudgetTooSmall(max_tokens));
    }
    let per_frame = llm_token_count(grid)?;
    if n_groups * per_frame <= max_tokens {
        return Ok((*grid, n_groups));
    }
    let spatial_budget = max_tokens / n_groups;
    if spatial_budget >= 1 {
        let shrunk = smart_resize(grid.orig_h, grid.orig_w, 1, spatial_budget)?;
        return Ok((shrunk, n_groups));
    }
    // Even one token per frame does not fit; keep minimal frames and drop
    // groups from the tail.
    let minimal = smart_resize(grid.orig_h, grid.orig_w, 1, 1)?;
    Ok((minimal, max_tokens))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampStyle {
    /// Decimal seconds with one fractional digit, e.g. "12.5".
    Sec,
    /// HH:MM:SS:FF with zero-padded two-digit fields; FF is a frame index
    /// at the given fps.
    Hmsf,
}

pub fn format_timestamp(t: f64, style: TimestampStyle, fps: f64) -> Result<String, VideoError> {
    if t < 0.0 {
        return Err(VideoError::NegativeTimestamp(t));
    }
    match style {
        TimestampStyle::Sec => Ok(format!("{t:.1}")),
        TimestampStyle::Hmsf => {
            if fps <= 0.0 {
                return Err(VideoError::NonPositiveInput);
            }
            let mut whole = t.floor() as u64;
            let mut frame = ((t - t.floor()) * fps).round() as u64;
            if frame >= fps.round() as u64 {
                // Fractional part rounded up to a full second.
                whole += 1;
                frame = 0;
            }
            let (h, m, s) = (whole / 3600, (whole % 3600) / 60, whole % 60);
            Ok(format!("{h:02}:{m:02}:{s:02}:{frame:02}"))
        }
    }
}

/// Inverse of `format_timestamp` on its own output.
pub fn parse_timestamp(text: &str, style: TimestampStyle, fps: f64) -> Result<f64, VideoError> {
    let bad = || VideoError::MalformedTimestamp(text.to_string());
    match style {
        TimestampStyle::Sec => {
            let v: f64 = text.trim().parse().map_err(|_| bad())?;
            if v < 0.0 {
                return Err(VideoError::NegativeTimestamp(v));
            }
            Ok(v)
        }
        TimestampStyle::Hmsf => {
            if fps <= 0.0 {
                return Err(VideoError::NonPositiveInput);
            }
            let parts: Vec<&str> = text.trim().split(':').collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            let nums: Vec<u64> = parts
                .iter()
                .map(|p| p.parse::<u64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            let (h, m, s, f) = (nums[0], nums[1], nums[2], nums[3]);
            if m >= 60 || s >= 60 {
                return Err(bad());
            }
            Ok((h * 3600 + m * 60 + s) as f64 + f as f64 / fps)
        }
    }
}
