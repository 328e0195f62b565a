//! Native dynamic-resolution geometry: resize rules, patch grids, and token
//! accounting. Images are resized to multiples of 28 so the stride-14 patch
//! grid is even and 2x2 patch merging is always possible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Patch stride of the vision encoder, in pixels.
pub const PATCH_STRIDE: usize = 14;
/// Resize quantum: one merged LLM token spans 28x28 pixels (2x2 patches).
pub const MERGE_UNIT: usize = 28;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("image dimensions must be >= 1 (got {0}x{1})")]
    EmptyImage(usize, usize),
    #[error("min_tokens {0} exceeds max_tokens {1}")]
    InvertedBudget(usize, usize),
    #[error("token budget [{min},{max}] unreachable for a {h}x{w} image")]
    ImpossibleBudget {
        min: usize,
        max: usize,
        h: usize,
        w: usize,
    },
    #[error("grid dimension is odd ({0}x{1}); merging requires even grids")]
    OddGrid(usize, usize),
}

/// Resized image dimensions plus the derived patch and merged-token grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGrid {
    pub orig_h: usize,
    pub orig_w: usize,
    pub resized_h: usize,
    pub resized_w: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub merged_h: usize,
    pub merged_w: usize,
}

impl PatchGrid {
    fn from_resized(orig_h: usize, orig_w: usize, resized_h: usize, resized_w: usize) -> Self {
        debug_assert!(resized_h % MERGE_UNIT == 0 && resized_w % MERGE_UNIT == 0);
        PatchGrid {
            orig_h,
            orig_w,
            resized_h,
            resized_w,
            grid_h: resized_h / PATCH_STRIDE,
            grid_w: resized_w / PATCH_STRIDE,
            merged_h: resized_h / MERGE_UNIT,
            merged_w: resized_w / MERGE_UNIT,
        }
    }
}

fn round_nearest_unit(px: usize) -> usize {
    let units = ((px as f64 / MERGE_UNIT as f64) + 0.5).floor() as usize;
    units.max(1) * MERGE_UNIT
}

/// Resize rule: round each dimension to the nearest multiple of 28 (never
/// below 28); when the token budget binds, rescale both dimensions by
/// sqrt(budget/current) before re-rounding, keeping the aspect ratio within
/// the 28-pixel quantum. Token counts are merged LLM tokens.
pub fn smart_resize(
    h: usize,
    w: usize,
    min_tokens: usize,
    max_tokens: usize,
) -> Result<PatchGrid, GeometryError> {
    if h == 0 || w == 0 {
        return Err(GeometryError::EmptyImage(h, w));
    }
    if min_tokens > max_tokens {
        return Err(GeometryError::InvertedBudget(min_tokens, max_tokens));
    }
    if max_tokens == 0 {
        return Err(GeometryError::ImpossibleBudget {
            min: min_tokens,
            max: max_tokens,
            h,
            w,
        });
    }

    let mut rh = round_nearest_unit(h);
    let mut rw = round_nearest_unit(w);
    let tokens = |rh: usize, rw: usize| (rh / MERGE_UNIT) * (rw / MERGE_UNIT);

    if tokens(rh, rw) > max_tokens {
        let current = (h as f64 / MERGE_UNIT as f64) * (w as f64 / MERGE_UNIT as f64);
        let scale = (max_tokens as f64 / current).sqrt();
        rh = (((h as f64 * scale) / MERGE_UNIT as f64).floor() as usize).max(1) * MERGE_UNIT;
        rw = (((w as f64 * scale) / MERGE_UNIT as f64).floor() as usize).max(1) * MERGE_UNIT;
        // The floor keeps us at or under budget except when the minimum-size
        // clamp pushed a dimension back up; shave the larger side then.
        while tokens(rh, rw) > max_tokens {
            if rh >= rw && rh > MERGE_UNIT {
                rh -= MERGE_UNIT;
            } else if rw > MERGE_UNIT {
                rw -= MERGE_UNIT;
            } else {
                return Err(GeometryError::ImpossibleBudget {
                    min: min_tokens,
                    max: max_tokens,
                    h,
                    w,
                });
            }
        }
    }

    if tokens(rh, rw) < min_tokens {
        let current = (rh as f64 / MERGE_UNIT as f64) * (rw as f64 / MERGE_UNIT as f64);
        let scale = (min_tokens as f64 / current).sqrt();
        let mut nh = ((rh as f64 * scale) / MERGE_UNIT as f64).ceil() as usize * MERGE_UNIT;
        let mut nw = ((rw as f64 * scale) / MERGE_UNIT as f64).ceil() as usize * MERGE_UNIT;
        // Ceil rounding can still land one unit short on extreme aspect
        // ratios; grow the smaller side until the floor is met.
        while tokens(nh, nw) < min_tokens {
            if nh <= nw {
                nh += MERGE_UNIT;
            } else {
                nw += MERGE_UNIT;
            }
        }
        if tokens(nh, nw) > max_tokens {
            return Err(GeometryError::ImpossibleBudget {
                min: min_tokens,
                max: max_tokens,
                h,
                w,
            });
        }
        rh = nh;
        rw = nw;
    }

    Ok(PatchGrid::from_resized(h, w, rh, rw))
}

/// Number of ViT patch tokens for the grid (stride-14 cells).
pub fn vit_token_count(grid: &PatchGrid) -> usize {
    grid.grid_h * grid.grid_w
}

/// Number of LLM tokens after 2x2 patch merging. Errors on odd grids, which
/// cannot come out of `smart_resize` and signal a contract violation.
pub fn llm_token_count(grid: &PatchGrid) -> Result<usize, GeometryError> {
    if grid.grid_h % 2 != 0 || grid.grid_w % 2 != 0 {
        return Err(GeometryError::OddGrid(grid.grid_h, grid.grid_w));
    }
    Ok((grid.grid_h / 2) * (grid.grid_w / 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_aligned_passthrough() {
        let g = smart_resize(28, 28, 1, 10_000).unwrap();
        assert_eq!((g.resized_h, g.resized_w), (28, 28));
        assert_eq!((g.grid_h, g.grid_w), (2, 2));
        assert_eq!((g.merged_h, g.merged_w), (1, 1));
    }

    #[test]
    fn rounds_each_dim_to_nearest_multiple() {
        let g = smart_resize(1000, 600, 1, 1_000_000).unwrap();
        assert_eq!((g.resized_h, g.resized_w), (1008, 588));
        assert_eq!((g.grid_h, g.grid_w), (72, 42));
        assert_eq!((g.merged_h, g.merged_w), (36, 21));
    }

    #[test]
    fn nearest_multiple_minimizes_aspect_distortion() {
        // Enumeration oracle: among candidate multiples within one unit of the
        // rounded answer, 1008x588 has the least per-axis relative error.
        let (h, w) = (1000.0f64, 600.0f64);
        let err = |rh: f64, rw: f64| ((rh / h) - 1.0).abs() + ((rw / w) - 1.0).abs();
        let best = [980, 1008, 1036]
            .iter()
            .flat_map(|&rh| [560, 588, 616].iter().map(move |&rw| (rh, rw)))
            .min_by(|a, b| {
                err(a.0 as f64, a.1 as f64)
                    .partial_cmp(&err(b.0 as f64, b.1 as f64))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(best, (1008, 588));
    }

    #[test]
    fn clamps_up_to_minimum_merge_unit() {
        let g = smart_resize(14, 14, 1, 1_000_000).unwrap();
        assert_eq!((g.resized_h, g.resized_w), (28, 28));
    }

    #[test]
    fn budget_binds_and_shrinks() {
        let g = smart_resize(1000, 600, 1, 64).unwrap();
        assert!(llm_token_count(&g).unwrap() <= 64);
        assert!(llm_token_count(&g).unwrap() >= 1);
    }

    #[test]
    fn min_budget_scales_up() {
        let g = smart_resize(28, 28, 16, 1_000_000).unwrap();
        assert!(llm_token_count(&g).unwrap() >= 16);
    }

    #[test]
    fn impossible_budget_rejected() {
        assert!(matches!(
            smart_resize(28, 28, 0, 0),
            Err(GeometryError::ImpossibleBudget { .. })
        ));
        assert!(matches!(
            smart_resize(28, 28, 5, 1),
            Err(GeometryError::InvertedBudget(..))
        ));
    }

    #[test]
    fn token_counts_match_published_anchors() {
        // 112x112 window -> 8x8 = 64 patches -> 16 merged tokens.
        let g = smart_resize(112, 112, 1, 1_000_000).unwrap();
        assert_eq!(vit_token_count(&g), 64);
        assert_eq!(llm_token_count(&g).unwrap(), 16);

        let g = smart_resize(28, 28, 1, 1_000_000).unwrap();
        assert_eq!(vit_token_count(&g), 4);

        let g = smart_resize(224, 280, 1, 1_000_000).unwrap();
        assert_eq!(vit_token_count(&g), 16 * 20);
    }

    #[test]
    fn merged_is_quarter_of_vit() {
        let g = smart_resize(1000, 600, 1, 1_000_000).unwrap();
        assert_eq!(llm_token_count(&g).unwrap(), vit_token_count(&g) / 4);
        assert_eq!(llm_token_count(&g).unwrap(), 756);
    }

    #[test]
    fn odd_grid_rejected() {
        let bad = PatchGrid {
            orig_h: 42,
            orig_w: 42,
            resized_h: 42,
            resized_w: 42,
            grid_h: 3,
            grid_w: 3,
            merged_h: 1,
            merged_w: 1,
        };
        assert!(matches!(llm_token_count(&bad), Err(GeometryError::OddGrid(3, 3))));
    }

    proptest! {
        #[test]
        fn merge_ratio_exact(h in 1usize..3000, w in 1usize..3000) {
            let g = smart_resize(h, w, 1, 1_000_000).unwrap();
            prop_assert_eq!(llm_token_count(&g).unwrap() * 4, vit_token_count(&g));
        }

        #[test]
        fn idempotent_on_valid_dims(h in 1usize..2000, w in 1usize..2000, max in 1usize..4096) {
            if let Ok(g) = smart_resize(h, w, 1, max) {
                let again = smart_resize(g.resized_h, g.resized_w, 1, max).unwrap();
                prop_assert_eq!(again.resized_h, g.resized_h);
                prop_assert_eq!(again.resized_w, g.resized_w);
            }
        }

        #[test]
        fn monotone_in_max_tokens(h in 1usize..2000, w in 1usize..2000, max in 1usize..2048) {
            if let Ok(small) = smart_resize(h, w, 1, max) {
                let large = smart_resize(h, w, 1, max * 2).unwrap();
                prop_assert!(
                    llm_token_count(&large).unwrap() >= llm_token_count(&small).unwrap()
                );
            }
        }

        #[test]
        fn budget_always_respected(h in 1usize..4000, w in 1usize..4000, max in 1usize..2048) {
            if let Ok(g) = smart_resize(h, w, 1, max) {
                prop_assert!(llm_token_count(&g).unwrap() <= max);
                prop_assert!(g.resized_h % 28 == 0 && g.resized_w % 28 == 0);
                prop_assert!(g.resized_h >= 28 && g.resized_w >= 28);
            }
        }
    }
}
