//! No-padding window partitioning: the patch grid is cut into bands of up to
//! `window_patches` rows/columns; edge bands keep their smaller size instead
//! of being padded.

/// Patch-to-window assignment with forward and inverse permutations between
/// row-major patch order and window order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowLayout {
    /// `order[k]` = original patch index occupying window-order slot k.
    pub order: Vec<usize>,
    /// `inverse[p]` = window-order slot of patch p; inverse ∘ order = id.
    pub inverse: Vec<usize>,
    /// Segment (window) id per window-order slot; contiguous runs.
    pub segments: Vec<usize>,
    /// Patch count per window, in window order.
    pub window_sizes: Vec<usize>,
}

impl WindowLayout {
    pub fn num_patches(&self) -> usize {
        self.order.len()
    }

    pub fn num_windows(&self) -> usize {
        self.window_sizes.len()
    }

    /// Window id of a patch given in row-major patch order.
    pub fn segment_of_patch(&self, patch: usize) -> usize {
        self.segments[self.inverse[patch]]
    }
}

fn bands(extent: usize, step: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < extent {
        let len = step.min(extent - start);
        out.push((start, len));
        start += len;
    }
    out
}

/// Splits a grid_h x grid_w patch grid into windows of at most
/// `window_patches` x `window_patches` patches. Windows are ordered
/// row-major over bands; patches inside a window are row-major.
pub fn window_partition(grid_h: usize, grid_w: usize, window_patches: usize) -> WindowLayout {
    assert!(grid_h >= 1 && grid_w >= 1 && window_patches >= 1);
    let row_bands = bands(grid_h, window_patches);
    let col_bands = bands(grid_w, window_patches);

    let n = grid_h * grid_w;
    let mut order = Vec::with_capacity(n);
    let mut segments = Vec::with_capacity(n);
    let mut window_sizes = Vec::new();
    let mut window_id = 0;
    for &(r0, rl) in &row_bands {
        for &(c0, cl) in &col_bands {
            for r in r0..r0 + rl {
                for c in c0..c0 + cl {
                    order.push(r * grid_w + c);
                    segments.push(window_id);
                }
            }
            window_sizes.push(rl * cl);
            window_id += 1;
        }
    }

    let mut inverse = vec![0; n];
    for (slot, &patch) in order.iter().enumerate() {
        inverse[patch] = slot;
    }
    WindowLayout {
        order,
        inverse,
        segments,
        window_sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_fit_single_window() {
        let l = window_partition(8, 8, 8);
        assert_eq!(l.window_sizes, vec![64]);
        assert_eq!(l.order, (0..64).collect::<Vec<_>>());
    }

    #[test]
    fn edge_bands_stay_unpadded() {
        let l = window_partition(20, 20, 8);
        assert_eq!(
            l.window_sizes,
            vec![64, 64, 32, 64, 64, 32, 32, 32, 16]
        );
    }

    #[test]
    fn thin_grid_two_windows() {
        let l = window_partition(4, 12, 8);
        assert_eq!(l.window_sizes, vec![32, 16]);
        // First window covers columns 0..8 of every row.
        assert_eq!(&l.order[..8], &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(&l.order[32..36], &[8, 9, 10, 11]);
    }

    #[test]
    fn segments_contiguous_in_window_order() {
        let l = window_partition(11, 7, 8);
        for w in l.segments.windows(2) {
            assert!(w[1] == w[0] || w[1] == w[0] + 1);
        }
    }

    proptest! {
        #[test]
        fn permutation_roundtrip(h in 1usize..24, w in 1usize..24, wp in 1usize..10) {
            let l = window_partition(h, w, wp);
            prop_assert_eq!(l.num_patches(), h * w);
            for p in 0..h * w {
                prop_assert_eq!(l.order[l.inverse[p]], p);
            }
            let total: usize = l.window_sizes.iter().sum();
            prop_assert_eq!(total, h * w);
            for &s in &l.window_sizes {
                prop_assert!(s <= wp * wp);
            }
        }
    }
}
