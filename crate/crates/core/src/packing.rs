//! Length-balanced sequence packing: first-fit-decreasing assignment of
//! variable-length samples into fixed-capacity bins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Common training capacities.
pub const CAPACITY_PRETRAIN: usize = 8_192;
pub const CAPACITY_LONG: usize = 32_768;

#[derive(Debug, Error, PartialEq)]
pub enum PackingError {
    #[error("capacity must be >= 1")]
    ZeroCapacity,
    #[error("sample {id} has length {length}, exceeding capacity {capacity}")]
    SampleTooLong {
        id: usize,
        length: usize,
        capacity: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    /// Original sample indices, in placement order.
    pub samples: Vec<usize>,
    pub total_length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedBatch {
    pub bins: Vec<Bin>,
    pub capacity: usize,
}

/// Fill statistics over a packed batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub fills: Vec<f64>,
    pub mean_fill: f64,
    pub variance: f64,
}

/// First-fit-decreasing: sort samples by decreasing length (ties by original
/// index), place each into the first bin with room. Deterministic.
pub fn pack(lengths: &[usize], capacity: usize) -> Result<PackedBatch, PackingError> {
    if capacity == 0 {
        return Err(PackingError::ZeroCapacity);
    }
    if let Some((id, &length)) = lengths.iter().enumerate().find(|(_, &l)| l > capacity) {
        return Err(PackingError::SampleTooLong {
            id,
            length,
            capacity,
        });
    }
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(lengths[i]), i));

    let mut bins: Vec<Bin> = Vec::new();
    for i in order {
        let len = lengths[i];
        match bins
            .iter_mut()
            .find(|b| b.total_length + len <= capacity)
        {
            Some(bin) => {
                bin.samples.push(i);
                bin.total_length += len;
            }
            None => bins.push(Bin {
                samples: vec![i],
                total_length: len,
            }),
        }
    }
    Ok(PackedBatch { bins, capacity })
}

/// Per-bin fill ratios and their variance; quantifies how even the
/// computational load per packed sequence is.
pub fn balance_report(batch: &PackedBatch) -> BalanceReport {
    let fills: Vec<f64> = batch
        .bins
        .iter()
        .map(|b| b.total_length as f64 / batch.capacity as f64)
        .collect();
    let n = fills.len().max(1) as f64;
    let mean_fill = fills.iter().sum::<f64>() / n;
    let variance = fills.iter().map(|f| (f - mean_fill).powi(2)).sum::<f64>() / n;
    BalanceReport {
        fills,
        mean_fill,
        variance,
    }
}

/// Exhaustive minimum bin count; test oracle for small instances.
pub fn optimal_bin_count(lengths: &[usize], capacity: usize) -> usize {
    fn go(lengths: &[usize], idx: usize, bins: &mut Vec<usize>, capacity: usize, best: &mut usize) {
        if bins.len() >= *best {
            return;
        }
        if idx == lengths.len() {
            *best = bins.len();
            return;
        }
        let len = lengths[idx];
        for b in 0..bins.len() {
            if bins[b] + len <= capacity {
                bins[b] += len;
                go(lengths, idx + 1, bins, capacity, best);
                bins[b] -= len;
            }
        }
        bins.push(len);
        go(lengths, idx + 1, bins, capacity, best);
        bins.pop();
    }
    let mut best = lengths.len().max(1);
    if lengths.is_empty() {
        return 0;
    }
    let mut bins = Vec::new();
    go(lengths, 0, &mut bins, capacity, &mut best);
    best
}
