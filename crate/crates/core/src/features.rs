//! Feature extraction: normalized pair entropy, packet rate, and the
//! tumbling max-filter that turns per-second values into detector samples.

use serde::{Deserialize, Serialize};

use crate::ingest::IntervalAggregate;

/// Which feature series a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    #[serde(rename = "ENTROPY")]
    Entropy,
    #[serde(rename = "RATE")]
    Rate,
}

/// One timestamped value of a feature series, raw or max-filtered.
/// Entropy values live in `[0,1]`; rates are non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSample {
    pub index: u64,
    pub value: f64,
    pub kind: SeriesKind,
}

/// Normalized Shannon entropy of the per-pair packet distribution.
///
/// With `N` distinct pairs, total `T` and shares `p_i = z_i / T`, returns
/// `H / H_max` where `H = -Σ p_i·log2(p_i)` and `H_max = log2(N)`.
/// Degenerate inputs (`N <= 1` or `T = 0`) return 0. A uniform
/// distribution returns exactly 1.
pub fn pair_entropy(agg: &IntervalAggregate) -> f64 {
    let counts = agg.sorted_counts();
    entropy_of_counts(&counts)
}

/// Entropy core over a bag of positive counts. Summation order is the
/// caller's; use sorted counts for run-to-run reproducibility.
pub fn entropy_of_counts(counts: &[u64]) -> f64 {
    let n = counts.len();
    let total: u64 = counts.iter().sum();
    if n <= 1 || total == 0 {
        return 0.0;
    }
    // Equal counts attain the maximum exactly; computing through the
    // formula would land within a few ulps of 1 on either side.
    if counts.iter().all(|&c| c == counts[0]) {
        return 1.0;
    }
    let t = total as f64;
    let mut h = 0.0;
    for &c in counts {
        let p = c as f64 / t;
        h -= p * p.log2();
    }
    (h / (n as f64).log2()).clamp(0.0, 1.0)
}

/// Packets per second: the interval is one second, so the count is the
/// rate.
pub fn packet_rate(agg: &IntervalAggregate) -> f64 {
    agg.total_packets as f64
}

/// Tumbling max-filter: buffers `window_len` raw values and emits their
/// maximum, then starts over. Non-overlapping windows keep the entropy
/// and rate series index-aligned.
#[derive(Debug, Clone)]
pub struct MaxFilter {
    window_len: u32,
    seen: u32,
    current_max: f64,
}

impl MaxFilter {
    /// `window_len` must be at least 1; the paper-default is 10 samples.
    pub fn new(window_len: u32) -> Self {
        assert!(window_len >= 1, "window_len must be >= 1");
        MaxFilter {
            window_len,
            seen: 0,
            current_max: f64::NEG_INFINITY,
        }
    }

    pub fn window_len(&self) -> u32 {
        self.window_len
    }

    /// Push one raw value; returns the window maximum on every
    /// `window_len`-th input.
    pub fn push(&mut self, value: f64) -> Option<f64> {
        self.current_max = self.current_max.max(value);
        self.seen += 1;
        if self.seen == self.window_len {
            let out = self.current_max;
            self.seen = 0;
            self.current_max = f64::NEG_INFINITY;
            Some(out)
        } else {
            None
        }
    }
}
