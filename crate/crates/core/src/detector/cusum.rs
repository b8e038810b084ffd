//! CUSUM change detectors used as comparison baselines: one over
//! filtered SYN-packet counts, one over filtered pair entropy.
//!
//! The statistic is an adaptive-mean cumulative sum with five knobs:
//! an EWMA mean `mu` (smoothing `beta1`), an amplitude factor `beta2`
//! multiplying the mean, a drift allowance `k`, a gain `K` and a
//! decision threshold `h`:
//!
//! ```text
//! S <- max(0, S + K * (x - beta2*mu - k))        (increase direction)
//! S <- max(0, S + K * (beta2*mu - x - k))        (decrease direction)
//! ```
//!
//! Crossing `h` raises the alarm and restarts the sum; the alarm holds
//! until the sum decays back to zero. The mean adapts only while no
//! alarm is active, so an ongoing attack cannot poison the baseline.

use serde::{Deserialize, Serialize};

use super::{AlarmSample, DetectorError, StreamDetector};
use crate::features::{pair_entropy, MaxFilter};
use crate::ingest::IntervalAggregate;

/// Which side of the adaptive mean accumulates evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CusumDirection {
    /// Alarm on values rising above the mean (SYN counts).
    Increase,
    /// Alarm on values falling below the mean (entropy under attack).
    Decrease,
}

/// CUSUM parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CusumParams {
    /// EWMA smoothing factor for the adaptive mean, in (0,1).
    pub beta1: f64,
    /// Amplitude factor multiplying the mean inside the increment.
    pub beta2: f64,
    /// Drift allowance in input units.
    pub k: f64,
    /// Decision threshold.
    pub h: f64,
    /// Gain applied to each increment.
    #[serde(rename = "K")]
    pub gain: f64,
    #[serde(default = "CusumDirection::default_increase")]
    pub direction: CusumDirection,
}

impl CusumDirection {
    fn default_increase() -> CusumDirection {
        CusumDirection::Increase
    }
}

impl CusumParams {
    /// Published operating point for the SYN-count detector.
    pub fn syn_defaults() -> Self {
        CusumParams {
            beta1: 0.148,
            beta2: 3.0,
            k: 18.0,
            h: 6.8,
            gain: 0.01,
            direction: CusumDirection::Increase,
        }
    }

    /// Operating point for the entropy detector, sized for normalized
    /// entropy in [0,1]. The published entropy figures were tuned on an
    /// unnormalized scale and never fire on unit-interval inputs.
    pub fn entropy_defaults() -> Self {
        CusumParams {
            beta1: 0.139,
            beta2: 1.0,
            k: 0.01,
            h: 0.05,
            gain: 1.0,
            direction: CusumDirection::Decrease,
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |msg: &str| Err(DetectorError::InvalidParams(msg.into()));
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return bad("beta1 must be in (0,1)");
        }
        if self.beta2 < 0.0 {
            return bad("beta2 must be >= 0");
        }
        if self.k < 0.0 {
            return bad("k must be >= 0");
        }
        if !(self.h > 0.0) {
            return bad("h must be > 0");
        }
        if !(self.gain >= 0.0) {
            return bad("K must be >= 0");
        }
        Ok(())
    }
}

/// Adaptive mean, cumulative statistic and alarm bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumState {
    pub mu: Option<f64>,
    pub s: f64,
    pub active: bool,
}

impl CusumState {
    pub fn new() -> Self {
        CusumState {
            mu: None,
            s: 0.0,
            active: false,
        }
    }
}

impl Default for CusumState {
    fn default() -> Self {
        CusumState::new()
    }
}

/// Advance the CUSUM recurrence by one observation. Returns the alarm
/// bit after the update.
///
/// Order per step: seed/read the mean, accumulate the clamped
/// increment, derive the alarm (threshold crossing restarts the sum;
/// a sum at zero clears), then adapt the mean only if no alarm holds.
pub fn cusum_step(state: &mut CusumState, params: &CusumParams, x: f64) -> bool {
    let mu = *state.mu.get_or_insert(x);
    let deviation = match params.direction {
        CusumDirection::Increase => x - params.beta2 * mu - params.k,
        CusumDirection::Decrease => params.beta2 * mu - x - params.k,
    };
    state.s = (state.s + params.gain * deviation).max(0.0);
    if state.s > params.h {
        state.active = true;
        state.s = 0.0;
    } else if state.s == 0.0 {
        state.active = false;
    }
    if !state.active {
        state.mu = Some(params.beta1 * mu + (1.0 - params.beta1) * x);
    }
    state.active
}

/// One row of the CUSUM event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumRecord {
    pub sample_index: u64,
    pub input: f64,
    pub mu: f64,
    pub s: f64,
    pub alarm: bool,
}

/// Which per-second feature feeds the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CusumFeature {
    SynCount,
    Entropy,
}

/// Streaming CUSUM pipeline: per-second aggregates in, max-filtered
/// feature samples through the recurrence, alarm decisions out.
#[derive(Debug)]
pub struct CusumPipeline {
    params: CusumParams,
    feature: CusumFeature,
    filter: MaxFilter,
    state: CusumState,
    next_index: u64,
    records: Vec<CusumRecord>,
}

impl CusumPipeline {
    pub fn new(
        params: CusumParams,
        feature: CusumFeature,
        window_len: u32,
    ) -> Result<Self, DetectorError> {
        params.validate()?;
        if window_len < 1 {
            return Err(DetectorError::InvalidParams("window_len must be >= 1".into()));
        }
        Ok(CusumPipeline {
            params,
            feature,
            filter: MaxFilter::new(window_len),
            state: CusumState::new(),
            next_index: 0,
            records: Vec::new(),
        })
    }

    /// SYN-count detector with the published defaults.
    pub fn syn(window_len: u32) -> Self {
        CusumPipeline::new(CusumParams::syn_defaults(), CusumFeature::SynCount, window_len)
            .expect("defaults validate")
    }

    /// Entropy detector with unit-interval defaults.
    pub fn entropy(window_len: u32) -> Self {
        CusumPipeline::new(CusumParams::entropy_defaults(), CusumFeature::Entropy, window_len)
            .expect("defaults validate")
    }

    pub fn push(&mut self, agg: &IntervalAggregate) -> Option<CusumRecord> {
        let raw = match self.feature {
            CusumFeature::SynCount => agg.syn_count as f64,
            CusumFeature::Entropy => pair_entropy(agg),
        };
        let filtered = self.filter.push(raw)?;
        let index = self.next_index;
        self.next_index += 1;
        let alarm = cusum_step(&mut self.state, &self.params, filtered);
        let record = CusumRecord {
            sample_index: index,
            input: filtered,
            mu: self.state.mu.unwrap_or(filtered),
            s: self.state.s,
            alarm,
        };
        self.records.push(record);
        Some(record)
    }

    pub fn records(&self) -> &[CusumRecord] {
        &self.records
    }

    pub fn state(&self) -> &CusumState {
        &self.state
    }
}

impl StreamDetector for CusumPipeline {
    fn push_aggregate(&mut self, agg: &IntervalAggregate) -> Option<AlarmSample> {
        self.push(agg).map(|r| AlarmSample {
            index: r.sample_index,
            active: r.alarm,
        })
    }

    fn sample_period(&self) -> u32 {
        self.filter.window_len()
    }
}
