//! The hybrid dual-EMA detector: fast/slow averages over the filtered
//! entropy series and the filtered rate series, a difference signal for
//! each, and a two-condition hysteresis alarm.
//!
//! The alarm turns on only when the entropy trend falls below its alarm
//! threshold *while* the rate trend rises above its own; it turns off
//! only when both clear conditions hold. Everything in between leaves
//! the state latched, which is what keeps short legitimate bursts from
//! chattering the alarm.

use serde::{Deserialize, Serialize};

use super::ema::Ema;
use super::{AlarmSample, DetectorError, StreamDetector};
use crate::features::{pair_entropy, packet_rate, MaxFilter, SeriesKind, SeriesSample};
use crate::ingest::IntervalAggregate;

/// Full parameter set of the four-EMA detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmaParams4 {
    /// Fast EMA period for entropy data, in filtered samples.
    pub ema_fast_interval: u32,
    /// Slow EMA period for entropy data.
    pub ema_slow_interval: u32,
    /// Fast EMA period for packet-rate data.
    pub ema_packet_fast_interval: u32,
    /// Slow EMA period for packet-rate data.
    pub ema_packet_slow_interval: u32,
    /// Entropy diff below this activates the alarm (signed, normally
    /// negative: entropy drops under attack).
    pub tr_ent_alarm: f64,
    /// Entropy diff above this is one half of the clear condition.
    pub tr_ent_no_alarm: f64,
    /// Rate diff above this is the other half of the alarm condition.
    pub tr_pkt_alarm: f64,
    /// Rate diff below this is the other half of the clear condition.
    pub tr_pkt_no_alarm: f64,
}

impl Default for EmaParams4 {
    /// Published typical values. The thresholds were tuned on the
    /// original network's entropy scale; grids usually resize them.
    fn default() -> Self {
        EmaParams4 {
            ema_fast_interval: 2,
            ema_slow_interval: 6,
            ema_packet_fast_interval: 4,
            ema_packet_slow_interval: 8,
            tr_ent_alarm: -0.74,
            tr_ent_no_alarm: 0.10,
            tr_pkt_alarm: 0.10,
            tr_pkt_no_alarm: -0.50,
        }
    }
}

impl EmaParams4 {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |msg: &str| Err(DetectorError::InvalidParams(msg.into()));
        if self.ema_fast_interval < 1 || self.ema_packet_fast_interval < 1 {
            return bad("EMA intervals must be >= 1");
        }
        if self.ema_fast_interval >= self.ema_slow_interval {
            return bad("entropy fast interval must be below the slow interval");
        }
        if self.ema_packet_fast_interval >= self.ema_packet_slow_interval {
            return bad("rate fast interval must be below the slow interval");
        }
        if !(self.tr_ent_alarm < self.tr_ent_no_alarm) {
            return bad("tr_ent_alarm must be below tr_ent_no_alarm");
        }
        if !(self.tr_pkt_no_alarm < self.tr_pkt_alarm) {
            return bad("tr_pkt_no_alarm must be below tr_pkt_alarm");
        }
        Ok(())
    }

    /// Non-fatal configuration smells, surfaced by loaders.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.tr_ent_alarm > 0.0 {
            w.push(format!(
                "tr_ent_alarm = {} is positive; the alarm condition `ent_diff < tr_ent_alarm` \
                 normally expects a negative threshold",
                self.tr_ent_alarm
            ));
        }
        w
    }
}

/// Difference between the fast and slow trend of one series.
pub fn diff_signal(fast: f64, slow: f64) -> f64 {
    fast - slow
}

/// The hysteresis rule on the two diff signals. Strict inequalities:
/// exact equality with a threshold never changes state.
pub fn alarm_transition(active: bool, ent_diff: f64, rate_diff: f64, p: &EmaParams4) -> bool {
    if ent_diff < p.tr_ent_alarm && rate_diff > p.tr_pkt_alarm {
        true
    } else if ent_diff > p.tr_ent_no_alarm && rate_diff < p.tr_pkt_no_alarm {
        false
    } else {
        active
    }
}

/// Latched alarm bit plus the sample where it last flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmState {
    pub active: bool,
    pub last_change_sample: Option<u64>,
}

/// One row of the detector event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ema4Record {
    pub sample_index: u64,
    pub ent_fast: f64,
    pub ent_slow: f64,
    pub rate_fast: f64,
    pub rate_slow: f64,
    pub ent_diff: f64,
    pub rate_diff: f64,
    pub alarm: bool,
}

/// Core detector operating on already-filtered sample pairs.
#[derive(Debug, Clone)]
pub struct Ema4Detector {
    params: EmaParams4,
    ent_fast: Ema,
    ent_slow: Ema,
    rate_fast: Ema,
    rate_slow: Ema,
    alarm: AlarmState,
    samples_seen: u64,
}

impl Ema4Detector {
    pub fn new(params: EmaParams4) -> Result<Self, DetectorError> {
        params.validate()?;
        Ok(Ema4Detector {
            params,
            ent_fast: Ema::new(params.ema_fast_interval),
            ent_slow: Ema::new(params.ema_slow_interval),
            rate_fast: Ema::new(params.ema_packet_fast_interval),
            rate_slow: Ema::new(params.ema_packet_slow_interval),
            alarm: AlarmState {
                active: false,
                last_change_sample: None,
            },
            samples_seen: 0,
        })
    }

    pub fn params(&self) -> &EmaParams4 {
        &self.params
    }

    pub fn alarm_state(&self) -> AlarmState {
        self.alarm
    }

    /// Consume one time-aligned pair of filtered samples.
    ///
    /// Alarm evaluation is suppressed until every EMA has received a
    /// full period of samples; the startup transient would otherwise
    /// produce spurious diffs.
    pub fn step(
        &mut self,
        filtered_entropy: &SeriesSample,
        filtered_rate: &SeriesSample,
    ) -> Result<Ema4Record, DetectorError> {
        if filtered_entropy.index != filtered_rate.index {
            return Err(DetectorError::IndexMismatch {
                entropy: filtered_entropy.index,
                rate: filtered_rate.index,
            });
        }
        let ent_fast = self.ent_fast.update(filtered_entropy.value);
        let ent_slow = self.ent_slow.update(filtered_entropy.value);
        let rate_fast = self.rate_fast.update(filtered_rate.value);
        let rate_slow = self.rate_slow.update(filtered_rate.value);
        self.samples_seen += 1;

        let ent_diff = diff_signal(ent_fast, ent_slow);
        let rate_diff = diff_signal(rate_fast, rate_slow);

        let warm = self.ent_fast.is_warm()
            && self.ent_slow.is_warm()
            && self.rate_fast.is_warm()
            && self.rate_slow.is_warm();
        if warm {
            let next = alarm_transition(self.alarm.active, ent_diff, rate_diff, &self.params);
            if next != self.alarm.active {
                self.alarm.active = next;
                self.alarm.last_change_sample = Some(filtered_entropy.index);
            }
        }

        Ok(Ema4Record {
            sample_index: filtered_entropy.index,
            ent_fast,
            ent_slow,
            rate_fast,
            rate_slow,
            ent_diff,
            rate_diff,
            alarm: self.alarm.active,
        })
    }
}

/// Full streaming pipeline: per-second aggregates in, filtered-sample
/// alarm decisions out. Owns the two max filters and the event log.
#[derive(Debug)]
pub struct Ema4Pipeline {
    detector: Ema4Detector,
    ent_filter: MaxFilter,
    rate_filter: MaxFilter,
    next_index: u64,
    records: Vec<Ema4Record>,
}

impl Ema4Pipeline {
    pub fn new(params: EmaParams4, window_len: u32) -> Result<Self, DetectorError> {
        if window_len < 1 {
            return Err(DetectorError::InvalidParams("window_len must be >= 1".into()));
        }
        Ok(Ema4Pipeline {
            detector: Ema4Detector::new(params)?,
            ent_filter: MaxFilter::new(window_len),
            rate_filter: MaxFilter::new(window_len),
            next_index: 0,
            records: Vec::new(),
        })
    }

    /// Feed one aggregate; returns the event-log row when a window
    /// closes.
    pub fn push(&mut self, agg: &IntervalAggregate) -> Option<Ema4Record> {
        let ent = self.ent_filter.push(pair_entropy(agg));
        let rate = self.rate_filter.push(packet_rate(agg));
        match (ent, rate) {
            (Some(e), Some(r)) => {
                let index = self.next_index;
                self.next_index += 1;
                let record = self
                    .detector
                    .step(
                        &SeriesSample {
                            index,
                            value: e,
                            kind: SeriesKind::Entropy,
                        },
                        &SeriesSample {
                            index,
                            value: r,
                            kind: SeriesKind::Rate,
                        },
                    )
                    .expect("filters emit in lockstep");
                self.records.push(record);
                Some(record)
            }
            (None, None) => None,
            _ => unreachable!("entropy and rate filters share the window length"),
        }
    }

    pub fn records(&self) -> &[Ema4Record] {
        &self.records
    }

    pub fn detector(&self) -> &Ema4Detector {
        &self.detector
    }
}

impl StreamDetector for Ema4Pipeline {
    fn push_aggregate(&mut self, agg: &IntervalAggregate) -> Option<AlarmSample> {
        self.push(agg).map(|r| AlarmSample {
            index: r.sample_index,
            active: r.alarm,
        })
    }

    fn sample_period(&self) -> u32 {
        self.ent_filter.window_len()
    }
}
