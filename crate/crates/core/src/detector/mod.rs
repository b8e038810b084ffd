//! Streaming detectors sharing one interface: feed per-second
//! aggregates, get an alarm decision every time a filter window closes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::IntervalAggregate;

mod cusum;
mod ema;
mod ema4;

pub use cusum::{
    cusum_step, CusumDirection, CusumFeature, CusumParams, CusumPipeline, CusumRecord, CusumState,
};
pub use ema::Ema;
pub use ema4::{alarm_transition, diff_signal, AlarmState, Ema4Detector, Ema4Pipeline, Ema4Record, EmaParams4};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
    #[error("sample index mismatch: entropy {entropy} vs rate {rate}")]
    IndexMismatch { entropy: u64, rate: u64 },
}

/// One decision of a streaming detector, emitted per filtered sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlarmSample {
    pub index: u64,
    pub active: bool,
}

/// Common surface of the streaming detectors. One instance owns one
/// stream; instances for different targets are independent and can run
/// on separate threads.
pub trait StreamDetector {
    /// Feed one per-second aggregate; `Some` whenever a filter window
    /// closes and an alarm decision is produced.
    fn push_aggregate(&mut self, agg: &IntervalAggregate) -> Option<AlarmSample>;

    /// Seconds covered by one emitted decision.
    fn sample_period(&self) -> u32;
}

/// Run a detector over a finished aggregate series, collecting the
/// per-sample alarm signal.
pub fn run_detector<D: StreamDetector + ?Sized>(
    detector: &mut D,
    aggregates: &[IntervalAggregate],
) -> crate::eval::AlarmTimeline {
    let mut samples = Vec::with_capacity(aggregates.len() / detector.sample_period() as usize + 1);
    for agg in aggregates {
        if let Some(s) = detector.push_aggregate(agg) {
            samples.push(s.active);
        }
    }
    crate::eval::AlarmTimeline {
        samples,
        sample_period: detector.sample_period(),
    }
}

/// The three shipped detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "EMA4")]
    Ema4,
    #[serde(rename = "CUSUM_SYN")]
    CusumSyn,
    #[serde(rename = "CUSUM_ENTROPY")]
    CusumEntropy,
}

impl DetectorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Ema4 => "EMA4",
            DetectorKind::CusumSyn => "CUSUM_SYN",
            DetectorKind::CusumEntropy => "CUSUM_ENTROPY",
        }
    }

    /// Canonical parameters for this detector.
    pub fn default_params(&self) -> ParamSet {
        match self {
            DetectorKind::Ema4 => ParamSet::Ema4(EmaParams4::default()),
            DetectorKind::CusumSyn => ParamSet::Cusum(CusumParams::syn_defaults()),
            DetectorKind::CusumEntropy => ParamSet::Cusum(CusumParams::entropy_defaults()),
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "EMA4" => Ok(DetectorKind::Ema4),
            "CUSUM_SYN" => Ok(DetectorKind::CusumSyn),
            "CUSUM_ENTROPY" => Ok(DetectorKind::CusumEntropy),
            other => Err(format!("unknown detector {other:?}")),
        }
    }
}

/// Parameters for any detector kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSet {
    Ema4(EmaParams4),
    Cusum(CusumParams),
}

/// Instantiate a detector pipeline. The parameter kind must match the
/// detector kind.
pub fn build_detector(
    kind: DetectorKind,
    params: &ParamSet,
    window_len: u32,
) -> Result<Box<dyn StreamDetector + Send>, DetectorError> {
    match (kind, params) {
        (DetectorKind::Ema4, ParamSet::Ema4(p)) => Ok(Box::new(Ema4Pipeline::new(*p, window_len)?)),
        (DetectorKind::CusumSyn, ParamSet::Cusum(p)) => Ok(Box::new(CusumPipeline::new(
            *p,
            CusumFeature::SynCount,
            window_len,
        )?)),
        (DetectorKind::CusumEntropy, ParamSet::Cusum(p)) => Ok(Box::new(CusumPipeline::new(
            *p,
            CusumFeature::Entropy,
            window_len,
        )?)),
        _ => Err(DetectorError::InvalidParams(format!(
            "parameter set does not match detector {}",
            kind.as_str()
        ))),
    }
}
