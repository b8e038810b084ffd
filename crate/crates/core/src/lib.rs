//! Streaming DDoS detection toolkit.
//!
//! The pipeline turns packet streams (canonical CSV traces or live TZSP
//! datagrams) into per-second src-dst aggregates, extracts two feature
//! series (normalized pair entropy and packet rate), max-filters them into
//! 10-second samples and feeds those to one of three streaming detectors:
//!
//! * [`detector::Ema4Pipeline`] — the hybrid detector: fast/slow EMA pairs
//!   over both feature series with a two-condition hysteresis alarm,
//! * [`detector::CusumPipeline`] — CUSUM over filtered SYN counts
//!   (SYN-flood baseline) or over filtered entropy (general baseline).
//!
//! [`trafficgen`] synthesizes labeled attack scenarios and [`eval`] scores
//! alarm timelines against ground truth, sweeps parameter grids and picks
//! operating points.

pub mod detector;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod trafficgen;

pub use ingest::{IntervalAggregate, PacketMeta, PairKey, Protocol};
