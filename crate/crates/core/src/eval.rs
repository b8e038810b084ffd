//! Scoring of alarm timelines against ground truth, parameter-grid
//! sweeps and operating-point selection.
//!
//! Metrics come at two levels. Interval-level confusion counts treat
//! every filtered sample independently and feed recall/precision/F1 and
//! the ROC. Event-level metrics treat each attack as one event: an
//! event is detected if any alarm sample overlaps it, and an alarm
//! episode with no overlapping attack is a false episode. Both levels
//! are always reported because a detector can catch every attack while
//! still missing plenty of individual intervals.

use std::io::{BufRead, BufReader, BufWriter, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::detector::{
    build_detector, run_detector, CusumParams, DetectorKind, EmaParams4, ParamSet,
};
use crate::ingest::{aggregate_all, IntervalAggregate};
use crate::trafficgen::LabeledTrace;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {alarms} alarm samples vs {reference} reference samples")]
    LengthMismatch { alarms: usize, reference: usize },
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("parameter set {param_id} failed: {msg}")]
    Point { param_id: usize, msg: String },
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-filtered-sample boolean alarm signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmTimeline {
    pub samples: Vec<bool>,
    /// Seconds covered by one sample (the filter window length).
    pub sample_period: u32,
}

/// Interval- and event-level scores for one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_count: u64,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub events_total: usize,
    pub events_detected: usize,
    /// Fraction of attack events with at least one overlapping alarm
    /// sample.
    pub event_detection_rate: f64,
    pub alarm_episodes: usize,
    pub spurious_episodes: usize,
    /// Fraction of alarm episodes that overlap no attack at all.
    pub event_false_positive_rate: f64,
    /// Seconds from event start to the close of its first alarm window,
    /// averaged over detected events.
    pub mean_detection_delay_s: Option<f64>,
}

impl EvalReport {
    /// Interval-level false-positive rate, the ROC x-axis.
    pub fn interval_fpr(&self) -> f64 {
        if self.fp + self.tn == 0 {
            0.0
        } else {
            self.fp as f64 / (self.fp + self.tn) as f64
        }
    }
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Collapse a per-second reference to the alarm sample period: a sample
/// is attack-positive iff any of its seconds is labeled true. Trailing
/// seconds that do not fill a window are dropped, mirroring the
/// detectors' tumbling filters.
pub fn downsample_reference(reference: &[bool], period: u32) -> Vec<bool> {
    reference
        .chunks_exact(period as usize)
        .map(|w| w.iter().any(|&b| b))
        .collect()
}

/// Maximal runs of `true`, as half-open `(start, end)` index ranges.
fn true_runs(bits: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, bits.len()));
    }
    runs
}

/// Score an alarm timeline against the per-second reference signal.
pub fn score(alarms: &AlarmTimeline, reference: &[bool]) -> Result<EvalReport, EvalError> {
    let period = alarms.sample_period as usize;
    let ref_samples = downsample_reference(reference, alarms.sample_period);
    if ref_samples.len() != alarms.samples.len() {
        return Err(EvalError::LengthMismatch {
            alarms: alarms.samples.len(),
            reference: ref_samples.len(),
        });
    }

    let (mut tp, mut fp, mut tn, mut fn_count) = (0u64, 0u64, 0u64, 0u64);
    for (&a, &r) in alarms.samples.iter().zip(&ref_samples) {
        match (a, r) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_count += 1,
        }
    }
    let recall = if tp + fn_count > 0 {
        tp as f64 / (tp + fn_count) as f64
    } else {
        0.0
    };
    let precision = if tp + fp > 0 {
        tp as f64 / (tp + fp) as f64
    } else {
        0.0
    };

    let events = true_runs(&ref_samples);
    let episodes = true_runs(&alarms.samples);

    let mut detected = 0usize;
    let mut delays = Vec::new();
    for &(start, end) in &events {
        let first_alarm = (start..end).find(|&i| alarms.samples[i]);
        if let Some(a) = first_alarm {
            detected += 1;
            // Event start at second resolution, alarm at the close of
            // its window: decisions only exist when a window ends.
            let event_start_s = (start * period..end * period)
                .find(|&s| reference.get(s).copied().unwrap_or(false))
                .unwrap_or(start * period);
            let delay = ((a + 1) * period) as f64 - event_start_s as f64;
            delays.push(delay.max(0.0));
        }
    }
    let spurious = episodes
        .iter()
        .filter(|&&(s, e)| !ref_samples[s..e].iter().any(|&r| r))
        .count();

    let events_total = events.len();
    let event_detection_rate = if events_total == 0 {
        1.0
    } else {
        detected as f64 / events_total as f64
    };
    let event_false_positive_rate = if episodes.is_empty() {
        0.0
    } else {
        spurious as f64 / episodes.len() as f64
    };
    let mean_detection_delay_s = if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<f64>() / delays.len() as f64)
    };

    Ok(EvalReport {
        tp,
        fp,
        tn,
        fn_count,
        recall,
        precision,
        f1: f1_from(precision, recall),
        events_total,
        events_detected: detected,
        event_detection_rate,
        alarm_episodes: episodes.len(),
        spurious_episodes: spurious,
        event_false_positive_rate,
        mean_detection_delay_s,
    })
}

// ---------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param_id: usize,
    pub params: ParamSet,
    pub report: EvalReport,
}

fn eval_point(
    kind: DetectorKind,
    param_id: usize,
    params: &ParamSet,
    window_len: u32,
    aggregates: &[IntervalAggregate],
    reference: &[bool],
) -> Result<SweepPoint, EvalError> {
    let mut detector =
        build_detector(kind, params, window_len).map_err(|e| EvalError::Point {
            param_id,
            msg: e.to_string(),
        })?;
    let timeline = run_detector(detector.as_mut(), aggregates);
    let report = score(&timeline, reference).map_err(|e| EvalError::Point {
        param_id,
        msg: e.to_string(),
    })?;
    Ok(SweepPoint {
        param_id,
        params: params.clone(),
        report,
    })
}

/// Sequential sweep core. Always available; [`sweep_aggregated`]
/// dispatches to the parallel version when the `parallel` feature is on.
pub fn sweep_aggregated_serial(
    kind: DetectorKind,
    grid: &[ParamSet],
    aggregates: &[IntervalAggregate],
    reference: &[bool],
    window_len: u32,
) -> Result<Vec<SweepPoint>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    grid.iter()
        .enumerate()
        .map(|(i, p)| eval_point(kind, i, p, window_len, aggregates, reference))
        .collect()
}

/// Parallel sweep core: grid points are independent detector runs over
/// a shared read-only aggregate series, merged back in grid order.
#[cfg(feature = "parallel")]
pub fn sweep_aggregated_parallel(
    kind: DetectorKind,
    grid: &[ParamSet],
    aggregates: &[IntervalAggregate],
    reference: &[bool],
    window_len: u32,
) -> Result<Vec<SweepPoint>, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, p)| eval_point(kind, i, p, window_len, aggregates, reference))
        .collect()
}

/// Run every grid point over an already-aggregated scenario.
pub fn sweep_aggregated(
    kind: DetectorKind,
    grid: &[ParamSet],
    aggregates: &[IntervalAggregate],
    reference: &[bool],
    window_len: u32,
) -> Result<Vec<SweepPoint>, EvalError> {
    #[cfg(feature = "parallel")]
    {
        sweep_aggregated_parallel(kind, grid, aggregates, reference, window_len)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sweep_aggregated_serial(kind, grid, aggregates, reference, window_len)
    }
}

/// Run every grid point over a labeled scenario. The trace is
/// aggregated once and shared by all points.
pub fn sweep(
    kind: DetectorKind,
    grid: &[ParamSet],
    scenario: &LabeledTrace,
    window_len: u32,
) -> Result<Vec<SweepPoint>, EvalError> {
    let aggregates = aggregate_all(&scenario.packets)?;
    sweep_aggregated(kind, grid, &aggregates, &scenario.reference, window_len)
}

/// What a sweep optimizes for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Interval-level F1.
    #[serde(rename = "F1")]
    F1,
    /// Event detection rate among points with zero false episodes.
    #[serde(rename = "TPR_at_zero_FPR")]
    TprAtZeroFpr,
}

fn objective_value(objective: Objective, report: &EvalReport) -> f64 {
    match objective {
        Objective::F1 => report.f1,
        Objective::TprAtZeroFpr => {
            if report.event_false_positive_rate == 0.0 {
                report.event_detection_rate
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Pick the best grid point. Ties break toward higher precision, then
/// lower mean detection delay, then earlier grid order.
pub fn optimize(
    kind: DetectorKind,
    grid: &[ParamSet],
    scenario: &LabeledTrace,
    window_len: u32,
    objective: Objective,
) -> Result<SweepPoint, EvalError> {
    let points = sweep(kind, grid, scenario, window_len)?;
    Ok(select_best(points, objective))
}

/// Selection rule shared by [`optimize`] and the CLI sweep.
pub fn select_best(points: Vec<SweepPoint>, objective: Objective) -> SweepPoint {
    let key = |p: &SweepPoint| {
        (
            objective_value(objective, &p.report),
            p.report.precision,
            -p.report.mean_detection_delay_s.unwrap_or(f64::INFINITY),
        )
    };
    points
        .into_iter()
        .reduce(|best, cand| {
            let (bo, bp, bd) = key(&best);
            let (co, cp, cd) = key(&cand);
            // Strict improvement wins; equality keeps the earlier point.
            if (co, cp, cd) > (bo, bp, bd) {
                cand
            } else {
                best
            }
        })
        .expect("sweep rejects empty grids")
}

// ---------------------------------------------------------------------
// Grid files
// ---------------------------------------------------------------------

/// Grid file: a detector kind plus per-parameter value lists. The grid
/// is the cartesian product of the listed axes, with unlisted
/// parameters at the detector's defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub detector: DetectorKind,
    #[serde(default)]
    pub axes: serde_json::Value,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Ema4Axes {
    ema_fast_interval: Option<Vec<u32>>,
    ema_slow_interval: Option<Vec<u32>>,
    ema_packet_fast_interval: Option<Vec<u32>>,
    ema_packet_slow_interval: Option<Vec<u32>>,
    tr_ent_alarm: Option<Vec<f64>>,
    tr_ent_no_alarm: Option<Vec<f64>>,
    tr_pkt_alarm: Option<Vec<f64>>,
    tr_pkt_no_alarm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CusumAxes {
    beta1: Option<Vec<f64>>,
    beta2: Option<Vec<f64>>,
    k: Option<Vec<f64>>,
    h: Option<Vec<f64>>,
    #[serde(rename = "K")]
    gain: Option<Vec<f64>>,
}

fn axis<T: Copy>(opt: &Option<Vec<T>>, default: T) -> Vec<T> {
    opt.clone().unwrap_or_else(|| vec![default])
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<ParamSet>, EvalError> {
        match self.detector {
            DetectorKind::Ema4 => {
                let axes: Ema4Axes = serde_json::from_value(self.axes.clone())
                    .map_err(|e| EvalError::InvalidGrid(e.to_string()))?;
                Ok(expand_ema4(&axes, EmaParams4::default()))
            }
            DetectorKind::CusumSyn | DetectorKind::CusumEntropy => {
                let axes: CusumAxes = serde_json::from_value(self.axes.clone())
                    .map_err(|e| EvalError::InvalidGrid(e.to_string()))?;
                let base = match self.detector {
                    DetectorKind::CusumSyn => CusumParams::syn_defaults(),
                    _ => CusumParams::entropy_defaults(),
                };
                Ok(expand_cusum(&axes, base))
            }
        }
    }
}

fn expand_ema4(axes: &Ema4Axes, base: EmaParams4) -> Vec<ParamSet> {
    let mut out = Vec::new();
    for &ef in &axis(&axes.ema_fast_interval, base.ema_fast_interval) {
        for &es in &axis(&axes.ema_slow_interval, base.ema_slow_interval) {
            for &pf in &axis(&axes.ema_packet_fast_interval, base.ema_packet_fast_interval) {
                for &ps in &axis(&axes.ema_packet_slow_interval, base.ema_packet_slow_interval) {
                    for &ta in &axis(&axes.tr_ent_alarm, base.tr_ent_alarm) {
                        for &tn in &axis(&axes.tr_ent_no_alarm, base.tr_ent_no_alarm) {
                            for &pa in &axis(&axes.tr_pkt_alarm, base.tr_pkt_alarm) {
                                for &pn in &axis(&axes.tr_pkt_no_alarm, base.tr_pkt_no_alarm) {
                                    out.push(ParamSet::Ema4(EmaParams4 {
                                        ema_fast_interval: ef,
                                        ema_slow_interval: es,
                                        ema_packet_fast_interval: pf,
                                        ema_packet_slow_interval: ps,
                                        tr_ent_alarm: ta,
                                        tr_ent_no_alarm: tn,
                                        tr_pkt_alarm: pa,
                                        tr_pkt_no_alarm: pn,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn expand_cusum(axes: &CusumAxes, base: CusumParams) -> Vec<ParamSet> {
    let mut out = Vec::new();
    for &b1 in &axis(&axes.beta1, base.beta1) {
        for &b2 in &axis(&axes.beta2, base.beta2) {
            for &k in &axis(&axes.k, base.k) {
                for &h in &axis(&axes.h, base.h) {
                    for &g in &axis(&axes.gain, base.gain) {
                        out.push(ParamSet::Cusum(CusumParams {
                            beta1: b1,
                            beta2: b2,
                            k,
                            h,
                            gain: g,
                            direction: base.direction,
                        }));
                    }
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// Reference grids
// ---------------------------------------------------------------------

/// Documented operating grid for the hybrid detector on normalized
/// entropy. Includes the published typical point; the added threshold
/// values are sized for unit-interval entropy diffs and pps-scale rate
/// diffs.
pub fn ema4_reference_grid() -> Vec<ParamSet> {
    expand_ema4(
        &Ema4Axes {
            ema_slow_interval: Some(vec![4, 6]),
            tr_ent_alarm: Some(vec![-0.74, -0.10, -0.05, -0.03, -0.02]),
            tr_ent_no_alarm: Some(vec![0.10, 0.02, 0.01]),
            tr_pkt_alarm: Some(vec![0.10, 25.0, 75.0]),
            tr_pkt_no_alarm: Some(vec![-0.50, -25.0]),
            ..Ema4Axes::default()
        },
        EmaParams4::default(),
    )
}

/// Grid around the published SYN-count operating point. `beta1` is
/// swept across both slow and fast mean adaptation: with the recurrence
/// `mu <- beta1*mu + (1-beta1)*x`, small values track the newest sample
/// and large values hold the baseline.
pub fn cusum_syn_reference_grid() -> Vec<ParamSet> {
    expand_cusum(
        &CusumAxes {
            beta1: Some(vec![0.148, 0.5, 0.852]),
            k: Some(vec![9.0, 18.0, 36.0]),
            h: Some(vec![3.4, 6.8, 13.6]),
            gain: Some(vec![0.005, 0.01, 0.02]),
            ..CusumAxes::default()
        },
        CusumParams::syn_defaults(),
    )
}

/// Grid for the entropy CUSUM, sized for unit-interval entropy.
pub fn cusum_entropy_reference_grid() -> Vec<ParamSet> {
    expand_cusum(
        &CusumAxes {
            beta1: Some(vec![0.139, 0.5, 0.861]),
            k: Some(vec![0.01, 0.02, 0.04]),
            h: Some(vec![0.05, 0.10, 0.20]),
            gain: Some(vec![0.25, 0.51, 1.0]),
            ..CusumAxes::default()
        },
        CusumParams::entropy_defaults(),
    )
}

// ---------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------

/// Escape a field for CSV embedding.
fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const REPORT_HEADER: &str = "param_id,detector,params,tp,fp,tn,fn,recall,precision,f1,\
event_detection_rate,event_false_positive_rate,mean_detection_delay_s,events_total,\
events_detected,alarm_episodes,spurious_episodes";

pub fn report_row(kind: DetectorKind, point: &SweepPoint) -> String {
    let r = &point.report;
    let params = serde_json::to_string(&point.params).expect("params serialize");
    format!(
        "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
        point.param_id,
        serde_json::to_value(kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        csv_quote(&params),
        r.tp,
        r.fp,
        r.tn,
        r.fn_count,
        r.recall,
        r.precision,
        r.f1,
        r.event_detection_rate,
        r.event_false_positive_rate,
        r.mean_detection_delay_s
            .map(|d| format!("{d:.3}"))
            .unwrap_or_default(),
        r.events_total,
        r.events_detected,
        r.alarm_episodes,
        r.spurious_episodes
    )
}

/// Write the full sweep report with a stable column order.
pub fn write_report<W: Write>(
    writer: W,
    kind: DetectorKind,
    points: &[SweepPoint],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{REPORT_HEADER}")?;
    for p in points {
        writeln!(w, "{}", report_row(kind, p))?;
    }
    w.flush()
}

/// ROC rows: interval-level FPR/TPR per grid point, sorted by FPR.
pub fn roc_rows(points: &[SweepPoint]) -> Vec<(f64, f64, usize)> {
    let mut rows: Vec<(f64, f64, usize)> = points
        .iter()
        .map(|p| (p.report.interval_fpr(), p.report.recall, p.param_id))
        .collect();
    rows.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.2.cmp(&b.2))
    });
    rows
}

pub fn write_roc<W: Write>(writer: W, points: &[SweepPoint]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "fpr,tpr,param_id")?;
    for (fpr, tpr, id) in roc_rows(points) {
        writeln!(w, "{fpr:.6},{tpr:.6},{id}")?;
    }
    w.flush()
}

/// Write an alarm timeline as `sample_index,alarm`.
pub fn write_timeline<W: Write>(writer: W, timeline: &AlarmTimeline) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "sample_index,alarm")?;
    for (i, &a) in timeline.samples.iter().enumerate() {
        writeln!(w, "{},{}", i, a as u8)?;
    }
    w.flush()
}

/// Read an alarm timeline written by [`write_timeline`]. Sample indices
/// must be contiguous from zero.
pub fn read_timeline<R: std::io::Read>(
    reader: R,
    sample_period: u32,
) -> std::io::Result<AlarmTimeline> {
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let mut samples = Vec::new();
    for (no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("sample_index") {
            continue;
        }
        let (idx, flag) = trimmed
            .split_once(',')
            .ok_or_else(|| bad(format!("timeline line {}: expected 2 fields", no + 1)))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| bad(format!("timeline line {}: bad index", no + 1)))?;
        if idx != samples.len() {
            return Err(bad(format!(
                "timeline line {}: indices not contiguous (expected {}, got {idx})",
                no + 1,
                samples.len()
            )));
        }
        let flag = match flag.trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(bad(format!("timeline line {}: bad flag {other:?}", no + 1))),
        };
        samples.push(flag);
    }
    Ok(AlarmTimeline {
        samples,
        sample_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn timeline(samples: &[u8], period: u32) -> AlarmTimeline {
        AlarmTimeline {
            samples: samples.iter().map(|&b| b != 0).collect(),
            sample_period: period,
        }
    }

    fn seconds(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b != 0).collect()
    }

    #[test]
    fn perfect_detector_scores_one() {
        let reference = seconds(&[0, 0, 1, 1, 0, 1]);
        let alarms = timeline(&[0, 0, 1, 1, 0, 1], 1);
        let r = score(&alarms, &reference).unwrap();
        assert_eq!((r.recall, r.precision, r.f1), (1.0, 1.0, 1.0));
        assert_eq!(r.event_detection_rate, 1.0);
        assert_eq!(r.event_false_positive_rate, 0.0);
        assert_eq!(r.events_total, 2);
    }

    #[test]
    fn f1_fixture_values() {
        assert!((f1_from(0.86, 0.76) - 0.81).abs() <= 0.005);
        assert!((f1_from(0.86, 0.59) - 0.70).abs() <= 0.005);
        assert!((f1_from(0.90, 0.76) - 0.82).abs() <= 0.005);
    }

    #[test]
    fn length_mismatch_detected() {
        let reference = seconds(&[0; 25]); // 2 full windows of 10
        let alarms = timeline(&[0, 0, 0], 10);
        assert!(matches!(
            score(&alarms, &reference),
            Err(EvalError::LengthMismatch {
                alarms: 3,
                reference: 2
            })
        ));
    }

    #[test]
    fn downsample_any_true_rule() {
        let reference = seconds(&[0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(downsample_reference(&reference, 10), vec![true]);
        assert_eq!(downsample_reference(&seconds(&[0; 10]), 10), vec![false]);
    }

    #[test]
    fn spurious_episode_counting() {
        // One attack event, one overlapping alarm episode and one
        // spurious episode.
        let reference = seconds(&[0, 0, 1, 1, 0, 0, 0, 0]);
        let alarms = timeline(&[0, 0, 1, 1, 0, 0, 1, 0], 1);
        let r = score(&alarms, &reference).unwrap();
        assert_eq!(r.events_total, 1);
        assert_eq!(r.events_detected, 1);
        assert_eq!(r.alarm_episodes, 2);
        assert_eq!(r.spurious_episodes, 1);
        assert_eq!(r.event_false_positive_rate, 0.5);
    }

    #[test]
    fn detection_delay_measured_to_window_close() {
        // Period 10; attack starts at second 23; first alarm at sample 3
        // (seconds 30..40), so the delay is 40 - 23 = 17 s.
        let mut reference = vec![false; 60];
        for s in 23..45 {
            reference[s] = true;
        }
        let alarms = timeline(&[0, 0, 0, 1, 1, 0], 10);
        let r = score(&alarms, &reference).unwrap();
        assert_eq!(r.mean_detection_delay_s, Some(17.0));
    }

    #[test]
    fn no_events_is_vacuously_detected() {
        let r = score(&timeline(&[0, 0, 0], 1), &seconds(&[0, 0, 0])).unwrap();
        assert_eq!(r.event_detection_rate, 1.0);
        assert_eq!(r.events_total, 0);
        assert_eq!(r.mean_detection_delay_s, None);
    }

    proptest! {
        #[test]
        fn confusion_counts_partition_samples(
            bits in prop::collection::vec(0u8..2, 1..200),
            alarm_bits in prop::collection::vec(0u8..2, 1..200),
        ) {
            let n = bits.len().min(alarm_bits.len());
            let reference = seconds(&bits[..n]);
            let alarms = timeline(&alarm_bits[..n], 1);
            let r = score(&alarms, &reference).unwrap();
            prop_assert_eq!(r.tp + r.fp + r.tn + r.fn_count, n as u64);
        }

        #[test]
        fn swapping_signals_swaps_recall_and_precision(
            bits in prop::collection::vec(0u8..2, 1..200),
            alarm_bits in prop::collection::vec(0u8..2, 1..200),
        ) {
            let n = bits.len().min(alarm_bits.len());
            let a = score(&timeline(&alarm_bits[..n], 1), &seconds(&bits[..n])).unwrap();
            let b = score(&timeline(&bits[..n], 1), &seconds(&alarm_bits[..n])).unwrap();
            prop_assert!((a.recall - b.precision).abs() < 1e-12);
            prop_assert!((a.precision - b.recall).abs() < 1e-12);
        }
    }

    #[test]
    fn timeline_roundtrip() {
        let tl = timeline(&[0, 1, 1, 0], 10);
        let mut buf = Vec::new();
        write_timeline(&mut buf, &tl).unwrap();
        assert_eq!(read_timeline(buf.as_slice(), 10).unwrap(), tl);
    }

    #[test]
    fn grid_expansion_cartesian_product() {
        let spec = GridSpec {
            detector: DetectorKind::Ema4,
            axes: serde_json::json!({
                "tr_ent_alarm": [-0.5, -0.74, -1.0],
                "ema_slow_interval": [4, 6],
            }),
        };
        let grid = spec.expand().unwrap();
        assert_eq!(grid.len(), 6);
        match &grid[0] {
            ParamSet::Ema4(p) => {
                // Unlisted axes sit at the defaults.
                assert_eq!(p.ema_fast_interval, 2);
                assert_eq!(p.tr_pkt_alarm, 0.10);
            }
            _ => panic!("wrong param kind"),
        }
    }

    #[test]
    fn unknown_axis_rejected() {
        let spec = GridSpec {
            detector: DetectorKind::Ema4,
            axes: serde_json::json!({ "no_such_knob": [1] }),
        };
        assert!(matches!(spec.expand(), Err(EvalError::InvalidGrid(_))));
    }

    #[test]
    fn reference_grids_expand_and_validate() {
        assert!(!ema4_reference_grid().is_empty());
        for p in ema4_reference_grid() {
            if let ParamSet::Ema4(p) = p {
                p.validate().unwrap();
            }
        }
        assert_eq!(cusum_syn_reference_grid().len(), 81);
        assert_eq!(cusum_entropy_reference_grid().len(), 81);
    }

    #[test]
    fn select_best_prefers_objective_then_precision_then_order() {
        let mk = |id, f1, precision| SweepPoint {
            param_id: id,
            params: ParamSet::Ema4(EmaParams4::default()),
            report: EvalReport {
                tp: 0,
                fp: 0,
                tn: 0,
                fn_count: 0,
                recall: 0.0,
                precision,
                f1,
                events_total: 0,
                events_detected: 0,
                event_detection_rate: 0.0,
                alarm_episodes: 0,
                spurious_episodes: 0,
                event_false_positive_rate: 0.0,
                mean_detection_delay_s: None,
            },
        };
        // Higher F1 wins.
        let best = select_best(vec![mk(0, 0.5, 0.9), mk(1, 0.8, 0.1)], Objective::F1);
        assert_eq!(best.param_id, 1);
        // Equal F1: higher precision wins.
        let best = select_best(vec![mk(0, 0.5, 0.2), mk(1, 0.5, 0.9)], Objective::F1);
        assert_eq!(best.param_id, 1);
        // Full tie: earlier grid order wins.
        let best = select_best(vec![mk(0, 0.5, 0.6), mk(1, 0.5, 0.6)], Objective::F1);
        assert_eq!(best.param_id, 0);
    }
}
