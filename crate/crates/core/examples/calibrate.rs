//! Scratch calibration probe (not part of the deliverable surface).

use std::net::Ipv4Addr;

use fourema::detector::{DetectorKind, ParamSet};
use fourema::eval::{
    cusum_entropy_reference_grid, cusum_syn_reference_grid, ema4_reference_grid, score,
    sweep_aggregated, select_best, Objective,
};
use fourema::detector::{build_detector, run_detector, CusumParams, EmaParams4};
use fourema::features::{packet_rate, pair_entropy, MaxFilter};
use fourema::trafficgen::{
    AttackKind, AttackTrain, BaselineProfile, ScenarioSpec, ScenarioStream,
};

fn main() {
    let spec = ScenarioSpec {
        seed: std::env::var("SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024),
        duration: 3600,
        baseline: BaselineProfile {
            mean_rate: 500.0,
            pair_pool_size: 1500,
            heavy_tail_exponent: 0.6,
            burst_rate: 800.0,
            burst_probability: 0.01,
            burst_duration: (2, 8),
            flow_probability: 0.008,
            flow_rate: (40.0, 80.0),
            flow_duration: (15, 60),
        },
        attacks: Vec::new(),
        attack_train: Some(AttackTrain {
            count: 21,
            kind: AttackKind::SynFlood,
            first_start: 150,
            duration_range: (60, 150),
            gap_range: (40, 60),
            attackers: (55, 60),
            per_attacker_rate: 20.0,
            packet_size: 60,
            max_start_delay: 10,
            target: Ipv4Addr::new(10, 200, 0, 10),
            churn: true,
        }),
    };

    let t0 = std::time::Instant::now();
    let mut aggs = Vec::new();
    let mut reference = Vec::new();
    let mut packet_count = 0u64;
    for batch in ScenarioStream::new(&spec).unwrap() {
        packet_count += batch.packets.len() as u64;
        aggs.push(batch.to_aggregate());
        reference.push(batch.is_attack);
    }
    eprintln!(
        "generated {packet_count} packets over {} s in {:.2?}",
        spec.duration,
        t0.elapsed()
    );
    let end = spec
        .attack_train
        .as_ref()
        .map(|_| reference.iter().rposition(|&b| b).unwrap())
        .unwrap_or(0);
    eprintln!("last attack second: {end}");

    // Filtered feature series with window 10.
    let mut ent_f = MaxFilter::new(10);
    let mut rate_f = MaxFilter::new(10);
    let mut syn_f = MaxFilter::new(10);
    let mut filt = Vec::new();
    for agg in &aggs {
        let e = ent_f.push(pair_entropy(agg));
        let r = rate_f.push(packet_rate(agg));
        let s = syn_f.push(agg.syn_count as f64);
        if let (Some(e), Some(r), Some(s)) = (e, r, s) {
            filt.push((e, r, s));
        }
    }
    let ref_samples: Vec<bool> = reference
        .chunks_exact(10)
        .map(|w| w.iter().any(|&b| b))
        .collect();

    // Stats over attack vs quiet samples.
    let mut quiet_e: Vec<f64> = Vec::new();
    let mut attack_e: Vec<f64> = Vec::new();
    let mut quiet_r = Vec::new();
    let mut attack_r = Vec::new();
    let mut quiet_s = Vec::new();
    let mut attack_s = Vec::new();
    for (i, &(e, r, s)) in filt.iter().enumerate() {
        if ref_samples[i] {
            attack_e.push(e);
            attack_r.push(r);
            attack_s.push(s);
        } else {
            quiet_e.push(e);
            quiet_r.push(r);
            quiet_s.push(s);
        }
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean, var.sqrt(), min, max)
    };
    eprintln!("filtered entropy quiet : {:?}", stats(&quiet_e));
    eprintln!("filtered entropy attack: {:?}", stats(&attack_e));
    eprintln!("filtered rate quiet    : {:?}", stats(&quiet_r));
    eprintln!("filtered rate attack   : {:?}", stats(&attack_r));
    eprintln!("filtered syn quiet     : {:?}", stats(&quiet_s));
    eprintln!("filtered syn attack    : {:?}", stats(&attack_s));

    // 4EMA diff traces with canonical intervals: report minimum ent_diff
    // and max rate_diff in quiet vs attack periods.
    let params = EmaParams4::default();
    let mut det = fourema::detector::Ema4Detector::new(params).unwrap();
    let mut quiet_ed: Vec<f64> = Vec::new();
    let mut attack_ed = Vec::new();
    let mut quiet_rd = Vec::new();
    for (i, &(e, r, _)) in filt.iter().enumerate() {
        let rec = det
            .step(
                &fourema::features::SeriesSample {
                    index: i as u64,
                    value: e,
                    kind: fourema::features::SeriesKind::Entropy,
                },
                &fourema::features::SeriesSample {
                    index: i as u64,
                    value: r,
                    kind: fourema::features::SeriesKind::Rate,
                },
            )
            .unwrap();
        if i < 10 {
            continue;
        }
        if ref_samples[i] || (i > 0 && ref_samples[i - 1]) {
            attack_ed.push(rec.ent_diff);
        } else {
            quiet_ed.push(rec.ent_diff);
            quiet_rd.push(rec.rate_diff);
        }
    }
    eprintln!("quiet ent_diff : {:?}", stats(&quiet_ed));
    eprintln!("attack ent_diff: {:?}", stats(&attack_ed));
    eprintln!("quiet rate_diff: {:?}", stats(&quiet_rd));

    // Per-attack minimum ent diff (how deep each event dips).
    let mut event_min: Vec<f64> = Vec::new();
    let mut cur_min: Option<f64> = None;
    let mut det2 = fourema::detector::Ema4Detector::new(params).unwrap();
    for (i, &(e, r, _)) in filt.iter().enumerate() {
        let rec = det2
            .step(
                &fourema::features::SeriesSample {
                    index: i as u64,
                    value: e,
                    kind: fourema::features::SeriesKind::Entropy,
                },
                &fourema::features::SeriesSample {
                    index: i as u64,
                    value: r,
                    kind: fourema::features::SeriesKind::Rate,
                },
            )
            .unwrap();
        if ref_samples[i] {
            cur_min = Some(cur_min.map_or(rec.ent_diff, |m: f64| m.min(rec.ent_diff)));
        } else if let Some(m) = cur_min.take() {
            event_min.push(m);
        }
    }
    if let Some(m) = cur_min {
        event_min.push(m);
    }
    event_min.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eprintln!("per-event min ent_diff ({}): {:?}", event_min.len(), event_min);

    // Sweep the reference grids.
    let t1 = std::time::Instant::now();
    let pts = sweep_aggregated(
        DetectorKind::Ema4,
        &ema4_reference_grid(),
        &aggs,
        &reference,
        10,
    )
    .unwrap();
    eprintln!("ema4 sweep of {} pts in {:.2?}", pts.len(), t1.elapsed());
    let best = select_best(pts.clone(), Objective::TprAtZeroFpr);
    eprintln!(
        "ema4 best tpr@0fpr: det={:.3} fp={:.3} f1={:.3} params={:?}",
        best.report.event_detection_rate,
        best.report.event_false_positive_rate,
        best.report.f1,
        best.params
    );
    let best_f1 = select_best(pts, Objective::F1);
    eprintln!(
        "ema4 best f1: f1={:.3} det={:.3} fp={:.3} recall={:.3} precision={:.3} params={:?}",
        best_f1.report.f1,
        best_f1.report.event_detection_rate,
        best_f1.report.event_false_positive_rate,
        best_f1.report.recall,
        best_f1.report.precision,
        best_f1.params
    );

    // CUSUM-SYN at published params.
    let mut det = build_detector(
        DetectorKind::CusumSyn,
        &ParamSet::Cusum(CusumParams::syn_defaults()),
        10,
    )
    .unwrap();
    let tl = run_detector(det.as_mut(), &aggs);
    let rep = score(&tl, &reference).unwrap();
    eprintln!(
        "cusum-syn @published: det={:.3} evfp={:.3} recall={:.3} precision={:.3} f1={:.3} episodes={}",
        rep.event_detection_rate, rep.event_false_positive_rate, rep.recall, rep.precision, rep.f1,
        rep.alarm_episodes
    );

    // CUSUM-Entropy at unit defaults.
    let mut det = build_detector(
        DetectorKind::CusumEntropy,
        &ParamSet::Cusum(CusumParams::entropy_defaults()),
        10,
    )
    .unwrap();
    let tl = run_detector(det.as_mut(), &aggs);
    let rep = score(&tl, &reference).unwrap();
    eprintln!(
        "cusum-entропy @defaults: det={:.3} evfp={:.3} recall={:.3} precision={:.3} f1={:.3} episodes={} spurious={}",
        rep.event_detection_rate, rep.event_false_positive_rate, rep.recall, rep.precision, rep.f1,
        rep.alarm_episodes, rep.spurious_episodes
    );

    // CUSUM grids.
    let pts = sweep_aggregated(
        DetectorKind::CusumSyn,
        &cusum_syn_reference_grid(),
        &aggs,
        &reference,
        10,
    )
    .unwrap();
    let best = select_best(pts.clone(), Objective::F1);
    eprintln!(
        "cusum-syn best f1: f1={:.3} det={:.3} evfp={:.3} params={:?}",
        best.report.f1, best.report.event_detection_rate, best.report.event_false_positive_rate,
        best.params
    );
    let best0 = select_best(pts, Objective::TprAtZeroFpr);
    eprintln!(
        "cusum-syn best tpr@0fpr: det={:.3} evfp={:.3} f1={:.3} params={:?}",
        best0.report.event_detection_rate, best0.report.event_false_positive_rate,
        best0.report.f1, best0.params
    );
    let pts = sweep_aggregated(
        DetectorKind::CusumEntropy,
        &cusum_entropy_reference_grid(),
        &aggs,
        &reference,
        10,
    )
    .unwrap();
    let best = select_best(pts, Objective::F1);
    eprintln!(
        "cusum-entropy best f1: f1={:.3} det={:.3} evfp={:.3} params={:?}",
        best.report.f1, best.report.event_detection_rate, best.report.event_false_positive_rate,
        best.params
    );
    eprintln!("total elapsed {:.2?}", t0.elapsed());

    if std::env::var("ICMP").is_ok() {
        icmp_probe();
    }
}

#[allow(dead_code)]
fn icmp_probe() {
    let spec = ScenarioSpec {
        seed: 7,
        duration: 2400,
        baseline: BaselineProfile {
            mean_rate: 500.0,
            pair_pool_size: 1500,
            heavy_tail_exponent: 0.6,
            burst_rate: 800.0,
            burst_probability: 0.01,
            burst_duration: (2, 8),
            flow_probability: 0.008,
            flow_rate: (40.0, 80.0),
            flow_duration: (15, 60),
        },
        attacks: vec![fourema::trafficgen::AttackSpec {
            kind: AttackKind::IcmpFlood,
            attackers: (33, 42),
            per_attacker_rate: 1000.0,
            packet_size: 70,
            start: 300,
            duration: 1800,
            max_start_delay: 10,
            target: std::net::Ipv4Addr::new(10, 200, 0, 10),
            churn: true,
            spoof_sources: false,
        }],
        attack_train: None,
    };
    let t0 = std::time::Instant::now();
    let mut aggs = Vec::new();
    let mut reference = Vec::new();
    let mut packets = 0u64;
    for batch in ScenarioStream::new(&spec).unwrap() {
        packets += batch.packets.len() as u64;
        aggs.push(batch.to_aggregate());
        reference.push(batch.is_attack);
    }
    eprintln!("icmp: {packets} packets in {:.2?}", t0.elapsed());

    let ema_params = EmaParams4 {
        tr_ent_alarm: -0.02,
        tr_ent_no_alarm: 0.01,
        tr_pkt_alarm: 25.0,
        tr_pkt_no_alarm: -0.5,
        ..EmaParams4::default()
    };
    let mut det = build_detector(DetectorKind::Ema4, &ParamSet::Ema4(ema_params), 10).unwrap();
    let tl = run_detector(det.as_mut(), &aggs);
    let rep = score(&tl, &reference).unwrap();
    eprintln!(
        "icmp ema4: det={:.3} episodes={} spurious={} delay={:?}",
        rep.event_detection_rate, rep.alarm_episodes, rep.spurious_episodes,
        rep.mean_detection_delay_s
    );
    let mut det = build_detector(
        DetectorKind::CusumSyn,
        &ParamSet::Cusum(CusumParams::syn_defaults()),
        10,
    )
    .unwrap();
    let tl = run_detector(det.as_mut(), &aggs);
    let alarms = tl.samples.iter().filter(|&&b| b).count();
    eprintln!("icmp cusum-syn @published: {} alarm samples", alarms);
    let slow = CusumParams { beta1: 0.852, k: 9.0, h: 3.4, gain: 0.02, ..CusumParams::syn_defaults() };
    let mut det = build_detector(DetectorKind::CusumSyn, &ParamSet::Cusum(slow), 10).unwrap();
    let tl = run_detector(det.as_mut(), &aggs);
    let alarms = tl.samples.iter().filter(|&&b| b).count();
    eprintln!("icmp cusum-syn @slow-grid-point: {} alarm samples", alarms);
    eprintln!("icmp total {:.2?}", t0.elapsed());
}
