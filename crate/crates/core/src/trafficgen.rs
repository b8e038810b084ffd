//! Deterministic synthesis of labeled traces: heavy-tailed baseline
//! traffic with legitimate multi-connection bursts, plus ICMP-flood and
//! SYN-flood botnet attacks, emitting both the packet stream and the
//! per-second ground-truth reference signal.
//!
//! Everything is driven by a seeded ChaCha stream: identical specs and
//! seed produce byte-identical traces.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{tcp_flags, IntervalAggregate, PacketMeta, Protocol};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid baseline profile: {0}")]
    InvalidProfile(String),
    #[error("invalid attack spec: {0}")]
    InvalidSpec(String),
    #[error("attack windows {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
    #[error("attack {attack} runs to second {end}, past the scenario duration {duration}")]
    OutOfRange { attack: usize, end: u64, duration: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shape of the background traffic.
///
/// Per-pair rates follow a Zipf-like share distribution over a fixed
/// pool; bursts inject short episodes of one host opening many
/// connections, the legitimate pattern that stresses diversity-only
/// detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineProfile {
    /// Long-run average packets per second.
    pub mean_rate: f64,
    /// Number of distinct src-dst pairs in the pool.
    pub pair_pool_size: u32,
    /// Zipf exponent for per-pair traffic shares; 0 = uniform.
    pub heavy_tail_exponent: f64,
    /// Extra packets per second while a burst is active.
    pub burst_rate: f64,
    /// Probability that a new burst starts in any given second.
    pub burst_probability: f64,
    /// Burst length bounds in seconds (min, max).
    pub burst_duration: (u32, u32),
    /// Probability that a long single-pair flow (a download) starts in
    /// any given second. Flows concentrate traffic on one pair, which
    /// dents the entropy series the way legitimate heavy transfers do.
    pub flow_probability: f64,
    /// Extra packets per second carried by one flow (min, max).
    pub flow_rate: (f64, f64),
    /// Flow length bounds in seconds (min, max).
    pub flow_duration: (u32, u32),
}

impl Default for BaselineProfile {
    fn default() -> Self {
        BaselineProfile {
            mean_rate: 500.0,
            pair_pool_size: 300,
            heavy_tail_exponent: 0.8,
            burst_rate: 5000.0,
            burst_probability: 0.002,
            burst_duration: (2, 5),
            flow_probability: 0.006,
            flow_rate: (40.0, 80.0),
            flow_duration: (15, 60),
        }
    }
}

impl BaselineProfile {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidProfile(m.into()));
        if !(self.mean_rate >= 1.0) {
            return bad("mean_rate must be >= 1");
        }
        if self.pair_pool_size < 1 {
            return bad("pair_pool_size must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.burst_probability) {
            return bad("burst_probability must be in [0,1]");
        }
        if self.heavy_tail_exponent < 0.0 || !self.heavy_tail_exponent.is_finite() {
            return bad("heavy_tail_exponent must be finite and >= 0");
        }
        if self.burst_duration.0 < 1 || self.burst_duration.0 > self.burst_duration.1 {
            return bad("burst_duration bounds must satisfy 1 <= min <= max");
        }
        if !(self.burst_rate >= 0.0) {
            return bad("burst_rate must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.flow_probability) {
            return bad("flow_probability must be in [0,1]");
        }
        if !(self.flow_rate.0 >= 0.0 && self.flow_rate.0 <= self.flow_rate.1) {
            return bad("flow_rate bounds must satisfy 0 <= min <= max");
        }
        if self.flow_duration.0 < 1 || self.flow_duration.0 > self.flow_duration.1 {
            return bad("flow_duration bounds must satisfy 1 <= min <= max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackKind {
    #[serde(rename = "ICMP_FLOOD")]
    IcmpFlood,
    #[serde(rename = "SYN_FLOOD")]
    SynFlood,
}

/// One attack window: a botnet of `attackers` hosts, each ramping in
/// after an independent start delay and emitting `per_attacker_rate`
/// packets per second at the target until the end second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Bot count range (min, max); the live count is drawn uniformly.
    pub attackers: (u32, u32),
    /// Packets per second per bot.
    pub per_attacker_rate: f64,
    /// Bytes on the wire per attack packet.
    pub packet_size: u32,
    /// First second of the attack window.
    pub start: u64,
    /// Window length in seconds.
    pub duration: u64,
    /// Upper bound on each bot's random start delay.
    #[serde(default = "AttackSpec::default_max_start_delay")]
    pub max_start_delay: u64,
    pub target: Ipv4Addr,
    /// Redraw the live bot count every minute, reproducing an attack
    /// with inconsistent intensity.
    #[serde(default)]
    pub churn: bool,
    /// Randomize the source address per packet instead of one fixed
    /// address per bot.
    #[serde(default)]
    pub spoof_sources: bool,
}

impl AttackSpec {
    fn default_max_start_delay() -> u64 {
        10
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidSpec(m.into()));
        if self.attackers.0 < 1 || self.attackers.0 > self.attackers.1 {
            return bad("attackers range must satisfy 1 <= min <= max");
        }
        if !(self.per_attacker_rate > 0.0) {
            return bad("per_attacker_rate must be > 0");
        }
        if self.duration == 0 {
            return bad("duration must be > 0");
        }
        if self.packet_size < 20 {
            return bad("packet_size must cover an IPv4 header");
        }
        Ok(())
    }

    fn end(&self) -> u64 {
        self.start + self.duration
    }
}

/// A generated trace plus its per-second attack indicator. `reference[t]`
/// is true iff at least one bot emitted a packet during second `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub packets: Vec<PacketMeta>,
    pub reference: Vec<bool>,
}

/// Whole-scenario description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    /// Scenario length in seconds.
    pub duration: u64,
    #[serde(default)]
    pub baseline: BaselineProfile,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    /// Convenience block that expands into a train of equally-specced
    /// attacks with seeded durations and gaps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_train: Option<AttackTrain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackTrain {
    pub count: u32,
    pub kind: AttackKind,
    pub first_start: u64,
    /// Per-attack duration bounds (min, max), inclusive.
    pub duration_range: (u64, u64),
    /// Idle gap bounds between consecutive attacks (min, max), inclusive.
    pub gap_range: (u64, u64),
    pub attackers: (u32, u32),
    pub per_attacker_rate: f64,
    pub packet_size: u32,
    #[serde(default = "AttackSpec::default_max_start_delay")]
    pub max_start_delay: u64,
    pub target: Ipv4Addr,
    #[serde(default)]
    pub churn: bool,
}

impl ScenarioSpec {
    /// Explicit attacks plus the expanded train, sorted by start.
    pub fn resolve_attacks(&self) -> Result<Vec<AttackSpec>, GenError> {
        let mut attacks = self.attacks.clone();
        if let Some(train) = &self.attack_train {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, 0x7261_696e)); // "rain"
            let mut start = train.first_start;
            for _ in 0..train.count {
                let duration = rng.gen_range(train.duration_range.0..=train.duration_range.1);
                attacks.push(AttackSpec {
                    kind: train.kind,
                    attackers: train.attackers,
                    per_attacker_rate: train.per_attacker_rate,
                    packet_size: train.packet_size,
                    start,
                    duration,
                    max_start_delay: train.max_start_delay,
                    target: train.target,
                    churn: train.churn,
                    spoof_sources: false,
                });
                let gap = rng.gen_range(train.gap_range.0..=train.gap_range.1);
                start += duration + gap;
            }
        }
        attacks.sort_by_key(|a| a.start);
        Ok(attacks)
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 round over seed ^ salt
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------
// Baseline generation
// ---------------------------------------------------------------------

const MICROS: f64 = 1e-6;

/// Baseline protocol mix. Roughly seven packets in ten are TCP, a tenth
/// of those are fresh connection attempts.
const P_TCP: f64 = 0.70;
const P_UDP: f64 = 0.25;
const P_ICMP: f64 = 0.04;
const P_TCP_SYN: f64 = 0.10;
const P_TCP_SYNACK: f64 = 0.09;
const P_TCP_FINACK: f64 = 0.10;
const P_TCP_PSHACK: f64 = 0.30;

const BASE_SIZES: [u32; 6] = [60, 90, 120, 576, 1400, 1500];
const BASE_SIZE_CDF: [f64; 6] = [0.28, 0.44, 0.60, 0.75, 0.85, 1.0];

struct ActiveBurst {
    remaining: u32,
    src: Ipv4Addr,
    dsts: Vec<Ipv4Addr>,
    cursor: usize,
}

struct ActiveFlow {
    remaining: u32,
    src: Ipv4Addr,
    dst: Ipv4Addr,
    rate: f64,
    carry: f64,
    fresh: bool,
}

struct BaselineGen {
    profile: BaselineProfile,
    pool: Vec<(Ipv4Addr, Ipv4Addr)>,
    zipf: Option<Zipf<f64>>,
    poisson: Poisson<f64>,
    rng: ChaCha8Rng,
    bursts: Vec<ActiveBurst>,
    flows: Vec<ActiveFlow>,
    burst_serial: u32,
}

impl BaselineGen {
    fn new(profile: BaselineProfile, seed: u64) -> Result<Self, GenError> {
        profile.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6261_7365)); // "base"
        let mut seen = HashSet::new();
        let mut pool = Vec::with_capacity(profile.pair_pool_size as usize);
        while pool.len() < profile.pair_pool_size as usize {
            let src = Ipv4Addr::new(10, rng.gen_range(1..255), rng.gen(), rng.gen_range(1..255));
            let dst = Ipv4Addr::new(
                198,
                rng.gen_range(18..20),
                rng.gen(),
                rng.gen_range(1..255),
            );
            if seen.insert((src, dst)) {
                pool.push((src, dst));
            }
        }
        let zipf = if profile.heavy_tail_exponent > 1e-9 {
            Some(
                Zipf::new(profile.pair_pool_size as u64, profile.heavy_tail_exponent)
                    .map_err(|e| GenError::InvalidProfile(format!("zipf: {e}")))?,
            )
        } else {
            None
        };
        let poisson = Poisson::new(profile.mean_rate)
            .map_err(|e| GenError::InvalidProfile(format!("poisson: {e}")))?;
        Ok(BaselineGen {
            profile,
            pool,
            zipf,
            poisson,
            rng,
            bursts: Vec::new(),
            flows: Vec::new(),
            burst_serial: 0,
        })
    }

    fn jitter(&mut self) -> f64 {
        // Microsecond grid so formatted timestamps stay in-second.
        self.rng.gen_range(0u32..1_000_000) as f64 * MICROS
    }

    fn draw_pair(&mut self) -> (Ipv4Addr, Ipv4Addr) {
        let idx = match &self.zipf {
            Some(z) => z.sample(&mut self.rng) as usize - 1,
            None => self.rng.gen_range(0..self.pool.len()),
        };
        self.pool[idx.min(self.pool.len() - 1)]
    }

    fn draw_protocol(&mut self) -> (Protocol, u8) {
        let r: f64 = self.rng.gen();
        if r < P_TCP {
            let f: f64 = self.rng.gen();
            let flags = if f < P_TCP_SYN {
                tcp_flags::SYN
            } else if f < P_TCP_SYN + P_TCP_SYNACK {
                tcp_flags::SYN | tcp_flags::ACK
            } else if f < P_TCP_SYN + P_TCP_SYNACK + P_TCP_FINACK {
                tcp_flags::FIN | tcp_flags::ACK
            } else if f < P_TCP_SYN + P_TCP_SYNACK + P_TCP_FINACK + P_TCP_PSHACK {
                tcp_flags::PSH | tcp_flags::ACK
            } else {
                tcp_flags::ACK
            };
            (Protocol::Tcp, flags)
        } else if r < P_TCP + P_UDP {
            (Protocol::Udp, 0)
        } else if r < P_TCP + P_UDP + P_ICMP {
            (Protocol::Icmp, 0)
        } else {
            (Protocol::Other, 0)
        }
    }

    fn draw_size(&mut self) -> u32 {
        let r: f64 = self.rng.gen();
        for (i, &edge) in BASE_SIZE_CDF.iter().enumerate() {
            if r < edge {
                return BASE_SIZES[i];
            }
        }
        *BASE_SIZES.last().unwrap()
    }

    /// Generate one second of background traffic (unsorted).
    fn second(&mut self, t: u64) -> Vec<PacketMeta> {
        // Flow lifecycle: a long transfer on one existing pair.
        if self.rng.gen_bool(self.profile.flow_probability) {
            let len = self
                .rng
                .gen_range(self.profile.flow_duration.0..=self.profile.flow_duration.1);
            let (src, dst) = self.pool[self.rng.gen_range(0..self.pool.len())];
            let rate = self
                .rng
                .gen_range(self.profile.flow_rate.0..=self.profile.flow_rate.1);
            self.flows.push(ActiveFlow {
                remaining: len,
                src,
                dst,
                rate,
                carry: 0.0,
                fresh: true,
            });
        }

        // Burst lifecycle first so a fresh burst contributes this second.
        if self.rng.gen_bool(self.profile.burst_probability) {
            let len = self
                .rng
                .gen_range(self.profile.burst_duration.0..=self.profile.burst_duration.1);
            let src = self.pool[self.rng.gen_range(0..self.pool.len())].0;
            let n_dsts = self.rng.gen_range(64..=192usize);
            let serial = self.burst_serial;
            self.burst_serial = self.burst_serial.wrapping_add(1);
            let dsts = (0..n_dsts)
                .map(|i| {
                    let v = (serial as usize * 251 + i) as u32;
                    Ipv4Addr::new(100, 64 + ((v >> 16) & 0x3f) as u8, (v >> 8) as u8, v as u8)
                })
                .collect();
            self.bursts.push(ActiveBurst {
                remaining: len,
                src,
                dsts,
                cursor: 0,
            });
        }

        let n = self.poisson.sample(&mut self.rng).round().max(0.0) as usize;
        let mut out = Vec::with_capacity(n + 16);
        for _ in 0..n {
            let (src, dst) = self.draw_pair();
            let (protocol, flags) = self.draw_protocol();
            let size = self.draw_size();
            let ts = t as f64 + self.jitter();
            out.push(PacketMeta {
                timestamp: ts,
                src,
                dst,
                protocol,
                tcp_flags: flags,
                size,
            });
        }

        let burst_n = self.profile.burst_rate.round() as usize;
        for b in 0..self.bursts.len() {
            for _ in 0..burst_n {
                let dst = {
                    let burst = &mut self.bursts[b];
                    let d = burst.dsts[burst.cursor % burst.dsts.len()];
                    burst.cursor += 1;
                    d
                };
                let src = self.bursts[b].src;
                // Each connection contributes one SYN and a handful of
                // data/ack packets.
                let f: f64 = self.rng.gen();
                let (protocol, flags) = if f < 0.12 {
                    (Protocol::Tcp, tcp_flags::SYN)
                } else if f < 0.57 {
                    (Protocol::Tcp, tcp_flags::PSH | tcp_flags::ACK)
                } else if f < 0.85 {
                    (Protocol::Tcp, tcp_flags::ACK)
                } else {
                    (Protocol::Udp, 0)
                };
                let size = if f < 0.5 { 60 } else { 120 };
                let ts = t as f64 + self.jitter();
                out.push(PacketMeta {
                    timestamp: ts,
                    src,
                    dst,
                    protocol,
                    tcp_flags: flags,
                    size,
                });
            }
            self.bursts[b].remaining -= 1;
        }
        self.bursts.retain(|b| b.remaining > 0);

        for flow in &mut self.flows {
            flow.carry += flow.rate;
            let n = flow.carry.floor() as usize;
            flow.carry -= n as f64;
            for i in 0..n {
                // One SYN opens the transfer, the rest is data and acks.
                let (flags, size) = if flow.fresh && i == 0 {
                    (tcp_flags::SYN, 60)
                } else if i % 4 == 0 {
                    (tcp_flags::ACK, 60)
                } else {
                    (tcp_flags::PSH | tcp_flags::ACK, 1400)
                };
                let ts = t as f64 + self.rng.gen_range(0u32..1_000_000) as f64 * MICROS;
                out.push(PacketMeta {
                    timestamp: ts,
                    src: flow.src,
                    dst: flow.dst,
                    protocol: Protocol::Tcp,
                    tcp_flags: flags,
                    size,
                });
            }
            flow.fresh = false;
            flow.remaining -= 1;
        }
        self.flows.retain(|f| f.remaining > 0);
        out
    }
}

// ---------------------------------------------------------------------
// Attack generation
// ---------------------------------------------------------------------

struct AttackPlan {
    spec: AttackSpec,
    bot_ips: Vec<Ipv4Addr>,
    delays: Vec<u64>,
    /// Live bot count per minute of the attack window.
    per_minute_count: Vec<u32>,
    carry: Vec<f64>,
    rng: ChaCha8Rng,
}

impl AttackPlan {
    fn new(spec: &AttackSpec, seed: u64) -> Result<Self, GenError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6174_7461)); // "atta"
        let max_bots = spec.attackers.1 as usize;
        let bot_ips = (0..max_bots)
            .map(|i| Ipv4Addr::new(172, 16 + (i / 65536) as u8, (i / 256) as u8, (i % 256) as u8))
            .collect();
        let delays = (0..max_bots)
            .map(|_| rng.gen_range(0..=spec.max_start_delay))
            .collect();
        let minutes = (spec.duration / 60 + 1) as usize;
        let initial = rng.gen_range(spec.attackers.0..=spec.attackers.1);
        let per_minute_count = (0..minutes)
            .map(|m| {
                if m == 0 || !spec.churn {
                    initial
                } else {
                    rng.gen_range(spec.attackers.0..=spec.attackers.1)
                }
            })
            .collect();
        Ok(AttackPlan {
            spec: *spec,
            bot_ips,
            delays,
            per_minute_count,
            carry: vec![0.0; max_bots],
            rng,
        })
    }

    /// Emit this attack's packets for absolute second `t` (unsorted).
    fn second(&mut self, t: u64) -> Vec<PacketMeta> {
        if t < self.spec.start || t >= self.spec.end() {
            return Vec::new();
        }
        let rel = t - self.spec.start;
        let minute = (rel / 60) as usize;
        let live = self.per_minute_count[minute.min(self.per_minute_count.len() - 1)] as usize;
        let (protocol, flags) = match self.spec.kind {
            AttackKind::SynFlood => (Protocol::Tcp, tcp_flags::SYN),
            AttackKind::IcmpFlood => (Protocol::Icmp, 0),
        };
        let mut out = Vec::new();
        for i in 0..self.bot_ips.len() {
            let active = i < live && rel >= self.delays[i];
            if !active {
                continue;
            }
            self.carry[i] += self.spec.per_attacker_rate;
            let n = self.carry[i].floor() as u64;
            self.carry[i] -= n as f64;
            for j in 0..n {
                let src = if self.spec.spoof_sources {
                    Ipv4Addr::from(self.rng.gen::<u32>() | 0x0100_0000)
                } else {
                    self.bot_ips[i]
                };
                out.push(PacketMeta {
                    timestamp: t as f64 + j as f64 / n as f64,
                    src,
                    dst: self.spec.target,
                    protocol,
                    tcp_flags: flags,
                    size: self.spec.packet_size,
                });
            }
        }
        out
    }
}

/// One scenario second: merged packets plus the attack indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondBatch {
    pub second: u64,
    pub packets: Vec<PacketMeta>,
    pub is_attack: bool,
}

impl SecondBatch {
    pub fn to_aggregate(&self) -> IntervalAggregate {
        IntervalAggregate::from_batch(self.second, &self.packets)
    }
}

/// Streaming scenario generator. Yields one [`SecondBatch`] per second
/// from 0 to `duration`, so arbitrarily large scenarios never have to
/// be materialized.
pub struct ScenarioStream {
    baseline: BaselineGen,
    attacks: Vec<AttackPlan>,
    duration: u64,
    next: u64,
}

impl ScenarioStream {
    pub fn new(spec: &ScenarioSpec) -> Result<Self, GenError> {
        if spec.duration < 1 {
            return Err(GenError::InvalidProfile("duration must be >= 1".into()));
        }
        let attacks = spec.resolve_attacks()?;
        validate_windows(&attacks, spec.duration)?;
        let plans = attacks
            .iter()
            .enumerate()
            .map(|(i, a)| AttackPlan::new(a, mix_seed(spec.seed, i as u64 + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ScenarioStream {
            baseline: BaselineGen::new(spec.baseline, spec.seed)?,
            attacks: plans,
            duration: spec.duration,
            next: 0,
        })
    }
}

impl Iterator for ScenarioStream {
    type Item = SecondBatch;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.duration {
            return None;
        }
        let t = self.next;
        self.next += 1;
        let mut packets = self.baseline.second(t);
        let mut is_attack = false;
        for plan in &mut self.attacks {
            let emitted = plan.second(t);
            if !emitted.is_empty() {
                is_attack = true;
                packets.extend(emitted);
            }
        }
        packets.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
        Some(SecondBatch {
            second: t,
            packets,
            is_attack,
        })
    }
}

fn validate_windows(attacks: &[AttackSpec], duration: u64) -> Result<(), GenError> {
    for (i, a) in attacks.iter().enumerate() {
        a.validate()?;
        if a.end() > duration {
            return Err(GenError::OutOfRange {
                attack: i,
                end: a.end(),
                duration,
            });
        }
        for (j, b) in attacks.iter().enumerate().skip(i + 1) {
            if a.start < b.end() && b.start < a.end() {
                return Err(GenError::Overlap { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Generate a baseline-only trace.
pub fn gen_baseline(
    profile: &BaselineProfile,
    duration: u64,
    seed: u64,
) -> Result<Vec<PacketMeta>, GenError> {
    if duration < 1 {
        return Err(GenError::InvalidProfile("duration must be >= 1".into()));
    }
    let mut gen = BaselineGen::new(*profile, seed)?;
    let mut out = Vec::new();
    for t in 0..duration {
        let mut batch = gen.second(t);
        batch.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
        out.extend(batch);
    }
    Ok(out)
}

/// A standalone attack fragment with its per-second activity labels
/// (indexed from `spec.start`).
#[derive(Debug, Clone, PartialEq)]
pub struct AttackFragment {
    pub packets: Vec<PacketMeta>,
    pub active_seconds: Vec<bool>,
}

/// Generate one attack in isolation.
pub fn gen_attack(spec: &AttackSpec, seed: u64) -> Result<AttackFragment, GenError> {
    let mut plan = AttackPlan::new(spec, seed)?;
    let mut packets = Vec::new();
    let mut active_seconds = Vec::with_capacity(spec.duration as usize);
    for t in spec.start..spec.end() {
        let mut batch = plan.second(t);
        batch.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
        active_seconds.push(!batch.is_empty());
        packets.extend(batch);
    }
    Ok(AttackFragment {
        packets,
        active_seconds,
    })
}

/// Merge a pre-generated baseline with a set of attacks. The scenario
/// duration is the baseline's covered span; attack windows must fit in
/// it and must not overlap each other.
pub fn compose_scenario(
    baseline: &[PacketMeta],
    attacks: &[AttackSpec],
    seed: u64,
) -> Result<LabeledTrace, GenError> {
    let duration = baseline
        .last()
        .map(|p| p.timestamp.floor() as u64 + 1)
        .unwrap_or(0);
    validate_windows(attacks, duration)?;
    let mut packets = baseline.to_vec();
    let mut reference = vec![false; duration as usize];
    for (i, spec) in attacks.iter().enumerate() {
        let frag = gen_attack(spec, mix_seed(seed, i as u64 + 1))?;
        for (off, &active) in frag.active_seconds.iter().enumerate() {
            if active {
                reference[(spec.start + off as u64) as usize] = true;
            }
        }
        packets.extend(frag.packets);
    }
    packets.sort_by(|a, b| a.timestamp.partial_cmp(&b.timestamp).unwrap());
    Ok(LabeledTrace { packets, reference })
}

/// Generate a full scenario in memory. Prefer [`ScenarioStream`] for
/// very large scenarios.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<LabeledTrace, GenError> {
    let mut packets = Vec::new();
    let mut reference = Vec::with_capacity(spec.duration as usize);
    for batch in ScenarioStream::new(spec)? {
        packets.extend(batch.packets);
        reference.push(batch.is_attack);
    }
    Ok(LabeledTrace { packets, reference })
}

// ---------------------------------------------------------------------
// Labels CSV
// ---------------------------------------------------------------------

/// Write the per-second reference signal as `second,is_attack`.
pub fn write_labels<W: Write>(writer: W, reference: &[bool]) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "second,is_attack")?;
    for (second, &flag) in reference.iter().enumerate() {
        writeln!(w, "{},{}", second, flag as u8)?;
    }
    w.flush()
}

/// Read a labels CSV back into a per-second boolean vector. Seconds must
/// be contiguous from the first row.
pub fn read_labels<R: std::io::Read>(reader: R) -> std::io::Result<Vec<bool>> {
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let mut out = Vec::new();
    let mut expected: Option<u64> = None;
    for (no, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("second") {
            continue;
        }
        let (sec, flag) = trimmed
            .split_once(',')
            .ok_or_else(|| bad(format!("labels line {}: expected 2 fields", no + 1)))?;
        let sec: u64 = sec
            .trim()
            .parse()
            .map_err(|_| bad(format!("labels line {}: bad second", no + 1)))?;
        if let Some(e) = expected {
            if sec != e {
                return Err(bad(format!(
                    "labels line {}: seconds not contiguous (expected {e}, got {sec})",
                    no + 1
                )));
            }
        }
        expected = Some(sec + 1);
        let flag = match flag.trim() {
            "0" | "false" => false,
            "1" | "true" => true,
            other => return Err(bad(format!("labels line {}: bad flag {other:?}", no + 1))),
        };
        out.push(flag);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::write_trace;

    fn small_attack(kind: AttackKind) -> AttackSpec {
        AttackSpec {
            kind,
            attackers: (3, 5),
            per_attacker_rate: 8.0,
            packet_size: 60,
            start: 20,
            duration: 15,
            max_start_delay: 5,
            target: Ipv4Addr::new(10, 200, 0, 10),
            churn: false,
            spoof_sources: false,
        }
    }

    #[test]
    fn zero_duration_baseline_rejected() {
        let err = gen_baseline(&BaselineProfile::default(), 0, 1).unwrap_err();
        assert!(matches!(err, GenError::InvalidProfile(_)));
    }

    #[test]
    fn same_seed_gives_byte_identical_traces() {
        let profile = BaselineProfile {
            mean_rate: 80.0,
            pair_pool_size: 50,
            ..BaselineProfile::default()
        };
        let serialize = |pkts: &[PacketMeta]| {
            let mut buf = Vec::new();
            write_trace(&mut buf, pkts.iter()).unwrap();
            buf
        };
        let a = serialize(&gen_baseline(&profile, 30, 99).unwrap());
        let b = serialize(&gen_baseline(&profile, 30, 99).unwrap());
        assert_eq!(a, b);
        let c = serialize(&gen_baseline(&profile, 30, 100).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn baseline_volume_tracks_mean_rate() {
        // Statistical check across seeds; burst defaults are rare enough
        // to stay inside the band.
        let profile = BaselineProfile::default();
        for seed in 0..10u64 {
            let pkts = gen_baseline(&profile, 600, seed).unwrap();
            let expected = 500.0 * 600.0;
            let n = pkts.len() as f64;
            assert!(
                (n - expected).abs() <= 0.2 * expected,
                "seed {seed}: {n} packets vs expected {expected}"
            );
        }
    }

    #[test]
    fn baseline_timestamps_non_decreasing() {
        let pkts = gen_baseline(&BaselineProfile::default(), 20, 7).unwrap();
        for w in pkts.windows(2) {
            assert!(w[1].timestamp >= w[0].timestamp);
        }
    }

    #[test]
    fn syn_flood_cumulative_rate_in_table_band() {
        let spec = AttackSpec {
            attackers: (55, 60),
            per_attacker_rate: 20.0,
            start: 0,
            duration: 60,
            max_start_delay: 10,
            ..small_attack(AttackKind::SynFlood)
        };
        let frag = gen_attack(&spec, 5).unwrap();
        // Steady-state seconds (all delays elapsed, before the end).
        let mut per_second = vec![0u64; 60];
        for p in &frag.packets {
            per_second[p.timestamp.floor() as u64 as usize] += 1;
            assert_eq!(p.protocol, Protocol::Tcp);
            assert_eq!(p.tcp_flags, tcp_flags::SYN);
            assert_eq!(p.size, 60);
        }
        for t in 11..60 {
            assert!(
                (1100..=1200).contains(&per_second[t]),
                "second {t}: {} pps",
                per_second[t]
            );
        }
    }

    #[test]
    fn icmp_flood_exact_attacker_count() {
        let spec = AttackSpec {
            kind: AttackKind::IcmpFlood,
            attackers: (33, 33),
            per_attacker_rate: 1000.0,
            packet_size: 70,
            start: 0,
            duration: 5,
            max_start_delay: 0,
            ..small_attack(AttackKind::IcmpFlood)
        };
        let frag = gen_attack(&spec, 3).unwrap();
        assert_eq!(frag.packets.len(), 33 * 1000 * 5);
        assert!(frag.packets.iter().all(|p| p.protocol == Protocol::Icmp));
    }

    #[test]
    fn start_delay_bounds_respected() {
        let spec = AttackSpec {
            max_start_delay: 10,
            start: 100,
            duration: 40,
            ..small_attack(AttackKind::SynFlood)
        };
        for seed in 0..5 {
            let frag = gen_attack(&spec, seed).unwrap();
            let first = frag.packets.first().unwrap().timestamp;
            let last = frag.packets.last().unwrap().timestamp;
            assert!(first >= 100.0);
            assert!(first < 111.0, "onset after the delay bound: {first}");
            assert!(last < 140.0);
        }
    }

    #[test]
    fn compose_with_no_attacks_has_all_false_reference() {
        let base = gen_baseline(
            &BaselineProfile {
                mean_rate: 50.0,
                pair_pool_size: 20,
                ..BaselineProfile::default()
            },
            10,
            1,
        )
        .unwrap();
        let lt = compose_scenario(&base, &[], 1).unwrap();
        assert_eq!(lt.reference.len(), 10);
        assert!(lt.reference.iter().all(|&b| !b));
        assert_eq!(lt.packets.len(), base.len());
    }

    #[test]
    fn overlapping_attacks_rejected() {
        let a = AttackSpec {
            start: 10,
            duration: 20,
            ..small_attack(AttackKind::SynFlood)
        };
        let b = AttackSpec {
            start: 25,
            duration: 10,
            ..small_attack(AttackKind::SynFlood)
        };
        let base = gen_baseline(
            &BaselineProfile {
                mean_rate: 10.0,
                pair_pool_size: 5,
                ..BaselineProfile::default()
            },
            60,
            1,
        )
        .unwrap();
        assert!(matches!(
            compose_scenario(&base, &[a, b], 1),
            Err(GenError::Overlap { first: 0, second: 1 })
        ));
    }

    #[test]
    fn attack_past_baseline_end_rejected() {
        let a = AttackSpec {
            start: 50,
            duration: 20,
            ..small_attack(AttackKind::SynFlood)
        };
        let base = gen_baseline(
            &BaselineProfile {
                mean_rate: 10.0,
                pair_pool_size: 5,
                ..BaselineProfile::default()
            },
            60,
            1,
        )
        .unwrap();
        assert!(matches!(
            compose_scenario(&base, &[a], 1),
            Err(GenError::OutOfRange { .. })
        ));
    }

    #[test]
    fn composition_conserves_packets_and_labels_are_sound() {
        let profile = BaselineProfile {
            mean_rate: 60.0,
            pair_pool_size: 40,
            ..BaselineProfile::default()
        };
        let base = gen_baseline(&profile, 60, 11).unwrap();
        let attack = small_attack(AttackKind::SynFlood);
        let frag = gen_attack(&attack, mix_seed(11, 1)).unwrap();
        let lt = compose_scenario(&base, &[attack], 11).unwrap();
        assert_eq!(lt.packets.len(), base.len() + frag.packets.len());
        for w in lt.packets.windows(2) {
            assert!(w[1].timestamp >= w[0].timestamp);
        }
        // Every attack packet's second is labeled true.
        for p in &frag.packets {
            assert!(lt.reference[p.timestamp.floor() as usize]);
        }
        // No attack seconds outside the window.
        for (t, &flag) in lt.reference.iter().enumerate() {
            if flag {
                assert!((attack.start..attack.end()).contains(&(t as u64)));
            }
        }
    }

    #[test]
    fn attack_train_expands_into_disjoint_segments() {
        let spec = ScenarioSpec {
            seed: 21,
            duration: 3600,
            baseline: BaselineProfile {
                mean_rate: 20.0,
                pair_pool_size: 10,
                burst_probability: 0.0,
                ..BaselineProfile::default()
            },
            attacks: Vec::new(),
            attack_train: Some(AttackTrain {
                count: 21,
                kind: AttackKind::SynFlood,
                first_start: 150,
                duration_range: (60, 120),
                gap_range: (40, 60),
                attackers: (4, 6),
                per_attacker_rate: 5.0,
                packet_size: 60,
                max_start_delay: 10,
                target: Ipv4Addr::new(10, 200, 0, 10),
                churn: true,
            }),
        };
        let lt = generate_scenario(&spec).unwrap();
        assert_eq!(lt.reference.len(), 3600);
        let mut segments = 0;
        let mut prev = false;
        for &b in &lt.reference {
            if b && !prev {
                segments += 1;
            }
            prev = b;
        }
        assert_eq!(segments, 21);
    }

    #[test]
    fn scenario_stream_matches_generate() {
        let spec = ScenarioSpec {
            seed: 5,
            duration: 40,
            baseline: BaselineProfile {
                mean_rate: 30.0,
                pair_pool_size: 12,
                ..BaselineProfile::default()
            },
            attacks: vec![small_attack(AttackKind::IcmpFlood)],
            attack_train: None,
        };
        let lt = generate_scenario(&spec).unwrap();
        let mut packets = Vec::new();
        let mut reference = Vec::new();
        for batch in ScenarioStream::new(&spec).unwrap() {
            let agg = batch.to_aggregate();
            assert_eq!(agg.total_packets as usize, batch.packets.len());
            packets.extend(batch.packets);
            reference.push(batch.is_attack);
        }
        assert_eq!(packets, lt.packets);
        assert_eq!(reference, lt.reference);
    }

    #[test]
    fn labels_roundtrip() {
        let reference = vec![false, true, true, false, true];
        let mut buf = Vec::new();
        write_labels(&mut buf, &reference).unwrap();
        let back = read_labels(buf.as_slice()).unwrap();
        assert_eq!(back, reference);
    }
}
