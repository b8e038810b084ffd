//! Packet ingestion: domain types, the canonical trace format, TZSP
//! decoding and per-second aggregation.

use std::collections::HashMap;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod aggregate;
mod trace;
mod tzsp;

pub use aggregate::{aggregate_all, Aggregator};
pub use trace::{parse_trace_line, write_trace, TraceReader};
pub use tzsp::{decode_tzsp, decode_tzsp_at, TZSP_DEFAULT_PORT};

/// TCP flag bits as they appear in the header's flag byte.
pub mod tcp_flags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
}

#[derive(Debug, Error)]
pub enum IngestError {
    /// The datagram cannot be decoded as TZSP-encapsulated Ethernet/IPv4.
    /// The datagram must be dropped and counted, never crash the stream.
    #[error("malformed TZSP datagram: {0}")]
    MalformedDatagram(&'static str),
    #[error("trace parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("timestamp regression at line {line}")]
    TimestampRegression { line: usize },
    #[error("packet timestamp went backwards across intervals")]
    AggregateRegression,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Transport protocol of an observed packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "TCP")]
    Tcp,
    #[serde(rename = "UDP")]
    Udp,
    #[serde(rename = "ICMP")]
    Icmp,
    #[serde(rename = "OTHER")]
    Other,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Icmp => "ICMP",
            Protocol::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<Protocol> {
        match s.trim() {
            s if s.eq_ignore_ascii_case("TCP") => Some(Protocol::Tcp),
            s if s.eq_ignore_ascii_case("UDP") => Some(Protocol::Udp),
            s if s.eq_ignore_ascii_case("ICMP") => Some(Protocol::Icmp),
            s if s.eq_ignore_ascii_case("OTHER") => Some(Protocol::Other),
            _ => None,
        }
    }
}

/// Layer-3/4 header summary of one observed packet.
///
/// `tcp_flags` is zero unless `protocol` is TCP; `size` is bytes on the
/// wire including the Ethernet framing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketMeta {
    /// Seconds since epoch (or trace start) with microsecond resolution.
    pub timestamp: f64,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    pub protocol: Protocol,
    pub tcp_flags: u8,
    pub size: u32,
}

impl PacketMeta {
    /// True for TCP packets with SYN set and ACK clear: connection
    /// attempts originated by the sender, the unit CUSUM-SYN counts.
    pub fn is_bare_syn(&self) -> bool {
        self.protocol == Protocol::Tcp
            && self.tcp_flags & (tcp_flags::SYN | tcp_flags::ACK) == tcp_flags::SYN
    }
}

/// Ordered source/destination address pair; `(a,b)` and `(b,a)` are
/// distinct communication pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairKey {
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
}

impl PairKey {
    pub fn new(src: Ipv4Addr, dst: Ipv4Addr) -> Self {
        PairKey { src, dst }
    }
}

/// Per-second histogram of communication-pair packet counts.
///
/// `pair_counts` never stores zero-valued entries and `total_packets`
/// always equals the sum of its values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalAggregate {
    /// Whole second this aggregate covers: packets with `floor(t)` equal
    /// to this value.
    pub interval_start: u64,
    pub pair_counts: HashMap<PairKey, u64>,
    pub total_packets: u64,
    /// TCP packets with SYN=1 and ACK=0.
    pub syn_count: u64,
}

impl IntervalAggregate {
    /// Empty aggregate for a second in which nothing was observed.
    pub fn empty(interval_start: u64) -> Self {
        IntervalAggregate {
            interval_start,
            ..Default::default()
        }
    }

    /// Aggregate a batch of packets known to share the same whole second.
    pub fn from_batch(interval_start: u64, packets: &[PacketMeta]) -> Self {
        let mut agg = IntervalAggregate::empty(interval_start);
        for pkt in packets {
            agg.count(pkt);
        }
        agg
    }

    pub(crate) fn count(&mut self, pkt: &PacketMeta) {
        *self
            .pair_counts
            .entry(PairKey::new(pkt.src, pkt.dst))
            .or_insert(0) += 1;
        self.total_packets += 1;
        if pkt.is_bare_syn() {
            self.syn_count += 1;
        }
    }

    /// Pair counts in a deterministic order, independent of hash state.
    /// Downstream float summations stay reproducible across runs.
    pub fn sorted_counts(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.pair_counts.values().copied().collect();
        v.sort_unstable();
        v
    }
}
