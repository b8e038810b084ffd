//! Per-second aggregation of a packet stream.

use super::{IngestError, IntervalAggregate, PacketMeta};

/// Folds a non-decreasing packet stream into one [`IntervalAggregate`]
/// per elapsed whole second. A packet with timestamp `t` belongs to
/// interval `floor(t)` (half-open `[t, t+1)` buckets). Seconds with no
/// packets still emit an empty aggregate so the series has no gaps.
#[derive(Debug, Default)]
pub struct Aggregator {
    current: Option<IntervalAggregate>,
}

impl Aggregator {
    pub fn new() -> Self {
        Aggregator::default()
    }

    /// Feed one packet. Returns every interval that closed before this
    /// packet's second, including gap-fill empties.
    pub fn push(&mut self, pkt: &PacketMeta) -> Result<Vec<IntervalAggregate>, IngestError> {
        let second = pkt.timestamp.floor();
        if !(second >= 0.0) || second > u64::MAX as f64 {
            return Err(IngestError::AggregateRegression);
        }
        let second = second as u64;
        let mut emitted = Vec::new();
        match &mut self.current {
            None => self.current = Some(IntervalAggregate::empty(second)),
            Some(cur) => {
                if second < cur.interval_start {
                    return Err(IngestError::AggregateRegression);
                }
                if second > cur.interval_start {
                    let done = std::mem::replace(cur, IntervalAggregate::empty(second));
                    let from = done.interval_start + 1;
                    emitted.push(done);
                    for gap in from..second {
                        emitted.push(IntervalAggregate::empty(gap));
                    }
                }
            }
        }
        self.current.as_mut().unwrap().count(pkt);
        Ok(emitted)
    }

    /// Close the stream, emitting the in-progress interval if any.
    pub fn finish(self) -> Option<IntervalAggregate> {
        self.current
    }
}

/// Aggregate a whole in-memory packet slice.
pub fn aggregate_all(packets: &[PacketMeta]) -> Result<Vec<IntervalAggregate>, IngestError> {
    let mut agg = Aggregator::new();
    let mut out = Vec::new();
    for pkt in packets {
        out.extend(agg.push(pkt)?);
    }
    out.extend(agg.finish());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{tcp_flags, PairKey, Protocol};
    use std::net::Ipv4Addr;

    fn pkt(t: f64, src: [u8; 4], dst: [u8; 4]) -> PacketMeta {
        PacketMeta {
            timestamp: t,
            src: Ipv4Addr::from(src),
            dst: Ipv4Addr::from(dst),
            protocol: Protocol::Udp,
            tcp_flags: 0,
            size: 100,
        }
    }

    #[test]
    fn counts_pairs_within_a_second() {
        let a = [10, 0, 0, 1];
        let b = [10, 0, 0, 9];
        let c = [10, 0, 0, 3];
        let packets = vec![
            pkt(7.1, a, b),
            pkt(7.2, a, b),
            pkt(7.5, c, b),
            pkt(7.9, a, b),
        ];
        let aggs = aggregate_all(&packets).unwrap();
        assert_eq!(aggs.len(), 1);
        let agg = &aggs[0];
        assert_eq!(agg.interval_start, 7);
        assert_eq!(agg.total_packets, 4);
        assert_eq!(
            agg.pair_counts[&PairKey::new(a.into(), b.into())],
            3
        );
        assert_eq!(
            agg.pair_counts[&PairKey::new(c.into(), b.into())],
            1
        );
    }

    #[test]
    fn gap_seconds_emit_empty_aggregates() {
        let packets = vec![pkt(7.0, [1, 1, 1, 1], [2, 2, 2, 2]), pkt(9.0, [1, 1, 1, 1], [2, 2, 2, 2])];
        let aggs = aggregate_all(&packets).unwrap();
        let starts: Vec<u64> = aggs.iter().map(|a| a.interval_start).collect();
        assert_eq!(starts, vec![7, 8, 9]);
        assert_eq!(aggs[1].total_packets, 0);
        assert!(aggs[1].pair_counts.is_empty());
    }

    #[test]
    fn syn_ack_counts_toward_total_but_not_syn_count() {
        // Hand-labeled ten-packet stream: 3 bare SYNs, 2 SYN-ACKs, rest
        // data/acks and non-TCP.
        let mk = |t, proto, flags| PacketMeta {
            timestamp: t,
            src: Ipv4Addr::new(10, 0, 0, 1),
            dst: Ipv4Addr::new(10, 0, 0, 2),
            protocol: proto,
            tcp_flags: flags,
            size: 60,
        };
        let packets = vec![
            mk(1.0, Protocol::Tcp, tcp_flags::SYN),
            mk(1.1, Protocol::Tcp, tcp_flags::SYN | tcp_flags::ACK),
            mk(1.2, Protocol::Tcp, tcp_flags::ACK),
            mk(1.3, Protocol::Tcp, tcp_flags::SYN),
            mk(1.4, Protocol::Udp, 0),
            mk(1.5, Protocol::Tcp, tcp_flags::SYN | tcp_flags::ACK),
            mk(1.6, Protocol::Icmp, 0),
            mk(1.7, Protocol::Tcp, tcp_flags::PSH | tcp_flags::ACK),
            mk(1.8, Protocol::Tcp, tcp_flags::SYN),
            mk(1.9, Protocol::Tcp, tcp_flags::FIN | tcp_flags::ACK),
        ];
        let aggs = aggregate_all(&packets).unwrap();
        assert_eq!(aggs[0].total_packets, 10);
        assert_eq!(aggs[0].syn_count, 3);
    }

    #[test]
    fn totals_are_conserved_and_intervals_contiguous() {
        let mut packets = Vec::new();
        let mut t = 0.0;
        for i in 0..257 {
            t += 0.37 + (i % 7) as f64 * 0.21;
            packets.push(pkt(t, [10, 0, 0, (i % 11) as u8], [10, 9, 9, 9]));
        }
        let aggs = aggregate_all(&packets).unwrap();
        let total: u64 = aggs.iter().map(|a| a.total_packets).sum();
        assert_eq!(total, packets.len() as u64);
        for w in aggs.windows(2) {
            assert_eq!(w[1].interval_start, w[0].interval_start + 1);
        }
        for a in &aggs {
            assert_eq!(a.total_packets, a.pair_counts.values().sum::<u64>());
            assert!(a.pair_counts.values().all(|&c| c > 0));
            assert!(a.syn_count <= a.total_packets);
        }
    }

    #[test]
    fn regression_across_intervals_errors() {
        let mut agg = Aggregator::new();
        agg.push(&pkt(5.0, [1, 1, 1, 1], [2, 2, 2, 2])).unwrap();
        assert!(matches!(
            agg.push(&pkt(3.0, [1, 1, 1, 1], [2, 2, 2, 2])),
            Err(IngestError::AggregateRegression)
        ));
    }

    #[test]
    fn empty_stream_emits_nothing() {
        assert!(aggregate_all(&[]).unwrap().is_empty());
    }
}
