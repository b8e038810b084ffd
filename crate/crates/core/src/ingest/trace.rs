//! Canonical trace file format.
//!
//! UTF-8 text, one packet per line:
//! `timestamp,src,dst,protocol,tcp_flags_hex,size`, e.g.
//! `12.000000,10.0.0.1,10.0.0.9,TCP,0x02,60`. Lines starting with `#`
//! are comments. Timestamps are decimal seconds and must be
//! non-decreasing.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{IngestError, PacketMeta, Protocol};

/// Parse one non-comment trace line. `line_no` is 1-based and only used
/// for error reporting.
pub fn parse_trace_line(line: &str, line_no: usize) -> Result<PacketMeta, IngestError> {
    let err = |msg: String| IngestError::Parse { line: line_no, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(err(format!("expected 6 fields, got {}", fields.len())));
    }
    let timestamp: f64 = fields[0]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad timestamp {:?}", fields[0])))?;
    if !timestamp.is_finite() || timestamp < 0.0 {
        return Err(err(format!("timestamp out of range: {}", fields[0])));
    }
    let src = fields[1]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad source address {:?}", fields[1])))?;
    let dst = fields[2]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad destination address {:?}", fields[2])))?;
    let protocol = Protocol::parse(fields[3])
        .ok_or_else(|| err(format!("unknown protocol {:?}", fields[3])))?;
    let flags_str = fields[4].trim();
    let flags_str = flags_str
        .strip_prefix("0x")
        .or_else(|| flags_str.strip_prefix("0X"))
        .unwrap_or(flags_str);
    let tcp_flags = u8::from_str_radix(flags_str, 16)
        .map_err(|_| err(format!("bad tcp flags {:?}", fields[4])))?;
    if protocol != Protocol::Tcp && tcp_flags != 0 {
        return Err(err("non-zero tcp flags on non-TCP packet".into()));
    }
    let size: u32 = fields[5]
        .trim()
        .parse()
        .map_err(|_| err(format!("bad size {:?}", fields[5])))?;
    Ok(PacketMeta {
        timestamp,
        src,
        dst,
        protocol,
        tcp_flags,
        size,
    })
}

fn format_line(pkt: &PacketMeta) -> String {
    format!(
        "{:.6},{},{},{},0x{:02x},{}",
        pkt.timestamp,
        pkt.src,
        pkt.dst,
        pkt.protocol.as_str(),
        pkt.tcp_flags,
        pkt.size
    )
}

/// Write packets in the canonical trace format.
pub fn write_trace<'a, W, I>(writer: W, packets: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a PacketMeta>,
{
    let mut w = BufWriter::new(writer);
    writeln!(w, "# timestamp,src,dst,protocol,tcp_flags_hex,size")?;
    for pkt in packets {
        writeln!(w, "{}", format_line(pkt))?;
    }
    w.flush()
}

/// Streaming reader for the canonical trace format. Yields packets in
/// file order and rejects timestamp regressions.
pub struct TraceReader<R> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
    last_ts: f64,
}

impl TraceReader<File> {
    pub fn open<P: AsRef<Path>>(path: P) -> Result<Self, IngestError> {
        Ok(TraceReader::new(File::open(path)?))
    }
}

impl<R: std::io::Read> TraceReader<R> {
    pub fn new(reader: R) -> Self {
        TraceReader {
            lines: BufReader::new(reader).lines(),
            line_no: 0,
            last_ts: f64::NEG_INFINITY,
        }
    }
}

impl<R: std::io::Read> Iterator for TraceReader<R> {
    type Item = Result<PacketMeta, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            return Some(match parse_trace_line(trimmed, self.line_no) {
                Ok(pkt) => {
                    if pkt.timestamp < self.last_ts {
                        Err(IngestError::TimestampRegression { line: self.line_no })
                    } else {
                        self.last_ts = pkt.timestamp;
                        Ok(pkt)
                    }
                }
                Err(e) => Err(e),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::tcp_flags;
    use std::io::Cursor;

    #[test]
    fn parses_example_line() {
        let pkt = parse_trace_line("12.000000,10.0.0.1,10.0.0.9,TCP,0x02,60", 1).unwrap();
        assert_eq!(pkt.timestamp, 12.0);
        assert_eq!(pkt.protocol, Protocol::Tcp);
        assert_eq!(pkt.tcp_flags, tcp_flags::SYN);
        assert_eq!(pkt.size, 60);
        assert_eq!(pkt.src.octets(), [10, 0, 0, 1]);
        assert_eq!(pkt.dst.octets(), [10, 0, 0, 9]);
    }

    #[test]
    fn five_fields_is_parse_error() {
        match parse_trace_line("12.0,10.0.0.1,10.0.0.9,TCP,0x02", 3) {
            Err(IngestError::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_input_yields_empty_stream() {
        let mut rd = TraceReader::new(Cursor::new(""));
        assert!(rd.next().is_none());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let data = "# header\n\n1.0,10.0.0.1,10.0.0.2,UDP,0x00,100\n";
        let pkts: Vec<_> = TraceReader::new(Cursor::new(data))
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(pkts.len(), 1);
        assert_eq!(pkts[0].protocol, Protocol::Udp);
    }

    #[test]
    fn timestamp_regression_is_reported_with_line() {
        let data = "2.0,10.0.0.1,10.0.0.2,UDP,0x00,100\n1.5,10.0.0.1,10.0.0.2,UDP,0x00,100\n";
        let results: Vec<_> = TraceReader::new(Cursor::new(data)).collect();
        assert!(results[0].is_ok());
        match &results[1] {
            Err(IngestError::TimestampRegression { line: 2 }) => {}
            other => panic!("expected regression, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_flags_outside_tcp_rejected() {
        assert!(parse_trace_line("1.0,10.0.0.1,10.0.0.2,UDP,0x02,100", 1).is_err());
    }

    #[test]
    fn ipv6_addresses_rejected() {
        assert!(parse_trace_line("1.0,::1,10.0.0.2,TCP,0x02,60", 1).is_err());
    }

    #[test]
    fn roundtrip_preserves_fields() {
        let pkt = PacketMeta {
            timestamp: 1234.567891,
            src: "192.0.2.7".parse().unwrap(),
            dst: "10.1.2.3".parse().unwrap(),
            protocol: Protocol::Tcp,
            tcp_flags: 0x12,
            size: 1500,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, [&pkt]).unwrap();
        let parsed: Vec<_> = TraceReader::new(Cursor::new(buf))
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(parsed.len(), 1);
        let got = parsed[0];
        assert!((got.timestamp - pkt.timestamp).abs() < 5e-7);
        assert_eq!(got.src, pkt.src);
        assert_eq!(got.dst, pkt.dst);
        assert_eq!(got.protocol, pkt.protocol);
        assert_eq!(got.tcp_flags, pkt.tcp_flags);
        assert_eq!(got.size, pkt.size);
    }
}
