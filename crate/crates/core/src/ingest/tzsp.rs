//! TZSP (TaZmen Sniffer Protocol) datagram decoding.
//!
//! Routers that mirror traffic to an analyzer encapsulate each captured
//! frame in a small UDP datagram: a 4-byte fixed header (version, type,
//! encapsulated protocol), a run of tagged fields terminated by TAG_END,
//! then the raw Ethernet frame. Only version 1, packet types and
//! Ethernet/IPv4 encapsulation are accepted; everything else is reported
//! as malformed so the caller can drop and count the datagram.

use std::net::Ipv4Addr;
use std::time::{SystemTime, UNIX_EPOCH};

use super::{IngestError, PacketMeta, Protocol};

/// Default UDP port routers forward TZSP to.
pub const TZSP_DEFAULT_PORT: u16 = 37008;

const TAG_PADDING: u8 = 0x00;
const TAG_END: u8 = 0x01;
const TYPE_RX_PACKET: u8 = 0;
const TYPE_TX_PACKET: u8 = 1;
const PROTO_ETHERNET: u16 = 0x0001;
const ETHERTYPE_IPV4: u16 = 0x0800;

const IPPROTO_ICMP: u8 = 1;
const IPPROTO_TCP: u8 = 6;
const IPPROTO_UDP: u8 = 17;

/// Decode a TZSP datagram, stamping the packet with the receiver clock.
pub fn decode_tzsp(datagram: &[u8]) -> Result<PacketMeta, IngestError> {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as f64 / 1e6)
        .unwrap_or(0.0);
    decode_tzsp_at(datagram, now)
}

/// Decode a TZSP datagram with an explicit receive timestamp.
pub fn decode_tzsp_at(datagram: &[u8], timestamp: f64) -> Result<PacketMeta, IngestError> {
    let malformed = IngestError::MalformedDatagram;
    // Fixed header plus at least a TAG_END.
    if datagram.len() < 5 {
        return Err(malformed("shorter than TZSP fixed header"));
    }
    if datagram[0] != 1 {
        return Err(malformed("unsupported TZSP version"));
    }
    match datagram[1] {
        TYPE_RX_PACKET | TYPE_TX_PACKET => {}
        _ => return Err(malformed("datagram carries no packet")),
    }
    let encap = u16::from_be_bytes([datagram[2], datagram[3]]);
    if encap != PROTO_ETHERNET {
        return Err(malformed("non-Ethernet encapsulation"));
    }

    // Tagged fields: single-byte PADDING/END tags, otherwise tag + length.
    let mut off = 4usize;
    loop {
        let tag = *datagram.get(off).ok_or(malformed("truncated tag list"))?;
        off += 1;
        match tag {
            TAG_PADDING => continue,
            TAG_END => break,
            _ => {
                let len = *datagram.get(off).ok_or(malformed("truncated tag length"))?;
                off = off
                    .checked_add(1 + len as usize)
                    .ok_or(malformed("tag length overflow"))?;
                if off > datagram.len() {
                    return Err(malformed("tag data past end of datagram"));
                }
            }
        }
    }

    let frame = &datagram[off..];
    parse_ethernet_ipv4(frame, timestamp)
}

fn parse_ethernet_ipv4(frame: &[u8], timestamp: f64) -> Result<PacketMeta, IngestError> {
    let malformed = IngestError::MalformedDatagram;
    if frame.len() < 14 {
        return Err(malformed("truncated Ethernet header"));
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    if ethertype != ETHERTYPE_IPV4 {
        return Err(malformed("not an IPv4 frame"));
    }
    let ip = &frame[14..];
    if ip.is_empty() {
        return Err(malformed("missing IP header"));
    }
    if ip[0] >> 4 != 4 {
        return Err(malformed("IP version is not 4"));
    }
    let ihl = (ip[0] & 0x0f) as usize * 4;
    if ihl < 20 {
        return Err(malformed("IHL below minimum"));
    }
    if ip.len() < ihl {
        return Err(malformed("IP header shorter than IHL claims"));
    }
    let proto_byte = ip[9];
    let src = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let (protocol, tcp_flags) = match proto_byte {
        IPPROTO_TCP => {
            // Flag byte sits at offset 13 of the TCP header.
            let flags = *ip
                .get(ihl + 13)
                .ok_or(malformed("truncated TCP header"))?;
            (Protocol::Tcp, flags)
        }
        IPPROTO_UDP => (Protocol::Udp, 0),
        IPPROTO_ICMP => (Protocol::Icmp, 0),
        _ => (Protocol::Other, 0),
    };
    Ok(PacketMeta {
        timestamp,
        src,
        dst,
        protocol,
        tcp_flags,
        size: frame.len() as u32,
    })
}
