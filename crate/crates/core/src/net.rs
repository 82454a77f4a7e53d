//! Flow identifiers and the simulated datagram framing.

use alloc::vec::Vec;
use core::fmt;
use core::net::Ipv4Addr;

use crate::cid::ConnectionId;

/// L4 protocols the middleboxes translate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Tcp = 6,
    Udp = 17,
}

impl Protocol {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            6 => Some(Protocol::Tcp),
            17 => Some(Protocol::Udp),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

/// An IPv4 address and UDP/TCP port pair.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub ip: Ipv4Addr,
    pub port: u16,
}

impl Endpoint {
    pub const fn new(ip: Ipv4Addr, port: u16) -> Self {
        Endpoint { ip, port }
    }

    pub fn v4(a: u8, b: u8, c: u8, d: u8, port: u16) -> Self {
        Endpoint {
            ip: Ipv4Addr::new(a, b, c, d),
            port,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.ip, self.port)
    }
}

impl fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Classic flow key: protocol plus source and destination endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiveTuple {
    pub protocol: Protocol,
    pub src: Endpoint,
    pub dst: Endpoint,
}

impl FiveTuple {
    pub fn udp(src: Endpoint, dst: Endpoint) -> Self {
        FiveTuple {
            protocol: Protocol::Udp,
            src,
            dst,
        }
    }

    /// The same flow as seen from the opposite direction.
    pub fn reversed(self) -> Self {
        FiveTuple {
            protocol: self.protocol,
            src: self.dst,
            dst: self.src,
        }
    }
}

/// Five-tuple extended with the packet's destination connection ID.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SixTuple {
    pub dcid: ConnectionId,
    pub five_tuple: FiveTuple,
}

/// The flow key was not UDP; QUIC only runs over UDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NotUdp;

impl fmt::Display for NotUdp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "six-tuple requires a UDP five-tuple")
    }
}

impl core::error::Error for NotUdp {}

impl SixTuple {
    pub fn new(dcid: ConnectionId, five_tuple: FiveTuple) -> Result<Self, NotUdp> {
        if five_tuple.protocol != Protocol::Udp {
            return Err(NotUdp);
        }
        Ok(SixTuple { dcid, five_tuple })
    }
}

/// A simulated L3/L4 datagram: the flow tuple plus an opaque payload
/// (QUIC bytes for UDP traffic).
///
/// The byte encoding carries the tuple explicitly so pipelines can run over
/// real sockets without the host addressing leaking into the scenario:
/// `[1B protocol][4B src ip][2B src port][4B dst ip][2B dst port][payload]`,
/// integers big-endian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram {
    pub tuple: FiveTuple,
    pub payload: Vec<u8>,
}

pub const DATAGRAM_HEADER_LEN: usize = 13;

/// Datagram decode failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatagramError {
    Truncated,
    UnsupportedProtocol(u8),
}

impl fmt::Display for DatagramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatagramError::Truncated => write!(f, "datagram shorter than its header"),
            DatagramError::UnsupportedProtocol(p) => write!(f, "unsupported protocol {p}"),
        }
    }
}

impl core::error::Error for DatagramError {}

impl Datagram {
    pub fn new(tuple: FiveTuple, payload: Vec<u8>) -> Self {
        Datagram { tuple, payload }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(DATAGRAM_HEADER_LEN + self.payload.len());
        out.push(self.tuple.protocol.as_u8());
        put_endpoint(&mut out, self.tuple.src);
        put_endpoint(&mut out, self.tuple.dst);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DatagramError> {
        if bytes.len() < DATAGRAM_HEADER_LEN {
            return Err(DatagramError::Truncated);
        }
        let protocol =
            Protocol::from_u8(bytes[0]).ok_or(DatagramError::UnsupportedProtocol(bytes[0]))?;
        let src = get_endpoint(&bytes[1..7]);
        let dst = get_endpoint(&bytes[7..13]);
        Ok(Datagram {
            tuple: FiveTuple { protocol, src, dst },
            payload: bytes[DATAGRAM_HEADER_LEN..].to_vec(),
        })
    }
}

pub(crate) fn put_endpoint(out: &mut Vec<u8>, ep: Endpoint) {
    out.extend_from_slice(&ep.ip.octets());
    out.extend_from_slice(&ep.port.to_be_bytes());
}

pub(crate) fn get_endpoint(bytes: &[u8]) -> Endpoint {
    debug_assert!(bytes.len() >= 6);
    Endpoint {
        ip: Ipv4Addr::new(bytes[0], bytes[1], bytes[2], bytes[3]),
        port: u16::from_be_bytes([bytes[4], bytes[5]]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datagram_round_trip() {
        let d = Datagram::new(
            FiveTuple::udp(Endpoint::v4(10, 0, 0, 45, 10001), Endpoint::v4(93, 184, 216, 34, 443)),
            alloc::vec![1, 2, 3],
        );
        assert_eq!(Datagram::decode(&d.encode()).unwrap(), d);
    }

    #[test]
    fn datagram_rejects_bad_protocol() {
        let mut bytes = Datagram::new(
            FiveTuple::udp(Endpoint::v4(10, 0, 0, 1, 1), Endpoint::v4(10, 0, 0, 2, 2)),
            alloc::vec![],
        )
        .encode();
        bytes[0] = 1; // ICMP
        assert_eq!(
            Datagram::decode(&bytes),
            Err(DatagramError::UnsupportedProtocol(1))
        );
    }

    #[test]
    fn six_tuple_requires_udp() {
        let five = FiveTuple {
            protocol: Protocol::Tcp,
            src: Endpoint::v4(10, 0, 0, 21, 15000),
            dst: Endpoint::v4(65, 12, 81, 14, 42005),
        };
        assert_eq!(SixTuple::new(ConnectionId::empty(), five), Err(NotUdp));
    }
}
