//! Minimal QUIC packet header framing (RFC 9000 section 17).
//!
//! Only the fields the middleboxes read are framed: header form, version,
//! and the connection IDs. Token, length, and packet-number fields are part
//! of the opaque payload, and nothing here touches encryption. Long headers
//! carry their CID lengths on the wire; short headers do not, so decoding one
//! requires the DCID length from tracking context.

use alloc::vec::Vec;
use core::fmt;

use crate::cid::{ConnectionId, MAX_CID_LEN};

/// Version emitted in synthetic long headers (QUIC v1).
pub const QUIC_VERSION_1: u32 = 0x0000_0001;

const FORM_BIT: u8 = 0x80;
const FIXED_BIT: u8 = 0x40;
const LONG_FIRST_BYTE: u8 = FORM_BIT | FIXED_BIT;
const SHORT_FIRST_BYTE: u8 = FIXED_BIT;

/// A decoded packet header plus its opaque remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuicHeader {
    Long {
        version: u32,
        dcid: ConnectionId,
        scid: ConnectionId,
        payload: Vec<u8>,
    },
    Short {
        dcid: ConnectionId,
        payload: Vec<u8>,
    },
}

impl QuicHeader {
    pub fn dcid(&self) -> &ConnectionId {
        match self {
            QuicHeader::Long { dcid, .. } | QuicHeader::Short { dcid, .. } => dcid,
        }
    }

    pub fn payload(&self) -> &[u8] {
        match self {
            QuicHeader::Long { payload, .. } | QuicHeader::Short { payload, .. } => payload,
        }
    }

    pub fn is_long(&self) -> bool {
        matches!(self, QuicHeader::Long { .. })
    }

    pub fn encode(&self) -> Vec<u8> {
        match self {
            QuicHeader::Long {
                version,
                dcid,
                scid,
                payload,
            } => encode_long_header(*version, dcid, scid, payload),
            QuicHeader::Short { dcid, payload } => encode_short_header(dcid, payload),
        }
    }
}

/// Header decode failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireError {
    /// Packet ended before a declared field.
    TruncatedPacket,
    /// First byte does not have the long form bit set.
    NotLongHeader,
    /// First byte is not a short header (form bit set, or fixed bit clear).
    NotShortHeader,
    /// A CID length field exceeds 20 bytes.
    InvalidCidLength(u8),
}

impl fmt::Display for WireError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WireError::TruncatedPacket => write!(f, "packet truncated"),
            WireError::NotLongHeader => write!(f, "not a long header packet"),
            WireError::NotShortHeader => write!(f, "not a short header packet"),
            WireError::InvalidCidLength(n) => write!(f, "CID length {n} exceeds {MAX_CID_LEN}"),
        }
    }
}

impl core::error::Error for WireError {}

/// Builds a long header packet:
/// `[0xC0][4B version][1B dcid len][dcid][1B scid len][scid][payload]`.
pub fn encode_long_header(
    version: u32,
    dcid: &ConnectionId,
    scid: &ConnectionId,
    payload: &[u8],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(7 + dcid.len() + scid.len() + payload.len());
    out.push(LONG_FIRST_BYTE);
    out.extend_from_slice(&version.to_be_bytes());
    out.push(dcid.len() as u8);
    out.extend_from_slice(dcid.as_bytes());
    out.push(scid.len() as u8);
    out.extend_from_slice(scid.as_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn decode_long_header(packet: &[u8]) -> Result<QuicHeader, WireError> {
    let first = *packet.first().ok_or(WireError::TruncatedPacket)?;
    if first & FORM_BIT == 0 {
        return Err(WireError::NotLongHeader);
    }
    if packet.len() < 6 {
        return Err(WireError::TruncatedPacket);
    }
    let version = u32::from_be_bytes([packet[1], packet[2], packet[3], packet[4]]);
    let (dcid, rest) = take_cid(&packet[5..])?;
    let (scid, payload) = take_cid(rest)?;
    Ok(QuicHeader::Long {
        version,
        dcid,
        scid,
        payload: payload.to_vec(),
    })
}

fn take_cid(bytes: &[u8]) -> Result<(ConnectionId, &[u8]), WireError> {
    let len = *bytes.first().ok_or(WireError::TruncatedPacket)?;
    if usize::from(len) > MAX_CID_LEN {
        return Err(WireError::InvalidCidLength(len));
    }
    let end = 1 + usize::from(len);
    if bytes.len() < end {
        return Err(WireError::TruncatedPacket);
    }
    let cid = ConnectionId::new(&bytes[1..end]).expect("length checked above");
    Ok((cid, &bytes[end..]))
}

/// Builds a short header packet: `[0x40][dcid][payload]`. No length byte is
/// emitted; the receiver must already know the DCID length.
pub fn encode_short_header(dcid: &ConnectionId, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + dcid.len() + payload.len());
    out.push(SHORT_FIRST_BYTE);
    out.extend_from_slice(dcid.as_bytes());
    out.extend_from_slice(payload);
    out
}

/// Decodes a short header using an externally supplied DCID length.
pub fn decode_short_header(packet: &[u8], dcid_len: u8) -> Result<QuicHeader, WireError> {
    if usize::from(dcid_len) > MAX_CID_LEN {
        return Err(WireError::InvalidCidLength(dcid_len));
    }
    let first = *packet.first().ok_or(WireError::TruncatedPacket)?;
    if first & FORM_BIT != 0 || first & FIXED_BIT == 0 {
        return Err(WireError::NotShortHeader);
    }
    let end = 1 + usize::from(dcid_len);
    if packet.len() < end {
        return Err(WireError::TruncatedPacket);
    }
    let dcid = ConnectionId::new(&packet[1..end]).expect("length checked above");
    Ok(QuicHeader::Short {
        dcid,
        payload: packet[end..].to_vec(),
    })
}
