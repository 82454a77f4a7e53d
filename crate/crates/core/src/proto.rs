//! Datagram control protocol between client agents, the tracking agent, and
//! middleboxes.
//!
//! One message per datagram, all integers big-endian:
//!
//! ```text
//! ClientUpdate  0x01  [kind][dcid_len][dcid][odcid_len][odcid][proto=17]
//!                     [src_ip][src_port][dst_ip][dst_port]
//! ConnClose     0x02  [kind][odcid_len][odcid]
//! Query         0x03  [kind][dcid_len][dcid][src_ip][src_port][dst_ip][dst_port]
//! QueryResponse 0x04  [kind][found]; found=1 appends the record body
//! Subscribe     0x05  [kind][dcid_len][dcid][mbox_ip][mbox_port]
//! PushUpdate    0x06  [kind][seq:4]; then the record body
//!
//! record body:  [odcid_len][odcid][n_dcids]{[len][dcid]}*[n_addrs]{[ip][port]}*
//!               [server_ip][server_port][active_dcid_len]
//! ```

use alloc::vec::Vec;
use core::fmt;

use crate::cid::{ConnectionId, MAX_CID_LEN};
use crate::net::{get_endpoint, put_endpoint, Endpoint, FiveTuple, Protocol};
use crate::tracking::TrackingRecord;

const KIND_CLIENT_UPDATE: u8 = 0x01;
const KIND_CONN_CLOSE: u8 = 0x02;
const KIND_QUERY: u8 = 0x03;
const KIND_QUERY_RESPONSE: u8 = 0x04;
const KIND_SUBSCRIBE: u8 = 0x05;
const KIND_PUSH_UPDATE: u8 = 0x06;

/// The record body carried by query responses and push updates.
///
/// Set counts are single bytes, so a record that has accumulated more than
/// 255 DCIDs or addresses is truncated to the most recent 255 of each; the
/// O-DCID travels in its own field and is never lost.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordInfo {
    pub o_dcid: ConnectionId,
    pub dcids: Vec<ConnectionId>,
    pub client_addrs: Vec<Endpoint>,
    pub server: Endpoint,
    pub active_dcid_len: u8,
}

impl RecordInfo {
    pub fn from_record(record: &TrackingRecord) -> Self {
        RecordInfo {
            o_dcid: *record.o_dcid(),
            dcids: tail(record.dcids()),
            client_addrs: tail(record.client_addrs()),
            server: record.server(),
            active_dcid_len: record.dcid_len(),
        }
    }

    /// The connection's current client endpoint: the last address recorded.
    pub fn active_client_addr(&self) -> Option<Endpoint> {
        self.client_addrs.last().copied()
    }
}

fn tail<T: Clone>(items: &[T]) -> Vec<T> {
    let skip = items.len().saturating_sub(255);
    items[skip..].to_vec()
}

/// A control-plane message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WireMessage {
    ClientUpdate {
        dcid: ConnectionId,
        o_dcid: ConnectionId,
        tuple: FiveTuple,
    },
    ConnClose {
        o_dcid: ConnectionId,
    },
    Query {
        dcid: ConnectionId,
        src: Endpoint,
        dst: Endpoint,
    },
    QueryResponse {
        record: Option<RecordInfo>,
    },
    Subscribe {
        dcid: ConnectionId,
        mbox: Endpoint,
    },
    PushUpdate {
        seq: u32,
        record: RecordInfo,
    },
}

/// Control message decode failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtoError {
    Truncated,
    UnknownKind(u8),
    InvalidCidLength(u8),
    /// ClientUpdate with a protocol other than UDP.
    UnsupportedProtocol(u8),
    /// Bytes left over after a complete message.
    TrailingBytes,
}

impl fmt::Display for ProtoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtoError::Truncated => write!(f, "message truncated"),
            ProtoError::UnknownKind(k) => write!(f, "unknown message kind {k:#04x}"),
            ProtoError::InvalidCidLength(n) => write!(f, "CID length {n} exceeds {MAX_CID_LEN}"),
            ProtoError::UnsupportedProtocol(p) => write!(f, "unsupported protocol {p}"),
            ProtoError::TrailingBytes => write!(f, "trailing bytes after message"),
        }
    }
}

impl core::error::Error for ProtoError {}

impl WireMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            WireMessage::ClientUpdate {
                dcid,
                o_dcid,
                tuple,
            } => {
                out.push(KIND_CLIENT_UPDATE);
                put_cid(&mut out, dcid);
                put_cid(&mut out, o_dcid);
                out.push(tuple.protocol.as_u8());
                put_endpoint(&mut out, tuple.src);
                put_endpoint(&mut out, tuple.dst);
            }
            WireMessage::ConnClose { o_dcid } => {
                out.push(KIND_CONN_CLOSE);
                put_cid(&mut out, o_dcid);
            }
            WireMessage::Query { dcid, src, dst } => {
                out.push(KIND_QUERY);
                put_cid(&mut out, dcid);
                put_endpoint(&mut out, *src);
                put_endpoint(&mut out, *dst);
            }
            WireMessage::QueryResponse { record } => {
                out.push(KIND_QUERY_RESPONSE);
                match record {
                    Some(info) => {
                        out.push(1);
                        put_record(&mut out, info);
                    }
                    None => out.push(0),
                }
            }
            WireMessage::Subscribe { dcid, mbox } => {
                out.push(KIND_SUBSCRIBE);
                put_cid(&mut out, dcid);
                put_endpoint(&mut out, *mbox);
            }
            WireMessage::PushUpdate { seq, record } => {
                out.push(KIND_PUSH_UPDATE);
                out.extend_from_slice(&seq.to_be_bytes());
                put_record(&mut out, record);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtoError> {
        let mut r = Reader { bytes, pos: 0 };
        let kind = r.u8()?;
        let msg = match kind {
            KIND_CLIENT_UPDATE => {
                let dcid = r.cid()?;
                let o_dcid = r.cid()?;
                let proto = r.u8()?;
                if proto != Protocol::Udp.as_u8() {
                    return Err(ProtoError::UnsupportedProtocol(proto));
                }
                let src = r.endpoint()?;
                let dst = r.endpoint()?;
                WireMessage::ClientUpdate {
                    dcid,
                    o_dcid,
                    tuple: FiveTuple::udp(src, dst),
                }
            }
            KIND_CONN_CLOSE => WireMessage::ConnClose { o_dcid: r.cid()? },
            KIND_QUERY => WireMessage::Query {
                dcid: r.cid()?,
                src: r.endpoint()?,
                dst: r.endpoint()?,
            },
            KIND_QUERY_RESPONSE => {
                let found = r.u8()?;
                let record = if found == 1 { Some(r.record()?) } else { None };
                WireMessage::QueryResponse { record }
            }
            KIND_SUBSCRIBE => WireMessage::Subscribe {
                dcid: r.cid()?,
                mbox: r.endpoint()?,
            },
            KIND_PUSH_UPDATE => WireMessage::PushUpdate {
                seq: r.u32()?,
                record: r.record()?,
            },
            other => return Err(ProtoError::UnknownKind(other)),
        };
        if r.pos != bytes.len() {
            return Err(ProtoError::TrailingBytes);
        }
        Ok(msg)
    }
}

fn put_cid(out: &mut Vec<u8>, cid: &ConnectionId) {
    out.push(cid.len() as u8);
    out.extend_from_slice(cid.as_bytes());
}

fn put_record(out: &mut Vec<u8>, info: &RecordInfo) {
    put_cid(out, &info.o_dcid);
    out.push(info.dcids.len().min(255) as u8);
    for dcid in info.dcids.iter().take(255) {
        put_cid(out, dcid);
    }
    out.push(info.client_addrs.len().min(255) as u8);
    for addr in info.client_addrs.iter().take(255) {
        put_endpoint(out, *addr);
    }
    put_endpoint(out, info.server);
    out.push(info.active_dcid_len);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], ProtoError> {
        if self.bytes.len() - self.pos < n {
            return Err(ProtoError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ProtoError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ProtoError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn cid(&mut self) -> Result<ConnectionId, ProtoError> {
        let len = self.u8()?;
        if usize::from(len) > MAX_CID_LEN {
            return Err(ProtoError::InvalidCidLength(len));
        }
        let bytes = self.take(usize::from(len))?;
        Ok(ConnectionId::new(bytes).expect("length checked above"))
    }

    fn endpoint(&mut self) -> Result<Endpoint, ProtoError> {
        Ok(get_endpoint(self.take(6)?))
    }

    fn record(&mut self) -> Result<RecordInfo, ProtoError> {
        let o_dcid = self.cid()?;
        let n_dcids = self.u8()?;
        let mut dcids = Vec::with_capacity(usize::from(n_dcids));
        for _ in 0..n_dcids {
            dcids.push(self.cid()?);
        }
        let n_addrs = self.u8()?;
        let mut client_addrs = Vec::with_capacity(usize::from(n_addrs));
        for _ in 0..n_addrs {
            client_addrs.push(self.endpoint()?);
        }
        let server = self.endpoint()?;
        let active_dcid_len = self.u8()?;
        Ok(RecordInfo {
            o_dcid,
            dcids,
            client_addrs,
            server,
            active_dcid_len,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn cid(bytes: &[u8]) -> ConnectionId {
        ConnectionId::new(bytes).unwrap()
    }

    #[test]
    fn client_update_layout() {
        let msg = WireMessage::ClientUpdate {
            dcid: cid(&[0xfa, 0x12, 0xab]),
            o_dcid: cid(&[0xfa, 0x12, 0xab]),
            tuple: FiveTuple::udp(
                Endpoint::v4(10, 0, 0, 45, 10001),
                Endpoint::v4(93, 184, 216, 34, 443),
            ),
        };
        let bytes = msg.encode();
        assert_eq!(
            bytes,
            vec![
                0x01, // kind
                0x03, 0xfa, 0x12, 0xab, // dcid
                0x03, 0xfa, 0x12, 0xab, // o-dcid
                17,   // UDP
                10, 0, 0, 45, 0x27, 0x11, // src 10.0.0.45:10001
                93, 184, 216, 34, 0x01, 0xbb, // dst 93.184.216.34:443
            ]
        );
        assert_eq!(WireMessage::decode(&bytes).unwrap(), msg);
    }

    #[test]
    fn rejects_unknown_kind() {
        assert_eq!(WireMessage::decode(&[0x7f]), Err(ProtoError::UnknownKind(0x7f)));
    }

    #[test]
    fn rejects_empty_and_truncated() {
        assert_eq!(WireMessage::decode(&[]), Err(ProtoError::Truncated));
        assert_eq!(
            WireMessage::decode(&[0x02, 0x05, 0xaa]),
            Err(ProtoError::Truncated)
        );
    }

    #[test]
    fn rejects_non_udp_client_update() {
        let msg = WireMessage::ClientUpdate {
            dcid: cid(&[0x01]),
            o_dcid: cid(&[0x01]),
            tuple: FiveTuple::udp(Endpoint::v4(10, 0, 0, 1, 1), Endpoint::v4(10, 0, 0, 2, 2)),
        };
        let mut bytes = msg.encode();
        bytes[5] = 6; // proto offset: kind + 2-byte dcid + 2-byte odcid
        assert_eq!(WireMessage::decode(&bytes), Err(ProtoError::UnsupportedProtocol(6)));
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = WireMessage::ConnClose { o_dcid: cid(&[0xaa]) }.encode();
        bytes.push(0);
        assert_eq!(WireMessage::decode(&bytes), Err(ProtoError::TrailingBytes));
    }

    #[test]
    fn rejects_oversized_cid() {
        let mut bytes = vec![0x02, 21];
        bytes.extend_from_slice(&[0u8; 21]);
        assert_eq!(WireMessage::decode(&bytes), Err(ProtoError::InvalidCidLength(21)));
    }

    #[test]
    fn record_body_truncates_to_most_recent_255() {
        let many: Vec<Endpoint> = (0..300u16).map(|p| Endpoint::v4(10, 0, 0, 1, p)).collect();
        let info = RecordInfo {
            o_dcid: cid(&[0x01]),
            dcids: vec![cid(&[0x01])],
            client_addrs: many.clone(),
            server: Endpoint::v4(93, 184, 216, 34, 443),
            active_dcid_len: 1,
        };
        let msg = WireMessage::PushUpdate { seq: 9, record: info };
        let decoded = match WireMessage::decode(&msg.encode()).unwrap() {
            WireMessage::PushUpdate { record, .. } => record,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(decoded.client_addrs.len(), 255);
        assert_eq!(decoded.client_addrs[..], many[45..]);
        assert_eq!(decoded.active_client_addr(), Some(many[299]));
    }

    fn arb_cid() -> impl Strategy<Value = ConnectionId> {
        proptest::collection::vec(any::<u8>(), 0..=20).prop_map(|v| ConnectionId::new(&v).unwrap())
    }

    fn arb_endpoint() -> impl Strategy<Value = Endpoint> {
        (any::<[u8; 4]>(), any::<u16>())
            .prop_map(|(ip, port)| Endpoint::v4(ip[0], ip[1], ip[2], ip[3], port))
    }

    fn arb_record() -> impl Strategy<Value = RecordInfo> {
        (
            arb_cid(),
            proptest::collection::vec(arb_cid(), 0..8),
            proptest::collection::vec(arb_endpoint(), 0..8),
            arb_endpoint(),
            0u8..=20,
        )
            .prop_map(|(o_dcid, dcids, client_addrs, server, active_dcid_len)| RecordInfo {
                o_dcid,
                dcids,
                client_addrs,
                server,
                active_dcid_len,
            })
    }

    fn arb_message() -> impl Strategy<Value = WireMessage> {
        prop_oneof![
            (arb_cid(), arb_cid(), arb_endpoint(), arb_endpoint()).prop_map(
                |(dcid, o_dcid, src, dst)| {
                    WireMessage::ClientUpdate {
                        dcid,
                        o_dcid,
                        tuple: FiveTuple::udp(src, dst),
                    }
                }
            ),
            arb_cid().prop_map(|o_dcid| WireMessage::ConnClose { o_dcid }),
            (arb_cid(), arb_endpoint(), arb_endpoint())
                .prop_map(|(dcid, src, dst)| WireMessage::Query { dcid, src, dst }),
            proptest::option::of(arb_record())
                .prop_map(|record| WireMessage::QueryResponse { record }),
            (arb_cid(), arb_endpoint()).prop_map(|(dcid, mbox)| WireMessage::Subscribe {
                dcid,
                mbox
            }),
            (any::<u32>(), arb_record())
                .prop_map(|(seq, record)| WireMessage::PushUpdate { seq, record }),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(msg in arb_message()) {
            prop_assert_eq!(WireMessage::decode(&msg.encode()).unwrap(), msg);
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = WireMessage::decode(&bytes);
        }
    }
}
