//! The connection tracking table.
//!
//! One record per QUIC connection, keyed by the O-DCID (the DCID the client
//! generated in its initial packet). Each record accumulates every DCID and
//! client address the connection has used, because any of them may appear on
//! a packet after a migration. Secondary indexes answer lookups by DCID and
//! by client address; records are placed into shards by a stable hash of the
//! O-DCID so deployments can split load without re-keying.

use alloc::vec::Vec;
use core::fmt;

use alloc::collections::BTreeMap;

use crate::cid::ConnectionId;
use crate::hash::fnv1a_64;
use crate::net::{Endpoint, FiveTuple, Protocol};
use crate::time::Micros;

/// Idle lifetime of a record with no updates, per UDP NAT convention.
pub const DEFAULT_IDLE_TIMEOUT: Micros = Micros(300 * 1_000_000);

/// Everything known about one QUIC connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackingRecord {
    o_dcid: ConnectionId,
    /// All DCIDs seen for this connection, in first-use order. The O-DCID is
    /// always the first entry.
    dcids: Vec<ConnectionId>,
    /// All client endpoints seen, in first-use order.
    client_addrs: Vec<Endpoint>,
    server: Endpoint,
    /// Byte length of the DCID from the latest update, for short-header
    /// parsing downstream.
    dcid_len: u8,
    closed: bool,
    last_update: Micros,
}

impl TrackingRecord {
    fn new(o_dcid: ConnectionId, now: Micros) -> Self {
        TrackingRecord {
            o_dcid,
            dcids: alloc::vec![o_dcid],
            client_addrs: Vec::new(),
            server: Endpoint::v4(0, 0, 0, 0, 0),
            dcid_len: o_dcid.len() as u8,
            closed: false,
            last_update: now,
        }
    }

    pub fn o_dcid(&self) -> &ConnectionId {
        &self.o_dcid
    }

    pub fn dcids(&self) -> &[ConnectionId] {
        &self.dcids
    }

    pub fn client_addrs(&self) -> &[Endpoint] {
        &self.client_addrs
    }

    pub fn server(&self) -> Endpoint {
        self.server
    }

    pub fn dcid_len(&self) -> u8 {
        self.dcid_len
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn last_update(&self) -> Micros {
        self.last_update
    }
}

/// The DCID is already bound to a different connection. The existing mapping
/// is kept and the update rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcidCollision {
    pub dcid: ConnectionId,
    pub existing_o_dcid: ConnectionId,
    pub attempted_o_dcid: ConnectionId,
}

impl fmt::Display for DcidCollision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DCID {} already maps to {}, rejected update for {}",
            self.dcid, self.existing_o_dcid, self.attempted_o_dcid
        )
    }
}

impl core::error::Error for DcidCollision {}

#[derive(Debug, Default)]
struct Shard {
    records: BTreeMap<ConnectionId, TrackingRecord>,
    by_dcid: BTreeMap<ConnectionId, ConnectionId>,
    by_addr: BTreeMap<Endpoint, ConnectionId>,
}

/// Tracking records with DCID and client-address indexes.
#[derive(Debug)]
pub struct TrackingTable {
    shards: Vec<Shard>,
    idle_timeout: Micros,
}

impl Default for TrackingTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Stable shard assignment for a DCID: FNV-1a over the raw bytes, modulo the
/// shard count.
pub fn shard_for(dcid: &ConnectionId, shard_count: usize) -> usize {
    assert!(shard_count >= 1);
    (fnv1a_64(dcid.as_bytes()) % shard_count as u64) as usize
}

impl TrackingTable {
    pub fn new() -> Self {
        Self::with_shards(1)
    }

    pub fn with_shards(shard_count: usize) -> Self {
        assert!(shard_count >= 1);
        let mut shards = Vec::with_capacity(shard_count);
        shards.resize_with(shard_count, Shard::default);
        TrackingTable {
            shards,
            idle_timeout: DEFAULT_IDLE_TIMEOUT,
        }
    }

    pub fn set_idle_timeout(&mut self, timeout: Micros) {
        self.idle_timeout = timeout;
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    pub fn len(&self) -> usize {
        self.shards.iter().map(|s| s.records.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> impl Iterator<Item = &TrackingRecord> {
        self.shards.iter().flat_map(|s| s.records.values())
    }

    fn resolve_o_dcid(&self, dcid: &ConnectionId) -> Option<ConnectionId> {
        self.shards.iter().find_map(|s| s.by_dcid.get(dcid).copied())
    }

    /// Records an update from the client: `dcid` is now in use for the
    /// connection identified by `o_dcid`, sent from `tuple.src` towards
    /// `tuple.dst`.
    ///
    /// Creates the record on first sight. Rejects the update if either CID is
    /// already bound to a different connection; within one table a DCID maps
    /// to at most one record.
    pub fn upsert(
        &mut self,
        dcid: &ConnectionId,
        o_dcid: &ConnectionId,
        tuple: FiveTuple,
        now: Micros,
    ) -> Result<&TrackingRecord, DcidCollision> {
        debug_assert_eq!(tuple.protocol, Protocol::Udp, "QUIC runs over UDP");
        for candidate in [o_dcid, dcid] {
            if let Some(owner) = self.resolve_o_dcid(candidate) {
                if owner != *o_dcid {
                    return Err(DcidCollision {
                        dcid: *candidate,
                        existing_o_dcid: owner,
                        attempted_o_dcid: *o_dcid,
                    });
                }
            }
        }

        let shard_idx = shard_for(o_dcid, self.shards.len());
        let shard = &mut self.shards[shard_idx];
        let record = shard
            .records
            .entry(*o_dcid)
            .or_insert_with(|| TrackingRecord::new(*o_dcid, now));
        shard.by_dcid.insert(*o_dcid, *o_dcid);
        if !record.dcids.contains(dcid) {
            record.dcids.push(*dcid);
            shard.by_dcid.insert(*dcid, *o_dcid);
        }
        if !record.client_addrs.contains(&tuple.src) {
            record.client_addrs.push(tuple.src);
        }
        shard.by_addr.insert(tuple.src, *o_dcid);
        record.server = tuple.dst;
        record.dcid_len = dcid.len() as u8;
        record.last_update = now;
        Ok(record)
    }

    /// Finds the record whose DCID set contains `dcid`. Absence is a value,
    /// not an error: unknown DCIDs are how new or lost-update flows look.
    pub fn lookup_by_dcid(&self, dcid: &ConnectionId) -> Option<&TrackingRecord> {
        let o_dcid = self.resolve_o_dcid(dcid)?;
        let shard = &self.shards[shard_for(&o_dcid, self.shards.len())];
        shard.records.get(&o_dcid)
    }

    /// Finds the record that has used `addr` as a client endpoint. Serves
    /// return-flow handling, where only addresses identify the connection.
    pub fn lookup_by_client_addr(&self, addr: &Endpoint) -> Option<&TrackingRecord> {
        let o_dcid = self
            .shards
            .iter()
            .find_map(|s| s.by_addr.get(addr).copied())?;
        let shard = &self.shards[shard_for(&o_dcid, self.shards.len())];
        shard.records.get(&o_dcid)
    }

    /// Removes the connection's record and all its index entries. Returns
    /// whether a record existed; a second close of the same connection is a
    /// no-op returning false.
    pub fn close(&mut self, o_dcid: &ConnectionId) -> bool {
        let shard = &mut self.shards[shard_for(o_dcid, self.shards.len())];
        match shard.records.remove(o_dcid) {
            Some(mut record) => {
                record.closed = true;
                for dcid in &record.dcids {
                    shard.by_dcid.remove(dcid);
                }
                for addr in &record.client_addrs {
                    if shard.by_addr.get(addr) == Some(o_dcid) {
                        shard.by_addr.remove(addr);
                    }
                }
                true
            }
            None => false,
        }
    }

    /// Drops records that have not been updated within the idle timeout.
    /// Returns the number evicted.
    pub fn evict_idle(&mut self, now: Micros) -> usize {
        let timeout = self.idle_timeout;
        let stale: Vec<ConnectionId> = self
            .records()
            .filter(|r| now.since(r.last_update) > timeout)
            .map(|r| r.o_dcid)
            .collect();
        for o_dcid in &stale {
            self.close(o_dcid);
        }
        stale.len()
    }

    /// Rebuilds both indexes from the records alone. Test oracle for index
    /// coherence; not used on any hot path.
    #[doc(hidden)]
    pub fn rebuilt_indexes(
        &self,
    ) -> (
        BTreeMap<ConnectionId, ConnectionId>,
        BTreeMap<Endpoint, ConnectionId>,
    ) {
        let mut by_dcid = BTreeMap::new();
        let mut by_addr = BTreeMap::new();
        for record in self.records() {
            for dcid in &record.dcids {
                by_dcid.insert(*dcid, record.o_dcid);
            }
            for addr in &record.client_addrs {
                by_addr.insert(*addr, record.o_dcid);
            }
        }
        (by_dcid, by_addr)
    }

    #[doc(hidden)]
    pub fn live_indexes(
        &self,
    ) -> (
        BTreeMap<ConnectionId, ConnectionId>,
        BTreeMap<Endpoint, ConnectionId>,
    ) {
        let mut by_dcid = BTreeMap::new();
        let mut by_addr = BTreeMap::new();
        for shard in &self.shards {
            by_dcid.extend(shard.by_dcid.iter().map(|(k, v)| (*k, *v)));
            by_addr.extend(shard.by_addr.iter().map(|(k, v)| (*k, *v)));
        }
        (by_dcid, by_addr)
    }
}
