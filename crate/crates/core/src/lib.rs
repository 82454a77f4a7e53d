//! Sans-IO building blocks for tracking QUIC connections across migrations.
//!
//! Everything in this crate is deterministic and free of sockets, clocks, and
//! threads: packet codecs, the connection tracking table, the tracking-agent
//! state machine, the paired default / connection-aware middleboxes, and a
//! migrating traffic emulator. Time enters only as explicit [`time::Micros`]
//! arguments, and randomness only as injected [`rand_core::RngCore`] handles,
//! so the same inputs always produce the same outputs. The companion `qasm`
//! crate supplies the IO: a virtual-clock simulator, UDP services, CSV
//! output, and the CLI.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod agent;
pub mod cid;
pub mod emulator;
pub mod hash;
pub mod middlebox;
pub mod net;
pub mod proto;
pub mod time;
pub mod tracking;
pub mod wire;

pub use cid::ConnectionId;
pub use net::{Datagram, Endpoint, FiveTuple, Protocol, SixTuple};
pub use time::Micros;
