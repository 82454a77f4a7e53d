//! QUIC connection identifiers.

use core::fmt;

use rand_core::RngCore;

/// Maximum connection ID length in bytes (RFC 9000).
pub const MAX_CID_LEN: usize = 20;

/// An opaque connection ID of 0 to 20 bytes.
///
/// Equality and ordering are byte-exact over the used prefix; the unused tail
/// of the inline buffer is kept zeroed so derived impls stay consistent.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ConnectionId {
    len: u8,
    bytes: [u8; MAX_CID_LEN],
}

/// Attempted to build a connection ID longer than [`MAX_CID_LEN`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvalidCidLength(pub usize);

impl fmt::Display for InvalidCidLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "connection ID length {} exceeds {MAX_CID_LEN}", self.0)
    }
}

impl core::error::Error for InvalidCidLength {}

impl ConnectionId {
    pub fn new(bytes: &[u8]) -> Result<Self, InvalidCidLength> {
        if bytes.len() > MAX_CID_LEN {
            return Err(InvalidCidLength(bytes.len()));
        }
        let mut buf = [0u8; MAX_CID_LEN];
        buf[..bytes.len()].copy_from_slice(bytes);
        Ok(ConnectionId {
            len: bytes.len() as u8,
            bytes: buf,
        })
    }

    pub const fn empty() -> Self {
        ConnectionId {
            len: 0,
            bytes: [0u8; MAX_CID_LEN],
        }
    }

    /// Draws `len` random bytes from `rng`. Panics if `len > 20`; callers
    /// validate lengths at configuration time.
    pub fn random(len: u8, rng: &mut impl RngCore) -> Self {
        assert!(usize::from(len) <= MAX_CID_LEN);
        let mut buf = [0u8; MAX_CID_LEN];
        rng.fill_bytes(&mut buf[..usize::from(len)]);
        ConnectionId { len, bytes: buf }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..usize::from(self.len)]
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl fmt::Display for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "(empty)");
        }
        for b in self.as_bytes() {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::SeedableRng;

    #[test]
    fn rejects_over_limit() {
        assert_eq!(ConnectionId::new(&[0u8; 21]), Err(InvalidCidLength(21)));
        assert!(ConnectionId::new(&[0u8; 20]).is_ok());
    }

    #[test]
    fn byte_exact_equality() {
        let a = ConnectionId::new(&[0xfa, 0x12, 0xab]).unwrap();
        let b = ConnectionId::new(&[0xfa, 0x12, 0xab]).unwrap();
        let c = ConnectionId::new(&[0xfa, 0x12]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.to_string(), "fa12ab");
    }

    #[test]
    fn random_draws_distinct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = ConnectionId::random(8, &mut rng);
        let b = ConnectionId::random(8, &mut rng);
        assert_ne!(a, b);
        assert_eq!(a.len(), 8);
    }
}
