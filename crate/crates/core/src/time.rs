//! Microsecond timestamps on an abstract monotonic clock.
//!
//! The crate never reads a clock itself; callers pass the current time into
//! every operation that needs one. In simulation this is virtual time, in the
//! loopback services it is wall time since process start.

use core::ops::{Add, AddAssign, Sub};

/// A point in time, in microseconds since an arbitrary epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Micros(pub u64);

impl Micros {
    pub const ZERO: Micros = Micros(0);

    pub fn from_secs(secs: u64) -> Self {
        Micros(secs * 1_000_000)
    }

    pub fn from_millis(ms: u64) -> Self {
        Micros(ms * 1_000)
    }

    /// Converts a non-negative fractional second count, rounding down.
    pub fn from_secs_f64(secs: f64) -> Self {
        debug_assert!(secs >= 0.0);
        Micros((secs * 1_000_000.0) as u64)
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1_000_000.0
    }

    /// Elapsed time since `earlier`, saturating to zero if `earlier` is later.
    pub fn since(self, earlier: Micros) -> Micros {
        Micros(self.0.saturating_sub(earlier.0))
    }
}

impl Add for Micros {
    type Output = Micros;
    fn add(self, rhs: Micros) -> Micros {
        Micros(self.0 + rhs.0)
    }
}

impl AddAssign for Micros {
    fn add_assign(&mut self, rhs: Micros) {
        self.0 += rhs.0;
    }
}

impl Sub for Micros {
    type Output = Micros;
    fn sub(self, rhs: Micros) -> Micros {
        Micros(self.0.saturating_sub(rhs.0))
    }
}

impl core::fmt::Display for Micros {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}us", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_down() {
        assert_eq!(Micros::from_secs(3).as_micros(), 3_000_000);
        assert_eq!(Micros::from_secs_f64(0.0000015).as_micros(), 1);
        assert_eq!(Micros::from_millis(50).as_micros(), 50_000);
    }

    #[test]
    fn since_saturates() {
        assert_eq!(Micros(5).since(Micros(10)), Micros::ZERO);
        assert_eq!(Micros(10).since(Micros(4)), Micros(6));
    }
}
