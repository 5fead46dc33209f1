//! A configured prime-counting oracle.

use super::counting::MeisselLehmer;
use super::riemann;
use super::sieve::PrimeSieve;
use super::zeros::ZetaZeroTable;
use crate::error::{Error, Result};

/// How `PrimeCounter::pi` answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountingMode {
    /// Table lookup; only `x <= sieve_limit`.
    Sieve,
    /// Table lookup below the limit, Meissel–Lehmer up to `sieve_limit^2`.
    Combinatorial,
    /// `varsigma_T(x) R(x)` with the first `terms` zeros.
    RiemannTruncated { terms: usize },
}

/// Prime counting in one of three modes, backed by a sieve that is shared by
/// all modes for the exact answers.
pub struct PrimeCounter {
    mode: CountingMode,
    exact: MeisselLehmer,
    zeros: Option<ZetaZeroTable>,
}

impl PrimeCounter {
    pub fn new(mode: CountingMode, sieve_limit: u64, zeros: Option<ZetaZeroTable>) -> Result<Self> {
        if let CountingMode::RiemannTruncated { terms } = mode {
            let have = zeros.as_ref().map_or(0, ZetaZeroTable::count);
            if terms > have {
                return Err(Error::InvalidInput(format!(
                    "T = {terms} needs a table with at least {terms} zeros, got {have}"
                )));
            }
        }
        Ok(Self { mode, exact: MeisselLehmer::new(PrimeSieve::new(sieve_limit)), zeros })
    }

    /// Exact counter sized for every argument up to `max_x`.
    pub fn exact_for(max_x: u64) -> Self {
        let limit = super::counting::iroot(max_x, 2).max(1 << 16) + 1;
        Self { mode: CountingMode::Combinatorial, exact: MeisselLehmer::new(PrimeSieve::new(limit)), zeros: None }
    }

    pub fn mode(&self) -> CountingMode {
        self.mode
    }

    pub fn sieve_limit(&self) -> u64 {
        self.exact.sieve().limit()
    }

    pub fn sieve(&self) -> &PrimeSieve {
        self.exact.sieve()
    }

    pub fn zero_table(&self) -> Option<&ZetaZeroTable> {
        self.zeros.as_ref()
    }

    /// Largest argument the exact modes accept.
    pub fn max_exact(&self) -> u64 {
        match self.mode {
            CountingMode::Sieve => self.sieve_limit(),
            _ => self.exact.max_argument(),
        }
    }

    /// Number of primes `<= floor(x)`.
    pub fn pi_exact(&self, x: f64) -> Result<u64> {
        if !(x >= 0.0) {
            return Err(Error::InvalidInput(format!("pi(x) needs x >= 0, got {x}")));
        }
        if x >= 1.8e19 {
            return Err(Error::Budget(format!("pi({x}) exceeds 64-bit range")));
        }
        self.pi_exact_u64(x.floor() as u64)
    }

    pub fn pi_exact_u64(&self, n: u64) -> Result<u64> {
        if n > self.max_exact() {
            return Err(Error::Budget(format!("pi({n}) exceeds configured maximum {}", self.max_exact())));
        }
        Ok(if n <= self.sieve_limit() { self.exact.sieve().pi(n) } else { self.exact.pi(n) })
    }

    /// Answer in the configured mode.
    pub fn pi(&self, x: f64) -> Result<f64> {
        match self.mode {
            CountingMode::RiemannTruncated { terms } => {
                let table = self.zeros.as_ref().expect("checked at construction");
                if x <= 1.0 {
                    return Ok(0.0);
                }
                riemann::pi_approx(x, table, terms)
            }
            _ => self.pi_exact(x).map(|v| v as f64),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let c = PrimeCounter::new(CountingMode::Sieve, 1_000_000, None).unwrap();
        assert_eq!(c.pi_exact(2.0).unwrap(), 1);
        assert_eq!(c.pi_exact(100.0).unwrap(), 25);
        assert_eq!(c.pi_exact(1e6).unwrap(), 78_498);
        assert_eq!(c.pi_exact(7.5).unwrap(), 4);
    }

    #[test]
    fn modes_and_budget() {
        let sieve = PrimeCounter::new(CountingMode::Sieve, 10_000, None).unwrap();
        assert!(matches!(sieve.pi_exact(10_001.0), Err(Error::Budget(_))));
        let comb = PrimeCounter::new(CountingMode::Combinatorial, 10_000, None).unwrap();
        assert_eq!(comb.pi_exact(1e6).unwrap(), 78_498);
        assert!(matches!(comb.pi_exact(1e8 + 1.0), Err(Error::Budget(_))));
        assert!(comb.pi_exact(-1.0).is_err());
    }

    #[test]
    fn truncated_mode_needs_zeros() {
        assert!(PrimeCounter::new(CountingMode::RiemannTruncated { terms: 1 }, 100, None).is_err());
        let table = ZetaZeroTable::new(vec![14.134_725_141_734_693]).unwrap();
        let c = PrimeCounter::new(CountingMode::RiemannTruncated { terms: 0 }, 100, Some(table)).unwrap();
        assert_eq!(c.pi(1e4).unwrap(), riemann::riemann_r(1e4).unwrap());
    }
}
