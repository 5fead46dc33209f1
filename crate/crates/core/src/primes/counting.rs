//! Combinatorial prime counting (Meissel–Lehmer).
//!
//! Lehmer's form of Meissel's identity: with `a = pi(x^1/4)`, `b = pi(x^1/2)`,
//! `c = pi(x^1/3)`,
//!
//! ```text
//! pi(x) = phi(x, a) + (b + a - 2)(b - a + 1)/2
//!         - sum_{a<i<=b} pi(x/p_i)
//!         - sum_{a<i<=c} sum_{i<=j<=b_i} (pi(x/(p_i p_j)) - (j - 1))
//! ```
//!
//! Values of `pi` below the sieve limit come from the table; larger
//! arguments recurse.

use super::sieve::PrimeSieve;

const SMALL_PRIMES: [u64; 7] = [2, 3, 5, 7, 11, 13, 17];
const PRIMORIAL: u64 = 510_510;
const PHI_PRIMORIAL: u64 = 92_160;

/// Meissel–Lehmer counter backed by a sieve of at least `sqrt(x)`.
pub struct MeisselLehmer {
    sieve: PrimeSieve,
    primes: Vec<u64>,
    // phi(n, 7) for 0 <= n < 510510
    phi7: Vec<u32>,
}

impl MeisselLehmer {
    pub fn new(sieve: PrimeSieve) -> Self {
        let primes = sieve.primes();
        let mut phi7 = Vec::with_capacity(PRIMORIAL as usize);
        let mut acc = 0u32;
        for n in 0..PRIMORIAL {
            if n > 0 && SMALL_PRIMES.iter().all(|p| n % p != 0) {
                acc += 1;
            }
            phi7.push(acc);
        }
        debug_assert_eq!(acc as u64, PHI_PRIMORIAL);
        Self { sieve, primes, phi7 }
    }

    pub fn sieve(&self) -> &PrimeSieve {
        &self.sieve
    }

    /// Largest argument this counter can handle: `sieve_limit^2`.
    pub fn max_argument(&self) -> u64 {
        self.sieve.limit().saturating_mul(self.sieve.limit())
    }

    /// Number of primes `<= x`, exactly.
    pub fn pi(&self, x: u64) -> u64 {
        assert!(x <= self.max_argument(), "{x} needs a larger sieve");
        self.pi_inner(x)
    }

    fn pi_inner(&self, x: u64) -> u64 {
        if x <= self.sieve.limit() {
            return self.sieve.pi(x);
        }
        let a = self.sieve.pi(iroot(x, 4)) as usize;
        let b = self.sieve.pi(iroot(x, 2)) as usize;
        let c = self.sieve.pi(iroot(x, 3)) as usize;

        let mut sum = self.phi(x, a) as i128 + ((b + a - 2) as i128 * (b - a + 1) as i128) / 2;
        for i in (a + 1)..=b {
            let p = self.primes[i - 1];
            let w = x / p;
            sum -= self.pi_inner(w) as i128;
            if i <= c {
                let bi = self.sieve.pi(iroot(w, 2)) as usize;
                for j in i..=bi {
                    let q = self.primes[j - 1];
                    sum -= self.pi_inner(w / q) as i128 - (j as i128 - 1);
                }
            }
        }
        sum as u64
    }

    /// Legendre's partial sieve function: integers in `[1, x]` free of the
    /// first `a` primes.
    pub fn phi(&self, x: u64, a: usize) -> u64 {
        if a == 0 {
            return x;
        }
        if a <= SMALL_PRIMES.len() {
            if a == SMALL_PRIMES.len() {
                return (x / PRIMORIAL) * PHI_PRIMORIAL + self.phi7[(x % PRIMORIAL) as usize] as u64;
            }
            // tiny a: direct recursion
            return self.phi(x, a - 1) - self.phi(x / SMALL_PRIMES[a - 1], a - 1);
        }
        let pa = self.primes[a - 1];
        if x < pa {
            return u64::from(x >= 1);
        }
        let next = self.primes[a];
        if x <= self.sieve.limit() && x < next * next {
            // only 1 and the primes in (p_a, x] survive
            return self.sieve.pi(x) - a as u64 + 1;
        }
        // phi(x, a) = phi(x, 7) - sum_{i=8..a} phi(x / p_i, i - 1)
        let mut result = self.phi(x, SMALL_PRIMES.len()) as i64;
        for i in (SMALL_PRIMES.len() + 1)..=a {
            let p = self.primes[i - 1];
            let y = x / p;
            if y < p {
                // phi(y, i-1) = 1 for every remaining i
                result -= (a - i + 1) as i64;
                break;
            }
            result -= self.phi(y, i - 1) as i64;
        }
        result as u64
    }
}

/// Integer k-th root: largest r with r^k <= x.
pub fn iroot(x: u64, k: u32) -> u64 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).powf(1.0 / k as f64) as u64;
    while r > 0 && pow_exceeds(r, k, x) {
        r -= 1;
    }
    while !pow_exceeds(r + 1, k, x) {
        r += 1;
    }
    r
}

fn pow_exceeds(r: u64, k: u32, x: u64) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc *= r as u128;
        if acc > x as u128 {
            return true;
        }
    }
    false
}
