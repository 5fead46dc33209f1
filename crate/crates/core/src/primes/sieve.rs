//! Odd-only sieve of Eratosthenes with O(1) prime counting.
//!
//! Bit `i` of the table stands for the odd number `2i + 1`. Alongside the bit
//! words we keep the running count of primes before each word, so `pi(n)` is
//! one table lookup plus a popcount.

/// Primality table and counting function for all integers up to `limit`.
#[derive(Debug, Clone)]
pub struct PrimeSieve {
    limit: u64,
    bits: Vec<u64>,
    // number of odd primes strictly before word w
    before: Vec<u32>,
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Self {
        let limit = limit.max(2);
        let n_odd = limit / 2 + 1; // odd numbers 1, 3, ..., <= limit (+1 slack)
        let n_words = (n_odd as usize).div_ceil(64);
        let mut bits = vec![u64::MAX; n_words];
        // 1 is not prime
        bits[0] &= !1;
        // clear bits past the limit
        let last_bit = (limit - 1) / 2; // index of the largest odd <= limit
        let used = last_bit as usize + 1;
        if !used.is_multiple_of(64) {
            let w = used / 64;
            bits[w] &= (1u64 << (used % 64)) - 1;
        }
        bits[used.div_ceil(64)..n_words].fill(0);

        let mut p = 3u64;
        while p * p <= limit {
            let i = (p / 2) as usize;
            if bits[i / 64] >> (i % 64) & 1 == 1 {
                let mut j = (p * p / 2) as usize;
                while j < used {
                    bits[j / 64] &= !(1u64 << (j % 64));
                    j += p as usize;
                }
            }
            p += 2;
        }

        let mut before = Vec::with_capacity(n_words);
        let mut acc = 0u32;
        for w in &bits {
            before.push(acc);
            acc += w.count_ones();
        }
        Self { limit, bits, before }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn is_prime(&self, n: u64) -> bool {
        assert!(n <= self.limit, "{n} beyond sieve limit {}", self.limit);
        if n < 3 {
            return n == 2;
        }
        if n.is_multiple_of(2) {
            return false;
        }
        let i = (n / 2) as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    /// Number of primes `<= n`. Panics when `n` exceeds the sieve limit.
    pub fn pi(&self, n: u64) -> u64 {
        assert!(n <= self.limit, "{n} beyond sieve limit {}", self.limit);
        if n < 2 {
            return 0;
        }
        // odd numbers <= n are indices 0..=(n-1)/2
        let last = ((n - 1) / 2) as usize;
        let w = last / 64;
        let b = last % 64;
        let mask = if b == 63 { u64::MAX } else { (1u64 << (b + 1)) - 1 };
        1 + self.before[w] as u64 + (self.bits[w] & mask).count_ones() as u64
    }

    /// All primes up to `limit`, ascending.
    pub fn primes(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.pi(self.limit) as usize);
        if self.limit >= 2 {
            out.push(2);
        }
        for (w, &word) in self.bits.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros() as u64;
                out.push(2 * (w as u64 * 64 + b) + 1);
                word &= word - 1;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn matches_trial_division() {
        let s = PrimeSieve::new(5000);
        for n in 0..=5000 {
            assert_eq!(s.is_prime(n), trial(n), "n = {n}");
        }
        let mut count = 0;
        for n in 0..=5000 {
            if trial(n) {
                count += 1;
            }
            assert_eq!(s.pi(n), count, "pi({n})");
        }
    }

    #[test]
    fn known_counts() {
        let s = PrimeSieve::new(1_000_000);
        assert_eq!(s.pi(2), 1);
        assert_eq!(s.pi(100), 25);
        assert_eq!(s.pi(1_000_000), 78_498);
        assert_eq!(s.primes().len(), 78_498);
    }

    #[test]
    fn word_boundaries() {
        for limit in [2u64, 3, 127, 128, 129, 255, 256, 257] {
            let s = PrimeSieve::new(limit);
            let expected = (0..=limit).filter(|&n| trial(n)).count() as u64;
            assert_eq!(s.pi(limit), expected, "limit {limit}");
        }
    }
}
