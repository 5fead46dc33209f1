//! Miller–Rabin primality and seeded random prime generation.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Witness set that is deterministic for every n < 3.3 * 10^24.
const WITNESSES_64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Default number of random rounds above 2^64 (error < 4^-40).
pub const DEFAULT_ROUNDS: u32 = 40;

// fixed stream for probabilistic witnesses so results are reproducible
const WITNESS_SEED: u64 = 0x6d69_6c6c_6572_7261;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for machine words.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES_64 {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES_64 {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality of an arbitrary nonnegative integer with the default round count.
pub fn is_prime(n: &BigUint) -> bool {
    is_prime_with_rounds(n, DEFAULT_ROUNDS)
}

/// Exact below 2^64; above, `rounds` random-base Miller–Rabin rounds.
pub fn is_prime_with_rounds(n: &BigUint, rounds: u32) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    for &p in &WITNESSES_64 {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let two = BigUint::from(2u32);
    let mut rng = ChaCha8Rng::seed_from_u64(WITNESS_SEED);
    'round: for _ in 0..rounds {
        let a = random_below(&mut rng, &(&n_minus_1 - &two)) + &two;
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                continue 'round;
            }
        }
        return false;
    }
    true
}

/// A uniformly drawn `bits`-bit prime, fully determined by `seed`.
pub fn random_prime(bits: u32, seed: u64) -> Result<BigUint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_prime_with(bits, &mut rng)
}

/// Retry budget: a `bits`-bit odd candidate is prime with probability about
/// 2 / (bits ln 2), so 100 * bits attempts fail only when something is wrong.
fn retry_budget(bits: u32) -> u32 {
    100 * bits.max(8)
}

/// Draws a `bits`-bit prime from an existing generator.
pub fn random_prime_with<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> Result<BigUint> {
    if bits < 3 {
        return Err(Error::InvalidInput(format!("prime width must be >= 3 bits, got {bits}")));
    }
    if bits <= 64 {
        let top = 1u64 << (bits - 1);
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        for _ in 0..retry_budget(bits) {
            let candidate = (rng.random::<u64>() & mask) | top | 1;
            if is_prime_u64(candidate) {
                return Ok(BigUint::from(candidate));
            }
        }
    } else {
        for _ in 0..retry_budget(bits) {
            let mut candidate = random_bits(rng, bits as u64);
            candidate.set_bit(bits as u64 - 1, true);
            candidate.set_bit(0, true);
            if is_prime(&candidate) {
                return Ok(candidate);
            }
        }
    }
    Err(Error::RetryBudget { bits })
}

fn random_bits<R: Rng + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut bytes);
    let spare = bytes.len() as u64 * 8 - bits;
    if let Some(top) = bytes.last_mut() {
        *top &= 0xff >> spare;
    }
    BigUint::from_bytes_le(&bytes)
}

// uniform in [0, bound) by rejection
fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    loop {
        let r = random_bits(rng, bound.bits());
        if &r < bound {
            return r;
        }
    }
}
