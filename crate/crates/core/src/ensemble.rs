//! Factorisation ensembles, the arithmetic energy `E = pi(x) pi(y) / j^2`,
//! its canonical coordinates and the gauge bound.

use std::fmt::Write as _;
use std::io::BufRead;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::io::sig17;
use crate::par;
use crate::primes::primality::random_prime_with;
use crate::primes::{is_prime, PrimeCounter, PrimeSieve};

/// Meissel–Mertens constant (OEIS A077761), 12 digits.
pub const MEISSEL_MERTENS: f64 = 0.261_497_212_848;

/// `N = x y` with `x <= y` prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Semiprime {
    pub n: BigUint,
    pub x: BigUint,
    pub y: BigUint,
    pub n_bits: u32,
}

impl Semiprime {
    /// Orders the factors and records the bit length of the product.
    pub fn new(a: BigUint, b: BigUint) -> Self {
        let (x, y) = if a <= b { (a, b) } else { (b, a) };
        let n = &x * &y;
        let n_bits = n.bits() as u32;
        Self { n, x, y, n_bits }
    }

    pub fn from_u64(a: u64, b: u64) -> Self {
        Self::new(BigUint::from(a), BigUint::from(b))
    }
}

/// `pi(x) pi(y) / j^2` kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactEnergy {
    pub pi_x: u64,
    pub pi_y: u64,
    pub j: u64,
}

impl ExactEnergy {
    pub fn numerator(&self) -> u128 {
        self.pi_x as u128 * self.pi_y as u128
    }

    pub fn denominator(&self) -> u128 {
        self.j as u128 * self.j as u128
    }

    pub fn value(&self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// `(p, q)` with `q^2 - p^2 = E`.
    pub fn canonical_pq(&self) -> (f64, f64) {
        canonical_pq(self.pi_x, self.pi_y, self.j)
    }
}

/// A semiprime with its ensemble index, energy and canonical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRecord {
    pub semiprime: Semiprime,
    pub j: u64,
    pub energy: f64,
    pub p: f64,
    pub q: f64,
    /// `sqrt(N)`
    pub h: f64,
    /// Present when the record was computed here rather than imported.
    pub exact: Option<ExactEnergy>,
}

fn to_u64(v: &BigUint, what: &str) -> Result<u64> {
    v.to_u64().ok_or_else(|| Error::Budget(format!("{what} = {v} exceeds 64 bits")))
}

/// `j = pi(floor(sqrt N))`.
pub fn ensemble_index(n: &BigUint, counter: &PrimeCounter) -> Result<u64> {
    if *n < BigUint::from(4u32) {
        return Err(Error::InvalidInput(format!("ensemble index needs N >= 4, got {n}")));
    }
    let root = to_u64(&n.sqrt(), "isqrt(N)")?;
    counter.pi_exact_u64(root)
}

/// Exact energy of the pair `(x, y)`.
pub fn exact_energy(x: &BigUint, y: &BigUint, counter: &PrimeCounter) -> Result<ExactEnergy> {
    let j = ensemble_index(&(x * y), counter)?;
    let pi_x = counter.pi_exact_u64(to_u64(x, "x")?)?;
    let pi_y = counter.pi_exact_u64(to_u64(y, "y")?)?;
    Ok(ExactEnergy { pi_x, pi_y, j })
}

/// `E = pi(x) pi(y) / j^2`.
pub fn energy(x: &BigUint, y: &BigUint, counter: &PrimeCounter) -> Result<f64> {
    exact_energy(x, y, counter).map(|e| e.value())
}

/// Full record for a semiprime.
pub fn energy_record(s: &Semiprime, counter: &PrimeCounter) -> Result<EnergyRecord> {
    let exact = exact_energy(&s.x, &s.y, counter)?;
    let (p, q) = exact.canonical_pq();
    Ok(EnergyRecord {
        semiprime: s.clone(),
        j: exact.j,
        energy: exact.value(),
        p,
        q,
        h: s.n.to_f64().unwrap_or(f64::INFINITY).sqrt(),
        exact: Some(exact),
    })
}

/// Records for a batch, in input order.
pub fn energy_records(batch: &[Semiprime], counter: &PrimeCounter) -> Result<Vec<EnergyRecord>> {
    par::try_map_indexed(batch.len(), |i| energy_record(&batch[i], counter))
}

/// Prime number theorem form `1 + (ln(x/h) / ln h)^2`.
pub fn asymptotic_energy(x: f64, h: f64) -> f64 {
    let r = (x / h).ln() / h.ln();
    1.0 + r * r
}

/// `p = (pi_y - pi_x) / 2j`, `q = (pi_x + pi_y) / 2j`.
pub fn canonical_pq(pi_x: u64, pi_y: u64, j: u64) -> (f64, f64) {
    let two_j = 2.0 * j as f64;
    ((pi_y as f64 - pi_x as f64) / two_j, (pi_x as f64 + pi_y as f64) / two_j)
}

/// `H = p^2 - q^2`.
pub fn hamiltonian(p: f64, q: f64) -> f64 {
    (p - q) * (p + q)
}

/// `(q, p) = sqrt(E) (cosh, sinh)(t + t_E)`.
pub fn hyperbolic_trajectory(energy: f64, t_e: f64, t: f64) -> (f64, f64) {
    let r = energy.sqrt();
    let s = t + t_e;
    (r * s.cosh(), r * s.sinh())
}

/// All `x <= y` prime with `p_j^2 <= x y < p_{j+1}^2`.
pub fn enumerate_ensemble(j: u64, sieve: &PrimeSieve) -> Result<Vec<Semiprime>> {
    if j == 0 {
        return Err(Error::InvalidInput("ensemble index starts at 1".into()));
    }
    let primes = sieve.primes();
    let (Some(&pj), Some(&pk)) = (primes.get(j as usize - 1), primes.get(j as usize)) else {
        return Err(Error::Budget(format!("p_{} lies beyond the sieve limit {}", j + 1, sieve.limit())));
    };
    let lo = pj * pj;
    let hi = pk * pk; // exclusive
    if hi / 2 > sieve.limit() {
        return Err(Error::Budget(format!("F({j}) needs primes up to {}, sieve has {}", hi / 2, sieve.limit())));
    }
    let mut out = Vec::new();
    for (ix, &x) in primes.iter().enumerate() {
        if x * x >= hi {
            break;
        }
        for &y in &primes[ix..] {
            let n = x * y;
            if n >= hi {
                break;
            }
            if n >= lo {
                out.push(Semiprime::from_u64(x, y));
            }
        }
    }
    out.sort_by(|a, b| a.n.cmp(&b.n).then(a.x.cmp(&b.x)));
    Ok(out)
}

/// `count` products of two random `n_bits/2`-bit primes with exactly
/// `n_bits` bits. Item `i` depends only on `(seed, i)`.
pub fn sample_extended_ensemble(n_bits: u32, count: usize, seed: u64) -> Result<Vec<Semiprime>> {
    if n_bits < 6 || n_bits % 2 == 1 {
        return Err(Error::InvalidInput(format!("bit size must be even and >= 6, got {n_bits}")));
    }
    let half = n_bits / 2;
    let low = BigUint::from(1u32) << (n_bits - 1);
    par::try_map_indexed(count, |i| {
        let mut rng = par::item_rng(seed, i as u64);
        for _ in 0..RANGE_RETRIES {
            let x = random_prime_with(half, &mut rng)?;
            let y = random_prime_with(half, &mut rng)?;
            let s = Semiprime::new(x, y);
            if s.n > low && s.n_bits == n_bits {
                return Ok(s);
            }
        }
        Err(Error::RetryBudget { bits: n_bits })
    })
}

// a product of two half-width primes lands in range with probability ~ 1/2
const RANGE_RETRIES: usize = 200;

/// `sqrt(N) (ln ln sqrt(N) + B)`.
pub fn cardinality_estimate(n: f64) -> f64 {
    let h = n.sqrt();
    h * (h.ln().ln() + MEISSEL_MERTENS)
}

/// The gauge bound `x_g(k)` and its image `q_g(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeBound {
    pub x_g: f64,
    pub q_g: f64,
}

/// `q_g(k) = (2/3) k (ln h)^(-2g) h^(-1/3) + h^(1/3) (ln h)^(-g)`.
pub fn gauge_q(k: u64, g: f64, h: f64) -> f64 {
    let lh = h.ln();
    (2.0 / 3.0) * k as f64 * lh.powf(-2.0 * g) * h.powf(-1.0 / 3.0) + h.cbrt() * lh.powf(-g)
}

/// `x_g(k) = ceil(h^(2/3) (ln h)^g - k ln h)` together with `q_g(k)`.
pub fn gauge_bound(k: u64, g: f64, h: f64) -> Result<GaugeBound> {
    let lh = h.ln();
    let x_g = (h.powf(2.0 / 3.0) * lh.powf(g) - k as f64 * lh).ceil();
    if !(x_g >= 2.0) {
        return Err(Error::InvalidInput(format!("gauge bound x_g = {x_g} < 2 for k = {k}, g = {g}, h = {h}")));
    }
    Ok(GaugeBound { x_g, q_g: gauge_q(k, g, h) })
}

/// Fraction of records whose energy has a neighbour within `width`.
pub fn degeneracy_ratio(energies: &[f64], width: f64) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let shared = (0..e.len())
        .filter(|&i| (i > 0 && e[i] - e[i - 1] <= width) || (i + 1 < e.len() && e[i + 1] - e[i] <= width))
        .count();
    shared as f64 / e.len() as f64
}

/// Header of the record CSV.
pub const RECORD_HEADER: &str = "N,x,y,j,E,p,q";

/// Writes records as CSV rows (header included).
pub fn records_to_csv(records: &[EnergyRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96);
    out.push_str(RECORD_HEADER);
    out.push('\n');
    for r in records {
        let s = &r.semiprime;
        let _ = writeln!(out, "{},{},{},{},{},{},{}", s.n, s.x, s.y, r.j, sig17(r.energy), sig17(r.p), sig17(r.q));
    }
    out
}

/// Reads record CSV. Rows carrying only `N,x,y` (externally generated moduli)
/// are completed with `counter`; full rows are taken as written. `#` lines
/// and blank lines are skipped.
pub fn records_from_csv<R: BufRead>(reader: R, counter: Option<&PrimeCounter>) -> Result<Vec<EnergyRecord>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let line_no = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| Error::Parse { path: "<records>".into(), line: line_no, message };
        if !seen_header {
            seen_header = true;
            if line.starts_with('N') {
                continue;
            }
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<BigUint> {
            fields[i].parse().map_err(|_| fail(format!("column {} is not an integer: {:?}", i + 1, fields[i])))
        };
        let real = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| fail(format!("column {} is not a real: {:?}", i + 1, fields[i])))
        };
        match fields.len() {
            3 | 7 => {}
            n => return Err(fail(format!("expected 3 or 7 columns, found {n}"))),
        }
        let (n, x, y) = (int(0)?, int(1)?, int(2)?);
        if &x * &y != n {
            return Err(fail(format!("{x} * {y} != {n}")));
        }
        if !is_prime(&x) || !is_prime(&y) {
            return Err(fail("factors must be prime".into()));
        }
        let s = Semiprime::new(x, y);
        let record = if fields.len() == 7 {
            let j: u64 = fields[3].parse().map_err(|_| fail(format!("bad j {:?}", fields[3])))?;
            EnergyRecord {
                h: s.n.to_f64().unwrap_or(f64::INFINITY).sqrt(),
                semiprime: s,
                j,
                energy: real(4)?,
                p: real(5)?,
                q: real(6)?,
                exact: None,
            }
        } else {
            let counter = counter.ok_or_else(|| fail("energy columns missing and no prime counter given".into()))?;
            energy_record(&s, counter)?
        };
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::CountingMode;

    fn counter() -> PrimeCounter {
        PrimeCounter::new(CountingMode::Sieve, 1 << 20, None).unwrap()
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn index_examples() {
        let c = counter();
        assert_eq!(ensemble_index(&big(77), &c).unwrap(), 4);
        assert_eq!(ensemble_index(&big(4), &c).unwrap(), 1);
        assert_eq!(ensemble_index(&big(49), &c).unwrap(), 4);
        assert!(ensemble_index(&big(3), &c).is_err());
    }

    #[test]
    fn energy_examples() {
        let c = counter();
        assert_eq!(energy(&big(7), &big(11), &c).unwrap(), 1.25);
        assert_eq!(energy(&big(13), &big(13), &c).unwrap(), 1.0);
        let e = exact_energy(&big(2), &big(101), &c).unwrap();
        assert_eq!((e.numerator(), e.denominator()), (26, 36));
    }

    #[test]
    fn canonical_examples() {
        let c = counter();
        let e = exact_energy(&big(7), &big(11), &c).unwrap();
        assert_eq!(e.canonical_pq(), (0.125, 1.125));
        assert_eq!(hamiltonian(0.125, 1.125), -1.25);
        assert_eq!(hamiltonian(0.0, 1.0), -1.0);
        assert_eq!(hamiltonian(1.0, 1.0), 0.0);
        let (p, q) = canonical_pq(9, 9, 6);
        assert_eq!((p, q), (0.0, 1.5));
    }

    #[test]
    fn trajectory_examples() {
        assert_eq!(hyperbolic_trajectory(1.0, 0.0, 0.0), (1.0, 0.0));
        assert_eq!(hyperbolic_trajectory(4.0, 0.0, 0.0), (2.0, 0.0));
        let (q, p) = hyperbolic_trajectory(1.25, 0.0, 3.7);
        assert!(((q * q - p * p) / 1.25 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn asymptotic_examples() {
        assert_eq!(asymptotic_energy(5.0, 5.0), 1.0);
        let h = 10f64.exp();
        assert!((asymptotic_energy(h / std::f64::consts::E, h) - 1.01).abs() < 1e-12);
    }

    #[test]
    fn small_ensembles() {
        let sieve = PrimeSieve::new(10_000);
        let n_of = |j| enumerate_ensemble(j, &sieve).unwrap().iter().map(|s| s.n.to_u64().unwrap()).collect::<Vec<_>>();
        assert_eq!(n_of(1), vec![4, 6]);
        assert_eq!(n_of(2), vec![9, 10, 14, 15, 21, 22]);
    }

    #[test]
    fn cardinality_examples() {
        let n = (2.0 * std::f64::consts::E).exp();
        assert!((cardinality_estimate(n) / (n.sqrt() * (1.0 + MEISSEL_MERTENS)) - 1.0).abs() < 1e-12);
        assert!(cardinality_estimate(1e6) < cardinality_estimate(1e7));
    }

    #[test]
    fn gauge_examples() {
        let h = 2f64.powi(20);
        let g0 = gauge_bound(0, 1.3, h).unwrap();
        assert_eq!(g0.x_g, (h.powf(2.0 / 3.0) * h.ln().powf(1.3)).ceil());
        assert_eq!(g0.q_g, h.cbrt() * h.ln().powf(-1.3));
        // independent evaluation at k = 1, g = 1: ln h = 20 ln 2
        let lh = 20.0 * std::f64::consts::LN_2;
        let b = gauge_bound(1, 1.0, h).unwrap();
        assert_eq!(b.x_g, (2f64.powf(40.0 / 3.0) * lh - lh).ceil());
        assert!((b.q_g - (2.0 / (3.0 * lh * lh * 2f64.powf(20.0 / 3.0)) + 2f64.powf(20.0 / 3.0) / lh)).abs() < 1e-12);
        assert!(gauge_q(2, 1.0, h) > gauge_q(1, 1.0, h));
        assert!(gauge_bound(10_000, 0.0, 8.0).is_err());
    }

    #[test]
    fn sampling_examples() {
        let a = sample_extended_ensemble(40, 20, 5).unwrap();
        assert_eq!(a, sample_extended_ensemble(40, 20, 5).unwrap());
        let lo = BigUint::from(1u64 << 39);
        for s in &a {
            assert!(s.n > lo && s.n_bits == 40 && is_prime(&s.x) && is_prime(&s.y) && s.x <= s.y);
        }
        assert!(sample_extended_ensemble(41, 1, 0).is_err());
        assert!(sample_extended_ensemble(4, 1, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = counter();
        let recs = energy_records(&sample_extended_ensemble(30, 5, 1).unwrap(), &c).unwrap();
        let text = records_to_csv(&recs);
        let back = records_from_csv(text.as_bytes(), None).unwrap();
        assert_eq!(back.len(), 5);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.semiprime, b.semiprime);
            assert_eq!((a.j, a.energy, a.p, a.q), (b.j, b.energy, b.p, b.q));
        }
        let short = "# external\nN,x,y\n77,7,11\n";
        let imported = records_from_csv(short.as_bytes(), Some(&c)).unwrap();
        assert_eq!(imported[0].energy, 1.25);
        assert!(records_from_csv("N,x,y\n77,7,13\n".as_bytes(), Some(&c)).is_err());
    }
}
