//! Riemann's R function and the truncated explicit formula.
//!
//! `R(x) = 1 + sum_k (ln x)^k / (k k! zeta(k+1))` on the real axis (Gram).
//! At the complex points `x^rho`, `rho = 1/2 + i gamma`, we use the Möbius
//! form `R(y) = sum_n mu(n)/n li(y^(1/n))` with `li(x^(rho/n)) = Ei(rho ln x / n)`,
//! and `Ei` from the continued fraction of `E1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::zeros::ZetaZeroTable;
use crate::error::{Error, Result};

const GRAM_BUDGET: usize = 10_000;
const GRAM_TOL: f64 = 1e-12;
const ZETA_TABLE_LEN: usize = 128;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Riemann zeta at an integer argument `s >= 2`.
pub fn zeta_int(s: u32) -> f64 {
    assert!(s >= 2, "zeta pole at s = 1");
    let table = ZETA_CACHE.get_or_init(|| (0..ZETA_TABLE_LEN as u32).map(zeta_em).collect());
    match table.get(s as usize) {
        Some(&v) => v,
        // beyond the table 2^-s < 1e-38
        None => 1.0 + 0.5f64.powi(s as i32),
    }
}

static ZETA_CACHE: OnceLock<Vec<f64>> = OnceLock::new();

// direct sum to N-1 plus Euler–Maclaurin tail from N
fn zeta_em(s: u32) -> f64 {
    if s < 2 {
        return f64::NAN;
    }
    const N: f64 = 16.0;
    // B_2j / (2j)!
    const B_OVER_FACT: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
    ];
    let s = s as f64;
    let direct: f64 = (1..N as u32).map(|n| (n as f64).powf(-s)).sum();
    let mut tail = N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2)
    let mut rising = s;
    let mut power = N.powf(-s - 1.0);
    for (j, b) in B_OVER_FACT.iter().enumerate() {
        tail += b * rising * power;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        power /= N * N;
    }
    direct + tail
}

/// Riemann's smooth prime-counting approximation, by the Gram series.
pub fn riemann_r(x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::InvalidInput(format!("R(x) needs x > 1, got {x}")));
    }
    let l = x.ln();
    let mut sum = 1.0;
    let mut power = 1.0; // l^k / k!
    for k in 1..=GRAM_BUDGET {
        power *= l / k as f64;
        let term = power / (k as f64 * zeta_int(k as u32 + 1));
        sum += term;
        if k as f64 > l && term.abs() < GRAM_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence { terms: GRAM_BUDGET })
}

/// Möbius function for small arguments.
pub fn mobius(mut n: u64) -> i32 {
    let mut sign = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            sign = -sign;
        }
        p += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

/// Exponential integral `E1(z)` for complex `z` off the negative real axis.
pub fn e1(z: Complex64) -> Complex64 {
    if z.norm() < 4.0 {
        e1_series(z)
    } else {
        e1_continued_fraction(z)
    }
}

fn e1_series(z: Complex64) -> Complex64 {
    // E1(z) = -gamma - Log z - sum_k (-z)^k / (k k!)
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..200 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// modified Lentz evaluation of e^z E1(z) = 1/(z+1- 1/(z+3- 4/(z+5- ...)))
fn e1_continued_fraction(z: Complex64) -> Complex64 {
    const TINY: f64 = 1e-300;
    let mut b = z + 1.0;
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..10_000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = (d * an + b).inv();
        c = b + c.inv() * an;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}

/// Exponential integral `Ei(w)` continued analytically to the upper half plane
/// (`Im w > 0`), which is `li(e^w)` along the path from the real axis.
pub fn ei_upper(w: Complex64) -> Complex64 {
    -e1(-w) + Complex64::new(0.0, PI)
}

/// `R(x^rho)` for `rho = 1/2 + i gamma`, `gamma > 0`.
pub fn riemann_r_at_zero(x: f64, gamma: f64) -> Complex64 {
    let l = x.ln();
    let rho = Complex64::new(0.5, gamma);
    let n_max = (l / std::f64::consts::LN_2).floor().max(1.0) as u64;
    (1..=n_max)
        .filter_map(|n| {
            let mu = mobius(n);
            (mu != 0).then(|| ei_upper(rho * (l / n as f64)) * (mu as f64 / n as f64))
        })
        .sum()
}

/// `sum_{l<=T} 2 Re R(x^{rho_l})`, the zero correction to `R(x)`.
pub fn zero_correction(x: f64, table: &ZetaZeroTable, t: usize) -> Result<f64> {
    check_truncation(table, t)?;
    Ok(table.zeros()[..t].iter().map(|&g| 2.0 * riemann_r_at_zero(x, g).re).sum())
}

fn check_truncation(table: &ZetaZeroTable, t: usize) -> Result<()> {
    if t > table.count() {
        return Err(Error::InvalidInput(format!(
            "truncation T = {t} exceeds the {} zeros in the table",
            table.count()
        )));
    }
    Ok(())
}

/// `varsigma_T(x) = 1 - sum_{l<=T} 2 Re R(x^{rho_l}) / R(x)`.
pub fn varsigma(x: f64, table: &ZetaZeroTable, t: usize) -> Result<f64> {
    let r = riemann_r(x)?;
    Ok(1.0 - zero_correction(x, table, t)? / r)
}

/// `varsigma_T(x) R(x)`, the truncated explicit-formula prime count.
pub fn pi_approx(x: f64, table: &ZetaZeroTable, t: usize) -> Result<f64> {
    Ok(riemann_r(x)? - zero_correction(x, table, t)?)
}

/// `pi_approx` at several truncations in a single pass over the zeros.
/// `truncations` must be ascending.
pub fn pi_approx_partials(x: f64, table: &ZetaZeroTable, truncations: &[usize]) -> Result<Vec<f64>> {
    let last = truncations.last().copied().unwrap_or(0);
    check_truncation(table, last)?;
    if truncations.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidInput("truncations must be ascending".into()));
    }
    let r = riemann_r(x)?;
    let mut out = Vec::with_capacity(truncations.len());
    let mut acc = 0.0;
    let mut done = 0;
    for &t in truncations {
        acc += table.zeros()[done..t].iter().map(|&g| 2.0 * riemann_r_at_zero(x, g).re).sum::<f64>();
        done = t;
        out.push(r - acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::sieve::PrimeSieve;

    #[test]
    fn zeta_known_values() {
        assert!((zeta_int(2) - PI * PI / 6.0).abs() < 1e-15);
        assert!((zeta_int(3) - 1.202_056_903_159_594_2).abs() < 1e-15);
        assert!((zeta_int(4) - PI.powi(4) / 90.0).abs() < 1e-15);
        assert!((zeta_int(40) - 1.0).abs() < 1e-11);
        assert!(zeta_int(500) == 1.0);
    }

    #[test]
    fn r_beats_crude_estimate() {
        let sieve = PrimeSieve::new(1_000_000);
        for x in [1e4, 1e5, 1e6] {
            let pi = sieve.pi(x as u64) as f64;
            let r = riemann_r(x).unwrap();
            assert!((r - pi).abs() < (x / x.ln() - pi).abs(), "x = {x}");
        }
    }

    #[test]
    fn r_small_and_monotone() {
        // mpmath riemannr(2)
        let r2 = riemann_r(2.0).unwrap();
        assert!((r2 - 1.541_009_016_187_13).abs() < 1e-12, "{r2}");
        assert!(riemann_r(1e5).unwrap() < riemann_r(1e6).unwrap());
        assert!(riemann_r(1.0).is_err());
        // published value R(10^6) = 78527.399...
        assert!((riemann_r(1e6).unwrap() - 78_527.399_429_127_7).abs() < 1e-6);
    }

    #[test]
    fn mobius_values() {
        let expected = [1, -1, -1, 0, -1, 1, -1, 0, 0, 1, -1, 0];
        for (i, &m) in expected.iter().enumerate() {
            assert_eq!(mobius(i as u64 + 1), m, "mu({})", i + 1);
        }
    }

    #[test]
    fn e1_matches_real_values() {
        // E1(1) = 0.21938393439552..., E1(10) = 4.15696892968532e-6
        assert!((e1(Complex64::new(1.0, 0.0)).re - 0.219_383_934_395_520_3).abs() < 1e-14);
        let v = e1(Complex64::new(10.0, 0.0)).re;
        assert!((v / 4.156_968_929_685_324e-6 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn e1_routes_agree_on_overlap() {
        for z in
            [Complex64::new(3.0, 2.5), Complex64::new(-2.0, 3.5), Complex64::new(0.5, -4.2), Complex64::new(-1.5, -3.0)]
        {
            let a = e1_series(z);
            let b = e1_continued_fraction(z);
            assert!((a - b).norm() < 1e-11 * a.norm(), "z = {z}: {a} vs {b}");
        }
    }

    #[test]
    fn ei_at_first_zero_reference() {
        // mpmath: ei(mpc(0.5, 14.134725141734693) * log(10**4))
        let w = Complex64::new(0.5, 14.134_725_141_734_693) * 1e4f64.ln();
        let v = ei_upper(w);
        let reference = Complex64::new(-0.757_644_231_502_071_7, 3.266_024_820_943_93);
        assert!((v - reference).norm() < 1e-9, "{v}");
    }

    #[test]
    fn r_at_first_zero_reference() {
        // mpmath: sum_n mu(n)/n ei(rho_1 log(10^4) / n)
        let v = riemann_r_at_zero(1e4, 14.134_725_141_734_693);
        let reference = Complex64::new(-0.784_285_393_348_697, -0.108_968_771_240_510_8);
        assert!((v - reference).norm() < 1e-9, "{v}");
    }
}
