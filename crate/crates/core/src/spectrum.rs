//! Semiclassical line spectrum of the factoring simulator.
//!
//! Lines are labelled by a radial quantum number `k` and a mode `l`. The mode
//! fixes a gauge `g(l)`, the gauge fixes `q_g(k)`, and the level is
//! `E(k, l) = 1 + 4k / (3 (ln h)^(3g) ln q_g(k))` with `h = 2^(n/2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::gauge_q;
use crate::error::{Error, Result};
use crate::io::ser_sig17;

/// Default number of `k` shells.
pub const DEFAULT_K_MAX: u32 = 200;
/// Default cap on the number of `l` modes per shell.
pub const DEFAULT_L_MODES: u32 = 64;

/// One spectral line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    pub k: u32,
    pub l: i64,
    #[serde(rename = "E", serialize_with = "ser_sig17")]
    pub energy: f64,
    #[serde(serialize_with = "ser_sig17")]
    pub weight: f64,
    #[serde(serialize_with = "ser_sig17")]
    pub g: f64,
    /// Arbitrary phase of the amplitude; has no observable effect.
    #[serde(skip)]
    pub phase: f64,
}

/// Line list for one bit size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatorSpectrum {
    pub n_bits: u32,
    #[serde(skip_deserializing, serialize_with = "ser_sig17")]
    pub h: f64,
    #[serde(rename = "Q0", skip_deserializing, serialize_with = "ser_sig17")]
    pub q0: f64,
    pub lines: Vec<SpectrumLine>,
}

/// `h = 2^(n/2)`.
pub fn spectrum_h(n_bits: u32) -> f64 {
    2f64.powf(n_bits as f64 / 2.0)
}

/// `Q0 = h^(1/3) / ln h`.
pub fn q0(h: f64) -> f64 {
    h.cbrt() / h.ln()
}

/// `g(l) = 1 + (1 - 2 pi l / Q0^2) / ln[((ln h^2)/2)^2]`, the denominator
/// being `2 ln ln h`.
pub fn gauge_of_mode(l: f64, h: f64) -> f64 {
    let q = q0(h);
    1.0 + (1.0 - 2.0 * PI * l / (q * q)) / (2.0 * h.ln().ln())
}

/// Left side of the quantisation condition with the mode entering through
/// its phase `2 pi l`.
pub fn quantisation_residual(e: f64, two_pi_l: f64, q_g: f64) -> f64 {
    two_pi_l - q_g * q_g + e * (1.0 + q_g.ln() - 0.5 * e.ln())
}

/// Smallest root in `[1, q_g^2]` of
/// `2 pi l - E ln(sqrt(E)/q_g) - q_g^2 + E = 0`.
pub fn solve_quantisation(l: i64, q_g: f64) -> Result<f64> {
    solve_quantisation_phase(2.0 * PI * l as f64, q_g)
}

/// As [`solve_quantisation`] with a real-valued phase `2 pi l`.
pub fn solve_quantisation_phase(two_pi_l: f64, q_g: f64) -> Result<f64> {
    if !(q_g > 1.0) {
        return Err(Error::InvalidInput(format!("quantisation needs q_g > 1, got {q_g}")));
    }
    let tol = 1e-12 * q_g * q_g;
    let f = |e: f64| quantisation_residual(e, two_pi_l, q_g);
    let (mut lo, mut hi) = (1.0, q_g * q_g);
    let (flo, fhi) = (f(lo), f(hi));
    if flo.abs() <= tol {
        return Ok(lo);
    }
    if fhi.abs() <= tol && flo > 0.0 {
        return Ok(hi);
    }
    // f rises monotonically on the bracket: f' = 1/2 + ln q_g - (ln E)/2 > 0
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoLevel { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Closed-form level `E(k, l) = 1 + 4k / (3 (ln h)^(3 g(l)) ln q_g(k))`.
pub fn energy_level(k: u32, l: f64, h: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let g = gauge_of_mode(l, h);
    let q = gauge_q(k as u64, g, h);
    1.0 + 4.0 * k as f64 / (3.0 * h.ln().powf(3.0 * g) * q.ln())
}

/// Root-solved counterpart of [`energy_level`]: the mode phase is pinned so
/// that `k = 0` is the ground state `E = 1`, then the condition is solved
/// with `q_g(k)`.
pub fn energy_level_root(k: u32, l: f64, h: f64) -> Result<f64> {
    Ok(1.0 + level_offset_root(k, l, h)?)
}

/// `E - 1` for [`energy_level_root`], solved without forming `E`.
///
/// With `q = q0 + d` the pinned condition reads
/// `eps (1 + ln q) - (1 + eps) ln(1 + eps) / 2 = d (2 q0 + d) - ln(1 + d / q0)`,
/// where `d = q_g(k) - q_g(0)` has the closed form `(2/3) k (ln h)^(-2g) h^(-1/3)`.
pub fn level_offset_root(k: u32, l: f64, h: f64) -> Result<f64> {
    let g = gauge_of_mode(l, h);
    let q0 = gauge_q(0, g, h);
    if !(q0 > 1.0) {
        return Err(Error::InvalidInput(format!("quantisation needs q_g > 1, got {q0}")));
    }
    let d = (2.0 / 3.0) * k as f64 * h.ln().powf(-2.0 * g) * h.powf(-1.0 / 3.0);
    let q = q0 + d;
    let rhs = d * (2.0 * q0 + d) - (d / q0).ln_1p();
    if rhs == 0.0 {
        return Ok(0.0);
    }
    let lq = q.ln();
    let f = |e: f64| e * (1.0 + lq) - 0.5 * (1.0 + e) * e.ln_1p() - rhs;
    let df = |e: f64| 0.5 + lq - 0.5 * e.ln_1p();
    let (mut lo, mut hi) = (0.0, q * q - 1.0);
    if f(hi) < 0.0 {
        return Err(Error::NoLevel { lo: 1.0, hi: q * q });
    }
    let mut e = (rhs / (0.5 + lq)).min(hi);
    for _ in 0..200 {
        let v = f(e);
        if v < 0.0 {
            lo = e;
        } else {
            hi = e;
        }
        let mut next = e - v / df(e);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - e).abs() <= 4.0 * f64::EPSILON * next || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        e = next;
    }
    Ok(e)
}

/// `w_k = k^(-1/2) / sum_{k'=1..k_max} k'^(-1/2)`.
pub fn amplitude_weights(k_max: u32) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let raw: Vec<f64> = (1..=k_max).map(|k| 1.0 / (k as f64).sqrt()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Unnormalised asymptotic density `(ln h)^2 / (2 sqrt(E - 1))`.
pub fn p_energy_density(e: f64, h: f64) -> f64 {
    let eps = e - 1.0;
    if eps < 1e-300 {
        return f64::INFINITY;
    }
    0.5 * h.ln().powi(2) / eps.sqrt()
}

/// Range of integer modes keeping `g(l)` in `[0.5, 1.5]`, with `l >= 0`.
pub fn mode_range(h: f64) -> Option<(i64, i64)> {
    let q = q0(h);
    let span = h.ln().ln(); // |1 - 2 pi l / Q0^2| <= ln ln h
    if !(span > 0.0) {
        return None;
    }
    let lo = ((1.0 - span) * q * q / (2.0 * PI)).ceil().max(0.0) as i64;
    let hi = ((1.0 + span) * q * q / (2.0 * PI)).floor() as i64;
    (hi >= lo).then_some((lo, hi))
}

/// Up to `count` evenly spaced integers covering `[lo, hi]`.
fn spread(lo: i64, hi: i64, count: u32) -> Vec<i64> {
    let n = (hi - lo + 1) as u64;
    if n <= count as u64 {
        return (lo..=hi).collect();
    }
    let c = count.max(2) as u64;
    let mut out: Vec<i64> = (0..c).map(|i| lo + ((i * (n - 1) + (c - 1) / 2) / (c - 1)) as i64).collect();
    out.dedup();
    out
}

impl SimulatorSpectrum {
    /// Line list for `n_bits` with shells `k = 0..k_max-1` and at most
    /// `l_modes` modes per shell. Shell `k` carries weight `w_{k+1}`, split
    /// evenly across its modes; all `k = 0` lines sit at `E = 1` and are
    /// merged into one.
    pub fn build(n_bits: u32, k_max: u32, l_modes: u32) -> Result<Self> {
        if n_bits < 6 {
            return Err(Error::InvalidInput(format!("bit size must be >= 6, got {n_bits}")));
        }
        let h = spectrum_h(n_bits);
        let q = q0(h);
        let weights = amplitude_weights(k_max)?;
        let modes = match mode_range(h) {
            Some((lo, hi)) => spread(lo, hi, l_modes.max(1)),
            None => Vec::new(),
        };
        let ground_l = (q * q / (2.0 * PI)).round() as i64;
        let mut lines = vec![SpectrumLine {
            k: 0,
            l: ground_l,
            energy: 1.0,
            weight: weights[0],
            g: gauge_of_mode(ground_l as f64, h),
            phase: 0.0,
        }];
        for k in 1..k_max {
            let shell: Vec<(i64, f64)> = modes
                .iter()
                .filter_map(|&l| {
                    let g = gauge_of_mode(l as f64, h);
                    (gauge_q(k as u64, g, h) > 1.0).then_some((l, g))
                })
                .collect();
            let share = weights[k as usize] / shell.len().max(1) as f64;
            lines.extend(shell.into_iter().map(|(l, g)| SpectrumLine {
                k,
                l,
                energy: energy_level(k, l as f64, h),
                weight: share,
                g,
                phase: 0.0,
            }));
        }
        let mut spec = Self { n_bits, h, q0: q, lines };
        spec.normalise();
        Ok(spec)
    }

    fn normalise(&mut self) {
        let total: f64 = self.lines.iter().map(|l| l.weight).sum();
        if total > 0.0 {
            self.lines.iter_mut().for_each(|l| l.weight /= total);
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.lines.iter().map(|l| l.weight).sum()
    }

    /// Lines by descending weight; ties by ascending energy, then `(k, l)`.
    pub fn by_weight(&self) -> Vec<&SpectrumLine> {
        let mut v: Vec<&SpectrumLine> = self.lines.iter().collect();
        v.sort_by(|a, b| {
            b.weight.total_cmp(&a.weight).then(a.energy.total_cmp(&b.energy)).then((a.k, a.l).cmp(&(b.k, b.l)))
        });
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses the JSON form; `h` and `Q0` are recomputed from `n_bits`.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut spec: Self = serde_json::from_str(text)?;
        spec.h = spectrum_h(spec.n_bits);
        spec.q0 = q0(spec.h);
        if spec.lines.iter().any(|l| !(l.energy >= 1.0) || !(l.weight >= 0.0)) {
            return Err(Error::InvalidInput("spectrum lines need E >= 1 and weight >= 0".into()));
        }
        Ok(spec)
    }
}

/// Rescales every level from `spec.n_bits` to `n_target`:
/// `E' = 1 + (n / n_target)^4 (E - 1)`.
pub fn scale_spectrum(spec: &SimulatorSpectrum, n_target: u32) -> Result<SimulatorSpectrum> {
    if n_target == 0 {
        return Err(Error::InvalidInput("target bit size must be positive".into()));
    }
    let factor = (spec.n_bits as f64 / n_target as f64).powi(4);
    let h = spectrum_h(n_target);
    Ok(SimulatorSpectrum {
        n_bits: n_target,
        h,
        q0: q0(h),
        lines: spec
            .lines
            .iter()
            .map(|l| SpectrumLine { energy: 1.0 + factor * (l.energy - 1.0), ..l.clone() })
            .collect(),
    })
}
