//! Level-spacing statistics of the energy spectrum.
//!
//! Energies are mapped to the k-index, sorted, and unfolded with a randomised
//! stencil over a sliding window. The resulting spacings are compared with the
//! Wigner surmises (GUE, GOE) and the Poisson law.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::ensemble::EnergyRecord;
use crate::error::{Error, Result};
use crate::io::{ser_sig17, ser_sig17_vec};
use crate::par;

/// `k = (E - 1) (ln 2^(n/2))^4 / 4`.
pub fn k_index(energy: f64, n_bits: u32) -> f64 {
    let lh = n_bits as f64 / 2.0 * std::f64::consts::LN_2;
    0.25 * (energy - 1.0) * lh.powi(4)
}

/// Ascending k-index values.
#[derive(Debug, Clone, PartialEq)]
pub struct KIndexSeries {
    pub values: Vec<f64>,
    pub n_bits: u32,
    pub source_count: usize,
}

impl KIndexSeries {
    pub fn from_energies(energies: &[f64], n_bits: u32) -> Self {
        let mut values: Vec<f64> = energies.iter().map(|&e| k_index(e, n_bits)).collect();
        values.sort_by(f64::total_cmp);
        Self { source_count: values.len(), values, n_bits }
    }

    /// Wraps already-sorted values.
    pub fn from_sorted(values: Vec<f64>, n_bits: u32) -> Result<Self> {
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("series must be ascending".into()));
        }
        Ok(Self { source_count: values.len(), values, n_bits })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Sorted k-index series of a record batch.
pub fn build_series(records: &[EnergyRecord], n_bits: u32) -> KIndexSeries {
    let energies: Vec<f64> = records.iter().map(|r| r.energy).collect();
    KIndexSeries::from_energies(&energies, n_bits)
}

fn centred(series: &KIndexSeries, i: usize, half: usize) -> Result<(f64, f64)> {
    if i < half || i + half >= series.len() {
        return Err(Error::InvalidInput(format!(
            "index {i} with half-width {half} falls outside a series of length {}",
            series.len()
        )));
    }
    Ok((series.values[i - half], series.values[i + half]))
}

/// `(k_{i+ceil(l/2)} - k_{i-ceil(l/2)}) / l`.
pub fn local_difference(series: &KIndexSeries, i: usize, ell: usize) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidInput("stencil width must be >= 1".into()));
    }
    let (a, b) = centred(series, i, ell.div_ceil(2))?;
    Ok((b - a) / ell as f64)
}

/// `(k_{i+ceil(L/2)} - k_{i-ceil(L/2)}) / L`.
pub fn window_mean(series: &KIndexSeries, i: usize, window: usize) -> Result<f64> {
    local_difference(series, i, window)
}

/// Parameters of the unfolding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UnfoldConfig {
    #[serde(rename = "L")]
    pub window: usize,
    pub ell_min: usize,
    pub ell_max: usize,
    pub seed: u64,
}

impl Default for UnfoldConfig {
    fn default() -> Self {
        Self { window: 1000, ell_min: 1, ell_max: 6, seed: 0 }
    }
}

/// Unfolded spacings with the draws that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    pub s: Vec<f64>,
    /// Series index of each spacing.
    pub index: Vec<usize>,
    /// Stencil width drawn for each spacing.
    pub ell: Vec<usize>,
    pub config: UnfoldConfig,
}

impl SpacingSample {
    /// Sample with no provenance, e.g. synthetic draws.
    pub fn from_values(s: Vec<f64>) -> Self {
        let n = s.len();
        Self { s, index: (0..n).collect(), ell: vec![0; n], config: UnfoldConfig::default() }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.s.iter().sum::<f64>() / self.s.len() as f64
    }

    /// CSV with header `i,ell,s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,ell,s\n");
        for ((i, l), s) in self.index.iter().zip(&self.ell).zip(&self.s) {
            out.push_str(&format!("{i},{l},{}\n", crate::io::sig17(*s)));
        }
        out
    }

    /// Reads `i,ell,s` CSV, skipping `#` lines and the header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let (mut s, mut index, mut ell) = (Vec::new(), Vec::new(), Vec::new());
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("i,") {
                continue;
            }
            let fail = |m: &str| Error::Parse { path: "<spacings>".into(), line: no + 1, message: m.to_string() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(fail("expected 3 columns i,ell,s"));
            }
            index.push(f[0].trim().parse().map_err(|_| fail("bad index"))?);
            ell.push(f[1].trim().parse().map_err(|_| fail("bad ell"))?);
            let v: f64 = f[2].trim().parse().map_err(|_| fail("bad spacing"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(fail("spacings must be finite and non-negative"));
            }
            s.push(v);
        }
        Ok(Self { s, index, ell, config: UnfoldConfig::default() })
    }
}

/// `s_i = dk_i(l) / <dk_i>_L` for every index at least `ceil(L/2)` from
/// either end, with `l` uniform on `ell_min..=ell_max` drawn from the
/// index-derived seed. Indices whose window mean vanishes are skipped.
pub fn unfold(series: &KIndexSeries, cfg: &UnfoldConfig) -> Result<SpacingSample> {
    if cfg.window == 0 || cfg.ell_min == 0 || cfg.ell_min > cfg.ell_max {
        return Err(Error::InvalidInput(format!(
            "need L >= 1 and 1 <= ell_min <= ell_max, got L = {}, ell = {}..={}",
            cfg.window, cfg.ell_min, cfg.ell_max
        )));
    }
    if cfg.ell_max.div_ceil(2) > cfg.window.div_ceil(2) {
        return Err(Error::InvalidInput("stencil wider than the window".into()));
    }
    let margin = cfg.window.div_ceil(2);
    if series.len() <= 2 * cfg.window {
        return Err(Error::InvalidInput(format!(
            "series of length {} is too short for window L = {} (need more than {})",
            series.len(),
            cfg.window,
            2 * cfg.window
        )));
    }
    let count = series.len() - 2 * margin;
    let drawn = par::map_indexed(count, |off| {
        let i = margin + off;
        let ell = par::item_rng(cfg.seed, i as u64).random_range(cfg.ell_min..=cfg.ell_max);
        let mean = window_mean(series, i, cfg.window).expect("inside margins");
        let diff = local_difference(series, i, ell).expect("inside margins");
        (mean > 0.0).then(|| (i, ell, diff / mean))
    });
    let mut sample = SpacingSample { s: Vec::with_capacity(count), index: Vec::new(), ell: Vec::new(), config: *cfg };
    for (i, ell, s) in drawn.into_iter().flatten() {
        sample.index.push(i);
        sample.ell.push(ell);
        sample.s.push(s);
    }
    Ok(sample)
}

/// Expected mean of `2 ceil(l/2) / l` for `l` uniform on the range: the
/// mean spacing of an unfolded series with i.i.d. gaps.
pub fn stencil_mean(ell_min: usize, ell_max: usize) -> f64 {
    let n = (ell_max - ell_min + 1) as f64;
    (ell_min..=ell_max).map(|l| 2.0 * l.div_ceil(2) as f64 / l as f64).sum::<f64>() / n
}

/// Reference spacing laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Model {
    #[serde(rename = "GUE")]
    Gue,
    #[serde(rename = "GOE")]
    Goe,
    #[serde(rename = "Poisson")]
    Poisson,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::Gue, Model::Goe, Model::Poisson];

    pub fn pdf(self, s: f64) -> f64 {
        match self {
            Model::Gue => gue_pdf(s),
            Model::Goe => goe_pdf(s),
            Model::Poisson => poisson_pdf(s),
        }
    }

    pub fn cdf(self, s: f64) -> f64 {
        match self {
            Model::Gue => gue_cdf(s),
            Model::Goe => goe_cdf(s),
            Model::Poisson => poisson_cdf(s),
        }
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            Model::Gue => gue_quantile(u),
            Model::Goe => (-4.0 * (-u).ln_1p() / PI).sqrt(),
            Model::Poisson => -(-u).ln_1p(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Gue => "GUE",
            Model::Goe => "GOE",
            Model::Poisson => "Poisson",
        }
    }
}

const GUE_A: f64 = 4.0 / PI;

/// `(32 / pi^2) s^2 exp(-4 s^2 / pi)`.
pub fn gue_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    32.0 / (PI * PI) * s * s * (-GUE_A * s * s).exp()
}

/// `(pi / 2) s exp(-pi s^2 / 4)`.
pub fn goe_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn poisson_pdf(s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    (-s).exp()
}

/// Integral of [`gue_pdf`] from 0: with `a = 4/pi`,
/// `(32/pi^2) [sqrt(pi) erf(sqrt(a) s) / (4 a^(3/2)) - s exp(-a s^2) / (2a)]`.
pub fn gue_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let a = GUE_A;
    let v = 32.0 / (PI * PI)
        * (PI.sqrt() * libm::erf(a.sqrt() * s) / (4.0 * a.powf(1.5)) - s * (-a * s * s).exp() / (2.0 * a));
    v.clamp(0.0, 1.0)
}

pub fn goe_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    -(-0.25 * PI * s * s).exp_m1()
}

pub fn poisson_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    -(-s).exp_m1()
}

fn gue_quantile(u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 8.0f64);
    while hi - lo > 1e-15 * hi {
        let mid = 0.5 * (lo + hi);
        if gue_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `count` spacings from `model`, item `i` seeded by `(seed, i)`.
pub fn synthetic_sample(model: Model, count: usize, seed: u64) -> SpacingSample {
    SpacingSample::from_values(par::map_indexed(count, |i| model.sample(&mut par::item_rng(seed, i as u64))))
}

/// Goodness of fit of one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFit {
    pub model: Model,
    #[serde(serialize_with = "ser_sig17")]
    pub log_likelihood: f64,
    #[serde(serialize_with = "ser_sig17")]
    pub ks: f64,
    #[serde(serialize_with = "ser_sig17")]
    pub chi_squared: f64,
}

/// Equal-width histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    #[serde(serialize_with = "ser_sig17_vec")]
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples outside `[edges[0], edges[last])`.
    pub outside: u64,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|b| lo + b as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        let mut outside = 0;
        for &v in values {
            let b = ((v - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            } else {
                outside += 1;
            }
        }
        Self { edges, counts, outside }
    }

    /// Density-normalised heights (area over all samples).
    pub fn densities(&self) -> Vec<f64> {
        let total = (self.counts.iter().sum::<u64>() + self.outside) as f64;
        self.counts.iter().zip(self.edges.windows(2)).map(|(&c, e)| c as f64 / (total * (e[1] - e[0]))).collect()
    }

    /// CSV `bin_lo,bin_hi,count,density,gue,goe,poisson`.
    pub fn to_csv(&self) -> String {
        use crate::io::sig17;
        let mut out = String::from("bin_lo,bin_hi,count,density,gue,goe,poisson\n");
        for ((e, &c), d) in self.edges.windows(2).zip(&self.counts).zip(self.densities()) {
            let mid = 0.5 * (e[0] + e[1]);
            out.push_str(&format!(
                "{},{},{c},{},{},{},{}\n",
                sig17(e[0]),
                sig17(e[1]),
                sig17(d),
                sig17(gue_pdf(mid)),
                sig17(goe_pdf(mid)),
                sig17(poisson_pdf(mid))
            ));
        }
        out
    }
}

/// Fit summary across the three laws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub count: usize,
    #[serde(serialize_with = "ser_sig17")]
    pub mean: f64,
    pub fits: Vec<ModelFit>,
    pub best_model: Model,
    pub histogram: Histogram,
}

impl FitReport {
    pub fn fit(&self, model: Model) -> &ModelFit {
        self.fits.iter().find(|f| f.model == model).expect("all models fitted")
    }
}

/// Histogram range used by [`fit_spacings`].
pub const HIST_RANGE: (f64, f64) = (0.0, 4.0);

/// Log-likelihood, KS distance and binned chi-squared under each law; the
/// best model maximises the likelihood, ties going to Poisson.
pub fn fit_spacings(sample: &SpacingSample, bins: usize) -> Result<FitReport> {
    fit_spacings_in(sample, bins, HIST_RANGE)
}

pub fn fit_spacings_in(sample: &SpacingSample, bins: usize, range: (f64, f64)) -> Result<FitReport> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("cannot fit an empty sample".into()));
    }
    if bins == 0 || !(range.1 > range.0) {
        return Err(Error::InvalidInput("need at least one bin over a non-empty range".into()));
    }
    let mut sorted = sample.s.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let histogram = Histogram::new(&sorted, range.0, range.1, bins);
    let fits: Vec<ModelFit> = Model::ALL
        .iter()
        .map(|&model| {
            let log_likelihood = sorted.iter().map(|&s| model.pdf(s).ln()).sum();
            let ks = sorted
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let f = model.cdf(s);
                    (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
                })
                .fold(0.0, f64::max);
            let chi_squared = histogram
                .edges
                .windows(2)
                .zip(&histogram.counts)
                .map(|(e, &c)| {
                    let expected = n * (model.cdf(e[1]) - model.cdf(e[0]));
                    if expected > 0.0 {
                        (c as f64 - expected).powi(2) / expected
                    } else {
                        0.0
                    }
                })
                .sum();
            ModelFit { model, log_likelihood, ks, chi_squared }
        })
        .collect();
    let mut best = Model::Poisson;
    let mut best_ll = fits[2].log_likelihood;
    for f in &fits[..2] {
        if f.log_likelihood > best_ll {
            best = f.model;
            best_ll = f.log_likelihood;
        }
    }
    Ok(FitReport { count: sorted.len(), mean: sample.mean(), fits, best_model: best, histogram })
}

/// Gaussian kernel density on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

/// Number of grid points in a [`kde`] curve.
pub const KDE_POINTS: usize = 512;

/// Silverman's rule `0.9 min(sd, IQR / 1.34) n^(-1/5)`.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InvalidInput("automatic bandwidth needs at least two values".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => return Err(Error::InvalidInput("values have zero spread; give a bandwidth".into())),
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Gaussian KDE on [`KDE_POINTS`] points spanning the data padded by three
/// bandwidths. `bandwidth = None` selects Silverman's rule.
pub fn kde(values: &[f64], bandwidth: Option<f64>) -> Result<KdeCurve> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot estimate a density from no data".into()));
    }
    let bw = match bandwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(Error::InvalidInput(format!("bandwidth must be positive, got {b}"))),
        None => silverman_bandwidth(values)?,
    };
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = (min - 3.0 * bw, max + 3.0 * bw);
    let step = (hi - lo) / (KDE_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..KDE_POINTS).map(|i| lo + i as f64 * step).collect();
    let norm = 1.0 / (values.len() as f64 * bw * (2.0 * PI).sqrt());
    let density = par::map_slice(&grid, |&x| {
        norm * values
            .iter()
            .map(|&v| {
                let z = (x - v) / bw;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
    });
    Ok(KdeCurve { grid, density, bandwidth: bw })
}

impl KdeCurve {
    /// Trapezoid integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    /// Two decades centred (geometrically) between the grid resolution and
    /// the upper end of the grid.
    pub fn central_decades(&self) -> (f64, f64) {
        let step = self.grid[1] - self.grid[0];
        let top = *self.grid.last().expect("non-empty grid");
        let centre = (step * top).sqrt();
        (centre / 10.0, centre * 10.0)
    }

    /// Least-squares slope of `ln density` against `ln x` over grid points
    /// in `[lo, hi]` with positive abscissa and density.
    pub fn loglog_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .grid
            .iter()
            .zip(&self.density)
            .filter(|(&x, &d)| x >= lo && x <= hi && x > 0.0 && d > 0.0)
            .map(|(&x, &d)| (x.ln(), d.ln()))
            .collect();
        linear_slope(&pts)
    }
}

/// Ordinary least-squares slope; `None` with fewer than two distinct abscissae.
pub fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, gap: f64) -> KIndexSeries {
        KIndexSeries::from_sorted((0..n).map(|i| i as f64 * gap).collect(), 40).unwrap()
    }

    // adaptive Simpson quadrature, independent of the closed-form CDFs
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn k_index_examples() {
        assert_eq!(k_index(1.0, 40), 0.0);
        // n with ln 2^(n/2) = 10 is not an integer; use the formula's scaling
        let n = 40;
        let lh = 20.0 * std::f64::consts::LN_2;
        assert!((k_index(1.25, n) - 0.25 * 0.25 * lh.powi(4)).abs() < 1e-9);
        assert!((0.25 * 0.25 * 10f64.powi(4) - 625.0).abs() < 1e-12);
        assert!((k_index(1.5, 40) - 2.0 * k_index(1.25, 40)).abs() < 1e-9);
    }

    #[test]
    fn series_is_sorted_multiset() {
        let a = KIndexSeries::from_energies(&[1.3, 1.1, 1.2, 1.1], 40);
        let b = KIndexSeries::from_energies(&[1.1, 1.2, 1.1, 1.3], 40);
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a.values[0], a.values[1]);
    }

    #[test]
    fn stencil_examples() {
        let s = uniform(20, 0.5);
        assert_eq!(local_difference(&s, 5, 1).unwrap(), 1.0);
        assert_eq!(local_difference(&s, 5, 2).unwrap(), 0.5);
        for ell in 1..=6usize {
            let expect = 0.5 * 2.0 * ell.div_ceil(2) as f64 / ell as f64;
            assert!((local_difference(&s, 10, ell).unwrap() - expect).abs() < 1e-15);
        }
        assert_eq!(window_mean(&s, 10, 6).unwrap(), 0.5);
        assert_eq!(window_mean(&s, 10, 2).unwrap(), local_difference(&s, 10, 2).unwrap());
        assert!(local_difference(&s, 0, 1).is_err());
        assert!(window_mean(&s, 19, 2).is_err());
    }

    #[test]
    fn unfold_uniform() {
        let s = uniform(100, 2.0);
        let cfg = UnfoldConfig { window: 10, ell_min: 1, ell_max: 6, seed: 3 };
        let u = unfold(&s, &cfg).unwrap();
        assert_eq!(u.len(), 100 - 2 * 5);
        for (&v, &l) in u.s.iter().zip(&u.ell) {
            assert!((v - 2.0 * l.div_ceil(2) as f64 / l as f64).abs() < 1e-12);
        }
        assert_eq!(u, unfold(&s, &cfg).unwrap());
        assert!(unfold(&uniform(20, 1.0), &cfg).is_err());
    }

    #[test]
    fn unfold_is_affine_invariant() {
        let mut rng = par::item_rng(1, 0);
        let mut acc = 0.0;
        let vals: Vec<f64> = (0..500)
            .map(|_| {
                acc += -(1.0 - rng.random::<f64>()).ln();
                acc
            })
            .collect();
        let a = KIndexSeries::from_sorted(vals.clone(), 40).unwrap();
        let b = KIndexSeries::from_sorted(vals.iter().map(|v| 3.5 * v - 7.0).collect(), 40).unwrap();
        let cfg = UnfoldConfig { window: 50, seed: 9, ..Default::default() };
        let (ua, ub) = (unfold(&a, &cfg).unwrap(), unfold(&b, &cfg).unwrap());
        for (x, y) in ua.s.iter().zip(&ub.s) {
            assert!((x - y).abs() < 1e-9 * x.max(1.0));
        }
    }

    #[test]
    fn unfold_mean_is_stencil_mean() {
        // i.i.d. exponential gaps: the window mean is the mean gap and the
        // stencil over-counts by 2 ceil(l/2) / l
        let mut rng = par::item_rng(2, 0);
        let mut acc = 0.0;
        let vals: Vec<f64> = (0..20_000)
            .map(|_| {
                acc += -(1.0 - rng.random::<f64>()).ln();
                acc
            })
            .collect();
        let series = KIndexSeries::from_sorted(vals, 40).unwrap();
        let u = unfold(&series, &UnfoldConfig { window: 1000, seed: 4, ..Default::default() }).unwrap();
        let expected = stencil_mean(1, 6);
        assert!((expected - 113.0 / 90.0).abs() < 1e-15);
        assert!((u.mean() - expected).abs() < 0.03, "{} vs {expected}", u.mean());
    }

    #[test]
    fn pdf_examples() {
        assert_eq!(gue_pdf(0.0), 0.0);
        assert_eq!(goe_pdf(0.0), 0.0);
        assert_eq!(poisson_pdf(0.0), 1.0);
        assert!((gue_pdf(1.0) - 32.0 / (PI * PI) * (-4.0 / PI).exp()).abs() < 1e-15);
    }

    #[test]
    fn pdfs_normalised_by_quadrature() {
        for m in Model::ALL {
            let upper = if m == Model::Poisson { 60.0 } else { 12.0 };
            let mass = simpson(&|s| m.pdf(s), 0.0, upper, 1e-12);
            let mean = simpson(&|s| s * m.pdf(s), 0.0, upper, 1e-12);
            assert!((mass - 1.0).abs() < 1e-8, "{m:?} mass {mass}");
            assert!((mean - 1.0).abs() < 1e-8, "{m:?} mean {mean}");
            for s in [0.1, 0.5, 1.0, 2.0, 3.5] {
                let q = simpson(&|t| m.pdf(t), 0.0, s, 1e-13);
                assert!((q - m.cdf(s)).abs() < 1e-10, "{m:?} cdf({s})");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for u in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999_999] {
            assert!((gue_cdf(gue_quantile(u)) - u).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn fitter_recovers_generators() {
        for (i, m) in Model::ALL.into_iter().enumerate() {
            let sample = synthetic_sample(m, 20_000, 100 + i as u64);
            let report = fit_spacings(&sample, 80).unwrap();
            assert_eq!(report.best_model, m);
            assert_eq!(report.histogram.counts.len(), 80);
        }
        assert!(fit_spacings(&SpacingSample::from_values(vec![]), 10).is_err());
    }

    #[test]
    fn kde_examples() {
        let c = kde(&[0.0], Some(1.0)).unwrap();
        for (&x, &d) in c.grid.iter().zip(&c.density) {
            assert!((d - (-0.5 * x * x).exp() / (2.0 * PI).sqrt()).abs() < 1e-15);
        }
        // a lone kernel keeps the mass within three bandwidths
        assert!((c.integral() - libm::erf(3.0 / 2f64.sqrt())).abs() < 1e-4);
        let many: Vec<f64> = synthetic_sample(Model::Goe, 2000, 1).s;
        assert!((kde(&many, None).unwrap().integral() - 1.0).abs() < 1e-3);
        let two = kde(&[-10.0, 10.0], Some(1.0)).unwrap();
        let left: f64 = two.grid.iter().zip(&two.density).filter(|(x, _)| **x < 0.0).map(|(_, d)| d).sum();
        let right: f64 = two.grid.iter().zip(&two.density).filter(|(x, _)| **x > 0.0).map(|(_, d)| d).sum();
        assert!((left - right).abs() < 1e-12);
        let auto = kde(&[1.0, 2.0, 2.5, 4.0, 7.0], None).unwrap();
        assert!((auto.integral() - 1.0).abs() < 1e-3);
        assert!(kde(&[1.0, 1.0], None).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.1).collect();
        let density = grid.iter().map(|x| x.powf(-0.5)).collect();
        let c = KdeCurve { grid, density, bandwidth: 0.1 };
        assert!((c.loglog_slope(0.1, 10.0).unwrap() + 0.5).abs() < 1e-12);
    }
}
