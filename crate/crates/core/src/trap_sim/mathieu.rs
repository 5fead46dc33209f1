//! Radial breathing: `rho'' - (mu - 2 phi cos 2 tau) rho = 0`.
//!
//! Stability is judged two ways. The envelope classifier integrates 50
//! periods and calls a solution stable when it never exceeds ten times its
//! first-period maximum. The Floquet oracle uses the even and odd
//! fundamental solutions at the half period: with `W = 1`, the discriminant
//! is `2 + 4 y1' y2 = 4 y1 y2' - 2`, so stability is the sign pattern
//! `y1' y2 < 0 < y1 y2'` and every band edge is a zero of one factor.

use std::f64::consts::PI;

use serde::Serialize;

use super::modes::rk4_step;
use super::params::TrapParams;
use crate::error::{Error, Result};
use crate::io::sig17;
use crate::par;

/// RK4 steps per period `pi`; the step is just under `1e-3`.
pub const STEPS_PER_PERIOD: usize = 3142;
pub const CLASSIFIER_PERIODS: usize = 50;
pub const CLASSIFIER_GROWTH: f64 = 10.0;
const OVERFLOW: f64 = 1e200;

pub fn step() -> f64 {
    PI / STEPS_PER_PERIOD as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MathieuSolution {
    pub mu: f64,
    pub phi: f64,
    pub tau_grid: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    pub stable: bool,
    pub growth_rate: f64,
}

struct Run {
    stable: bool,
    growth_rate: f64,
}

fn rhs(mu: f64, phi: f64) -> impl Fn(f64, [f64; 2]) -> [f64; 2] {
    move |tau, s| [s[1], (mu - 2.0 * phi * (2.0 * tau).cos()) * s[0]]
}

fn advance(f: &impl Fn(f64, [f64; 2]) -> [f64; 2], s: [f64; 2], tau: f64, h: f64) -> [f64; 2] {
    // the state carries time as a third component to reuse the autonomous stepper
    let g = |z: [f64; 3]| {
        let d = f(z[2], [z[0], z[1]]);
        [d[0], d[1], 1.0]
    };
    let out = rk4_step(&g, [s[0], s[1], tau], h);
    [out[0], out[1]]
}

fn run(mu: f64, phi: f64, periods: usize, initial: (f64, f64), mut sink: impl FnMut(f64, [f64; 2])) -> Run {
    let f = rhs(mu, phi);
    let h = step();
    let mut s = [initial.0, initial.1];
    sink(0.0, s);
    let mut env = Vec::with_capacity(periods);
    let mut current = s[0].abs();
    let mut i = 0usize;
    let total = periods * STEPS_PER_PERIOD;
    while i < total {
        let tau = i as f64 * h;
        s = advance(&f, s, tau, h);
        i += 1;
        sink(i as f64 * h, s);
        current = current.max(s[0].abs());
        if !s[0].is_finite() || s[0].abs() > OVERFLOW {
            let first = env.first().copied().unwrap_or(initial.0.abs().max(initial.1.abs()));
            let rate = if s[0].is_finite() { (s[0].abs() / first).ln() / (i as f64 * h) } else { f64::INFINITY };
            return Run { stable: false, growth_rate: rate };
        }
        if i.is_multiple_of(STEPS_PER_PERIOD) {
            env.push(current);
            current = s[0].abs();
        }
    }
    let first = env[0];
    let peak = env.iter().fold(0.0f64, |m, &v| m.max(v));
    let last = *env.last().expect("at least one period");
    let growth_rate =
        if env.len() > 1 && first > 0.0 { (last / first).ln() / ((env.len() - 1) as f64 * PI) } else { 0.0 };
    Run { stable: peak <= CLASSIFIER_GROWTH * first, growth_rate }
}

fn periods_in(tau_span: f64) -> Result<usize> {
    if !(tau_span.is_finite() && tau_span >= PI * (1.0 - 1e-12)) {
        return Err(Error::InvalidInput(format!("tau_span must cover at least one period pi, got {tau_span}")));
    }
    Ok((tau_span / PI).round().max(1.0) as usize)
}

/// Integrates over `round(tau_span / pi)` whole periods with the fixed step.
pub fn integrate_mathieu(mu: f64, phi: f64, tau_span: f64, initial: (f64, f64)) -> Result<MathieuSolution> {
    let periods = periods_in(tau_span)?;
    let cap = periods * STEPS_PER_PERIOD + 1;
    let (mut tau_grid, mut rho, mut rho_dot) =
        (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
    let r = run(mu, phi, periods, initial, |t, s| {
        tau_grid.push(t);
        rho.push(s[0]);
        rho_dot.push(s[1]);
    });
    Ok(MathieuSolution { mu, phi, tau_grid, rho, rho_dot, stable: r.stable, growth_rate: r.growth_rate })
}

/// Envelope classification over [`CLASSIFIER_PERIODS`] without storing the path.
pub fn envelope_stability(mu: f64, phi: f64, initial: (f64, f64)) -> (bool, f64) {
    let r = run(mu, phi, CLASSIFIER_PERIODS, initial, |_, _| {});
    (r.stable, r.growth_rate)
}

/// Fundamental solutions at `tau = pi/2`: `[y1, y1', y2, y2']`.
pub fn half_period_values(mu: f64, phi: f64) -> [f64; 4] {
    let f = rhs(mu, phi);
    let h = step();
    let mut a = [1.0, 0.0];
    let mut b = [0.0, 1.0];
    for i in 0..STEPS_PER_PERIOD / 2 {
        let tau = i as f64 * h;
        a = advance(&f, a, tau, h);
        b = advance(&f, b, tau, h);
    }
    [a[0], a[1], b[0], b[1]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Floquet {
    pub discriminant: f64,
    pub stable: bool,
    /// Growth per unit `tau` of the dominant solution; zero inside a band.
    pub exponent: f64,
}

fn floquet_from(v: [f64; 4]) -> Floquet {
    let [y1, y1p, y2, y2p] = v;
    let plus = 2.0 + 4.0 * y1p * y2;
    let minus = 4.0 * y1 * y2p - 2.0;
    let discriminant = if (plus - 2.0).abs() <= (minus + 2.0).abs() { plus } else { minus };
    let stable = y1p * y2 < 0.0 && y1 * y2p > 0.0;
    let exponent = if stable {
        0.0
    } else {
        let d = discriminant.abs() / 2.0;
        (d + (d * d - 1.0).max(0.0).sqrt()).ln() / PI
    };
    Floquet { discriminant, stable, exponent }
}

pub fn floquet(mu: f64, phi: f64) -> Floquet {
    floquet_from(half_period_values(mu, phi))
}

/// A stable interval in `phi` at fixed `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub mu: f64,
    pub phi_low: f64,
    pub phi_high: f64,
}

impl Band {
    pub fn center(&self) -> f64 {
        (self.phi_low + self.phi_high) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanCell {
    pub mu: f64,
    pub phi: f64,
    pub stable: bool,
    pub growth_rate: f64,
    pub floquet_stable: bool,
    pub floquet_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityScan {
    pub bands: Vec<Band>,
    pub cells: Vec<ScanCell>,
}

impl StabilityScan {
    /// Fraction of cells where the envelope classifier agrees with Floquet.
    pub fn agreement(&self) -> f64 {
        if self.cells.is_empty() {
            return 1.0;
        }
        self.cells.iter().filter(|c| c.stable == c.floquet_stable).count() as f64 / self.cells.len() as f64
    }

    /// The stable band with the smallest positive `phi` at this `mu`.
    pub fn lowest_band(&self, mu: f64) -> Option<Band> {
        self.bands
            .iter()
            .copied()
            .filter(|b| b.mu == mu && b.phi_high > 0.0)
            .min_by(|a, b| a.phi_low.total_cmp(&b.phi_low))
    }

    /// Map CSV `mu,phi,stable,growth_rate` from the envelope classifier.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,phi,stable,growth_rate\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", sig17(c.mu), sig17(c.phi), c.stable, sig17(c.growth_rate)));
        }
        out
    }

    pub fn bands_csv(&self) -> String {
        let mut out = String::from("mu,phi_low,phi_high\n");
        for b in &self.bands {
            out.push_str(&format!("{},{},{}\n", sig17(b.mu), sig17(b.phi_low), sig17(b.phi_high)));
        }
        out
    }
}

/// `max |phi_c - mu/2| / sqrt(mu)` over the lowest band of each `mu`.
pub fn center_offset_constant(scan: &StabilityScan, mu_list: &[f64]) -> Option<f64> {
    mu_list
        .iter()
        .map(|&mu| scan.lowest_band(mu).map(|b| (b.center() - mu / 2.0).abs() / mu.sqrt()))
        .try_fold(0.0f64, |m, c| c.map(|c| m.max(c)))
}

fn bisect_zero(mu: f64, k: usize, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let mut s_lo = f_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = half_period_values(mu, mid)[k];
        if v == 0.0 {
            return mid;
        }
        if (v > 0.0) == s_lo {
            lo = mid;
            s_lo = v > 0.0;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bands_for(mu: f64, grid: &[f64], values: &[[f64; 4]]) -> Vec<Band> {
    let mut edges: Vec<f64> = Vec::new();
    for (i, pair) in values.windows(2).enumerate() {
        for (k, (&a, &b)) in pair[0].iter().zip(&pair[1]).enumerate() {
            if a == 0.0 {
                edges.push(grid[i]);
            } else if a * b < 0.0 {
                edges.push(bisect_zero(mu, k, grid[i], grid[i + 1], a));
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut points = vec![grid[0]];
    points.extend(edges.into_iter().filter(|&e| e > grid[0] && e < grid[grid.len() - 1]));
    points.push(grid[grid.len() - 1]);
    let mut bands: Vec<Band> = Vec::new();
    for w in points.windows(2) {
        if w[1] <= w[0] || !floquet(mu, 0.5 * (w[0] + w[1])).stable {
            continue;
        }
        match bands.last_mut() {
            Some(b) if b.phi_high == w[0] => b.phi_high = w[1],
            _ => bands.push(Band { mu, phi_low: w[0], phi_high: w[1] }),
        }
    }
    bands
}

/// Stable bands in `phi` for each `mu`, located by bisection between grid
/// points, plus the classifier/oracle verdict for every grid cell.
pub fn stability_scan(mu_list: &[f64], phi_grid: &[f64]) -> Result<StabilityScan> {
    if phi_grid.len() < 2 || phi_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("phi grid needs at least two strictly increasing values".into()));
    }
    let cells: Vec<(f64, f64)> = mu_list.iter().flat_map(|&mu| phi_grid.iter().map(move |&phi| (mu, phi))).collect();
    let evaluated = par::map_slice(&cells, |&(mu, phi)| {
        let half = half_period_values(mu, phi);
        let fl = floquet_from(half);
        let (stable, growth_rate) = envelope_stability(mu, phi, (1.0, 0.0));
        (half, ScanCell { mu, phi, stable, growth_rate, floquet_stable: fl.stable, floquet_exponent: fl.exponent })
    });
    let mut bands = Vec::new();
    for (j, &mu) in mu_list.iter().enumerate() {
        let block = &evaluated[j * phi_grid.len()..(j + 1) * phi_grid.len()];
        let values: Vec<[f64; 4]> = block.iter().map(|(h, _)| *h).collect();
        bands.extend(bands_for(mu, phi_grid, &values));
    }
    Ok(StabilityScan { bands, cells: evaluated.into_iter().map(|(_, c)| c).collect() })
}

/// Trapezoid average over one period from `STEPS_PER_PERIOD + 1` samples.
pub fn period_average(values: &[f64]) -> f64 {
    let n = STEPS_PER_PERIOD;
    assert!(values.len() > n, "need one full period of samples");
    let inner: f64 = values[1..n].iter().sum();
    (inner + 0.5 * (values[0] + values[n])) / n as f64
}

/// `<2 sin^2 tau>` over one period on the integration grid.
pub fn mean_two_sin_sq() -> f64 {
    let h = step();
    let v: Vec<f64> = (0..=STEPS_PER_PERIOD).map(|i| 2.0 * (i as f64 * h).sin().powi(2)).collect();
    period_average(&v)
}

/// First-period averages `(H_avg, H_inverted)`, with `p = m omega_lambda rho'`:
/// `H_avg = m w^2 <rho'^2/2 - mu rho^2/2 + phi rho^2 cos 2tau>` and the
/// inverted form drops the drive under `<2 sin^2 tau> = 1`.
pub fn averaged_hamiltonian(params: &TrapParams, sol: &MathieuSolution) -> Result<(f64, f64)> {
    if sol.rho.len() <= STEPS_PER_PERIOD {
        return Err(Error::InvalidInput("solution is shorter than one period".into()));
    }
    let scale = params.inputs.m * params.omega_lambda().powi(2);
    let (mu, phi) = (sol.mu, sol.phi);
    let idx = 0..=STEPS_PER_PERIOD;
    let kinetic: Vec<f64> = idx.clone().map(|i| 0.5 * sol.rho_dot[i].powi(2) - 0.5 * mu * sol.rho[i].powi(2)).collect();
    let driven: Vec<f64> = idx.map(|i| kinetic[i] + phi * sol.rho[i].powi(2) * (2.0 * sol.tau_grid[i]).cos()).collect();
    Ok((scale * period_average(&driven), scale * period_average(&kinetic)))
}

/// `(mu, phi)` of the breathing equation for these trap settings.
pub fn mathieu_coefficients(params: &TrapParams) -> (f64, f64) {
    (params.mu, params.phi_m)
}
