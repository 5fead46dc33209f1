use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

/// A spectral peak; `frequency` is angular (radians per unit time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub frequency: f64,
    /// Squared amplitude estimate of the component.
    pub power: f64,
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect()
}

fn dtft_magnitude(x: &[f64], w: &[f64], omega_dt: f64) -> f64 {
    let step = Complex64::from_polar(1.0, -omega_dt);
    let mut z = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (&xi, &wi)) in x.iter().zip(w).enumerate() {
        acc += z * (xi * wi);
        z *= step;
        if i % 1024 == 1023 {
            z /= z.norm();
        }
    }
    acc.norm()
}

/// Golden-section search for the maximum of a unimodal function.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Dominant spectral peaks of a uniformly sampled signal, strongest first.
///
/// The mean is removed and a Hann window applied. Peaks within `1e-3` of the
/// strongest (in amplitude) are kept; each is located by parabolic
/// interpolation of the log spectrum, then polished by maximising the
/// windowed DTFT.
pub fn extract_frequencies(signal: &[f64], dt: f64, max_peaks: usize) -> Vec<Peak> {
    let n = signal.len();
    if n < 8 || max_peaks == 0 {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let scale = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let x: Vec<f64> = signal.iter().map(|v| v - mean).collect();
    let w = hann(n);
    let wsum: f64 = w.iter().sum();
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = x.iter().zip(&w).map(|(a, b)| Complex64::new(a * b, 0.0)).collect();
    buf.resize(len, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let amp: Vec<f64> = buf[..len / 2].iter().map(|c| 2.0 * c.norm() / wsum).collect();
    let top = amp[1..].iter().fold(0.0f64, |m, &v| m.max(v));
    if top <= 1e-9 * scale || top == 0.0 {
        return Vec::new();
    }
    let bin = 2.0 * PI / (len as f64 * dt);
    let mut idx: Vec<usize> =
        (1..amp.len() - 1).filter(|&k| amp[k] >= amp[k - 1] && amp[k] > amp[k + 1] && amp[k] >= 1e-3 * top).collect();
    idx.sort_by(|&a, &b| amp[b].total_cmp(&amp[a]).then(a.cmp(&b)));
    idx.truncate(max_peaks);
    idx.into_iter()
        .map(|k| {
            let (l, c, r) = (amp[k - 1].max(1e-300).ln(), amp[k].ln(), amp[k + 1].max(1e-300).ln());
            let denom = l - 2.0 * c + r;
            let delta = if denom != 0.0 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let guess = (k as f64 + delta) * bin;
            let f = |om: f64| dtft_magnitude(&x, &w, om * dt);
            let best = golden_max(f, guess - bin, guess + bin, 1e-10 * guess.max(bin));
            let a = 2.0 * dtft_magnitude(&x, &w, best * dt) / wsum;
            Peak { frequency: best, power: a * a }
        })
        .collect()
}
