use rand::Rng;
use serde::Serialize;

use super::params::{derive_params, TrapInputs, TrapParams};
use crate::error::{Error, Result};
use crate::io::sig17;

/// Normal modes of the rotating-frame equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSolution {
    pub lambda_plus: f64,
    /// `sqrt(|lambda_minus^2|)`; see `minus_inverted`.
    pub lambda_minus: f64,
    pub lambda_plus_sq: f64,
    pub lambda_minus_sq: f64,
    /// The slow mode is an inverted oscillator (`cosh`, `sinh`) when its
    /// squared frequency is negative.
    pub minus_inverted: bool,
    pub c_plus: f64,
    pub c_minus: f64,
    #[serde(rename = "A_plus")]
    pub a_plus: f64,
    #[serde(rename = "A_minus")]
    pub a_minus: f64,
}

struct Coefficients {
    g: f64,
    k1: f64,
    k2: f64,
}

fn coefficients(p: &TrapParams) -> Coefficients {
    let wl = p.omega_lambda();
    let w = wl * (p.omega - wl);
    let half = p.omega_hat_z_sq / 2.0;
    let lw = p.lambda() * p.omega_z() * p.omega_z();
    Coefficients { g: p.omega - 2.0 * wl, k1: w - half + lw, k2: w - half - lw }
}

/// Squared frequencies `1/2 {S +- sqrt(G^2 (Omega^2 - 2 w^2) + 4 lambda^2 omega_z^4)}` of
/// `xi'' - G zeta' + K1 xi = 0`, `zeta'' + G xi' + K2 zeta = 0`, with `S = K1 + K2 + G^2`.
pub fn mode_frequencies(p: &TrapParams) -> Result<ModeSolution> {
    let Coefficients { g, k1, k2 } = coefficients(p);
    let s = k1 + k2 + g * g;
    let lw = p.lambda() * p.omega_z() * p.omega_z();
    let disc = g * g * (p.omega * p.omega - 2.0 * p.omega_hat_z_sq) + 4.0 * lw * lw;
    if disc < 0.0 {
        return Err(Error::Unstable(format!("mode discriminant {disc:e} is negative")));
    }
    let root = disc.sqrt();
    let plus_sq = (s + root) / 2.0;
    // product form avoids cancellation in the small root
    let minus_sq = if plus_sq != 0.0 { k1 * k2 / plus_sq } else { 0.0 };
    if plus_sq <= 0.0 {
        return Err(Error::Unstable(format!("fast mode squared frequency {plus_sq:e} is not positive")));
    }
    let lp = plus_sq.sqrt();
    let lm = minus_sq.abs().sqrt();
    let inverted = minus_sq < 0.0;
    let c_plus = (k1 - plus_sq) / (g * lp);
    let c_minus = if inverted { (k1 + lm * lm) / (g * lm) } else { (k1 - minus_sq) / (g * lm) };
    Ok(ModeSolution {
        lambda_plus: lp,
        lambda_minus: lm,
        lambda_plus_sq: plus_sq,
        lambda_minus_sq: minus_sq,
        minus_inverted: inverted,
        c_plus,
        c_minus,
        a_plus: 1.0,
        a_minus: 0.0,
    })
}

/// The frequency expression exactly as printed, `1/2 {Omega^2 - 2 w^2 + G^2 +- sqrt(...)}`,
/// with `4 w^2 omega_z^2 lambda` under the root.
pub fn printed_lambda_expression(p: &TrapParams) -> (f64, f64) {
    let g = p.omega - 2.0 * p.omega_lambda();
    let base = p.omega * p.omega - 2.0 * p.omega_hat_z_sq;
    let disc = 4.0 * p.omega_hat_z_sq * p.omega_z() * p.omega_z() * p.lambda() + base * g * g;
    let root = disc.max(0.0).sqrt();
    ((base + g * g + root) / 2.0, (base + g * g - root) / 2.0)
}

impl ModeSolution {
    pub fn with_amplitudes(mut self, a_plus: f64, a_minus: f64) -> Self {
        self.a_plus = a_plus;
        self.a_minus = a_minus;
        self
    }

    /// `(xi, zeta)` at time `t`.
    pub fn closed_form(&self, t: f64) -> (f64, f64) {
        let (sp, cp) = (self.lambda_plus * t).sin_cos();
        let (xm, zm) = if self.minus_inverted {
            ((self.lambda_minus * t).cosh(), (self.lambda_minus * t).sinh())
        } else {
            let (s, c) = (self.lambda_minus * t).sin_cos();
            (c, s)
        };
        let minus =
            if self.a_minus == 0.0 { (0.0, 0.0) } else { (self.a_minus * xm, self.c_minus * self.a_minus * zm) };
        (self.a_plus * cp + minus.0, self.c_plus * self.a_plus * sp + minus.1)
    }

    /// `(xi, zeta, xi', zeta')` at `t = 0` for the closed form.
    pub fn initial_state(&self) -> [f64; 4] {
        let minus = if self.a_minus == 0.0 { 0.0 } else { self.c_minus * self.a_minus * self.lambda_minus };
        [self.a_plus + self.a_minus, 0.0, 0.0, self.c_plus * self.a_plus * self.lambda_plus + minus]
    }
}

/// Sampled rotating-frame motion.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi_dot: Vec<f64>,
    pub zeta_dot: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,xi,zeta\n");
        for i in 0..self.len() {
            out.push_str(&format!("{},{},{}\n", sig17(self.t[i]), sig17(self.xi[i]), sig17(self.zeta[i])));
        }
        out
    }
}

pub const RESOLUTION_GUARD: f64 = 0.05;

/// Fixed-step RK4 on the rotating-frame equations, sampled every step.
pub fn integrate_rotating_frame(p: &TrapParams, initial: [f64; 4], dt: f64, steps: usize) -> Result<Trajectory> {
    let fastest = p.omega.max(p.omega_hat_z());
    if !(dt > 0.0) || dt * fastest > RESOLUTION_GUARD {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} violates dt * max(Omega, omega_hat_z) <= {RESOLUTION_GUARD}"
        )));
    }
    let Coefficients { g, k1, k2 } = coefficients(p);
    let f = |s: [f64; 4]| [s[2], s[3], g * s[3] - k1 * s[0], -g * s[2] - k2 * s[1]];
    let mut tr = Trajectory {
        t: Vec::with_capacity(steps + 1),
        xi: Vec::with_capacity(steps + 1),
        zeta: Vec::with_capacity(steps + 1),
        xi_dot: Vec::with_capacity(steps + 1),
        zeta_dot: Vec::with_capacity(steps + 1),
    };
    let mut s = initial;
    let push = |tr: &mut Trajectory, i: usize, s: &[f64; 4]| {
        tr.t.push(i as f64 * dt);
        tr.xi.push(s[0]);
        tr.zeta.push(s[1]);
        tr.xi_dot.push(s[2]);
        tr.zeta_dot.push(s[3]);
    };
    push(&mut tr, 0, &s);
    for i in 1..=steps {
        s = rk4_step(&f, s, dt);
        push(&mut tr, i, &s);
    }
    Ok(tr)
}

pub(crate) fn rk4_step<const N: usize>(f: &impl Fn([f64; N]) -> [f64; N], s: [f64; N], h: f64) -> [f64; N] {
    let axpy = |a: &[f64; N], k: &[f64; N], c: f64| std::array::from_fn(|i| a[i] + c * k[i]);
    let k1 = f(s);
    let k2 = f(axpy(&s, &k1, h / 2.0));
    let k3 = f(axpy(&s, &k2, h / 2.0));
    let k4 = f(axpy(&s, &k3, h));
    std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Draws parameters with `Omega = 1`, both modes oscillatory and well separated.
pub fn random_stable_params<R: Rng>(rng: &mut R) -> TrapParams {
    loop {
        let omega_z = rng.random_range(0.3..0.65);
        let probe = derive_params(TrapInputs { omega_z, ..Default::default() }).expect("valid by construction");
        let raw = TrapInputs {
            omega_z,
            lambda: rng.random_range(0.0..0.05),
            omega_lambda: rng.random_range(0.0..0.3) * probe.omega_minus,
            radius: Some(rng.random_range(3.0..10.0)),
            ..Default::default()
        };
        let Ok(p) = derive_params(raw) else { continue };
        if let Ok(m) = mode_frequencies(&p) {
            if !m.minus_inverted && m.lambda_minus > 0.02 && m.lambda_plus > 1.5 * m.lambda_minus {
                return p;
            }
        }
    }
}
