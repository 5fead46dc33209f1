use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::{Error, Result};

/// Raw trap settings in simulation units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapInputs {
    pub m: f64,
    pub e: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub omega_z: f64,
    /// Rotating-wall strength relative to the axial confinement.
    pub lambda: f64,
    pub omega_lambda: f64,
    /// Clump radius; when absent it follows from the thin-disk equilibrium.
    pub radius: Option<f64>,
}

impl Default for TrapInputs {
    fn default() -> Self {
        Self { m: 1.0, e: 1.0, b: 1.0, omega_z: 0.5, lambda: 0.0, omega_lambda: 0.0, radius: None }
    }
}

/// Trap settings with every derived frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapParams {
    pub inputs: TrapInputs,
    /// Cyclotron frequency `eB/m`.
    pub omega: f64,
    /// Trap angle, `sin(Phi) = sqrt(2) omega_z / Omega`.
    pub trap_angle: f64,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub beta: f64,
    /// Equilibrium radius; `None` is the unbounded limit.
    pub a: Option<f64>,
    pub omega_hat_z_sq: f64,
    pub mu: f64,
    pub phi_m: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")))
    }
}

/// `(beta/m / (omega_lambda Omega - omega_lambda^2 - omega_z^2 / 2))^(1/3)`.
pub fn equilibrium_radius(m: f64, beta: f64, omega: f64, omega_lambda: f64, omega_z: f64) -> Result<f64> {
    let d = omega_lambda * omega - omega_lambda * omega_lambda - omega_z * omega_z / 2.0;
    if !(d > 1e-12 * omega * omega) {
        return Err(Error::Unstable(format!("equilibrium denominator {d:e} is not positive; the radius is unbounded")));
    }
    Ok((beta / m / d).cbrt())
}

pub fn derive_params(raw: TrapInputs) -> Result<TrapParams> {
    positive("m", raw.m)?;
    positive("e", raw.e)?;
    positive("B", raw.b)?;
    positive("omega_z", raw.omega_z)?;
    if !(raw.lambda.is_finite() && raw.lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be >= 0, got {}", raw.lambda)));
    }
    if !(raw.omega_lambda.is_finite() && raw.omega_lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("omega_lambda must be >= 0, got {}", raw.omega_lambda)));
    }
    if let Some(r) = raw.radius {
        positive("radius", r)?;
    }
    let omega = raw.e * raw.b / raw.m;
    let sin_phi = SQRT_2 * raw.omega_z / omega;
    if sin_phi > 1.0 {
        return Err(Error::InvalidInput(format!(
            "Omega = {omega} is below sqrt(2) omega_z = {}; the trap angle is undefined",
            SQRT_2 * raw.omega_z
        )));
    }
    let trap_angle = sin_phi.asin();
    let half = trap_angle / 2.0;
    let beta = raw.e * raw.e / 4.0;
    let a = match raw.radius {
        Some(r) => Some(r),
        None => equilibrium_radius(raw.m, beta, omega, raw.omega_lambda, raw.omega_z).ok(),
    };
    let omega_hat_z_sq = raw.omega_z * raw.omega_z + a.map_or(0.0, |a| 2.0 * beta / (raw.m * a.powi(3)));
    let mu = (half.cos() / half.sin()).powi(2);
    Ok(TrapParams {
        inputs: raw,
        omega,
        trap_angle,
        omega_minus: omega * half.sin().powi(2),
        omega_plus: omega * half.cos().powi(2),
        beta,
        a,
        omega_hat_z_sq,
        mu,
        phi_m: raw.lambda * mu,
    })
}

impl TrapParams {
    pub fn new(raw: TrapInputs) -> Result<Self> {
        derive_params(raw)
    }

    pub fn omega_hat_z(&self) -> f64 {
        self.omega_hat_z_sq.sqrt()
    }

    pub fn lambda(&self) -> f64 {
        self.inputs.lambda
    }

    pub fn omega_lambda(&self) -> f64 {
        self.inputs.omega_lambda
    }

    pub fn omega_z(&self) -> f64 {
        self.inputs.omega_z
    }
}

/// Sets `omega_lambda = omega_minus` and `omega_hat_z^2 = 2 (Omega - omega_lambda) omega_lambda`.
///
/// The equilibrium denominator vanishes there, so the radius is unbounded.
pub fn stroboscopic_lock(params: &TrapParams) -> Result<TrapParams> {
    let mut inputs = params.inputs;
    inputs.omega_lambda = params.omega_minus;
    inputs.radius = None;
    let mut locked = derive_params(inputs)?;
    let wl = locked.omega_minus;
    locked.inputs.omega_lambda = wl;
    locked.omega_hat_z_sq = 2.0 * (locked.omega - wl) * wl;
    locked.a = None;
    Ok(locked)
}
