use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{linear_fit, LinearFit};
use crate::spectral::{weighted_lp_norm, GridFunction, Part, SpectralData};

/// Log-log decay fit of a norm of a linear evolution.
#[derive(Debug, Clone)]
pub struct DecayProbe {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: LinearFit,
    /// The horizon exceeds the time at which waves from the data return from the box wall.
    pub boundary_contaminated: bool,
}

impl DecayProbe {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Number of geometrically spaced samples on `[1, horizon]`.
pub const PROBE_SAMPLES: usize = 120;

/// `r_max` minus the radius beyond which `|v|` stays under `1e-8 max|v|`.
fn reflection_time(spec: &SpectralData, v: &GridFunction) -> f64 {
    let g = spec.grid();
    let peak = v.max_abs();
    let support = (0..v.len()).rev().find(|&i| v.values[i].norm() > 1e-8 * peak).map_or(0.0, |i| g.r(i));
    g.r_max() - support
}

fn geometric_times(horizon: f64) -> Vec<f64> {
    let n = PROBE_SAMPLES;
    (0..n).map(|j| horizon.powf(j as f64 / (n - 1) as f64)).collect()
}

fn run_probe(spec: &SpectralData, c: &[Complex64], phase_sign: f64, p: f64, sigma: f64, horizon: f64, contaminated: bool) -> DecayProbe {
    let times = geometric_times(horizon);
    let freqs = spec.frequencies();
    let mut ck = vec![Complex64::new(0.0, 0.0); c.len()];
    let values: Vec<f64> = times
        .iter()
        .map(|&t| {
            for ((o, a), &x) in ck.iter_mut().zip(c).zip(freqs) {
                *o = a * Complex64::from_polar(1.0, phase_sign * x * t);
            }
            weighted_lp_norm(&spec.synthesize(&ck), p, sigma, spec.grid())
        })
        .collect();
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let lv: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    DecayProbe { fit: linear_fit(&lt, &lv), times, values, boundary_contaminated: contaminated }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon.is_finite() && horizon > 1.0) {
        return Err(Error::InvalidArgument(format!("horizon must exceed 1, got {horizon}")));
    }
    Ok(())
}

/// Decay of `||<r>^{-sigma} B^{-1/2} e^{-iBt} P_c psi||_{L^p}` over `t in [1, horizon]`.
pub fn dispersive_decay_probe(spec: &SpectralData, psi: &GridFunction, p: f64, sigma: Option<f64>, horizon: f64) -> Result<DecayProbe> {
    psi.check_finite()?;
    check_horizon(horizon)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent must be at least 1, got {p}")));
    }
    let contaminated = horizon > reflection_time(spec, psi);
    let mut c = spec.coefficients(psi);
    let freqs = spec.frequencies();
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = if spec.is_discrete(k) { Complex64::new(0.0, 0.0) } else { *ck / freqs[k].sqrt() };
    }
    Ok(run_probe(spec, &c, -1.0, p, sigma.unwrap_or(0.0), horizon, contaminated))
}

/// Decay of `||<r>^{-sigma} e^{iBt} (B - Lambda + i eps)^{-l} P_c <r>^{-sigma} psi||_{L^2}` with
/// `eps` twice the level spacing at `Lambda`, the finest regularization the box resolves.
pub fn singular_resolvent_probe(spec: &SpectralData, lambda: f64, l: u32, psi: &GridFunction, sigma: f64, horizon: f64) -> Result<DecayProbe> {
    psi.check_finite()?;
    check_horizon(horizon)?;
    if lambda <= spec.mass() {
        return Err(Error::InvalidArgument(format!("Lambda = {lambda} must lie above the threshold m = {}", spec.mass())));
    }
    let g = spec.grid();
    let weighted = GridFunction { values: psi.values.iter().enumerate().map(|(i, z)| z * (1.0 + g.r(i).powi(2)).powf(-0.5 * sigma)).collect() };
    let contaminated = horizon > reflection_time(spec, psi);
    let freqs = spec.frequencies();
    let j = freqs.partition_point(|&x| x < lambda).clamp(1, freqs.len() - 2);
    let eps = freqs[j + 1] - freqs[j - 1];
    let mut c = spec.coefficients(&spec.project(&weighted, Part::Continuous));
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = if spec.is_discrete(k) { Complex64::new(0.0, 0.0) } else { *ck / Complex64::new(freqs[k] - lambda, eps).powu(l) };
    }
    Ok(run_probe(spec, &c, 1.0, 2.0, sigma, horizon, contaminated))
}
