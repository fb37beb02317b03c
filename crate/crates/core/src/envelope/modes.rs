use num_complex::Complex64;

use crate::dynamics::SimState;
use crate::error::Result;
use crate::fgr::{resolvent_apply, Prescription, ResolventQuery};
use crate::spectral::{GridFunction, Part, SpectralData};

/// Complex coordinates `xi = (q sqrt(omega) + i p / sqrt(omega)) / sqrt 2` and
/// `f = (B^{1/2} P_c u + i B^{-1/2} P_c u_t) / sqrt 2` of a state.
#[derive(Debug, Clone)]
pub struct ModePair {
    pub xi: Complex64,
    pub f: GridFunction,
    pub t: f64,
}

/// `xi` from `q = <phi, w>`, `p = <phi, w_t>`.
pub fn bound_mode(w: &[f64], w_t: &[f64], phi: &[f64], omega: f64, dr: f64) -> Complex64 {
    let q: f64 = phi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() * dr;
    let p: f64 = phi.iter().zip(w_t).map(|(a, b)| a * b).sum::<f64>() * dr;
    Complex64::new(q * omega.sqrt(), p / omega.sqrt()) / 2f64.sqrt()
}

pub fn extract_modes(state: &SimState, spec: &SpectralData) -> ModePair {
    let omega = spec.omega();
    let xi = bound_mode(&state.w, &state.w_t, spec.phi(), omega, spec.grid().dr());
    let a = spec.apply_b_power_real(0.5, &state.w, Part::Continuous);
    let b = spec.apply_b_power_real(-0.5, &state.w_t, Part::Continuous);
    let s = 2f64.sqrt().recip();
    let f = GridFunction { values: a.iter().zip(&b).map(|(x, y)| Complex64::new(x * s, y * s)).collect() };
    ModePair { xi, f, t: state.t }
}

/// Inverse of [`extract_modes`]: `u = q phi + B^{-1/2}(f + f-bar)/sqrt 2`,
/// `u_t = p phi + B^{1/2}(f - f-bar)/(i sqrt 2)`.
pub fn reconstruct(modes: &ModePair, spec: &SpectralData) -> SimState {
    let omega = spec.omega();
    let q = modes.xi.re * (2.0 / omega).sqrt();
    let p = modes.xi.im * (2.0 * omega).sqrt();
    let s = 2f64.sqrt();
    let re = modes.f.re();
    let im = modes.f.im();
    let a = spec.apply_b_power_real(-0.5, &re, Part::Continuous);
    let b = spec.apply_b_power_real(0.5, &im, Part::Continuous);
    let phi = spec.phi();
    SimState {
        w: phi.iter().zip(&a).map(|(f, x)| q * f + s * x).collect(),
        w_t: phi.iter().zip(&b).map(|(f, y)| p * f + s * y).collect(),
        t: modes.t,
    }
}

/// Leading resonant part of the continuous variable.
#[derive(Debug, Clone)]
pub struct MainTerm {
    pub f: GridFunction,
    pub ill_conditioned: bool,
}

/// `M_f = -xi^{2N+1} (B - (2N+1) omega - i0)^{-1} Phi-bar`, with the limit taken by Richardson
/// extrapolation over `eps` in `{8, 4, 2}` level spacings.
pub fn main_term_f(xi: Complex64, phi_res: &GridFunction, spec: &SpectralData, order: usize) -> Result<MainTerm> {
    let lambda = (2 * order + 1) as f64 * spec.omega();
    let freqs = spec.frequencies();
    let j = freqs.partition_point(|&x| x < lambda).clamp(1, freqs.len() - 2);
    let spacing = 0.5 * (freqs[j + 1] - freqs[j - 1]);
    let ladder = vec![8.0 * spacing, 4.0 * spacing, 2.0 * spacing];
    let q = ResolventQuery::new(lambda, Prescription::MinusI0, ladder, phi_res.conj())?;
    let res = resolvent_apply(spec, &q);
    Ok(MainTerm { f: res.limit.scale(-xi.powu(2 * order as u32 + 1)), ill_conditioned: res.ill_conditioned })
}
