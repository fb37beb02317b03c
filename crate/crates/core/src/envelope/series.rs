use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::dynamics::{SimState, Trajectory};
use crate::error::{Error, Result};
use crate::numerics::{linear_fit, LinearFit};
use crate::spectral::{lp_norm, weighted_lp_norm, SpectralData};

use super::modes::extract_modes;

/// Minimum number of samples inside a fit window.
pub const MIN_FIT_SAMPLES: usize = 20;

/// Default spatial weight exponent for the weighted norms.
pub const DEFAULT_SIGMA: f64 = 3.0;

/// Time series of the envelope quantities extracted from a run.
#[derive(Debug, Clone, Default)]
pub struct EnvelopeSeries {
    pub omega: f64,
    pub times: Vec<f64>,
    pub xi: Vec<Complex64>,
    pub abs_xi: Vec<f64>,
    /// Unwrapped phase with `omega t` removed.
    pub theta: Vec<f64>,
    pub eta_l8: Vec<f64>,
    /// `||B^{-1/2} f||_{L^8}`; only available with a full eigenbasis.
    pub f_l8: Option<Vec<f64>>,
    /// `||<r>^{-sigma} B^{1/2} f||_{L^4}`; only available with a full eigenbasis.
    pub f_weighted_l4: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    AbsXi,
    /// `|xi|^{-4N}`, linear in time under the reduced law.
    InverseXiPower(usize),
    EtaL8,
    FL8,
    FWeightedL4,
}

impl Quantity {
    pub fn name(&self) -> String {
        match self {
            Quantity::AbsXi => "abs_xi".into(),
            Quantity::InverseXiPower(n) => format!("abs_xi^-{}", 4 * n),
            Quantity::EtaL8 => "eta_L8".into(),
            Quantity::FL8 => "f_L8".into(),
            Quantity::FWeightedL4 => "f_weighted_L4".into(),
        }
    }
}

fn unwrap_theta(times: &[f64], xi: &[Complex64], omega: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(xi.len());
    let mut prev: Option<f64> = None;
    for (j, (&t, z)) in times.iter().zip(xi).enumerate() {
        let raw = -z.arg() - omega * t;
        let theta = match prev {
            None => raw,
            Some(p) => {
                let jump = (raw - p + PI).rem_euclid(2.0 * PI) - PI;
                if jump.abs() >= PI * (1.0 - 1e-12) {
                    return Err(Error::PhaseAmbiguous { t0: times[j - 1], t1: t, jump });
                }
                out[j - 1] + jump
            }
        };
        prev = Some(raw);
        out.push(theta);
    }
    Ok(out)
}

impl EnvelopeSeries {
    /// Build from samples of `xi` and `||eta||_{L^8}`; the phase is unwrapped sample to sample.
    pub fn new(omega: f64, times: Vec<f64>, xi: Vec<Complex64>, eta_l8: Vec<f64>) -> Result<Self> {
        if times.len() != xi.len() || times.len() != eta_l8.len() {
            return Err(Error::InvalidArgument("series lengths differ".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        if xi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) || eta_l8.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("series has non-finite entries".into()));
        }
        let theta = unwrap_theta(&times, &xi, omega)?;
        let abs_xi = xi.iter().map(|z| z.norm()).collect();
        Ok(Self { omega, times, xi, abs_xi, theta, eta_l8, f_l8: None, f_weighted_l4: None })
    }

    pub fn from_trajectory(traj: &Trajectory) -> Result<Self> {
        Self::new(
            traj.omega,
            traj.times(),
            traj.rows.iter().map(|r| r.xi).collect(),
            traj.rows.iter().map(|r| r.eta_l8).collect(),
        )
    }

    /// Fill the `f` norms from recorded states.
    pub fn with_field_norms(mut self, states: &[SimState], spec: &SpectralData, sigma: f64) -> Result<Self> {
        if states.len() != self.times.len() {
            return Err(Error::InvalidArgument("one state per sample is required".into()));
        }
        let g = spec.grid();
        let mut l8 = Vec::with_capacity(states.len());
        let mut wl4 = Vec::with_capacity(states.len());
        for s in states {
            let f = extract_modes(s, spec).f;
            let smooth = spec.apply_b_power(-0.5, &f, crate::spectral::Part::Continuous)?;
            let rough = spec.apply_b_power(0.5, &f, crate::spectral::Part::Continuous)?;
            l8.push(lp_norm(&smooth, 8.0, g));
            wl4.push(weighted_lp_norm(&rough, 4.0, sigma, g));
        }
        self.f_l8 = Some(l8);
        self.f_weighted_l4 = Some(wl4);
        Ok(self)
    }

    pub fn values(&self, q: Quantity) -> Option<Vec<f64>> {
        match q {
            Quantity::AbsXi => Some(self.abs_xi.clone()),
            Quantity::InverseXiPower(n) => Some(self.abs_xi.iter().map(|a| a.powi(-4 * n as i32)).collect()),
            Quantity::EtaL8 => Some(self.eta_l8.clone()),
            Quantity::FL8 => self.f_l8.clone(),
            Quantity::FWeightedL4 => self.f_weighted_l4.clone(),
        }
    }

    /// Moving average of `|xi|` over a centred window of duration `span`.
    pub fn smoothed_abs_xi(&self, span: f64) -> Vec<f64> {
        moving_average(&self.times, &self.abs_xi, span)
    }
}

/// Centred moving average over windows of duration `span` (truncated at the ends).
pub fn moving_average(times: &[f64], values: &[f64], span: f64) -> Vec<f64> {
    let n = times.len();
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut sum = 0.0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        while hi < n && times[hi] <= times[i] + 0.5 * span {
            sum += values[hi];
            hi += 1;
        }
        while times[lo] < times[i] - 0.5 * span {
            sum -= values[lo];
            lo += 1;
        }
        out.push(sum / (hi - lo) as f64);
    }
    out
}

/// Least squares of `log value` against `log(t + shift)` over samples with `t` in `[t0, t1]`.
pub fn fit_decay_shifted(times: &[f64], values: &[f64], t0: f64, t1: f64, shift: f64) -> Result<LinearFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, v)| ((t + shift).ln(), v.ln()))
        .unzip();
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::EmptyWindow { t0, t1, count: x.len(), required: MIN_FIT_SAMPLES });
    }
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("fit window contains non-positive times or values".into()));
    }
    Ok(linear_fit(&x, &y))
}

/// Log-log slope of `values` over `[t0, t1]`.
pub fn fit_decay(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<LinearFit> {
    fit_decay_shifted(times, values, t0, t1, 0.0)
}

/// Growth exponent of `|theta(t)|`, fitted over all samples with `t > 0`.
pub fn theta_growth(series: &EnvelopeSeries) -> Result<LinearFit> {
    let (t, th): (Vec<f64>, Vec<f64>) =
        series.times.iter().zip(&series.theta).filter(|(t, _)| **t > 0.0).map(|(t, v)| (*t, v.abs())).unzip();
    if t.len() < MIN_FIT_SAMPLES {
        let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(0.0));
        return Err(Error::EmptyWindow { t0, t1, count: t.len(), required: MIN_FIT_SAMPLES });
    }
    let scale = th.iter().fold(0.0f64, |m, v| m.max(*v));
    if scale < 1e-14 {
        return Ok(LinearFit { slope: 0.0, intercept: f64::NEG_INFINITY, slope_stderr: 0.0, r_squared: 1.0 });
    }
    let floor = 1e-14 * scale;
    let x: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = th.iter().map(|v| v.max(floor).ln()).collect();
    Ok(linear_fit(&x, &y))
}

/// One line of the fit report.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub quantity: String,
    pub t0: f64,
    pub t1: f64,
    pub slope: f64,
    pub stderr: f64,
    pub predicted: f64,
}

impl FitRow {
    pub const CSV_HEADER: &'static str = "quantity,t0,t1,slope,stderr,predicted,ratio";

    pub fn ratio(&self) -> f64 {
        if self.predicted == 0.0 {
            if self.slope == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.slope / self.predicted
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6e},{:.6e},{:.9e},{:.3e},{:.9e},{:.6e}",
            self.quantity,
            self.t0,
            self.t1,
            self.slope,
            self.stderr,
            self.predicted,
            self.ratio()
        )
    }
}

pub fn write_fit_report(rows: &[FitRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", FitRow::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// The resonance-dominated window `[5e-2 / (gamma |xi0|^{4N}), t_end]`.
pub fn resonance_window(xi0: f64, gamma: f64, order: usize, t_end: f64) -> (f64, f64) {
    (5e-2 / (gamma * xi0.powi(4 * order as i32)), t_end)
}

