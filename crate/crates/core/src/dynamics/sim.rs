use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::envelope::bound_mode;
use crate::error::{Error, Result};
use crate::spectral::{lp_norm, GridFunction, RadialGrid};

use super::model::{energy, Model, Scheme, SimState};
use super::stepper::{Integrator, DEFAULT_BLOWUP_BOUND};

/// Initial data `(a0 phi + c0 P_c s, 0)` with `s = r exp(-((r - center)/width)^2)` normalized to
/// unit reduced `L^2` norm after projection.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub a0: f64,
    pub c0: f64,
    /// Admissible ratio `|c0| <= c_max |a0|` between the continuous and discrete parts.
    pub c_max: f64,
    pub seed_center: f64,
    pub seed_width: f64,
}

impl Default for InitialData {
    fn default() -> Self {
        Self { a0: 0.05, c0: 0.0, c_max: 1.0, seed_center: 3.0, seed_width: 1.0 }
    }
}

impl InitialData {
    /// Data whose bound-state variable is `xi0 = a0 sqrt(omega / 2)`.
    pub fn from_xi(xi0: f64, omega: f64) -> Self {
        Self { a0: xi0 * (2.0 / omega).sqrt(), ..Self::default() }
    }

    pub fn build(&self, model: &Model) -> Result<SimState> {
        if !(self.a0.is_finite() && self.c0.is_finite() && self.c_max >= 0.0) {
            return Err(Error::InvalidArgument("initial amplitudes must be finite".into()));
        }
        if self.c0.abs() > self.c_max * self.a0.abs() {
            return Err(Error::InvalidArgument(format!(
                "continuous seed {} exceeds {} times the bound-state amplitude {}",
                self.c0, self.c_max, self.a0
            )));
        }
        let mut w: Vec<f64> = model.phi().iter().map(|p| self.a0 * p).collect();
        if self.c0 != 0.0 {
            if !(self.seed_width > 0.0) {
                return Err(Error::InvalidArgument("seed width must be positive".into()));
            }
            let seed: Vec<f64> = model.grid().nodes().map(|r| r * (-((r - self.seed_center) / self.seed_width).powi(2)).exp()).collect();
            let pc = model.continuous_part(&seed);
            let norm = (pc.iter().map(|x| x * x).sum::<f64>() * model.grid().dr()).sqrt();
            for (x, s) in w.iter_mut().zip(&pc) {
                *x += self.c0 * s / norm;
            }
        }
        Ok(SimState { w, w_t: vec![0.0; model.len()], t: 0.0 })
    }
}

/// `r_max` minus the support radius of the state (where `|w|, |w_t|` drop under `1e-8` of their peak).
pub fn reflection_time(grid: &RadialGrid, state: &SimState) -> f64 {
    let peak = state.w.iter().chain(&state.w_t).fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return grid.r_max();
    }
    let last = (0..state.len()).rev().find(|&i| state.w[i].abs().max(state.w_t[i].abs()) > 1e-8 * peak).unwrap_or(0);
    grid.r_max() - grid.r(last)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lambda: f64,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Steps between recorded samples.
    pub stride: usize,
    pub initial: InitialData,
    pub blowup_bound: f64,
    /// Permit horizons beyond the reflection time.
    pub allow_boundary: bool,
    /// Keep a copy of every recorded state.
    pub keep_states: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            dt: 1e-2,
            horizon: 10.0,
            scheme: Scheme::Strang,
            stride: 10,
            initial: InitialData::default(),
            blowup_bound: DEFAULT_BLOWUP_BOUND,
            allow_boundary: false,
            keep_states: false,
        }
    }
}

/// One recorded sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub xi: Complex64,
    /// Unwrapped phase with the linear rotation removed: `xi = |xi| exp(-i (omega t + theta))`.
    pub theta: f64,
    /// `||P_c u||_{L^8}`, which is `eta = u - R cos(omega t + theta) phi`.
    pub eta_l8: f64,
    pub energy: f64,
    pub pc_l2: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub omega: f64,
    pub lambda: f64,
    pub t_reflect: f64,
    pub rows: Vec<TrajectoryRow>,
    pub states: Vec<SimState>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str = "t,abs_xi,theta,eta_L8,energy,Pc_L2";

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(w, "{:.9e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}", r.t, r.xi.norm(), r.theta, r.eta_l8, r.energy, r.pc_l2)?;
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn abs_xi(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.xi.norm()).collect()
    }
}

/// Two-column `r w` snapshot.
pub fn write_snapshot(state: &SimState, grid: &RadialGrid, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "# t = {:.9e}", state.t)?;
    for (r, x) in grid.nodes().zip(&state.w) {
        writeln!(w, "{r:.9e} {x:.15e}")?;
    }
    Ok(())
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

struct Recorder<'m, 'a> {
    model: &'m Model<'a>,
    lambda: f64,
    last_raw: Option<f64>,
    theta: f64,
}

impl Recorder<'_, '_> {
    fn row(&mut self, s: &SimState) -> TrajectoryRow {
        let (omega, dr) = (self.model.omega(), self.model.grid().dr());
        let xi = bound_mode(&s.w, &s.w_t, self.model.phi(), omega, dr);
        let raw = -xi.arg() - omega * s.t;
        self.theta = match self.last_raw {
            Some(prev) => self.theta + wrap(raw - prev),
            None => raw,
        };
        self.last_raw = Some(raw);
        let eta = GridFunction::from_real(&self.model.continuous_part(&s.w));
        let g = self.model.grid();
        TrajectoryRow {
            t: s.t,
            xi,
            theta: self.theta,
            eta_l8: lp_norm(&eta, 8.0, g),
            energy: energy(s, self.model, self.lambda),
            pc_l2: lp_norm(&eta, 2.0, g),
        }
    }
}

/// Integrate from the configured initial data, recording every `stride` steps.
pub fn simulate(model: &Model, cfg: &SimConfig) -> Result<Trajectory> {
    if !(cfg.horizon.is_finite() && cfg.horizon >= 0.0) || cfg.stride == 0 || !(cfg.dt > 0.0) {
        return Err(Error::InvalidArgument("horizon must be non-negative, dt positive and stride at least 1".into()));
    }
    let mut state = cfg.initial.build(model)?;
    let t_reflect = reflection_time(model.grid(), &state);
    if cfg.horizon > t_reflect && !cfg.allow_boundary {
        return Err(Error::InvalidArgument(format!(
            "horizon {} exceeds the reflection time {t_reflect:.3}; enlarge the box or allow boundary effects",
            cfg.horizon
        )));
    }
    let integ = Integrator::new(model, cfg.lambda, cfg.dt, cfg.scheme)?.with_blowup_bound(cfg.blowup_bound);
    let total = (cfg.horizon / cfg.dt).round() as usize;
    let mut rec = Recorder { model, lambda: cfg.lambda, last_raw: None, theta: 0.0 };
    let mut rows = vec![rec.row(&state)];
    let mut states = if cfg.keep_states { vec![state.clone()] } else { Vec::new() };
    let mut done = 0;
    while done < total {
        let k = cfg.stride.min(total - done);
        integ.advance(&mut state, k)?;
        done += k;
        state.t = done as f64 * cfg.dt;
        rows.push(rec.row(&state));
        if cfg.keep_states {
            states.push(state.clone());
        }
    }
    Ok(Trajectory { omega: model.omega(), lambda: cfg.lambda, t_reflect, rows, states })
}
