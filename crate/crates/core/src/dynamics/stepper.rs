use crate::error::{Error, Result};
use crate::spectral::SpectralData;

use super::model::{Model, Scheme, SimState};

/// Default sup-norm guard on `w`.
pub const DEFAULT_BLOWUP_BOUND: f64 = 1e3;

fn rotate(c: &mut [f64], d: &mut [f64], freqs: &[f64], tau: f64) {
    for ((a, b), &x) in c.iter_mut().zip(d.iter_mut()).zip(freqs) {
        let (s, co) = (x * tau).sin_cos();
        let (c0, d0) = (*a, *b);
        *a = c0 * co + d0 * s / x;
        *b = -c0 * x * s + d0 * co;
    }
}

/// Exact linear flow `u(tau) = cos(B tau) u + sin(B tau)/B u_t` in the eigenbasis.
pub fn linear_propagate(spec: &SpectralData, state: &SimState, tau: f64) -> SimState {
    let mut c = spec.coefficients_real(&state.w);
    let mut d = spec.coefficients_real(&state.w_t);
    rotate(&mut c, &mut d, spec.frequencies(), tau);
    SimState { w: spec.synthesize_real(&c), w_t: spec.synthesize_real(&d), t: state.t + tau }
}

/// Fixed-step integrator for `w_tt = -H w + lambda w^3 / r^2`. A negative `dt` runs backwards.
#[derive(Debug, Clone)]
pub struct Integrator<'m, 'a> {
    model: &'m Model<'a>,
    lambda: f64,
    dt: f64,
    scheme: Scheme,
    blowup_bound: f64,
}

impl<'m, 'a> Integrator<'m, 'a> {
    /// Rejects `|dt| max sqrt(E_k) > 1` and a Strang scheme without an eigenbasis.
    pub fn new(model: &'m Model<'a>, lambda: f64, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be finite and nonzero, got {dt}")));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument("lambda must be finite".into()));
        }
        let margin = dt.abs() * model.max_frequency();
        if margin > 1.0 {
            return Err(Error::InvalidArgument(format!("stability margin violated: dt * max sqrt(E) = {margin:.3} > 1")));
        }
        if scheme == Scheme::Strang && model.spectral_data().is_none() {
            return Err(Error::InvalidArgument("the strang scheme needs the full eigenbasis".into()));
        }
        Ok(Self { model, lambda, dt, scheme, blowup_bound: DEFAULT_BLOWUP_BOUND })
    }

    pub fn with_blowup_bound(mut self, bound: f64) -> Self {
        self.blowup_bound = bound;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn guard(&self, w: &[f64], time: f64) -> Result<()> {
        let sup = w.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x.abs()) });
        if sup > self.blowup_bound {
            return Err(Error::BlowupDetected { time, sup, bound: self.blowup_bound });
        }
        Ok(())
    }

    pub fn advance(&self, state: &mut SimState, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        match self.scheme {
            Scheme::Strang => self.advance_strang(state, steps),
            Scheme::Leapfrog => self.advance_leapfrog(state, steps),
        }
    }

    fn advance_strang(&self, state: &mut SimState, steps: usize) -> Result<()> {
        let spec = self.model.spectral_data().expect("checked in new");
        let freqs = spec.frequencies();
        let dt = self.dt;
        let mut c = spec.coefficients_real(&state.w);
        let mut d = spec.coefficients_real(&state.w_t);
        rotate(&mut c, &mut d, freqs, 0.5 * dt);
        let inv_r2 = self.model.inv_r2();
        let mut kick = vec![0.0; state.len()];
        for s in 0..steps {
            if self.lambda != 0.0 {
                let w = spec.synthesize_real(&c);
                self.guard(&w, state.t + (s as f64 + 0.5) * dt)?;
                for ((k, x), r) in kick.iter_mut().zip(&w).zip(inv_r2) {
                    *k = dt * self.lambda * x * x * x * r;
                }
                for (dk, g) in d.iter_mut().zip(spec.coefficients_real(&kick)) {
                    *dk += g;
                }
            }
            rotate(&mut c, &mut d, freqs, if s + 1 == steps { 0.5 * dt } else { dt });
        }
        state.w = spec.synthesize_real(&c);
        state.w_t = spec.synthesize_real(&d);
        state.t += steps as f64 * dt;
        self.guard(&state.w, state.t)
    }

    fn advance_leapfrog(&self, state: &mut SimState, steps: usize) -> Result<()> {
        let dt = self.dt;
        let mut acc = vec![0.0; state.len()];
        self.model.force(&state.w, self.lambda, &mut acc);
        let t0 = state.t;
        for s in 0..steps {
            for ((w, v), a) in state.w.iter_mut().zip(state.w_t.iter_mut()).zip(&acc) {
                *v += 0.5 * dt * a;
                *w += dt * *v;
            }
            self.model.force(&state.w, self.lambda, &mut acc);
            for (v, a) in state.w_t.iter_mut().zip(&acc) {
                *v += 0.5 * dt * a;
            }
            state.t = t0 + (s + 1) as f64 * dt;
            if s % 64 == 63 || s + 1 == steps {
                self.guard(&state.w, state.t)?;
            }
        }
        Ok(())
    }
}

/// One step of size `dt`.
pub fn step_nlkg(state: &SimState, dt: f64, lambda: f64, model: &Model, scheme: Scheme) -> Result<SimState> {
    let mut next = state.clone();
    Integrator::new(model, lambda, dt, scheme)?.advance(&mut next, 1)?;
    Ok(next)
}
