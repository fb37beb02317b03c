use crate::error::{Error, Result};
use crate::numerics::{Dopri5, OdeOptions};

/// `|xi0| (1 + 4N gamma |xi0|^{4N} t)^{-1/(4N)}`.
pub fn closed_form_abs_xi(xi0: f64, gamma: f64, order: usize, t: f64) -> f64 {
    let n4 = 4.0 * order as f64;
    xi0 * (1.0 + n4 * gamma * xi0.powf(n4) * t).powf(-1.0 / n4)
}

/// Sampled solution of the reduced law for `r = |xi|^2`.
#[derive(Debug, Clone)]
pub struct EnvelopeSolution {
    pub times: Vec<f64>,
    pub abs_xi: Vec<f64>,
    /// Set when the forcing drove `r` negative and it was clipped to zero.
    pub clipped: bool,
}

/// Integrate `r' = -2 gamma r^{2N+1} + F(t, r)` with `r(0) = xi0^2` and report `|xi| = sqrt r` at
/// `times`. `F` stands for `2 Re(xi-bar R_xi)`.
pub fn envelope_ode_solve(
    xi0: f64,
    gamma: f64,
    order: usize,
    times: &[f64],
    forcing: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<EnvelopeSolution> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {gamma}")));
    }
    if order == 0 || !(xi0 >= 0.0 && xi0.is_finite()) {
        return Err(Error::InvalidArgument("need N >= 1 and a finite |xi0| >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("sample times must be non-negative and non-decreasing".into()));
    }
    let p = 2 * order as i32 + 1;
    let r0 = xi0 * xi0;
    let opts = OdeOptions { rtol: 1e-13, atol: 1e-300_f64.max(r0 * 1e-16), h_init: 1e-3, ..OdeOptions::default() };
    let mut ode = Dopri5::new(1, opts);
    let mut y = [r0];
    let mut t = 0.0;
    let mut clipped = false;
    let mut abs_xi = Vec::with_capacity(times.len());
    for &ts in times {
        if ts > t {
            let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
                let r = y[0].max(0.0);
                dy[0] = -2.0 * gamma * r.powi(p) + forcing.map_or(0.0, |f| f(s, r));
            };
            ode.integrate(t, ts, &mut y, rhs, |_, _| Ok(()))?;
            t = ts;
        }
        if y[0] < 0.0 {
            y[0] = 0.0;
            clipped = true;
        }
        abs_xi.push(y[0].sqrt());
    }
    Ok(EnvelopeSolution { times: times.to_vec(), abs_xi, clipped })
}

/// Closed-form barriers for `y = |xi|^{4N}` under a forcing with
/// `|R_xi| <= Q0 (1 + 4N gamma r0 t)^{-(4N+1)/(4N) - delta}`:
/// `h = g^{-1}(r0 + C0 g^{-delta/2})`, `h~ = g^{-1}(r0 - D g^{-delta})`, `g = 1 + 4N gamma r0 t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPair {
    pub r0: f64,
    pub gamma: f64,
    pub order: usize,
    pub q0: f64,
    pub delta: f64,
    pub c0: f64,
    pub d: f64,
}

impl BarrierPair {
    fn g(&self, t: f64) -> f64 {
        1.0 + 4.0 * self.order as f64 * self.gamma * self.r0 * t
    }

    pub fn upper(&self, t: f64) -> f64 {
        let g = self.g(t);
        (self.r0 + self.c0 * g.powf(-0.5 * self.delta)) / g
    }

    pub fn lower(&self, t: f64) -> f64 {
        let g = self.g(t);
        (self.r0 - self.d * g.powf(-self.delta)) / g
    }

    /// Bound on `|R_xi(t)|` assumed by the barriers.
    pub fn forcing_bound(&self, t: f64) -> f64 {
        let n4 = 4.0 * self.order as f64;
        self.q0 * self.g(t).powf(-(n4 + 1.0) / n4 - self.delta)
    }
}

/// Barriers with the smallest `C0` satisfying `4N gamma C0^2 >= 8N Q0 (r0^a + C0^a)`,
/// `a = (4N-1)/(4N)`, and `D` the smaller root of `gamma D^2 - gamma r0 (1-delta) D + Q0 r0^a = 0`.
pub fn comparison_bounds(r0: f64, gamma: f64, order: usize, q0: f64, delta: f64) -> Result<BarrierPair> {
    if order == 0 || !(r0 > 0.0 && r0.is_finite()) || !(q0 >= 0.0 && q0.is_finite()) {
        return Err(Error::InvalidArgument("need N >= 1, r0 > 0 and Q0 >= 0".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {gamma}")));
    }
    if q0 == 0.0 {
        return Ok(BarrierPair { r0, gamma, order, q0, delta, c0: 0.0, d: 0.0 });
    }
    if gamma == 0.0 {
        return Err(Error::HypothesisViolated("no admissible C0 without damping (gamma = 0)".into()));
    }
    let n = order as f64;
    let a = (4.0 * n - 1.0) / (4.0 * n);
    let excess = |c: f64| 4.0 * n * gamma * c * c - 8.0 * n * q0 * (r0.powf(a) + c.powf(a));
    let mut hi = 1.0f64;
    while excess(hi) < 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::HypothesisViolated("no admissible C0".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let b = gamma * r0 * (1.0 - delta);
    let disc = b * b - 4.0 * gamma * q0 * r0.powf(a);
    if disc < 0.0 {
        return Err(Error::HypothesisViolated(format!(
            "Q0 = {q0:e} too large for the lower barrier (discriminant {disc:e})"
        )));
    }
    let d = 2.0 * q0 * r0.powf(a) / (b + disc.sqrt());
    Ok(BarrierPair { r0, gamma, order, q0, delta, c0: hi, d })
}

/// Forcing recovered from a sampled envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingEstimate {
    pub r0: f64,
    /// `|y' + 4N gamma y^2| / (4N y^{(4N-1)/(4N)})` at interior samples, `y = |xi|^{4N}`.
    pub r_xi: Vec<f64>,
    pub times: Vec<f64>,
    pub q0: f64,
}

/// Smallest `Q0` with `|R_xi(t)| <= Q0 g(t)^{-(4N+1)/(4N) - delta}` on the samples, where `R_xi`
/// is read off from centered differences of `|xi|^{4N}`.
pub fn measured_forcing(times: &[f64], abs_xi: &[f64], gamma: f64, order: usize, delta: f64) -> Result<ForcingEstimate> {
    if times.len() != abs_xi.len() || times.len() < 3 {
        return Err(Error::InvalidArgument("need at least three matching samples".into()));
    }
    if order == 0 || !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("need N >= 1 and gamma >= 0".into()));
    }
    let n4 = 4.0 * order as f64;
    let a = (n4 - 1.0) / n4;
    let y: Vec<f64> = abs_xi.iter().map(|v| v.powi(4 * order as i32)).collect();
    let r0 = y[0];
    if !(r0 > 0.0) {
        return Err(Error::InvalidArgument("initial amplitude must be positive".into()));
    }
    let mut r_xi = Vec::with_capacity(y.len() - 2);
    let mut ts = Vec::with_capacity(y.len() - 2);
    let mut q0 = 0.0f64;
    for i in 1..y.len() - 1 {
        let h = times[i + 1] - times[i - 1];
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("times must increase".into()));
        }
        let dy = (y[i + 1] - y[i - 1]) / h;
        let r = (dy + n4 * gamma * y[i] * y[i]).abs() / (n4 * y[i].powf(a));
        let g = 1.0 + n4 * gamma * r0 * times[i];
        q0 = q0.max(r * g.powf((n4 + 1.0) / n4 + delta));
        r_xi.push(r);
        ts.push(times[i]);
    }
    Ok(ForcingEstimate { r0, r_xi, times: ts, q0 })
}
