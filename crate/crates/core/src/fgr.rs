//! Regularized resolvents, the spectral delta measure of `B`, and the golden-rule constants.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{extrapolate_to_zero, extrapolate_to_zero_c};
use crate::spectral::{self, tridiag, GridFunction, Part, PotentialSpec, RadialGrid, SpectralData};

/// Side from which the real axis is approached: the denominator is `sqrt(E_k) - Lambda -/+ i eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prescription {
    /// `(B - Lambda + i0)^{-1}`.
    PlusI0,
    /// `(B - Lambda - i0)^{-1}`.
    MinusI0,
}

impl Prescription {
    fn sign(self) -> f64 {
        match self {
            Prescription::PlusI0 => 1.0,
            Prescription::MinusI0 => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolventQuery {
    pub lambda: f64,
    pub prescription: Prescription,
    pub eps_ladder: Vec<f64>,
    pub target: GridFunction,
}

impl ResolventQuery {
    pub fn new(lambda: f64, prescription: Prescription, eps_ladder: Vec<f64>, target: GridFunction) -> Result<Self> {
        if eps_ladder.len() < 3 {
            return Err(Error::InvalidArgument("epsilon ladder needs at least three entries".into()));
        }
        if eps_ladder.iter().any(|&e| !(e > 0.0 && e.is_finite())) || eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("epsilon ladder must be positive and strictly decreasing".into()));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument("Lambda must be finite".into()));
        }
        target.check_finite()?;
        Ok(Self { lambda, prescription, eps_ladder, target })
    }
}

#[derive(Debug, Clone)]
pub struct ResolventResult {
    pub per_eps: Vec<GridFunction>,
    /// Richardson extrapolation of `per_eps` to `eps = 0`.
    pub limit: GridFunction,
    /// Set when `Lambda` sits on a box eigenvalue while the ladder bottoms out below the level spacing.
    pub ill_conditioned: bool,
}

/// `sum_{k not in D} <v_k, P_c target> v_k / (sqrt(E_k) - Lambda -/+ i eps)` for one `eps >= 0`.
pub fn resolve_at(spec: &SpectralData, lambda: f64, eps: f64, prescription: Prescription, target: &GridFunction) -> GridFunction {
    let shift = Complex64::new(-lambda, prescription.sign() * eps);
    spec.apply_multiplier(target, Part::Continuous, |_, x| (Complex64::new(x, 0.0) + shift).inv())
}

pub fn resolvent_apply(spec: &SpectralData, q: &ResolventQuery) -> ResolventResult {
    let per_eps: Vec<GridFunction> =
        q.eps_ladder.iter().map(|&e| resolve_at(spec, q.lambda, e, q.prescription, &q.target)).collect();
    let n = spec.len();
    let mut limit = GridFunction::zeros(n);
    let mut col = vec![Complex64::new(0.0, 0.0); per_eps.len()];
    for i in 0..n {
        for (c, g) in col.iter_mut().zip(&per_eps) {
            *c = g.values[i];
        }
        limit.values[i] = extrapolate_to_zero_c(&q.eps_ladder, &col);
    }
    let freqs = spec.frequencies();
    let near = (0..n).filter(|&k| !spec.is_discrete(k)).any(|k| (freqs[k] - q.lambda).abs() < 1e-9);
    let smallest = q.eps_ladder.last().copied().unwrap_or(0.0);
    let ill_conditioned = near && smallest < level_spacing(freqs, q.lambda);
    ResolventResult { per_eps, limit, ill_conditioned }
}

fn level_spacing(freqs: &[f64], lambda: f64) -> f64 {
    let j = freqs.partition_point(|&x| x < lambda).clamp(1, freqs.len() - 2);
    0.5 * (freqs[j + 1] - freqs[j - 1])
}

/// Ladders for the delta-measure estimates, in units of the local level spacing at `Lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaParams {
    pub kernel_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
}

impl Default for DeltaParams {
    fn default() -> Self {
        Self { kernel_ladder: vec![8.0, 4.0, 2.0], eps_ladder: vec![8.0, 4.0, 2.0] }
    }
}

/// Spectral measure of a profile with respect to the continuous part of `B`:
/// point masses `|<v_k, Phi>|^2` at `sqrt(E_k)`.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    pub freqs: Vec<f64>,
    pub weights: Vec<f64>,
    pub mass: f64,
}

impl SpectralMeasure {
    pub fn from_spectrum(spec: &SpectralData, phi: &GridFunction) -> Self {
        let c = spec.coefficients(phi);
        let (freqs, weights) = (0..spec.len())
            .filter(|&k| !spec.is_discrete(k))
            .map(|k| (spec.frequencies()[k], c[k].norm_sqr()))
            .unzip();
        Self { freqs, weights, mass: spec.mass() }
    }

    /// Build the measure on a grid too large for a full eigenbasis: the QL rotations are
    /// accumulated on `Phi` alone, which costs O(n^2).
    pub fn from_operator(grid: &RadialGrid, pot: &PotentialSpec, phi: &GridFunction) -> Result<Self> {
        let h = spectral::assemble_hamiltonian(grid, pot);
        let m2 = pot.mass * pot.mass;
        let count = h.count_below(m2);
        if count != 1 {
            let eigenvalues = (0..count).map(|k| h.bisect(k)).collect();
            return Err(Error::SpectralAssumption { count, eigenvalues });
        }
        let n = grid.len();
        let mut rows = vec![0.0; 2 * n];
        for (i, z) in phi.values.iter().enumerate() {
            rows[2 * i] = z.re;
            rows[2 * i + 1] = z.im;
        }
        let vals = tridiag::ql_implicit(&h, &mut rows, 2)?;
        let s = grid.dr().sqrt();
        let freqs = vals[1..].iter().map(|e| e.sqrt()).collect();
        let weights = (1..n).map(|k| (rows[2 * k].powi(2) + rows[2 * k + 1].powi(2)) * s * s).collect();
        Ok(Self { freqs, weights, mass: pot.mass })
    }

    pub fn spacing(&self, lambda: f64) -> f64 {
        level_spacing(&self.freqs, lambda)
    }

    fn local_spacings(&self) -> Vec<f64> {
        let x = &self.freqs;
        let n = x.len();
        (0..n)
            .map(|j| match j {
                0 => x[1] - x[0],
                _ if j == n - 1 => x[n - 1] - x[n - 2],
                _ => 0.5 * (x[j + 1] - x[j - 1]),
            })
            .collect()
    }

    /// Gaussian-weighted average of the box densities `w_j / Delta_j` around `Lambda`.
    pub fn kernel_density(&self, lambda: f64, sigma: f64) -> f64 {
        let spacings = self.local_spacings();
        let (mut num, mut den) = (0.0, 0.0);
        for ((x, w), d) in self.freqs.iter().zip(&self.weights).zip(&spacings) {
            let g = (-0.5 * ((x - lambda) / sigma).powi(2)).exp();
            num += g * w / d;
            den += g;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// `pi^{-1} Im <Phi, (B - Lambda - i eps)^{-1} Phi-bar>`.
    pub fn lorentz_density(&self, lambda: f64, eps: f64) -> f64 {
        self.freqs.iter().zip(&self.weights).map(|(x, w)| w * eps / ((x - lambda).powi(2) + eps * eps)).sum::<f64>() / PI
    }

    /// Both estimates of `<Phi, delta(B - Lambda) Phi-bar>`.
    pub fn delta(&self, lambda: f64, params: &DeltaParams) -> DeltaEstimate {
        if lambda <= self.mass || self.weights.iter().all(|&w| w == 0.0) {
            return DeltaEstimate { kernel: 0.0, resolvent: 0.0, below_threshold: lambda <= self.mass };
        }
        let d = self.spacing(lambda);
        let sig: Vec<f64> = params.kernel_ladder.iter().map(|f| (f * d).powi(2)).collect();
        let kv: Vec<f64> = params.kernel_ladder.iter().map(|f| self.kernel_density(lambda, f * d)).collect();
        let eps: Vec<f64> = params.eps_ladder.iter().map(|f| f * d).collect();
        let lv: Vec<f64> = eps.iter().map(|&e| self.lorentz_density(lambda, e)).collect();
        DeltaEstimate { kernel: extrapolate_to_zero(&sig, &kv), resolvent: extrapolate_to_zero(&eps, &lv), below_threshold: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    /// Kernel-smoothed density, extrapolated in `sigma^2`.
    pub kernel: f64,
    /// Imaginary part of the regularized resolvent over `pi`, extrapolated in `eps`.
    pub resolvent: f64,
    pub below_threshold: bool,
}

impl DeltaEstimate {
    pub fn spread(&self) -> f64 {
        let scale = self.kernel.abs().max(self.resolvent.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.kernel - self.resolvent).abs() / scale
        }
    }
}

/// `<Phi, delta(B - Lambda) Phi-bar>`; the resolvent cross-check goes through [`resolvent_apply`].
pub fn spectral_delta(spec: &SpectralData, phi: &GridFunction, lambda: f64, params: &DeltaParams) -> Result<DeltaEstimate> {
    phi.check_finite()?;
    let measure = SpectralMeasure::from_spectrum(spec, phi);
    let mut est = measure.delta(lambda, params);
    if est.below_threshold || (est.kernel == 0.0 && est.resolvent == 0.0) {
        return Ok(est);
    }
    let d = measure.spacing(lambda);
    let ladder: Vec<f64> = params.eps_ladder.iter().map(|f| f * d).collect();
    let q = ResolventQuery::new(lambda, Prescription::MinusI0, ladder.clone(), phi.conj())?;
    let res = resolvent_apply(spec, &q);
    let dr = spec.grid().dr();
    let vals: Vec<f64> = res.per_eps.iter().map(|g| phi.pair(g, dr).im / PI).collect();
    est.resolvent = extrapolate_to_zero(&ladder, &vals);
    Ok(est)
}

/// Row of the golden-rule CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRuleReport {
    pub order: usize,
    pub omega: f64,
    pub mass: f64,
    pub lambda: f64,
    pub gamma_kernel: f64,
    pub gamma_resolvent: f64,
    /// Mean of the two estimates.
    pub gamma: f64,
    pub spread: f64,
    pub params: DeltaParams,
}

impl GoldenRuleReport {
    pub const CSV_HEADER: &'static str = "N,omega,m,Lambda,gamma_kernel,gamma_resolvent,gamma,spread";

    /// Relative disagreement above 5% between the two methods.
    pub fn flagged(&self) -> bool {
        self.spread > 0.05
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
            self.order, self.omega, self.mass, self.lambda, self.gamma_kernel, self.gamma_resolvent, self.gamma, self.spread
        )
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(w, "{}", self.csv_row())
    }
}

/// Relative tolerance on `|m - (2N+1) omega|` below which the resonance counts as borderline.
pub const BORDERLINE_TOL: f64 = 1e-6;

/// Check `(2N-1) omega < m < (2N+1) omega`, rejecting the borderline `m = (2N+1) omega`.
pub fn check_window(omega: f64, mass: f64, order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidArgument("N must be positive".into()));
    }
    let upper = (2 * order + 1) as f64 * omega;
    let lower = (2 * order - 1) as f64 * omega;
    let gap = (mass - upper).abs();
    if gap < BORDERLINE_TOL * mass {
        return Err(Error::BorderlineResonance { omega, mass, order, gap });
    }
    if !(lower < mass && mass < upper) {
        return Err(Error::FrequencyWindow { omega, mass, order });
    }
    Ok(())
}

/// The unique `N` with `(2N-1) omega < m < (2N+1) omega`.
pub fn window_order(omega: f64, mass: f64) -> Result<usize> {
    let x = 0.5 * (mass / omega - 1.0);
    let order = x.ceil().max(1.0) as usize;
    check_window(omega, mass, order).map(|_| order)
}

/// Golden-rule constant `gamma = (2N+1) pi <Phi, delta(B - (2N+1) omega) Phi-bar>`, which makes
/// `d|xi|^2/dt = -2 gamma |xi|^{4N+2}` for the resonant normal-form term `xi-bar^{2N+1} <Phi, f>`.
pub fn gamma_coefficient(spec: &SpectralData, phi: &GridFunction, order: usize, params: &DeltaParams) -> Result<GoldenRuleReport> {
    check_window(spec.omega(), spec.mass(), order)?;
    let lambda = (2 * order + 1) as f64 * spec.omega();
    let est = spectral_delta(spec, phi, lambda, params)?;
    Ok(report(order, spec.omega(), spec.mass(), lambda, est, params))
}

/// Same as [`gamma_coefficient`] from a precomputed measure (large boxes).
pub fn gamma_from_measure(measure: &SpectralMeasure, omega: f64, order: usize, params: &DeltaParams) -> Result<GoldenRuleReport> {
    check_window(omega, measure.mass, order)?;
    let lambda = (2 * order + 1) as f64 * omega;
    let est = measure.delta(lambda, params);
    Ok(report(order, omega, measure.mass, lambda, est, params))
}

/// [`gamma_from_measure`] for a profile computed on a small box, zero-padded onto a box of radius
/// `r_max` with the same spacing. `Phi` must be localized well inside the small box.
pub fn gamma_padded(
    phi: &GridFunction,
    pot: &PotentialSpec,
    dr: f64,
    omega: f64,
    order: usize,
    r_max: f64,
    params: &DeltaParams,
) -> Result<GoldenRuleReport> {
    let grid = RadialGrid::with_spacing(r_max, dr)?;
    if grid.len() < phi.len() {
        return Err(Error::InvalidArgument("padding box is smaller than the profile".into()));
    }
    let mut values = phi.values.clone();
    values.resize(grid.len(), Complex64::new(0.0, 0.0));
    let measure = SpectralMeasure::from_operator(&grid, pot, &GridFunction { values })?;
    gamma_from_measure(&measure, omega, order, params)
}

fn report(order: usize, omega: f64, mass: f64, lambda: f64, est: DeltaEstimate, params: &DeltaParams) -> GoldenRuleReport {
    let f = (2 * order + 1) as f64 * PI;
    let gamma_kernel = f * est.kernel;
    let gamma_resolvent = f * est.resolvent;
    GoldenRuleReport {
        order,
        omega,
        mass,
        lambda,
        gamma_kernel,
        gamma_resolvent,
        gamma: 0.5 * (gamma_kernel + gamma_resolvent),
        spread: est.spread(),
        params: params.clone(),
    }
}

/// `phi^3` of the 3D profile expressed in the stored `w = r u` form: `phi_w^3 / r^2`.
pub fn cubic_source(spec: &SpectralData) -> GridFunction {
    let g = spec.grid();
    GridFunction { values: spec.phi().iter().enumerate().map(|(i, p)| Complex64::new(p * p * p / (g.r(i) * g.r(i)), 0.0)).collect() }
}

/// `Gamma = (pi / 3 omega) <P_c phi^3, delta(B - 3 omega) P_c phi^3>`.
pub fn gamma_sw(spec: &SpectralData, params: &DeltaParams) -> Result<f64> {
    let omega = spec.omega();
    if 3.0 * omega <= spec.mass() {
        return Err(Error::WeakResonance { three_omega: 3.0 * omega, mass: spec.mass() });
    }
    let src = spec.project(&cubic_source(spec), Part::Continuous);
    let est = spectral_delta(spec, &src, 3.0 * omega, params)?;
    Ok(PI / (3.0 * omega) * est.kernel.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Potential, PotentialSpec, RadialGrid};

    fn spec(depth: f64, r_max: f64, n: usize) -> SpectralData {
        let g = RadialGrid::new(r_max, n).unwrap();
        SpectralData::new(&g, &PotentialSpec::new(Potential::Gaussian { depth, width: 1.0 }, 1.0).unwrap()).unwrap()
    }

    fn bump(s: &SpectralData) -> GridFunction {
        GridFunction::from_fn(s.grid(), |r| Complex64::new(r * (-(r - 2.0).powi(2)).exp(), 0.0))
    }

    #[test]
    fn nonsingular_resolvent_inverts() {
        let s = spec(6.0, 30.0, 300);
        let v = bump(&s);
        let x = resolve_at(&s, 0.0, 0.0, Prescription::MinusI0, &v);
        let bx = s.apply_b_power(1.0, &x, Part::All).unwrap();
        let pc = s.project(&v, Part::Continuous);
        assert!(bx.sub(&pc).norm(s.grid().dr()) < 1e-9 * pc.norm(s.grid().dr()));
        let lam = 0.5 * s.mass();
        let y = resolve_at(&s, lam, 0.0, Prescription::PlusI0, &v);
        let res = s.apply_b_power(1.0, &y, Part::All).unwrap().sub(&y.scale(lam.into())).sub(&pc);
        assert!(res.norm(s.grid().dr()) < 1e-9 * pc.norm(s.grid().dr()));
    }

    #[test]
    fn prescriptions_are_conjugate_on_real_targets() {
        let s = spec(6.0, 30.0, 300);
        let v = bump(&s);
        let q = |p| ResolventQuery::new(1.4, p, vec![0.4, 0.2, 0.1], v.clone()).unwrap();
        let a = resolvent_apply(&s, &q(Prescription::PlusI0));
        let b = resolvent_apply(&s, &q(Prescription::MinusI0));
        assert!(a.limit.sub(&b.limit.conj()).max_abs() < 1e-12 * a.limit.max_abs());
    }

    #[test]
    fn query_validation() {
        let v = GridFunction::zeros(20);
        assert!(ResolventQuery::new(1.0, Prescription::MinusI0, vec![0.1, 0.2, 0.05], v.clone()).is_err());
        assert!(ResolventQuery::new(1.0, Prescription::MinusI0, vec![0.2, 0.1], v.clone()).is_err());
        assert!(ResolventQuery::new(1.0, Prescription::MinusI0, vec![0.3, 0.2, 0.1], v).is_ok());
    }

    #[test]
    fn delta_vanishes_below_threshold_and_for_zero() {
        let s = spec(6.0, 30.0, 300);
        let p = DeltaParams::default();
        let e = spectral_delta(&s, &bump(&s), 0.5 * s.mass(), &p).unwrap();
        assert_eq!((e.kernel, e.resolvent, e.below_threshold), (0.0, 0.0, true));
        let z = spectral_delta(&s, &GridFunction::zeros(s.len()), 1.5, &p).unwrap();
        assert_eq!((z.kernel, z.resolvent), (0.0, 0.0));
    }

    #[test]
    fn single_mode_gives_local_density_of_states() {
        // A box eigenvector carries unit weight spread over its spectral cell.
        let s = spec(6.0, 40.0, 400);
        let k = 60;
        let v = GridFunction::from_real(s.vector(k));
        let x = s.frequencies();
        let delta_k = 0.5 * (x[k + 1] - x[k - 1]);
        let params = DeltaParams { kernel_ladder: vec![0.5, 0.25, 0.125], eps_ladder: vec![8.0, 4.0, 2.0] };
        let e = spectral_delta(&s, &v, x[k], &params).unwrap();
        assert!((e.kernel * delta_k - 1.0).abs() < 0.1, "{}", e.kernel * delta_k);
    }

    #[test]
    fn plemelj_consistency_and_scaling() {
        let s = spec(6.0, 60.0, 599);
        let src = s.project(&cubic_source(&s), Part::Continuous);
        let phi = s.apply_b_power(-0.5, &src, Part::Continuous).unwrap();
        let p = DeltaParams::default();
        let r = gamma_coefficient(&s, &phi, 1, &p).unwrap();
        assert!(r.spread < 0.05, "{r:?}");
        assert!(r.gamma > 0.0);
        let c = Complex64::new(0.3, -1.7);
        let r2 = gamma_coefficient(&s, &phi.scale(c), 1, &p).unwrap();
        assert!((r2.gamma - c.norm_sqr() * r.gamma).abs() < 1e-10 * r2.gamma);
    }

    #[test]
    fn windows() {
        assert_eq!(window_order(0.4, 1.0).unwrap(), 1);
        assert_eq!(window_order(0.27, 1.0).unwrap(), 2);
        assert!(matches!(check_window(1.0 / 3.0, 1.0, 1), Err(Error::BorderlineResonance { .. })));
        assert!(matches!(check_window(0.27, 1.0, 1), Err(Error::FrequencyWindow { .. })));
    }

    #[test]
    fn large_box_measure_matches_full_basis() {
        let s = spec(6.0, 30.0, 299);
        let phi = s.project(&cubic_source(&s), Part::Continuous);
        let a = SpectralMeasure::from_spectrum(&s, &phi);
        let pot = PotentialSpec::new(Potential::Gaussian { depth: 6.0, width: 1.0 }, 1.0).unwrap();
        let b = SpectralMeasure::from_operator(s.grid(), &pot, &phi).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-12 * a.weights.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn csv_row_shape() {
        let s = spec(6.0, 30.0, 300);
        let r = gamma_coefficient(&s, &GridFunction::zeros(s.len()), 1, &DeltaParams::default()).unwrap();
        assert_eq!(r.gamma, 0.0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(GoldenRuleReport::CSV_HEADER));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 8);
    }
}
