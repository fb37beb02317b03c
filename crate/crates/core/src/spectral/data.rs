use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::tridiag::{self, SymTridiag};
use crate::spectral::{GridFunction, PotentialSpec, RadialGrid};

/// Spectral subset selected by projections and functional calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    All,
    Discrete,
    Continuous,
}

/// Finite-difference `H = -d^2/dr^2 + m^2 + V(r)` with Dirichlet ends.
pub fn assemble_hamiltonian(grid: &RadialGrid, pot: &PotentialSpec) -> SymTridiag {
    let h2 = 1.0 / (grid.dr() * grid.dr());
    let m2 = pot.mass * pot.mass;
    let diag = pot.sample(grid).into_iter().map(|v| 2.0 * h2 + m2 + v).collect();
    SymTridiag { diag, off: vec![-h2; grid.len() - 1] }
}

/// Lowest mode of `H` obtained without the full eigenbasis.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub omega: f64,
    /// Normalized with `sum phi^2 dr = 1`, `phi(r_1) > 0`.
    pub phi: Vec<f64>,
}

/// Bound state via Sturm bisection and inverse iteration; fails unless exactly one
/// eigenvalue lies below `m^2`.
pub fn bound_state(grid: &RadialGrid, pot: &PotentialSpec) -> Result<BoundState> {
    let h = assemble_hamiltonian(grid, pot);
    let m2 = pot.mass * pot.mass;
    let count = h.count_below(m2);
    if count != 1 {
        let eigenvalues = (0..count).map(|k| h.bisect(k)).collect();
        return Err(Error::SpectralAssumption { count, eigenvalues });
    }
    let e0 = h.bisect(0);
    if e0 <= 0.0 {
        return Err(Error::SpectralAssumption { count, eigenvalues: vec![e0] });
    }
    let mut phi = h.inverse_iteration(e0);
    let s = grid.dr().sqrt().recip() * if phi[0] < 0.0 { -1.0 } else { 1.0 };
    phi.iter_mut().for_each(|v| *v *= s);
    Ok(BoundState { omega: e0.sqrt(), phi })
}

/// Full eigendecomposition of the discretized operator with the unique bound state singled out.
#[derive(Debug, Clone)]
pub struct SpectralData {
    grid: RadialGrid,
    mass: f64,
    eigenvalues: Vec<f64>,
    sqrt_e: Vec<f64>,
    /// Column-major, column `k` is `v_k` with `sum v_k^2 dr = 1`.
    vectors: Vec<f64>,
    bound: usize,
    hamiltonian: SymTridiag,
}

impl SpectralData {
    pub fn new(grid: &RadialGrid, pot: &PotentialSpec) -> Result<Self> {
        let h = assemble_hamiltonian(grid, pot);
        Self::eigendecompose(grid, h, pot.mass)
    }

    pub fn eigendecompose(grid: &RadialGrid, h: SymTridiag, mass: f64) -> Result<Self> {
        let n = grid.len();
        if h.len() != n {
            return Err(Error::InvalidArgument("operator size does not match grid".into()));
        }
        let (eigenvalues, mut vectors) = tridiag::eigensystem(&h)?;
        let m2 = mass * mass;
        let below: Vec<f64> = eigenvalues.iter().copied().filter(|&e| e < m2).collect();
        if below.len() != 1 || below[0] <= 0.0 {
            return Err(Error::SpectralAssumption { count: below.len(), eigenvalues: below });
        }
        let s = grid.dr().sqrt().recip();
        for k in 0..n {
            let col = &mut vectors[k * n..(k + 1) * n];
            let sign = if col[0] < 0.0 { -s } else { s };
            col.iter_mut().for_each(|v| *v *= sign);
        }
        let sqrt_e = eigenvalues.iter().map(|e| e.max(0.0).sqrt()).collect();
        Ok(Self { grid: grid.clone(), mass, eigenvalues, sqrt_e, vectors, bound: 0, hamiltonian: h })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hamiltonian(&self) -> &SymTridiag {
        &self.hamiltonian
    }

    pub fn omega(&self) -> f64 {
        self.sqrt_e[self.bound]
    }

    pub fn bound_index(&self) -> usize {
        self.bound
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `sqrt(E_k)`, the spectrum of `B`.
    pub fn frequencies(&self) -> &[f64] {
        &self.sqrt_e
    }

    pub fn is_discrete(&self, k: usize) -> bool {
        k == self.bound
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.len();
        &self.vectors[k * n..(k + 1) * n]
    }

    pub fn phi(&self) -> &[f64] {
        self.vector(self.bound)
    }

    pub fn phi_function(&self) -> GridFunction {
        GridFunction::from_real(self.phi())
    }

    /// Expansion coefficients `<v_k, x>` of a real profile.
    pub fn coefficients_real(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let dr = self.grid.dr();
        (0..n).map(|k| self.vector(k).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() * dr).collect()
    }

    /// Expansion coefficients `<v_k, x>` of a complex profile.
    pub fn coefficients(&self, x: &GridFunction) -> Vec<Complex64> {
        let n = self.len();
        let dr = self.grid.dr();
        (0..n)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (a, z) in self.vector(k).iter().zip(&x.values) {
                    re += a * z.re;
                    im += a * z.im;
                }
                Complex64::new(re * dr, im * dr)
            })
            .collect()
    }

    pub fn synthesize_real(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (k, &ck) in c.iter().enumerate() {
            if ck != 0.0 {
                for (o, v) in out.iter_mut().zip(self.vector(k)) {
                    *o += ck * v;
                }
            }
        }
        out
    }

    pub fn synthesize(&self, c: &[Complex64]) -> GridFunction {
        let n = self.len();
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (k, ck) in c.iter().enumerate() {
            if ck.re != 0.0 || ck.im != 0.0 {
                for ((r, i), v) in re.iter_mut().zip(im.iter_mut()).zip(self.vector(k)) {
                    *r += ck.re * v;
                    *i += ck.im * v;
                }
            }
        }
        GridFunction { values: re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect() }
    }

    fn selected(&self, k: usize, part: Part) -> bool {
        match part {
            Part::All => true,
            Part::Discrete => k == self.bound,
            Part::Continuous => k != self.bound,
        }
    }

    /// Apply the spectral multiplier `g(k, sqrt E_k)` on the selected part.
    pub fn apply_multiplier(&self, v: &GridFunction, part: Part, g: impl Fn(usize, f64) -> Complex64) -> GridFunction {
        let mut c = self.coefficients(v);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = if self.selected(k, part) { *ck * g(k, self.sqrt_e[k]) } else { Complex64::new(0.0, 0.0) };
        }
        self.synthesize(&c)
    }

    /// `B^s` restricted to the selected part: `sum_k E_k^{s/2} <v_k, v> v_k`.
    pub fn apply_b_power(&self, s: f64, v: &GridFunction, part: Part) -> Result<GridFunction> {
        v.check_finite()?;
        if v.len() != self.len() {
            return Err(Error::InvalidArgument("grid function length does not match spectrum".into()));
        }
        Ok(self.apply_multiplier(v, part, |k, _| Complex64::new(self.eigenvalues[k].powf(0.5 * s), 0.0)))
    }

    /// Real-valued `B^s` on the selected part.
    pub fn apply_b_power_real(&self, s: f64, v: &[f64], part: Part) -> Vec<f64> {
        let mut c = self.coefficients_real(v);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = if self.selected(k, part) { *ck * self.eigenvalues[k].powf(0.5 * s) } else { 0.0 };
        }
        self.synthesize_real(&c)
    }

    /// `P_d v = <phi, v> phi`, `P_c v = v - P_d v`.
    pub fn project(&self, v: &GridFunction, part: Part) -> GridFunction {
        let dr = self.grid.dr();
        let q: Complex64 = self.phi().iter().zip(&v.values).map(|(a, z)| z * a).sum::<Complex64>() * dr;
        match part {
            Part::All => v.clone(),
            Part::Discrete => GridFunction { values: self.phi().iter().map(|&a| q * a).collect() },
            Part::Continuous => {
                GridFunction { values: v.values.iter().zip(self.phi()).map(|(z, &a)| z - q * a).collect() }
            }
        }
    }

    pub fn project_real(&self, v: &[f64], part: Part) -> Vec<f64> {
        let dr = self.grid.dr();
        let q: f64 = self.phi().iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * dr;
        match part {
            Part::All => v.to_vec(),
            Part::Discrete => self.phi().iter().map(|a| q * a).collect(),
            Part::Continuous => v.iter().zip(self.phi()).map(|(b, a)| b - q * a).collect(),
        }
    }

    /// CSV dump with header `k,E_k,is_discrete`; `k` is 1-based.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "k,E_k,is_discrete")?;
        for (k, e) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{:.15e},{}", k + 1, e, self.is_discrete(k))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Potential;

    fn well() -> (RadialGrid, PotentialSpec) {
        let g = RadialGrid::new(20.0, 400).unwrap();
        let p = PotentialSpec::new(Potential::Gaussian { depth: 6.0, width: 1.0 }, 1.0).unwrap();
        (g, p)
    }

    #[test]
    fn stencil_entries() {
        let g = RadialGrid::new(10.0, 999).unwrap();
        let p = PotentialSpec::new(Potential::Zero, 1.0).unwrap();
        let h = assemble_hamiltonian(&g, &p);
        assert!(h.diag.iter().all(|&d| (d - 20001.0).abs() < 1e-6));
        assert!(h.off.iter().all(|&e| (e + 10000.0).abs() < 1e-6));
    }

    #[test]
    fn free_operator_is_rejected() {
        let g = RadialGrid::new(10.0, 100).unwrap();
        let p = PotentialSpec::new(Potential::Zero, 1.0).unwrap();
        match SpectralData::new(&g, &p) {
            Err(Error::SpectralAssumption { count: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(bound_state(&g, &p), Err(Error::SpectralAssumption { count: 0, .. })));
    }

    #[test]
    fn orthonormal_with_small_residuals() {
        let (g, p) = well();
        let s = SpectralData::new(&g, &p).unwrap();
        let dr = g.dr();
        let n = s.len();
        let mut y = vec![0.0; n];
        for k in (0..n).step_by(7) {
            let v = s.vector(k);
            s.hamiltonian().matvec(v, &mut y);
            let res = y.iter().zip(v).map(|(a, b)| (a - s.eigenvalues()[k] * b).powi(2)).sum::<f64>() * dr;
            assert!(res.sqrt() <= 1e-8 * s.eigenvalues()[k].abs());
            for j in (0..n).step_by(11) {
                let dot: f64 = v.iter().zip(s.vector(j)).map(|(a, b)| a * b).sum::<f64>() * dr;
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(s.phi()[0] > 0.0);
        assert!(s.omega() < s.mass());
    }

    #[test]
    fn functional_calculus() {
        let (g, p) = well();
        let s = SpectralData::new(&g, &p).unwrap();
        let phi = s.phi_function();
        let w2 = s.omega() * s.omega();
        let b2 = s.apply_b_power(2.0, &phi, Part::All).unwrap();
        assert!(b2.sub(&phi.scale(w2.into())).max_abs() < 1e-9 * phi.max_abs());

        let v = GridFunction::from_fn(&g, |r| Complex64::new(r * (-(r - 2.0).powi(2)).exp(), (0.5 * r).sin() * (-r).exp()));
        let id = s.apply_b_power(0.0, &v, Part::All).unwrap();
        assert!(id.sub(&v).max_abs() < 1e-12);
        let pc = s.project(&v, Part::Continuous);
        let half = s.apply_b_power(-0.5, &pc, Part::Continuous).unwrap();
        let back = s.apply_b_power(0.5, &half, Part::Continuous).unwrap();
        assert!(back.sub(&pc).max_abs() < 1e-12 * pc.max_abs().max(1.0));

        let mut hv = vec![0.0; s.len()];
        s.hamiltonian().matvec(&v.re(), &mut hv);
        let b2v = s.apply_b_power(2.0, &v, Part::All).unwrap().re();
        let scale = hv.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(hv.iter().zip(&b2v).all(|(a, b)| (a - b).abs() < 1e-9 * scale));
    }

    #[test]
    fn projections() {
        let (g, p) = well();
        let s = SpectralData::new(&g, &p).unwrap();
        let phi = s.phi_function();
        assert!(s.project(&phi, Part::Discrete).sub(&phi).max_abs() < 1e-12);
        assert!(s.project(&phi, Part::Continuous).max_abs() < 1e-12);
        let v = GridFunction::from_fn(&g, |r| Complex64::new((r * 1.3).cos() * r, 1.0 / (1.0 + r)));
        let pd = s.project(&v, Part::Discrete);
        let pc = s.project(&v, Part::Continuous);
        assert!(pd.add(&pc).sub(&v).max_abs() < 1e-12);
        assert!(s.project(&pc, Part::Continuous).sub(&pc).max_abs() < 1e-12);
        assert!(s.project(&pc, Part::Discrete).max_abs() < 1e-12);
    }

    #[test]
    fn bound_state_path_agrees_with_full_basis() {
        let (g, p) = well();
        let s = SpectralData::new(&g, &p).unwrap();
        let b = bound_state(&g, &p).unwrap();
        assert!((b.omega - s.omega()).abs() < 1e-12);
        let err = b.phi.iter().zip(s.phi()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn csv_header() {
        let (g, p) = well();
        let s = SpectralData::new(&g, &p).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,E_k,is_discrete"));
        assert!(lines.next().unwrap().ends_with(",true"));
        assert_eq!(text.lines().count(), g.len() + 1);
    }
}
