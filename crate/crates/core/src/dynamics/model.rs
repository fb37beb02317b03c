use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectral::tridiag::SymTridiag;
use crate::spectral::{self, PotentialSpec, RadialGrid, SpectralData};

/// PDE state `(w, w_t)` at time `t`, with `w = r u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
    pub t: f64,
}

impl SimState {
    pub fn zeros(n: usize) -> Self {
        Self { w: vec![0.0; n], w_t: vec![0.0; n], t: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.w.iter().chain(&self.w_t).all(|x| x.is_finite()) && self.t.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument("state has non-finite entries".into()))
        }
    }

    pub fn sup(&self) -> f64 {
        self.w.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Distance in the reduced `L^2 x L^2` norm.
    pub fn distance(&self, other: &SimState, dr: f64) -> f64 {
        let s: f64 = self.w.iter().zip(&other.w).chain(self.w_t.iter().zip(&other.w_t)).map(|(a, b)| (a - b).powi(2)).sum();
        (s * dr).sqrt()
    }
}

/// The linear operator `H` with its bound state, either with a full eigenbasis or as the bare
/// finite-difference stencil on boxes too large to diagonalize.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    grid: RadialGrid,
    h: SymTridiag,
    mass: f64,
    omega: f64,
    phi: Vec<f64>,
    inv_r2: Vec<f64>,
    spec: Option<&'a SpectralData>,
}

impl<'a> Model<'a> {
    pub fn spectral(spec: &'a SpectralData) -> Self {
        let grid = spec.grid().clone();
        let inv_r2 = grid.nodes().map(|r| 1.0 / (r * r)).collect();
        Self {
            h: spec.hamiltonian().clone(),
            mass: spec.mass(),
            omega: spec.omega(),
            phi: spec.phi().to_vec(),
            inv_r2,
            spec: Some(spec),
            grid,
        }
    }

    pub fn finite_difference(grid: &RadialGrid, pot: &PotentialSpec) -> Result<Model<'static>> {
        let bs = spectral::bound_state(grid, pot)?;
        Ok(Model {
            h: spectral::assemble_hamiltonian(grid, pot),
            mass: pot.mass,
            omega: bs.omega,
            phi: bs.phi,
            inv_r2: grid.nodes().map(|r| 1.0 / (r * r)).collect(),
            spec: None,
            grid: grid.clone(),
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn hamiltonian(&self) -> &SymTridiag {
        &self.h
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn spectral_data(&self) -> Option<&'a SpectralData> {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Upper bound on `sqrt(E_k)`.
    pub fn max_frequency(&self) -> f64 {
        match self.spec {
            Some(s) => s.frequencies().last().copied().unwrap_or(0.0),
            None => self.h.bounds().1.max(0.0).sqrt(),
        }
    }

    /// `<phi, v>`.
    pub fn bound_amplitude(&self, v: &[f64]) -> f64 {
        self.phi.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() * self.grid.dr()
    }

    /// `P_c v`.
    pub fn continuous_part(&self, v: &[f64]) -> Vec<f64> {
        let q = self.bound_amplitude(v);
        v.iter().zip(&self.phi).map(|(b, a)| b - q * a).collect()
    }

    pub(crate) fn inv_r2(&self) -> &[f64] {
        &self.inv_r2
    }

    /// `-H w + lambda w^3 / r^2`.
    pub(crate) fn force(&self, w: &[f64], lambda: f64, out: &mut [f64]) {
        self.h.matvec(w, out);
        for ((o, x), s) in out.iter_mut().zip(w).zip(&self.inv_r2) {
            *o = lambda * x * x * x * s - *o;
        }
    }
}

/// `E = 1/2 (<w_t, w_t> + <w, H w>) - (lambda/4) sum w^4 / r^2 dr`, the 3D energy over `4 pi`.
/// The quadratic part equals `1/2 sum (d_k^2 + E_k c_k^2)` in the eigenbasis.
pub fn energy(state: &SimState, model: &Model, lambda: f64) -> f64 {
    let dr = model.grid.dr();
    let mut hw = vec![0.0; state.len()];
    model.h.matvec(&state.w, &mut hw);
    let kinetic: f64 = state.w_t.iter().map(|v| v * v).sum();
    let potential: f64 = state.w.iter().zip(&hw).map(|(a, b)| a * b).sum();
    let quartic: f64 = state.w.iter().zip(model.inv_r2()).map(|(x, s)| x.powi(4) * s).sum();
    (0.5 * (kinetic + potential) - 0.25 * lambda * quartic) * dr
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Exact linear half steps in the eigenbasis around a nonlinear kick.
    Strang,
    /// Velocity Verlet on the finite-difference operator.
    Leapfrog,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strang" => Ok(Scheme::Strang),
            "leapfrog" => Ok(Scheme::Leapfrog),
            other => Err(Error::Parse(format!("unknown scheme '{other}'"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Strang => "strang",
            Scheme::Leapfrog => "leapfrog",
        })
    }
}
