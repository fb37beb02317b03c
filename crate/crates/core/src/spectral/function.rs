use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::RadialGrid;

/// Complex radial profile sampled at the interior nodes, stored as `w = r u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_real(v: &[f64]) -> Self {
        Self { values: v.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    /// Sample `w(r)` on the grid nodes.
    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Self { values: grid.nodes().map(f).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.im).collect()
    }

    pub fn conj(&self) -> Self {
        Self { values: self.values.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { values: self.values.iter().map(|z| z * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() }
    }

    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Bilinear pairing `sum a_i b_i dr` (no conjugation).
    pub fn pair(&self, other: &Self, dr: f64) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<Complex64>() * dr
    }

    /// Discrete L2 norm `sqrt(sum |w_i|^2 dr)` of the stored profile.
    pub fn norm(&self, dr: f64) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dr).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("grid function has non-finite entries".into()))
        }
    }
}

/// 3D Lebesgue norm of `u = w / r` for a radial profile: `(4 pi sum |w_i/r_i|^p r_i^2 dr)^(1/p)`.
/// `p = f64::INFINITY` gives `max |w_i / r_i|`.
pub fn lp_norm(v: &GridFunction, p: f64, grid: &RadialGrid) -> f64 {
    weighted_lp_norm(v, p, 0.0, grid)
}

/// Same as [`lp_norm`] with the spatial weight `<r>^{-sigma}` applied to `u`.
pub fn weighted_lp_norm(v: &GridFunction, p: f64, sigma: f64, grid: &RadialGrid) -> f64 {
    assert_eq!(v.len(), grid.len());
    let weight = |r: f64| if sigma == 0.0 { 1.0 } else { (1.0 + r * r).powf(-0.5 * sigma) };
    if p.is_infinite() {
        return v.values.iter().enumerate().map(|(i, z)| z.norm() / grid.r(i) * weight(grid.r(i))).fold(0.0, f64::max);
    }
    assert!(p >= 1.0, "p must be at least 1");
    let sum: f64 = v
        .values
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let r = grid.r(i);
            (z.norm() / r * weight(r)).powf(p) * r * r
        })
        .sum();
    (4.0 * std::f64::consts::PI * sum * grid.dr()).powf(1.0 / p)
}
