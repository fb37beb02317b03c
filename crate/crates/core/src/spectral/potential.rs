use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::RadialGrid;

/// Decay exponent the potential tail must beat: |V(r)| <= C <r>^{-delta} with delta > 5.
pub const MIN_DECAY_EXPONENT: f64 = 5.0;

/// Radial potential profile. Wells are negative: `V = -depth` inside a square well.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    SquareWell { depth: f64, radius: f64 },
    /// `V(r) = -depth * exp(-(r / width)^2)`.
    Gaussian { depth: f64, width: f64 },
    /// Samples `(r, V(r))` sorted by `r`, linearly interpolated and held constant past the ends.
    Tabulated { r: Vec<f64>, v: Vec<f64> },
}

impl Potential {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::SquareWell { depth, radius } => {
                if r < *radius {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::Gaussian { depth, width } => -depth * (-(r / width).powi(2)).exp(),
            Potential::Tabulated { r: rs, v } => interpolate(rs, v, r),
        }
    }

    /// Parse a two-column UTF-8 table `r V(r)`; `#` starts a comment, commas or whitespace separate.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
            let (a, b) = match (cols.next(), cols.next()) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Parse(format!("potential table line {}: expected two columns", lineno + 1))),
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("potential table line {}: {e}", lineno + 1)))
            };
            r.push(parse(a)?);
            v.push(parse(b)?);
        }
        if r.len() < 2 {
            return Err(Error::Parse("potential table needs at least two rows".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse("potential table radii must be strictly increasing".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("potential table contains non-finite values".into()));
        }
        Ok(Potential::Tabulated { r, v })
    }

    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }
}

fn interpolate(rs: &[f64], vs: &[f64], r: f64) -> f64 {
    if r <= rs[0] {
        return vs[0];
    }
    if r >= rs[rs.len() - 1] {
        return vs[vs.len() - 1];
    }
    let j = rs.partition_point(|&x| x <= r);
    let (r0, r1) = (rs[j - 1], rs[j]);
    let s = (r - r0) / (r1 - r0);
    vs[j - 1] * (1.0 - s) + vs[j] * s
}

/// Potential plus the Klein-Gordon mass.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub potential: Potential,
    pub mass: f64,
}

/// Outcome of the tail-decay check on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    /// Fitted exponent of |V| against <r> on the outer half of the grid; infinite if the tail vanishes.
    pub exponent: f64,
    pub passed: bool,
}

impl PotentialSpec {
    pub fn new(potential: Potential, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { potential, mass })
    }

    /// Values on the grid nodes. The square well is averaged over each cell
    /// `[r_i - dr/2, r_i + dr/2]` so the discontinuity does not pin the error at O(dr).
    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        let dr = grid.dr();
        match &self.potential {
            Potential::SquareWell { depth, radius } => grid
                .nodes()
                .map(|r| -depth * ((radius - (r - 0.5 * dr)) / dr).clamp(0.0, 1.0))
                .collect(),
            p => grid.nodes().map(|r| p.value(r)).collect(),
        }
    }

    /// Estimate the decay exponent of the potential tail on the outer half of the grid.
    ///
    /// The zero-resonance condition and the commutator bounds on `x . grad V` cannot be
    /// resolved at this discretization and are not checked here.
    pub fn check_decay(&self, grid: &RadialGrid) -> DecayCheck {
        const FLOOR: f64 = 1e-14;
        let pts: Vec<(f64, f64)> = grid
            .nodes()
            .filter(|&r| r >= 0.5 * grid.r_max())
            .map(|r| (r, self.potential.value(r).abs()))
            .collect();
        let live: Vec<(f64, f64)> = pts.iter().copied().filter(|&(_, v)| v > FLOOR).collect();
        if live.len() < 2 {
            return DecayCheck { exponent: f64::INFINITY, passed: true };
        }
        let xs: Vec<f64> = live.iter().map(|&(r, _)| (1.0 + r * r).sqrt().ln()).collect();
        let ys: Vec<f64> = live.iter().map(|&(_, v)| v.ln()).collect();
        let slope = crate::numerics::linear_fit(&xs, &ys).slope;
        let exponent = -slope;
        DecayCheck { exponent, passed: exponent > MIN_DECAY_EXPONENT }
    }

    /// Validate mass and tail decay; fails with `InvalidArgument` when the tail is too heavy.
    pub fn validate(&self, grid: &RadialGrid) -> Result<DecayCheck> {
        let check = self.check_decay(grid);
        if !check.passed {
            return Err(Error::InvalidArgument(format!(
                "potential tail decays like <r>^-{:.3}, need exponent > {MIN_DECAY_EXPONENT}",
                check.exponent
            )));
        }
        Ok(check)
    }
}

/// Depth of a Gaussian well `-depth exp(-(r/width)^2)` whose discretized bound state has
/// frequency `omega` on `grid`, found by bisection (omega decreases with depth).
pub fn tune_gaussian_depth(omega: f64, width: f64, mass: f64, grid: &RadialGrid) -> Result<f64> {
    if !(omega > 0.0 && omega < mass) {
        return Err(Error::InvalidArgument(format!("target omega {omega} must lie in (0, m)")));
    }
    let freq = |depth: f64| -> f64 {
        let spec = PotentialSpec { potential: Potential::Gaussian { depth, width }, mass };
        let h = crate::spectral::assemble_hamiltonian(grid, &spec);
        if h.count_below(mass * mass) == 0 {
            mass
        } else {
            h.bisect(0).max(0.0).sqrt()
        }
    };
    let mut hi = 1.0;
    while freq(hi) > omega {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidArgument("could not bracket the requested frequency".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if freq(mid) > omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}


#[cfg(test)]
mod tune_tests {
    use super::*;

    #[test]
    fn tuned_depth_hits_target() {
        let grid = RadialGrid::new(20.0, 199).unwrap();
        let depth = tune_gaussian_depth(0.4, 1.0, 1.0, &grid).unwrap();
        let spec = PotentialSpec::new(Potential::Gaussian { depth, width: 1.0 }, 1.0).unwrap();
        let b = crate::spectral::bound_state(&grid, &spec).unwrap();
        assert!((b.omega - 0.4).abs() < 1e-10);
    }
}
