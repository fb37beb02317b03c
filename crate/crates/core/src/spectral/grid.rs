use crate::error::{Error, Result};

/// Smallest admissible number of interior nodes.
pub const MIN_NODES: usize = 16;

/// Uniform radial grid on (0, r_max) with Dirichlet ends.
///
/// Interior nodes are `r_i = i * dr` for `i = 1..=n`, `dr = r_max / (n + 1)`.
/// Index 0 of every array refers to `r_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
    dr: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_NODES} interior nodes, got {n}"
            )));
        }
        Ok(Self { r_max, n, dr: r_max / (n as f64 + 1.0) })
    }

    /// Grid with a prescribed spacing; `r_max` is rounded to a whole number of cells.
    pub fn with_spacing(r_max: f64, dr: f64) -> Result<Self> {
        if !(dr.is_finite() && dr > 0.0) {
            return Err(Error::InvalidArgument(format!("dr must be positive, got {dr}")));
        }
        let cells = (r_max / dr).round().max(1.0) as usize;
        Self::new(cells as f64 * dr, cells.saturating_sub(1))
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    /// Radius of the `i`-th stored node (0-based), i.e. `(i + 1) * dr`.
    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.dr
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.r(i))
    }

    pub fn node_vec(&self) -> Vec<f64> {
        self.nodes().collect()
    }
}
