use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;

use crate::spectral::GridFunction;

pub type Vector = Arc<GridFunction>;

/// `<vector, f>` or, when conjugated, `<vector, f-bar>`.
#[derive(Debug, Clone)]
pub struct LinearFactor {
    pub vector: Vector,
    pub conjugated: bool,
}

/// `int kernel U^power dr` with `U = B^{-1/2} (f + f-bar) / sqrt 2`; `power >= 2`.
#[derive(Debug, Clone)]
pub struct FieldFactor {
    pub kernel: Vector,
    pub power: u32,
}

/// `coeff xi^mu xi-bar^nu prod <A_j, f or f-bar> prod int Psi_k U^{d_k}`.
#[derive(Debug, Clone)]
pub struct AlgebraTerm {
    pub coeff: Complex64,
    pub mu: u32,
    pub nu: u32,
    pub linear: Vec<LinearFactor>,
    pub fields: Vec<FieldFactor>,
}

impl AlgebraTerm {
    pub fn scalar(coeff: Complex64, mu: u32, nu: u32) -> Self {
        Self { coeff, mu, nu, linear: Vec::new(), fields: Vec::new() }
    }

    pub fn linear(coeff: Complex64, mu: u32, nu: u32, vector: Vector, conjugated: bool) -> Self {
        Self { coeff, mu, nu, linear: vec![LinearFactor { vector, conjugated }], fields: Vec::new() }
    }

    pub fn field(coeff: Complex64, mu: u32, nu: u32, kernel: Vector, power: u32) -> Self {
        Self { coeff, mu, nu, linear: Vec::new(), fields: vec![FieldFactor { kernel, power }] }
    }

    pub fn f_degree(&self) -> u32 {
        self.linear.len() as u32 + self.fields.iter().map(|f| f.power).sum::<u32>()
    }

    pub fn degree(&self) -> u32 {
        self.mu + self.nu + self.f_degree()
    }

    pub fn is_scalar(&self) -> bool {
        self.linear.is_empty() && self.fields.is_empty()
    }

    pub fn is_f_linear(&self) -> bool {
        self.linear.len() == 1 && self.fields.is_empty()
    }

    pub fn is_field_free(&self) -> bool {
        self.fields.is_empty()
    }

    /// Formal conjugate: swap `mu` and `nu`, conjugate coefficient, vectors and kernels, flip f and f-bar.
    pub fn conjugate(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            mu: self.nu,
            nu: self.mu,
            linear: self
                .linear
                .iter()
                .map(|l| LinearFactor { vector: Arc::new(l.vector.conj()), conjugated: !l.conjugated })
                .collect(),
            fields: self.fields.iter().map(|f| FieldFactor { kernel: Arc::new(f.kernel.conj()), power: f.power }).collect(),
        }
    }

    /// Size proxy: `|coeff|` times the sup norms of all factor profiles.
    pub fn magnitude(&self) -> f64 {
        self.coeff.norm()
            * self.linear.iter().map(|l| l.vector.max_abs()).product::<f64>()
            * self.fields.iter().map(|f| f.kernel.max_abs()).product::<f64>()
    }
}

/// Finite sum of algebra terms plus a size estimate of everything dropped by degree truncation.
#[derive(Debug, Clone, Default)]
pub struct HamiltonianPoly {
    pub terms: Vec<AlgebraTerm>,
    pub remainder_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Scalar(u32, u32),
    Linear(u32, u32, bool),
    Field(u32, u32, u32),
    General(u32, u32, Vec<(u8, u32, u64)>),
}

fn content_hash(v: &GridFunction) -> u64 {
    let scale = v.max_abs();
    let mut h = DefaultHasher::new();
    v.len().hash(&mut h);
    if scale > 0.0 {
        for z in &v.values {
            ((z.re / scale * 1e12).round() as i64).hash(&mut h);
            ((z.im / scale * 1e12).round() as i64).hash(&mut h);
        }
        scale.to_bits().hash(&mut h);
    }
    h.finish()
}

impl HamiltonianPoly {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: Vec<AlgebraTerm>) -> Self {
        let mut p = Self { terms, remainder_norm: 0.0 };
        p.canonicalize();
        p
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, t: AlgebraTerm) {
        self.terms.push(t);
    }

    pub fn add(&mut self, other: &HamiltonianPoly) {
        self.terms.extend(other.terms.iter().cloned());
        self.remainder_norm += other.remainder_norm;
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| AlgebraTerm { coeff: t.coeff * c, ..t.clone() }).collect(),
            remainder_norm: self.remainder_norm * c.norm(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self { terms: self.terms.iter().map(|t| t.conjugate()).collect(), remainder_norm: self.remainder_norm }
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree()).max().unwrap_or(0)
    }

    pub fn magnitude(&self) -> f64 {
        self.terms.iter().map(|t| t.magnitude()).sum()
    }

    /// Merge like terms into a deterministic order. Single-factor terms merge their profiles
    /// (the coefficient is absorbed into the vector or kernel); other terms merge when their
    /// factor profiles agree after rounding to 1e-12 relative.
    pub fn canonicalize(&mut self) {
        let mut map: BTreeMap<Key, AlgebraTerm> = BTreeMap::new();
        for t in self.terms.drain(..) {
            if t.coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (key, t) = if t.is_scalar() {
                (Key::Scalar(t.mu, t.nu), t)
            } else if t.is_f_linear() {
                let l = &t.linear[0];
                let v = Arc::new(l.vector.scale(t.coeff));
                (Key::Linear(t.mu, t.nu, l.conjugated), AlgebraTerm::linear(Complex64::new(1.0, 0.0), t.mu, t.nu, v, l.conjugated))
            } else if t.linear.is_empty() && t.fields.len() == 1 {
                let f = &t.fields[0];
                let k = Arc::new(f.kernel.scale(t.coeff));
                (Key::Field(t.mu, t.nu, f.power), AlgebraTerm::field(Complex64::new(1.0, 0.0), t.mu, t.nu, k, f.power))
            } else {
                let mut sig: Vec<(u8, u32, u64)> = t
                    .linear
                    .iter()
                    .map(|l| (l.conjugated as u8, 0, content_hash(&l.vector)))
                    .chain(t.fields.iter().map(|f| (2, f.power, content_hash(&f.kernel))))
                    .collect();
                sig.sort();
                (Key::General(t.mu, t.nu, sig), t)
            };
            match map.get_mut(&key) {
                None => {
                    map.insert(key, t);
                }
                Some(acc) => match key {
                    Key::Linear(..) => {
                        let sum = acc.linear[0].vector.add(&t.linear[0].vector);
                        acc.linear[0].vector = Arc::new(sum);
                    }
                    Key::Field(..) => {
                        let sum = acc.fields[0].kernel.add(&t.fields[0].kernel);
                        acc.fields[0].kernel = Arc::new(sum);
                    }
                    _ => acc.coeff += t.coeff,
                },
            }
        }
        self.terms = map
            .into_values()
            .filter(|t| t.coeff != Complex64::new(0.0, 0.0) && t.magnitude() > 0.0)
            .collect();
    }

    /// Sum of term magnitudes of `self - other` after canonicalization.
    pub fn difference_magnitude(&self, other: &HamiltonianPoly) -> f64 {
        let mut d = self.clone();
        d.add(&other.scaled(Complex64::new(-1.0, 0.0)));
        d.canonicalize();
        d.magnitude()
    }

    /// Termwise check that the polynomial equals its formal conjugate.
    pub fn is_real(&self, tol: f64) -> bool {
        self.difference_magnitude(&self.conjugate()) <= tol * self.magnitude().max(f64::MIN_POSITIVE)
    }
}
