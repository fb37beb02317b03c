use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngExt};

use super::term::{AlgebraTerm, FieldFactor, HamiltonianPoly, LinearFactor, Vector};
use crate::error::{Error, Result};
use crate::spectral::{GridFunction, Part, SpectralData};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Phase-space point `(xi, f)` with `f = P_c f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub xi: Complex64,
    pub f: GridFunction,
}

impl PhasePoint {
    pub fn norm(&self, dr: f64) -> f64 {
        (self.xi.norm_sqr() + self.f.norm(dr).powi(2)).sqrt()
    }

    pub fn sub(&self, other: &PhasePoint) -> PhasePoint {
        PhasePoint { xi: self.xi - other.xi, f: self.f.sub(&other.f) }
    }

    pub fn scale(&self, c: f64) -> PhasePoint {
        PhasePoint { xi: self.xi * c, f: self.f.scale(c.into()) }
    }
}

/// Evaluation context: the spectral data defining `B`, `P_c` and `U`, and the degree cap.
pub struct Algebra<'a> {
    pub spec: &'a SpectralData,
    pub d_max: u32,
}

enum Pairing {
    Scalar(Complex64),
    Factor(Complex64, FieldFactor),
}

impl<'a> Algebra<'a> {
    pub fn new(spec: &'a SpectralData, d_max: u32) -> Self {
        Self { spec, d_max }
    }

    fn dr(&self) -> f64 {
        self.spec.grid().dr()
    }

    /// `B^{-1/2} P_c v`.
    pub fn smooth(&self, v: &GridFunction) -> GridFunction {
        self.spec.apply_multiplier(v, Part::Continuous, |_, x| Complex64::new(x.sqrt().recip(), 0.0))
    }

    /// `U = B^{-1/2} (f + f-bar) / sqrt 2`.
    pub fn field_u(&self, f: &GridFunction) -> Vec<f64> {
        let re = GridFunction::from_real(&f.re());
        self.smooth(&re).re().into_iter().map(|x| x * std::f64::consts::SQRT_2).collect()
    }

    /// Random point with `|xi| = amplitude` and a smooth localized `f` of comparable norm.
    pub fn random_point(&self, amplitude: f64, rng: &mut impl Rng) -> PhasePoint {
        let g = self.spec.grid();
        let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let raw = GridFunction::from_fn(g, |r| {
            let env = r * (-0.5 * (r - 1.0 - a[4].abs()).powi(2)).exp();
            Complex64::new(a[0] + a[1] * r.cos(), a[2] + a[3] * (1.3 * r).sin()) * env
        });
        let f = self.spec.project(&raw, Part::Continuous);
        let f = f.scale((amplitude / f.norm(g.dr()).max(f64::MIN_POSITIVE)).into());
        let th = a[5] * std::f64::consts::PI;
        PhasePoint { xi: Complex64::from_polar(amplitude, th), f }
    }

    /// Value of a polynomial at `z`.
    pub fn evaluate(&self, p: &HamiltonianPoly, z: &PhasePoint) -> Complex64 {
        let u = if p.terms.iter().any(|t| !t.fields.is_empty()) { self.field_u(&z.f) } else { Vec::new() };
        let fbar = z.f.conj();
        p.terms.iter().map(|t| self.evaluate_term(t, z, &fbar, &u)).sum()
    }

    fn evaluate_term(&self, t: &AlgebraTerm, z: &PhasePoint, fbar: &GridFunction, u: &[f64]) -> Complex64 {
        let dr = self.dr();
        let mut v = t.coeff * z.xi.powu(t.mu) * z.xi.conj().powu(t.nu);
        for l in &t.linear {
            v *= l.vector.pair(if l.conjugated { fbar } else { &z.f }, dr);
        }
        for fa in &t.fields {
            v *= field_integral(&fa.kernel, u, fa.power, dr);
        }
        v
    }

    /// `H_L = omega |xi|^2 + <f-bar, B f>`.
    pub fn evaluate_hl(&self, z: &PhasePoint) -> f64 {
        let c = self.spec.coefficients(&z.f);
        let x = self.spec.frequencies();
        let fpart: f64 = (0..c.len()).filter(|&k| !self.spec.is_discrete(k)).map(|k| x[k] * c[k].norm_sqr()).sum();
        self.spec.omega() * z.xi.norm_sqr() + fpart
    }

    /// Hamiltonian vector field `(xi', f') = (-i d_{xi-bar} p, -i grad_{f-bar} p)` at `z`.
    pub fn vector_field(&self, p: &HamiltonianPoly, z: &PhasePoint) -> PhasePoint {
        let dr = self.dr();
        let n = z.f.len();
        let u = if p.terms.iter().any(|t| !t.fields.is_empty()) { self.field_u(&z.f) } else { Vec::new() };
        let fbar = z.f.conj();
        let mut dxi = Complex64::new(0.0, 0.0);
        let mut df = GridFunction::zeros(n);
        let xib = z.xi.conj();
        for t in &p.terms {
            let lin: Vec<Complex64> =
                t.linear.iter().map(|l| l.vector.pair(if l.conjugated { &fbar } else { &z.f }, dr)).collect();
            let fld: Vec<Complex64> = t.fields.iter().map(|fa| field_integral(&fa.kernel, &u, fa.power, dr)).collect();
            let all: Complex64 = lin.iter().chain(&fld).product();
            let mono = z.xi.powu(t.mu) * xib.powu(t.nu);
            if t.nu > 0 {
                dxi += t.coeff * (t.nu as f64) * z.xi.powu(t.mu) * xib.powu(t.nu - 1) * all;
            }
            let others = |skip: usize| -> Complex64 {
                lin.iter().chain(&fld).enumerate().filter(|&(j, _)| j != skip).map(|(_, v)| *v).product()
            };
            for (j, l) in t.linear.iter().enumerate() {
                if l.conjugated {
                    df.axpy(t.coeff * mono * others(j), &l.vector);
                }
            }
            for (j, fa) in t.fields.iter().enumerate() {
                let d = fa.power as i32;
                let src = GridFunction {
                    values: fa.kernel.values.iter().zip(&u).map(|(k, uu)| k * uu.powi(d - 1)).collect(),
                };
                let g = self.smooth(&src);
                let c = t.coeff * mono * others(t.linear.len() + j) * (fa.power as f64) * FRAC_1_SQRT_2;
                df.axpy(c, &g);
            }
        }
        PhasePoint { xi: -I * dxi, f: df.scale(-I) }
    }

    /// Poisson bracket of two polynomials, truncated at `d_max`.
    pub fn bracket(&self, a: &HamiltonianPoly, b: &HamiltonianPoly) -> HamiltonianPoly {
        let mut out = HamiltonianPoly::new();
        let mut cache: HashMap<*const GridFunction, Vector> = HashMap::new();
        for ta in &a.terms {
            for tb in &b.terms {
                self.bracket_terms(ta, tb, &mut out, &mut cache);
            }
        }
        out.remainder_norm += a.remainder_norm * b.magnitude() + b.remainder_norm * a.magnitude();
        out.canonicalize();
        out
    }

    fn smooth_cached(&self, v: &Vector, cache: &mut HashMap<*const GridFunction, Vector>) -> Vector {
        cache.entry(Arc::as_ptr(v)).or_insert_with(|| Arc::new(self.smooth(v))).clone()
    }

    fn bracket_terms(
        &self,
        a: &AlgebraTerm,
        b: &AlgebraTerm,
        out: &mut HamiltonianPoly,
        cache: &mut HashMap<*const GridFunction, Vector>,
    ) {
        let deg = (a.degree() + b.degree()).saturating_sub(2);
        if deg > self.d_max {
            let can_pair = a.mu * b.nu != a.nu * b.mu || (a.f_degree() > 0 && b.f_degree() > 0);
            if can_pair {
                out.remainder_norm += a.magnitude() * b.magnitude();
            }
            return;
        }
        let c = a.coeff * b.coeff;
        let k = a.mu as i64 * b.nu as i64 - a.nu as i64 * b.mu as i64;
        if k != 0 {
            out.push(AlgebraTerm {
                coeff: I * (k as f64) * c,
                mu: a.mu + b.mu - 1,
                nu: a.nu + b.nu - 1,
                linear: a.linear.iter().chain(&b.linear).cloned().collect(),
                fields: a.fields.iter().chain(&b.fields).cloned().collect(),
            });
        }
        let na = a.linear.len() + a.fields.len();
        let nb = b.linear.len() + b.fields.len();
        for ia in 0..na {
            for ib in 0..nb {
                let pairing = match (ia < a.linear.len(), ib < b.linear.len()) {
                    (true, true) => {
                        let (la, lb) = (&a.linear[ia], &b.linear[ib]);
                        if la.conjugated == lb.conjugated {
                            continue;
                        }
                        let s = if la.conjugated { -I } else { I };
                        Pairing::Scalar(s * la.vector.pair(&lb.vector, self.dr()))
                    }
                    (true, false) => {
                        let la = &a.linear[ia];
                        let fb = &b.fields[ib - b.linear.len()];
                        let s = if la.conjugated { -1.0 } else { 1.0 };
                        self.lin_field(la, fb, s, cache)
                    }
                    (false, true) => {
                        let fa = &a.fields[ia - a.linear.len()];
                        let lb = &b.linear[ib];
                        let s = if lb.conjugated { 1.0 } else { -1.0 };
                        self.lin_field(lb, fa, s, cache)
                    }
                    (false, false) => continue,
                };
                let mut linear: Vec<LinearFactor> = Vec::new();
                let mut fields: Vec<FieldFactor> = Vec::new();
                for (j, l) in a.linear.iter().enumerate() {
                    if j != ia {
                        linear.push(l.clone());
                    }
                }
                for (j, f) in a.fields.iter().enumerate() {
                    if j + a.linear.len() != ia {
                        fields.push(f.clone());
                    }
                }
                for (j, l) in b.linear.iter().enumerate() {
                    if j != ib {
                        linear.push(l.clone());
                    }
                }
                for (j, f) in b.fields.iter().enumerate() {
                    if j + b.linear.len() != ib {
                        fields.push(f.clone());
                    }
                }
                let base = AlgebraTerm { coeff: c, mu: a.mu + b.mu, nu: a.nu + b.nu, linear, fields };
                match pairing {
                    Pairing::Scalar(s) => out.push(AlgebraTerm { coeff: base.coeff * s, ..base }),
                    Pairing::Factor(s, fac) => self.attach(base, s, fac, out),
                }
            }
        }
    }

    /// `{<A, f or f-bar>, int Psi U^d}` reduced to `(+/-) i d/sqrt2 int Psi (B^{-1/2} P_c A) U^{d-1}`.
    fn lin_field(
        &self,
        l: &LinearFactor,
        f: &FieldFactor,
        sign: f64,
        cache: &mut HashMap<*const GridFunction, Vector>,
    ) -> Pairing {
        let g = self.smooth_cached(&l.vector, cache);
        let kernel = GridFunction { values: f.kernel.values.iter().zip(&g.values).map(|(a, b)| a * b).collect() };
        let s = I * sign * (f.power as f64) * FRAC_1_SQRT_2;
        Pairing::Factor(s, FieldFactor { kernel: Arc::new(kernel), power: f.power - 1 })
    }

    /// Multiply `base` by `s * int kernel U^power`, lowering powers 0 and 1 out of the field class.
    fn attach(&self, base: AlgebraTerm, s: Complex64, fac: FieldFactor, out: &mut HamiltonianPoly) {
        match fac.power {
            0 => {
                let integral: Complex64 = fac.kernel.values.iter().sum::<Complex64>() * self.dr();
                out.push(AlgebraTerm { coeff: base.coeff * s * integral, ..base });
            }
            1 => {
                let g = Arc::new(self.smooth(&fac.kernel));
                for conj in [false, true] {
                    let mut t = base.clone();
                    t.coeff *= s * FRAC_1_SQRT_2;
                    t.linear.push(LinearFactor { vector: g.clone(), conjugated: conj });
                    out.push(t);
                }
            }
            _ => {
                let mut t = base;
                t.coeff *= s;
                t.fields.push(fac);
                out.push(t);
            }
        }
    }

    /// `{H_L, p}` for field-free `p`.
    pub fn bracket_hl(&self, p: &HamiltonianPoly) -> Result<HamiltonianPoly> {
        let omega = self.spec.omega();
        let mut out = HamiltonianPoly::new();
        for t in &p.terms {
            if !t.fields.is_empty() {
                return Err(Error::InvalidArgument("bracket with H_L is only defined on field-free terms".into()));
            }
            out.push(AlgebraTerm { coeff: t.coeff * I * omega * (t.nu as f64 - t.mu as f64), ..t.clone() });
            for (j, l) in t.linear.iter().enumerate() {
                let bv = self.spec.apply_b_power(1.0, &l.vector, Part::Continuous)?;
                let mut nt = t.clone();
                nt.linear[j] = LinearFactor { vector: Arc::new(bv), conjugated: l.conjugated };
                nt.coeff *= if l.conjugated { I } else { -I };
                out.push(nt);
            }
        }
        out.canonicalize();
        Ok(out)
    }
}

/// `int Psi U^d dr`.
fn field_integral(kernel: &GridFunction, u: &[f64], power: u32, dr: f64) -> Complex64 {
    kernel.values.iter().zip(u).map(|(k, x)| k * x.powi(power as i32)).sum::<Complex64>() * dr
}
