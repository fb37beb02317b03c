use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use super::algebra::Algebra;
use super::term::{AlgebraTerm, HamiltonianPoly};
use crate::error::{Error, Result};
use crate::fgr::{self, DeltaParams, GoldenRuleReport, Prescription};
use crate::spectral::{GridFunction, SpectralData};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Multinomial expansion of `H_P = -(lambda/4) int ((xi + xi-bar) phi / sqrt(2 omega) + U)^4 / r^2 dr`
/// into algebra terms. The `U^1` block is written through its two linear factors.
pub fn step0_hamiltonian(alg: &Algebra, lambda: f64) -> HamiltonianPoly {
    let spec = alg.spec;
    let g = spec.grid();
    let omega = spec.omega();
    let phi = spec.phi();
    let mut p = HamiltonianPoly::new();
    for d in 0..=4u32 {
        let j = 4 - d;
        let kernel = GridFunction {
            values: phi.iter().enumerate().map(|(i, x)| Complex64::new(x.powi(j as i32) / (g.r(i) * g.r(i)), 0.0)).collect(),
        };
        let pre = -0.25 * lambda * binom(4, d) * (2.0 * omega).powf(-0.5 * j as f64);
        for a in 0..=j {
            let c = Complex64::new(pre * binom(j, a), 0.0);
            let (mu, nu) = (a, j - a);
            if j + d > alg.d_max {
                p.remainder_norm += c.norm() * kernel.max_abs();
                continue;
            }
            match d {
                0 => {
                    let integral: Complex64 = kernel.values.iter().sum::<Complex64>() * g.dr();
                    p.push(AlgebraTerm::scalar(c * integral, mu, nu));
                }
                1 => {
                    let v = Arc::new(alg.smooth(&kernel));
                    for conj in [false, true] {
                        p.push(AlgebraTerm::linear(c * std::f64::consts::FRAC_1_SQRT_2, mu, nu, v.clone(), conj));
                    }
                }
                _ => p.push(AlgebraTerm::field(c, mu, nu, Arc::new(kernel.clone()), d)),
            }
        }
    }
    p.canonicalize();
    p
}

/// Relative small-divisor tolerance (times `m`).
pub const TOL_RES: f64 = 1e-6;

/// Whether an f-linear monomial is in normal form: `omega (mu - nu) < -m` for `f`,
/// `omega (mu - nu) > m` for `f-bar`.
pub fn is_normal_linear(mu: u32, nu: u32, conjugated: bool, omega: f64, mass: f64) -> bool {
    let w = omega * (mu as f64 - nu as f64);
    if conjugated {
        w > mass
    } else {
        w < -mass
    }
}

/// Definition of normal form: scalars with `mu = nu` and f-linear terms off the continuum.
pub fn classify_violations(z: &HamiltonianPoly, omega: f64, mass: f64) -> Vec<AlgebraTerm> {
    z.terms
        .iter()
        .filter(|t| {
            if t.is_scalar() {
                t.mu != t.nu
            } else if t.is_f_linear() {
                !is_normal_linear(t.mu, t.nu, t.linear[0].conjugated, omega, mass)
            } else {
                true
            }
        })
        .cloned()
        .collect()
}

/// Solve `{H_L, chi} + Z = K` for scalar and f-linear `K`.
pub fn solve_homological(alg: &Algebra, k: &HamiltonianPoly) -> Result<(HamiltonianPoly, HamiltonianPoly)> {
    let spec = alg.spec;
    let (omega, mass) = (spec.omega(), spec.mass());
    let tol = TOL_RES * mass;
    let mut z = HamiltonianPoly::new();
    let mut chi = HamiltonianPoly::new();
    for t in &k.terms {
        let w = omega * (t.mu as f64 - t.nu as f64);
        if t.is_scalar() {
            if t.mu == t.nu {
                z.push(t.clone());
                continue;
            }
            if w.abs() < tol {
                return Err(Error::SmallDivisor { mu: t.mu, nu: t.nu, kind: "scalar", divisor: w });
            }
            chi.push(AlgebraTerm::scalar(I * t.coeff / w, t.mu, t.nu));
        } else if t.is_f_linear() {
            let l = &t.linear[0];
            let edge = if l.conjugated { w - mass } else { w + mass };
            if edge.abs() < tol {
                return Err(Error::SmallDivisor { mu: t.mu, nu: t.nu, kind: "f-linear", divisor: edge });
            }
            if is_normal_linear(t.mu, t.nu, l.conjugated, omega, mass) {
                z.push(t.clone());
                continue;
            }
            let src = l.vector.scale(t.coeff);
            let (lam, c) = if l.conjugated { (w, -I) } else { (-w, I) };
            let v = fgr::resolve_at(spec, lam, 0.0, Prescription::MinusI0, &src).scale(c);
            chi.push(AlgebraTerm::linear(Complex64::new(1.0, 0.0), t.mu, t.nu, Arc::new(v), l.conjugated));
        } else {
            return Err(Error::InvalidArgument("homological equation only takes scalar and f-linear terms".into()));
        }
    }
    z.canonicalize();
    chi.canonicalize();
    Ok((z, chi))
}

/// `sum_{k>=1} ad_chi^k(p) / k!` with `ad_chi = {chi, .}`, truncated at the algebra's degree cap.
pub fn lie_series(alg: &Algebra, chi: &HamiltonianPoly, p: &HamiltonianPoly, start: usize) -> HamiltonianPoly {
    let mut out = HamiltonianPoly::new();
    let mut cur = p.clone();
    let mut k = 0usize;
    let mut fact = 1.0;
    loop {
        k += 1;
        cur = alg.bracket(chi, &cur);
        fact *= k as f64;
        if cur.is_empty() {
            out.remainder_norm += cur.remainder_norm / fact;
            break;
        }
        if k >= start {
            out.add(&cur.scaled(Complex64::new(1.0 / fact, 0.0)));
        }
    }
    out.canonicalize();
    out
}

#[derive(Debug, Clone)]
pub struct StepLog {
    pub step: usize,
    pub degree: u32,
    pub k: HamiltonianPoly,
    pub z: HamiltonianPoly,
    pub chi: HamiltonianPoly,
    pub terms_after: usize,
    pub remainder_norm: f64,
}

#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub order: usize,
    pub lambda: f64,
    pub d_max: u32,
    /// Normal form `Z^{(2N)}` (degree at most `2N + 2`).
    pub z: HamiltonianPoly,
    /// Transformed perturbation after the last step, excluding `Z`.
    pub rest: HamiltonianPoly,
    pub chi_list: Vec<HamiltonianPoly>,
    /// Vector of the resonant term `xi-bar^{2N+1} <Phi, f>` in `Z`.
    pub phi_res: GridFunction,
    pub gamma: GoldenRuleReport,
    pub steps: Vec<StepLog>,
}

#[derive(Debug, Clone)]
pub struct RecursionOptions {
    pub d_max: u32,
    /// Abort when the accumulated truncation estimate exceeds this.
    pub remainder_budget: f64,
    pub delta: DeltaParams,
}

impl RecursionOptions {
    pub fn for_order(order: usize) -> Self {
        Self { d_max: 2 * order as u32 + 4, remainder_budget: f64::INFINITY, delta: DeltaParams::default() }
    }
}

/// Birkhoff recursion: `2N` steps, step `s` normalizing the scalar and f-linear terms of degree `2s + 2`
/// (steps beyond degree `2N + 2` are recorded empty).
pub fn normal_form_recursion(spec: &SpectralData, lambda: f64, order: usize, opts: &RecursionOptions) -> Result<NormalFormResult> {
    if !lambda.is_finite() || lambda == 0.0 {
        return Err(Error::InvalidArgument("lambda must be finite and nonzero".into()));
    }
    fgr::check_window(spec.omega(), spec.mass(), order)?;
    let need = 2 * order as u32 + 4;
    if opts.d_max < need {
        return Err(Error::TruncationOverflow(format!("D_max = {} is below 2N + 4 = {need}", opts.d_max)));
    }
    let alg = Algebra::new(spec, opts.d_max);
    let mut p = step0_hamiltonian(&alg, lambda);
    let mut z = HamiltonianPoly::new();
    let mut chi_list = Vec::new();
    let mut steps = Vec::new();
    let top = 2 * order as u32 + 2;
    for s in 1..=2 * order {
        let degree = 2 * s as u32 + 2;
        if degree > top {
            chi_list.push(HamiltonianPoly::new());
            steps.push(StepLog {
                step: s,
                degree,
                k: HamiltonianPoly::new(),
                z: HamiltonianPoly::new(),
                chi: HamiltonianPoly::new(),
                terms_after: p.len(),
                remainder_norm: p.remainder_norm,
            });
            continue;
        }
        let (head, rest): (Vec<AlgebraTerm>, Vec<AlgebraTerm>) =
            p.terms.into_iter().partition(|t| t.degree() == degree && (t.is_scalar() || t.is_f_linear()));
        let k = HamiltonianPoly::from_terms(head);
        let rest = HamiltonianPoly { terms: rest, remainder_norm: p.remainder_norm };
        let (zs, chi) = solve_homological(&alg, &k)?;

        let mut full = z.clone();
        full.add(&k);
        full.add(&rest);
        let mut next = rest.clone();
        next.add(&lie_series(&alg, &chi, &full, 1));
        let mut zk = zs.clone();
        zk.add(&k.scaled(Complex64::new(-1.0, 0.0)));
        zk.canonicalize();
        // sum_{k>=2} ad^{k-1}(Zs - K) / k!
        let mut cur = zk;
        let mut fact = 1.0;
        let mut j = 1usize;
        loop {
            j += 1;
            fact *= j as f64;
            cur = alg.bracket(&chi, &cur);
            if cur.is_empty() {
                next.remainder_norm += cur.remainder_norm / fact;
                break;
            }
            next.add(&cur.scaled(Complex64::new(1.0 / fact, 0.0)));
        }
        next.canonicalize();
        z.add(&zs);
        z.canonicalize();
        if next.remainder_norm > opts.remainder_budget {
            return Err(Error::TruncationOverflow(format!(
                "discarded mass {:.3e} exceeds budget {:.3e} at step {s}",
                next.remainder_norm, opts.remainder_budget
            )));
        }
        steps.push(StepLog {
            step: s,
            degree,
            k,
            z: zs,
            chi: chi.clone(),
            terms_after: next.len(),
            remainder_norm: next.remainder_norm,
        });
        chi_list.push(chi);
        p = next;
    }
    let res_nu = 2 * order as u32 + 1;
    let phi_res = z
        .terms
        .iter()
        .find(|t| t.is_f_linear() && t.mu == 0 && t.nu == res_nu && !t.linear[0].conjugated)
        .map(|t| t.linear[0].vector.scale(t.coeff))
        .unwrap_or_else(|| GridFunction::zeros(spec.len()));
    let gamma = fgr::gamma_coefficient(spec, &phi_res, order, &opts.delta)?;
    Ok(NormalFormResult { order, lambda, d_max: opts.d_max, z, rest: p, chi_list, phi_res, gamma, steps })
}

impl NormalFormResult {
    pub const CSV_HEADER: &'static str = "mu,nu,d,|coeff|,arg(coeff),divisor";

    /// Z-terms: for f-linear terms `|coeff|` is the L2 norm of the vector and the phase is that of
    /// its largest entry; `divisor` is `omega (mu - nu)`.
    pub fn write_z_csv(&self, omega: f64, dr: f64, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for t in &self.z.terms {
            let (mag, arg) = if t.is_f_linear() {
                let v = &t.linear[0].vector;
                let big = v.values.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
                ((t.coeff * v.norm(dr)).norm(), (t.coeff * big).arg())
            } else {
                (t.coeff.norm(), t.coeff.arg())
            };
            writeln!(
                w,
                "{},{},{},{:.12e},{:.12e},{:.12e}",
                t.mu,
                t.nu,
                t.f_degree(),
                mag,
                arg,
                omega * (t.mu as f64 - t.nu as f64)
            )?;
        }
        Ok(())
    }

    /// Three columns `r re im` of the resonant vector.
    pub fn write_phi_res(&self, spec: &SpectralData, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# r re im")?;
        for (i, z) in self.phi_res.values.iter().enumerate() {
            writeln!(w, "{:.10e} {:.15e} {:.15e}", spec.grid().r(i), z.re, z.im)?;
        }
        Ok(())
    }
}

/// Evaluate the homological residual `{H_L, chi} + Z - K` of a logged step.
pub fn homological_residual(alg: &Algebra, step: &StepLog) -> Result<HamiltonianPoly> {
    let mut r = alg.bracket_hl(&step.chi)?;
    r.add(&step.z);
    r.add(&step.k.scaled(Complex64::new(-1.0, 0.0)));
    Ok(r)
}

