use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::spectral::{lp_norm, tune_gaussian_depth, GridFunction, Part, Potential, PotentialSpec, RadialGrid, SpectralData};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn spec_with_omega(omega: f64) -> SpectralData {
    let grid = RadialGrid::new(30.0, 239).unwrap();
    let depth = tune_gaussian_depth(omega, 1.0, 1.0, &grid).unwrap();
    SpectralData::new(&grid, &PotentialSpec::new(Potential::Gaussian { depth, width: 1.0 }, 1.0).unwrap()).unwrap()
}

fn spec04() -> &'static SpectralData {
    static S: OnceLock<SpectralData> = OnceLock::new();
    S.get_or_init(|| spec_with_omega(0.4))
}

fn random_vector(alg: &Algebra, rng: &mut ChaCha8Rng, project: bool) -> Vector {
    let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let v = GridFunction::from_fn(alg.spec.grid(), |r| c(a[0] + a[1] * r, a[2] - a[3] * r) * (-(r - 1.5).powi(2)).exp());
    Arc::new(if project { alg.spec.project(&v, Part::Continuous) } else { v })
}

fn random_poly(alg: &Algebra, rng: &mut ChaCha8Rng, terms: usize) -> HamiltonianPoly {
    let mut p = HamiltonianPoly::new();
    for _ in 0..terms {
        let kind = rng.random_range(0..4u32);
        let coeff = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (mu, nu) = (rng.random_range(0..3u32), rng.random_range(0..2u32));
        let t = match kind {
            0 => AlgebraTerm::scalar(coeff, mu.max(1), nu),
            1 => AlgebraTerm::linear(coeff, mu.min(1), nu, random_vector(alg, rng, true), rng.random_range(0..2) == 1),
            2 => AlgebraTerm::field(coeff, 0, nu, random_vector(alg, rng, false), 2 + rng.random_range(0..2)),
            _ => AlgebraTerm {
                coeff,
                mu: 0,
                nu: 0,
                linear: vec![LinearFactor { vector: random_vector(alg, rng, true), conjugated: false }],
                fields: vec![FieldFactor { kernel: random_vector(alg, rng, false), power: 2 }],
            },
        };
        p.push(t);
    }
    p.canonicalize();
    p
}

#[test]
fn bracket_with_linear_part() {
    let s = spec04();
    let alg = Algebra::new(s, 12);
    let xi = HamiltonianPoly::from_terms(vec![AlgebraTerm::scalar(c(1.0, 0.0), 1, 0)]);
    let b = alg.bracket_hl(&xi).unwrap();
    assert_eq!(b.len(), 1);
    assert!((b.terms[0].coeff - c(0.0, -s.omega())).norm() < 1e-15);
    let action = HamiltonianPoly::from_terms(vec![AlgebraTerm::scalar(c(1.0, 0.0), 1, 1)]);
    assert!(alg.bracket_hl(&action).unwrap().is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = alg.random_point(0.3, &mut rng);
    let hl = alg.evaluate_hl(&PhasePoint { xi: c(1.0, 0.0), f: GridFunction::zeros(s.len()) });
    assert!((hl - s.omega()).abs() < 1e-15);
    assert!(alg.evaluate_hl(&z) > 0.0);
}

#[test]
fn antisymmetry_and_jacobi() {
    let s = spec04();
    let alg = Algebra::new(s, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..4 {
        let a = random_poly(&alg, &mut rng, 4);
        let b = random_poly(&alg, &mut rng, 4);
        let cc = random_poly(&alg, &mut rng, 3);
        let ab = alg.bracket(&a, &b);
        let ba = alg.bracket(&b, &a);
        let diff = ab.difference_magnitude(&ba.scaled(c(-1.0, 0.0)));
        assert!(diff <= 1e-12 * ab.magnitude().max(1e-300), "antisymmetry {diff}");

        let j1 = alg.bracket(&alg.bracket(&a, &b), &cc);
        let j2 = alg.bracket(&alg.bracket(&b, &cc), &a);
        let j3 = alg.bracket(&alg.bracket(&cc, &a), &b);
        for _ in 0..5 {
            let z = alg.random_point(0.7, &mut rng);
            let (x1, x2, x3) = (alg.evaluate(&j1, &z), alg.evaluate(&j2, &z), alg.evaluate(&j3, &z));
            let scale = x1.norm() + x2.norm() + x3.norm();
            assert!((x1 + x2 + x3).norm() <= 1e-10 * scale.max(1e-300), "jacobi {} of {scale}", (x1 + x2 + x3).norm());
        }
    }
}

#[test]
fn bracket_matches_vector_field_derivative() {
    // d/dt A(flow_B) = {B, A}: compare the algebraic bracket with the directional derivative.
    let s = spec04();
    let alg = Algebra::new(s, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_poly(&alg, &mut rng, 5);
    let mut b = random_poly(&alg, &mut rng, 5);
    b.add(&b.conjugate());
    b.canonicalize();
    let z = alg.random_point(0.5, &mut rng);
    let v = alg.vector_field(&b, &z);
    let h = 1e-5;
    let zp = PhasePoint { xi: z.xi + v.xi * h, f: z.f.add(&v.f.scale(h.into())) };
    let zm = PhasePoint { xi: z.xi - v.xi * h, f: z.f.sub(&v.f.scale(h.into())) };
    let fd = (alg.evaluate(&a, &zp) - alg.evaluate(&a, &zm)) / (2.0 * h);
    let exact = alg.evaluate(&alg.bracket(&b, &a), &z);
    assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1e-3), "{fd} vs {exact}");
}

#[test]
fn step0_expansion() {
    let s = spec04();
    let alg = Algebra::new(s, 8);
    let lambda = -1.0;
    let p = step0_hamiltonian(&alg, lambda);
    let g = s.grid();
    let int_phi4: f64 = s.phi().iter().enumerate().map(|(i, x)| x.powi(4) / (g.r(i) * g.r(i))).sum::<f64>() * g.dr();
    let t = p.terms.iter().find(|t| t.is_scalar() && t.mu == 4).unwrap();
    let want = -0.25 * lambda * (2.0 * s.omega()).powi(-2) * int_phi4;
    assert!((t.coeff - c(want, 0.0)).norm() < 1e-13 * want.abs());
    assert!(p.is_real(1e-12));

    let src = crate::fgr::cubic_source(s);
    let g3 = alg.smooth(&src);
    let lin = p.terms.iter().find(|t| t.is_f_linear() && t.mu == 0 && t.nu == 3 && !t.linear[0].conjugated).unwrap();
    let ratio = lin.linear[0].vector.values[10] / g3.values[10];
    let expect = -lambda / (4.0 * s.omega().powf(1.5));
    assert!((ratio - c(expect, 0.0)).norm() < 1e-12 * expect.abs());

    // Oracle: direct quadrature of -(lambda/4) int u^4 with u rebuilt from (xi, f).
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let amp = rng.random_range(0.01..0.2);
        let z = alg.random_point(amp, &mut rng);
        let q = (z.xi + z.xi.conj()).re / (2.0 * s.omega()).sqrt();
        let u = alg.field_u(&z.f);
        let w: Vec<f64> = s.phi().iter().zip(&u).map(|(p, x)| q * p + x).collect();
        let l4 = lp_norm(&GridFunction::from_real(&w), 4.0, g);
        let direct = -0.25 * lambda * l4.powi(4) / (4.0 * std::f64::consts::PI);
        let val = alg.evaluate(&p, &z);
        assert!(val.im.abs() < 1e-12 * direct.abs());
        assert!(((val.re - direct) / direct).abs() < 1e-10, "{} vs {direct}", val.re);
    }
}

#[test]
fn homological_examples() {
    for (omega, stays) in [(0.3, false), (0.4, true)] {
        let s = spec_with_omega(omega);
        let alg = Algebra::new(&s, 10);
        let v = Arc::new(s.project(&crate::fgr::cubic_source(&s), Part::Continuous));
        let k = HamiltonianPoly::from_terms(vec![AlgebraTerm::linear(c(1.0, 0.0), 0, 3, v, false)]);
        let (z, chi) = solve_homological(&alg, &k).unwrap();
        assert_eq!(z.len(), stays as usize, "omega {omega}");
        assert_eq!(chi.len(), 1 - stays as usize);
        let step = StepLog { step: 1, degree: 4, k: k.clone(), z, chi, terms_after: 0, remainder_norm: 0.0 };
        let r = homological_residual(&alg, &step).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pt = alg.random_point(0.1, &mut rng);
            let kv = alg.evaluate(&k, &pt).norm();
            assert!(alg.evaluate(&r, &pt).norm() < 1e-10 * kv);
        }
    }
    let s = spec04();
    let alg = Algebra::new(s, 10);
    let k = HamiltonianPoly::from_terms(vec![AlgebraTerm::scalar(c(1.0, 0.0), 2, 2)]);
    let (z, chi) = solve_homological(&alg, &k).unwrap();
    assert_eq!((z.len(), chi.len()), (1, 0));
}

#[test]
fn recursion_n1() {
    let s = spec04();
    let lambda = -1.0;
    let res = normal_form_recursion(s, lambda, 1, &RecursionOptions::for_order(1)).unwrap();
    assert_eq!(res.chi_list.len(), 2);
    assert!(classify_violations(&res.z, s.omega(), s.mass()).is_empty());
    assert!(res.z.terms.iter().all(|t| t.degree() <= 4));
    let alg = Algebra::new(s, 6);
    let g3 = alg.smooth(&crate::fgr::cubic_source(s));
    let want = g3.scale(c(-lambda / (4.0 * s.omega().powf(1.5)), 0.0));
    assert!(res.phi_res.sub(&want).max_abs() < 1e-12 * want.max_abs());
    assert!(res.gamma.gamma > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for step in &res.steps {
        let r = homological_residual(&alg, step).unwrap();
        for _ in 0..5 {
            let z = alg.random_point(0.05, &mut rng);
            let kv = alg.evaluate(&step.k, &z).norm();
            assert!(alg.evaluate(&r, &z).norm() <= 1e-10 * kv.max(1e-300));
        }
    }
    assert!(matches!(
        normal_form_recursion(s, lambda, 1, &RecursionOptions { d_max: 5, ..RecursionOptions::for_order(1) }),
        Err(crate::Error::TruncationOverflow(_))
    ));
}

#[test]
fn flow_is_near_identity_and_invertible() {
    let s = spec04();
    let res = normal_form_recursion(s, 1.0, 1, &RecursionOptions::for_order(1)).unwrap();
    let alg = Algebra::new(s, res.d_max);
    let chi = &res.chi_list[0];
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let base = alg.random_point(1.0, &mut rng);
    let dr = s.grid().dr();
    let zero = lie_transform_flow(&alg, &HamiltonianPoly::new(), &base, 1.0, 10.0, 1e-12).unwrap();
    assert_eq!(zero, base);
    let mut pts = Vec::new();
    for amp in [1e-2, 1e-3, 1e-4] {
        let z = base.scale(amp);
        let t = lie_transform_flow(&alg, chi, &z, 1.0, 1.0, 1e-12).unwrap();
        let back = lie_transform_flow(&alg, chi, &t, -1.0, 1.0, 1e-12).unwrap();
        assert!(back.sub(&z).norm(dr) < 1e-10 * z.norm(dr));
        pts.push((z.norm(dr).ln(), t.sub(&z).norm(dr).ln()));
    }
    let order = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    assert!(order >= 2.8, "order {order}");
    assert!(matches!(
        lie_transform_flow(&alg, chi, &base.scale(2.0), 1.0, 1.0, 1e-10),
        Err(crate::Error::DomainExit { .. })
    ));
}
