use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::dynamics::{linear_propagate, SimState};
use crate::error::Error;
use crate::spectral::{tune_gaussian_depth, GridFunction, Part, Potential, PotentialSpec, RadialGrid, SpectralData};

fn spec() -> &'static SpectralData {
    static S: OnceLock<SpectralData> = OnceLock::new();
    S.get_or_init(|| {
        let grid = RadialGrid::new(20.0, 159).unwrap();
        let depth = tune_gaussian_depth(0.4, 1.0, 1.0, &grid).unwrap();
        SpectralData::new(&grid, &PotentialSpec::new(Potential::Gaussian { depth, width: 1.0 }, 1.0).unwrap()).unwrap()
    })
}

fn mixed_state(a: f64, b: f64) -> SimState {
    let g = spec().grid();
    SimState {
        w: g.nodes().enumerate().map(|(i, r)| a * spec().phi()[i] + b * r * (-(r - 3.0).powi(2)).exp()).collect(),
        w_t: g.nodes().map(|r| (a - b) * r * (-(r - 1.0).powi(2)).exp()).collect(),
        t: 0.7,
    }
}

fn geometric(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| t0 * (t1 / t0).powf(j as f64 / (n - 1) as f64)).collect()
}

#[test]
fn bound_state_mode() {
    let s = spec();
    let st = SimState { w: s.phi().to_vec(), w_t: vec![0.0; s.len()], t: 0.0 };
    let m = extract_modes(&st, s);
    assert!((m.xi - Complex64::new((0.5 * s.omega()).sqrt(), 0.0)).norm() < 1e-12);
    assert!(m.f.max_abs() < 1e-12);
}

#[test]
fn modes_round_trip() {
    let s = spec();
    let st = mixed_state(0.3, 0.5);
    let m = extract_modes(&st, s);
    let pc = s.project(&m.f, Part::Continuous);
    assert!(pc.sub(&m.f).max_abs() < 1e-12);
    let back = reconstruct(&m, s);
    assert!(back.distance(&st, s.grid().dr()) < 1e-10);
    assert_eq!(back.t, st.t);
}

#[test]
fn linear_rotation_of_xi() {
    let s = spec();
    let st = SimState { w: s.phi().iter().map(|p| 0.2 * p).collect(), w_t: vec![0.0; s.len()], t: 0.0 };
    let xi0 = extract_modes(&st, s).xi;
    for t in [0.5, 3.0, 40.0] {
        let xi = extract_modes(&linear_propagate(s, &st, t), s).xi;
        assert!((xi - xi0 * Complex64::from_polar(1.0, -s.omega() * t)).norm() < 1e-9);
    }
}

#[test]
fn envelope_matches_closed_form() {
    let times: Vec<f64> = (0..=100).map(|k| 1e3 * k as f64).collect();
    for order in [1, 2] {
        for gamma in [0.1, 0.5] {
            for xi0 in [0.05, 0.1] {
                let sol = envelope_ode_solve(xi0, gamma, order, &times, None).unwrap();
                assert!(!sol.clipped);
                for (t, v) in times.iter().zip(&sol.abs_xi) {
                    let exact = closed_form_abs_xi(xi0, gamma, order, *t);
                    assert!(((v - exact) / exact).abs() < 1e-8, "N {order} gamma {gamma} xi0 {xi0} t {t}");
                }
            }
        }
    }
}

#[test]
fn envelope_without_damping_is_constant() {
    let sol = envelope_ode_solve(0.3, 0.0, 1, &[0.0, 1.0, 1e4], None).unwrap();
    assert!(sol.abs_xi.iter().all(|v| (v - 0.3).abs() < 1e-15));
}

#[test]
fn envelope_clips_under_strong_forcing() {
    let f = |_: f64, _: f64| -1.0;
    let sol = envelope_ode_solve(0.1, 0.1, 1, &[0.0, 0.005, 0.02, 0.05], Some(&f)).unwrap();
    assert!(sol.clipped);
    assert_eq!(*sol.abs_xi.last().unwrap(), 0.0);
}

#[test]
fn envelope_rejects_negative_gamma() {
    assert!(matches!(envelope_ode_solve(0.1, -1.0, 1, &[0.0], None), Err(Error::InvalidArgument(_))));
}

#[test]
fn order_two_exponent() {
    let (gamma, xi0): (f64, f64) = (0.5, 0.1);
    let gp = 8.0 * gamma * xi0.powi(8);
    let times = geometric(1e4 / gp, 1e6 / gp, 60);
    let mut all = vec![0.0];
    all.extend(&times);
    let sol = envelope_ode_solve(xi0, gamma, 2, &all, None).unwrap();
    let fit = fit_decay(&times, &sol.abs_xi[1..], times[0], *times.last().unwrap()).unwrap();
    assert!((fit.slope + 0.125).abs() < 0.02 * 0.125, "slope {}", fit.slope);
}

#[test]
fn order_one_late_slope() {
    let (gamma, xi0): (f64, f64) = (0.5, 0.1);
    let gp = 4.0 * gamma * xi0.powi(4);
    let times = geometric(1e2 / gp, 1e5 / gp, 50);
    let mut all = vec![0.0];
    all.extend(&times);
    let sol = envelope_ode_solve(xi0, gamma, 1, &all, None).unwrap();
    let fit = fit_decay(&times, &sol.abs_xi[1..], times[0], *times.last().unwrap()).unwrap();
    assert!((fit.slope + 0.25).abs() < 0.02 * 0.25, "slope {}", fit.slope);
}

#[test]
fn unforced_barriers() {
    let b = comparison_bounds(1e-4, 0.7, 1, 0.0, 0.1).unwrap();
    assert_eq!((b.c0, b.d), (0.0, 0.0));
    for t in [0.0, 10.0, 1e5] {
        let h = 1e-4 / (1.0 + 4.0 * 0.7 * 1e-4 * t);
        assert_eq!(b.upper(t), h);
        assert_eq!(b.lower(t), h);
    }
}

fn sandwich_holds(order: usize, xi0: f64, gamma: f64, q0: f64, sign: f64) {
    let r0 = xi0.powi(4 * order as i32);
    let b = comparison_bounds(r0, gamma, order, q0, 0.1).unwrap();
    assert!(b.upper(0.0) >= r0 && b.lower(0.0) <= r0);
    let forcing = move |t: f64, r: f64| sign * 2.0 * r.sqrt() * b.forcing_bound(t);
    let t_scale = 1.0 / (4.0 * order as f64 * gamma * r0);
    let mut times = vec![0.0];
    times.extend(geometric(1e-3 * t_scale, 1e4 * t_scale, 200));
    let sol = envelope_ode_solve(xi0, gamma, order, &times, Some(&forcing)).unwrap();
    for (t, v) in times.iter().zip(&sol.abs_xi) {
        let y = v.powi(4 * order as i32);
        assert!(y <= b.upper(*t) * (1.0 + 1e-9), "N {order} sign {sign} t {t}: {y} > {}", b.upper(*t));
        assert!(y >= b.lower(*t) * (1.0 - 1e-9), "N {order} sign {sign} t {t}: {y} < {}", b.lower(*t));
    }
}

#[test]
fn barrier_sandwich() {
    for sign in [1.0, -1.0] {
        sandwich_holds(1, 0.1, 1.0, 1e-7, sign);
        sandwich_holds(2, 0.3, 2.0, 1e-6, sign);
    }
}

#[test]
fn barrier_constant_scaling() {
    let (gamma, order) = (0.8, 1usize);
    let r0 = 0.1f64.powi(4);
    let n4 = 4.0 * order as f64;
    for q0 in [1e-10, 1e-9, 1e-8, 1e-7, 1e-6] {
        let b = comparison_bounds(r0, gamma, order, q0, 0.1).unwrap();
        let scale = (q0 / gamma).sqrt() * r0.powf((n4 - 1.0) / (2.0 * n4)) + (q0 / gamma).powf(n4 / (n4 + 1.0));
        let ratio = b.c0 / scale;
        assert!((0.5..=2.0).contains(&ratio), "Q0 {q0}: ratio {ratio}");
    }
}

#[test]
fn barrier_rejects_large_forcing() {
    assert!(matches!(comparison_bounds(1e-4, 1.0, 1, 1.0, 0.1), Err(Error::HypothesisViolated(_))));
    assert!(matches!(comparison_bounds(1e-4, 0.0, 1, 1e-9, 0.1), Err(Error::HypothesisViolated(_))));
    assert!(comparison_bounds(1e-4, 1.0, 1, 1e-9, 1.5).is_err());
}

#[test]
fn measured_forcing_of_exact_law_vanishes() {
    let (gamma, xi0) = (0.5, 0.2);
    let times: Vec<f64> = (0..400).map(|k| 5.0 * k as f64).collect();
    let abs: Vec<f64> = times.iter().map(|t| closed_form_abs_xi(xi0, gamma, 1, *t)).collect();
    let est = measured_forcing(&times, &abs, gamma, 1, 0.1).unwrap();
    assert_eq!(est.r_xi.len(), times.len() - 2);
    assert!(est.q0 < 1e-6, "q0 {}", est.q0);
    let mismatched = measured_forcing(&times, &abs, 2.0 * gamma, 1, 0.1).unwrap();
    assert!(mismatched.q0 > 100.0 * est.q0);
}

#[test]
fn fit_examples() {
    let times = geometric(1.0, 1e4, 50);
    let power: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-0.25)).collect();
    let fit = fit_decay(&times, &power, 1.0, 1e4).unwrap();
    assert!((fit.slope + 0.25).abs() < 1e-12);
    let flat = vec![2.0; times.len()];
    assert!(fit_decay(&times, &flat, 1.0, 1e4).unwrap().slope.abs() < 1e-12);
    assert!(matches!(fit_decay(&times, &flat, 1e5, 1e6), Err(Error::EmptyWindow { count: 0, .. })));
    let shifted: Vec<f64> = times.iter().map(|t| (t + 7.0).powf(-0.5)).collect();
    assert!((fit_decay_shifted(&times, &shifted, 1.0, 1e4, 7.0).unwrap().slope + 0.5).abs() < 1e-12);
}

fn series_with_theta(theta: impl Fn(f64) -> f64, omega: f64) -> EnvelopeSeries {
    let times: Vec<f64> = (1..=400).map(|k| 0.25 * k as f64).collect();
    let xi = times.iter().map(|&t| Complex64::from_polar(0.1, -(omega * t + theta(t)))).collect();
    let eta = vec![1.0; times.len()];
    EnvelopeSeries::new(omega, times, xi, eta).unwrap()
}

#[test]
fn theta_examples() {
    let fit = theta_growth(&series_with_theta(|t| t.powf(0.75), 0.4)).unwrap();
    assert!((fit.slope - 0.75).abs() < 0.01);
    let flat = theta_growth(&series_with_theta(|_| 0.0, 0.4)).unwrap();
    assert!(flat.slope.abs() < 1e-9);
}

#[test]
fn phase_jump_is_ambiguous() {
    let xi = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
    let err = EnvelopeSeries::new(0.0, vec![0.0, 1.0], xi, vec![1.0, 1.0]).unwrap_err();
    assert!(matches!(err, Error::PhaseAmbiguous { .. }));
}

#[test]
fn moving_average_of_sine_is_flat() {
    let times: Vec<f64> = (0..2000).map(|k| 0.01 * k as f64).collect();
    let v: Vec<f64> = times.iter().map(|t| 2.0 + (2.0 * std::f64::consts::PI * t).sin()).collect();
    let avg = moving_average(&times, &v, 1.0);
    for a in &avg[100..1900] {
        assert!((a - 2.0).abs() < 0.02);
    }
}

#[test]
fn fit_report_csv() {
    let row = FitRow { quantity: "abs_xi".into(), t0: 1.0, t1: 2.0, slope: -0.2, stderr: 0.01, predicted: -0.25 };
    assert!((row.ratio() - 0.8).abs() < 1e-12);
    let mut buf = Vec::new();
    write_fit_report(&[row], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("quantity,t0,t1,slope,stderr,predicted,ratio\nabs_xi,"));
}

#[test]
fn main_term_homogeneity() {
    let s = spec();
    let g = s.grid();
    let phi_res = s.project(&GridFunction::from_fn(g, |r| Complex64::new(r * r * (-r).exp(), 0.0)), Part::Continuous);
    let zero = main_term_f(Complex64::new(0.0, 0.0), &phi_res, s, 1).unwrap();
    assert_eq!(zero.f.max_abs(), 0.0);
    let xi = Complex64::new(0.03, -0.02);
    let a = main_term_f(xi, &phi_res, s, 1).unwrap();
    let b = main_term_f(xi * 2.0, &phi_res, s, 1).unwrap();
    assert!(b.f.sub(&a.f.scale(Complex64::new(8.0, 0.0))).max_abs() < 1e-12 * b.f.max_abs());
    assert!(a.f.max_abs() > 0.0);
}

#[test]
fn convolution_parameter_ranges() {
    let t = [1.0, 10.0];
    assert!(convolution_check(ConvolutionKernel::Dispersive { delta: 0.2 }, 1.3, 0.1, 1, &t).is_err());
    assert!(convolution_check(ConvolutionKernel::Dispersive { delta: 1.2 }, 0.5, 0.1, 1, &t).is_err());
    assert!(convolution_check(ConvolutionKernel::HalfPower, 1.0, 0.1, 1, &t).is_err());
    assert!(convolution_check(ConvolutionKernel::HalfPower, 1.5, 0.0, 1, &t).is_err());
}

#[test]
fn convolution_ratios_bounded() {
    let times = geometric(1.0, 1e6, 25);
    let a1 = convolution_check(ConvolutionKernel::Dispersive { delta: 0.25 }, 1.0, 0.2, 1, &times).unwrap();
    let a2 = convolution_check(ConvolutionKernel::HalfPower, 1.5, 0.2, 1, &times).unwrap();
    for c in [&a1, &a2] {
        assert!(c.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        assert!(c.max_ratio <= 50.0, "max ratio {}", c.max_ratio);
    }
}

#[test]
fn convolution_exact_half_power() {
    // alpha = 2 and eps = 1: int_0^t (t-s)^{-1/2} (1+s^2)^{-1} ds at t = 1 by a fine midpoint rule on sqrt substitution
    let c = convolution_check(ConvolutionKernel::HalfPower, 2.0, 1.0, 1, &[1.0]).unwrap();
    let n = 200_000;
    let mut sum = 0.0;
    for k in 0..n {
        let u = (k as f64 + 0.5) / n as f64;
        let s = 1.0 - u * u;
        sum += 2.0 / (1.0 + s * s) / n as f64;
    }
    assert!((c.integrals[0] - sum).abs() < 1e-8 * sum, "{} vs {sum}", c.integrals[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn round_trip_random(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let st = mixed_state(a, b);
        let back = reconstruct(&extract_modes(&st, spec()), spec());
        prop_assert!(back.distance(&st, spec().grid().dr()) < 1e-10);
    }

    #[test]
    fn closed_form_is_monotone(xi0 in 0.01f64..0.5, gamma in 0.0f64..5.0, order in 1usize..3, t in 0.0f64..1e6) {
        let a = closed_form_abs_xi(xi0, gamma, order, t);
        let b = closed_form_abs_xi(xi0, gamma, order, 2.0 * t + 1.0);
        prop_assert!(b <= a && a <= xi0);
    }

    #[test]
    fn barriers_bracket_initial_value(xi0 in 0.05f64..0.4, gamma in 0.1f64..10.0, frac in 0.0f64..0.5, order in 1usize..3) {
        let r0 = xi0.powi(4 * order as i32);
        let a = (4.0 * order as f64 - 1.0) / (4.0 * order as f64);
        let q0 = frac * gamma * r0.powf(2.0 - a) * 0.81 / 4.0;
        let b = comparison_bounds(r0, gamma, order, q0, 0.1).unwrap();
        prop_assert!(b.upper(0.0) >= r0 && b.lower(0.0) <= r0);
        prop_assert!(b.lower(0.0) > 0.0);
        for t in [1.0, 1e3, 1e6] {
            prop_assert!(b.upper(t) >= b.lower(t));
            prop_assert!(b.upper(t) <= b.upper(0.0));
        }
    }
}
