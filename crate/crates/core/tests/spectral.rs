use nlkg_core::spectral::{bound_state, GridFunction, Part, Potential, PotentialSpec, RadialGrid, SpectralData};
use nlkg_core::{Complex64, Error};
use proptest::prelude::*;

/// Binding energies b of the 3D square well (radial s-waves) from
/// sqrt(V0 - b) cot(a sqrt(V0 - b)) = -sqrt(b), located by scanning and bisection.
fn square_well_bindings(v0: f64, a: f64) -> Vec<f64> {
    let f = |b: f64| {
        let k = (v0 - b).sqrt();
        k / (k * a).tan() + b.sqrt()
    };
    let mut roots = Vec::new();
    let steps = 200_000;
    let mut prev_b = 1e-12;
    let mut prev = f(prev_b);
    for i in 1..steps {
        let b = v0 * i as f64 / steps as f64;
        let cur = f(b);
        if prev.signum() != cur.signum() && (prev - cur).abs() < 1e3 {
            let (mut lo, mut hi) = (prev_b, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == f(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_b = b;
        prev = cur;
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

#[test]
fn free_box_spectrum_converges_at_second_order() {
    let r_max = 20.0;
    let exact = |k: usize| 1.0 + (k as f64 * std::f64::consts::PI / r_max).powi(2);
    let errs: Vec<Vec<f64>> = [199usize, 399]
        .iter()
        .map(|&n| {
            let g = RadialGrid::new(r_max, n).unwrap();
            let h = nlkg_core::spectral::assemble_hamiltonian(&g, &PotentialSpec::new(Potential::Zero, 1.0).unwrap());
            let vals = nlkg_core::spectral::tridiag::eigenvalues(&h).unwrap();
            (1..=5).map(|k| ((vals[k - 1] - exact(k)) / exact(k)).abs()).collect()
        })
        .collect();
    for k in 0..5 {
        let order = (errs[0][k] / errs[1][k]).log2();
        assert!(order >= 1.8, "mode {}: order {order}", k + 1);
        assert!(errs[1][k] < 1e-4);
    }
}

#[test]
fn square_well_single_bound_state_matches_oracle() {
    let b = square_well_bindings(4.0, 1.0);
    assert_eq!(b.len(), 1);
    let pot = PotentialSpec::new(Potential::SquareWell { depth: 4.0, radius: 1.0 }, 1.0).unwrap();
    let grid = RadialGrid::new(30.0, 1500).unwrap();
    let spec = SpectralData::new(&grid, &pot).unwrap();
    let want = 1.0 - b[0];
    let got = spec.omega().powi(2);
    assert!(((got - want) / want).abs() < 1e-3, "{got} vs {want}");
    assert_eq!(spec.eigenvalues().iter().filter(|&&e| e < 1.0).count(), 1);
}

#[test]
fn deeper_well_binds_two_states_and_is_rejected() {
    let v0 = 30.0;
    let b = square_well_bindings(v0, 1.0);
    assert_eq!(b.len(), 2);
    let pot = PotentialSpec::new(Potential::SquareWell { depth: v0, radius: 1.0 }, 1.0).unwrap();
    let grid = RadialGrid::new(20.0, 1000).unwrap();
    match SpectralData::new(&grid, &pot) {
        Err(Error::SpectralAssumption { count, eigenvalues }) => {
            assert_eq!(count, 2);
            for (e, bk) in eigenvalues.iter().zip(&b) {
                assert!((e - (1.0 - bk)).abs() < 2e-2 * bk, "{e} vs {}", 1.0 - bk);
            }
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(bound_state(&grid, &pot), Err(Error::SpectralAssumption { count: 2, .. })));
}

fn spec() -> &'static SpectralData {
    use std::sync::OnceLock;
    static S: OnceLock<SpectralData> = OnceLock::new();
    S.get_or_init(|| {
        let g = RadialGrid::new(15.0, 200).unwrap();
        SpectralData::new(&g, &PotentialSpec::new(Potential::Gaussian { depth: 6.0, width: 1.0 }, 1.0).unwrap()).unwrap()
    })
}

fn grid_function() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 200)
        .prop_map(|v| GridFunction { values: v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_algebra(v in grid_function()) {
        let s = spec();
        let pd = s.project(&v, Part::Discrete);
        let pc = s.project(&v, Part::Continuous);
        prop_assert!(pd.add(&pc).sub(&v).max_abs() < 1e-12);
        prop_assert!(s.project(&pc, Part::Discrete).max_abs() < 1e-12);
        prop_assert!(s.project(&pc, Part::Continuous).sub(&pc).max_abs() < 1e-12);
    }

    #[test]
    fn b_power_inverse_on_continuum(v in grid_function()) {
        let s = spec();
        let pc = s.project(&v, Part::Continuous);
        let back = s.apply_b_power(0.5, &s.apply_b_power(-0.5, &pc, Part::Continuous).unwrap(), Part::Continuous).unwrap();
        prop_assert!(back.sub(&pc).max_abs() < 1e-12);
    }
}
