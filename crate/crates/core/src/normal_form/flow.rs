use num_complex::Complex64;

use super::algebra::{Algebra, PhasePoint};
use super::term::HamiltonianPoly;
use crate::error::{Error, Result};
use crate::numerics::{Dopri5, OdeOptions};
use crate::spectral::GridFunction;

fn pack(z: &PhasePoint) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 + 2 * z.f.len());
    y.push(z.xi.re);
    y.push(z.xi.im);
    for v in &z.f.values {
        y.push(v.re);
        y.push(v.im);
    }
    y
}

fn unpack(y: &[f64]) -> PhasePoint {
    PhasePoint {
        xi: Complex64::new(y[0], y[1]),
        f: GridFunction { values: y[2..].chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect() },
    }
}

/// Time-`direction` flow of the Hamiltonian vector field of `chi` (`direction` = +1 or -1).
/// Fails with a domain exit if `|z|` leaves the ball of the given radius.
pub fn lie_transform_flow(
    alg: &Algebra,
    chi: &HamiltonianPoly,
    z: &PhasePoint,
    direction: f64,
    radius: f64,
    tol: f64,
) -> Result<PhasePoint> {
    if chi.is_empty() {
        return Ok(z.clone());
    }
    let dr = alg.spec.grid().dr();
    let scale = z.norm(dr).max(f64::MIN_POSITIVE);
    let mut y = pack(z);
    let opts = OdeOptions { rtol: tol, atol: tol * scale * 1e-3, h_init: 0.1, ..OdeOptions::default() };
    let mut ode = Dopri5::new(y.len(), opts);
    ode.integrate(
        0.0,
        direction,
        &mut y,
        |_, y, dy| {
            let v = alg.vector_field(chi, &unpack(y));
            dy.copy_from_slice(&pack(&v));
        },
        |t, y| {
            let sq = y[0] * y[0] + y[1] * y[1] + y[2..].iter().map(|x| x * x).sum::<f64>() * dr;
            let norm = sq.sqrt();
            if norm > radius {
                Err(Error::DomainExit { norm, radius, time: t })
            } else {
                Ok(())
            }
        },
    )?;
    Ok(unpack(&y))
}

/// `T(z) = phi_1(phi_2(... phi_r(z)))` for generators `chi_1 .. chi_r`.
pub fn compose_transform(alg: &Algebra, chis: &[HamiltonianPoly], z: &PhasePoint, radius: f64, tol: f64) -> Result<PhasePoint> {
    let mut cur = z.clone();
    for chi in chis.iter().rev() {
        cur = lie_transform_flow(alg, chi, &cur, 1.0, radius, tol)?;
    }
    Ok(cur)
}
