use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

/// Kernels of the two convolution lemmas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConvolutionKernel {
    /// `min{s^{-(1+delta)}, s^{-(1-delta)}}`, compared against `<eps t>^{-alpha}`.
    Dispersive { delta: f64 },
    /// `s^{-1/2}`, compared against `|xi0|^{-2N} <eps t>^{-1/2}`.
    HalfPower,
}

impl ConvolutionKernel {
    fn value(&self, s: f64) -> f64 {
        match *self {
            ConvolutionKernel::Dispersive { delta } => {
                if s < 1.0 {
                    s.powf(-(1.0 - delta))
                } else {
                    s.powf(-(1.0 + delta))
                }
            }
            ConvolutionKernel::HalfPower => s.powf(-0.5),
        }
    }

    /// Exponent of the integrable singularity at `s = 0`.
    fn singular_exponent(&self) -> f64 {
        match *self {
            ConvolutionKernel::Dispersive { delta } => 1.0 - delta,
            ConvolutionKernel::HalfPower => 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvolutionCheck {
    pub times: Vec<f64>,
    pub integrals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

const NODES: usize = 16;

/// `int_0^t K(t - s) <eps s>^{-alpha} ds` with `eps = |xi0|^{4N}`.
fn convolve(kernel: ConvolutionKernel, alpha: f64, eps: f64, t: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    // Integrate in tau = t - s; break at tau = 1 (kernel kink), geometrically towards tau = 0 and
    // towards s = 0 on the scale 1/eps.
    let mut pts = vec![0.0, t];
    let tau_min = 1e-6 * t.min(1.0);
    let mut x = t;
    while x > tau_min {
        x *= 0.5;
        pts.push(x);
    }
    if t > 1.0 {
        pts.push(1.0);
    }
    for k in -40..=60 {
        let s = 2f64.powi(k) / eps.max(1e-300) * 1e-6;
        if s < t {
            pts.push(t - s);
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t);
    let h = |tau: f64| bracket(eps * (t - tau)).powf(-alpha);
    let (xs, ws) = gl;
    let beta = kernel.singular_exponent();
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == 0.0 {
            // tau = b x^p with p = 1/(1-beta) turns tau^{-beta} d tau into a smooth measure;
            // b <= 1 so the kernel is the pure power there.
            let p = 1.0 / (1.0 - beta);
            let pref = b.powf(1.0 - beta) * p;
            total += pref * xs.iter().zip(ws).map(|(x, wt)| 0.5 * wt * h(b * (0.5 * (x + 1.0)).powf(p))).sum::<f64>();
        } else {
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            total += half * xs.iter().zip(ws).map(|(x, wt)| {
                let tau = mid + half * x;
                wt * kernel.value(tau) * h(tau)
            }).sum::<f64>();
        }
    }
    total
}

/// Ratio of the convolution integral to the bound claimed by the lemma, over `times`.
pub fn convolution_check(kernel: ConvolutionKernel, alpha: f64, xi0: f64, order: usize, times: &[f64]) -> Result<ConvolutionCheck> {
    match kernel {
        ConvolutionKernel::Dispersive { delta } => {
            if !(delta > 0.0 && delta < 1.0) || !(0.0..=1.0 + delta).contains(&alpha) {
                return Err(Error::InvalidArgument(format!("need 0 < delta < 1 and 0 <= alpha <= 1 + delta, got delta={delta}, alpha={alpha}")));
            }
        }
        ConvolutionKernel::HalfPower => {
            if !(alpha > 1.0) {
                return Err(Error::InvalidArgument(format!("need alpha > 1, got {alpha}")));
            }
        }
    }
    if order == 0 || !(xi0 > 0.0 && xi0.is_finite()) || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("need N >= 1, |xi0| > 0 and positive times".into()));
    }
    let eps = xi0.powi(4 * order as i32);
    let gl = gauss_legendre(NODES);
    let integrals: Vec<f64> = times.iter().map(|&t| convolve(kernel, alpha, eps, t, &gl)).collect();
    let ratios: Vec<f64> = times
        .iter()
        .zip(&integrals)
        .map(|(&t, i)| {
            let bound = match kernel {
                ConvolutionKernel::Dispersive { .. } => bracket(eps * t).powf(-alpha),
                ConvolutionKernel::HalfPower => eps.powf(-0.5) * bracket(eps * t).powf(-0.5),
            };
            i / bound
        })
        .collect();
    let max_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
    Ok(ConvolutionCheck { times: times.to_vec(), integrals, ratios, max_ratio })
}
