//! Bound-state envelope: mode extraction, the reduced decay law, its comparison barriers, decay
//! fits and the convolution estimates behind the bootstrap.

mod convolution;
mod modes;
mod ode;
mod series;

pub use convolution::{convolution_check, ConvolutionCheck, ConvolutionKernel};
pub use modes::{bound_mode, extract_modes, main_term_f, reconstruct, MainTerm, ModePair};
pub use ode::{
    closed_form_abs_xi, comparison_bounds, envelope_ode_solve, measured_forcing, BarrierPair, EnvelopeSolution, ForcingEstimate,
};
pub use series::{
    fit_decay, fit_decay_shifted, moving_average, resonance_window, theta_growth, write_fit_report, EnvelopeSeries, FitRow,
    Quantity, DEFAULT_SIGMA, MIN_FIT_SAMPLES,
};

#[cfg(test)]
mod tests;
