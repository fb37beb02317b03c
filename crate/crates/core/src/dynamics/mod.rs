//! Time integration of the radial equation `w_tt = w_rr - (m^2 + V) w + lambda w^3 / r^2` and
//! measurements of linear dispersive decay.

mod model;
mod probe;
mod sim;
mod stepper;

pub use model::{energy, Model, Scheme, SimState};
pub use probe::{dispersive_decay_probe, singular_resolvent_probe, DecayProbe, PROBE_SAMPLES};
pub use sim::{reflection_time, simulate, write_snapshot, InitialData, SimConfig, Trajectory, TrajectoryRow};
pub use stepper::{linear_propagate, step_nlkg, Integrator, DEFAULT_BLOWUP_BOUND};
