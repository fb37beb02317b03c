use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use nlkg_core::dynamics::{reflection_time, simulate, InitialData, Model, Scheme, SimConfig, Trajectory};
use nlkg_core::envelope::{
    fit_decay_shifted, moving_average, resonance_window, theta_growth, write_fit_report, EnvelopeSeries, FitRow, Quantity,
};
use nlkg_core::fgr::{check_window, gamma_padded, window_order, DeltaParams, GoldenRuleReport};
use nlkg_core::normal_form::{
    classify_violations, homological_residual, normal_form_recursion, Algebra, HamiltonianPoly, NormalFormResult,
    PhasePoint, RecursionOptions, TOL_RES,
};
use nlkg_core::numerics::linear_fit;
use nlkg_core::spectral::{tune_gaussian_depth, Potential, PotentialSpec, RadialGrid, SpectralData};
use nlkg_core::{Complex64, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{PotentialKind, RunConfig};
use crate::output::Outputs;
use crate::CliError;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Random points per step in the homological residual check.
const RESIDUAL_SAMPLES: usize = 20;

pub struct Context {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
    pub allow_boundary: bool,
}

/// Operator, bound state and window index on the `[grid]` box.
pub struct Setup {
    pub pot: PotentialSpec,
    pub spec: SpectralData,
    pub order: usize,
}

fn potential(cfg: &RunConfig, grid: &RadialGrid) -> Result<PotentialSpec, CliError> {
    let p = &cfg.potential;
    let need_depth = || p.depth.ok_or_else(|| CliError::Config("[potential] square well needs a depth".into()));
    let potential = match p.kind {
        PotentialKind::Zero => Potential::Zero,
        PotentialKind::Square => Potential::SquareWell { depth: need_depth()?, radius: p.radius },
        PotentialKind::Gaussian => {
            let depth = match p.depth {
                Some(d) => d,
                None => tune_gaussian_depth(p.omega, p.width, p.mass, grid)?,
            };
            Potential::Gaussian { depth, width: p.width }
        }
        PotentialKind::Table => Potential::load_table(p.table.as_ref().expect("validated"))?,
    };
    Ok(PotentialSpec::new(potential, p.mass)?)
}

pub fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let grid = RadialGrid::with_spacing(cfg.grid.r_max, cfg.grid.dr)?;
    let pot = potential(cfg, &grid)?;
    pot.validate(&grid)?;
    let spec = SpectralData::new(&grid, &pot)?;
    let order = match cfg.normalform.order {
        0 => window_order(spec.omega(), spec.mass())?,
        n => {
            check_window(spec.omega(), spec.mass(), n)?;
            n
        }
    };
    Ok(Setup { pot, spec, order })
}

fn delta_params(cfg: &RunConfig) -> DeltaParams {
    DeltaParams { kernel_ladder: cfg.fgr.kernel_ladder.clone(), eps_ladder: cfg.fgr.eps_ladder.clone() }
}

fn normal_form(cfg: &RunConfig, s: &Setup) -> Result<NormalFormResult, CliError> {
    let d_max = match cfg.normalform.d_max {
        0 => 2 * s.order as u32 + 4,
        d => d,
    };
    let opts = RecursionOptions { d_max, remainder_budget: f64::INFINITY, delta: delta_params(cfg) };
    Ok(normal_form_recursion(&s.spec, cfg.simulate.lambda, s.order, &opts)?)
}

/// Golden-rule report for the resonant vector, on the padded box when configured.
fn golden_rule(cfg: &RunConfig, s: &Setup, nf: &NormalFormResult) -> Result<GoldenRuleReport, CliError> {
    if cfg.fgr.pad_r_max <= 0.0 {
        return Ok(nf.gamma.clone());
    }
    let r_max = cfg.fgr.pad_r_max.max(cfg.grid.r_max);
    Ok(gamma_padded(&nf.phi_res, &s.pot, cfg.grid.dr, s.spec.omega(), s.order, r_max, &delta_params(cfg))?)
}

/// The decay rate driving the predictions; zero for the linear equation.
fn rate(cfg: &RunConfig, s: &Setup) -> Result<f64, CliError> {
    if cfg.simulate.lambda == 0.0 {
        return Ok(0.0);
    }
    let nf = normal_form(cfg, s)?;
    Ok(golden_rule(cfg, s, &nf)?.gamma)
}

fn summary(s: &Setup) -> String {
    format!("unique bound state, omega={:.10}, N={} window", s.spec.omega(), s.order)
}

fn finish(ctx: &Context, mut out: Outputs, lines: &[String]) -> Result<(), CliError> {
    out.add_text("effective.ini", &ctx.cfg.effective_text());
    out.commit(&ctx.out_dir)?;
    for l in lines {
        println!("{l}");
    }
    Ok(())
}

pub fn spectrum(ctx: &Context) -> Result<(), CliError> {
    let s = setup(&ctx.cfg)?;
    let mut out = Outputs::new();
    out.add("spectrum.csv", |w| s.spec.write_csv(w))?;
    finish(ctx, out, &[summary(&s), format!("m={}, E_0={:.12e}", s.spec.mass(), s.spec.eigenvalues()[s.spec.bound_index()])])
}

pub fn fgr(ctx: &Context) -> Result<(), CliError> {
    let s = setup(&ctx.cfg)?;
    let nf = normal_form(&ctx.cfg, &s)?;
    let report = golden_rule(&ctx.cfg, &s, &nf)?;
    let mut out = Outputs::new();
    out.add("fgr.csv", |w| report.write_csv(w))?;
    let mut lines = vec![summary(&s), format!("gamma={:.10e} (kernel {:.6e}, resolvent {:.6e})", report.gamma, report.gamma_kernel, report.gamma_resolvent)];
    if report.flagged() {
        lines.push(format!("warning: kernel and resolvent estimates differ by {:.1}%", 100.0 * report.spread));
    }
    finish(ctx, out, &lines)
}

fn term_scale(alg: &Algebra, p: &HamiltonianPoly, z: &PhasePoint) -> f64 {
    p.terms.iter().map(|t| alg.evaluate(&HamiltonianPoly::from_terms(vec![t.clone()]), z).norm()).sum()
}

/// Largest homological residual over seeded random points, relative to the term-wise scale.
fn residual_check(nf: &NormalFormResult, spec: &SpectralData, seed: u64) -> Result<Vec<f64>, CliError> {
    let alg = Algebra::new(spec, nf.d_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Vec::with_capacity(nf.steps.len());
    for step in &nf.steps {
        let r = homological_residual(&alg, step)?;
        let bracket = alg.bracket_hl(&step.chi)?;
        let mut max = 0.0f64;
        for _ in 0..RESIDUAL_SAMPLES {
            let z = alg.random_point(0.05, &mut rng);
            let scale = term_scale(&alg, &step.k, &z) + term_scale(&alg, &step.z, &z) + term_scale(&alg, &bracket, &z);
            if scale > 0.0 {
                max = max.max(alg.evaluate(&r, &z).norm() / scale);
            }
        }
        worst.push(max);
    }
    Ok(worst)
}

pub fn normalform(ctx: &Context, seed: u64) -> Result<(), CliError> {
    let s = setup(&ctx.cfg)?;
    let nf = normal_form(&ctx.cfg, &s)?;
    let residuals = residual_check(&nf, &s.spec, seed)?;
    let violations = classify_violations(&nf.z, s.spec.omega(), s.spec.mass());
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    if !violations.is_empty() || worst > TOL_RES {
        return Err(CliError::Check(format!(
            "normal form rejected: {} non-normal terms, homological residual {worst:.3e}",
            violations.len()
        )));
    }
    let dr = s.spec.grid().dr();
    let mut out = Outputs::new();
    out.add("normal_form.csv", |w| nf.write_z_csv(s.spec.omega(), dr, w))?;
    out.add("phi_res.txt", |w| nf.write_phi_res(&s.spec, w))?;
    out.add("steps.csv", |w| {
        writeln!(w, "step,degree,terms_after,remainder_norm,residual")?;
        for (st, r) in nf.steps.iter().zip(&residuals) {
            writeln!(w, "{},{},{},{:.6e},{:.3e}", st.step, st.degree, st.terms_after, st.remainder_norm, r)?;
        }
        Ok(())
    })?;
    let lines = [
        summary(&s),
        format!("{} normal-form terms, gamma={:.10e}", nf.z.terms.len(), nf.gamma.gamma),
        "normal-form: OK".to_string(),
    ];
    finish(ctx, out, &lines)
}

fn initial_data(cfg: &RunConfig, omega: f64) -> InitialData {
    InitialData {
        a0: cfg.simulate.amplitude.xi0(omega) * (2.0 / omega).sqrt(),
        c0: cfg.simulate.c0,
        c_max: cfg.simulate.c_max,
        ..InitialData::default()
    }
}

fn sim_grid(cfg: &RunConfig) -> Result<RadialGrid, CliError> {
    Ok(RadialGrid::with_spacing(cfg.sim_box(), cfg.grid.dr)?)
}

fn run_simulation(cfg: &RunConfig, pot: &PotentialSpec, allow_boundary: bool) -> Result<Trajectory, CliError> {
    let grid = sim_grid(cfg)?;
    let run = |model: &Model| {
        let sc = SimConfig {
            lambda: cfg.simulate.lambda,
            dt: cfg.simulate.dt,
            horizon: cfg.simulate.horizon,
            scheme: cfg.simulate.scheme,
            stride: cfg.stride(),
            initial: initial_data(cfg, model.omega()),
            blowup_bound: cfg.simulate.blowup,
            allow_boundary,
            keep_states: false,
        };
        simulate(model, &sc)
    };
    Ok(match cfg.simulate.scheme {
        Scheme::Leapfrog => run(&Model::finite_difference(&grid, pot)?)?,
        Scheme::Strang => {
            let spec = SpectralData::new(&grid, pot)?;
            run(&Model::spectral(&spec))?
        }
    })
}

/// Recorded samples, as read back from a trajectory CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Samples {
    pub times: Vec<f64>,
    pub abs_xi: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta_l8: Vec<f64>,
}

impl Samples {
    fn from_trajectory(t: &Trajectory) -> Self {
        Self {
            times: t.times(),
            abs_xi: t.abs_xi(),
            theta: t.rows.iter().map(|r| r.theta).collect(),
            eta_l8: t.rows.iter().map(|r| r.eta_l8).collect(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(CliError::MissingTrajectory(path.to_path_buf())),
            Err(e) => return Err(e.into()),
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(Trajectory::CSV_HEADER) {
            return Err(Error::Parse(format!("{}: expected header '{}'", path.display(), Trajectory::CSV_HEADER)).into());
        }
        let mut s = Samples::default();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Error::Parse(format!("{} line {}: {e}", path.display(), i + 2)))?;
            if cols.len() != 6 {
                return Err(Error::Parse(format!("{} line {}: expected 6 columns", path.display(), i + 2)).into());
            }
            s.times.push(cols[0]);
            s.abs_xi.push(cols[1]);
            s.theta.push(cols[2]);
            s.eta_l8.push(cols[3]);
        }
        Ok(s)
    }

    /// `xi = |xi| exp(-i (omega t + theta))`.
    fn series(&self, omega: f64) -> Result<EnvelopeSeries, CliError> {
        let xi = self
            .times
            .iter()
            .zip(&self.abs_xi)
            .zip(&self.theta)
            .map(|((t, a), th)| Complex64::from_polar(*a, -(omega * t + th)))
            .collect();
        Ok(EnvelopeSeries::new(omega, self.times.clone(), xi, self.eta_l8.clone())?)
    }
}

/// Fit results together with the inputs that fixed them.
pub struct Analysis {
    pub rows: Vec<FitRow>,
    pub gamma: f64,
    pub order: usize,
    pub xi0: f64,
    pub window: (f64, f64),
    pub notes: Vec<String>,
}

/// Exponents of `|xi|`, `||eta||_{L^8}`, `|xi|^{-4N}` and `theta` against their predictions.
pub fn analyse(
    cfg: &RunConfig,
    samples: &Samples,
    omega: f64,
    order: usize,
    gamma: f64,
    t_reflect: f64,
    allow_boundary: bool,
) -> Result<Analysis, CliError> {
    let (times, n) = (&samples.times, order as f64);
    let t_end = *times.last().ok_or_else(|| Error::InvalidArgument("trajectory has no samples".into()))?;
    let period = 2.0 * PI / omega;
    let t1 = cfg.fit.t1.unwrap_or(t_end - 0.5 * period);
    if t1 > t_end {
        return Err(Error::InvalidArgument(format!("fit window end {t1} lies beyond the last sample {t_end}")).into());
    }
    if t1 > t_reflect && !allow_boundary {
        return Err(Error::InvalidArgument(format!(
            "fit window end {t1} exceeds the reflection time {t_reflect:.3}; pass --allow-boundary to override"
        ))
        .into());
    }
    let xi0 = samples.abs_xi[0];
    let t0 = cfg.fit.t0.unwrap_or_else(|| {
        let start = if gamma > 0.0 { resonance_window(xi0, gamma, order, t1).0 } else { f64::INFINITY };
        start.min(0.5 * t1).max(period)
    });
    let span = if cfg.fit.smooth > 0.0 { cfg.fit.smooth } else { period };
    let smooth = moving_average(times, &samples.abs_xi, span);
    let shift = if gamma > 0.0 { 1.0 / (4.0 * n * gamma * xi0.powi(4 * order as i32)) } else { 0.0 };
    let row = |quantity: String, t0: f64, t1: f64, fit: nlkg_core::numerics::LinearFit, predicted: f64| FitRow {
        quantity,
        t0,
        t1,
        slope: fit.slope,
        stderr: fit.slope_stderr,
        predicted,
    };
    let mut rows = Vec::new();
    let mut notes = Vec::new();

    let fit = fit_decay_shifted(times, &smooth, t0, t1, shift)?;
    rows.push(row(Quantity::AbsXi.name(), t0, t1, fit, -1.0 / (4.0 * n)));

    match fit_decay_shifted(times, &samples.eta_l8, t0, t1, shift) {
        Ok(fit) => rows.push(row(Quantity::EtaL8.name(), t0, t1, fit, -3.0 / (4.0 * n))),
        Err(Error::InvalidArgument(_)) => notes.push("eta_L8 vanishes in the window; no fit".into()),
        Err(e) => return Err(e.into()),
    }

    if gamma > 0.0 {
        let (x, y): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(&smooth)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(t, v)| (*t, v.powi(-4 * order as i32)))
            .unzip();
        let fit = linear_fit(&x, &y);
        rows.push(row(Quantity::InverseXiPower(order).name(), t0, t1, fit, 4.0 * n * gamma));
    } else {
        notes.push("gamma = 0; no rate fit".into());
    }

    let series = samples.series(omega)?;
    let fit = theta_growth(&series)?;
    let first = times.iter().copied().find(|t| *t > 0.0).unwrap_or(0.0);
    rows.push(row("theta".into(), first, t_end, fit, 1.0 - 1.0 / (2.0 * n)));

    Ok(Analysis { rows, gamma, order, xi0, window: (t0, t1), notes })
}

fn fit_lines(a: &Analysis) -> Vec<String> {
    let mut lines = vec![format!("gamma={:.6e}, xi0={:.6}, fit window [{:.3}, {:.3}]", a.gamma, a.xi0, a.window.0, a.window.1)];
    for r in &a.rows {
        lines.push(format!("{}: slope {:.5} predicted {:.5} ratio {:.4}", r.quantity, r.slope, r.predicted, r.ratio()));
    }
    lines.extend(a.notes.iter().cloned());
    lines
}

pub fn simulate_cmd(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let s = setup(cfg)?;
    let gamma = rate(cfg, &s)?;
    let traj = run_simulation(cfg, &s.pot, ctx.allow_boundary)?;
    let samples = Samples::from_trajectory(&traj);
    let analysis = analyse(cfg, &samples, traj.omega, s.order, gamma, traj.t_reflect, ctx.allow_boundary)?;
    let mut out = Outputs::new();
    out.add(TRAJECTORY_FILE, |w| traj.write_csv(w))?;
    out.add("fit.csv", |w| write_fit_report(&analysis.rows, w))?;
    let mut lines = vec![summary(&s), format!("{} samples, t_reflect={:.3}", traj.rows.len(), traj.t_reflect)];
    lines.extend(fit_lines(&analysis));
    finish(ctx, out, &lines)
}

/// Bound-state frequency and reflection time of the configured simulation.
fn sim_geometry(cfg: &RunConfig, pot: &PotentialSpec) -> Result<(f64, f64), CliError> {
    let grid = sim_grid(cfg)?;
    let model = Model::finite_difference(&grid, pot)?;
    let state = initial_data(cfg, model.omega()).build(&model)?;
    Ok((model.omega(), reflection_time(&grid, &state)))
}

fn load_analysis(ctx: &Context, trajectory: Option<&Path>) -> Result<(Setup, Analysis), CliError> {
    let path = trajectory.map(Path::to_path_buf).unwrap_or_else(|| ctx.out_dir.join(TRAJECTORY_FILE));
    let samples = Samples::read(&path)?;
    let s = setup(&ctx.cfg)?;
    let gamma = rate(&ctx.cfg, &s)?;
    let (omega, t_reflect) = sim_geometry(&ctx.cfg, &s.pot)?;
    let a = analyse(&ctx.cfg, &samples, omega, s.order, gamma, t_reflect, ctx.allow_boundary)?;
    Ok((s, a))
}

pub fn fit(ctx: &Context, trajectory: Option<&Path>) -> Result<(), CliError> {
    let (_, a) = load_analysis(ctx, trajectory)?;
    let mut out = Outputs::new();
    out.add("fit.csv", |w| write_fit_report(&a.rows, w))?;
    finish(ctx, out, &fit_lines(&a))
}

pub fn report(ctx: &Context, trajectory: Option<&Path>) -> Result<(), CliError> {
    let (s, a) = load_analysis(ctx, trajectory)?;
    let mut text = ctx.cfg.header();
    text.push_str(&format!("{}\n", summary(&s)));
    text.push_str(&format!(
        "predicted: |xi| ~ t^{:.6}, ||eta||_L8 ~ t^{:.6}, |theta| ~ t^{:.6}, d|xi|^-{}/dt = {:.6e}\n",
        -1.0 / (4.0 * a.order as f64),
        -3.0 / (4.0 * a.order as f64),
        1.0 - 1.0 / (2.0 * a.order as f64),
        4 * a.order,
        4.0 * a.order as f64 * a.gamma
    ));
    for l in fit_lines(&a) {
        text.push_str(&l);
        text.push('\n');
    }
    let mut out = Outputs::new();
    out.add("report.csv", |w| write_fit_report(&a.rows, w))?;
    out.add_text("report.txt", &text);
    finish(ctx, out, &fit_lines(&a))
}
