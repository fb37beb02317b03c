use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, Properties};
use nlkg_core::dynamics::Scheme;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub r_max: f64,
    pub dr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    Gaussian,
    Square,
    Zero,
    Table,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    /// Well depth; when absent a Gaussian is tuned to `omega`.
    pub depth: Option<f64>,
    pub omega: f64,
    pub width: f64,
    pub radius: f64,
    pub mass: f64,
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormConfig {
    /// Window index; 0 picks the unique admissible one.
    pub order: usize,
    /// Truncation degree; 0 means `2N + 4`.
    pub d_max: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    /// Coupling in `u_tt - Delta u + V u + m^2 u = lambda u^3`; also used by the normal form.
    pub lambda: f64,
    pub dt: f64,
    pub horizon: f64,
    pub amplitude: Amplitude,
    pub c0: f64,
    pub c_max: f64,
    /// Steps between samples; 0 means one sample per half time unit.
    pub stride: usize,
    pub scheme: Scheme,
    /// Simulation box radius; 0 means `T + 60`.
    pub r_box: f64,
    pub blowup: f64,
}

/// Initial bound-state size, either as the mode variable or the field amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    /// `xi0 = a0 sqrt(omega / 2)`.
    Xi(f64),
    A0(f64),
}

impl Amplitude {
    pub fn xi0(&self, omega: f64) -> f64 {
        match *self {
            Amplitude::Xi(x) => x,
            Amplitude::A0(a) => a * (0.5 * omega).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FgrConfig {
    pub kernel_ladder: Vec<f64>,
    pub eps_ladder: Vec<f64>,
    /// Radius of the zero-padded box for the spectral measure; 0 disables padding.
    pub pad_r_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Fit window; `None` derives it from the resonance time scale and the horizon.
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub sigma: f64,
    /// Moving-average span for `|xi|`; 0 means one bound-state period.
    pub smooth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub normalform: NormalFormConfig,
    pub simulate: SimulateConfig,
    pub fgr: FgrConfig,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            grid: GridConfig { r_max: 30.0, dr: 0.1 },
            potential: PotentialConfig {
                kind: PotentialKind::Gaussian,
                depth: None,
                omega: 0.4,
                width: 1.0,
                radius: 1.0,
                mass: 1.0,
                table: None,
            },
            normalform: NormalFormConfig { order: 0, d_max: 0 },
            simulate: SimulateConfig {
                lambda: -1.0,
                dt: 0.04,
                horizon: 400.0,
                amplitude: Amplitude::Xi(0.2),
                c0: 0.0,
                c_max: 1.0,
                stride: 0,
                scheme: Scheme::Leapfrog,
                r_box: 0.0,
                blowup: 1e3,
            },
            fgr: FgrConfig { kernel_ladder: vec![8.0, 4.0, 2.0], eps_ladder: vec![8.0, 4.0, 2.0], pad_r_max: 400.0 },
            fit: FitConfig { t0: None, t1: None, sigma: 3.0, smooth: 0.0 },
        }
    }
}

struct Section<'a> {
    name: &'static str,
    props: Option<&'a Properties>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Self { name, props: ini.section(Some(name)), used: BTreeSet::new() }
    }

    /// Value of `key`; `auto` and `none` count as absent.
    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.props
            .and_then(|p| p.get(key))
            .map(str::trim)
            .filter(|v| !v.eq_ignore_ascii_case("auto") && !v.eq_ignore_ascii_case("none"))
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let name = self.name;
        self.raw(key)
            .map(|s| s.parse::<T>().map_err(|e| CliError::Config(format!("[{name}] {key} = {s}: {e}"))))
            .transpose()
    }

    fn get<T: FromStr>(&mut self, key: &str, into: &mut T) -> Result<(), CliError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.parse(key)? {
            *into = v;
        }
        Ok(())
    }

    fn list(&mut self, key: &str, into: &mut Vec<f64>) -> Result<(), CliError> {
        if let Some(s) = self.raw(key) {
            *into = s
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Config(format!("[{}] {key}: {e}", self.name))))
                .collect::<Result<_, _>>()?;
        }
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        if let Some(p) = self.props {
            if let Some((k, _)) = p.iter().find(|(k, _)| !self.used.contains(*k)) {
                return Err(CliError::Config(format!("unknown key '{k}' in [{}]", self.name)));
            }
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["run", "grid", "potential", "normalform", "simulate", "fgr", "fit"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parse a sectioned `key = value` file over the defaults. Relative table paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for (name, props) in ini.iter() {
            match name {
                Some(n) if SECTIONS.contains(&n) => {}
                None if props.is_empty() => {}
                other => return Err(CliError::Config(format!("unknown section [{}]", other.unwrap_or("")))),
            }
        }
        let mut c = RunConfig::default();

        let mut s = Section::new(&ini, "run");
        s.get("seed", &mut c.seed)?;
        s.finish()?;

        let mut s = Section::new(&ini, "grid");
        s.get("r_max", &mut c.grid.r_max)?;
        s.get("dr", &mut c.grid.dr)?;
        if let Some(n) = s.parse::<usize>("n")? {
            c.grid.dr = c.grid.r_max / (n as f64 + 1.0);
        }
        s.finish()?;

        let mut s = Section::new(&ini, "potential");
        if let Some(kind) = s.raw("kind") {
            c.potential.kind = match kind.to_ascii_lowercase().as_str() {
                "gaussian" => PotentialKind::Gaussian,
                "square" => PotentialKind::Square,
                "zero" => PotentialKind::Zero,
                "table" => PotentialKind::Table,
                other => return Err(CliError::Config(format!("unknown potential kind '{other}'"))),
            };
        }
        c.potential.depth = s.parse("depth")?;
        s.get("omega", &mut c.potential.omega)?;
        s.get("width", &mut c.potential.width)?;
        s.get("radius", &mut c.potential.radius)?;
        s.get("mass", &mut c.potential.mass)?;
        c.potential.table = s.raw("table").map(|t| match base {
            Some(b) if Path::new(t).is_relative() => b.join(t),
            _ => PathBuf::from(t),
        });
        s.finish()?;

        let mut s = Section::new(&ini, "normalform");
        s.get("N", &mut c.normalform.order)?;
        s.get("D_max", &mut c.normalform.d_max)?;
        s.finish()?;

        let mut s = Section::new(&ini, "simulate");
        s.get("lambda", &mut c.simulate.lambda)?;
        s.get("dt", &mut c.simulate.dt)?;
        s.get("T", &mut c.simulate.horizon)?;
        match (s.parse::<f64>("xi0")?, s.parse::<f64>("a0")?) {
            (Some(_), Some(_)) => return Err(CliError::Config("[simulate] give either xi0 or a0, not both".into())),
            (Some(x), None) => c.simulate.amplitude = Amplitude::Xi(x),
            (None, Some(a)) => c.simulate.amplitude = Amplitude::A0(a),
            (None, None) => {}
        }
        s.get("c0", &mut c.simulate.c0)?;
        s.get("C0", &mut c.simulate.c_max)?;
        s.get("stride", &mut c.simulate.stride)?;
        s.get("scheme", &mut c.simulate.scheme)?;
        s.get("box", &mut c.simulate.r_box)?;
        s.get("blowup", &mut c.simulate.blowup)?;
        s.finish()?;

        let mut s = Section::new(&ini, "fgr");
        s.list("kernel_ladder", &mut c.fgr.kernel_ladder)?;
        s.list("eps_ladder", &mut c.fgr.eps_ladder)?;
        s.get("pad_r_max", &mut c.fgr.pad_r_max)?;
        s.finish()?;

        let mut s = Section::new(&ini, "fit");
        c.fit.t0 = s.parse("t0")?;
        c.fit.t1 = s.parse("t1")?;
        s.get("sigma", &mut c.fit.sigma)?;
        s.get("smooth", &mut c.fit.smooth)?;
        s.finish()?;

        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if !(self.grid.r_max > 0.0 && self.grid.dr > 0.0 && self.grid.dr < self.grid.r_max) {
            return bad("grid needs 0 < dr < r_max");
        }
        if self.potential.kind == PotentialKind::Table && self.potential.table.is_none() {
            return bad("[potential] kind = table needs a table path");
        }
        let sim = &self.simulate;
        if !(sim.dt > 0.0 && sim.horizon >= 0.0 && sim.lambda.is_finite() && sim.amplitude.xi0(1.0).is_finite()) {
            return bad("[simulate] needs dt > 0, T >= 0 and finite lambda and amplitude");
        }
        if self.fgr.kernel_ladder.is_empty() || self.fgr.eps_ladder.is_empty() {
            return bad("[fgr] ladders must be non-empty");
        }
        if let (Some(a), Some(b)) = (self.fit.t0, self.fit.t1) {
            if a >= b {
                return bad("[fit] needs t0 < t1");
            }
        }
        Ok(())
    }

    /// Stride in steps, defaulting to one sample per half time unit.
    pub fn stride(&self) -> usize {
        if self.simulate.stride > 0 {
            self.simulate.stride
        } else {
            ((0.5 / self.simulate.dt).round() as usize).max(1)
        }
    }

    pub fn sim_box(&self) -> f64 {
        if self.simulate.r_box > 0.0 {
            self.simulate.r_box
        } else {
            self.simulate.horizon + 60.0
        }
    }

    /// Every setting with defaults filled in, as an INI document.
    pub fn effective(&self) -> Ini {
        let f = |x: f64| format!("{x}");
        let opt = |x: Option<f64>| x.map(f).unwrap_or_else(|| "auto".into());
        let join = |v: &[f64]| v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",");
        let mut ini = Ini::new();
        ini.with_section(Some("run")).set("seed", self.seed.to_string());
        ini.with_section(Some("grid")).set("r_max", f(self.grid.r_max)).set("dr", f(self.grid.dr));
        let p = &self.potential;
        let kind = match p.kind {
            PotentialKind::Gaussian => "gaussian",
            PotentialKind::Square => "square",
            PotentialKind::Zero => "zero",
            PotentialKind::Table => "table",
        };
        ini.with_section(Some("potential"))
            .set("kind", kind)
            .set("depth", opt(p.depth))
            .set("omega", f(p.omega))
            .set("width", f(p.width))
            .set("radius", f(p.radius))
            .set("mass", f(p.mass))
            .set("table", p.table.as_ref().map(|t| t.display().to_string()).unwrap_or_else(|| "none".into()));
        let nf = &self.normalform;
        ini.with_section(Some("normalform"))
            .set("N", if nf.order == 0 { "auto".into() } else { nf.order.to_string() })
            .set("D_max", if nf.d_max == 0 { "auto".into() } else { nf.d_max.to_string() });
        let s = &self.simulate;
        ini.with_section(Some("simulate"))
            .set("lambda", f(s.lambda))
            .set("dt", f(s.dt))
            .set("T", f(s.horizon))
            .set(
                match s.amplitude {
                    Amplitude::Xi(_) => "xi0",
                    Amplitude::A0(_) => "a0",
                },
                match s.amplitude {
                    Amplitude::Xi(x) | Amplitude::A0(x) => f(x),
                },
            )
            .set("c0", f(s.c0))
            .set("C0", f(s.c_max))
            .set("stride", self.stride().to_string())
            .set("scheme", s.scheme.to_string())
            .set("box", f(self.sim_box()))
            .set("blowup", f(s.blowup));
        ini.with_section(Some("fgr"))
            .set("kernel_ladder", join(&self.fgr.kernel_ladder))
            .set("eps_ladder", join(&self.fgr.eps_ladder))
            .set("pad_r_max", f(self.fgr.pad_r_max));
        ini.with_section(Some("fit"))
            .set("t0", opt(self.fit.t0))
            .set("t1", opt(self.fit.t1))
            .set("sigma", f(self.fit.sigma))
            .set("smooth", f(self.fit.smooth));
        ini
    }

    pub fn effective_text(&self) -> String {
        let mut buf = Vec::new();
        self.effective().write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is UTF-8")
    }

    /// The effective configuration as `# `-prefixed comment lines.
    pub fn header(&self) -> String {
        self.effective_text().lines().filter(|l| !l.is_empty()).map(|l| format!("# {l}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("", None).unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let text = "[grid]\nr_max = 20\nn = 159\n[simulate]\nT = 50\nscheme = strang\n[fgr]\nkernel_ladder = 6, 3\n[fit]\nt0 = 10\n";
        let c = RunConfig::parse(text, None).unwrap();
        assert_eq!(c.grid.dr, 0.125);
        assert_eq!(c.simulate.horizon, 50.0);
        assert_eq!(c.simulate.scheme, Scheme::Strang);
        assert_eq!(c.fgr.kernel_ladder, vec![6.0, 3.0]);
        assert_eq!(c.fit.t0, Some(10.0));
        assert_eq!(c.sim_box(), 110.0);
        assert_eq!(c.stride(), 13);
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        assert!(RunConfig::parse("[grid]\nrmax = 3\n", None).is_err());
        assert!(RunConfig::parse("[mesh]\nr_max = 3\n", None).is_err());
        assert!(RunConfig::parse("[grid]\nr_max = x\n", None).is_err());
        assert!(RunConfig::parse("[fit]\nt0 = 5\nt1 = 4\n", None).is_err());
        assert!(RunConfig::parse("[simulate]\nxi0 = 0.1\na0 = 0.2\n", None).is_err());
    }

    #[test]
    fn relative_table_path() {
        let c = RunConfig::parse("[potential]\nkind = table\ntable = v.txt\n", Some(Path::new("/data"))).unwrap();
        assert_eq!(c.potential.table, Some(PathBuf::from("/data/v.txt")));
    }

    #[test]
    fn effective_round_trips() {
        let c = RunConfig::parse("[potential]\ndepth = 3\n[normalform]\nN = 1\nD_max = 6\n[fit]\nt0 = 1\nt1 = 2\n", None).unwrap();
        let again = RunConfig::parse(&c.effective_text(), None).unwrap();
        assert_eq!(again.potential.depth, Some(3.0));
        assert_eq!(again.normalform.d_max, 6);
        assert_eq!(again.fit.t1, Some(2.0));
        let d = RunConfig::default();
        let echoed = RunConfig::parse(&d.effective_text(), None).unwrap();
        assert_eq!((echoed.stride(), echoed.sim_box()), (d.stride(), d.sim_box()));
        assert_eq!(echoed.effective_text(), d.effective_text());
        assert!(c.header().lines().all(|l| l.starts_with("# ")));
    }
}
