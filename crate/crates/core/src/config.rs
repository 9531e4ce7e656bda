//! Run configuration in TOML. Sections `[grid]`, `[reg]`, `[init]`,
//! `[time]`, `[stepper]`, `[output]`, `[diagnostics]`; dotted keys such as
//! `grid.N = 64` work as well. Unknown keys are rejected and every numeric
//! constraint of the solver is checked here.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{LandauError, Result};
use crate::grid::VelocityGrid;
use crate::initial_data::{GaussianComponent, InitialDatumSpec, MOLLIFIER_MIN_CELLS};
use crate::kernel::MAX_KERNEL_CELL_RATIO;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    Rk2,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit_euler",
            Scheme::Rk2 => "rk2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cells: usize,
    pub half_width: f64,
    pub n: u32,
    pub datum: InitialDatumSpec,
    pub mollify: bool,
    pub t_final: f64,
    pub cfl_safety: f64,
    pub max_dt: f64,
    pub scheme: Scheme,
    pub refresh: usize,
    pub every: usize,
    pub snapshot_times: Vec<f64>,
    pub output_dir: String,
    pub k_list: Vec<f64>,
    pub f_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cells: 32,
            half_width: 5.0,
            n: 4,
            datum: InitialDatumSpec::Maxwellian,
            mollify: false,
            t_final: 1.0,
            cfl_safety: 0.5,
            max_dt: 0.01,
            scheme: Scheme::Rk2,
            refresh: 1,
            every: 10,
            snapshot_times: Vec::new(),
            output_dir: "out".into(),
            k_list: vec![1.5, 2.0, 2.25],
            f_tol: 1e-14,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<RawGrid>,
    reg: Option<RawReg>,
    init: Option<RawInit>,
    time: Option<RawTime>,
    stepper: Option<RawStepper>,
    output: Option<RawOutput>,
    diagnostics: Option<RawDiagnostics>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "N")]
    cells: Option<i64>,
    #[serde(rename = "L")]
    half_width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReg {
    n: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    kind: Option<String>,
    density: Option<f64>,
    drift: Option<[f64; 3]>,
    temperature: Option<f64>,
    components: Option<Vec<RawComponent>>,
    exponent: Option<f64>,
    floor: Option<f64>,
    mollify: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    density: f64,
    drift: [f64; 3],
    temperature: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    t_final: Option<f64>,
    cfl_safety: Option<f64>,
    max_dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepper {
    scheme: Option<String>,
    refresh: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    every: Option<i64>,
    snapshot_times: Option<Vec<f64>>,
    dir: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    k_list: Option<Vec<f64>>,
    f_tol: Option<f64>,
}

fn err(key: &str, message: impl Into<String>) -> LandauError {
    LandauError::config(key, message)
}

fn positive_int(key: &str, value: i64) -> Result<usize> {
    if value < 1 {
        return Err(err(key, format!("must be a positive integer, got {value}")));
    }
    Ok(value as usize)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = unknown_key(&message).unwrap_or_else(|| "<toml>".into());
            err(&key, message)
        })?;
        let mut c = RunConfig::default();
        if let Some(g) = raw.grid {
            if let Some(v) = g.cells {
                if v < 8 || v % 2 != 0 {
                    return Err(err("grid.N", format!("N must be even >= 8, got {v}")));
                }
                c.cells = v as usize;
            }
            if let Some(v) = g.half_width {
                c.half_width = v;
            }
        }
        if let Some(r) = raw.reg.and_then(|r| r.n) {
            c.n = u32::try_from(positive_int("reg.n", r)?)
                .map_err(|_| err("reg.n", "too large"))?;
        }
        if let Some(init) = raw.init {
            c.mollify = init.mollify.unwrap_or(false);
            c.datum = parse_datum(init)?;
        }
        if let Some(t) = raw.time {
            if let Some(v) = t.t_final {
                c.t_final = v;
            }
            if let Some(v) = t.cfl_safety {
                c.cfl_safety = v;
            }
            if let Some(v) = t.max_dt {
                c.max_dt = v;
            }
        }
        if let Some(s) = raw.stepper {
            if let Some(name) = s.scheme {
                c.scheme = match name.as_str() {
                    "rk2" => Scheme::Rk2,
                    "explicit_euler" => Scheme::ExplicitEuler,
                    other => {
                        return Err(err(
                            "stepper.scheme",
                            format!("expected rk2 or explicit_euler, got {other:?}"),
                        ))
                    }
                };
            }
            if let Some(v) = s.refresh {
                c.refresh = positive_int("stepper.refresh", v)?;
            }
        }
        if let Some(o) = raw.output {
            if let Some(v) = o.every {
                c.every = positive_int("output.every", v)?;
            }
            if let Some(v) = o.snapshot_times {
                c.snapshot_times = v;
            }
            if let Some(v) = o.dir {
                c.output_dir = v;
            }
        }
        if let Some(d) = raw.diagnostics {
            if let Some(v) = d.k_list {
                c.k_list = v;
            }
            if let Some(v) = d.f_tol {
                c.f_tol = v;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn grid(&self) -> Result<VelocityGrid> {
        VelocityGrid::new(self.cells, self.half_width)
    }

    /// Re-checks every constraint; called by [`RunConfig::parse`].
    pub fn validate(&self) -> Result<()> {
        if self.cells < 8 || !self.cells.is_multiple_of(2) {
            return Err(err("grid.N", format!("N must be even >= 8, got {}", self.cells)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(err("grid.L", format!("L must be positive, got {}", self.half_width)));
        }
        if self.n == 0 {
            return Err(err("reg.n", "n must be positive"));
        }
        let grid = self.grid()?;
        let ratio = self.n as f64 * grid.spacing();
        if ratio > MAX_KERNEL_CELL_RATIO {
            return Err(err(
                "reg.n",
                format!(
                    "kernel unresolved: decrease n or refine grid (n*h = {ratio} > {MAX_KERNEL_CELL_RATIO})"
                ),
            ));
        }
        if self.mollify && 1.0 / ratio < MOLLIFIER_MIN_CELLS {
            return Err(err(
                "init.mollify",
                format!(
                    "mollifier unresolved: 1/(n*h) = {:.3} cells < {MOLLIFIER_MIN_CELLS}",
                    1.0 / ratio
                ),
            ));
        }
        self.datum
            .validate()
            .map_err(|e| err("init", e.to_string()))?;
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(err("time.t_final", "must be finite and >= 0"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(err(
                "time.cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if !(self.max_dt > 0.0 && self.max_dt.is_finite()) {
            return Err(err("time.max_dt", "must be positive"));
        }
        if self.refresh == 0 {
            return Err(err("stepper.refresh", "must be a positive integer"));
        }
        if self.every == 0 {
            return Err(err("output.every", "must be a positive integer"));
        }
        let mut last = f64::NEG_INFINITY;
        for &s in &self.snapshot_times {
            if !(0.0..=self.t_final).contains(&s) || s <= last {
                return Err(err(
                    "output.snapshot_times",
                    "must be strictly increasing and within [0, t_final]",
                ));
            }
            last = s;
        }
        if self.k_list.iter().any(|k| !k.is_finite()) {
            return Err(err("diagnostics.k_list", "weights must be finite"));
        }
        if !(self.f_tol >= 0.0 && self.f_tol < 1.0) {
            return Err(err("diagnostics.f_tol", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Canonical TOML text; parses back to an equal config.
    pub fn to_toml(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let vec3 = |v: [f64; 3]| list(&v);
        let mut s = String::new();
        s += &format!("[grid]\nN = {}\nL = {:?}\n\n", self.cells, self.half_width);
        s += &format!("[reg]\nn = {}\n\n", self.n);
        s += "[init]\n";
        match &self.datum {
            InitialDatumSpec::Maxwellian => s += "kind = \"maxwellian\"\n",
            InitialDatumSpec::Gaussian(g) => {
                s += &format!(
                    "kind = \"gaussian\"\ndensity = {:?}\ndrift = [{}]\ntemperature = {:?}\n",
                    g.density,
                    vec3(g.drift),
                    g.temperature
                )
            }
            InitialDatumSpec::GaussianMixture(list) => {
                s += "kind = \"gaussian_mixture\"\ncomponents = [\n";
                for g in list {
                    s += &format!(
                        "  {{ density = {:?}, drift = [{}], temperature = {:?} }},\n",
                        g.density,
                        vec3(g.drift),
                        g.temperature
                    );
                }
                s += "]\n";
            }
            InitialDatumSpec::SingularPower { exponent, floor } => {
                s += &format!(
                    "kind = \"singular_power\"\nexponent = {exponent:?}\nfloor = {floor:?}\n"
                )
            }
        }
        s += &format!("mollify = {}\n\n", self.mollify);
        s += &format!(
            "[time]\nt_final = {:?}\ncfl_safety = {:?}\nmax_dt = {:?}\n\n",
            self.t_final, self.cfl_safety, self.max_dt
        );
        s += &format!(
            "[stepper]\nscheme = \"{}\"\nrefresh = {}\n\n",
            self.scheme.name(),
            self.refresh
        );
        s += &format!(
            "[output]\nevery = {}\nsnapshot_times = [{}]\ndir = {:?}\n\n",
            self.every,
            list(&self.snapshot_times),
            self.output_dir
        );
        s += &format!(
            "[diagnostics]\nk_list = [{}]\nf_tol = {:?}\n",
            list(&self.k_list),
            self.f_tol
        );
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn unknown_key(message: &str) -> Option<String> {
    let start = message.find("unknown field `")? + "unknown field `".len();
    let end = message[start..].find('`')?;
    Some(message[start..start + end].to_string())
}

fn parse_datum(init: RawInit) -> Result<InitialDatumSpec> {
    let kind = init.kind.as_deref().unwrap_or("maxwellian");
    let present: Vec<(&str, bool)> = vec![
        ("density", init.density.is_some()),
        ("drift", init.drift.is_some()),
        ("temperature", init.temperature.is_some()),
        ("components", init.components.is_some()),
        ("exponent", init.exponent.is_some()),
        ("floor", init.floor.is_some()),
    ];
    let allowed: &[&str] = match kind {
        "maxwellian" => &[],
        "gaussian" => &["density", "drift", "temperature"],
        "gaussian_mixture" => &["components"],
        "singular_power" => &["exponent", "floor"],
        other => {
            return Err(err(
                "init.kind",
                format!(
                    "expected maxwellian, gaussian, gaussian_mixture or singular_power, got {other:?}"
                ),
            ))
        }
    };
    for (key, set) in present {
        if set && !allowed.contains(&key) {
            return Err(err(
                &format!("init.{key}"),
                format!("not a parameter of kind {kind:?}"),
            ));
        }
    }
    let spec = match kind {
        "maxwellian" => InitialDatumSpec::Maxwellian,
        "gaussian" => InitialDatumSpec::Gaussian(GaussianComponent {
            density: init.density.unwrap_or(1.0),
            drift: init.drift.unwrap_or([0.0; 3]),
            temperature: init.temperature.unwrap_or(1.0),
        }),
        "gaussian_mixture" => InitialDatumSpec::GaussianMixture(
            init.components
                .ok_or_else(|| err("init.components", "required for gaussian_mixture"))?
                .into_iter()
                .map(|c| GaussianComponent {
                    density: c.density,
                    drift: c.drift,
                    temperature: c.temperature,
                })
                .collect(),
        ),
        _ => InitialDatumSpec::SingularPower {
            exponent: init.exponent.unwrap_or(2.0),
            floor: init.floor.unwrap_or(0.01),
        },
    };
    spec.validate().map_err(|e| err("init", e.to_string()))?;
    Ok(spec)
}
