//! Run configuration: a TOML file with `[domain]`, `[problem]`, `[grid]`,
//! `[solver]`, `[run]` and `[output]` sections.
//!
//! Everything is checked before any computation starts. Unknown sections and
//! keys are errors, as are keys that the chosen kind or mode would ignore.
//! All violations are reported together.

use std::fmt;
use std::path::{Path, PathBuf};

use gridcarve_core::analyze::Method;
use gridcarve_core::geometry::{Constraint, GeometryError};
use gridcarve_core::prelude::*;
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Syntax error; the message carries line and column.
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Steady,
    Sweep,
    Timestep,
}

impl Mode {
    fn parse(s: &str) -> Option<Mode> {
        match s {
            "steady" => Some(Mode::Steady),
            "sweep" => Some(Mode::Sweep),
            "timestep" => Some(Mode::Timestep),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Steady => "steady",
            Mode::Sweep => "sweep",
            Mode::Timestep => "timestep",
        })
    }
}

/// Starting iterate, resolved against the grid at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    Zeros,
    BoundaryAverage,
    /// Constant pollinator equilibrium.
    Equilibrium,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Absolute(f64),
    /// Multiple of the explicit stability limit of the mesh.
    CflFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Duration {
    Steps(usize),
    Until(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSettings {
    pub scheme: Scheme,
    pub dt: TimeStep,
    pub t0: f64,
    pub duration: Duration,
    pub nu: f64,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    pub dx: f64,
    pub dy: f64,
    pub policy: RectPolicy,
    pub variants: Vec<Variant>,
    pub method: Method,
    pub tol: f64,
    pub max_iter: u64,
    pub initial: Initial,
    pub mode: Mode,
    pub dx_list: Vec<f64>,
    pub area_samples: usize,
    pub time: Option<TimeSettings>,
    pub directory: PathBuf,
    pub csv: bool,
    pub vtk: bool,
}

const SECTIONS: [(&str, &[&str]); 6] = [
    (
        "domain",
        &[
            "fixture",
            "polygon",
            "implicit",
            "constraints",
            "window",
            "bbox",
            "hole",
        ],
    ),
    (
        "problem",
        &[
            "kind",
            "f",
            "g",
            "coef",
            "dirichlet",
            "exact",
            "initial",
            "form",
            "d1",
            "k",
            "mobility",
            "nu",
        ],
    ),
    ("grid", &["dx", "dy", "rect", "variant"]),
    ("solver", &["method", "tol", "max_iter", "relax", "initial"]),
    (
        "run",
        &[
            "mode",
            "dx_list",
            "area_samples",
            "scheme",
            "dt",
            "dt_cfl",
            "t0",
            "steps",
            "t_end",
            "snapshot_times",
        ],
    ),
    ("output", &["directory", "formats"]),
];

/// Reads and validates a configuration file.
pub fn load_config(path: &Path, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, mode)
}

/// Parses configuration text. `mode` overrides `run.mode`.
pub fn parse_config(text: &str, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
    let mut r = Reader {
        root: &root,
        errors: Vec::new(),
    };
    r.check_layout();
    let cfg = r.build(mode);
    if !r.errors.is_empty() {
        return Err(ConfigError::Invalid(r.errors));
    }
    let cfg = cfg.expect("no errors recorded")?;
    Ok(cfg)
}

struct Reader<'a> {
    root: &'a Table,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    fn check_layout(&mut self) {
        for (name, value) in self.root {
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
                self.errors.push(format!("unknown section `{name}`"));
                continue;
            };
            let Some(table) = value.as_table() else {
                self.errors.push(format!("`{name}` must be a section"));
                continue;
            };
            for key in table.keys() {
                if !keys.contains(&key.as_str()) {
                    self.errors.push(format!("unknown key `{name}.{key}`"));
                }
            }
        }
    }

    fn get(&self, sec: &str, key: &str) -> Option<&'a Value> {
        self.root.get(sec)?.as_table()?.get(key)
    }

    fn has(&self, sec: &str, key: &str) -> bool {
        self.get(sec, key).is_some()
    }

    fn bad(&mut self, sec: &str, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("`{sec}.{key}`: {msg}"));
    }

    fn require<T>(
        &mut self,
        sec: &str,
        key: &str,
        read: impl FnOnce(&mut Self) -> Option<T>,
    ) -> Option<T> {
        let v = read(self);
        if v.is_none() && !self.has(sec, key) {
            self.bad(sec, key, "required");
        }
        v
    }

    /// Keys present in a section that the current setup would ignore.
    fn reject(&mut self, sec: &str, keys: &[&str], why: &str) {
        for key in keys {
            if self.has(sec, key) {
                self.bad(sec, key, format!("not used {why}"));
            }
        }
    }

    fn num(&mut self, sec: &str, key: &str) -> Option<f64> {
        let v = self.get(sec, key)?;
        match as_f64(v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.bad(sec, key, "expected a finite number");
                None
            }
        }
    }

    fn positive(&mut self, sec: &str, key: &str) -> Option<f64> {
        let x = self.num(sec, key)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.bad(sec, key, "must be positive");
            None
        }
    }

    fn count(&mut self, sec: &str, key: &str) -> Option<u64> {
        let v = self.get(sec, key)?;
        match v.as_integer() {
            Some(n) if n >= 0 => Some(n as u64),
            _ => {
                self.bad(sec, key, "expected a non-negative integer");
                None
            }
        }
    }

    fn text(&mut self, sec: &str, key: &str) -> Option<&'a str> {
        let v = self.get(sec, key)?;
        match v.as_str() {
            Some(s) => Some(s),
            None => {
                self.bad(sec, key, "expected a string");
                None
            }
        }
    }

    fn choice(&mut self, sec: &str, key: &str, options: &[&str]) -> Option<&'a str> {
        let s = self.text(sec, key)?;
        if options.contains(&s) {
            Some(s)
        } else {
            self.bad(
                sec,
                key,
                format!("expected one of {}, got `{s}`", options.join(", ")),
            );
            None
        }
    }

    fn expr(&mut self, sec: &str, key: &str) -> Option<Expr> {
        let s = self.text(sec, key)?;
        match parse_expr(s) {
            Ok(e) => Some(e),
            Err(e) => {
                self.bad(sec, key, e);
                None
            }
        }
    }

    fn numbers(&mut self, sec: &str, key: &str) -> Option<Vec<f64>> {
        let v = self.get(sec, key)?;
        let out: Option<Vec<f64>> = v
            .as_array()
            .and_then(|a| a.iter().map(as_f64).collect())
            .filter(|xs: &Vec<f64>| xs.iter().all(|x| x.is_finite()));
        if out.is_none() {
            self.bad(sec, key, "expected an array of finite numbers");
        }
        out
    }

    fn rect(&mut self, sec: &str, key: &str) -> Option<Rect> {
        let xs = self.numbers(sec, key)?;
        match xs[..] {
            [x0, y0, x1, y1] if x0 < x1 && y0 < y1 => Some(Rect::new(x0, y0, x1, y1)),
            _ => {
                self.bad(
                    sec,
                    key,
                    "expected [x0, y0, x1, y1] with x0 < x1 and y0 < y1",
                );
                None
            }
        }
    }

    fn points(&mut self, sec: &str, key: &str) -> Option<Vec<(f64, f64)>> {
        let v = self.get(sec, key)?;
        let pts: Option<Vec<(f64, f64)>> = v.as_array().and_then(|a| {
            a.iter()
                .map(|p| {
                    match p
                        .as_array()
                        .map(|q| q.iter().map(as_f64).collect::<Vec<_>>())
                    {
                        Some(q) if q.len() == 2 => Some((q[0]?, q[1]?)),
                        _ => None,
                    }
                })
                .collect()
        });
        if pts.is_none() {
            self.bad(sec, key, "expected an array of [x, y] pairs");
        }
        pts
    }

    fn build(&mut self, mode_override: Option<Mode>) -> Option<Result<RunConfig, ConfigError>> {
        let mode = match mode_override {
            Some(m) => Some(m),
            None => self
                .choice("run", "mode", &["steady", "sweep", "timestep"])
                .and_then(Mode::parse)
                .or_else(|| {
                    if !self.has("run", "mode") {
                        Some(Mode::Steady)
                    } else {
                        None
                    }
                }),
        };
        let domain = self.domain();
        let kind = self.require("problem", "kind", |r| {
            r.choice(
                "problem",
                "kind",
                &[
                    "poisson",
                    "laplace",
                    "helmholtz",
                    "var_coeff",
                    "pollinator",
                    "heat",
                ],
            )
        });
        let problem = kind.and_then(|k| self.problem(k));
        let nonlinear = kind == Some("pollinator");
        if let (Some(m), Some(k)) = (mode, kind) {
            if (k == "heat") != (m == Mode::Timestep) {
                self.errors.push(format!(
                    "`problem.kind = {k}` cannot run in `{m}` mode; heat problems need timestep mode and vice versa"
                ));
            }
            if m == Mode::Sweep && nonlinear {
                self.errors
                    .push("sweep mode needs a linear problem, not `pollinator`".to_string());
            }
        }

        // grid
        let sweep = mode == Some(Mode::Sweep);
        let (dx, dy) = if sweep {
            self.reject("grid", &["dx", "dy"], "in sweep mode; use `run.dx_list`");
            (None, None)
        } else {
            let dx = self.require("grid", "dx", |r| r.positive("grid", "dx"));
            let dy = self.positive("grid", "dy").or(dx);
            (dx, dy)
        };
        let policy = match self.get("grid", "rect") {
            None => Some(RectPolicy::PaddedByH),
            Some(Value::String(s)) if s == "padded" => Some(RectPolicy::PaddedByH),
            Some(_) => self.rect("grid", "rect").map(RectPolicy::Fixed),
        };
        let variants = match self.choice("grid", "variant", &["over", "under", "both"]) {
            Some("under") => Some(vec![Variant::UnderBar]),
            Some("both") => Some(vec![Variant::OverBar, Variant::UnderBar]),
            Some(_) => Some(vec![Variant::OverBar]),
            None if !self.has("grid", "variant") => Some(vec![Variant::OverBar]),
            None => None,
        };

        // solver
        let method_name = self.choice(
            "solver",
            "method",
            &["jacobi", "gauss_seidel", "direct", "fixed_point"],
        );
        if mode == Some(Mode::Timestep) {
            self.reject(
                "solver",
                &["method", "relax", "initial"],
                "in timestep mode",
            );
        }
        if sweep && method_name.is_some_and(|m| m != "gauss_seidel") {
            self.bad("solver", "method", "sweeps always use gauss_seidel");
        }
        let relax = self.positive("solver", "relax");
        let method = match method_name {
            Some("fixed_point") | None if nonlinear => {
                let relax = relax.unwrap_or(1.0);
                if relax > 1.0 {
                    self.bad("solver", "relax", "must lie in (0, 1]");
                }
                Some(Method::FixedPoint { relax })
            }
            Some(m) if nonlinear => {
                self.bad(
                    "solver",
                    "method",
                    format!("`{m}` cannot solve the pollinator system; use fixed_point"),
                );
                None
            }
            Some("fixed_point") => {
                self.bad(
                    "solver",
                    "method",
                    "fixed_point is for the pollinator system",
                );
                None
            }
            Some("jacobi") => Some(Method::Jacobi),
            Some("direct") => Some(Method::Direct),
            Some(_) => Some(Method::GaussSeidel),
            None if self.has("solver", "method") => None,
            None => Some(Method::GaussSeidel),
        };
        if !nonlinear {
            self.reject("solver", &["relax"], "by linear solvers");
        }
        let tol = self.positive("solver", "tol").unwrap_or(1e-13);
        let max_iter = match self.count("solver", "max_iter") {
            Some(0) => {
                self.bad("solver", "max_iter", "must be at least 1");
                None
            }
            Some(n) => Some(n),
            None => Some(10_000_000),
        };
        let initial = match self.choice(
            "solver",
            "initial",
            &["zeros", "boundary_average", "equilibrium"],
        ) {
            Some("zeros") => Some(Initial::Zeros),
            Some("boundary_average") => Some(Initial::BoundaryAverage),
            Some(_) if !nonlinear => {
                self.bad(
                    "solver",
                    "initial",
                    "equilibrium applies to the pollinator system only",
                );
                None
            }
            Some(_) => Some(Initial::Equilibrium),
            None if nonlinear => Some(Initial::BoundaryAverage),
            None => Some(Initial::Zeros),
        };

        // run
        let dx_list = if sweep {
            let list = self.require("run", "dx_list", |r| r.numbers("run", "dx_list"));
            match list {
                Some(l) if l.is_empty() || l.iter().any(|&h| h <= 0.0) => {
                    self.bad("run", "dx_list", "needs at least one positive spacing");
                    None
                }
                l => l,
            }
        } else {
            self.reject("run", &["dx_list"], "outside sweep mode");
            Some(Vec::new())
        };
        let area_samples = if sweep {
            self.count("run", "area_samples").unwrap_or(8) as usize
        } else {
            self.reject("run", &["area_samples"], "outside sweep mode");
            0
        };
        let time_keys = [
            "scheme",
            "dt",
            "dt_cfl",
            "t0",
            "steps",
            "t_end",
            "snapshot_times",
        ];
        let time = if mode == Some(Mode::Timestep) {
            self.time_settings()
        } else {
            self.reject("run", &time_keys, "outside timestep mode");
            Some(None)
        };

        // output
        let directory = self.text("output", "directory").unwrap_or("out");
        let formats = match self.get("output", "formats") {
            None => Some((true, false)),
            Some(v) => {
                let names: Option<Vec<&str>> = v
                    .as_array()
                    .and_then(|a| a.iter().map(Value::as_str).collect());
                match names {
                    Some(n) if !n.is_empty() && n.iter().all(|s| *s == "csv" || *s == "vtk") => {
                        Some((n.contains(&"csv"), n.contains(&"vtk")))
                    }
                    _ => {
                        self.bad(
                            "output",
                            "formats",
                            "expected a non-empty array drawn from \"csv\", \"vtk\"",
                        );
                        None
                    }
                }
            }
        };

        if !self.errors.is_empty() {
            return None;
        }
        let domain = match domain? {
            Ok(d) => d,
            Err(e) => return Some(Err(e)),
        };
        let (csv, vtk) = formats?;
        Some(Ok(RunConfig {
            domain,
            problem: problem?,
            dx: dx.unwrap_or(f64::NAN),
            dy: dy.unwrap_or(f64::NAN),
            policy: policy?,
            variants: variants?,
            method: method?,
            tol,
            max_iter: max_iter?,
            initial: initial?,
            mode: mode?,
            dx_list: dx_list?,
            area_samples,
            time: time?,
            directory: PathBuf::from(directory),
            csv,
            vtk,
        }))
    }

    fn domain(&mut self) -> Option<Result<DomainSpec, ConfigError>> {
        let shapes = ["fixture", "polygon", "implicit", "constraints"];
        let given: Vec<&str> = shapes
            .iter()
            .copied()
            .filter(|k| self.has("domain", k))
            .collect();
        if given.len() != 1 {
            self.errors.push(format!(
                "`domain` needs exactly one of {}, found {}",
                shapes.join(", "),
                if given.is_empty() {
                    "none".to_string()
                } else {
                    given.join(", ")
                }
            ));
            return None;
        }
        let window = self.rect("domain", "window");
        let bbox = self.rect("domain", "bbox");
        let hole = self.points("domain", "hole");
        let shape = given[0];
        if matches!(shape, "fixture" | "polygon") {
            self.reject(
                "domain",
                &["window", "bbox"],
                &format!("with `domain.{shape}`"),
            );
        }
        let base: Result<DomainSpec, GeometryError> = match shape {
            "fixture" => {
                let name = self.text("domain", "fixture")?;
                match fixtures::by_name(name) {
                    Some(d) => Ok(d),
                    None => {
                        self.bad(
                            "domain",
                            "fixture",
                            format!(
                                "unknown fixture `{name}`; available: {}",
                                fixtures::NAMES.join(", ")
                            ),
                        );
                        return None;
                    }
                }
            }
            "polygon" => DomainSpec::polygon(self.points("domain", "polygon")?),
            "implicit" => DomainSpec::implicit(self.expr("domain", "implicit")?, window, bbox),
            _ => {
                let v = self.get("domain", "constraints")?;
                let texts: Option<Vec<&str>> = v
                    .as_array()
                    .and_then(|a| a.iter().map(Value::as_str).collect());
                let Some(texts) = texts else {
                    self.bad("domain", "constraints", "expected an array of strings");
                    return None;
                };
                let mut cs = Vec::new();
                for t in texts {
                    match Constraint::parse(t) {
                        Ok(c) => cs.push(c),
                        Err(e) => self.bad("domain", "constraints", e),
                    }
                }
                DomainSpec::curve_bounded(cs, window, bbox)
            }
        };
        Some(
            base.and_then(|d| match hole {
                Some(h) => DomainSpec::difference(d, DomainSpec::polygon(h)?),
                None => Ok(d),
            })
            .map_err(ConfigError::from),
        )
    }

    fn problem(&mut self, kind: &str) -> Option<ProblemSpec> {
        let all = [
            "f",
            "g",
            "coef",
            "dirichlet",
            "exact",
            "initial",
            "form",
            "d1",
            "k",
            "mobility",
            "nu",
        ];
        let used: &[&str] = match kind {
            "poisson" => &["f", "dirichlet", "exact", "form"],
            "laplace" => &["dirichlet", "exact"],
            "helmholtz" => &["f", "g", "dirichlet", "exact"],
            "var_coeff" => &["coef", "f", "dirichlet", "exact"],
            "pollinator" => &["d1", "k", "mobility", "dirichlet"],
            _ => &["dirichlet", "initial", "nu"],
        };
        let unused: Vec<&str> = all.iter().copied().filter(|k| !used.contains(k)).collect();
        self.reject("problem", &unused, &format!("by kind `{kind}`"));

        let exact = self.expr("problem", "exact");
        if kind == "pollinator" {
            let d1 = self.require("problem", "d1", |r| r.num("problem", "d1"));
            let k = self.require("problem", "k", |r| r.num("problem", "k"));
            let mobility = match self.choice("problem", "mobility", &["constant", "proportional"]) {
                Some("proportional") => Some(Mobility::ProportionalToP),
                Some(_) => Some(Mobility::Constant),
                None if !self.has("problem", "mobility") => Some(Mobility::Constant),
                None => None,
            };
            let dirichlet = self.expr("problem", "dirichlet");
            let (d1, k, mobility) = (d1?, k?, mobility?);
            return match ProblemSpec::pollinator(d1, k, mobility, dirichlet) {
                Ok(p) => Some(p),
                Err(e) => {
                    self.errors.push(format!("`problem`: {e}"));
                    None
                }
            };
        }

        let dirichlet = self.require("problem", "dirichlet", |r| r.expr("problem", "dirichlet"));
        let p = match kind {
            "poisson" => {
                let f = self.require("problem", "f", |r| r.expr("problem", "f"));
                let form = match self.choice("problem", "form", &["laplacian", "neg_laplacian"]) {
                    Some("neg_laplacian") => Some(PoissonForm::NegLaplacian),
                    Some(_) => Some(PoissonForm::Laplacian),
                    None if !self.has("problem", "form") => Some(PoissonForm::Laplacian),
                    None => None,
                };
                ProblemSpec::poisson(f?, dirichlet?).with_form(form?)
            }
            "laplace" => ProblemSpec::poisson(Expr::constant(0.0), dirichlet?),
            "helmholtz" => {
                let f = self.require("problem", "f", |r| r.expr("problem", "f"));
                let g = self.require("problem", "g", |r| r.expr("problem", "g"));
                ProblemSpec::helmholtz(f?, g?, dirichlet?)
            }
            "var_coeff" => {
                let coef = self.require("problem", "coef", |r| r.expr("problem", "coef"));
                let f = self.require("problem", "f", |r| r.expr("problem", "f"));
                ProblemSpec::var_coeff(coef?, f?, dirichlet?)
            }
            _ => {
                let initial = self.expr("problem", "initial");
                let p = ProblemSpec::poisson(Expr::constant(0.0), dirichlet?);
                match initial {
                    Some(i) => p.with_initial(i),
                    None => p,
                }
            }
        };
        Some(match exact {
            Some(e) => p.with_exact(e),
            None => p,
        })
    }

    fn time_settings(&mut self) -> Option<Option<TimeSettings>> {
        let scheme = match self.require("run", "scheme", |r| {
            r.choice("run", "scheme", &["explicit", "implicit"])
        }) {
            Some("explicit") => Some(Scheme::Explicit),
            Some(_) => Some(Scheme::Implicit),
            None => None,
        };
        let dt = match (self.has("run", "dt"), self.has("run", "dt_cfl")) {
            (true, false) => self.positive("run", "dt").map(TimeStep::Absolute),
            (false, true) => self.positive("run", "dt_cfl").map(TimeStep::CflFraction),
            _ => {
                self.errors
                    .push("`run` needs exactly one of `dt`, `dt_cfl` in timestep mode".to_string());
                None
            }
        };
        let t0 = self.num("run", "t0").unwrap_or(0.0);
        let duration = match (self.has("run", "steps"), self.has("run", "t_end")) {
            (true, false) => match self.count("run", "steps") {
                Some(0) => {
                    self.bad("run", "steps", "must be at least 1");
                    None
                }
                n => n.map(|n| Duration::Steps(n as usize)),
            },
            (false, true) => match self.num("run", "t_end") {
                Some(t) if t > t0 => Some(Duration::Until(t)),
                Some(_) => {
                    self.bad("run", "t_end", "must exceed `run.t0`");
                    None
                }
                None => None,
            },
            _ => {
                self.errors.push(
                    "`run` needs exactly one of `steps`, `t_end` in timestep mode".to_string(),
                );
                None
            }
        };
        let nu = if self.has("problem", "nu") {
            self.positive("problem", "nu")
        } else {
            Some(1.0)
        };
        let snapshot_times = if self.has("run", "snapshot_times") {
            self.numbers("run", "snapshot_times")
        } else {
            Some(Vec::new())
        };
        Some(Some(TimeSettings {
            scheme: scheme?,
            dt: dt?,
            t0,
            duration: duration?,
            nu: nu?,
            snapshot_times: snapshot_times?,
        }))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(n) => Some(*n as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[domain]
fixture = "parabola"
[problem]
kind = "poisson"
f = "4"
dirichlet = "(x+y)^2"
[grid]
dx = 0.1
"#;

    fn errors(text: &str) -> Vec<String> {
        match parse_config(text, None) {
            Err(ConfigError::Invalid(e)) => e,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_defaults() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.mode, Mode::Steady);
        assert_eq!(c.dx, 0.1);
        assert_eq!(c.dy, 0.1);
        assert_eq!(c.policy, RectPolicy::PaddedByH);
        assert_eq!(c.variants, vec![Variant::OverBar]);
        assert_eq!(c.method, Method::GaussSeidel);
        assert_eq!(c.tol, 1e-13);
        assert_eq!(c.max_iter, 10_000_000);
        assert!(c.csv && !c.vtk);
        assert_eq!(c.directory, PathBuf::from("out"));
    }

    #[test]
    fn missing_dx_is_named() {
        let e = errors(&MINIMAL.replace("dx = 0.1", ""));
        assert_eq!(e, vec!["`grid.dx`: required".to_string()]);
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let text = format!("{MINIMAL}colour = \"red\"\n[plot]\nx = 1\n");
        let e = errors(&text);
        assert!(
            e.contains(&"unknown key `grid.colour`".to_string()),
            "{e:?}"
        );
        assert!(e.contains(&"unknown section `plot`".to_string()), "{e:?}");
    }

    #[test]
    fn every_violation_is_listed() {
        let text = MINIMAL
            .replace("f = \"4\"", "f = \"4 +\"")
            .replace("dx = 0.1", "dx = -1\nvariant = \"sideways\"");
        let e = errors(&text);
        assert_eq!(e.len(), 3, "{e:?}");
        assert!(e.iter().any(|m| m.starts_with("`problem.f`")));
        assert!(e.iter().any(|m| m.starts_with("`grid.dx`")));
        assert!(e.iter().any(|m| m.starts_with("`grid.variant`")));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "[domain]\nfixture = \"parabola\"\n[grid]\ndx = = 0.1\n";
        match parse_config(text, None) {
            Err(ConfigError::Parse(msg)) => assert!(msg.contains("line 4"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pollinator_is_valid() {
        let text = r#"
[domain]
fixture = "star"
[problem]
kind = "pollinator"
d1 = 10
k = 0.45
[grid]
dx = 0.2
"#;
        let c = parse_config(text, None).unwrap();
        assert_eq!(c.method, Method::FixedPoint { relax: 1.0 });
        assert_eq!(c.initial, Initial::BoundaryAverage);
        assert!(!c.problem.is_linear());
    }

    #[test]
    fn keys_ignored_by_the_kind_are_rejected() {
        let e = errors(&MINIMAL.replace("f = \"4\"", "f = \"4\"\nd1 = 10"));
        assert_eq!(
            e,
            vec!["`problem.d1`: not used by kind `poisson`".to_string()]
        );
    }

    #[test]
    fn sweep_override_needs_dx_list() {
        let e = match parse_config(MINIMAL, Some(Mode::Sweep)) {
            Err(ConfigError::Invalid(e)) => e,
            other => panic!("{other:?}"),
        };
        assert!(e.iter().any(|m| m.contains("`grid.dx`")), "{e:?}");
        assert!(e.iter().any(|m| m == "`run.dx_list`: required"), "{e:?}");
    }

    #[test]
    fn heat_needs_timestep_mode() {
        let text = r#"
[domain]
fixture = "unit_square"
[problem]
kind = "heat"
dirichlet = "0"
initial = "sin(pi*x)*sin(pi*y)"
[grid]
dx = 0.1
rect = [0, 0, 1, 1]
[run]
mode = "timestep"
scheme = "implicit"
dt_cfl = 10
steps = 5
snapshot_times = [0.01]
"#;
        let c = parse_config(text, None).unwrap();
        let t = c.time.unwrap();
        assert_eq!(t.dt, TimeStep::CflFraction(10.0));
        assert_eq!(t.duration, Duration::Steps(5));
        assert_eq!(c.policy, RectPolicy::Fixed(Rect::new(0.0, 0.0, 1.0, 1.0)));
        let e = errors(&text.replace("mode = \"timestep\"", "mode = \"steady\""));
        assert!(e.iter().any(|m| m.contains("timestep mode")), "{e:?}");
    }

    #[test]
    fn inline_domains() {
        let text = r#"
[domain]
polygon = [[0, 0], [4, 0], [4, 4], [0, 4]]
hole = [[1, 1], [2, 1], [2, 2], [1, 2]]
[problem]
kind = "laplace"
dirichlet = "x"
[grid]
dx = 0.5
"#;
        let c = parse_config(text, None).unwrap();
        assert!(matches!(c.domain, DomainSpec::Difference(..)));
        let text = r#"
[domain]
implicit = "x^2 + y^2 - 1"
bbox = [-1, -1, 1, 1]
[problem]
kind = "laplace"
dirichlet = "x"
[grid]
dx = 0.5
"#;
        assert!(matches!(
            parse_config(text, None).unwrap().domain,
            DomainSpec::Implicit { .. }
        ));
    }

    #[test]
    fn two_domain_shapes_conflict() {
        let e = errors(&MINIMAL.replace(
            "fixture = \"parabola\"",
            "fixture = \"parabola\"\nimplicit = \"x\"",
        ));
        assert_eq!(e.len(), 1, "{e:?}");
        assert!(e[0].contains("exactly one"));
    }
}
