//! Executes a validated configuration and writes its output files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gridcarve_core::analyze::{extrema_interior, solve_on_mesh, PipelineError, SweepError};
use gridcarve_core::assemble::{companion_p, AssembleError};
use gridcarve_core::embed::{classify_grid, mesh_from_classes, EmbedError};
use gridcarve_core::geometry::GeometryError;
use gridcarve_core::io;
use gridcarve_core::prelude::*;
use gridcarve_core::solve::SolveError;
use gridcarve_core::timestep::{HeatRun, TimestepError};
use thiserror::Error;

use crate::config::{ConfigError, Duration, Initial, Mode, RunConfig, TimeSettings, TimeStep};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
    #[error("mesh: {0}")]
    Mesh(#[from] EmbedError),
    #[error("mesh: interior not connected ({variant} mesh)")]
    NotConnected { variant: &'static str },
    #[error("solver: {0}")]
    Assemble(#[from] AssembleError),
    #[error("solver: {0}")]
    Solve(#[from] SolveError),
    #[error("timestep: {0}")]
    Timestep(#[from] TimestepError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Geometry(_)) => 3,
            RunError::Config(_) => 2,
            RunError::Geometry(_) | RunError::Mesh(EmbedError::Geometry(_)) => 3,
            RunError::Mesh(_) | RunError::NotConnected { .. } => 4,
            RunError::Assemble(_) | RunError::Solve(_) => 5,
            RunError::Timestep(_) => 6,
            RunError::Write { .. } => 1,
        }
    }

    fn from_pipeline(e: PipelineError, variant: Variant) -> RunError {
        match e {
            PipelineError::Geometry(e) => e.into(),
            PipelineError::Embed(e) => e.into(),
            PipelineError::NotConnected => RunError::NotConnected {
                variant: variant.name(),
            },
            PipelineError::Assemble(e) => e.into(),
            PipelineError::Solve(e) => e.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dump_system: bool,
    /// Overrides `output.directory`.
    pub out: Option<PathBuf>,
}

/// What a run produced: one summary line per solve and the files written.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Writer, RunError> {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| RunError::Write {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let dir = opts.out.as_deref().unwrap_or(&cfg.directory);
    let mut w = Writer::new(dir)?;
    let summary = match cfg.mode {
        Mode::Steady => steady(cfg, opts, &mut w)?,
        Mode::Sweep => sweep(cfg, &mut w)?,
        Mode::Timestep => timestep(cfg, cfg.time.as_ref().expect("validated"), &mut w)?,
    };
    Ok(RunOutput {
        summary,
        files: w.files,
    })
}

fn meshes(cfg: &RunConfig) -> Result<Vec<EmbeddedMesh>, RunError> {
    let grid = build_rectangle(&cfg.domain, cfg.policy, cfg.dx, cfg.dy)?;
    let classes = classify_grid(&cfg.domain, &grid, cfg.domain.default_eps()?)?;
    cfg.variants
        .iter()
        .map(|&v| {
            let m = mesh_from_classes(&grid, v, &classes)?;
            if check_connectivity(&m) {
                Ok(m)
            } else {
                Err(RunError::NotConnected { variant: v.name() })
            }
        })
        .collect()
}

fn iter_config(cfg: &RunConfig, grid: GridSpec) -> IterConfig {
    let initial = match cfg.initial {
        Initial::Zeros => InitialGuess::Zeros,
        Initial::BoundaryAverage => InitialGuess::BoundaryAverage,
        Initial::Equilibrium => {
            let ProblemKind::Pollinator { k, .. } = cfg.problem.kind else {
                unreachable!("validated");
            };
            let a = pollinator_equilibrium(k).expect("validated");
            InitialGuess::Field(Field::constant(grid, a))
        }
    };
    IterConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        initial,
    }
}

fn error_text(e: Option<f64>) -> String {
    e.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4e}"))
}

fn opt_full(e: Option<f64>) -> String {
    e.map(io::full).unwrap_or_default()
}

fn extremum_cols(e: &Extremum) -> String {
    format!("{},{},{}", io::full(e.value), io::full(e.x), io::full(e.y))
}

fn steady(cfg: &RunConfig, opts: &RunOptions, w: &mut Writer) -> Result<Vec<String>, RunError> {
    let mut summary = Vec::new();
    let mut report = String::from(
        "variant,dx,dy,unknowns,iterations,final_update_norm,converged,residual_inf,error_inf,u_min,x_min,y_min,u_max,x_max,y_max\n",
    );
    for mesh in meshes(cfg)? {
        let v = mesh.variant;
        let name = v.name();
        let out = solve_on_mesh(
            &cfg.problem,
            &mesh,
            cfg.method,
            &iter_config(cfg, mesh.grid),
        )
        .map_err(|e| RunError::from_pipeline(e, v))?;
        let r = &out.report;
        let _ = writeln!(
            report,
            "{name},{},{},{},{},{},{},{},{},{},{}",
            io::full(mesh.grid.dx),
            io::full(mesh.grid.dy),
            out.system.len(),
            r.iterations,
            io::full(r.final_update_norm),
            r.converged,
            io::full(r.residual_inf),
            opt_full(r.error_vs_exact),
            extremum_cols(&r.min),
            extremum_cols(&r.max),
        );
        summary.push(format!(
            "{name}: unknowns={} iterations={} update={:.2e} residual={:.2e} error={} min={} max={}",
            out.system.len(),
            r.iterations,
            r.final_update_norm,
            r.residual_inf,
            error_text(r.error_vs_exact),
            io::extremum(&r.min),
            io::extremum(&r.max),
        ));
        if cfg.csv {
            w.put(&format!("mesh_{name}.csv"), &io::mesh_csv(&mesh))?;
            w.put(
                &format!("solution_{name}.csv"),
                &io::solution_csv(&mesh, &out.field),
            )?;
        }
        if cfg.vtk {
            w.put(
                &format!("solution_{name}.vtk"),
                &io::vtk(&mesh, &out.field, "u"),
            )?;
        }
        if !cfg.problem.is_linear() {
            let p = companion_p(&out.field);
            if cfg.csv {
                w.put(
                    &format!("companion_{name}.csv"),
                    &io::solution_csv(&mesh, &p),
                )?;
            }
            if cfg.vtk {
                w.put(&format!("companion_{name}.vtk"), &io::vtk(&mesh, &p, "p"))?;
            }
        }
        if opts.dump_system {
            w.put(&format!("system_{name}.csv"), &io::system_csv(&out.system))?;
        }
    }
    w.put("report.csv", &report)?;
    Ok(summary)
}

fn sweep(cfg: &RunConfig, w: &mut Writer) -> Result<Vec<String>, RunError> {
    let opts = SweepOptions {
        policy: cfg.policy,
        iter: IterConfig {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            initial: match cfg.initial {
                Initial::BoundaryAverage => InitialGuess::BoundaryAverage,
                _ => InitialGuess::Zeros,
            },
        },
        area_samples: cfg.area_samples,
    };
    let mut all = SweepReport::default();
    for &v in &cfg.variants {
        let rep = run_sweep(&cfg.domain, &cfg.problem, &cfg.dx_list, v, &opts)
            .map_err(|SweepError { source, .. }| RunError::from_pipeline(source, v))?;
        all.rows.extend(rep.rows);
    }
    w.put("sweep.csv", &io::sweep_csv(&all))?;
    Ok(all
        .rows
        .iter()
        .map(|r| {
            format!(
                "{} dx={}: unknowns={} iterations={} error={} area_error={} min={} max={}",
                r.variant.name(),
                r.dx,
                r.unknowns,
                r.iterations,
                error_text(r.error_inf),
                error_text(r.area_error),
                io::extremum(&r.min),
                io::extremum(&r.max),
            )
        })
        .collect())
}

fn time_config(ts: &TimeSettings, mesh: &EmbeddedMesh) -> TimeConfig {
    let dt = match ts.dt {
        TimeStep::Absolute(dt) => dt,
        TimeStep::CflFraction(c) => c * cfl_limit(mesh, ts.nu),
    };
    let steps = match ts.duration {
        Duration::Steps(n) => n,
        Duration::Until(t) => (((t - ts.t0) / dt) - 1e-9).ceil().max(1.0) as usize,
    };
    TimeConfig {
        dt,
        t0: ts.t0,
        steps,
        nu: ts.nu,
        scheme: ts.scheme,
        snapshot_times: ts.snapshot_times.clone(),
    }
}

fn norms_csv(run: &HeatRun, tc: &TimeConfig) -> String {
    let mut out = String::from("step,t,norm\n");
    for (n, v) in run.norms.iter().enumerate() {
        let _ = writeln!(out, "{n},{},{}", io::full(tc.time(n)), io::full(*v));
    }
    out
}

fn timestep(cfg: &RunConfig, ts: &TimeSettings, w: &mut Writer) -> Result<Vec<String>, RunError> {
    let mut summary = Vec::new();
    let mut report =
        String::from("variant,requested_t,step,t,u_min,x_min,y_min,u_max,x_max,y_max\n");
    let iter = IterConfig {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        initial: InitialGuess::Zeros,
    };
    for mesh in meshes(cfg)? {
        let name = mesh.variant.name();
        let tc = time_config(ts, &mesh);
        let run = run_heat(&mesh, &cfg.problem, &tc, &iter)?;
        let cfl = cfl_limit(&mesh, ts.nu);
        summary.push(format!(
            "{name}: scheme={} dt={:.4e} ({:.3} x cfl) steps={} final_norm={:.4e}",
            match ts.scheme {
                Scheme::Explicit => "explicit",
                Scheme::Implicit => "implicit",
            },
            tc.dt,
            tc.dt / cfl,
            tc.steps,
            run.norms.last().copied().unwrap_or(0.0),
        ));
        for (i, s) in run.snapshots.iter().enumerate() {
            let (lo, hi) = extrema_interior(&s.field, &mesh);
            let _ = writeln!(
                report,
                "{name},{},{},{},{},{}",
                io::full(s.requested),
                s.step,
                io::full(s.t),
                extremum_cols(&lo),
                extremum_cols(&hi),
            );
            summary.push(format!(
                "{name} t={} (step {}): min={} max={}",
                s.requested,
                s.step,
                io::extremum(&lo),
                io::extremum(&hi),
            ));
            if cfg.csv {
                w.put(
                    &format!("snapshot_{name}_{i}.csv"),
                    &io::snapshot_csv(&mesh, &s.field, s.t),
                )?;
            }
            if cfg.vtk {
                w.put(
                    &format!("snapshot_{name}_{i}.vtk"),
                    &io::vtk(&mesh, &s.field, "u"),
                )?;
            }
        }
        if cfg.csv {
            w.put(&format!("mesh_{name}.csv"), &io::mesh_csv(&mesh))?;
            w.put(
                &format!("final_{name}.csv"),
                &io::snapshot_csv(&mesh, &run.final_field, tc.time(tc.steps)),
            )?;
        }
        if cfg.vtk {
            w.put(
                &format!("final_{name}.vtk"),
                &io::vtk(&mesh, &run.final_field, "u"),
            )?;
        }
        w.put(&format!("norms_{name}.csv"), &norms_csv(&run, &tc))?;
    }
    w.put("report.csv", &report)?;
    Ok(summary)
}
