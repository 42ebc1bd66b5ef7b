//! Heat equation `a_t = ν∇²a` with forward Euler or backward Euler steps.
//!
//! Only the Dirichlet data and the initial condition of the problem are
//! used; boundary values are always taken at the end of the step.

use rayon::prelude::*;
use thiserror::Error;

use crate::assemble::{build_system, AssembleError, ProblemSpec, RowSpec};
use crate::embed::{EmbeddedMesh, NodeClass};
use crate::exprlang::EvalError;
use crate::field::Field;
use crate::solve::{solve_jacobi, InitialGuess, IterConfig, SolveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t0: f64,
    pub steps: usize,
    pub nu: f64,
    pub scheme: Scheme,
    pub snapshot_times: Vec<f64>,
}

impl TimeConfig {
    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    /// First step whose time lies within `dt/2` of `t`.
    pub fn step_for(&self, t: f64) -> Option<usize> {
        let n = ((t - self.t0) / self.dt).round();
        if n < 0.0 || n > self.steps as f64 {
            return None;
        }
        let n = n as usize;
        // prefer the earlier step on an exact half-way tie
        if n > 0 && (self.time(n - 1) - t).abs() <= 0.5 * self.dt {
            return Some(n - 1);
        }
        ((self.time(n) - t).abs() <= 0.5 * self.dt).then_some(n)
    }

    fn validate(&self) -> Result<(), TimestepError> {
        let bad = |m: String| Err(TimestepError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if self.steps < 1 {
            return bad("steps must be at least 1".into());
        }
        for &t in &self.snapshot_times {
            if self.step_for(t).is_none() {
                return Err(TimestepError::SnapshotOutOfRange { t });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimestepError {
    #[error("invalid time configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot time {t} lies outside the simulated interval")]
    SnapshotOutOfRange { t: f64 },
    #[error("data evaluation failed at ({x}, {y}, t={t}): {source}")]
    Eval {
        x: f64,
        y: f64,
        t: f64,
        #[source]
        source: EvalError,
    },
    #[error("implicit step {step}: {source}")]
    Solve {
        step: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

/// Largest stable forward-Euler step, `1 / (2ν(1/dx² + 1/dy²))`.
pub fn cfl_limit(m: &EmbeddedMesh, nu: f64) -> f64 {
    let (dx, dy) = (m.grid.dx, m.grid.dy);
    1.0 / (2.0 * nu * (1.0 / (dx * dx) + 1.0 / (dy * dy)))
}

fn eval(e: &crate::exprlang::Expr, x: f64, y: f64, t: f64) -> Result<f64, TimestepError> {
    e.eval(x, y, t)
        .map_err(|source| TimestepError::Eval { x, y, t, source })
}

/// Initial data on the interior (the Dirichlet data when no initial
/// condition is given) and Dirichlet data on the boundary, both at `t0`.
pub fn initial_field(m: &EmbeddedMesh, p: &ProblemSpec, t0: f64) -> Result<Field, TimestepError> {
    let init = p.initial.as_ref().unwrap_or(&p.dirichlet);
    let mut f = Field::nan(m.grid);
    for (i, c) in m.class.iter().enumerate() {
        let (x, y) = m.grid.xy(i);
        f.values[i] = match c {
            NodeClass::Interior => eval(init, x, y, t0)?,
            NodeClass::Boundary => eval(&p.dirichlet, x, y, t0)?,
            NodeClass::Exterior => continue,
        };
    }
    Ok(f)
}

fn refresh_boundary(
    f: &mut Field,
    m: &EmbeddedMesh,
    p: &ProblemSpec,
    t: f64,
) -> Result<(), TimestepError> {
    for i in m.boundary_nodes() {
        let (x, y) = m.grid.xy(i);
        f.values[i] = eval(&p.dirichlet, x, y, t)?;
    }
    Ok(())
}

// Below this many nodes the explicit update runs sequentially.
const PAR_THRESHOLD: usize = 16_384;

/// One forward-Euler step from `t0 + n·dt` to `t0 + (n+1)·dt`.
pub fn step_explicit(
    field: &Field,
    m: &EmbeddedMesh,
    p: &ProblemSpec,
    tc: &TimeConfig,
    n: usize,
) -> Result<Field, TimestepError> {
    let g = &m.grid;
    let (ax, ay) = (tc.dt * tc.nu / (g.dx * g.dx), tc.dt * tc.nu / (g.dy * g.dy));
    let u = &field.values;
    let update = |i: usize| -> f64 {
        if m.class[i] != NodeClass::Interior {
            return u[i];
        }
        let [e, w, nn, s] = g
            .neighbors(i)
            .map(|o| u[o.expect("interior stencil is complete")]);
        u[i] + ax * (e - 2.0 * u[i] + w) + ay * (nn - 2.0 * u[i] + s)
    };
    let values: Vec<f64> = if u.len() >= PAR_THRESHOLD {
        (0..u.len()).into_par_iter().map(update).collect()
    } else {
        (0..u.len()).map(update).collect()
    };
    let mut next = Field { grid: *g, values };
    refresh_boundary(&mut next, m, p, tc.time(n + 1))?;
    Ok(next)
}

/// One backward-Euler step: solves `(I − dt·ν·L)u^{n+1} = u^n` by Jacobi,
/// starting from `u^n`.
pub fn step_implicit(
    field: &Field,
    m: &EmbeddedMesh,
    p: &ProblemSpec,
    tc: &TimeConfig,
    n: usize,
    cfg: &IterConfig,
) -> Result<Field, TimestepError> {
    let g = &m.grid;
    let (ax, ay) = (tc.dt * tc.nu / (g.dx * g.dx), tc.dt * tc.nu / (g.dy * g.dy));
    let t = tc.time(n + 1);
    let system = build_system(m, &p.dirichlet, t, |node, _, _| {
        Ok(RowSpec {
            center: 1.0 + (ax + ax + ay + ay),
            coeffs: [-ax, -ax, -ay, -ay],
            source: field.values[node],
        })
    })?;
    let cfg = IterConfig {
        initial: InitialGuess::Field(field.clone()),
        ..cfg.clone()
    };
    let (next, _) =
        solve_jacobi(&system, &cfg).map_err(|source| TimestepError::Solve { step: n, source })?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub requested: f64,
    pub step: usize,
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatRun {
    pub snapshots: Vec<Snapshot>,
    pub final_field: Field,
    /// Interior max-norm after each step, starting with the initial field.
    pub norms: Vec<f64>,
}

/// Max-norm over the interior nodes.
pub fn interior_norm(f: &Field, m: &EmbeddedMesh) -> f64 {
    m.interior_nodes()
        .fold(0.0, |a, i| a.max(f.values[i].abs()))
}

/// Marches `tc.steps` steps from the initial condition, keeping the fields at
/// the requested snapshot times.
pub fn run_heat(
    m: &EmbeddedMesh,
    p: &ProblemSpec,
    tc: &TimeConfig,
    cfg: &IterConfig,
) -> Result<HeatRun, TimestepError> {
    tc.validate()?;
    let wanted: Vec<(f64, usize)> = tc
        .snapshot_times
        .iter()
        .map(|&t| (t, tc.step_for(t).expect("validated")))
        .collect();
    let mut u = initial_field(m, p, tc.t0)?;
    let mut snapshots = Vec::new();
    let mut norms = vec![interior_norm(&u, m)];
    let take = |u: &Field, n: usize, snapshots: &mut Vec<Snapshot>| {
        for &(t, step) in wanted.iter().filter(|(_, s)| *s == n) {
            snapshots.push(Snapshot {
                requested: t,
                step,
                t: tc.time(step),
                field: u.clone(),
            });
        }
    };
    take(&u, 0, &mut snapshots);
    for n in 0..tc.steps {
        u = match tc.scheme {
            Scheme::Explicit => step_explicit(&u, m, p, tc, n)?,
            Scheme::Implicit => step_implicit(&u, m, p, tc, n, cfg)?,
        };
        norms.push(interior_norm(&u, m));
        take(&u, n + 1, &mut snapshots);
    }
    snapshots.sort_by(|a, b| a.requested.total_cmp(&b.requested));
    Ok(HeatRun {
        snapshots,
        final_field: u,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{build_mesh, build_rectangle, RectPolicy, Variant};
    use crate::exprlang::parse_expr;
    use crate::geometry::{fixtures, Rect};
    use crate::solve::dense_lu_solve;

    fn square(dx: f64) -> EmbeddedMesh {
        let d = fixtures::unit_square();
        let g =
            build_rectangle(&d, RectPolicy::Fixed(Rect::new(0.0, 0.0, 1.0, 1.0)), dx, dx).unwrap();
        build_mesh(&d, &g, Variant::OverBar).unwrap()
    }

    fn cfg(dt: f64, steps: usize, scheme: Scheme) -> TimeConfig {
        TimeConfig {
            dt,
            t0: 0.0,
            steps,
            nu: 1.0,
            scheme,
            snapshot_times: vec![],
        }
    }

    fn heat(dirichlet: &str, initial: &str) -> ProblemSpec {
        ProblemSpec::poisson(parse_expr("0").unwrap(), parse_expr(dirichlet).unwrap())
            .with_initial(parse_expr(initial).unwrap())
    }

    #[test]
    fn cfl_values() {
        assert!((cfl_limit(&square(0.1), 1.0) - 0.0025).abs() < 1e-15);
        assert!((cfl_limit(&square(0.004), 1.0) - 4e-6).abs() < 1e-18);
        let m = square(0.1);
        assert!((cfl_limit(&m, 2.0) - 0.5 * cfl_limit(&m, 1.0)).abs() < 1e-18);
    }

    #[test]
    fn zero_and_constant_data_are_steady() {
        let m = square(0.1);
        for scheme in [Scheme::Explicit, Scheme::Implicit] {
            let tc = cfg(0.002, 20, scheme);
            let run = run_heat(&m, &heat("0", "0"), &tc, &IterConfig::default()).unwrap();
            assert!(run
                .final_field
                .values
                .iter()
                .filter(|v| !v.is_nan())
                .all(|&v| v == 0.0));
            let run = run_heat(&m, &heat("2.5", "2.5"), &tc, &IterConfig::default()).unwrap();
            assert!(run
                .final_field
                .values
                .iter()
                .filter(|v| !v.is_nan())
                .all(|&v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn implicit_step_matches_dense_oracle() {
        let m = square(0.1);
        let p = heat("0", "sin(pi*x)*sin(2*pi*y)+0.3*x");
        let tc = cfg(10.0, 1, Scheme::Implicit);
        let u0 = initial_field(&m, &p, 0.0).unwrap();
        let u1 = step_implicit(&u0, &m, &p, &tc, 0, &IterConfig::default()).unwrap();
        // oracle: dense (I - dt L) built independently from the grid
        let nodes: Vec<usize> = m.interior_nodes().collect();
        let n = nodes.len();
        let a = tc.dt / (0.1 * 0.1);
        let mut mat = vec![0.0; n * n];
        for (r, &i) in nodes.iter().enumerate() {
            mat[r * n + r] = 1.0 + 4.0 * a;
            for nb in m.grid.neighbors(i).into_iter().flatten() {
                if let Some(q) = nodes.iter().position(|&x| x == nb) {
                    mat[r * n + q] = -a;
                }
            }
        }
        let b: Vec<f64> = nodes.iter().map(|&i| u0.values[i]).collect();
        let x = dense_lu_solve(n, &mat, &b).unwrap();
        for (r, &i) in nodes.iter().enumerate() {
            assert!((u1.values[i] - x[r]).abs() < 1e-11);
        }
        assert!(interior_norm(&u1, &m) < interior_norm(&u0, &m));
    }

    #[test]
    fn snapshot_rounding() {
        let tc = TimeConfig {
            snapshot_times: vec![0.0096],
            ..cfg(9e-5, 200, Scheme::Explicit)
        };
        assert_eq!(tc.step_for(0.0096), Some(107));
        assert_eq!(tc.step_for(1.0), None);
        let bad = TimeConfig {
            snapshot_times: vec![1.0],
            ..tc
        };
        assert!(matches!(
            bad.validate(),
            Err(TimestepError::SnapshotOutOfRange { .. })
        ));
    }

    #[test]
    fn explicit_step_respects_bounds() {
        let m = square(0.1);
        let p = heat("sin(t)*(sin(pi*x)+sin(pi*y))", "0.5*x*y");
        let tc = cfg(cfl_limit(&m, 1.0), 10, Scheme::Explicit);
        let mut u = initial_field(&m, &p, 0.0).unwrap();
        for n in 0..10 {
            let next = step_explicit(&u, &m, &p, &tc, n).unwrap();
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..u.values.len() {
                if m.class[i] != NodeClass::Exterior {
                    lo = lo.min(u.values[i]);
                    hi = hi.max(u.values[i]);
                }
            }
            for i in m.boundary_nodes() {
                lo = lo.min(next.values[i]);
                hi = hi.max(next.values[i]);
            }
            for i in m.interior_nodes() {
                assert!(next.values[i] >= lo - 1e-14 && next.values[i] <= hi + 1e-14);
            }
            u = next;
        }
    }
}
