//! Iterative and direct solvers for assembled systems.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::analyze::{error_inf, extrema_interior, Extremum};
use crate::assemble::{mobility_value, AssembleError, DiscreteProblem, Link};
use crate::exprlang::EvalError;
use crate::field::Field;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zeros,
    /// Mean of the boundary values.
    BoundaryAverage,
    Field(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterConfig {
    /// Stop once the max-norm of the change between sweeps is at most this.
    pub tol: f64,
    pub max_iter: u64,
    pub initial: InitialGuess,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig {
            tol: 1e-13,
            max_iter: 10_000_000,
            initial: InitialGuess::Zeros,
        }
    }
}

impl IterConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(SolveError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(SolveError::InvalidConfig(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: u64,
    pub final_update_norm: f64,
    pub converged: bool,
    /// Max-norm residual of the discrete equations at the returned iterate.
    pub residual_inf: f64,
    pub error_vs_exact: Option<f64>,
    pub min: Extremum,
    pub max: Extremum,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no convergence after {iterations} iterations (last update {update_norm:e})")]
    NonConvergence {
        iterations: u64,
        update_norm: f64,
        last: Box<Field>,
    },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dense solve limited to {limit} unknowns, got {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("system is nonlinear; use the fixed-point solver")]
    Nonlinear,
    #[error("system is linear; the fixed-point solver needs the pollinator system")]
    Linear,
    #[error("no real root for the center value at node {node}")]
    NoRealRoot { node: usize },
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error("exact solution: {0}")]
    Exact(#[from] EvalError),
}

/// Largest system accepted by [`solve_direct_dense`].
pub const DENSE_LIMIT: usize = 4000;

// Below this many unknowns a parallel Jacobi sweep costs more than it saves.
const PAR_THRESHOLD: usize = 4096;

fn initial_vector(dp: &DiscreteProblem, init: &InitialGuess) -> Vec<f64> {
    match init {
        InitialGuess::Zeros => vec![0.0; dp.len()],
        InitialGuess::BoundaryAverage => {
            let avg = if dp.boundary.is_empty() {
                0.0
            } else {
                dp.boundary.iter().map(|(_, v)| v).sum::<f64>() / dp.boundary.len() as f64
            };
            vec![avg; dp.len()]
        }
        InitialGuess::Field(f) => dp.gather(f),
    }
}

fn off_diagonal(dp: &DiscreteProblem, r: usize, u: &[f64]) -> f64 {
    let row = &dp.rows[r];
    let mut s = 0.0;
    for (c, l) in row.coeffs.iter().zip(&row.links) {
        if let Link::Unknown(q) = l {
            s += c * u[*q];
        }
    }
    s
}

fn report(
    dp: &DiscreteProblem,
    u: &[f64],
    iterations: u64,
    update: f64,
    residual: f64,
) -> Result<(Field, SolveReport), SolveError> {
    let field = dp.to_field(u);
    let error_vs_exact = match &dp.exact {
        Some(e) => Some(error_inf(&field, e, &dp.mesh)?),
        None => None,
    };
    let (min, max) = extrema_interior(&field, &dp.mesh);
    Ok((
        field,
        SolveReport {
            iterations,
            final_update_norm: update,
            converged: true,
            residual_inf: residual,
            error_vs_exact,
            min,
            max,
        },
    ))
}

fn linear_only(dp: &DiscreteProblem) -> Result<(), SolveError> {
    if dp.nonlinear.is_some() {
        Err(SolveError::Nonlinear)
    } else {
        Ok(())
    }
}

/// Jacobi iteration: every unknown is updated from the previous iterate.
pub fn solve_jacobi(
    dp: &DiscreteProblem,
    cfg: &IterConfig,
) -> Result<(Field, SolveReport), SolveError> {
    linear_only(dp)?;
    cfg.validate()?;
    let mut u = initial_vector(dp, &cfg.initial);
    let mut next = vec![0.0; dp.len()];
    let update_row =
        |r: usize, u: &[f64]| (dp.rows[r].rhs - off_diagonal(dp, r, u)) / dp.rows[r].center;
    let mut update = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        if dp.len() >= PAR_THRESHOLD {
            next.par_iter_mut()
                .enumerate()
                .for_each(|(r, v)| *v = update_row(r, &u));
        } else {
            for (r, v) in next.iter_mut().enumerate() {
                *v = update_row(r, &u);
            }
        }
        update = u
            .iter()
            .zip(&next)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        if update <= cfg.tol {
            let res = dp.residual_inf(&u);
            return report(dp, &u, it, update, res);
        }
    }
    Err(SolveError::NonConvergence {
        iterations: cfg.max_iter,
        update_norm: update,
        last: Box::new(dp.to_field(&u)),
    })
}

/// Gauss-Seidel iteration, sweeping unknowns in k-major order and using each
/// new value as soon as it is computed.
pub fn solve_gauss_seidel(
    dp: &DiscreteProblem,
    cfg: &IterConfig,
) -> Result<(Field, SolveReport), SolveError> {
    linear_only(dp)?;
    cfg.validate()?;
    let mut u = initial_vector(dp, &cfg.initial);
    let mut update = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        update = 0.0;
        for r in 0..dp.len() {
            let v = (dp.rows[r].rhs - off_diagonal(dp, r, &u)) / dp.rows[r].center;
            update = f64::max(update, (v - u[r]).abs());
            u[r] = v;
        }
        if update <= cfg.tol {
            let res = dp.residual_inf(&u);
            return report(dp, &u, it, update, res);
        }
    }
    Err(SolveError::NonConvergence {
        iterations: cfg.max_iter,
        update_norm: update,
        last: Box::new(dp.to_field(&u)),
    })
}

/// Dense LU with partial pivoting.
pub fn solve_direct_dense(dp: &DiscreteProblem) -> Result<(Field, SolveReport), SolveError> {
    linear_only(dp)?;
    let n = dp.len();
    if n > DENSE_LIMIT {
        return Err(SolveError::TooLarge {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let b: Vec<f64> = dp.rows.iter().map(|r| r.rhs).collect();
    let u = dense_lu_solve(n, &dp.dense_matrix(), &b)?;
    let res = dp.residual_inf(&u);
    report(dp, &u, 0, 0.0, res)
}

/// Solves the row-major `n×n` system `a·x = b` by LU with partial pivoting.
pub fn dense_lu_solve(n: usize, a: &[f64], b: &[f64]) -> Result<Vec<f64>, SolveError> {
    let a = DMatrix::from_row_slice(n, n, a);
    let b = DVector::from_column_slice(b);
    let x = a.lu().solve(&b).ok_or(SolveError::SingularMatrix)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::SingularMatrix);
    }
    Ok(x.iter().copied().collect())
}

/// Fixed-point iteration for the pollinator system. Each sweep solves every
/// node's equation for its center value, with the neighbors and the mobility
/// frozen at the previous iterate, then relaxes:
/// `a ← (1 − relax)·a + relax·G(a)`.
pub fn solve_fixed_point(
    dp: &DiscreteProblem,
    cfg: &IterConfig,
    relax: f64,
) -> Result<(Field, SolveReport), SolveError> {
    let data = dp.nonlinear.ok_or(SolveError::Linear)?;
    cfg.validate()?;
    if !(relax > 0.0 && relax <= 1.0) {
        return Err(SolveError::InvalidConfig(format!(
            "relax must lie in (0, 1], got {relax}"
        )));
    }
    let mut u = initial_vector(dp, &cfg.initial);
    let mut next = vec![0.0; dp.len()];
    let center_solve = |r: usize, u: &[f64]| -> Result<f64, SolveError> {
        let row = &dp.rows[r];
        let scale = data.d1 * mobility_value(data.mobility, u[r], row.node)?;
        // neighbor part of the Laplacian; boundary terms sit in rhs
        let s = off_diagonal(dp, r, u) - row.rhs;
        // a² − b·a − c = 0
        let b = data.k + 1.0 + scale * row.center;
        let c = scale * s - 0.5;
        let disc = b * b + 4.0 * c;
        if disc < 0.0 {
            return Err(SolveError::NoRealRoot { node: row.node });
        }
        let root = disc.sqrt();
        let g = if b >= 0.0 {
            0.5 * (b + root)
        } else {
            2.0 * c / (root - b)
        };
        Ok((1.0 - relax) * u[r] + relax * g)
    };
    let mut update = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        if dp.len() >= PAR_THRESHOLD {
            next.par_iter_mut()
                .enumerate()
                .try_for_each(|(r, v)| center_solve(r, &u).map(|g| *v = g))?;
        } else {
            for (r, v) in next.iter_mut().enumerate() {
                *v = center_solve(r, &u)?;
            }
        }
        update = u
            .iter()
            .zip(&next)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        if update <= cfg.tol {
            let res = dp
                .pollinator_residual(&u)?
                .iter()
                .fold(0.0, |m: f64, v| m.max(v.abs()));
            return report(dp, &u, it, update, res);
        }
    }
    Err(SolveError::NonConvergence {
        iterations: cfg.max_iter,
        update_norm: update,
        last: Box::new(dp.to_field(&u)),
    })
}
