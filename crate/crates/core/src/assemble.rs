//! Five-point discretizations on an embedded mesh.
//!
//! Every row is stored as `center·u_C + Σ c_n·u_n = rhs` over the east,
//! west, north and south neighbors, where the left side is the discrete
//! operator exactly as written (the second-difference operator is negative
//! definite). Neighbors that carry Dirichlet data are folded into `rhs`.

use rayon::prelude::*;
use thiserror::Error;

use crate::embed::{EmbeddedMesh, NodeClass};
use crate::exprlang::{EvalError, Expr};
use crate::field::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonForm {
    /// `∇²a = f`
    Laplacian,
    /// `-∇²a = f`; the right-hand side is negated at assembly.
    NegLaplacian,
}

/// Diffusion coefficient `f₁(p)` of the pollinator equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mobility {
    /// `f₁(p) = 1`
    Constant,
    /// `f₁(p) = p`
    ProportionalToP,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    Poisson {
        f: Expr,
        form: PoissonForm,
    },
    /// `Δa + f·a = g`
    Helmholtz {
        f: Expr,
        g: Expr,
    },
    /// `div(coef·∇a) = f`
    VarCoeff {
        coef: Expr,
        f: Expr,
    },
    /// `D₁·f₁(p)·Δa − a² + (k+1)·a − 1/2 = 0` with `p = 2a − 1`.
    Pollinator {
        d1: f64,
        k: f64,
        mobility: Mobility,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// Dirichlet data `g(x, y, t)`, evaluable anywhere on the rectangle.
    pub dirichlet: Expr,
    pub exact: Option<Expr>,
    pub initial: Option<Expr>,
}

impl ProblemSpec {
    pub fn poisson(f: Expr, dirichlet: Expr) -> ProblemSpec {
        Self::with_kind(
            ProblemKind::Poisson {
                f,
                form: PoissonForm::Laplacian,
            },
            dirichlet,
        )
    }

    pub fn helmholtz(f: Expr, g: Expr, dirichlet: Expr) -> ProblemSpec {
        Self::with_kind(ProblemKind::Helmholtz { f, g }, dirichlet)
    }

    pub fn var_coeff(coef: Expr, f: Expr, dirichlet: Expr) -> ProblemSpec {
        Self::with_kind(ProblemKind::VarCoeff { coef, f }, dirichlet)
    }

    /// Pollinator problem. Without explicit boundary data the boundary is held
    /// at the stable equilibrium of `−a² + (k+1)a − 1/2`.
    pub fn pollinator(
        d1: f64,
        k: f64,
        mobility: Mobility,
        dirichlet: Option<Expr>,
    ) -> Result<ProblemSpec, AssembleError> {
        let kind = ProblemKind::Pollinator { d1, k, mobility };
        validate_pollinator(d1, k)?;
        let dirichlet = match dirichlet {
            Some(e) => e,
            None => {
                Expr::constant(pollinator_equilibrium(k).ok_or(AssembleError::NoEquilibrium { k })?)
            }
        };
        Ok(Self::with_kind(kind, dirichlet))
    }

    pub fn with_kind(kind: ProblemKind, dirichlet: Expr) -> ProblemSpec {
        ProblemSpec {
            kind,
            dirichlet,
            exact: None,
            initial: None,
        }
    }

    pub fn with_exact(mut self, exact: Expr) -> ProblemSpec {
        self.exact = Some(exact);
        self
    }

    pub fn with_initial(mut self, initial: Expr) -> ProblemSpec {
        self.initial = Some(initial);
        self
    }

    pub fn with_form(mut self, new_form: PoissonForm) -> ProblemSpec {
        if let ProblemKind::Poisson { form, .. } = &mut self.kind {
            *form = new_form;
        }
        self
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.kind, ProblemKind::Pollinator { .. })
    }
}

fn validate_pollinator(d1: f64, k: f64) -> Result<(), AssembleError> {
    if !(d1 > 0.0 && d1.is_finite()) {
        return Err(AssembleError::InvalidParameter(format!(
            "D1 must be positive, got {d1}"
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(AssembleError::InvalidParameter(format!(
            "k must be positive, got {k}"
        )));
    }
    Ok(())
}

/// Larger root of `−a² + (k+1)a − 1/2 = 0`, `None` when there is no real root.
pub fn pollinator_equilibrium(k: f64) -> Option<f64> {
    let b = k + 1.0;
    let disc = b * b - 2.0;
    (disc >= 0.0).then(|| (b + disc.sqrt()) / 2.0)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AssembleError {
    #[error("expression evaluation failed at ({x}, {y}): {source}")]
    Eval {
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },
    #[error("problem kind is not linear")]
    NotLinear,
    #[error("problem kind is not the pollinator system")]
    NotPollinator,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("-a^2 + (k+1)a - 1/2 has no real root for k = {k}")]
    NoEquilibrium { k: f64 },
    #[error("degenerate diffusion coefficient: p = {p} at node {node}")]
    DegenerateCoefficient { node: usize, p: f64 },
    #[error("interior node {node} has a neighbor outside the mesh")]
    IncompleteStencil { node: usize },
}

/// A neighbor reference in a stencil row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    Unknown(usize),
    Boundary(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StencilRow {
    /// Grid node index of the unknown.
    pub node: usize,
    pub center: f64,
    /// East, west, north, south.
    pub coeffs: [f64; 4],
    pub links: [Link; 4],
    /// Source term at the node before boundary elimination.
    pub source: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PollinatorData {
    pub d1: f64,
    pub k: f64,
    pub mobility: Mobility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteProblem {
    pub mesh: EmbeddedMesh,
    /// Node index of each unknown, k-major.
    pub unknowns: Vec<usize>,
    /// Unknown index of each node, if any.
    pub unknown_of: Vec<Option<usize>>,
    pub rows: Vec<StencilRow>,
    /// `(node, value)` for every boundary node.
    pub boundary: Vec<(usize, f64)>,
    pub exact: Option<Expr>,
    pub nonlinear: Option<PollinatorData>,
}

impl DiscreteProblem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Left-hand side applied to `u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let mut s = row.center * u[r];
                for (c, l) in row.coeffs.iter().zip(&row.links) {
                    if let Link::Unknown(q) = l {
                        s += c * u[*q];
                    }
                }
                s
            })
            .collect()
    }

    /// `max |A u − rhs|` for linear systems.
    pub fn residual_inf(&self, u: &[f64]) -> f64 {
        self.apply(u)
            .iter()
            .zip(&self.rows)
            .fold(0.0, |m, (a, row)| m.max((a - row.rhs).abs()))
    }

    /// Scatters unknowns and boundary values onto the grid.
    pub fn to_field(&self, u: &[f64]) -> Field {
        let mut f = Field::nan(self.mesh.grid);
        for (r, &node) in self.unknowns.iter().enumerate() {
            f.values[node] = u[r];
        }
        for &(node, v) in &self.boundary {
            f.values[node] = v;
        }
        f
    }

    /// Gathers the unknowns from a grid field.
    pub fn gather(&self, f: &Field) -> Vec<f64> {
        self.unknowns.iter().map(|&n| f.values[n]).collect()
    }

    /// Row-major dense matrix of the left-hand side.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![0.0; n * n];
        for (r, row) in self.rows.iter().enumerate() {
            a[r * n + r] += row.center;
            for (c, l) in row.coeffs.iter().zip(&row.links) {
                if let Link::Unknown(q) = l {
                    a[r * n + q] += c;
                }
            }
        }
        a
    }

    /// Pointwise residual of the pollinator equation at each unknown.
    pub fn pollinator_residual(&self, u: &[f64]) -> Result<Vec<f64>, AssembleError> {
        let data = self.nonlinear.ok_or(AssembleError::NotPollinator)?;
        let lap = self.apply(u);
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                let a = u[r];
                let mobility = mobility_value(data.mobility, a, row.node)?;
                // boundary neighbors sit in rhs with opposite sign
                let l = lap[r] - row.rhs;
                Ok(data.d1 * mobility * l - a * a + a * (data.k + 1.0) - 0.5)
            })
            .collect()
    }
}

/// `f₁(p)` with `p = 2a − 1`; a non-positive `p` makes the diffusion vanish or
/// change sign and is rejected.
pub(crate) fn mobility_value(m: Mobility, a: f64, node: usize) -> Result<f64, AssembleError> {
    match m {
        Mobility::Constant => Ok(1.0),
        Mobility::ProportionalToP => {
            let p = 2.0 * a - 1.0;
            if p <= 0.0 {
                Err(AssembleError::DegenerateCoefficient { node, p })
            } else {
                Ok(p)
            }
        }
    }
}

/// Operator coefficients at one node: center, east/west/north/south and the
/// source term.
pub(crate) struct RowSpec {
    pub center: f64,
    pub coeffs: [f64; 4],
    pub source: f64,
}

fn eval_at(e: &Expr, x: f64, y: f64, t: f64) -> Result<f64, AssembleError> {
    e.eval(x, y, t)
        .map_err(|source| AssembleError::Eval { x, y, source })
}

/// Five-point operator of a linear problem at `(x, y)`.
pub(crate) fn operator_row(
    kind: &ProblemKind,
    x: f64,
    y: f64,
    dx: f64,
    dy: f64,
    t: f64,
) -> Result<RowSpec, AssembleError> {
    let face = |cf: [f64; 4]| {
        let c = [
            cf[0] / (dx * dx),
            cf[1] / (dx * dx),
            cf[2] / (dy * dy),
            cf[3] / (dy * dy),
        ];
        (-(c[0] + c[1] + c[2] + c[3]), c)
    };
    Ok(match kind {
        ProblemKind::Poisson { f, form } => {
            let (center, coeffs) = face([1.0; 4]);
            let v = eval_at(f, x, y, t)?;
            let source = match form {
                PoissonForm::Laplacian => v,
                PoissonForm::NegLaplacian => -v,
            };
            RowSpec {
                center,
                coeffs,
                source,
            }
        }
        ProblemKind::Helmholtz { f, g } => {
            let (center, coeffs) = face([1.0; 4]);
            RowSpec {
                center: center + eval_at(f, x, y, t)?,
                coeffs,
                source: eval_at(g, x, y, t)?,
            }
        }
        ProblemKind::VarCoeff { coef, f } => {
            let (hx, hy) = (0.5 * dx, 0.5 * dy);
            let cf = [
                eval_at(coef, x + hx, y, t)?,
                eval_at(coef, x - hx, y, t)?,
                eval_at(coef, x, y + hy, t)?,
                eval_at(coef, x, y - hy, t)?,
            ];
            let (center, coeffs) = face(cf);
            RowSpec {
                center,
                coeffs,
                source: eval_at(f, x, y, t)?,
            }
        }
        ProblemKind::Pollinator { .. } => {
            let (center, coeffs) = face([1.0; 4]);
            RowSpec {
                center,
                coeffs,
                source: 0.0,
            }
        }
    })
}

/// Builds rows over the mesh interior with boundary data `dirichlet` at time
/// `t`. `row_at(node, x, y)` supplies the operator at each unknown.
pub(crate) fn build_system<F>(
    m: &EmbeddedMesh,
    dirichlet: &Expr,
    t: f64,
    row_at: F,
) -> Result<DiscreteProblem, AssembleError>
where
    F: Fn(usize, f64, f64) -> Result<RowSpec, AssembleError> + Sync,
{
    let g = &m.grid;
    let unknowns: Vec<usize> = m.interior_nodes().collect();
    let mut unknown_of = vec![None; m.class.len()];
    for (r, &n) in unknowns.iter().enumerate() {
        unknown_of[n] = Some(r);
    }
    let boundary: Vec<(usize, f64)> = m
        .boundary_nodes()
        .map(|n| {
            let (x, y) = g.xy(n);
            Ok((n, eval_at(dirichlet, x, y, t)?))
        })
        .collect::<Result<_, AssembleError>>()?;
    let mut bvalue = vec![f64::NAN; m.class.len()];
    for &(n, v) in &boundary {
        bvalue[n] = v;
    }
    let rows = unknowns
        .par_iter()
        .map(|&node| {
            let (x, y) = g.xy(node);
            let spec = row_at(node, x, y)?;
            let nb = g.neighbors(node);
            let mut links = [Link::Boundary(0.0); 4];
            let mut rhs = spec.source;
            for d in 0..4 {
                let n = nb[d].ok_or(AssembleError::IncompleteStencil { node })?;
                links[d] = match m.class[n] {
                    NodeClass::Interior => {
                        Link::Unknown(unknown_of[n].expect("interior has index"))
                    }
                    NodeClass::Boundary => {
                        rhs -= spec.coeffs[d] * bvalue[n];
                        Link::Boundary(bvalue[n])
                    }
                    NodeClass::Exterior => return Err(AssembleError::IncompleteStencil { node }),
                };
            }
            Ok(StencilRow {
                node,
                center: spec.center,
                coeffs: spec.coeffs,
                links,
                source: spec.source,
                rhs,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DiscreteProblem {
        mesh: m.clone(),
        unknowns,
        unknown_of,
        rows,
        boundary,
        exact: None,
        nonlinear: None,
    })
}

/// Assembles a linear problem with Dirichlet data evaluated at time `t`.
pub fn assemble_linear(
    p: &ProblemSpec,
    m: &EmbeddedMesh,
    t: f64,
) -> Result<DiscreteProblem, AssembleError> {
    if !p.is_linear() {
        return Err(AssembleError::NotLinear);
    }
    let (dx, dy) = (m.grid.dx, m.grid.dy);
    let mut dp = build_system(m, &p.dirichlet, t, |_, x, y| {
        operator_row(&p.kind, x, y, dx, dy, t)
    })?;
    dp.exact = p.exact.clone();
    Ok(dp)
}

/// Assembles the pollinator system. Rows hold the plain five-point
/// Laplacian; the mobility and reaction terms are applied by the residual and
/// by the fixed-point solver.
pub fn assemble_pollinator(
    p: &ProblemSpec,
    m: &EmbeddedMesh,
) -> Result<DiscreteProblem, AssembleError> {
    let ProblemKind::Pollinator { d1, k, mobility } = p.kind else {
        return Err(AssembleError::NotPollinator);
    };
    validate_pollinator(d1, k)?;
    let (dx, dy) = (m.grid.dx, m.grid.dy);
    let mut dp = build_system(m, &p.dirichlet, 0.0, |_, x, y| {
        operator_row(&p.kind, x, y, dx, dy, 0.0)
    })?;
    dp.exact = p.exact.clone();
    dp.nonlinear = Some(PollinatorData { d1, k, mobility });
    if let Mobility::ProportionalToP = mobility {
        for &(n, v) in &dp.boundary {
            mobility_value(mobility, v, n)?;
        }
    }
    Ok(dp)
}

/// `p = 2a − 1`, the companion field of the pollinator density.
pub fn companion_p(a: &Field) -> Field {
    a.map(|v| 2.0 * v - 1.0)
}

/// `h = (1 + p)(1 − p/k)`.
pub fn reduce_plants_herbivores(p: &Field, k: f64) -> Field {
    p.map(|v| (1.0 + v) * (1.0 - v / k))
}
