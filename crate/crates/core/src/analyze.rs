//! Error norms, extrema, truncation order and refinement sweeps.

use thiserror::Error;

use crate::assemble::{
    assemble_linear, assemble_pollinator, operator_row, AssembleError, DiscreteProblem, ProblemSpec,
};
use crate::embed::{
    build_rectangle, check_connectivity, classify_grid, induced_region_area_error,
    mesh_from_classes, EmbedError, EmbeddedMesh, GridSpec, RectPolicy, Variant,
};
use crate::exprlang::{EvalError, Expr};
use crate::field::Field;
use crate::geometry::{DomainSpec, GeometryError, Rect};
use crate::solve::{
    solve_direct_dense, solve_fixed_point, solve_gauss_seidel, solve_jacobi, IterConfig,
    SolveError, SolveReport,
};

/// A field value at a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub x: f64,
    pub y: f64,
    pub node: usize,
}

/// `max |u − exact|` over the interior nodes.
pub fn error_inf(u: &Field, exact: &Expr, m: &EmbeddedMesh) -> Result<f64, EvalError> {
    let mut err: f64 = 0.0;
    for i in m.interior_nodes() {
        let (x, y) = m.grid.xy(i);
        err = err.max((u.values[i] - exact.eval(x, y, 0.0)?).abs());
    }
    Ok(err)
}

/// Minimum and maximum over the interior nodes only. Ties go to the first
/// node in k-major order.
///
/// # Panics
///
/// If the mesh has no interior node, which mesh construction rules out.
pub fn extrema_interior(u: &Field, m: &EmbeddedMesh) -> (Extremum, Extremum) {
    let mut nodes = m.interior_nodes();
    let first = nodes.next().expect("mesh has an interior node");
    let at = |i: usize| {
        let (x, y) = m.grid.xy(i);
        Extremum {
            value: u.values[i],
            x,
            y,
            node: i,
        }
    };
    let (mut lo, mut hi) = (at(first), at(first));
    for i in nodes {
        let v = u.values[i];
        if v < lo.value {
            lo = at(i);
        }
        if v > hi.value {
            hi = at(i);
        }
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyzeError {
    #[error("need at least 3 spacings, got {0}")]
    TooFewSpacings(usize),
    #[error("truncation error vanishes at some spacings but not all; cannot fit an order")]
    DegenerateFit,
    #[error("truncation order is only defined for linear problems")]
    NotLinear,
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("test function: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    /// Least-squares slope of `log τ` against `log dx`; infinite when the
    /// operator is exact on the test function.
    pub order: f64,
    /// Set when the truncation error is at round-off level at every spacing.
    pub exact: bool,
    /// `(dx, max |τ|)` per spacing.
    pub truncation: Vec<(f64, f64)>,
}

// Truncation below this, after scaling out the 1/dx² round-off amplification
// of the five-point operator, counts as zero.
const EXACT_THRESHOLD: f64 = 1e-13;

/// Fits the order of the local truncation error `L_h φ − f` of the problem's
/// five-point operator, for `φ` solving the continuous problem, over grid
/// nodes of `region` at each spacing.
pub fn consistency_order(
    p: &ProblemSpec,
    phi: &Expr,
    dx_list: &[f64],
    region: Rect,
) -> Result<OrderFit, AnalyzeError> {
    if !p.is_linear() {
        return Err(AnalyzeError::NotLinear);
    }
    if dx_list.len() < 3 {
        return Err(AnalyzeError::TooFewSpacings(dx_list.len()));
    }
    let mut truncation = Vec::with_capacity(dx_list.len());
    let mut all_exact = true;
    for &dx in dx_list {
        let g = GridSpec::new(region, dx, dx)?;
        let mut tau: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for k in 1..g.my {
            for j in 1..g.mx {
                let (x, y) = (g.x(j), g.y(k));
                let row = operator_row(&p.kind, x, y, dx, dx, 0.0)?;
                let c = phi.eval(x, y, 0.0)?;
                scale = scale.max(c.abs());
                let nb = [
                    phi.eval(g.x(j + 1), y, 0.0)?,
                    phi.eval(g.x(j - 1), y, 0.0)?,
                    phi.eval(x, g.y(k + 1), 0.0)?,
                    phi.eval(x, g.y(k - 1), 0.0)?,
                ];
                let mut l = row.center * c;
                for (cf, v) in row.coeffs.iter().zip(nb) {
                    l += cf * v;
                }
                tau = tau.max((l - row.source).abs());
            }
        }
        if tau * dx * dx / scale >= EXACT_THRESHOLD {
            all_exact = false;
        }
        truncation.push((dx, tau));
    }
    if all_exact {
        return Ok(OrderFit {
            order: f64::INFINITY,
            exact: true,
            truncation,
        });
    }
    if truncation.iter().any(|&(_, t)| t == 0.0) {
        return Err(AnalyzeError::DegenerateFit);
    }
    let pts: Vec<(f64, f64)> = truncation.iter().map(|&(h, t)| (h.ln(), t.ln())).collect();
    Ok(OrderFit {
        order: least_squares_slope(&pts),
        exact: false,
        truncation,
    })
}

/// Slope of the unweighted least-squares line through `pts`.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Jacobi,
    GaussSeidel,
    Direct,
    FixedPoint { relax: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("interior not connected")]
    NotConnected,
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

pub struct SteadyOutcome {
    pub system: DiscreteProblem,
    pub field: Field,
    pub report: SolveReport,
}

/// Assembles and solves a steady problem on a mesh, rejecting meshes whose
/// interior falls apart.
pub fn solve_on_mesh(
    p: &ProblemSpec,
    mesh: &EmbeddedMesh,
    method: Method,
    cfg: &IterConfig,
) -> Result<SteadyOutcome, PipelineError> {
    if !check_connectivity(mesh) {
        return Err(PipelineError::NotConnected);
    }
    let system = if p.is_linear() {
        assemble_linear(p, mesh, 0.0)?
    } else {
        assemble_pollinator(p, mesh)?
    };
    let (field, report) = match method {
        Method::Jacobi => solve_jacobi(&system, cfg)?,
        Method::GaussSeidel => solve_gauss_seidel(&system, cfg)?,
        Method::Direct => solve_direct_dense(&system)?,
        Method::FixedPoint { relax } => solve_fixed_point(&system, cfg, relax)?,
    };
    Ok(SteadyOutcome {
        system,
        field,
        report,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub policy: RectPolicy,
    pub iter: IterConfig,
    /// Samples per cell side for the area metric; 0 skips it.
    pub area_samples: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            policy: RectPolicy::PaddedByH,
            iter: IterConfig::default(),
            area_samples: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dx: f64,
    pub variant: Variant,
    pub min: Extremum,
    pub max: Extremum,
    pub error_inf: Option<f64>,
    pub iterations: u64,
    pub area_error: Option<f64>,
    pub unknowns: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Ordered by decreasing spacing.
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("sweep level dx={dx}: {source}")]
pub struct SweepError {
    pub dx: f64,
    /// Rows completed before the failing level.
    pub partial: SweepReport,
    #[source]
    pub source: PipelineError,
}

/// Runs the whole pipeline with Gauss-Seidel at every spacing (`dy = dx`).
pub fn run_sweep(
    d: &DomainSpec,
    p: &ProblemSpec,
    dx_list: &[f64],
    variant: Variant,
    opts: &SweepOptions,
) -> Result<SweepReport, SweepError> {
    let mut levels = dx_list.to_vec();
    levels.sort_by(|a, b| b.total_cmp(a));
    let mut report = SweepReport::default();
    for dx in levels {
        match sweep_level(d, p, dx, variant, opts) {
            Ok(row) => report.rows.push(row),
            Err(source) => {
                return Err(SweepError {
                    dx,
                    partial: report,
                    source,
                })
            }
        }
    }
    Ok(report)
}

fn sweep_level(
    d: &DomainSpec,
    p: &ProblemSpec,
    dx: f64,
    variant: Variant,
    opts: &SweepOptions,
) -> Result<SweepRow, PipelineError> {
    let grid = build_rectangle(d, opts.policy, dx, dx)?;
    let classes = classify_grid(d, &grid, d.default_eps()?)?;
    let mesh = mesh_from_classes(&grid, variant, &classes)?;
    let out = solve_on_mesh(p, &mesh, Method::GaussSeidel, &opts.iter)?;
    let area_error = if opts.area_samples > 0 {
        Some(induced_region_area_error(&mesh, d, opts.area_samples)?)
    } else {
        None
    };
    Ok(SweepRow {
        dx,
        variant,
        min: out.report.min,
        max: out.report.max,
        error_inf: out.report.error_vs_exact,
        iterations: out.report.iterations,
        area_error,
        unknowns: out.system.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::build_mesh;
    use crate::exprlang::parse_expr;
    use crate::geometry::fixtures;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn square_mesh() -> EmbeddedMesh {
        let d = fixtures::unit_square();
        let g = build_rectangle(
            &d,
            RectPolicy::Fixed(Rect::new(0.0, 0.0, 1.0, 1.0)),
            0.25,
            0.25,
        )
        .unwrap();
        build_mesh(&d, &g, Variant::OverBar).unwrap()
    }

    fn sampled(m: &EmbeddedMesh, ex: &Expr) -> Field {
        let mut f = Field::nan(m.grid);
        for i in 0..f.values.len() {
            let (x, y) = m.grid.xy(i);
            f.values[i] = ex.eval(x, y, 0.0).unwrap();
        }
        f
    }

    #[test]
    fn error_of_sampled_exact_is_zero() {
        let m = square_mesh();
        let ex = e("(x+y)^2");
        let mut u = sampled(&m, &ex);
        assert_eq!(error_inf(&u, &ex, &m).unwrap(), 0.0);
        let node = m.interior_nodes().nth(4).unwrap();
        u.values[node] += 0.5;
        assert_eq!(error_inf(&u, &ex, &m).unwrap(), 0.5);
    }

    #[test]
    fn extrema_tie_break_is_first_in_order() {
        let m = square_mesh();
        let u = Field::constant(m.grid, 3.0);
        let (lo, hi) = extrema_interior(&u, &m);
        let first = m.interior_nodes().next().unwrap();
        assert_eq!((lo.node, hi.node), (first, first));
        assert_eq!((lo.x, lo.y), (0.25, 0.25));
        assert_eq!(lo.value, 3.0);
    }

    #[test]
    fn extrema_skip_boundary_nodes() {
        let m = square_mesh();
        let u = sampled(&m, &e("x+y"));
        let (lo, hi) = extrema_interior(&u, &m);
        assert_eq!((lo.x, lo.y, hi.x, hi.y), (0.25, 0.25, 0.75, 0.75));
    }

    #[test]
    fn quadratic_and_linear_are_exact() {
        let r = Rect::new(0.0, 0.0, 1.0, 1.0);
        let fit = consistency_order(
            &ProblemSpec::poisson(e("4"), e("0")),
            &e("(x+y)^2"),
            &[0.1, 0.05, 0.025],
            r,
        )
        .unwrap();
        assert!(fit.exact && fit.order.is_infinite());
        let fit = consistency_order(
            &ProblemSpec::poisson(e("0"), e("0")),
            &e("x"),
            &[0.1, 0.05, 0.025],
            r,
        )
        .unwrap();
        assert!(fit.exact);
    }

    #[test]
    fn sine_product_is_second_order() {
        let p = ProblemSpec::poisson(e("-2*pi^2*sin(pi*x)*sin(pi*y)"), e("0"));
        let fit = consistency_order(
            &p,
            &e("sin(pi*x)*sin(pi*y)"),
            &[0.1, 0.05, 0.025],
            Rect::new(0.0, 0.0, 1.0, 1.0),
        )
        .unwrap();
        assert!(!fit.exact);
        assert!((fit.order - 2.0).abs() <= 0.1, "{fit:?}");
    }

    #[test]
    fn too_few_spacings() {
        let p = ProblemSpec::poisson(e("0"), e("0"));
        assert_eq!(
            consistency_order(&p, &e("x"), &[0.1, 0.05], Rect::new(0.0, 0.0, 1.0, 1.0)),
            Err(AnalyzeError::TooFewSpacings(2))
        );
    }

    #[test]
    fn slope_of_exact_line() {
        assert!((least_squares_slope(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_level_sweep() {
        let p = ProblemSpec::poisson(e("4"), e("(x+y)^2")).with_exact(e("(x+y)^2"));
        let r = run_sweep(
            &fixtures::parabola(),
            &p,
            &[0.1],
            Variant::OverBar,
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].unknowns, 24);
    }

    #[test]
    fn disconnected_sweep_reports_partial() {
        let p = ProblemSpec::poisson(e("0"), e("1"));
        let err = run_sweep(
            &fixtures::two_squares(),
            &p,
            &[0.5, 0.25],
            Variant::OverBar,
            &SweepOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.dx, 0.5);
        assert!(err.partial.rows.is_empty());
        assert_eq!(err.source, PipelineError::NotConnected);
    }
}
