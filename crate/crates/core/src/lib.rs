//! Finite differences on irregular planar domains embedded in a uniform grid.
//!
//! A domain ([`geometry::DomainSpec`]) is placed inside a rectangle carrying a
//! uniform node grid. Two node meshes approximate it: the extrapolated mesh
//! ([`embed::Variant::OverBar`]) keeps every grid node inside the domain as an
//! unknown and borrows the surrounding nodes as Dirichlet carriers, while the
//! interpolated mesh ([`embed::Variant::UnderBar`]) uses only nodes inside the
//! domain and turns its outer layer into the boundary. Problems are then
//! discretized with the five-point stencil and solved iteratively.
//!
//! ```
//! use gridcarve_core::prelude::*;
//!
//! let domain = fixtures::parabola();
//! let grid = build_rectangle(&domain, RectPolicy::Fixed(Rect::new(-0.2, -0.2, 1.2, 1.2)), 0.1, 0.1)?;
//! let mesh = build_mesh(&domain, &grid, Variant::OverBar)?;
//! assert_eq!(mesh.interior_count, 24);
//!
//! let problem = ProblemSpec::poisson(parse_expr("4")?, parse_expr("(x+y)^2")?)
//!     .with_exact(parse_expr("(x+y)^2")?);
//! let system = assemble_linear(&problem, &mesh, 0.0)?;
//! let (_u, report) = solve_gauss_seidel(&system, &IterConfig::default())?;
//! assert!(report.error_vs_exact.unwrap() < 1e-10);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analyze;
pub mod assemble;
pub mod embed;
pub mod exprlang;
pub mod field;
pub mod geometry;
pub mod io;
pub mod solve;
pub mod timestep;

pub mod prelude {
    pub use crate::analyze::{
        consistency_order, error_inf, extrema_interior, run_sweep, Extremum, SweepOptions,
        SweepReport, SweepRow,
    };
    pub use crate::assemble::{
        assemble_linear, assemble_pollinator, pollinator_equilibrium, reduce_plants_herbivores,
        DiscreteProblem, Mobility, PoissonForm, ProblemKind, ProblemSpec,
    };
    pub use crate::embed::{
        build_mesh, build_rectangle, check_connectivity, induced_region_area_error, EmbeddedMesh,
        GridSpec, NodeClass, RectPolicy, Variant,
    };
    pub use crate::exprlang::{parse_expr, Expr};
    pub use crate::field::Field;
    pub use crate::geometry::{fixtures, DomainSpec, PointClass, Rect};
    pub use crate::solve::{
        solve_direct_dense, solve_fixed_point, solve_gauss_seidel, solve_jacobi, InitialGuess,
        IterConfig, SolveReport,
    };
    pub use crate::timestep::{
        cfl_limit, run_heat, step_explicit, step_implicit, Scheme, TimeConfig,
    };
}
