//! Property tests over the whole pipeline: mesh structure, discrete
//! operator, iterative solvers and time stepping.

use gridcarve_core::analyze::{solve_on_mesh, Method};
use gridcarve_core::assemble::{assemble_pollinator, Link};
use gridcarve_core::embed::{classify_grid, mesh_from_classes};
use gridcarve_core::geometry::Polygon;
use gridcarve_core::prelude::*;
use gridcarve_core::solve::dense_lu_solve;
use gridcarve_core::timestep::interior_norm;
use proptest::prelude::*;

fn e(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

/// Spacing scaled to the fixture so meshes stay small.
fn spacing(name: &str, t: f64) -> f64 {
    let unit = match name {
        "parabola" | "unit_square" | "four_petal" => 0.04,
        "two_squares" => 0.1,
        _ => 0.4,
    };
    unit * (1.0 + 1.5 * t)
}

fn polygon_fixture(i: usize) -> (&'static str, DomainSpec) {
    let names = ["triangle", "pentagon", "star"];
    let n = names[i % names.len()];
    (n, fixtures::by_name(n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn meshes_are_well_formed(fi in 0usize..9, t in 0.0f64..1.0, fixed in any::<bool>()) {
        let (name, d) = fixtures::all().swap_remove(fi);
        let h = spacing(name, t);
        let policy = if fixed {
            let b = d.bounding_box().unwrap();
            RectPolicy::Fixed(Rect::new(b.x0 - 3.3 * h, b.y0 - 2.1 * h, b.x1 + 1.7 * h, b.y1 + 2.9 * h))
        } else {
            RectPolicy::PaddedByH
        };
        let grid = build_rectangle(&d, policy, h, h).unwrap();
        let pc = classify_grid(&d, &grid, d.default_eps().unwrap()).unwrap();
        let over = mesh_from_classes(&grid, Variant::OverBar, &pc).unwrap();
        let under = mesh_from_classes(&grid, Variant::UnderBar, &pc).unwrap();
        for m in [&over, &under] {
            prop_assert_eq!(m.interior_count, m.interior_nodes().count());
            prop_assert_eq!(m.boundary_count, m.boundary_nodes().count());
            for i in m.interior_nodes() {
                prop_assert_eq!(pc[i], PointClass::Inside, "{} interior node off the domain", name);
                for n in grid.neighbors(i) {
                    let n = n.expect("interior nodes are off the grid edge");
                    prop_assert!(m.class[n] != NodeClass::Exterior, "{}: incomplete stencil", name);
                }
            }
            for b in m.boundary_nodes() {
                let touches = grid.neighbors(b).iter().flatten().any(|&n| m.is_interior(n));
                prop_assert!(touches || m.variant == Variant::UnderBar, "{}: stray boundary node", name);
            }
        }
        for i in under.interior_nodes() {
            prop_assert!(over.is_interior(i));
        }
        for i in under.boundary_nodes() {
            prop_assert_eq!(pc[i], PointClass::Inside);
        }
    }

    #[test]
    fn classification_moves_with_the_grid(fi in 0usize..3, sx in -8i32..8, sy in -8i32..8) {
        let (_, d) = polygon_fixture(fi);
        let DomainSpec::Polygon(p) = &d else { unreachable!() };
        let h = 0.25;
        let (ox, oy) = (sx as f64 * h, sy as f64 * h);
        let moved = DomainSpec::Polygon(
            Polygon::new(p.vertices().iter().map(|&(x, y)| (x + ox, y + oy)).collect()).unwrap(),
        );
        let r = Rect::new(0.0, 0.0, 14.0, 13.5);
        let rm = Rect::new(ox, oy, 14.0 + ox, 13.5 + oy);
        for v in [Variant::OverBar, Variant::UnderBar] {
            let a = build_mesh(&d, &build_rectangle(&d, RectPolicy::Fixed(r), h, h).unwrap(), v).unwrap();
            let b = build_mesh(&moved, &build_rectangle(&moved, RectPolicy::Fixed(rm), h, h).unwrap(), v).unwrap();
            prop_assert_eq!(a.class, b.class);
        }
    }

    #[test]
    fn laplace_obeys_the_maximum_principle(fi in 0usize..3, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0) {
        let (name, d) = polygon_fixture(fi);
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, 0.5, 0.5).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let g = format!("{a}*x + {b}*y + {c}*cos(x)*sin(y)");
        let p = ProblemSpec::poisson(e("0"), e(&g));
        let cfg = IterConfig::default();
        let out = solve_on_mesh(&p, &mesh, Method::GaussSeidel, &cfg).unwrap();
        let bv: Vec<f64> = out.system.boundary.iter().map(|b| b.1).collect();
        let lo = bv.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = bv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(out.report.min.value >= lo - cfg.tol, "{}: {} < {}", name, out.report.min.value, lo);
        prop_assert!(out.report.max.value <= hi + cfg.tol, "{}: {} > {}", name, out.report.max.value, hi);
    }

    #[test]
    fn quadratics_are_reproduced(
        fi in 0usize..3,
        k in prop::array::uniform6(-1.0f64..1.0),
        t in 0.0f64..1.0,
    ) {
        let (_, d) = polygon_fixture(fi);
        let h = 0.5 + 0.4 * t;
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, h, h * 0.8).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let u = format!("{}*x^2 + {}*x*y + {}*y^2 + {}*x + {}*y + {}", k[0], k[1], k[2], k[3], k[4], k[5]);
        let f = format!("{}", 2.0 * k[0] + 2.0 * k[2]);
        let p = ProblemSpec::poisson(e(&f), e(&u)).with_exact(e(&u));
        let dp = assemble_linear(&p, &mesh, 0.0).unwrap();
        let (_, rep) = solve_direct_dense(&dp).unwrap();
        prop_assert!(rep.error_vs_exact.unwrap() <= 1e-9, "error {}", rep.error_vs_exact.unwrap());
    }

    #[test]
    fn operator_rows_are_symmetric_and_dominant(fi in 0usize..3, amp in 0.0f64..0.9) {
        let (_, d) = polygon_fixture(fi);
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, 0.5, 0.5).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let coef = format!("1 + {amp}*sin(x + y)");
        let p = ProblemSpec::var_coeff(e(&coef), e("1"), e("x"));
        let dp = assemble_linear(&p, &mesh, 0.0).unwrap();
        let n = dp.len();
        let a = dp.dense_matrix();
        for r in 0..n {
            for c in 0..r {
                prop_assert!((a[r * n + c] - a[c * n + r]).abs() <= 1e-12 * a[r * n + r].abs());
            }
        }
        for row in &dp.rows {
            let off: f64 = row.coeffs.iter().map(|c| c.abs()).sum();
            prop_assert!(row.center.abs() >= off * (1.0 - 1e-14));
            prop_assert!(row.center < 0.0);
            if row.links.iter().any(|l| matches!(l, Link::Boundary(_))) {
                let inner: f64 = row.coeffs.iter().zip(&row.links)
                    .filter(|(_, l)| matches!(l, Link::Unknown(_)))
                    .map(|(c, _)| c.abs())
                    .sum();
                prop_assert!(row.center.abs() > inner);
            }
        }
    }

    #[test]
    fn explicit_steps_within_the_limit_do_not_grow(seed in any::<u64>(), frac in 0.1f64..1.0) {
        let d = fixtures::pentagon();
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, 0.5, 0.5).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let p = ProblemSpec::poisson(e("0"), e("0"));
        let tc = TimeConfig {
            dt: frac * cfl_limit(&mesh, 1.0),
            t0: 0.0,
            steps: 40,
            nu: 1.0,
            scheme: Scheme::Explicit,
            snapshot_times: vec![],
        };
        let mut u = Field::constant(grid, 0.0);
        let mut s = seed;
        for i in mesh.interior_nodes() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            u.values[i] = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
        let mut prev = interior_norm(&u, &mesh);
        for n in 0..tc.steps {
            u = step_explicit(&u, &mesh, &p, &tc, n).unwrap();
            let now = interior_norm(&u, &mesh);
            prop_assert!(now <= prev * (1.0 + 1e-12));
            prev = now;
        }
    }

    #[test]
    fn implicit_steps_never_grow(mult in 0.5f64..500.0) {
        let d = fixtures::triangle();
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, 0.5, 0.5).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let p = ProblemSpec::poisson(e("0"), e("0")).with_initial(e("sin(x)*cos(2*y)"));
        let tc = TimeConfig {
            dt: mult * cfl_limit(&mesh, 1.0),
            t0: 0.0,
            steps: 10,
            nu: 1.0,
            scheme: Scheme::Implicit,
            snapshot_times: vec![],
        };
        let run = run_heat(&mesh, &p, &tc, &IterConfig::default().with_tol(1e-12)).unwrap();
        for w in run.norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pollinator_equilibrium_is_a_fixed_point(k in 0.42f64..3.0, d1 in 0.5f64..20.0, prop in any::<bool>()) {
        let d = fixtures::pentagon();
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, 0.5, 0.5).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let mobility = if prop { Mobility::ProportionalToP } else { Mobility::Constant };
        let p = ProblemSpec::pollinator(d1, k, mobility, None).unwrap();
        let dp = assemble_pollinator(&p, &mesh).unwrap();
        let a = pollinator_equilibrium(k).unwrap();
        let cfg = IterConfig { initial: InitialGuess::Field(Field::constant(grid, a)), ..IterConfig::default() };
        let (u, rep) = solve_fixed_point(&dp, &cfg, 1.0).unwrap();
        prop_assert!(rep.iterations <= 2);
        prop_assert!(rep.residual_inf <= 1e-10);
        for i in mesh.interior_nodes() {
            prop_assert!((u.values[i] - a).abs() <= 1e-12);
        }
    }

    #[test]
    fn sweep_rows_follow_decreasing_spacing(mut dx in prop::collection::vec(0.05f64..0.2, 1..4)) {
        let p = ProblemSpec::poisson(e("4"), e("(x+y)^2")).with_exact(e("(x+y)^2"));
        let opts = SweepOptions { area_samples: 0, ..SweepOptions::default() };
        let rep = run_sweep(&fixtures::parabola(), &p, &dx, Variant::OverBar, &opts).unwrap();
        dx.sort_by(|a, b| b.total_cmp(a));
        let got: Vec<f64> = rep.rows.iter().map(|r| r.dx).collect();
        prop_assert_eq!(got, dx);
        for r in &rep.rows {
            prop_assert!(r.error_inf.unwrap() <= 1e-9);
        }
    }
}

#[test]
fn gauss_seidel_needs_no_more_sweeps_than_jacobi() {
    let cfg = IterConfig::default();
    for (name, d) in fixtures::all() {
        if name == "two_squares" {
            continue;
        }
        let h = spacing(name, 0.5);
        let grid = build_rectangle(&d, RectPolicy::PaddedByH, h, h).unwrap();
        let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
        let p = ProblemSpec::poisson(e("1"), e("cos(x) + y"));
        let dp = assemble_linear(&p, &mesh, 0.0).unwrap();
        let (_, j) = solve_jacobi(&dp, &cfg).unwrap();
        let (_, g) = solve_gauss_seidel(&dp, &cfg).unwrap();
        assert!(
            g.iterations <= j.iterations,
            "{name}: GS {} vs Jacobi {}",
            g.iterations,
            j.iterations
        );
    }
}

#[test]
fn iterative_solutions_approach_the_dense_oracle_as_tol_shrinks() {
    // The stopping rule bounds the update, so the distance to the dense
    // solution shrinks with tol rather than sitting below it.
    let d = fixtures::unit_square();
    let grid = build_rectangle(
        &d,
        RectPolicy::Fixed(Rect::new(0.0, 0.0, 1.0, 1.0)),
        0.05,
        0.05,
    )
    .unwrap();
    let mesh = build_mesh(&d, &grid, Variant::OverBar).unwrap();
    let p = ProblemSpec::poisson(
        e("-16*pi^2*(cos(4*pi*x)+cos(4*pi*y))"),
        e("cos(4*pi*x)+cos(4*pi*y)"),
    );
    let dp = assemble_linear(&p, &mesh, 0.0).unwrap();
    let rhs: Vec<f64> = dp.rows.iter().map(|r| r.rhs).collect();
    let exact = dp.to_field(&dense_lu_solve(dp.len(), &dp.dense_matrix(), &rhs).unwrap());
    let mut prev = f64::INFINITY;
    for tol in [1e-6, 1e-8, 1e-10, 1e-12] {
        let cfg = IterConfig::default().with_tol(tol);
        let (j, _) = solve_jacobi(&dp, &cfg).unwrap();
        let (g, _) = solve_gauss_seidel(&dp, &cfg).unwrap();
        let gap = j.max_abs_diff(&exact).max(g.max_abs_diff(&exact));
        assert!(gap < prev);
        assert!(gap <= 1000.0 * tol, "tol {tol}: gap {gap}");
        prev = gap;
    }
}
