//! Text output: node CSVs, system dumps, sweep tables and legacy VTK.
//!
//! Floating-point columns carry 17 significant digits so files round-trip
//! exactly; summaries use 4 decimals.

use std::fmt::Write;

use crate::analyze::{Extremum, SweepReport};
use crate::assemble::DiscreteProblem;
use crate::embed::{EmbeddedMesh, NodeClass};
use crate::field::Field;

/// 17 significant digits.
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Shortest plain decimal for a grid coordinate, e.g. `0.4` for
/// `0.4000000000000001`.
pub fn coord(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// `0.2500 @ (0.4,0.1)`
pub fn extremum(e: &Extremum) -> String {
    format!("{:.4} @ ({},{})", e.value, coord(e.x), coord(e.y))
}

fn node_prefix(out: &mut String, m: &EmbeddedMesh, i: usize) {
    let (j, k) = m.grid.jk(i);
    let (x, y) = m.grid.xy(i);
    let _ = write!(
        out,
        "{j},{k},{},{},{}",
        full(x),
        full(y),
        m.class[i].letter()
    );
}

/// `j,k,x,y,class`, one row per grid node in k-major order.
pub fn mesh_csv(m: &EmbeddedMesh) -> String {
    let mut out = String::from("j,k,x,y,class\n");
    for i in 0..m.class.len() {
        node_prefix(&mut out, m, i);
        out.push('\n');
    }
    out
}

fn value_or_blank(m: &EmbeddedMesh, f: &Field, i: usize) -> String {
    if m.class[i] == NodeClass::Exterior || f.values[i].is_nan() {
        String::new()
    } else {
        full(f.values[i])
    }
}

/// `j,k,x,y,class,u`; exterior nodes leave `u` empty.
pub fn solution_csv(m: &EmbeddedMesh, f: &Field) -> String {
    let mut out = String::from("j,k,x,y,class,u\n");
    for i in 0..m.class.len() {
        node_prefix(&mut out, m, i);
        let _ = writeln!(out, ",{}", value_or_blank(m, f, i));
    }
    out
}

/// `j,k,x,y,class,t,u`.
pub fn snapshot_csv(m: &EmbeddedMesh, f: &Field, t: f64) -> String {
    let mut out = String::from("j,k,x,y,class,t,u\n");
    let ts = full(t);
    for i in 0..m.class.len() {
        node_prefix(&mut out, m, i);
        let _ = writeln!(out, ",{ts},{}", value_or_blank(m, f, i));
    }
    out
}

/// `row,center,cE,cW,cN,cS,rhs` with Dirichlet neighbors already folded into
/// `rhs`.
pub fn system_csv(dp: &DiscreteProblem) -> String {
    let mut out = String::from("row,center,cE,cW,cN,cS,rhs\n");
    for (r, row) in dp.rows.iter().enumerate() {
        let _ = write!(out, "{r},{}", full(row.center));
        for c in row.coeffs {
            let _ = write!(out, ",{}", full(c));
        }
        let _ = writeln!(out, ",{}", full(row.rhs));
    }
    out
}

/// `dx,variant,u_min,x_min,y_min,u_max,x_max,y_max,error_inf,iterations,area_error`.
pub fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from(
        "dx,variant,u_min,x_min,y_min,u_max,x_max,y_max,error_inf,iterations,area_error\n",
    );
    for row in &r.rows {
        let opt = |v: Option<f64>| v.map(full).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            full(row.dx),
            row.variant.name(),
            full(row.min.value),
            full(row.min.x),
            full(row.min.y),
            full(row.max.value),
            full(row.max.x),
            full(row.max.y),
            opt(row.error_inf),
            row.iterations,
            opt(row.area_error)
        );
    }
    out
}

/// Value written for exterior nodes in VTK output.
pub const VTK_BLANK: f64 = -1e30;

/// Legacy ASCII VTK structured-points file with one scalar field.
pub fn vtk(m: &EmbeddedMesh, f: &Field, name: &str) -> String {
    let g = &m.grid;
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{name}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", g.nx(), g.ny());
    let _ = writeln!(out, "ORIGIN {} {} 0", full(g.rect.x0), full(g.rect.y0));
    let _ = writeln!(out, "SPACING {} {} 1", full(g.dx), full(g.dy));
    let _ = writeln!(out, "POINT_DATA {}", g.node_count());
    let _ = writeln!(out, "SCALARS {name} double 1");
    let _ = writeln!(out, "LOOKUP_TABLE default");
    for i in 0..g.node_count() {
        let v = if m.class[i] == NodeClass::Exterior || f.values[i].is_nan() {
            VTK_BLANK
        } else {
            f.values[i]
        };
        let _ = writeln!(out, "{}", full(v));
    }
    out
}
