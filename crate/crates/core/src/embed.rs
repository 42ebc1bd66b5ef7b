//! Uniform grids over a bounding rectangle and the two node meshes that
//! approximate a domain on them.

use std::collections::VecDeque;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{DomainSpec, GeometryError, PointClass, Rect};

/// Uniform node grid over `rect`; node `(j, k)` sits at
/// `(x0 + j·dx, y0 + k·dy)` for `j = 0..=mx`, `k = 0..=my`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rect: Rect,
    pub dx: f64,
    pub dy: f64,
    pub mx: usize,
    pub my: usize,
}

/// Neighbor order used throughout: east, west, north, south.
pub const DIRECTIONS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

impl GridSpec {
    pub fn new(rect: Rect, dx: f64, dy: f64) -> Result<GridSpec, EmbedError> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(EmbedError::InvalidSpacing { dx, dy });
        }
        if !(rect.width() > 0.0 && rect.height() > 0.0) {
            return Err(EmbedError::Geometry(GeometryError::InvalidRect(format!(
                "{rect:?}"
            ))));
        }
        let mx = (rect.width() / dx - 1e-9).ceil().max(0.0) as usize;
        let my = (rect.height() / dy - 1e-9).ceil().max(0.0) as usize;
        if mx < 2 || my < 2 {
            return Err(EmbedError::TooCoarse { mx, my });
        }
        Ok(GridSpec {
            rect,
            dx,
            dy,
            mx,
            my,
        })
    }

    pub fn nx(&self) -> usize {
        self.mx + 1
    }

    pub fn ny(&self) -> usize {
        self.my + 1
    }

    pub fn node_count(&self) -> usize {
        self.nx() * self.ny()
    }

    /// k-major global index.
    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.nx() + j
    }

    pub fn jk(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx(), idx / self.nx())
    }

    pub fn x(&self, j: usize) -> f64 {
        self.rect.x0 + j as f64 * self.dx
    }

    pub fn y(&self, k: usize) -> f64 {
        self.rect.y0 + k as f64 * self.dy
    }

    pub fn xy(&self, idx: usize) -> (f64, f64) {
        let (j, k) = self.jk(idx);
        (self.x(j), self.y(k))
    }

    /// Indices of the east, west, north and south neighbors, `None` past the
    /// grid edge.
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 4] {
        let (j, k) = self.jk(idx);
        DIRECTIONS.map(|(dj, dk)| {
            let jj = j as isize + dj;
            let kk = k as isize + dk;
            if jj < 0 || kk < 0 || jj > self.mx as isize || kk > self.my as isize {
                None
            } else {
                Some(self.index(jj as usize, kk as usize))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RectPolicy {
    Fixed(Rect),
    /// Bounding box grown by one spacing on every side.
    PaddedByH,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Extrapolated mesh: nodes inside the domain are unknowns, their
    /// outside neighbors carry the boundary data.
    OverBar,
    /// Interpolated mesh: only nodes inside the domain; the outer layer of
    /// them carries the boundary data.
    UnderBar,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::OverBar => "over",
            Variant::UnderBar => "under",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

impl NodeClass {
    pub fn letter(self) -> char {
        match self {
            NodeClass::Interior => 'I',
            NodeClass::Boundary => 'B',
            NodeClass::Exterior => 'E',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMesh {
    pub grid: GridSpec,
    pub variant: Variant,
    pub class: Vec<NodeClass>,
    pub interior_count: usize,
    pub boundary_count: usize,
}

impl EmbeddedMesh {
    pub fn is_interior(&self, idx: usize) -> bool {
        self.class[idx] == NodeClass::Interior
    }

    /// Interior node indices in k-major order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes_of(NodeClass::Interior)
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes_of(NodeClass::Boundary)
    }

    fn nodes_of(&self, c: NodeClass) -> impl Iterator<Item = usize> + '_ {
        self.class
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == c)
            .map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("grid spacings must be positive and finite (dx={dx}, dy={dy})")]
    InvalidSpacing { dx: f64, dy: f64 },
    #[error("grid needs at least 2 cells per axis, got {mx}x{my}")]
    TooCoarse { mx: usize, my: usize },
    #[error("rectangle {rect:?} does not contain the domain's bounding box {bbox:?}")]
    RectTooSmall { rect: Rect, bbox: Rect },
    #[error("no grid node lies inside the domain; the spacing is too coarse")]
    EmptyInterior,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Picks the rectangle `R` and lays a uniform grid over it.
pub fn build_rectangle(
    d: &DomainSpec,
    policy: RectPolicy,
    dx: f64,
    dy: f64,
) -> Result<GridSpec, EmbedError> {
    let bbox = d.bounding_box()?;
    let rect = match policy {
        RectPolicy::Fixed(rect) => {
            let tol = 1e-12 * bbox.x1.abs().max(bbox.y1.abs()).max(1.0);
            if !rect.contains_rect(&bbox, tol) {
                return Err(EmbedError::RectTooSmall { rect, bbox });
            }
            rect
        }
        RectPolicy::PaddedByH => Rect::new(bbox.x0 - dx, bbox.y0 - dy, bbox.x1 + dx, bbox.y1 + dy),
    };
    GridSpec::new(rect, dx, dy)
}

/// Classifies every grid node against the domain, k-major order.
pub fn classify_grid(
    d: &DomainSpec,
    g: &GridSpec,
    eps: f64,
) -> Result<Vec<PointClass>, GeometryError> {
    (0..g.node_count())
        .map(|i| {
            let (x, y) = g.xy(i);
            d.classify_point(x, y, eps)
        })
        .collect()
}

pub fn build_mesh(
    d: &DomainSpec,
    g: &GridSpec,
    variant: Variant,
) -> Result<EmbeddedMesh, EmbedError> {
    let eps = d.default_eps()?;
    let classes = classify_grid(d, g, eps)?;
    mesh_from_classes(g, variant, &classes)
}

/// Builds a mesh from precomputed node classifications.
pub fn mesh_from_classes(
    g: &GridSpec,
    variant: Variant,
    point: &[PointClass],
) -> Result<EmbeddedMesh, EmbedError> {
    assert_eq!(point.len(), g.node_count());
    let inside = |i: usize| point[i] == PointClass::Inside;
    let mut class = vec![NodeClass::Exterior; point.len()];
    match variant {
        Variant::OverBar => {
            for (i, c) in class.iter_mut().enumerate() {
                if !inside(i) {
                    continue;
                }
                let nb = g.neighbors(i);
                // An inside node on the grid edge cannot carry a full stencil;
                // it is kept as a boundary carrier.
                *c = if nb.iter().all(Option::is_some) {
                    NodeClass::Interior
                } else {
                    NodeClass::Boundary
                };
            }
            for i in 0..point.len() {
                if class[i] == NodeClass::Interior {
                    for n in g.neighbors(i).into_iter().flatten() {
                        if class[n] == NodeClass::Exterior {
                            class[n] = NodeClass::Boundary;
                        }
                    }
                }
            }
        }
        Variant::UnderBar => {
            for (i, c) in class.iter_mut().enumerate() {
                if !inside(i) {
                    continue;
                }
                let full = g.neighbors(i).iter().all(|n| n.is_some_and(inside));
                *c = if full {
                    NodeClass::Interior
                } else {
                    NodeClass::Boundary
                };
            }
        }
    }
    let interior_count = class.iter().filter(|&&c| c == NodeClass::Interior).count();
    if interior_count == 0 {
        return Err(EmbedError::EmptyInterior);
    }
    let boundary_count = class.iter().filter(|&&c| c == NodeClass::Boundary).count();
    Ok(EmbeddedMesh {
        grid: *g,
        variant,
        class,
        interior_count,
        boundary_count,
    })
}

/// True when the interior nodes form a single 4-connected component.
pub fn check_connectivity(m: &EmbeddedMesh) -> bool {
    let Some(start) = m.interior_nodes().next() else {
        return false;
    };
    let mut seen = vec![false; m.class.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut reached = 1;
    while let Some(i) = queue.pop_front() {
        for n in m.grid.neighbors(i).into_iter().flatten() {
            if !seen[n] && m.is_interior(n) {
                seen[n] = true;
                reached += 1;
                queue.push_back(n);
            }
        }
    }
    reached == m.interior_count
}

/// Nodes belonging to the mesh as a point set. For the extrapolated mesh this
/// also takes in the corner nodes diagonal to an interior node: they carry no
/// data but close the region off.
pub fn closure_nodes(m: &EmbeddedMesh) -> Vec<bool> {
    let g = &m.grid;
    let mut in_mesh: Vec<bool> = m.class.iter().map(|&c| c != NodeClass::Exterior).collect();
    if m.variant == Variant::OverBar {
        for i in m.interior_nodes() {
            let (j, k) = g.jk(i);
            for (dj, dk) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
                let (jj, kk) = (j as isize + dj, k as isize + dk);
                if jj >= 0 && kk >= 0 && jj <= g.mx as isize && kk <= g.my as isize {
                    in_mesh[g.index(jj as usize, kk as usize)] = true;
                }
            }
        }
    }
    in_mesh
}

/// Area of the symmetric difference between the domain and the union of
/// grid cells whose four corners all belong to the mesh closure, estimated
/// with `samples_per_cell²` stratified points per cell.
pub fn induced_region_area_error(
    m: &EmbeddedMesh,
    d: &DomainSpec,
    samples_per_cell: usize,
) -> Result<f64, GeometryError> {
    let g = &m.grid;
    let s = samples_per_cell.max(1);
    let eps = d.default_eps()?;
    let weight = g.dx * g.dy / (s * s) as f64;
    let in_mesh = closure_nodes(m);
    let per_cell: Vec<f64> = (0..g.mx * g.my)
        .into_par_iter()
        .map(|c| -> Result<f64, GeometryError> {
            let (j, k) = (c % g.mx, c / g.mx);
            let corners = [
                g.index(j, k),
                g.index(j + 1, k),
                g.index(j, k + 1),
                g.index(j + 1, k + 1),
            ];
            let induced = corners.iter().all(|&i| in_mesh[i]);
            let mut mismatched = 0usize;
            for a in 0..s {
                let y = g.y(k) + (a as f64 + 0.5) / s as f64 * g.dy;
                for b in 0..s {
                    let x = g.x(j) + (b as f64 + 0.5) / s as f64 * g.dx;
                    let in_domain = d.classify_point(x, y, eps)?.in_closure();
                    if in_domain != induced {
                        mismatched += 1;
                    }
                }
            }
            Ok(mismatched as f64 * weight)
        })
        .collect::<Result<_, _>>()?;
    // fixed summation order, independent of the thread count
    Ok(per_cell.iter().sum())
}
