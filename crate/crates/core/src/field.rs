use crate::embed::GridSpec;

/// Node values over a grid. Nodes that carry no value hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Field {
    pub fn nan(grid: GridSpec) -> Field {
        Field {
            values: vec![f64::NAN; grid.node_count()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, v: f64) -> Field {
        Field {
            values: vec![v; grid.node_count()],
            grid,
        }
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(j, k)]
    }

    /// Pointwise map; NaN entries stay NaN.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .map(|&v| if v.is_nan() { v } else { f(v) })
                .collect(),
        }
    }

    /// Largest absolute value among entries holding a value.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute difference over entries where both fields hold a value.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}
