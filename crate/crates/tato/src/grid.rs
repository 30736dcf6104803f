//! Equispaced Cartesian reconstruction grid and real-valued images on it.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// `n x n` nodes over the square `[-half_width, half_width]^2`, node spacing
/// `2 half_width / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if half_width <= 0.0 || n < 2 {
            return Err(Error::Config(format!(
                "grid needs half_width > 0 and n >= 2, got {half_width}, {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Nyquist frequency of this grid, `pi / step`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.step()
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step()
    }

    /// Node position at (row, col) = (iy, ix); rows run along y.
    pub fn node(&self, iy: usize, ix: usize) -> Point {
        [self.coord(ix), self.coord(iy)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub grid: GridSpec,
    /// Row-major, `values[iy * n + ix]`.
    pub values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n * grid.n],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(Point) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n * grid.n);
        for iy in 0..grid.n {
            for ix in 0..grid.n {
                values.push(f(grid.node(iy, ix)));
            }
        }
        Self { grid, values }
    }

    pub fn at(&self, iy: usize, ix: usize) -> f64 {
        self.values[iy * self.grid.n + ix]
    }
}
