//! Velocity-space lattice, scalar fields and the quadrature/derivative
//! primitives every other module builds on.
//!
//! The lattice is cell-centered on `[-L, L]^3` with `N` cells per axis, so no
//! sample ever sits at the origin. Fields are stored row-major with `x`
//! fastest. Derivatives treat everything outside the box as zero.

use crate::error::{LandauError, Result};

/// Cell-centered cubic lattice on `[-L, L]^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    cells: usize,
    half_width: f64,
}

impl VelocityGrid {
    /// Builds a lattice with `cells` per axis. `cells` must be even and at
    /// least 8 (symmetry about the origin plus stencil width).
    pub fn new(cells: usize, half_width: f64) -> Result<Self> {
        if cells < 8 || !cells.is_multiple_of(2) {
            return Err(LandauError::InvalidGrid(format!(
                "N must be even >= 8, got {cells}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LandauError::InvalidGrid(format!(
                "L must be positive and finite, got {half_width}"
            )));
        }
        Ok(VelocityGrid { cells, half_width })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    /// Total number of cells, `N^3`.
    pub fn len(&self) -> usize {
        self.cells * self.cells * self.cells
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell-center coordinate along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.cells * (j + self.cells * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.cells;
        [idx % n, (idx / n) % n, idx / (n * n)]
    }

    #[inline]
    pub fn velocity(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Index of the cell whose center is closest to `v`, clamped to the box.
    pub fn nearest_cell(&self, v: [f64; 3]) -> usize {
        let h = self.spacing();
        let axis = |x: f64| {
            let i = ((x + self.half_width) / h).floor();
            i.clamp(0.0, (self.cells - 1) as f64) as usize
        };
        self.index(axis(v[0]), axis(v[1]), axis(v[2]))
    }

    /// `<v>^k` for every cell.
    pub fn bracket_powers(&self, k: f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| bracket(self.velocity(idx)).powf(k))
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &VelocityGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(LandauError::GridMismatch(format!(
                "{what}: {}^3 on L = {} vs {}^3 on L = {}",
                self.cells, self.half_width, other.cells, other.half_width
            )));
        }
        Ok(())
    }
}

/// Japanese bracket `<v> = (1 + |v|^2)^{1/2}`.
#[inline]
pub fn bracket(v: [f64; 3]) -> f64 {
    (1.0 + norm_sq(v)).sqrt()
}

#[inline]
pub fn norm_sq(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Fixed-order pairwise summation; the result depends only on the input
/// order, never on how work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 128;
    if values.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in values {
            acc += x;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `term(i)` for `i in 0..len`.
pub fn pairwise_sum_by(len: usize, term: impl Fn(usize) -> f64) -> f64 {
    let values: Vec<f64> = (0..len).map(term).collect();
    pairwise_sum(&values)
}

/// One real value per lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: VelocityGrid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps `values`, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LandauError::InvalidField(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(idx) = values.iter().position(|x| !x.is_finite()) {
            return Err(LandauError::InvalidField(format!(
                "non-finite value at cell {idx}"
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Like [`ScalarField::new`] but additionally requires `values >= 0`,
    /// as every distribution function must.
    pub fn distribution(grid: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        let field = Self::new(grid, values)?;
        if let Some(idx) = field.values.iter().position(|&x| x < 0.0) {
            return Err(LandauError::InvalidField(format!(
                "negative value {} at cell {idx}",
                field.values[idx]
            )));
        }
        Ok(field)
    }

    pub fn zeros(grid: VelocityGrid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `fun` at every cell center.
    ///
    /// Panics if `fun` produces a non-finite value.
    pub fn from_fn(grid: VelocityGrid, fun: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|idx| fun(grid.velocity(idx))).collect();
        assert!(
            values.iter().all(|x| x.is_finite()),
            "ScalarField::from_fn produced a non-finite sample"
        );
        ScalarField { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: VelocityGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> ScalarField {
        self.map(|x| factor * x)
    }

    pub fn map(&self, fun: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&x| fun(x)).collect(),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<ScalarField> {
        self.grid.ensure_same(&other.grid, "combine")?;
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        })
    }

    /// Midpoint quadrature `sum f h^3`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.grid.cell_volume()
    }
}

/// `sum f(v) <v>^k h^3`.
pub fn weighted_integral(f: &ScalarField, k: f64) -> f64 {
    let grid = f.grid();
    let values = f.values();
    let sum = if k == 0.0 {
        pairwise_sum(values)
    } else {
        pairwise_sum_by(values.len(), |idx| {
            values[idx] * bracket(grid.velocity(idx)).powf(k)
        })
    };
    sum * grid.cell_volume()
}

/// Weighted Lebesgue norm `(sum |f|^p <v>^{pk} h^3)^{1/p}`, `p >= 1`.
pub fn weighted_lp_norm(f: &ScalarField, p: f64, k: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(LandauError::InvalidArgument(format!(
            "Lebesgue exponent must satisfy p >= 1, got {p}"
        )));
    }
    let grid = f.grid();
    let values = f.values();
    let sum = pairwise_sum_by(values.len(), |idx| {
        let x = values[idx].abs();
        if x == 0.0 {
            0.0
        } else {
            x.powf(p) * bracket(grid.velocity(idx)).powf(p * k)
        }
    });
    Ok((sum * grid.cell_volume()).powf(1.0 / p))
}

/// Value of `values` at the neighbor of `idx` displaced by `step` along
/// `axis`, zero outside the box.
#[inline]
pub(crate) fn neighbor_or_zero(
    grid: &VelocityGrid,
    values: &[f64],
    idx: usize,
    axis: usize,
    step: isize,
) -> f64 {
    let coords = grid.unravel(idx);
    let c = coords[axis] as isize + step;
    if c < 0 || c >= grid.cells() as isize {
        0.0
    } else {
        values[offset_index(grid, idx, axis, step)]
    }
}

#[inline]
pub(crate) fn axis_stride(grid: &VelocityGrid, axis: usize) -> usize {
    match axis {
        0 => 1,
        1 => grid.cells(),
        _ => grid.cells() * grid.cells(),
    }
}

#[inline]
fn offset_index(grid: &VelocityGrid, idx: usize, axis: usize, step: isize) -> usize {
    (idx as isize + step * axis_stride(grid, axis) as isize) as usize
}

/// Second-order central differences, zero ghost cells.
pub fn gradient(f: &ScalarField) -> [ScalarField; 3] {
    let grid = *f.grid();
    let inv_2h = 1.0 / (2.0 * grid.spacing());
    let values = f.values();
    let component = |axis: usize| {
        let out = (0..grid.len())
            .map(|idx| {
                (neighbor_or_zero(&grid, values, idx, axis, 1)
                    - neighbor_or_zero(&grid, values, idx, axis, -1))
                    * inv_2h
            })
            .collect();
        ScalarField::from_vec_unchecked(grid, out)
    };
    [component(0), component(1), component(2)]
}

/// Seven-point Laplacian, zero ghost cells.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let values = f.values();
    let out = (0..grid.len())
        .map(|idx| {
            let mut acc = -6.0 * values[idx];
            for axis in 0..3 {
                acc += neighbor_or_zero(&grid, values, idx, axis, 1)
                    + neighbor_or_zero(&grid, values, idx, axis, -1);
            }
            acc * inv_h2
        })
        .collect();
    ScalarField::from_vec_unchecked(grid, out)
}
