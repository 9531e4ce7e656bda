//! Truncated Coulomb kernel and the three kernel fields behind the
//! collision coefficients, sampled on the zero-padded difference lattice.
//!
//! The padded lattice has `M = 2N` points per axis. Entry `m` along an axis
//! stands for the offset `j = m` when `m < N` and `j = m - M` otherwise, so
//! the lattice covers `z = j h` for `-N <= j < N`.

use std::f64::consts::PI;

use crate::error::{LandauError, Result};
use crate::grid::{norm_sq, VelocityGrid};
use crate::linalg::{Sym3, SYM3_PAIRS};

/// Largest admissible `n h`. Past this the self-cell weight `n h^3` of the
/// matrix kernel overshoots the exact cell integral of the Coulomb tensor.
pub const MAX_KERNEL_CELL_RATIO: f64 = 2.0;

/// The truncated kernel `K_n(r)`.
///
/// Equal to `1/r` for `r >= 1/n`; inside it is `n (3 - (n r)^2) / 2`, which
/// matches value and slope at `r = 1/n`, stays in `[n, 3n/2]` and lies below
/// `1/r` because `(s - 1)^2 (s + 2) >= 0`.
#[inline]
pub fn kn_eval(n: u32, r: f64) -> f64 {
    let nf = n as f64;
    if r * nf >= 1.0 {
        1.0 / r
    } else {
        let s = nf * r;
        nf * (3.0 - s * s) / 2.0
    }
}

/// Orthogonal projection onto the plane perpendicular to `z`.
pub fn projection(z: [f64; 3]) -> Result<Sym3> {
    let r2 = norm_sq(z);
    if r2 == 0.0 {
        return Err(LandauError::InvalidArgument(
            "projection undefined at z = 0".into(),
        ));
    }
    let mut m = [0.0; 6];
    for (slot, &(i, j)) in SYM3_PAIRS.iter().enumerate() {
        let delta = if i == j { 1.0 } else { 0.0 };
        m[slot] = delta - z[i] * z[j] / r2;
    }
    Ok(Sym3::from_components(m))
}

/// Rejects grids that cannot represent the kernel: `n h` must not exceed
/// [`MAX_KERNEL_CELL_RATIO`].
pub fn check_resolution(grid: &VelocityGrid, n: u32) -> Result<()> {
    if n == 0 {
        return Err(LandauError::InvalidArgument(
            "regularization index n must be positive".into(),
        ));
    }
    let ratio = n as f64 * grid.spacing();
    if ratio > MAX_KERNEL_CELL_RATIO {
        return Err(LandauError::KernelUnresolved(format!(
            "n*h = {ratio} exceeds {MAX_KERNEL_CELL_RATIO} (n = {n}, h = {})",
            grid.spacing()
        )));
    }
    Ok(())
}

/// Geometry of the padded difference lattice for a given grid.
#[derive(Debug, Clone, Copy)]
pub struct PaddedLattice {
    pub cells: usize,
    pub size: usize,
    pub spacing: f64,
}

impl PaddedLattice {
    pub fn new(grid: &VelocityGrid) -> Self {
        PaddedLattice {
            cells: grid.cells(),
            size: 2 * grid.cells(),
            spacing: grid.spacing(),
        }
    }

    pub fn len(&self) -> usize {
        self.size * self.size * self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn offset(&self, m: usize) -> isize {
        if m < self.cells {
            m as isize
        } else {
            m as isize - self.size as isize
        }
    }

    /// Lattice slot holding the offset `(dx, dy, dz)`, each in `[-N, N)`.
    #[inline]
    pub fn index_of(&self, d: [isize; 3]) -> usize {
        let wrap = |x: isize| x.rem_euclid(self.size as isize) as usize;
        wrap(d[0]) + self.size * (wrap(d[1]) + self.size * wrap(d[2]))
    }

    #[inline]
    pub fn displacement(&self, idx: usize) -> [f64; 3] {
        let m = self.size;
        let (mx, my, mz) = (idx % m, (idx / m) % m, idx / (m * m));
        [
            self.offset(mx) as f64 * self.spacing,
            self.offset(my) as f64 * self.spacing,
            self.offset(mz) as f64 * self.spacing,
        ]
    }

    /// True for slots with some component at offset `-N`; those offsets
    /// never occur as a difference of two grid cells.
    #[inline]
    pub fn is_unreachable(&self, idx: usize) -> bool {
        let m = self.size;
        let n = self.cells;
        idx % m == n || (idx / m) % m == n || idx / (m * m) == n
    }
}

/// Samples `K_n(|z|) Pi(z)` on the padded lattice; the origin carries the
/// spherical average `(2/3) K_n(0) I`.
pub fn a_kernel_field(grid: &VelocityGrid, n: u32) -> [Vec<f64>; 6] {
    let lattice = PaddedLattice::new(grid);
    let mut out: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; lattice.len()]);
    for idx in 0..lattice.len() {
        let z = lattice.displacement(idx);
        let r = norm_sq(z).sqrt();
        let g = if r == 0.0 {
            Sym3::diagonal(2.0 / 3.0 * kn_eval(n, 0.0))
        } else {
            projection(z).expect("nonzero z").scale(kn_eval(n, r))
        };
        for (slot, value) in g.components().into_iter().enumerate() {
            out[slot][idx] = value;
        }
    }
    out
}

/// Samples the drift kernel `-2 K_n(|z|) z / |z|^2`, zero at the origin.
pub fn b_kernel_field(grid: &VelocityGrid, n: u32) -> [Vec<f64>; 3] {
    let lattice = PaddedLattice::new(grid);
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; lattice.len()]);
    for idx in 0..lattice.len() {
        let z = lattice.displacement(idx);
        let r2 = norm_sq(z);
        if r2 == 0.0 {
            continue;
        }
        let scale = -2.0 * kn_eval(n, r2.sqrt()) / r2;
        for a in 0..3 {
            out[a][idx] = scale * z[a];
        }
    }
    out
}

/// Scalar reaction kernel with its mass bookkeeping.
#[derive(Debug, Clone)]
pub struct ReactionKernel {
    pub values: Vec<f64>,
    /// `sum q h^3` with the origin cell holding the exact average of `q`
    /// over the ball of equal volume, before renormalization.
    pub raw_mass: f64,
    /// `sum q h^3` after renormalization; `-8 pi` up to rounding.
    pub total_mass: f64,
}

/// Closed form of the reaction kernel away from the origin:
/// `-3n (1 - n^2 r^2) / r^2` inside the truncation radius, zero outside.
#[inline]
pub fn reaction_profile(n: u32, r: f64) -> f64 {
    let nf = n as f64;
    if r * nf >= 1.0 || r == 0.0 {
        0.0
    } else {
        -3.0 * nf * (1.0 - nf * nf * r * r) / (r * r)
    }
}

/// Integral of the reaction kernel over the ball of radius `rho`.
fn reaction_ball_mass(n: u32, rho: f64) -> f64 {
    let nf = n as f64;
    let rho = rho.min(1.0 / nf);
    -12.0 * PI * nf * rho * (1.0 - nf * nf * rho * rho / 3.0)
}

/// Samples the reaction kernel `-(2/r^2) d/dr (r K_n)` and pins the origin
/// cell so that the discrete mass is exactly `-8 pi`.
pub fn c_kernel_field(grid: &VelocityGrid, n: u32) -> Result<ReactionKernel> {
    check_resolution(grid, n)?;
    let lattice = PaddedLattice::new(grid);
    let h3 = grid.cell_volume();
    let mut values = vec![0.0; lattice.len()];
    let mut off_origin = Vec::new();
    for (idx, slot) in values.iter_mut().enumerate() {
        let r = norm_sq(lattice.displacement(idx)).sqrt();
        if r > 0.0 {
            let q = reaction_profile(n, r);
            if q != 0.0 && !lattice.is_unreachable(idx) {
                *slot = q;
                off_origin.push(q);
            }
        }
    }
    let off_origin_mass = crate::grid::pairwise_sum(&off_origin) * h3;
    let equal_volume_radius = (3.0 / (4.0 * PI)).cbrt() * grid.spacing();
    let raw_mass = off_origin_mass + reaction_ball_mass(n, equal_volume_radius);
    let origin = (-8.0 * PI - off_origin_mass) / h3;
    values[0] = origin;
    let total_mass = off_origin_mass + origin * h3;
    Ok(ReactionKernel {
        values,
        raw_mass,
        total_mass,
    })
}

/// The three sampled kernels for one `(grid, n)` pair.
#[derive(Debug, Clone)]
pub struct KernelFieldSet {
    grid: VelocityGrid,
    n: u32,
    pub matrix: [Vec<f64>; 6],
    pub drift: [Vec<f64>; 3],
    pub reaction: ReactionKernel,
}

impl KernelFieldSet {
    pub fn new(grid: &VelocityGrid, n: u32) -> Result<Self> {
        check_resolution(grid, n)?;
        Ok(KernelFieldSet {
            grid: *grid,
            n,
            matrix: a_kernel_field(grid, n),
            drift: b_kernel_field(grid, n),
            reaction: c_kernel_field(grid, n)?,
        })
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn lattice(&self) -> PaddedLattice {
        PaddedLattice::new(&self.grid)
    }

    pub fn total_c_mass(&self) -> f64 {
        self.reaction.total_mass
    }

    pub fn matrix_at(&self, idx: usize) -> Sym3 {
        Sym3::from_components(std::array::from_fn(|s| self.matrix[s][idx]))
    }
}
