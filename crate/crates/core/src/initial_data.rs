//! Initial data families and the regularized datum
//! `(f 1_{|v| <= n}) * chi_n + M / n`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{LandauError, Result};
use crate::fft::{FreeSpaceConvolver, Parity};
use crate::grid::{norm_sq, ScalarField, VelocityGrid};
use crate::kernel::PaddedLattice;

/// Fewest cells per mollifier radius.
pub const MOLLIFIER_MIN_CELLS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub density: f64,
    pub drift: [f64; 3],
    pub temperature: f64,
}

impl GaussianComponent {
    pub fn eval(&self, v: [f64; 3]) -> f64 {
        let t = self.temperature;
        let d = [v[0] - self.drift[0], v[1] - self.drift[1], v[2] - self.drift[2]];
        self.density * (2.0 * PI * t).powf(-1.5) * (-norm_sq(d) / (2.0 * t)).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(LandauError::InvalidArgument(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(LandauError::InvalidArgument(format!(
                "density must be nonnegative, got {}",
                self.density
            )));
        }
        if self.drift.iter().any(|u| !u.is_finite()) {
            return Err(LandauError::InvalidArgument("drift must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialDatumSpec {
    /// `M(v) = exp(-|v|^2)`.
    Maxwellian,
    Gaussian(GaussianComponent),
    GaussianMixture(Vec<GaussianComponent>),
    /// `Z |v|^{-a} 1_{|v| <= 1} + floor * M`, `Z` giving the first term
    /// unit discrete mass.
    SingularPower { exponent: f64, floor: f64 },
}

impl InitialDatumSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialDatumSpec::Maxwellian => Ok(()),
            InitialDatumSpec::Gaussian(g) => g.validate(),
            InitialDatumSpec::GaussianMixture(list) => {
                if list.is_empty() {
                    return Err(LandauError::InvalidArgument(
                        "gaussian mixture needs at least one component".into(),
                    ));
                }
                list.iter().try_for_each(GaussianComponent::validate)
            }
            InitialDatumSpec::SingularPower { exponent, floor } => {
                if !(*exponent > 1.0 && *exponent < 3.0) {
                    return Err(LandauError::InvalidArgument(format!(
                        "singular exponent must lie in (1, 3), got {exponent}"
                    )));
                }
                if !(*floor >= 0.0 && floor.is_finite()) {
                    return Err(LandauError::InvalidArgument(format!(
                        "floor must be nonnegative, got {floor}"
                    )));
                }
                Ok(())
            }
        }
    }
}

pub fn maxwellian(v: [f64; 3]) -> f64 {
    (-norm_sq(v)).exp()
}

pub fn sample_datum(spec: &InitialDatumSpec, grid: &VelocityGrid) -> Result<ScalarField> {
    spec.validate()?;
    let values: Vec<f64> = match spec {
        InitialDatumSpec::Maxwellian => (0..grid.len()).map(|i| maxwellian(grid.velocity(i))).collect(),
        InitialDatumSpec::Gaussian(g) => (0..grid.len()).map(|i| g.eval(grid.velocity(i))).collect(),
        InitialDatumSpec::GaussianMixture(list) => (0..grid.len())
            .map(|i| {
                let v = grid.velocity(i);
                list.iter().map(|g| g.eval(v)).sum()
            })
            .collect(),
        InitialDatumSpec::SingularPower { exponent, floor } => {
            let profile: Vec<f64> = (0..grid.len())
                .map(|i| {
                    let r2 = norm_sq(grid.velocity(i));
                    if r2 <= 1.0 {
                        r2.powf(-exponent / 2.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            let mass = crate::grid::pairwise_sum(&profile) * grid.cell_volume();
            if mass <= 0.0 {
                return Err(LandauError::InvalidGrid(
                    "no cell centre inside the unit ball".into(),
                ));
            }
            profile
                .iter()
                .enumerate()
                .map(|(i, p)| p / mass + floor * maxwellian(grid.velocity(i)))
                .collect()
        }
    };
    ScalarField::distribution(*grid, values)
}

/// `int_{|x| < 1} exp(-1 / (1 - |x|^2)) dx` by radial midpoint quadrature.
pub fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let steps = 200_000;
        let dr = 1.0 / steps as f64;
        let terms: Vec<f64> = (0..steps)
            .map(|s| {
                let r = (s as f64 + 0.5) * dr;
                4.0 * PI * r * r * (-1.0 / (1.0 - r * r)).exp() * dr
            })
            .collect();
        crate::grid::pairwise_sum(&terms)
    })
}

/// Normalizing constant of the unit-mass bump.
pub fn mollifier_constant() -> f64 {
    1.0 / bump_mass()
}

/// `chi_n(z) = n^3 c exp(-1 / (1 - |n z|^2))` on `|n z| < 1`.
pub fn mollifier(n: u32, z: [f64; 3]) -> f64 {
    let nf = n as f64;
    let s2 = nf * nf * norm_sq(z);
    if s2 >= 1.0 {
        0.0
    } else {
        nf.powi(3) * mollifier_constant() * (-1.0 / (1.0 - s2)).exp()
    }
}

/// Truncates to `|v| <= n`, convolves with `chi_n` and adds `M / n`.
///
/// The sampled mollifier is rescaled to unit discrete mass so that the
/// convolution preserves the discrete mass exactly.
pub fn mollify_and_floor(f: &ScalarField, n: u32) -> Result<ScalarField> {
    if n == 0 {
        return Err(LandauError::InvalidArgument("n must be positive".into()));
    }
    let grid = *f.grid();
    let cells_per_radius = 1.0 / (n as f64 * grid.spacing());
    if cells_per_radius < MOLLIFIER_MIN_CELLS {
        return Err(LandauError::MollifierUnresolved(format!(
            "mollifier radius 1/n spans {cells_per_radius:.3} cells, need >= {MOLLIFIER_MIN_CELLS}"
        )));
    }
    let nf = n as f64;
    let truncated: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if norm_sq(grid.velocity(i)) <= nf * nf { v } else { 0.0 })
        .collect();
    let lattice = PaddedLattice::new(&grid);
    let mut chi: Vec<f64> = (0..lattice.len())
        .map(|i| mollifier(n, lattice.displacement(i)))
        .collect();
    let chi_mass = crate::grid::pairwise_sum(&chi) * grid.cell_volume();
    chi.iter_mut().for_each(|c| *c /= chi_mass);
    let conv = FreeSpaceConvolver::new(&grid);
    let smoothed = conv.convolve(&conv.kernel_spectrum(&chi, Parity::Even), &truncated);
    let values: Vec<f64> = smoothed
        .iter()
        .enumerate()
        // FFT rounding leaves O(1e-17) negatives where the exact value is 0
        .map(|(i, &s)| s.max(0.0) + maxwellian(grid.velocity(i)) / nf)
        .collect();
    ScalarField::distribution(grid, values)
}
