#![allow(dead_code)]

use landau_core::{GaussianComponent, InitialDatumSpec, RunConfig, ScalarField, VelocityGrid};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// One to three Gaussians with moderate drift and temperature, so that the
/// mixture sits well inside a box of half-width 4.
pub fn random_mixture(rng: &mut StdRng) -> InitialDatumSpec {
    let count = rng.random_range(1..=3);
    let comps = (0..count)
        .map(|_| GaussianComponent {
            density: rng.random_range(0.3..1.5),
            drift: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            temperature: rng.random_range(0.3..1.0),
        })
        .collect();
    InitialDatumSpec::GaussianMixture(comps)
}

pub fn two_gaussians() -> InitialDatumSpec {
    InitialDatumSpec::GaussianMixture(vec![
        GaussianComponent { density: 1.0, drift: [1.0, 0.0, 0.0], temperature: 0.5 },
        GaussianComponent { density: 1.0, drift: [-1.0, 0.0, 0.0], temperature: 0.5 },
    ])
}

pub fn singular() -> InitialDatumSpec {
    InitialDatumSpec::SingularPower { exponent: 2.0, floor: 0.01 }
}

pub fn field(spec: &InitialDatumSpec, cells: usize, half_width: f64) -> ScalarField {
    let grid = VelocityGrid::new(cells, half_width).unwrap();
    landau_core::sample_datum(spec, &grid).unwrap()
}

pub fn config(datum: InitialDatumSpec, cells: usize, half_width: f64, n: u32, t_final: f64) -> RunConfig {
    RunConfig {
        cells,
        half_width,
        n,
        datum,
        t_final,
        every: 1,
        ..RunConfig::default()
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
