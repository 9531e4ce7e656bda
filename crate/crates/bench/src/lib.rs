//! Shared fixtures for the benchmarks in `benches/`.

use landau_core::{sample_datum, GaussianComponent, InitialDatumSpec, ScalarField, VelocityGrid};

/// Two drifting Gaussians on `[-4, 4]^3`.
pub fn mixture_field(cells: usize) -> ScalarField {
    let grid = VelocityGrid::new(cells, 4.0).expect("valid grid");
    let spec = InitialDatumSpec::GaussianMixture(vec![
        GaussianComponent { density: 1.0, drift: [1.0, 0.0, 0.0], temperature: 0.5 },
        GaussianComponent { density: 1.0, drift: [-1.0, 0.0, 0.0], temperature: 0.5 },
    ]);
    sample_datum(&spec, &grid).expect("valid datum")
}
