//! Collision coefficients `A = (K_n Pi) * f`, `b`, `c` by free-space
//! convolution, a brute-force oracle, and empirical bound and coercivity
//! reports.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{LandauError, Result};
use crate::fft::{FreeSpaceConvolver, KernelSpectrum, Parity};
use crate::grid::{bracket, norm_sq, weighted_lp_norm, ScalarField, VelocityGrid};
use crate::kernel::{KernelFieldSet, PaddedLattice};
use crate::linalg::Sym3;

/// Largest grid accepted by the `O(N^6)` direct summation.
pub const DIRECT_MAX_CELLS: usize = 16;

/// Per-cell `A` (six symmetric entries), `b` and `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub grid: VelocityGrid,
    pub n: u32,
    pub a: [Vec<f64>; 6],
    pub b: [Vec<f64>; 3],
    pub c: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(grid: VelocityGrid, n: u32) -> Self {
        let len = grid.len();
        CoefficientField {
            grid,
            n,
            a: std::array::from_fn(|_| vec![0.0; len]),
            b: std::array::from_fn(|_| vec![0.0; len]),
            c: vec![0.0; len],
        }
    }

    pub fn matrix_at(&self, idx: usize) -> Sym3 {
        Sym3::from_components(std::array::from_fn(|s| self.a[s][idx]))
    }

    pub fn drift_at(&self, idx: usize) -> [f64; 3] {
        [self.b[0][idx], self.b[1][idx], self.b[2][idx]]
    }

    /// Largest relative entrywise gap to `other`, scaled per coefficient
    /// family by its largest magnitude.
    pub fn max_relative_discrepancy(&self, other: &CoefficientField) -> f64 {
        let family = |mine: &[&Vec<f64>], theirs: &[&Vec<f64>]| {
            let scale = mine
                .iter()
                .flat_map(|v| v.iter())
                .fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                return mine
                    .iter()
                    .zip(theirs)
                    .flat_map(|(a, b)| a.iter().zip(b.iter()))
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            }
            mine.iter()
                .zip(theirs)
                .flat_map(|(a, b)| a.iter().zip(b.iter()))
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
        };
        let a = family(&self.a.iter().collect::<Vec<_>>(), &other.a.iter().collect::<Vec<_>>());
        let b = family(&self.b.iter().collect::<Vec<_>>(), &other.b.iter().collect::<Vec<_>>());
        let c = family(&[&self.c], &[&other.c]);
        a.max(b).max(c)
    }
}

/// Pieces of the Landau flux `f (A a - B)` with `a` the gated log-gradient
/// and `B = (K_n Pi) * (f a)`.
#[derive(Debug, Clone)]
pub struct FluxCoefficients {
    pub a: [Vec<f64>; 6],
    pub drift: [Vec<f64>; 3],
    pub log_grad: LogGradient,
}

/// Central differences of `ln f` with mirrored ghosts, zeroed wherever the
/// cell or one of its stencil neighbours is at or below the gate.
#[derive(Debug, Clone)]
pub struct LogGradient {
    pub components: [Vec<f64>; 3],
    pub active: Vec<bool>,
}

impl LogGradient {
    pub fn at(&self, idx: usize) -> [f64; 3] {
        std::array::from_fn(|a| self.components[a][idx])
    }
}

/// Gated log-gradient of `f`; cells count as active when `f` and all six
/// in-domain neighbours exceed `f_tol * max f`.
pub fn log_gradient(f: &ScalarField, f_tol: f64) -> LogGradient {
    let grid = *f.grid();
    let n = grid.cells();
    let values = f.values();
    let threshold = f_tol * f.max().max(0.0);
    let h = grid.spacing();
    let positive: Vec<bool> = values.iter().map(|&v| v > threshold && v > 0.0).collect();
    let logs: Vec<f64> = values
        .iter()
        .zip(&positive)
        .map(|(&v, &p)| if p { v.ln() } else { 0.0 })
        .collect();
    let strides = [1, n, n * n];
    let mut active = vec![false; grid.len()];
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.len()]);
    for idx in 0..grid.len() {
        if !positive[idx] {
            continue;
        }
        let ijk = grid.unravel(idx);
        let mut ok = true;
        let mut grad = [0.0; 3];
        for axis in 0..3 {
            let s = strides[axis];
            let lo = if ijk[axis] > 0 { idx - s } else { idx };
            let hi = if ijk[axis] + 1 < n { idx + s } else { idx };
            if !positive[lo] || !positive[hi] {
                ok = false;
                break;
            }
            grad[axis] = (logs[hi] - logs[lo]) / (2.0 * h);
        }
        if ok {
            active[idx] = true;
            for axis in 0..3 {
                comps[axis][idx] = grad[axis];
            }
        }
    }
    LogGradient {
        components: comps,
        active,
    }
}

/// Kernel spectra for one `(grid, n)` pair, reused across evaluations.
#[derive(Debug, Clone)]
pub struct CoefficientEngine {
    kernels: KernelFieldSet,
    conv: FreeSpaceConvolver,
    matrix: Vec<KernelSpectrum>,
    drift: Vec<KernelSpectrum>,
    reaction: KernelSpectrum,
}

impl CoefficientEngine {
    pub fn new(grid: &VelocityGrid, n: u32) -> Result<Self> {
        Self::from_kernels(KernelFieldSet::new(grid, n)?)
    }

    pub fn from_kernels(kernels: KernelFieldSet) -> Result<Self> {
        let conv = FreeSpaceConvolver::new(kernels.grid());
        let mut jobs: Vec<(&[f64], Parity)> = Vec::with_capacity(10);
        jobs.extend(kernels.matrix.iter().map(|k| (k.as_slice(), Parity::Even)));
        jobs.extend(kernels.drift.iter().map(|k| (k.as_slice(), Parity::Odd)));
        jobs.push((kernels.reaction.values.as_slice(), Parity::Even));
        let mut spectra: Vec<KernelSpectrum> = jobs
            .into_par_iter()
            .map(|(k, p)| conv.kernel_spectrum(k, p))
            .collect();
        let reaction = spectra.pop().expect("reaction spectrum");
        let drift = spectra.split_off(6);
        Ok(CoefficientEngine {
            kernels,
            conv,
            matrix: spectra,
            drift,
            reaction,
        })
    }

    pub fn grid(&self) -> &VelocityGrid {
        self.kernels.grid()
    }

    pub fn n(&self) -> u32 {
        self.kernels.n()
    }

    pub fn kernels(&self) -> &KernelFieldSet {
        &self.kernels
    }

    pub fn convolver(&self) -> &FreeSpaceConvolver {
        &self.conv
    }

    fn check_field(&self, f: &ScalarField) -> Result<()> {
        self.grid().ensure_same(f.grid(), "field vs kernels")
    }

    fn apply(&self, kernel: &KernelSpectrum, spec: &[Complex64]) -> Vec<f64> {
        let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
        self.conv.multiply_into(kernel, spec, &mut out, false);
        self.conv.inverse_to_field(out)
    }

    /// `A`, `b`, `c` from their sampled kernels.
    pub fn compute(&self, f: &ScalarField) -> Result<CoefficientField> {
        self.check_field(f)?;
        let spec = self.conv.forward_field(f.values());
        let kernels: Vec<&KernelSpectrum> = self
            .matrix
            .iter()
            .chain(self.drift.iter())
            .chain(std::iter::once(&self.reaction))
            .collect();
        let mut out: Vec<Vec<f64>> = kernels
            .into_par_iter()
            .map(|k| self.apply(k, &spec))
            .collect();
        let c = out.pop().expect("c");
        let b: [Vec<f64>; 3] = take_array(out.split_off(6));
        let a: [Vec<f64>; 6] = take_array(out);
        Ok(CoefficientField {
            grid: *self.grid(),
            n: self.n(),
            a,
            b,
            c,
        })
    }

    /// Matrix coefficient alone.
    pub fn matrix(&self, f: &ScalarField) -> Result<[Vec<f64>; 6]> {
        self.check_field(f)?;
        let spec = self.conv.forward_field(f.values());
        let out: Vec<Vec<f64>> = self
            .matrix
            .par_iter()
            .map(|k| self.apply(k, &spec))
            .collect();
        Ok(take_array(out))
    }

    /// `A = G * f` and `B = G * (f a)` for the Landau flux.
    pub fn flux_coefficients(&self, f: &ScalarField, f_tol: f64) -> Result<FluxCoefficients> {
        self.check_field(f)?;
        let log_grad = log_gradient(f, f_tol);
        let values = f.values();
        let mut sources: Vec<Vec<f64>> = vec![values.to_vec()];
        for axis in 0..3 {
            sources.push(
                values
                    .iter()
                    .zip(&log_grad.components[axis])
                    .map(|(v, a)| v * a)
                    .collect(),
            );
        }
        let spectra: Vec<Vec<Complex64>> = sources
            .par_iter()
            .map(|s| self.conv.forward_field(s))
            .collect();
        // jobs 0..6: A entries; 6..9: B components
        let results: Vec<Vec<f64>> = (0..9usize)
            .into_par_iter()
            .map(|job| {
                if job < 6 {
                    self.apply(&self.matrix[job], &spectra[0])
                } else {
                    let i = job - 6;
                    let mut acc = vec![Complex64::new(0.0, 0.0); spectra[0].len()];
                    for j in 0..3 {
                        let slot = sym_slot(i, j);
                        self.conv
                            .multiply_into(&self.matrix[slot], &spectra[1 + j], &mut acc, j > 0);
                    }
                    self.conv.inverse_to_field(acc)
                }
            })
            .collect();
        let mut results = results;
        let drift: [Vec<f64>; 3] = take_array(results.split_off(6));
        let a: [Vec<f64>; 6] = take_array(results);
        Ok(FluxCoefficients { a, drift, log_grad })
    }
}

fn take_array<const K: usize>(v: Vec<Vec<f64>>) -> [Vec<f64>; K] {
    v.try_into().expect("coefficient count")
}

/// Storage slot of entry `(i, j)` in the six-entry symmetric layout.
pub fn sym_slot(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        (1, 2) => 5,
        _ => panic!("index out of range"),
    }
}

/// FFT evaluation of all coefficients for a one-off field.
pub fn compute_coefficients(f: &ScalarField, kernels: &KernelFieldSet) -> Result<CoefficientField> {
    kernels.grid().ensure_same(f.grid(), "field vs kernels")?;
    CoefficientEngine::from_kernels(kernels.clone())?.compute(f)
}

/// Nested-loop convolution with the same kernels and quadrature.
pub fn direct_coefficients(f: &ScalarField, kernels: &KernelFieldSet) -> Result<CoefficientField> {
    let grid = *kernels.grid();
    grid.ensure_same(f.grid(), "field vs kernels")?;
    if grid.cells() > DIRECT_MAX_CELLS {
        return Err(LandauError::TooLarge(format!(
            "direct summation needs N <= {DIRECT_MAX_CELLS}, got {}",
            grid.cells()
        )));
    }
    let lattice = PaddedLattice::new(&grid);
    let h3 = grid.cell_volume();
    let values = f.values();
    let support: Vec<(usize, [usize; 3])> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| (j, grid.unravel(j)))
        .collect();
    let mut out = CoefficientField::zeros(grid, kernels.n());
    for i in 0..grid.len() {
        let vi = grid.unravel(i);
        let mut acc = [0.0; 10];
        for &(j, wj) in &support {
            let d = [0, 1, 2].map(|c| vi[c] as isize - wj[c] as isize);
            let k = lattice.index_of(d);
            let fj = values[j];
            for s in 0..6 {
                acc[s] += kernels.matrix[s][k] * fj;
            }
            for s in 0..3 {
                acc[6 + s] += kernels.drift[s][k] * fj;
            }
            acc[9] += kernels.reaction.values[k] * fj;
        }
        for s in 0..6 {
            out.a[s][i] = acc[s] * h3;
        }
        for s in 0..3 {
            out.b[s][i] = acc[6 + s] * h3;
        }
        out.c[i] = acc[9] * h3;
    }
    Ok(out)
}

/// Empirical constants of the coefficient bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    /// `max |A_ij| / (||f||_1 + ||f||_2)`.
    pub a_ratio: f64,
    /// `max |b(v)| / sum_{w != v} f(w) |v - w|^{-2} h^3`; at most 2.
    pub b_ratio: f64,
    /// `max |c(v)| / sup_{|w - v| <= 1/n} f(w)`; at most `8 pi`.
    pub c_ratio: f64,
}

pub fn coefficient_bounds_report(coeffs: &CoefficientField, f: &ScalarField) -> Result<BoundsReport> {
    let grid = coeffs.grid;
    grid.ensure_same(f.grid(), "coefficients vs field")?;
    let norms = weighted_lp_norm(f, 1.0, 0.0)? + weighted_lp_norm(f, 2.0, 0.0)?;
    let a_max = coeffs
        .a
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let a_ratio = if norms > 0.0 { a_max / norms } else { 0.0 };

    let conv = FreeSpaceConvolver::new(&grid);
    let lattice = PaddedLattice::new(&grid);
    let inv_sq: Vec<f64> = (0..lattice.len())
        .map(|i| {
            let r2 = norm_sq(lattice.displacement(i));
            if r2 > 0.0 {
                1.0 / r2
            } else {
                0.0
            }
        })
        .collect();
    let denom = conv.convolve(&conv.kernel_spectrum(&inv_sq, Parity::Even), f.values());
    let mut b_ratio = 0.0f64;
    for (idx, &d) in denom.iter().enumerate() {
        let b = coeffs.drift_at(idx);
        let mag = norm_sq(b).sqrt();
        if d > 0.0 && mag > 0.0 {
            b_ratio = b_ratio.max(mag / d);
        }
    }

    let reach = (1.0 / (coeffs.n as f64 * grid.spacing())).floor() as isize;
    let n = grid.cells() as isize;
    let values = f.values();
    let mut c_ratio = 0.0f64;
    for idx in 0..grid.len() {
        let c = coeffs.c[idx].abs();
        if c == 0.0 {
            continue;
        }
        let ijk = grid.unravel(idx).map(|x| x as isize);
        let mut local = 0.0f64;
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if dx * dx + dy * dy + dz * dz > reach * reach {
                        continue;
                    }
                    let (x, y, z) = (ijk[0] + dx, ijk[1] + dy, ijk[2] + dz);
                    if (0..n).contains(&x) && (0..n).contains(&y) && (0..n).contains(&z) {
                        local = local.max(values[grid.index(x as usize, y as usize, z as usize)]);
                    }
                }
            }
        }
        if local > 0.0 {
            c_ratio = c_ratio.max(c / local);
        }
    }
    Ok(BoundsReport {
        a_ratio,
        b_ratio,
        c_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityEstimate {
    /// `min_v lambda_min(A(v)) <v>^3`.
    pub c0: f64,
    pub index: usize,
    pub location: [f64; 3],
}

pub fn coercivity_estimate(coeffs: &CoefficientField) -> CoercivityEstimate {
    let grid = coeffs.grid;
    let mut best = CoercivityEstimate {
        c0: f64::INFINITY,
        index: 0,
        location: grid.velocity(0),
    };
    for idx in 0..grid.len() {
        let v = grid.velocity(idx);
        let value = coeffs.matrix_at(idx).eigenvalues()[0] * bracket(v).powi(3);
        if value < best.c0 {
            best = CoercivityEstimate {
                c0: value,
                index: idx,
                location: v,
            };
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kn_eval;
    use proptest::prelude::*;

    fn maxwellian(grid: VelocityGrid) -> ScalarField {
        ScalarField::from_fn(grid, |v| (-norm_sq(v)).exp())
    }

    fn mixture(grid: VelocityGrid, seed: u64) -> ScalarField {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let comps: Vec<(f64, [f64; 3], f64)> = (0..3)
            .map(|_| {
                (
                    0.2 + next(),
                    [next() * 2.0 - 1.0, next() * 2.0 - 1.0, next() * 2.0 - 1.0],
                    0.3 + next(),
                )
            })
            .collect();
        ScalarField::from_fn(grid, |v| {
            comps
                .iter()
                .map(|(rho, u, t)| {
                    let d = [v[0] - u[0], v[1] - u[1], v[2] - u[2]];
                    rho * (-norm_sq(d) / (2.0 * t)).exp()
                })
                .sum()
        })
    }

    #[test]
    fn fft_matches_direct() {
        let grid = VelocityGrid::new(8, 4.0).unwrap();
        let kernels = KernelFieldSet::new(&grid, 2).unwrap();
        let engine = CoefficientEngine::from_kernels(kernels.clone()).unwrap();
        for f in [maxwellian(grid), mixture(grid, 3)] {
            let fast = engine.compute(&f).unwrap();
            let slow = direct_coefficients(&f, &kernels).unwrap();
            assert!(fast.max_relative_discrepancy(&slow) <= 1e-12);
        }
    }

    #[test]
    fn delta_gives_kernel_translate() {
        let grid = VelocityGrid::new(8, 4.0).unwrap();
        let kernels = KernelFieldSet::new(&grid, 2).unwrap();
        let lattice = kernels.lattice();
        let src = grid.index(3, 4, 2);
        let mut values = vec![0.0; grid.len()];
        values[src] = 1.0 / grid.cell_volume();
        let f = ScalarField::new(grid, values).unwrap();
        for coeffs in [
            compute_coefficients(&f, &kernels).unwrap(),
            direct_coefficients(&f, &kernels).unwrap(),
        ] {
            let s = grid.unravel(src);
            for idx in 0..grid.len() {
                let a = grid.unravel(idx);
                let k = lattice.index_of([0, 1, 2].map(|c| a[c] as isize - s[c] as isize));
                for slot in 0..6 {
                    assert!((coeffs.a[slot][idx] - kernels.matrix[slot][k]).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn zero_field_and_guards() {
        let grid = VelocityGrid::new(8, 4.0).unwrap();
        let kernels = KernelFieldSet::new(&grid, 2).unwrap();
        let zero = ScalarField::zeros(grid);
        let d = direct_coefficients(&zero, &kernels).unwrap();
        assert_eq!(d, CoefficientField::zeros(grid, 2));
        let report = coefficient_bounds_report(&d, &zero).unwrap();
        assert_eq!(report, BoundsReport { a_ratio: 0.0, b_ratio: 0.0, c_ratio: 0.0 });
        assert_eq!(coercivity_estimate(&d).c0, 0.0);

        let big = VelocityGrid::new(18, 4.0).unwrap();
        let kb = KernelFieldSet::new(&big, 1).unwrap();
        assert!(matches!(
            direct_coefficients(&ScalarField::zeros(big), &kb),
            Err(LandauError::TooLarge(_))
        ));
        let other = VelocityGrid::new(10, 4.0).unwrap();
        assert!(compute_coefficients(&ScalarField::zeros(other), &kernels).is_err());
    }

    #[test]
    fn structural_properties() {
        let grid = VelocityGrid::new(16, 4.0).unwrap();
        let engine = CoefficientEngine::new(&grid, 2).unwrap();
        let f = mixture(grid, 11);
        let coeffs = engine.compute(&f).unwrap();
        // trace against an independent scalar convolution with 2 K_n
        let lattice = engine.kernels().lattice();
        let two_k: Vec<f64> = (0..lattice.len())
            .map(|i| 2.0 * kn_eval(2, norm_sq(lattice.displacement(i)).sqrt()))
            .collect();
        let conv = engine.convolver();
        let trace = conv.convolve(&conv.kernel_spectrum(&two_k, Parity::Even), f.values());
        for idx in 0..grid.len() {
            let m = coeffs.matrix_at(idx);
            let e = m.eigenvalues();
            assert!(e[0] >= -1e-12 * e[2]);
            assert!(coeffs.c[idx] <= 1e-14);
            assert!((m.trace() - trace[idx]).abs() <= 1e-12 * trace[idx]);
        }
        // linearity
        let g = maxwellian(grid);
        let combo = f.combine(0.7, &g, 1.9).unwrap();
        let lhs = engine.compute(&combo).unwrap();
        let cg = engine.compute(&g).unwrap();
        let mut rhs = coeffs.clone();
        for s in 0..6 {
            for i in 0..grid.len() {
                rhs.a[s][i] = 0.7 * coeffs.a[s][i] + 1.9 * cg.a[s][i];
            }
        }
        for s in 0..3 {
            for i in 0..grid.len() {
                rhs.b[s][i] = 0.7 * coeffs.b[s][i] + 1.9 * cg.b[s][i];
            }
        }
        for i in 0..grid.len() {
            rhs.c[i] = 0.7 * coeffs.c[i] + 1.9 * cg.c[i];
        }
        assert!(lhs.max_relative_discrepancy(&rhs) < 1e-13);
    }

    #[test]
    fn bounds_report_limits() {
        let grid = VelocityGrid::new(16, 4.0).unwrap();
        let kernels = KernelFieldSet::new(&grid, 2).unwrap();
        let f = maxwellian(grid);
        let coeffs = compute_coefficients(&f, &kernels).unwrap();
        let r = coefficient_bounds_report(&coeffs, &f).unwrap();
        assert!(r.a_ratio.is_finite() && r.a_ratio > 0.0);
        assert!(r.b_ratio > 0.0 && r.b_ratio <= 2.0 + 1e-9, "{r:?}");
        let eight_pi = 8.0 * std::f64::consts::PI;
        assert!(r.c_ratio > 0.0 && r.c_ratio <= eight_pi * (1.0 + 1e-12), "{r:?}");

        // single delta: c ratio is the largest sampled |q| h^3 inside the ball
        let src = grid.index(8, 8, 8);
        let mut values = vec![0.0; grid.len()];
        values[src] = 1.0 / grid.cell_volume();
        let delta = ScalarField::new(grid, values).unwrap();
        let cd = compute_coefficients(&delta, &kernels).unwrap();
        let rd = coefficient_bounds_report(&cd, &delta).unwrap();
        let qmax = kernels
            .reaction
            .values
            .iter()
            .fold(0.0f64, |m, q| m.max(q.abs()))
            * grid.cell_volume();
        assert!((rd.c_ratio - qmax).abs() < 1e-12 * qmax, "{} vs {qmax}", rd.c_ratio);
        assert!(rd.c_ratio <= eight_pi);
    }

    #[test]
    fn coercivity_positive_for_maxwellian() {
        let grid = VelocityGrid::new(16, 4.0).unwrap();
        let kernels = KernelFieldSet::new(&grid, 2).unwrap();
        let coeffs = compute_coefficients(&maxwellian(grid), &kernels).unwrap();
        let est = coercivity_estimate(&coeffs);
        assert!(est.c0 > 0.0);
        assert_eq!(est.location, grid.velocity(est.index));
    }

    #[test]
    fn log_gradient_is_exact_for_gaussians() {
        let grid = VelocityGrid::new(12, 3.0).unwrap();
        let f = maxwellian(grid);
        let lg = log_gradient(&f, 1e-14);
        for idx in 0..grid.len() {
            let ijk = grid.unravel(idx);
            let interior = ijk.iter().all(|&c| c > 0 && c + 1 < 12);
            assert!(lg.active[idx]);
            if interior {
                let v = grid.velocity(idx);
                for a in 0..3 {
                    assert!((lg.components[a][idx] + 2.0 * v[a]).abs() < 1e-12);
                }
            }
        }
        let mut values = f.values().to_vec();
        values[grid.index(5, 5, 5)] = 0.0;
        let gated = log_gradient(&ScalarField::new(grid, values).unwrap(), 1e-14);
        assert!(!gated.active[grid.index(5, 5, 5)]);
        assert!(!gated.active[grid.index(6, 5, 5)]);
        assert_eq!(gated.at(grid.index(5, 4, 5)), [0.0; 3]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn psd_and_nonpositive_reaction(seed in 0u64..1000) {
            let grid = VelocityGrid::new(8, 3.0).unwrap();
            let engine = CoefficientEngine::new(&grid, 2).unwrap();
            let coeffs = engine.compute(&mixture(grid, seed)).unwrap();
            for idx in 0..grid.len() {
                let e = coeffs.matrix_at(idx).eigenvalues();
                prop_assert!(e[0] >= -1e-12 * e[2]);
                prop_assert!(coeffs.c[idx] <= 1e-14);
            }
        }
    }
}
