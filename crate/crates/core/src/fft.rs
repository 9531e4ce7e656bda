//! Free-space discrete convolution on the velocity grid by zero padding to
//! `M = 2N` points per axis.
//!
//! Spectra use the real-to-complex half layout: `M/2 + 1` bins along x and
//! `M` along y and z, flattened as `kx + (M/2 + 1) * (ky + M * kz)`.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::VelocityGrid;
use crate::kernel::PaddedLattice;

/// Symmetry of a kernel under `z -> -z`; decides which half of its
/// spectrum is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Spectrum of a kernel with exact parity: the real part for even kernels,
/// the imaginary part for odd ones.
#[derive(Debug, Clone)]
pub struct KernelSpectrum {
    parity: Parity,
    values: Vec<f64>,
}

impl KernelSpectrum {
    pub fn parity(&self) -> Parity {
        self.parity
    }
}

#[derive(Clone)]
pub struct FreeSpaceConvolver {
    cells: usize,
    size: usize,
    half: usize,
    cell_volume: f64,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FreeSpaceConvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FreeSpaceConvolver")
            .field("cells", &self.cells)
            .field("size", &self.size)
            .finish()
    }
}

impl FreeSpaceConvolver {
    pub fn new(grid: &VelocityGrid) -> Self {
        let cells = grid.cells();
        let size = 2 * cells;
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        FreeSpaceConvolver {
            cells,
            size,
            half: size / 2 + 1,
            cell_volume: grid.cell_volume(),
            r2c: real_planner.plan_fft_forward(size),
            c2r: real_planner.plan_fft_inverse(size),
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn spectrum_len(&self) -> usize {
        self.half * self.size * self.size
    }

    /// Transform of a grid field zero-padded onto the `M^3` lattice.
    pub fn forward_field(&self, values: &[f64]) -> Vec<Complex64> {
        let n = self.cells;
        assert_eq!(values.len(), n * n * n, "field length does not match grid");
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];
        self.real_rows_forward(&mut spec, n, |y, z, row| {
            let start = n * (y + n * z);
            row[..n].copy_from_slice(&values[start..start + n]);
            row[n..].fill(0.0);
        });
        self.axis_y(&mut spec, n, self.forward.as_ref(), self.size);
        self.axis_z(&mut spec, self.forward.as_ref(), self.size);
        spec
    }

    /// Transform of a full `M^3` lattice array, x fastest.
    pub fn forward_lattice(&self, lattice: &[f64]) -> Vec<Complex64> {
        let m = self.size;
        assert_eq!(lattice.len(), m * m * m, "lattice length mismatch");
        let mut spec = vec![Complex64::new(0.0, 0.0); self.spectrum_len()];
        self.real_rows_forward(&mut spec, m, |y, z, row| {
            let start = m * (y + m * z);
            row.copy_from_slice(&lattice[start..start + m]);
        });
        self.axis_y(&mut spec, m, self.forward.as_ref(), m);
        self.axis_z(&mut spec, self.forward.as_ref(), m);
        spec
    }

    /// Spectrum of a sampled kernel. Slots at offset `-N` are dropped first,
    /// which makes the lattice exactly even or odd, so the discarded half of
    /// the spectrum is rounding noise.
    pub fn kernel_spectrum(&self, lattice_values: &[f64], parity: Parity) -> KernelSpectrum {
        let lattice = PaddedLattice {
            cells: self.cells,
            size: self.size,
            spacing: 0.0,
        };
        let cleaned: Vec<f64> = lattice_values
            .iter()
            .enumerate()
            .map(|(i, &v)| if lattice.is_unreachable(i) { 0.0 } else { v })
            .collect();
        let spec = self.forward_lattice(&cleaned);
        let values = match parity {
            Parity::Even => spec.iter().map(|c| c.re).collect(),
            Parity::Odd => spec.iter().map(|c| c.im).collect(),
        };
        KernelSpectrum { parity, values }
    }

    /// `out (+)= kernel * field` in spectral space.
    pub fn multiply_into(
        &self,
        kernel: &KernelSpectrum,
        field: &[Complex64],
        out: &mut [Complex64],
        accumulate: bool,
    ) {
        assert_eq!(field.len(), kernel.values.len());
        assert_eq!(out.len(), kernel.values.len());
        let iter = out.iter_mut().zip(field).zip(&kernel.values);
        match (kernel.parity, accumulate) {
            (Parity::Even, false) => iter.for_each(|((o, f), k)| *o = f * k),
            (Parity::Even, true) => iter.for_each(|((o, f), k)| *o += f * k),
            (Parity::Odd, false) => {
                iter.for_each(|((o, f), k)| *o = Complex64::new(-f.im * k, f.re * k))
            }
            (Parity::Odd, true) => {
                iter.for_each(|((o, f), k)| *o += Complex64::new(-f.im * k, f.re * k))
            }
        }
    }

    /// Inverse transform restricted to the original grid block, scaled to
    /// the midpoint convolution `sum_w K(v - w) f(w) h^3`.
    pub fn inverse_to_field(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        let n = self.cells;
        let m = self.size;
        assert_eq!(spec.len(), self.spectrum_len());
        self.axis_z(&mut spec, self.inverse.as_ref(), n);
        self.axis_y_planes(&mut spec, n, self.inverse.as_ref(), n);
        let scale = self.cell_volume / (m * m * m) as f64;
        let mut out = vec![0.0; n * n * n];
        let mut row_in = self.c2r.make_input_vec();
        let mut row_out = self.c2r.make_output_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        for z in 0..n {
            for y in 0..n {
                let start = self.half * (y + m * z);
                row_in.copy_from_slice(&spec[start..start + self.half]);
                row_in[0].im = 0.0;
                row_in[self.half - 1].im = 0.0;
                self.c2r
                    .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                    .expect("inverse real transform");
                let dst = n * (y + n * z);
                for (o, v) in out[dst..dst + n].iter_mut().zip(&row_out[..n]) {
                    *o = v * scale;
                }
            }
        }
        out
    }

    /// One-shot convolution of a grid field with a kernel spectrum.
    pub fn convolve(&self, kernel: &KernelSpectrum, values: &[f64]) -> Vec<f64> {
        let field = self.forward_field(values);
        let mut out = vec![Complex64::new(0.0, 0.0); field.len()];
        self.multiply_into(kernel, &field, &mut out, false);
        self.inverse_to_field(out)
    }

    fn real_rows_forward(
        &self,
        spec: &mut [Complex64],
        rows: usize,
        mut fill: impl FnMut(usize, usize, &mut [f64]),
    ) {
        let m = self.size;
        let mut row_in = self.r2c.make_input_vec();
        let mut row_out = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for z in 0..rows {
            for y in 0..rows {
                fill(y, z, &mut row_in);
                self.r2c
                    .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                    .expect("forward real transform");
                let start = self.half * (y + m * z);
                spec[start..start + self.half].copy_from_slice(&row_out);
            }
        }
    }

    /// Transforms along y on the first `planes` z-planes.
    fn axis_y(&self, spec: &mut [Complex64], planes: usize, fft: &dyn Fft<f64>, keep: usize) {
        self.axis_y_planes(spec, planes, fft, keep)
    }

    fn axis_y_planes(
        &self,
        spec: &mut [Complex64],
        planes: usize,
        fft: &dyn Fft<f64>,
        keep: usize,
    ) {
        let m = self.size;
        let hx = self.half;
        let mut buf = vec![Complex64::new(0.0, 0.0); hx * m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for z in 0..planes {
            let plane = &mut spec[hx * m * z..hx * m * (z + 1)];
            for ky in 0..m {
                for kx in 0..hx {
                    buf[kx * m + ky] = plane[kx + hx * ky];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for ky in 0..keep {
                for kx in 0..hx {
                    plane[kx + hx * ky] = buf[kx * m + ky];
                }
            }
        }
    }

    /// Transforms along z for every (kx, ky); only `keep` output planes are
    /// written back.
    fn axis_z(&self, spec: &mut [Complex64], fft: &dyn Fft<f64>, keep: usize) {
        let m = self.size;
        let hx = self.half;
        let stride = hx * m;
        let mut buf = vec![Complex64::new(0.0, 0.0); hx * m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for ky in 0..m {
            for kz in 0..m {
                let src = hx * ky + stride * kz;
                for kx in 0..hx {
                    buf[kx * m + kz] = spec[src + kx];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for kz in 0..keep {
                let dst = hx * ky + stride * kz;
                for kx in 0..hx {
                    spec[dst + kx] = buf[kx * m + kz];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::PaddedLattice;

    fn direct(grid: &VelocityGrid, kernel: &[f64], f: &[f64]) -> Vec<f64> {
        let lat = PaddedLattice::new(grid);
        let n = grid.cells();
        let h3 = grid.cell_volume();
        (0..grid.len())
            .map(|i| {
                let a = grid.unravel(i);
                let mut s = 0.0;
                for (j, fj) in f.iter().enumerate() {
                    let b = grid.unravel(j);
                    let d = [0, 1, 2].map(|c| a[c] as isize - b[c] as isize);
                    s += kernel[lat.index_of(d)] * fj;
                }
                let _ = n;
                s * h3
            })
            .collect()
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn matches_direct_sum_for_even_and_odd_kernels() {
        let grid = VelocityGrid::new(8, 3.0).unwrap();
        let lat = PaddedLattice::new(&grid);
        let conv = FreeSpaceConvolver::new(&grid);
        let mut seed = 7;
        let f: Vec<f64> = (0..grid.len()).map(|_| lcg(&mut seed)).collect();
        let even: Vec<f64> = (0..lat.len())
            .map(|i| {
                let z = lat.displacement(i);
                (-(z[0] * z[0] + 2.0 * z[1] * z[1] + 0.5 * z[2] * z[2])).exp()
            })
            .collect();
        let odd: Vec<f64> = (0..lat.len())
            .map(|i| {
                let z = lat.displacement(i);
                z[1] * (-(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / 4.0).exp()
            })
            .collect();
        for (kernel, parity) in [(&even, Parity::Even), (&odd, Parity::Odd)] {
            let spec = conv.kernel_spectrum(kernel, parity);
            let fast = conv.convolve(&spec, &f);
            let slow = direct(&grid, kernel, &f);
            let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-13 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn delta_reproduces_kernel_translate() {
        let grid = VelocityGrid::new(8, 4.0).unwrap();
        let lat = PaddedLattice::new(&grid);
        let conv = FreeSpaceConvolver::new(&grid);
        let kernel: Vec<f64> = (0..lat.len())
            .map(|i| 1.0 / (1.0 + crate::grid::norm_sq(lat.displacement(i))))
            .collect();
        let spec = conv.kernel_spectrum(&kernel, Parity::Even);
        let src = grid.index(2, 5, 3);
        let mut f = vec![0.0; grid.len()];
        f[src] = 1.0 / grid.cell_volume();
        let out = conv.convolve(&spec, &f);
        let s = grid.unravel(src);
        for (i, v) in out.iter().enumerate() {
            let a = grid.unravel(i);
            let d = [0, 1, 2].map(|c| a[c] as isize - s[c] as isize);
            assert!((v - kernel[lat.index_of(d)]).abs() < 1e-14);
        }
    }
}
