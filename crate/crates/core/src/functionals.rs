//! Scalar functionals of a distribution: conserved quantities, entropy,
//! entropy dissipation, Fisher information, weighted norms and the weighted
//! relative entropy against `M = exp(-|v|^2)`.

use crate::coefficients::{log_gradient, FluxCoefficients, LogGradient};
use crate::error::{LandauError, Result};
use crate::grid::{
    bracket, neighbor_or_zero, norm_sq, pairwise_sum_by, weighted_lp_norm, ScalarField,
};
use crate::kernel::KernelFieldSet;

/// Values at or below this count as zero in `x ln x`.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Default relative gate for quotient integrands.
pub const DEFAULT_F_TOL: f64 = 1e-14;

/// Largest grid accepted by the double-sum dissipation.
pub const DOUBLE_MAX_CELLS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: [f64; 3],
    /// `int f |v|^2 / 2`.
    pub energy: f64,
}

pub fn conserved_quantities(f: &ScalarField) -> Conserved {
    let grid = *f.grid();
    let h3 = grid.cell_volume();
    let values = f.values();
    let mass = pairwise_sum_by(values.len(), |i| values[i]) * h3;
    let momentum =
        std::array::from_fn(|a| pairwise_sum_by(values.len(), |i| values[i] * grid.velocity(i)[a]) * h3);
    let energy = pairwise_sum_by(values.len(), |i| 0.5 * values[i] * norm_sq(grid.velocity(i))) * h3;
    Conserved {
        mass,
        momentum,
        energy,
    }
}

#[inline]
fn x_ln_x(x: f64) -> f64 {
    if x <= ENTROPY_FLOOR {
        0.0
    } else {
        x * x.ln()
    }
}

/// `H(f) = int f ln f`.
pub fn entropy(f: &ScalarField) -> f64 {
    let values = f.values();
    pairwise_sum_by(values.len(), |i| x_ln_x(values[i])) * f.grid().cell_volume()
}

/// `sum f a . (A a - B) h^3` over cells where the log-gradient is active.
///
/// Equals the symmetric double sum of [`dissipation_double`] exactly in
/// exact arithmetic when both use the same gated log-gradient.
pub fn dissipation_single(f: &ScalarField, flux: &FluxCoefficients) -> f64 {
    let values = f.values();
    let lg = &flux.log_grad;
    let terms = |i: usize| {
        if !lg.active[i] {
            return 0.0;
        }
        let a = lg.at(i);
        let m = crate::linalg::Sym3::from_components(std::array::from_fn(|s| flux.a[s][i]));
        let aa = m.mul_vec(a);
        let mut s = 0.0;
        for k in 0..3 {
            s += a[k] * (aa[k] - flux.drift[k][i]);
        }
        values[i] * s
    };
    pairwise_sum_by(values.len(), terms) * f.grid().cell_volume()
}

/// `1/2 sum_v sum_w K_n Pi(v - w) : (a_v - a_w)^{(x)2} f_v f_w h^6` with the
/// same sampled kernel and gated log-gradient as the single form.
pub fn dissipation_double(f: &ScalarField, kernels: &KernelFieldSet, f_tol: f64) -> Result<f64> {
    let grid = *f.grid();
    grid.ensure_same(kernels.grid(), "field vs kernels")?;
    if grid.cells() > DOUBLE_MAX_CELLS {
        return Err(LandauError::TooLarge(format!(
            "double-sum dissipation needs N <= {DOUBLE_MAX_CELLS}, got {}",
            grid.cells()
        )));
    }
    let lg = log_gradient(f, f_tol);
    let lattice = kernels.lattice();
    let values = f.values();
    let coords: Vec<[isize; 3]> = (0..grid.len())
        .map(|i| grid.unravel(i).map(|c| c as isize))
        .collect();
    let h3 = grid.cell_volume();
    let rows: Vec<f64> = (0..grid.len())
        .map(|v| {
            let fv = values[v];
            if fv == 0.0 {
                return 0.0;
            }
            let av = lg.at(v);
            let mut acc = 0.0;
            for w in 0..grid.len() {
                let fw = values[w];
                if fw == 0.0 || w == v {
                    continue;
                }
                let aw = lg.at(w);
                let diff = [av[0] - aw[0], av[1] - aw[1], av[2] - aw[2]];
                if diff == [0.0; 3] {
                    continue;
                }
                let d = [0, 1, 2].map(|c| coords[v][c] - coords[w][c]);
                acc += fw * kernels.matrix_at(lattice.index_of(d)).quadratic_form(diff);
            }
            fv * acc
        })
        .collect();
    Ok(0.5 * crate::grid::pairwise_sum(&rows) * h3 * h3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fisher {
    /// `int |grad f|^2 / f`.
    pub information: f64,
    /// `int |grad sqrt f|^2`.
    pub sqrt_form: f64,
}

/// Both Fisher discretizations with central differences, zero ghosts and
/// cells gated by `f > f_tol max f`. `I = 4 sqrt_form` holds only up to
/// discretization error.
pub fn fisher(f: &ScalarField, f_tol: f64) -> Fisher {
    let grid = *f.grid();
    let values = f.values();
    let sqrt: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let threshold = f_tol * f.max().max(0.0);
    let inv_2h = 1.0 / (2.0 * grid.spacing());
    let central = |field: &[f64], idx: usize, axis: usize| {
        (neighbor_or_zero(&grid, field, idx, axis, 1) - neighbor_or_zero(&grid, field, idx, axis, -1))
            * inv_2h
    };
    let info = pairwise_sum_by(values.len(), |i| {
        let fi = values[i];
        if fi <= threshold || fi <= 0.0 {
            return 0.0;
        }
        (0..3).map(|a| central(values, i, a).powi(2)).sum::<f64>() / fi
    });
    let sqrt_form = pairwise_sum_by(values.len(), |i| {
        let fi = values[i];
        if fi <= threshold || fi <= 0.0 {
            return 0.0;
        }
        (0..3).map(|a| central(&sqrt, i, a).powi(2)).sum::<f64>()
    });
    let h3 = grid.cell_volume();
    Fisher {
        information: info * h3,
        sqrt_form: sqrt_form * h3,
    }
}

/// `int (|grad f|^2 / f) <v>^{-3}` with the Fisher gating.
pub fn weighted_fisher(f: &ScalarField, f_tol: f64) -> f64 {
    let grid = *f.grid();
    let values = f.values();
    let threshold = f_tol * f.max().max(0.0);
    let inv_2h = 1.0 / (2.0 * grid.spacing());
    let sum = pairwise_sum_by(values.len(), |i| {
        let fi = values[i];
        if fi <= threshold || fi <= 0.0 {
            return 0.0;
        }
        let g2: f64 = (0..3)
            .map(|a| {
                ((neighbor_or_zero(&grid, values, i, a, 1) - neighbor_or_zero(&grid, values, i, a, -1))
                    * inv_2h)
                    .powi(2)
            })
            .sum();
        g2 / fi * bracket(grid.velocity(i)).powi(-3)
    });
    sum * grid.cell_volume()
}

/// `H_3(f | M) = int (f ln f - f + f |v|^2 + M) <v>^3`, evaluated in the
/// relative form `M (x ln x - x + 1) <v>^3`, `x = f / M`, so each cell is
/// nonnegative and `f = M` gives exactly zero.
pub fn h3_relative(f: &ScalarField) -> f64 {
    let grid = *f.grid();
    let values = f.values();
    let sum = pairwise_sum_by(values.len(), |i| h3_integrand(values[i], grid.velocity(i)));
    sum * grid.cell_volume()
}

/// Cell integrand of [`h3_relative`].
pub fn h3_integrand(f: f64, v: [f64; 3]) -> f64 {
    let r2 = norm_sq(v);
    let m = (-r2).exp();
    let integrand = if f <= ENTROPY_FLOOR {
        m
    } else if m > 0.0 {
        f * (f / m).ln() - f + m
    } else {
        f * (f.ln() + r2) - f
    };
    integrand * bracket(v).powi(3)
}

/// One row of diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub fisher: f64,
    pub fisher_sqrt: f64,
    /// `||f||_{L^2_k}` in the order of the series' `k_list`.
    pub l2: Vec<f64>,
    /// `||f||_{L^3_{-3}}`.
    pub l3_m3: f64,
    pub h3: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub dt: f64,
}

/// Assembles every functional for one state.
pub fn record(
    f: &ScalarField,
    t: f64,
    dt: f64,
    flux: &FluxCoefficients,
    k_list: &[f64],
    f_tol: f64,
) -> Result<DiagnosticsRecord> {
    let c = conserved_quantities(f);
    let fi = fisher(f, f_tol);
    let l2 = k_list
        .iter()
        .map(|&k| weighted_lp_norm(f, 2.0, k))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DiagnosticsRecord {
        t,
        mass: c.mass,
        momentum: c.momentum,
        energy: c.energy,
        entropy: entropy(f),
        dissipation: dissipation_single(f, flux),
        fisher: fi.information,
        fisher_sqrt: fi.sqrt_form,
        l2,
        l3_m3: weighted_lp_norm(f, 3.0, -3.0)?,
        h3: h3_relative(f),
        min_f: f.min(),
        max_f: f.max(),
        dt,
    })
}

/// Log-gradient with the functional gate, re-exported for callers that do
/// not hold flux coefficients.
pub fn gated_log_gradient(f: &ScalarField, f_tol: f64) -> LogGradient {
    log_gradient(f, f_tol)
}
