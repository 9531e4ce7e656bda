//! Time-series checks of the a priori estimates: entropy identity, Fisher
//! monotonicity and envelope, the weighted `L^2` window with its comparison
//! ODE, the `H_3` inequality, coercivity of the dissipation, interpolation
//! inequalities, a weak-form residual and moment propagation.

use std::fmt;

use crate::coefficients::{compute_coefficients, CoefficientField};
use crate::error::{LandauError, Result};
use crate::functionals::{weighted_fisher, DiagnosticsRecord};
use crate::grid::{
    bracket, gradient, norm_sq, pairwise_sum_by, weighted_integral,
    weighted_lp_norm, ScalarField,
};
use crate::kernel::KernelFieldSet;

/// Ordered `key = value` metadata carried with a series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn insert(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Regularization index recorded by the run, if any.
    pub fn n(&self) -> Option<u32> {
        self.get("n").and_then(|v| v.parse().ok())
    }

    pub fn fingerprint(&self) -> Option<&str> {
        self.get("fingerprint")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub k_list: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    pub provenance: Provenance,
}

impl TimeSeries {
    /// Checks that times increase strictly and every record carries one
    /// weighted norm per entry of `k_list`.
    pub fn new(
        k_list: Vec<f64>,
        records: Vec<DiagnosticsRecord>,
        provenance: Provenance,
    ) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.l2.len() != k_list.len() {
                return Err(LandauError::InvalidArgument(format!(
                    "record {i} has {} weighted norms, expected {}",
                    r.l2.len(),
                    k_list.len()
                )));
            }
            if i > 0 && r.t <= records[i - 1].t {
                return Err(LandauError::InvalidArgument(format!(
                    "times must increase strictly: record {i} at t = {} follows t = {}",
                    r.t,
                    records[i - 1].t
                )));
            }
        }
        Ok(TimeSeries {
            k_list,
            records,
            provenance,
        })
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn k_index(&self, k: f64) -> Option<usize> {
        self.k_list.iter().position(|&x| (x - k).abs() <= 1e-12 * k.abs().max(1.0))
    }

    /// `Y = ||f||_{L^2_k}^2` per record.
    pub fn y_column(&self, k: f64) -> Result<Vec<f64>> {
        let idx = self.k_index(k).ok_or_else(|| {
            LandauError::InvalidArgument(format!("series has no l2_{k} column"))
        })?;
        Ok(self.records.iter().map(|r| r.l2[idx].powi(2)).collect())
    }

    /// Largest gap between records over the median gap.
    pub fn max_gap_ratio(&self) -> f64 {
        let mut gaps: Vec<f64> = self.records.windows(2).map(|w| w[1].t - w[0].t).collect();
        if gaps.is_empty() {
            return 1.0;
        }
        let max = gaps.iter().cloned().fold(0.0f64, f64::max);
        gaps.sort_by(|a, b| a.total_cmp(b));
        max / gaps[gaps.len() / 2]
    }

    fn window(&self, s: f64, t: f64) -> &[DiagnosticsRecord] {
        let eps = 1e-12 * t.abs().max(1.0);
        let lo = self.records.partition_point(|r| r.t < s - eps);
        let hi = self.records.partition_point(|r| r.t <= t + eps);
        &self.records[lo..hi.max(lo)]
    }
}

fn trapezoid(records: &[DiagnosticsRecord], value: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    records
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (value(&w[0]) + value(&w[1])))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyIdentity {
    /// `H(t) - H(s) + int_s^t (D + I / n)`.
    pub residual: f64,
    /// `residual / |H(s)|`.
    pub normalized: f64,
    /// `H(t) - H(s) + int_s^t D` without the diffusion production.
    pub landau_only: f64,
    pub s: f64,
    pub t: f64,
}

/// Entropy balance over the records in `[s, t]`. The `1/n` diffusion term
/// produces entropy at rate `I / n`; it enters when the series records `n`.
pub fn check_entropy_identity(series: &TimeSeries, s: f64, t: f64) -> Result<EntropyIdentity> {
    if t < s {
        return Err(LandauError::InvalidArgument(format!("need s <= t, got [{s}, {t}]")));
    }
    let window = series.window(s, t);
    if window.is_empty() || (t > s && window.len() < 2) {
        return Err(LandauError::InsufficientRecords(format!(
            "{} record(s) in [{s}, {t}]",
            window.len()
        )));
    }
    let first = &window[0];
    let last = &window[window.len() - 1];
    let tol = 1e-9 * t.abs().max(1.0);
    if (first.t - s).abs() > tol || (last.t - t).abs() > tol {
        return Err(LandauError::InsufficientRecords(format!(
            "records span [{}, {}], not [{s}, {t}]",
            first.t, last.t
        )));
    }
    let inv_n = series.provenance.n().map_or(0.0, |n| 1.0 / n as f64);
    let landau = trapezoid(window, |r| r.dissipation);
    let diffusion = trapezoid(window, |r| r.fisher) * inv_n;
    let dh = last.entropy - first.entropy;
    let residual = dh + landau + diffusion;
    let scale = if first.entropy != 0.0 { first.entropy.abs() } else { 1.0 };
    Ok(EntropyIdentity {
        residual,
        normalized: residual / scale,
        landau_only: dh + landau,
        s: first.t,
        t: last.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneViolation {
    pub index: usize,
    pub t_before: f64,
    pub t_after: f64,
    pub before: f64,
    pub after: f64,
}

/// Consecutive pairs with `I(t_{j+1}) > I(t_j) (1 + tol)`.
pub fn check_fisher_monotone(records: &[DiagnosticsRecord], tol: f64) -> Vec<MonotoneViolation> {
    records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].fisher > w[0].fisher * (1.0 + tol))
        .map(|(i, w)| MonotoneViolation {
            index: i,
            t_before: w[0].t,
            t_after: w[1].t,
            before: w[0].fisher,
            after: w[1].fisher,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T0Selection {
    pub t0: f64,
    pub index: usize,
    /// `||f(t0)||_{L^3_{-3}}`.
    pub value: f64,
    /// Time average of the same norm over the window.
    pub window_average: f64,
}

/// Record in `[0, t/2]` minimizing `||f||_{L^3_{-3}}`.
pub fn select_t0(series: &TimeSeries, t: f64) -> Result<T0Selection> {
    let window = series.window(f64::NEG_INFINITY, 0.5 * t);
    if window.is_empty() {
        return Err(LandauError::InsufficientRecords(format!(
            "no records in [0, {}]",
            0.5 * t
        )));
    }
    let (index, best) = window
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.l3_m3.total_cmp(&b.1.l3_m3))
        .expect("nonempty");
    let span = window[window.len() - 1].t - window[0].t;
    let window_average = if span > 0.0 {
        trapezoid(window, |r| r.l3_m3) / span
    } else {
        best.l3_m3
    };
    Ok(T0Selection {
        t0: best.t,
        index,
        value: best.l3_m3,
        window_average,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeBoundParams {
    pub ck: f64,
    pub t0: f64,
    /// `Y(t0) = ||f(t0)||_{L^2_k}^2`.
    pub y0: f64,
}

impl OdeBoundParams {
    fn validate(&self) -> Result<()> {
        if !(self.ck > 0.0 && self.ck.is_finite()) {
            return Err(LandauError::InvalidArgument(format!("C_k must be positive, got {}", self.ck)));
        }
        if !(self.y0 >= 0.0 && self.y0.is_finite()) {
            return Err(LandauError::InvalidArgument(format!("Y0 must be >= 0, got {}", self.y0)));
        }
        Ok(())
    }
}

/// `t1 = t0 + ln(1 + 1 / (1 + 2 Y0^2)) / (2 C_k)`.
pub fn compute_t1(params: &OdeBoundParams) -> Result<f64> {
    params.validate()?;
    let y2 = params.y0 * params.y0;
    Ok(params.t0 + (1.0 / (1.0 + 2.0 * y2)).ln_1p() / (2.0 * params.ck))
}

/// Bound on `Y(sigma)^2` from the comparison ODE `Y' = C_k (Y + Y^3)`:
/// `1 / (exp(-2 C_k (sigma - t0)) (1 / Y0^2 + 1) - 1)`.
pub fn ode_envelope(params: &OdeBoundParams, sigma: f64) -> Result<f64> {
    params.validate()?;
    if sigma < params.t0 {
        return Err(LandauError::InvalidArgument(format!(
            "sigma = {sigma} precedes t0 = {}",
            params.t0
        )));
    }
    if params.y0 == 0.0 {
        return Ok(0.0);
    }
    let y2 = params.y0 * params.y0;
    let denom = (-2.0 * params.ck * (sigma - params.t0)).exp() * (1.0 / y2 + 1.0) - 1.0;
    if denom <= 0.0 {
        return Err(LandauError::WindowExceeded(format!(
            "envelope blows up before sigma = {sigma}"
        )));
    }
    Ok(1.0 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkCalibration {
    /// Calibrated constant, at least 1.
    pub ck: f64,
    /// Largest observed `Y' / (Y + Y^3)` before flooring.
    pub raw: f64,
    /// Midpoint time where `raw` occurs.
    pub argmax_t: f64,
}

/// Largest finite-difference ratio `Y' / (Y + Y^3)` with `Y` at interval
/// midpoints, floored at 1.
#[allow(non_snake_case)]
pub fn calibrate_Ck(series: &TimeSeries, k: f64) -> Result<CkCalibration> {
    calibrate_ck_records(series, k, &series.records)
}

fn calibrate_ck_records(
    series: &TimeSeries,
    k: f64,
    records: &[DiagnosticsRecord],
) -> Result<CkCalibration> {
    if records.len() < 3 {
        return Err(LandauError::InsufficientRecords(format!(
            "C_k calibration needs 3 records, got {}",
            records.len()
        )));
    }
    let idx = series
        .k_index(k)
        .ok_or_else(|| LandauError::InvalidArgument(format!("series has no l2_{k} column")))?;
    let mut raw = f64::NEG_INFINITY;
    let mut argmax_t = records[0].t;
    for w in records.windows(2) {
        let (y0, y1) = (w[0].l2[idx].powi(2), w[1].l2[idx].powi(2));
        let ym = 0.5 * (y0 + y1);
        let denom = ym + ym.powi(3);
        if denom <= 0.0 {
            continue;
        }
        let ratio = (y1 - y0) / (w[1].t - w[0].t) / denom;
        if ratio > raw {
            raw = ratio;
            argmax_t = 0.5 * (w[0].t + w[1].t);
        }
    }
    Ok(CkCalibration {
        ck: raw.max(1.0),
        raw,
        argmax_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2WindowReport {
    pub k: f64,
    pub t0: f64,
    pub y0: f64,
    pub ck: f64,
    pub t1: f64,
    pub window_end: f64,
    pub sup_y: f64,
    /// `sqrt 2 * Y(t0) * (1 + 1e-6)`.
    pub bound: f64,
    pub pass: bool,
}

/// Runs `t0` selection, `C_k` calibration and `t1`, then checks
/// `sup_{[t0, min(t1, t)]} Y <= sqrt 2 Y(t0)`.
pub fn check_l2_window(
    series: &TimeSeries,
    k: f64,
    t: f64,
    ck_override: Option<f64>,
) -> Result<L2WindowReport> {
    let sel = select_t0(series, t)?;
    let y = series.y_column(k)?;
    let y0 = y[sel.index];
    let ck = match ck_override {
        Some(c) => c,
        None => calibrate_ck_records(series, k, series.window(f64::NEG_INFINITY, t))?.ck,
    };
    let t1 = compute_t1(&OdeBoundParams { ck, t0: sel.t0, y0 })?;
    let window_end = t1.min(t);
    let eps = 1e-12 * window_end.abs().max(1.0);
    let sup_y = series
        .records
        .iter()
        .zip(&y)
        .filter(|(r, _)| r.t >= sel.t0 - eps && r.t <= window_end + eps)
        .map(|(_, v)| *v)
        .fold(y0, f64::max);
    let bound = std::f64::consts::SQRT_2 * y0 * (1.0 + 1e-6);
    Ok(L2WindowReport {
        k,
        t0: sel.t0,
        y0,
        ck,
        t1,
        window_end,
        sup_y,
        bound,
        pass: sup_y <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H3Report {
    pub s1: f64,
    pub s2: f64,
    pub c0: f64,
    /// Smallest `K >= 0` for which the inequality holds.
    pub k_min: f64,
    /// `H_3(s2) + c0 int I`.
    pub lhs: f64,
    /// `int (1 + ||f||_{L^2_2})^3`.
    pub growth: f64,
    /// Right side minus left side at `k_min`.
    pub margin: f64,
}

/// `H_3(s2) + c0 int_{s1}^{s2} I <= H_3(s1) + K int_{s1}^{s2} (1 + ||f||_{L^2_2})^3`,
/// solved for the smallest empirical `K`.
pub fn check_h3_inequality(series: &TimeSeries, s1: f64, s2: f64, c0: f64) -> Result<H3Report> {
    if !(0.0 <= s1 && s1 < s2 && s2 <= 1.0) {
        return Err(LandauError::InvalidArgument(format!(
            "need 0 <= s1 < s2 <= 1, got [{s1}, {s2}]"
        )));
    }
    let idx = series
        .k_index(2.0)
        .ok_or_else(|| LandauError::InvalidArgument("series has no l2_2 column".into()))?;
    let window = series.window(s1, s2);
    if window.len() < 2 {
        return Err(LandauError::InsufficientRecords(format!(
            "{} record(s) in [{s1}, {s2}]",
            window.len()
        )));
    }
    let first = &window[0];
    let last = &window[window.len() - 1];
    let lhs = last.h3 + c0 * trapezoid(window, |r| r.fisher);
    let growth = trapezoid(window, |r| (1.0 + r.l2[idx]).powi(3));
    let k_min = ((lhs - first.h3) / growth).max(0.0);
    let margin = first.h3 + k_min * growth - lhs;
    Ok(H3Report {
        s1: first.t,
        s2: last.t,
        c0,
        k_min,
        lhs,
        growth,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeStat {
    /// `sup_{t >= t_min} I(t) t^{9/2}`.
    pub stat: f64,
    pub argmax_t: f64,
    pub violations: Vec<MonotoneViolation>,
}

pub fn fisher_envelope_stat(series: &TimeSeries, t_min: f64, tol: f64) -> Result<EnvelopeStat> {
    let window = series.window(t_min, f64::INFINITY);
    if window.is_empty() {
        return Err(LandauError::InsufficientRecords(format!("no records with t >= {t_min}")));
    }
    let (stat, argmax_t) = window
        .iter()
        .map(|r| (r.fisher * r.t.powf(4.5), r.t))
        .fold((f64::NEG_INFINITY, window[0].t), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        });
    Ok(EnvelopeStat {
        stat,
        argmax_t,
        violations: check_fisher_monotone(window, tol),
    })
}

/// `c1 = (D + 1) / int (|grad f|^2 / f) <v>^{-3}`; `+inf` when the
/// denominator vanishes.
pub fn check_dissipation_lower(f: &ScalarField, dissipation: f64, f_tol: f64) -> f64 {
    let denom = weighted_fisher(f, f_tol);
    if denom > 0.0 {
        (dissipation + 1.0) / denom
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderMargin {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl HolderMargin {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.margin() >= -1e-12 * self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationMargins {
    pub holder: [HolderMargin; 4],
    /// `||g||_6 / ||grad g||_2` for `g = sqrt f <v>^{3/2}`; 0 when `g = 0`.
    pub sobolev_ratio: f64,
}

/// The four weighted Hölder interpolation inequalities and the Sobolev
/// ratio, all with the grid quadrature.
pub fn check_interpolations(f: &ScalarField, k: f64) -> Result<InterpolationMargins> {
    let g = f.map(f64::abs);
    let norm = |p: f64, w: f64| weighted_lp_norm(&g, p, w);
    let holder = [
        HolderMargin {
            name: "l2k_by_l3m3_l1",
            lhs: norm(2.0, k)?,
            rhs: norm(3.0, -3.0)?.powf(0.75) * norm(1.0, 9.0 + 4.0 * k)?.powf(0.25),
        },
        HolderMargin {
            name: "l3_by_l6_l2",
            lhs: norm(3.0, k - 0.75)?,
            rhs: norm(6.0, k - 1.5)?.sqrt() * norm(2.0, k)?.sqrt(),
        },
        HolderMargin {
            name: "l52_by_l6_l2",
            lhs: norm(2.5, k - 0.5)?,
            rhs: norm(6.0, k - 5.0 / 3.0)?.powf(0.3) * norm(2.0, k)?.powf(0.7),
        },
        HolderMargin {
            name: "l43_by_l2_l1",
            lhs: norm(4.0 / 3.0, 4.0)?,
            rhs: norm(2.0, 2.0)?.sqrt() * norm(1.0, 6.0)?.sqrt(),
        },
    ];
    let grid = *f.grid();
    let weighted: Vec<f64> = (0..grid.len())
        .map(|i| g.values()[i].sqrt() * bracket(grid.velocity(i)).powf(1.5))
        .collect();
    let sob = ScalarField::new(grid, weighted)?;
    let l6 = weighted_lp_norm(&sob, 6.0, 0.0)?;
    let grad = gradient(&sob);
    let grad_sq = pairwise_sum_by(grid.len(), |i| {
        (0..3).map(|a| grad[a].values()[i].powi(2)).sum::<f64>()
    }) * grid.cell_volume();
    let sobolev_ratio = if grad_sq > 0.0 { l6 / grad_sq.sqrt() } else { 0.0 };
    Ok(InterpolationMargins {
        holder,
        sobolev_ratio,
    })
}

/// `phi(v, t) = psi(v) (1 + rate t)` with `psi = (1 - |v - c|^2 / R^2)^3` on
/// the ball of radius `R` around `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableTestFunction {
    pub center: [f64; 3],
    pub radius: f64,
    pub rate: f64,
    pub amplitude: f64,
}

impl SeparableTestFunction {
    pub fn zero() -> Self {
        SeparableTestFunction {
            center: [0.0; 3],
            radius: 1.0,
            rate: 0.0,
            amplitude: 0.0,
        }
    }

    fn profile(&self, v: [f64; 3]) -> (f64, [f64; 3]) {
        let d = [v[0] - self.center[0], v[1] - self.center[1], v[2] - self.center[2]];
        let s = norm_sq(d) / (self.radius * self.radius);
        if s >= 1.0 {
            return (0.0, [0.0; 3]);
        }
        let one = 1.0 - s;
        let dpsi = -6.0 * one * one / (self.radius * self.radius);
        (
            self.amplitude * one.powi(3),
            d.map(|x| self.amplitude * dpsi * x),
        )
    }

    fn time_factor(&self, t: f64) -> f64 {
        1.0 + self.rate * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub residual: f64,
    /// Residual over the largest term.
    pub normalized: f64,
    pub largest_term: f64,
}

/// Residual of
/// `int f(T) phi(T) - int f(0) phi(0) - int int f d_t phi + int int J . grad phi`
/// with `J = A grad f - b f + grad f / n` and trapezoidal time quadrature
/// over the snapshots.
pub fn weak_residual(
    snapshots: &[(f64, ScalarField)],
    kernels: &KernelFieldSet,
    phi: &SeparableTestFunction,
) -> Result<WeakResidual> {
    if snapshots.len() < 2 {
        return Err(LandauError::InsufficientRecords(format!(
            "weak residual needs 2 snapshots, got {}",
            snapshots.len()
        )));
    }
    let grid = *snapshots[0].1.grid();
    let n = kernels.n() as f64;
    if phi.amplitude != 0.0 {
        let reach = phi.center.iter().map(|c| c.abs()).fold(0.0f64, f64::max) + phi.radius;
        if reach > grid.half_width() - 2.0 * grid.spacing() {
            return Err(LandauError::InvalidArgument(
                "test function touches the boundary layer".into(),
            ));
        }
    }
    let psi: Vec<(f64, [f64; 3])> = (0..grid.len()).map(|i| phi.profile(grid.velocity(i))).collect();
    let h3 = grid.cell_volume();
    let mut pairing = Vec::with_capacity(snapshots.len());
    let mut flux_term = Vec::with_capacity(snapshots.len());
    for (t, f) in snapshots {
        grid.ensure_same(f.grid(), "snapshot grids")?;
        let coeffs: CoefficientField = compute_coefficients(f, kernels)?;
        let grad = gradient(f);
        let values = f.values();
        let theta = phi.time_factor(*t);
        let fp = pairwise_sum_by(grid.len(), |i| values[i] * psi[i].0) * h3;
        let flux = pairwise_sum_by(grid.len(), |i| {
            let gp = psi[i].1;
            if gp == [0.0; 3] {
                return 0.0;
            }
            let gf = [grad[0].values()[i], grad[1].values()[i], grad[2].values()[i]];
            let agf = coeffs.matrix_at(i).mul_vec(gf);
            let b = coeffs.drift_at(i);
            (0..3)
                .map(|a| (agf[a] - b[a] * values[i] + gf[a] / n) * gp[a])
                .sum::<f64>()
        }) * h3;
        pairing.push(fp);
        flux_term.push(flux * theta);
    }
    let (t0, tn) = (snapshots[0].0, snapshots[snapshots.len() - 1].0);
    let end = pairing[pairing.len() - 1] * phi.time_factor(tn);
    let start = pairing[0] * phi.time_factor(t0);
    let mut dt_term = 0.0;
    let mut fl = 0.0;
    for j in 1..snapshots.len() {
        let dt = snapshots[j].0 - snapshots[j - 1].0;
        dt_term += 0.5 * dt * (pairing[j] + pairing[j - 1]) * phi.rate;
        fl += 0.5 * dt * (flux_term[j] + flux_term[j - 1]);
    }
    let residual = end - start - dt_term + fl;
    let largest_term = [end, start, dt_term, fl]
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let normalized = if largest_term > 0.0 { residual / largest_term } else { 0.0 };
    Ok(WeakResidual {
        residual,
        normalized,
        largest_term,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub k: f64,
    pub initial: f64,
    pub sup: f64,
    pub ratio: f64,
    /// `sup <= 2 * initial`.
    pub pass: bool,
}

/// `sup_{t <= T} int f <v>^k` against its initial value, from snapshots.
pub fn moment_propagation_check(
    snapshots: &[(f64, ScalarField)],
    k: f64,
    horizon: f64,
) -> Result<MomentReport> {
    let inside: Vec<&(f64, ScalarField)> = snapshots
        .iter()
        .filter(|(t, _)| *t <= horizon * (1.0 + 1e-12))
        .collect();
    if inside.is_empty() {
        return Err(LandauError::InsufficientRecords(format!(
            "no snapshots in [0, {horizon}]"
        )));
    }
    let initial = weighted_integral(&inside[0].1, k);
    let sup = inside
        .iter()
        .map(|(_, f)| weighted_integral(f, k))
        .fold(initial, f64::max);
    let ratio = if initial > 0.0 { sup / initial } else { 1.0 };
    Ok(MomentReport {
        k,
        initial,
        sup,
        ratio,
        pass: sup <= 2.0 * initial,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

impl CheckStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Info => "info",
        })
    }
}

/// One line of the check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub status: CheckStatus,
    pub margin: f64,
    pub values: Vec<(String, f64)>,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, status: CheckStatus, margin: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            status,
            margin,
            values: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.push((key.to_string(), value));
        self
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "check={} status={} margin={:e}", self.name, self.status, self.margin)?;
        for (k, v) in &self.values {
            write!(f, " {k}={v:e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn push(&mut self, outcome: CheckOutcome) {
        self.outcomes.push(outcome);
    }

    pub fn failed(&self) -> bool {
        self.outcomes.iter().any(|o| o.status == CheckStatus::Fail)
    }

    pub fn render(&self) -> String {
        let mut s: String = self.outcomes.iter().map(|o| format!("{o}\n")).collect();
        let fails = self
            .outcomes
            .iter()
            .filter(|o| o.status == CheckStatus::Fail)
            .count();
        let passes = self
            .outcomes
            .iter()
            .filter(|o| o.status == CheckStatus::Pass)
            .count();
        s += &format!("# summary: {passes} passed, {fails} failed, {} total\n", self.outcomes.len());
        s
    }
}

/// Tolerances of the harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnessOptions {
    pub entropy_tol: f64,
    pub fisher_tol: f64,
    pub fisher_skip: usize,
    pub envelope_t_min: f64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            entropy_tol: 1e-2,
            fisher_tol: 1e-6,
            fisher_skip: 5,
            envelope_t_min: 0.05,
        }
    }
}

fn failed_outcome(name: &str) -> CheckOutcome {
    CheckOutcome::new(name, CheckStatus::Fail, f64::NAN)
}

/// Every series-level check; snapshot-level checks join when snapshots of
/// the same run are supplied.
pub fn run_checks(
    series: &TimeSeries,
    snapshots: &[(f64, ScalarField)],
    opts: &HarnessOptions,
) -> CheckReport {
    let mut report = CheckReport::default();
    let records = &series.records;
    if records.is_empty() {
        report.push(CheckOutcome::new("records", CheckStatus::Fail, f64::NAN));
        return report;
    }
    let (t_start, t_end) = (records[0].t, records[records.len() - 1].t);

    match check_entropy_identity(series, t_start, t_end) {
        Ok(e) => report.push(
            CheckOutcome::new(
                "entropy_identity",
                CheckStatus::from_bool(e.normalized.abs() <= opts.entropy_tol),
                opts.entropy_tol - e.normalized.abs(),
            )
            .with("residual", e.residual)
            .with("normalized", e.normalized)
            .with("landau_only", e.landau_only),
        ),
        Err(_) => report.push(failed_outcome("entropy_identity")),
    }

    let skip = opts.fisher_skip.min(records.len());
    let violations = check_fisher_monotone(&records[skip..], opts.fisher_tol);
    report.push(
        CheckOutcome::new(
            "fisher_monotone",
            CheckStatus::from_bool(violations.is_empty()),
            -(violations.len() as f64),
        )
        .with("violations", violations.len() as f64),
    );

    if let Ok(env) = fisher_envelope_stat(series, opts.envelope_t_min.max(f64::MIN_POSITIVE), opts.fisher_tol) {
        report.push(
            CheckOutcome::new(
                "fisher_envelope",
                if env.stat.is_finite() { CheckStatus::Info } else { CheckStatus::Fail },
                0.0,
            )
            .with("stat", env.stat)
            .with("argmax_t", env.argmax_t),
        );
    }

    for &k in &series.k_list {
        let name = format!("l2_window_k{k}");
        match check_l2_window(series, k, t_end, None) {
            Ok(w) => report.push(
                CheckOutcome::new(&name, CheckStatus::from_bool(w.pass), w.bound - w.sup_y)
                    .with("t0", w.t0)
                    .with("t1", w.t1)
                    .with("ck", w.ck)
                    .with("y0", w.y0)
                    .with("sup_y", w.sup_y),
            ),
            Err(_) => report.push(failed_outcome(&name)),
        }
    }

    if let Ok(sel) = select_t0(series, t_end) {
        report.push(
            CheckOutcome::new(
                "t0_mean_value",
                CheckStatus::from_bool(sel.value <= sel.window_average * (1.0 + 1e-12)),
                sel.window_average - sel.value,
            )
            .with("t0", sel.t0)
            .with("value", sel.value),
        );
    }

    let s2 = t_end.min(1.0);
    if t_start >= 0.0 && s2 > t_start && series.k_index(2.0).is_some() {
        let c0 = snapshots
            .iter()
            .find(|(t, _)| (t - t_start).abs() <= 1e-12)
            .and_then(|(_, f)| {
                let n = series.provenance.n()?;
                let kernels = KernelFieldSet::new(f.grid(), n).ok()?;
                let coeffs = compute_coefficients(f, &kernels).ok()?;
                Some(crate::coefficients::coercivity_estimate(&coeffs).c0)
            })
            .unwrap_or(0.0);
        if let Ok(h) = check_h3_inequality(series, t_start, s2, c0) {
            report.push(
                CheckOutcome::new(
                    "h3_inequality",
                    if h.k_min.is_finite() { CheckStatus::Info } else { CheckStatus::Fail },
                    h.margin,
                )
                .with("K", h.k_min)
                .with("c0", c0),
            );
        }
    }

    let h3_min = records.iter().map(|r| r.h3).fold(f64::INFINITY, f64::min);
    report.push(
        CheckOutcome::new("h3_nonnegative", CheckStatus::from_bool(h3_min >= -1e-10), h3_min),
    );

    if !snapshots.is_empty() {
        for k in [2.0, 4.0] {
            if let Ok(m) = moment_propagation_check(snapshots, k, t_end) {
                report.push(
                    CheckOutcome::new(
                        format!("moment_k{k}"),
                        CheckStatus::from_bool(m.pass),
                        2.0 - m.ratio,
                    )
                    .with("ratio", m.ratio),
                );
            }
        }
        let mut worst = f64::INFINITY;
        for (_, f) in snapshots {
            if let Ok(m) = check_interpolations(f, 2.25) {
                for h in m.holder {
                    worst = worst.min(h.margin() / h.rhs.max(f64::MIN_POSITIVE));
                }
            }
        }
        report.push(CheckOutcome::new(
            "interpolation",
            CheckStatus::from_bool(worst >= -1e-12),
            worst,
        ));
    }
    report
}

/// Fourth-order Runge-Kutta integration of `Y' = C (Y + Y^3)` for `Y^2`.
pub fn rk4_comparison(params: &OdeBoundParams, sigma: f64, steps: usize) -> f64 {
    let rhs = |y: f64| params.ck * (y + y * y * y);
    let h = (sigma - params.t0) / steps as f64;
    let mut y = params.y0;
    for _ in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs(y + 0.5 * h * k1);
        let k3 = rhs(y + 0.5 * h * k2);
        let k4 = rhs(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y * y
}
