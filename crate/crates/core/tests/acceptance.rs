//! Acceptance gates. Each criterion prints one `PASS`/`FAIL` line; the
//! binary exits nonzero if any fails. Expensive runs are shared.
//!
//! Pass a substring as the first argument to run a subset.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{config, field, random_mixture, rel, rng, singular, two_gaussians};
use landau_core::coefficients::CoefficientEngine;
use landau_core::estimates::{rk4_comparison, EnvelopeStat};
use landau_core::functionals::DEFAULT_F_TOL;
use landau_core::grid::{norm_sq, pairwise_sum};
use landau_core::io::{parse_timeseries, timeseries_to_csv};
use landau_core::kernel::c_kernel_field;
use landau_core::solver::with_threads;
use landau_core::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn yes(b: bool) -> &'static str {
    if b { "ok" } else { "VIOLATED" }
}

struct Timed {
    out: RunOutput,
    elapsed: Duration,
}

fn timed_run(c: &RunConfig) -> Timed {
    let start = Instant::now();
    let out = run(c).unwrap_or_else(|e| panic!("run failed: {e}"));
    Timed { out, elapsed: start.elapsed() }
}

fn equilibrium() -> &'static Timed {
    static RUN: OnceLock<Timed> = OnceLock::new();
    RUN.get_or_init(|| timed_run(&config(InitialDatumSpec::Maxwellian, 32, 5.0, 4, 1.0)))
}

fn two_gaussian_run() -> &'static Timed {
    static RUN: OnceLock<Timed> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut c = config(two_gaussians(), 32, 5.0, 4, 1.0);
        c.snapshot_times = vec![0.0, 0.5, 1.0];
        timed_run(&c)
    })
}

fn singular_run(cells: usize) -> &'static Timed {
    static COARSE: OnceLock<Timed> = OnceLock::new();
    static FINE: OnceLock<Timed> = OnceLock::new();
    let (cell, t_final) = if cells == 32 { (&COARSE, 0.5) } else { (&FINE, 0.1) };
    cell.get_or_init(|| {
        let mut c = config(singular(), cells, 5.0, 4, t_final);
        c.snapshot_times = vec![0.1];
        timed_run(&c)
    })
}

fn record_at(series: &TimeSeries, t: f64) -> &DiagnosticsRecord {
    series
        .records
        .iter()
        .find(|r| (r.t - t).abs() <= 1e-12)
        .unwrap_or_else(|| panic!("no record at t = {t}"))
}

fn truncated(series: &TimeSeries, t_max: f64) -> TimeSeries {
    let records = series.records.iter().filter(|r| r.t <= t_max + 1e-12).cloned().collect();
    TimeSeries::new(series.k_list.clone(), records, series.provenance.clone()).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let grid = VelocityGrid::new(8, 4.0).unwrap();
    let engine = CoefficientEngine::new(&grid, 2).unwrap();
    let mut fields = vec![sample_datum(&InitialDatumSpec::Maxwellian, &grid).unwrap()];
    let mut r = rng(11);
    for _ in 0..5 {
        fields.push(sample_datum(&random_mixture(&mut r), &grid).unwrap());
    }
    let worst = fields
        .iter()
        .map(|f| {
            let fast = engine.compute(f).unwrap();
            let slow = direct_coefficients(f, engine.kernels()).unwrap();
            fast.max_relative_discrepancy(&slow)
        })
        .fold(0.0f64, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-12 && secs <= 30.0,
        format!("max_rel_discrepancy={worst:.3e} (<=1e-12) runtime={secs:.2}s (<=30s)"),
    )
}

fn c_kernel_mass() -> Verdict {
    let target = -8.0 * PI;
    let mut worst_post = 0.0f64;
    for (cells, l, n) in [(16, 4.0, 1), (32, 4.0, 2), (32, 4.0, 4), (64, 4.0, 1), (64, 2.0, 2)] {
        let grid = VelocityGrid::new(cells, l).unwrap();
        let q = c_kernel_field(&grid, n).unwrap();
        let sum = pairwise_sum(&q.values) * grid.cell_volume();
        worst_post = worst_post.max(rel(sum, target));
    }
    // resolved cases h <= 1/(8n)
    let mut worst_pre = 0.0f64;
    for (cells, l, n) in [(64, 4.0, 1), (64, 2.0, 2)] {
        let grid = VelocityGrid::new(cells, l).unwrap();
        assert!(grid.spacing() <= 1.0 / (8.0 * n as f64));
        let q = c_kernel_field(&grid, n).unwrap();
        worst_pre = worst_pre.max(rel(q.raw_mass, target));
    }
    verdict(
        worst_post <= 1e-14 && worst_pre <= 0.1,
        format!("post_rel={worst_post:.2e} (<=1e-14) pre_rel={worst_pre:.3e} (<=0.1)"),
    )
}

fn dissipation_identity() -> Verdict {
    let mut r = rng(23);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for cells in [8, 10, 12] {
        let grid = VelocityGrid::new(cells, 4.0).unwrap();
        let engine = CoefficientEngine::new(&grid, 2).unwrap();
        let mut specs = vec![InitialDatumSpec::Maxwellian];
        specs.extend((0..5).map(|_| random_mixture(&mut r)));
        for spec in &specs {
            let f = sample_datum(spec, &grid).unwrap();
            let flux = engine.flux_coefficients(&f, DEFAULT_F_TOL).unwrap();
            let single = dissipation_single(&f, &flux);
            let double = dissipation_double(&f, engine.kernels(), DEFAULT_F_TOL).unwrap();
            let gap = (single - double).abs() / (double.abs() + 1e-12);
            worst = worst.max(gap);
            cases += 1;
        }
    }
    verdict(worst <= 0.05, format!("fields={cases} max_rel_gap={worst:.3e} (<=0.05)"))
}

fn gaussian_functionals() -> Verdict {
    let grid = VelocityGrid::new(64, 6.0).unwrap();
    let m = sample_datum(&InitialDatumSpec::Maxwellian, &grid).unwrap();
    let p = PI.powf(1.5);
    let mass = m.integral();
    let second = landau_core::grid::pairwise_sum_by(m.values().len(), |i| {
        m.values()[i] * norm_sq(grid.velocity(i))
    }) * grid.cell_volume();
    let h = entropy(&m);
    let i = fisher(&m, DEFAULT_F_TOL).information;
    let errs = [rel(mass, p), rel(second, 1.5 * p), rel(h, -1.5 * p), rel(i, 6.0 * p)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    verdict(
        worst <= 0.01,
        format!(
            "mass_rel={:.2e} second_moment_rel={:.2e} entropy_rel={:.2e} fisher_rel={:.2e} (each <=1e-2)",
            errs[0], errs[1], errs[2], errs[3]
        ),
    )
}

fn equilibrium_run() -> Verdict {
    let timed = equilibrium();
    let recs = &timed.out.series.records;
    let first = &recs[0];
    let mass_drift = recs.iter().map(|r| rel(r.mass, first.mass)).fold(0.0, f64::max);
    let mom_drift = recs
        .iter()
        .map(|r| {
            let d: f64 = (0..3).map(|a| (r.momentum[a] - first.momentum[a]).powi(2)).sum();
            d.sqrt() / first.mass
        })
        .fold(0.0, f64::max);
    let energy_drift = recs.iter().map(|r| rel(r.energy, first.energy)).fold(0.0, f64::max);
    let dh = recs.iter().map(|r| (r.entropy - first.entropy).abs()).fold(0.0, f64::max);
    let d_max = recs.iter().map(|r| r.dissipation).fold(0.0, f64::max);
    let h3_0 = first.h3.abs();
    // what the added (1/n) Lap f alone does to energy and entropy
    let n = 4.0;
    let heat_net = recs
        .iter()
        .map(|r| (r.energy - first.energy - 3.0 * first.mass * r.t / n).abs() / first.energy)
        .fold(0.0, f64::max);
    let id = check_entropy_identity(&timed.out.series, 0.0, 1.0).unwrap();
    let secs = timed.elapsed.as_secs_f64();
    let checks = [
        mass_drift <= 1e-12,
        mom_drift <= 1e-4,
        energy_drift <= 1e-4,
        dh <= 1e-3,
        d_max <= 1e-3,
        h3_0 <= 1e-10,
        secs <= 600.0,
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "mass_drift={mass_drift:.2e}[{}] momentum_drift={mom_drift:.2e}[{}] energy_drift={energy_drift:.3e}[{}] \
             max|dH|={dh:.3e}[{}] max_D={d_max:.3e}[{}] H3(0)={h3_0:.2e}[{}] runtime={secs:.0}s[{}] steps={} \
             info: energy_drift_net_of_diffusion={heat_net:.3e} entropy_identity_with_diffusion={:.3e}",
            yes(checks[0]),
            yes(checks[1]),
            yes(checks[2]),
            yes(checks[3]),
            yes(checks[4]),
            yes(checks[5]),
            yes(checks[6]),
            timed.out.steps,
            id.normalized.abs()
        ),
    )
}

fn entropy_identity() -> Verdict {
    let series = &two_gaussian_run().out.series;
    let id = check_entropy_identity(series, 0.0, 0.5).unwrap();
    let h0 = series.records[0].entropy.abs();
    verdict(
        id.normalized.abs() <= 1e-2,
        format!(
            "normalized_residual={:.3e} (<=1e-2) without_diffusion_term={:.3e} (info)",
            id.normalized.abs(),
            (id.landau_only / h0).abs()
        ),
    )
}

fn fisher_monotonicity() -> Verdict {
    let recs = &two_gaussian_run().out.series.records;
    let violations = check_fisher_monotone(&recs[5..], 1e-6);
    verdict(
        violations.is_empty(),
        format!("records={} violations={} (tol=1e-6, first 5 skipped)", recs.len(), violations.len()),
    )
}

fn fisher_production() -> Verdict {
    let coarse = &singular_run(32).out.series;
    let fine = &singular_run(64).out.series;
    let growth = fine.records[0].fisher / coarse.records[0].fisher;
    let late_change = rel(record_at(fine, 0.1).fisher, record_at(coarse, 0.1).fisher);
    let stat = |s: &TimeSeries| -> EnvelopeStat { fisher_envelope_stat(&truncated(s, 0.1), 0.05, 1e-6).unwrap() };
    let (sc, sf) = (stat(coarse), stat(fine));
    let stat_change = rel(sf.stat, sc.stat);
    let checks = [
        growth >= 2.0,
        late_change <= 0.1,
        sc.stat.is_finite() && sf.stat.is_finite() && stat_change <= 0.5,
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "I0_growth={growth:.3}[{}] (>=2) I(0.1)_change={late_change:.3e}[{}] (<=0.1) \
             envelope_stat={:.4e}->{:.4e} change={stat_change:.3e}[{}] (<=0.5)",
            yes(checks[0]),
            yes(checks[1]),
            sc.stat,
            sf.stat,
            yes(checks[2])
        ),
    )
}

fn l2_window() -> Verdict {
    let k = 2.25;
    let two = &two_gaussian_run().out.series;
    let sing = &singular_run(32).out.series;
    let r_two = check_l2_window(two, k, two.records.last().unwrap().t, None).unwrap();
    let r_sing = check_l2_window(sing, k, sing.records.last().unwrap().t, None).unwrap();

    let mut r = rng(37);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let params = OdeBoundParams {
            ck: r_range(&mut r, 1.0, 10.0),
            t0: r_range(&mut r, 0.0, 1.0),
            y0: 10f64.powf(r_range(&mut r, -2.0, 1.0)),
        };
        let t1 = compute_t1(&params).unwrap();
        for j in 0..=20 {
            // stop just short of t1 where the envelope blows up for tiny Y0
            let sigma = params.t0 + (t1 - params.t0) * j as f64 / 20.0 * 0.999_999;
            let env = ode_envelope(&params, sigma).unwrap();
            let y2 = rk4_comparison(&params, sigma, 2000);
            worst = worst.min((env - y2) / env);
        }
    }
    let pass = r_two.pass && r_sing.pass && worst >= -1e-10;
    verdict(
        pass,
        format!(
            "two_gaussian: supY={:.4e} bound={:.4e} Ck={:.3} [{}]; singular: supY={:.4e} bound={:.4e} Ck={:.3} [{}]; \
             ode_vs_rk4_min_rel_margin={worst:.2e} (>=-1e-10)",
            r_two.sup_y,
            r_two.bound,
            r_two.ck,
            yes(r_two.pass),
            r_sing.sup_y,
            r_sing.bound,
            r_sing.ck,
            yes(r_sing.pass)
        ),
    )
}

fn r_range(r: &mut rand::rngs::StdRng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    r.random_range(lo..hi)
}

fn interpolation_battery() -> Verdict {
    let grid = VelocityGrid::new(16, 4.0).unwrap();
    let mut r = rng(41);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let f = sample_datum(&random_mixture(&mut r), &grid).unwrap();
        let k = r_range(&mut r, 1.5, 3.0);
        let m = check_interpolations(&f, k).unwrap();
        for h in &m.holder {
            let scaled = h.margin() / h.rhs.max(f64::MIN_POSITIVE);
            worst = worst.min(scaled);
            if h.margin() < -1e-12 * h.rhs {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!("fields=1000 violations={violations} min_margin/rhs={worst:.3e} (>=-1e-12)"),
    )
}

fn coercivity() -> Verdict {
    let mut r = rng(53);
    let grid = VelocityGrid::new(16, 4.0).unwrap();
    let engine = CoefficientEngine::new(&grid, 2).unwrap();
    let mut specs = vec![InitialDatumSpec::Maxwellian, singular(), two_gaussians()];
    specs.extend((0..20).map(|_| random_mixture(&mut r)));
    let c0_min = specs
        .iter()
        .map(|s| coercivity_estimate(&engine.compute(&sample_datum(s, &grid).unwrap()).unwrap()).c0)
        .fold(f64::INFINITY, f64::min);

    let c0_at = |cells: usize| {
        let grid = VelocityGrid::new(cells, 4.0).unwrap();
        let e = CoefficientEngine::new(&grid, 2).unwrap();
        coercivity_estimate(&e.compute(&sample_datum(&InitialDatumSpec::Maxwellian, &grid).unwrap()).unwrap()).c0
    };
    let (c0_24, c0_48) = (c0_at(24), c0_at(48));
    let c0_change = rel(c0_48, c0_24);

    let mixtures: Vec<InitialDatumSpec> = (0..20).map(|_| random_mixture(&mut r)).collect();
    let c1_at = |cells: usize| {
        let grid = VelocityGrid::new(cells, 4.0).unwrap();
        let e = CoefficientEngine::new(&grid, 2).unwrap();
        mixtures
            .iter()
            .map(|s| {
                let f = sample_datum(s, &grid).unwrap();
                let flux = e.flux_coefficients(&f, DEFAULT_F_TOL).unwrap();
                check_dissipation_lower(&f, dissipation_single(&f, &flux), DEFAULT_F_TOL)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (c1_24, c1_48) = (c1_at(24), c1_at(48));
    let c1_change = rel(c1_48, c1_24);
    let checks = [c0_min > 0.0, c0_change <= 0.2, c1_24 > 0.0 && c1_48 > 0.0 && c1_change <= 0.3];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "corpus_min_c0={c0_min:.4e}[{}] c0(M) N24={c0_24:.4e} N48={c0_48:.4e} change={c0_change:.3e}[{}] (<=0.2) \
             min_c1 N24={c1_24:.4e} N48={c1_48:.4e} change={c1_change:.3e}[{}] (<=0.3)",
            yes(checks[0]),
            yes(checks[1]),
            yes(checks[2])
        ),
    )
}

fn round_trips() -> Verdict {
    let series = &two_gaussian_run().out.series;
    let text = timeseries_to_csv(series);
    let back = parse_timeseries(&text).unwrap();
    let bits = |s: &TimeSeries| -> Vec<u64> {
        s.records
            .iter()
            .flat_map(|r| {
                let mut v = vec![r.t, r.mass, r.momentum[0], r.momentum[1], r.momentum[2], r.energy, r.entropy];
                v.extend([r.dissipation, r.fisher, r.fisher_sqrt, r.l3_m3, r.h3, r.min_f, r.max_f, r.dt]);
                v.extend(&r.l2);
                v
            })
            .map(f64::to_bits)
            .collect()
    };
    let csv_ok = bits(series) == bits(&back)
        && back.k_list == series.k_list
        && back.provenance == series.provenance
        && timeseries_to_csv(&back) == text;

    let dir = tempfile::tempdir().unwrap();
    let f = field(&random_mixture(&mut rng(61)), 16, 4.0);
    let snap = Snapshot::from_field(&f, 3, 0.125);
    let path = dir.path().join("f.lcf");
    write_snapshot(&path, &snap).unwrap();
    let read = read_snapshot(&path).unwrap();
    let snap_ok = read.to_bytes() == snap.to_bytes()
        && read.to_field().unwrap().values().iter().zip(f.values()).all(|(a, b)| a.to_bits() == b.to_bits());

    let mut c = config(two_gaussians(), 16, 4.0, 2, 0.05);
    c.snapshot_times = vec![0.05];
    let csv_with = |threads: usize| {
        with_threads(threads, || {
            let out = run(&c).unwrap();
            (timeseries_to_csv(&out.series), out.snapshots[0].to_bytes())
        })
    };
    let det_ok = csv_with(1) == csv_with(4);
    verdict(
        csv_ok && snap_ok && det_ok,
        format!(
            "csv_bit_exact[{}] lcf1_bit_exact[{}] threads_1_vs_4_identical[{}]",
            yes(csv_ok),
            yes(snap_ok),
            yes(det_ok)
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 12] = [
        ("oracle_equivalence", oracle_equivalence),
        ("c_kernel_mass", c_kernel_mass),
        ("dissipation_identity", dissipation_identity),
        ("gaussian_functionals", gaussian_functionals),
        ("equilibrium_run", equilibrium_run),
        ("entropy_identity", entropy_identity),
        ("fisher_monotonicity", fisher_monotonicity),
        ("fisher_production", fisher_production),
        ("l2_window", l2_window),
        ("interpolation_battery", interpolation_battery),
        ("coercivity", coercivity),
        ("round_trips", round_trips),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if filter.as_deref().is_some_and(|f| !name.contains(f)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        if !v.pass {
            failed += 1;
        }
        println!(
            "acceptance {name:<22} {} ({:.1}s) {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance summary: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
