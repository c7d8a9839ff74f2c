//! Acceptance criteria. Each test prints one PASS/FAIL line (written
//! straight to stderr so it survives output capture) and then asserts.
//! Several criteria are not attainable at desk scale and fail by design;
//! run with `--no-fail-fast` to see every line.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use brownian_lab::constants::{ball_capacity, heat_content_log_limit_2d, inradius_limit, small_ball_eigenvalue};
use brownian_lab::geometry::{
    cover_identity_check, distance_field, mean_inradius_curve, TorusConfig, VoxelSet,
};
use brownian_lab::harness::{compare_outputs, run, ExperimentConfig, ExperimentKind, Shape};
use brownian_lab::potential::{capacity, path_capacity_sweep, Ball, CapacityConfig, PathCapacityConfig, Segment};
use brownian_lab::sausage::{
    estimate_heat_content_scaled, fit_small_t_curve, heat_content_curve, sumset_count, HeatDiscretization,
};
use brownian_lab::spectral::{
    eigen_smallball_curve, slab_mask, smallest_eigenvalue, EigenSettings, GridOperator,
};
use brownian_lab::stats::Moments;
use brownian_lab::stochastic::{sample_path, torus_distance, RngStream, GENERATOR_VARIANCE};
use nalgebra::DMatrix;
use rand::Rng;

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion:>2}: {} | {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn note(criterion: u32, detail: &str) {
    let _ = std::io::stderr().write_all(format!("  [{criterion}] {detail}\n").as_bytes());
}

#[test]
fn criterion_01_duality() {
    let start = Instant::now();
    let disc = HeatDiscretization::new(0.1);
    let replicas = 400;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for m in [2usize, 3] {
        for (k, (s, t)) in [(1.0, 2.0), (0.5, 2.0), (1.0, 4.0)].into_iter().enumerate() {
            let tag = 100 * m as u64 + 10 * k as u64;
            let a = estimate_heat_content_scaled(m, s, t, replicas, &disc, tag + 1).unwrap();
            let b = estimate_heat_content_scaled(m, t, s, replicas, &disc, tag + 2).unwrap();
            let z = a.z_score(&b);
            worst = worst.max(z.abs());
            pass &= z.abs() <= 2.0;
            note(1, &format!(
                "m={m} E({s},{t}) = {:.4} +- {:.4}, E({t},{s}) = {:.4} +- {:.4}, z = {z:+.2}",
                a.mean, a.std_error, b.mean, b.std_error
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 600.0;
    report(1, pass, &format!("max |z| = {worst:.2} over 6 pairs, {replicas} replicas each, {secs:.0} s"));
    assert!(pass);
}

#[test]
fn criterion_02_scaling() {
    let disc = HeatDiscretization::new(0.1);
    let replicas = 400;
    let mut pass = true;
    let mut detail = Vec::new();
    for m in [3usize, 2] {
        let (s, t) = (1.0, 0.25);
        let a = estimate_heat_content_scaled(m, s, t, replicas, &disc, 200 + m as u64).unwrap();
        let b = estimate_heat_content_scaled(m, s, s * s / t, replicas, &disc, 210 + m as u64).unwrap();
        let factor = (s / t).powf(m as f64 / 2.0);
        let scaled = a.scaled(factor);
        let z = scaled.z_score(&b);
        pass &= z.abs() <= 2.0;
        detail.push(format!("m={m}: z = {z:+.2}"));
        note(2, &format!(
            "m={m} E(1,0.25)(s/t)^(m/2) = {:.4} +- {:.4} vs E(1,4) = {:.4} +- {:.4}",
            scaled.mean, scaled.std_error, b.mean, b.std_error
        ));
    }
    report(2, pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn criterion_03_planar_heat_content() {
    let start = Instant::now();
    let ts = [1e-5, 1e-4, 1e-3, 1e-2];
    let curve = heat_content_curve(2, 1.0, &ts, 200, &HeatDiscretization::new(0.5), 303).unwrap();
    let scaled: Vec<f64> = ts
        .iter()
        .zip(&curve.estimates)
        .map(|(t, e)| e.mean * (1.0 / t).ln())
        .collect();
    for ((t, e), v) in ts.iter().zip(&curve.estimates).zip(&scaled) {
        note(3, &format!("t = {t:e}: E log(1/t) = {v:.4} +- {:.4}", e.std_error * (1.0 / t).ln()));
    }
    // Increasing as t decreases.
    let increasing = scaled.windows(2).all(|w| w[0] > w[1]);
    let fit = fit_small_t_curve(&curve).unwrap();
    let limit = fit.log_limit.unwrap();
    let dev = (limit - heat_content_log_limit_2d()) / heat_content_log_limit_2d();
    let pass = increasing && dev.abs() <= 0.15;
    report(3, pass, &format!(
        "increasing toward 4 pi: {increasing}; extrapolated limit {limit:.3} +- {:.3} ({:+.1}% of 4 pi); {:.0} s",
        fit.log_limit_se.unwrap(),
        100.0 * dev,
        start.elapsed().as_secs_f64()
    ));
    assert!(pass);
}

#[test]
fn criterion_04_first_coefficient_vs_capacity() {
    let start = Instant::now();
    let curve = heat_content_curve(3, 1.0, &[0.01, 0.02, 0.05, 0.1], 400, &HeatDiscretization::new(0.1), 404).unwrap();
    let fit = fit_small_t_curve(&curve).unwrap();
    let c1 = fit.c1.unwrap();
    let cfg = PathCapacityConfig {
        dt: 0.0,
        delta_factor: 1.0,
        paths: 200,
        walkers_per_path: 2000,
        seed: 405,
    };
    let sweep = path_capacity_sweep(1.0, &[4e-3, 1e-3, 2.5e-4, 6.25e-5], &cfg).unwrap();
    for (d, m) in sweep.deltas.iter().zip(&sweep.means) {
        note(4, &format!("delta = {d:.4}: mean capacity {:.4} +- {:.4}", m.mean, m.std_error));
    }
    let cap = sweep.intercept;
    let dev = (c1 - cap) / cap;
    let pass = dev.abs() <= 0.10 && fit.accepted;
    report(4, pass, &format!(
        "c1 = {c1:.3} +- {:.3} (fit accepted: {}), C1 = {cap:.3} +- {:.3} (delta -> 0), deviation {:+.1}%; {:.0} s",
        fit.c1_se.unwrap(),
        fit.accepted,
        sweep.intercept_se,
        100.0 * dev,
        start.elapsed().as_secs_f64()
    ));
    assert!(pass);
}

#[test]
fn criterion_05_capacity_calibration() {
    let walkers = 100_000;
    let delta = 1e-3;
    let mut pass = true;
    let mut detail = Vec::new();
    for (k, r) in [1.0, 0.5].into_iter().enumerate() {
        let ball = Ball::new([0.0; 3], r).unwrap();
        let e = capacity(&ball, &CapacityConfig::new(delta, walkers, 500 + k as u64)).unwrap();
        let want = ball_capacity(3) * r;
        let dev = (e.cap_mean - want) / want;
        pass &= dev.abs() <= 0.02;
        detail.push(format!("ball r={r}: {:.4} ({:+.2}%)", e.cap_mean, 100.0 * dev));
    }
    let seg = Segment {
        a: [-0.5, 0.0, 0.0],
        b: [0.5, 0.0, 0.0],
    };
    let e = capacity(&seg, &CapacityConfig::new(delta, walkers, 510)).unwrap();
    let frac = e.cap_mean / ball_capacity(3);
    pass &= frac < 0.05;
    detail.push(format!("unit segment: {:.4} = {:.2}% of unit ball", e.cap_mean, 100.0 * frac));
    note(5, &format!(
        "thin-needle estimate 2 pi L / ln(2L/delta) = {:.4} for L = 1",
        2.0 * PI / (2.0f64 / delta).ln()
    ));
    report(5, pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_06_cover_time_identity() {
    let eps = [0.03, 0.05, 0.08, 0.12, 0.18];
    let cfg = TorusConfig::new(64, 606);
    let rows = cover_identity_check(2, 0.5, 1.0, &eps, 500, &cfg).unwrap();
    let agree = rows.iter().filter(|r| r.agrees()).count();
    for &e in &eps {
        let at: Vec<_> = rows.iter().filter(|r| r.epsilon == e).collect();
        let exceed = at.iter().filter(|r| r.rho_exceeds).count();
        note(6, &format!("eps = {e}: rho(s) > eps on {exceed} of {} trajectories", at.len()));
    }
    let pass = agree == rows.len() && rows.len() == 2500;
    report(6, pass, &format!("{agree} of {} indicator pairs agree (m=2, g=64, s=0.5)", rows.len()));
    assert!(pass);
}

#[test]
fn criterion_07_inradius_three_dimensions() {
    let start = Instant::now();
    let s_list = [50.0, 100.0, 200.0, 400.0];
    let cfg = TorusConfig::new(64, 707);
    let curve = mean_inradius_curve(3, &s_list, 200, &cfg).unwrap();
    let limit = inradius_limit(3);
    let levelled: Vec<f64> = curve.rows.iter().map(|r| r.levelled.unwrap()).collect();
    for r in &curve.rows {
        note(7, &format!(
            "s = {}: E rho = {:.5} +- {:.5} (voxel h = {:.5}), levelled {:.4}",
            r.s, r.mean, r.std_error, cfg.h(), r.levelled.unwrap()
        ));
    }
    let gaps: Vec<f64> = levelled.iter().map(|v| (v - limit).abs()).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    let last = *levelled.last().unwrap();
    let dev = (last - limit) / limit;
    let pass = monotone && dev.abs() <= 0.35;
    report(7, pass, &format!(
        "monotone approach: {monotone}; final levelled {last:.4} vs 3/(4 pi) = {limit:.4} ({:+.0}%); g = 64, {:.0} s",
        100.0 * dev,
        start.elapsed().as_secs_f64()
    ));
    assert!(pass);
}

#[test]
fn criterion_08_inradius_two_dimensions() {
    let start = Instant::now();
    let s_list = [4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0, 100.0];
    let cfg = TorusConfig::new(256, 808);
    let curve = mean_inradius_curve(2, &s_list, 40, &cfg).unwrap();
    for r in &curve.rows {
        note(8, &format!("s = {}: E rho = {:.5} +- {:.5} (voxel h = {:.5})", r.s, r.mean, r.std_error, cfg.h()));
    }
    let slope = curve.fit.as_ref().and_then(|f| f.coefficient("b")).map(|c| c.value);
    let pass = slope.is_some_and(|b| (-2.1..=-1.4).contains(&b));
    let detail = match (slope, &curve.fit_error) {
        (Some(b), _) => format!("slope of log E rho vs sqrt(s) = {b:.3} (target [-2.1, -1.4])"),
        (None, Some(e)) => format!("no slope: {e}"),
        (None, None) => "no slope".into(),
    };
    report(8, pass, &format!("{detail}; g = 256, {:.0} s", start.elapsed().as_secs_f64()));
    assert!(pass);
}

fn dense_smallest(op: &GridOperator) -> f64 {
    let n = op.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        a.set_column(j, &nalgebra::DVector::from_column_slice(&col));
        e[j] = 0.0;
    }
    a.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_09_eigenvalue_oracles() {
    let settings = EigenSettings::default();
    let mut pass = true;
    let mut detail = Vec::new();

    let g = 128;
    let slab = smallest_eigenvalue(&GridOperator::new(2, g, &slab_mask(2, g)).unwrap(), &settings).unwrap();
    let dev = (slab.lambda1 - PI * PI) / (PI * PI);
    pass &= dev.abs() <= 0.01;
    detail.push(format!("slab {:+.3}%", 100.0 * dev));

    let ball3 = eigen_smallball_curve(3, &[0.05], 64, &settings).unwrap();
    pass &= ball3[0].relative_deviation.abs() <= 0.25;
    detail.push(format!("m=3 ball {:+.1}%", 100.0 * ball3[0].relative_deviation));

    let ball2 = eigen_smallball_curve(2, &[0.02, 0.05], 256, &settings).unwrap();
    for r in &ball2 {
        pass &= r.relative_deviation.abs() <= 0.15;
        detail.push(format!("m=2 eps={} {:+.1}%", r.epsilon, 100.0 * r.relative_deviation));
        note(9, &format!(
            "m=2 eps = {}: lambda1 = {:.4}, 2 pi / log(1/eps) = {:.4}",
            r.epsilon, r.lambda1, small_ball_eigenvalue(2, r.epsilon)
        ));
    }

    let mut rng = RngStream::new(909, 1).rng();
    let mut worst: f64 = 0.0;
    let tight = EigenSettings {
        tol: 1e-11,
        max_iterations: 50_000,
        ..Default::default()
    };
    for m in [2usize, 3] {
        for g in [4usize, 6, 8] {
            for _ in 0..3 {
                let mut mask: Vec<bool> = (0..g.pow(m as u32)).map(|_| rng.random_bool(0.15)).collect();
                mask[0] = true;
                let op = GridOperator::new(m, g, &mask).unwrap();
                let got = smallest_eigenvalue(&op, &tight).unwrap().lambda1;
                let want = dense_smallest(&op);
                worst = worst.max((got - want).abs() / want);
            }
        }
    }
    pass &= worst <= 1e-8;
    detail.push(format!("dense oracle max rel {worst:.1e}"));
    report(9, pass, &detail.join(", "));
    assert!(pass);
}

fn tiny_configs(dir: &std::path::Path) -> Vec<ExperimentConfig> {
    let mut v = Vec::new();
    let mut c = ExperimentConfig::new(ExperimentKind::HeatContent);
    c.s_list = vec![2.0, 1.0];
    c.t_list = vec![1.0, 2.0];
    c.replicas = 6;
    c.h_rel = Some(0.3);
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Inradius);
    c.s_list = vec![1.0, 2.0];
    c.replicas = 4;
    c.g = Some(12);
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::CoverTime);
    c.m = 2;
    c.s_list = vec![0.2];
    c.eps_list = vec![0.05, 0.1];
    c.replicas = 4;
    c.g = Some(16);
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Capacity);
    c.shape = Some(Shape::Ball);
    c.walkers = 2000;
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Capacity);
    c.shape = Some(Shape::Path);
    c.s_list = vec![0.5];
    c.replicas = 3;
    c.walkers = 100;
    c.dt = Some(2e-3);
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::Spectrum);
    c.m = 2;
    c.eps_list = vec![0.1, 0.2];
    c.g = Some(24);
    v.push(c);
    let mut c = ExperimentConfig::new(ExperimentKind::ConjectureProbe);
    c.m = 2;
    c.s_list = vec![0.1, 0.2];
    c.replicas = 3;
    c.g = Some(12);
    v.push(c);
    for (i, c) in v.iter_mut().enumerate() {
        c.master_seed = 1000 + i as u64;
        c.output = dir.join(format!("run{i}"));
    }
    v
}

#[test]
fn criterion_10_property_suites() {
    let mut rng = RngStream::new(1010, 1).rng();
    let mut detail = Vec::new();

    let mut symmetric = true;
    for _ in 0..200 {
        let m = rng.random_range(2..=3usize);
        let a: Vec<i64> = (0..m * rng.random_range(1..60)).map(|_| rng.random_range(-10..10)).collect();
        let b: Vec<i64> = (0..m * rng.random_range(1..60)).map(|_| rng.random_range(-20..20)).collect();
        let a = VoxelSet::from_cells(m, 0.05, None, a).unwrap();
        let b = VoxelSet::from_cells(m, 0.05, None, b).unwrap();
        symmetric &= sumset_count(&a, &b).unwrap() == sumset_count(&b, &a).unwrap();
    }
    detail.push(format!("sumset symmetry {symmetric}"));

    let mut exact = true;
    for _ in 0..40 {
        let m = rng.random_range(2..=3usize);
        let g = rng.random_range(2..=16usize);
        let h = 1.0 / g as f64;
        let n = rng.random_range(1..=8usize);
        let cells: Vec<i64> = (0..m * n).map(|_| rng.random_range(0..g as i64)).collect();
        let obstacle = VoxelSet::from_cells(m, h, Some(g), cells).unwrap();
        let field = distance_field(&obstacle).unwrap();
        let mut cell = vec![0i64; m];
        for lin in 0..g.pow(m as u32) {
            let mut rest = lin;
            for c in cell.iter_mut() {
                *c = (rest % g) as i64;
                rest /= g;
            }
            let x: Vec<f64> = cell.iter().map(|&c| c as f64 * h).collect();
            let brute = obstacle
                .iter()
                .map(|o| torus_distance(&x, &o.iter().map(|&c| c as f64 * h).collect::<Vec<_>>()))
                .fold(f64::INFINITY, f64::min);
            exact &= (field.value(lin) - brute).abs() < 1e-12;
        }
    }
    detail.push(format!("distance transform exact {exact}"));

    let dt = 1e-3;
    let path = sample_path(3, 50.0, dt, &RngStream::new(1010, 2)).unwrap();
    let mut sq = Moments::new();
    for i in 1..path.len() {
        for k in 0..3 {
            let d = path.point(i)[k] - path.point(i - 1)[k];
            sq.push(d * d);
        }
    }
    let z = (sq.mean() - GENERATOR_VARIANCE * dt) / sq.std_error();
    let variance_ok = z.abs() <= 3.0;
    detail.push(format!("increment variance z = {z:+.2}"));

    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for cfg in tiny_configs(dir.path()) {
        let a = run(&cfg).unwrap();
        let mut again = cfg.clone();
        again.output = cfg.output.with_extension("again");
        let b = run(&again).unwrap();
        if let Err(e) = compare_outputs(&a, &b) {
            note(10, &e.to_string());
            identical = false;
        }
    }
    detail.push(format!("byte-identical reruns {identical}"));

    let pass = symmetric && exact && variance_ok && identical;
    report(10, pass, &detail.join(", "));
    assert!(pass);
}

fn num(v: &serde_json::Value) -> String {
    v.as_f64().map_or_else(|| v.to_string(), |x| format!("{x:.3}"))
}

#[test]
fn criterion_11_conjecture_probes() {
    let dir = tempfile::tempdir().unwrap();
    let mut produced = true;
    // Planar times stay below the cover time of the grid, where the free set
    // would be empty and lambda infinite.
    for (m, s_list, g) in [(3usize, vec![1.0, 2.0, 4.0, 8.0], 24usize), (2, vec![0.5, 1.0, 2.0], 96)] {
        let mut cfg = ExperimentConfig::new(ExperimentKind::ConjectureProbe);
        cfg.m = m;
        cfg.s_list = s_list;
        cfg.g = Some(g);
        cfg.replicas = 16;
        cfg.master_seed = 1100 + m as u64;
        cfg.output = dir.path().join(format!("m{m}"));
        let out = run(&cfg).unwrap();
        produced &= out.csv.exists() && out.summary.exists() && out.plots.len() == 2 && out.plots.iter().all(|p| p.exists());
        let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out.summary).unwrap()).unwrap();
        produced &= summary["label"].as_str().is_some_and(|l| l.starts_with("PROBE"));
        for row in summary["summary"].as_array().unwrap() {
            note(11, &format!(
                "m={m} s = {}: lambda rho^2/pi^2 median {} [IQR {}, {}], statistic {} (conjectured {})",
                row["s"], num(&row["ratio_median"]), num(&row["ratio_q1"]), num(&row["ratio_q3"]),
                num(&row["statistic"]), num(&row["conjectured"])
            ));
        }
    }
    report(11, produced, "probe tables, ratio distributions and plots produced (reported, not gated)");
    assert!(produced);
}
