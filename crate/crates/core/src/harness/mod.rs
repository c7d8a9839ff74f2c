//! Experiment orchestration: configuration, deterministic CSV tables,
//! JSON summaries with fits, and SVG figures.

mod config;
mod plot;
mod selftest;

pub use config::{ExperimentConfig, ExperimentKind, Shape};
pub use plot::{emit_plot, render_svg, PlotPoint, PlotSpec, PlotTable, Series};
pub use selftest::{selftest, SelfTestResult};

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::constants::{ball_capacity, heat_content_log_limit_2d, inradius_limit, inradius_log_slope_2d, small_ball_eigenvalue};
use crate::error::{LabError, Result};
use crate::geometry::{cover_identity_check, mean_inradius_curve, TorusConfig};
use crate::potential::{capacity, capacity_delta_sweep, capacity_moments, Ball, CapacityConfig, CapacityEstimate, Obstacle, PathCapacityConfig, Segment};
use crate::sausage::{
    curve_plan, estimate_heat_content_capped, estimate_heat_content_scaled, fit_small_t, fit_small_t_curve,
    heat_content_curve, HeatDiscretization,
};
use crate::spectral::{conjecture_probe, eigen_smallball_curve, path_spectrum, EigenSettings};
use crate::stats::{MCEstimate, Moments};
use crate::stochastic::RngStream;

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Seed of the sub-experiment `tags` under `master`.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(RngStream::new(master, 0x5eed), |s, &t| s.child(t))
        .stream_id
}

#[derive(Debug, Clone, Serialize)]
struct HeatRow {
    m: usize,
    s: f64,
    t: f64,
    dt: f64,
    h: f64,
    replicas: usize,
    mean: f64,
    std_error: f64,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct GeometryRow {
    m: usize,
    s: f64,
    dt: f64,
    g: usize,
    replica: usize,
    rho: f64,
    t_cover: Option<f64>,
    epsilon: Option<f64>,
    censored: Option<bool>,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct CapacityRow {
    shape: &'static str,
    s: Option<f64>,
    replica: Option<usize>,
    delta: f64,
    r_launch: f64,
    r_out: f64,
    walkers: usize,
    hits: usize,
    cap_mean: f64,
    cap_se: f64,
    seed: u64,
}

#[derive(Debug, Clone, Serialize)]
struct SmallBallCsvRow {
    m: usize,
    epsilon: f64,
    g: usize,
    lambda1: f64,
    theory: f64,
    relative_deviation: f64,
    residual: f64,
    seed: u64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

struct Outputs {
    dir: PathBuf,
    stem: &'static str,
}

impl Outputs {
    fn csv(&self) -> PathBuf {
        self.dir.join(format!("{}.csv", self.stem))
    }

    fn summary(&self) -> PathBuf {
        self.dir.join(format!("{}_summary.json", self.stem))
    }

    fn svg(&self, suffix: &str) -> PathBuf {
        if suffix.is_empty() {
            self.dir.join(format!("{}.svg", self.stem))
        } else {
            self.dir.join(format!("{}_{suffix}.svg", self.stem))
        }
    }
}

/// Runs the experiment and writes `<stem>.csv`, `<stem>_summary.json` and
/// one or more SVG figures into `config.output`. Identical configurations
/// produce byte-identical files, independent of the thread count.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    std::fs::create_dir_all(&config.output)?;
    let out = Outputs {
        dir: config.output.clone(),
        stem: config.kind.stem(),
    };
    let plots = match config.kind {
        ExperimentKind::HeatContent => run_heat_content(config, &out)?,
        ExperimentKind::Inradius => run_inradius(config, &out)?,
        ExperimentKind::CoverTime => run_cover_time(config, &out)?,
        ExperimentKind::Capacity => run_capacity(config, &out)?,
        ExperimentKind::Spectrum => run_spectrum(config, &out)?,
        ExperimentKind::ConjectureProbe => run_probe(config, &out)?,
    };
    Ok(RunOutput {
        csv: out.csv(),
        summary: out.summary(),
        plots,
    })
}

// The output directory is left out so that reruns elsewhere stay byte-identical.
fn config_json(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(config)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("output");
    }
    Ok(v)
}

fn run_heat_content(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let m = config.m;
    let disc = HeatDiscretization::new(config.h_rel_or_default());
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let t_min = config.t_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = config.t_list.iter().cloned().fold(0.0, f64::max);
    let fittable = (m == 2 || m == 3) && t_min > 0.0 && t_max >= 10.0 * t_min * (1.0 - 1e-9) && config.t_list.len() >= 3;
    for (i, &s) in config.s_list.iter().enumerate() {
        let seed = derive_seed(config.master_seed, &[1, i as u64]);
        let (estimates, fit) = match (config.dt, config.h) {
            (Some(dt), Some(h)) => {
                let est: Vec<MCEstimate> = config
                    .t_list
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| {
                        estimate_heat_content_capped(m, s, t, config.replicas, dt, h, derive_seed(seed, &[j as u64]), disc.max_voxels)
                    })
                    .collect::<Result<_>>()?;
                let fit = fittable.then(|| fit_small_t(m, s, &config.t_list, &est));
                (est, fit)
            }
            _ => {
                if config.replicas >= 2 && curve_plan(s, &config.t_list, &disc).is_ok() {
                    let curve = heat_content_curve(m, s, &config.t_list, config.replicas, &disc, seed)?;
                    let fit = fittable.then(|| fit_small_t_curve(&curve));
                    (curve.estimates, fit)
                } else {
                    let est: Vec<MCEstimate> = config
                        .t_list
                        .iter()
                        .enumerate()
                        .map(|(j, &t)| estimate_heat_content_scaled(m, s, t, config.replicas, &disc, derive_seed(seed, &[j as u64])))
                        .collect::<Result<_>>()?;
                    let fit = fittable.then(|| fit_small_t(m, s, &config.t_list, &est));
                    (est, fit)
                }
            }
        };
        for (&t, e) in config.t_list.iter().zip(&estimates) {
            rows.push(HeatRow {
                m,
                s,
                t,
                dt: e.dt,
                h: e.h,
                replicas: e.replicas,
                mean: e.mean,
                std_error: e.std_error,
                seed: e.seed,
            });
        }
        if let Some(fit) = fit {
            fits.push(match fit {
                Ok(f) => {
                    let theory = (m == 2).then(heat_content_log_limit_2d);
                    json!({"s": s, "fit": f, "theory_log_limit": theory})
                }
                Err(e) => json!({"s": s, "error": e.to_string()}),
            });
        }
    }
    rows.sort_by(|a, b| a.s.total_cmp(&b.s).then(a.t.total_cmp(&b.t)));
    let mut duality = Vec::new();
    for a in &rows {
        if let Some(b) = rows.iter().find(|b| b.s == a.t && b.t == a.s && a.s < a.t) {
            let z = (a.mean - b.mean) / a.std_error.hypot(b.std_error);
            duality.push(json!({
                "s": a.s, "t": a.t,
                "e_st": a.mean, "se_st": a.std_error,
                "e_ts": b.mean, "se_ts": b.std_error,
                "z": z, "within_2se": z.abs() <= 2.0,
            }));
        }
    }
    write_csv(&out.csv(), &rows)?;
    write_json(
        &out.summary(),
        &json!({
            "config": config_json(config)?,
            "estimates": rows,
            "duality": duality,
            "small_t_fits": fits,
        }),
    )?;
    let mut table = PlotTable::default();
    for &s in &config.s_list {
        let pts = rows
            .iter()
            .filter(|r| r.s == s)
            .map(|r| PlotPoint::with_err(r.t, r.mean, r.std_error))
            .collect();
        table.series.push(Series::new(format!("s = {s}"), pts));
    }
    let mut spec = PlotSpec {
        title: format!("Expected heat content E(s, t), m = {m}"),
        x_label: "t".into(),
        y_label: "E(s, t)".into(),
        log_x: true,
        log_y: true,
        theory: Vec::new(),
    };
    if m == 2 && t_max < 1.0 && t_min > 0.0 {
        for &s in &config.s_list {
            spec.theory.push(Series::curve(format!("4 pi s / log(1/t), s = {s}"), t_min, t_max, 40, true, |t| {
                4.0 * PI * s / (1.0 / t).ln()
            }));
        }
    }
    let path = out.svg("");
    emit_plot(&table, &spec, &path)?;
    Ok(vec![path])
}

fn torus_config(config: &ExperimentConfig) -> TorusConfig {
    let mut tc = TorusConfig::new(config.g_or_default(), config.master_seed);
    tc.dt = config.dt;
    tc
}

fn run_inradius(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let m = config.m;
    let tc = torus_config(config);
    let curve = mean_inradius_curve(m, &config.s_list, config.replicas, &tc)?;
    let mut rows = Vec::new();
    for (k, &s) in config.s_list.iter().enumerate() {
        for (r, sample) in curve.samples.iter().enumerate() {
            rows.push(GeometryRow {
                m,
                s,
                dt: curve.dt,
                g: curve.g,
                replica: r,
                rho: sample[k],
                t_cover: None,
                epsilon: None,
                censored: None,
                seed: curve.seed,
            });
        }
    }
    write_csv(&out.csv(), &rows)?;
    let theory = if m >= 3 {
        json!({"levelled_constant": inradius_limit(m as u32)})
    } else {
        json!({"log_slope_vs_sqrt_s": inradius_log_slope_2d()})
    };
    write_json(
        &out.summary(),
        &json!({
            "config": config_json(config)?,
            "dt": curve.dt, "g": curve.g,
            "rows": curve.rows,
            "fit": curve.fit,
            "fit_error": curve.fit_error,
            "theory": theory,
        }),
    )?;
    let (table, spec) = if m >= 3 {
        let pts = curve
            .rows
            .iter()
            .filter_map(|r| Some(PlotPoint::with_err(r.s, r.levelled?, r.levelled_se?)))
            .collect();
        let (a, b) = (config.s_list[0], *config.s_list.last().unwrap());
        let limit = inradius_limit(m as u32);
        (
            PlotTable {
                series: vec![Series::new("levelled mean inradius", pts)],
            },
            PlotSpec {
                title: format!("Inradius, m = {m}"),
                x_label: "s".into(),
                y_label: format!("(s / log s)^(1/{}) E rho(s)", m - 2),
                log_x: true,
                log_y: false,
                theory: vec![Series::curve(format!("limit {limit:.4}"), a, b, 2, true, |_| limit)],
            },
        )
    } else {
        let pts: Vec<PlotPoint> = curve
            .rows
            .iter()
            .map(|r| PlotPoint::with_err(r.s.sqrt(), r.mean, r.std_error))
            .collect();
        let (x0, y0) = (pts[0].x, pts[0].y);
        let x1 = pts.last().unwrap().x;
        (
            PlotTable {
                series: vec![Series::new("mean inradius", pts)],
            },
            PlotSpec {
                title: "Inradius, m = 2".into(),
                x_label: "sqrt(s)".into(),
                y_label: "E rho(s)".into(),
                log_x: false,
                log_y: true,
                theory: vec![Series::curve("slope -sqrt(pi)", x0, x1, 20, false, |x| {
                    y0 * (inradius_log_slope_2d() * (x - x0)).exp()
                })],
            },
        )
    };
    let path = out.svg("");
    emit_plot(&table, &spec, &path)?;
    Ok(vec![path])
}

fn run_cover_time(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let m = config.m;
    let tc = torus_config(config);
    let s_max = config.s_list.iter().cloned().fold(0.0, f64::max);
    let horizon = s_max * config.horizon_factor.unwrap_or(2.0);
    let mut rows = Vec::new();
    let mut tallies = Vec::new();
    let mut table = PlotTable::default();
    for &s in &config.s_list {
        let checks = cover_identity_check(m, s, horizon, &config.eps_list, config.replicas, &tc)?;
        let mut p_rho = Vec::new();
        let mut p_cover = Vec::new();
        for &eps in &config.eps_list {
            let at: Vec<_> = checks.iter().filter(|c| c.epsilon == eps).collect();
            let n = at.len() as f64;
            let a = at.iter().filter(|c| c.rho_exceeds).count() as f64 / n;
            let b = at.iter().filter(|c| c.uncovered_at_s).count() as f64 / n;
            p_rho.push(PlotPoint::new(eps, a));
            p_cover.push(PlotPoint::new(eps, b));
            tallies.push(json!({
                "s": s, "epsilon": eps,
                "p_rho_exceeds": a, "p_uncovered_at_s": b,
                "agreements": at.iter().filter(|c| c.agrees()).count(),
                "trajectories": at.len(),
                "censored": at.iter().filter(|c| c.censored).count(),
            }));
        }
        table.series.push(Series::new(format!("P[rho(s) > eps], s = {s}"), p_rho));
        table.series.push(Series::new(format!("P[T_eps > s], s = {s}"), p_cover));
        rows.extend(checks.into_iter().map(|c| GeometryRow {
            m,
            s: c.s,
            dt: tc.dt(),
            g: tc.g,
            replica: c.replica,
            rho: c.rho,
            t_cover: Some(c.t_cover),
            epsilon: Some(c.epsilon),
            censored: Some(c.censored),
            seed: tc.seed,
        }));
    }
    let total = rows.len();
    let agree: usize = tallies.iter().map(|t| t["agreements"].as_u64().unwrap_or(0) as usize).sum();
    write_csv(&out.csv(), &rows)?;
    write_json(
        &out.summary(),
        &json!({
            "config": config_json(config)?,
            "dt": tc.dt(), "g": tc.g, "horizon": horizon,
            "comparisons": total, "agreements": agree,
            "identity_holds": agree == total,
            "by_radius": tallies,
        }),
    )?;
    let spec = PlotSpec {
        title: format!("Inradius exceedance and cover times, m = {m}"),
        x_label: "epsilon".into(),
        y_label: "probability".into(),
        ..Default::default()
    };
    let path = out.svg("");
    emit_plot(&table, &spec, &path)?;
    Ok(vec![path])
}

fn capacity_row(shape: &'static str, s: Option<f64>, replica: Option<usize>, e: &CapacityEstimate, seed: u64) -> CapacityRow {
    CapacityRow {
        shape,
        s,
        replica,
        delta: e.delta,
        r_launch: e.r_launch,
        r_out: e.r_out,
        walkers: e.walkers,
        hits: e.hits,
        cap_mean: e.cap_mean,
        cap_se: e.cap_se,
        seed,
    }
}

fn run_capacity(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let shape = config.shape.expect("validated");
    let path = out.svg("");
    match shape {
        Shape::Ball | Shape::Segment => {
            let size = config.size.unwrap_or(1.0);
            let (name, obstacle, theory): (&'static str, Box<dyn Obstacle>, Option<f64>) = match shape {
                Shape::Ball => ("ball", Box::new(Ball::new([0.0; 3], size)?), Some(ball_capacity(3) * size)),
                _ => (
                    "segment",
                    Box::new(Segment {
                        a: [-size / 2.0, 0.0, 0.0],
                        b: [size / 2.0, 0.0, 0.0],
                    }),
                    None,
                ),
            };
            let seed = derive_seed(config.master_seed, &[4]);
            let cfg = CapacityConfig::new(config.delta.unwrap_or(1e-3), config.walkers, seed);
            let (estimates, extrapolation) = if config.delta_list.is_empty() {
                (vec![capacity(obstacle.as_ref(), &cfg)?], None)
            } else {
                let sweep = capacity_delta_sweep(obstacle.as_ref(), &config.delta_list, &cfg)?;
                let ex = json!({"intercept": sweep.intercept, "intercept_se": sweep.intercept_se, "slope": sweep.slope});
                (sweep.estimates, Some(ex))
            };
            let rows: Vec<CapacityRow> = estimates.iter().map(|e| capacity_row(name, None, None, e, seed)).collect();
            write_csv(&out.csv(), &rows)?;
            let deviations: Vec<Option<f64>> = estimates
                .iter()
                .map(|e| theory.map(|c| (e.cap_mean - c) / c))
                .collect();
            write_json(
                &out.summary(),
                &json!({
                    "config": config_json(config)?,
                    "shape": name, "size": size,
                    "estimates": estimates,
                    "theory": theory,
                    "relative_deviation": deviations,
                    "delta_extrapolation": extrapolation,
                    "unit_ball_fraction": estimates.iter().map(|e| e.cap_mean / ball_capacity(3)).collect::<Vec<_>>(),
                }),
            )?;
            let table = PlotTable {
                series: vec![Series::new(
                    format!("{name} capacity"),
                    estimates.iter().map(|e| PlotPoint::with_err(e.delta, e.cap_mean, e.cap_se)).collect(),
                )],
            };
            let mut spec = PlotSpec {
                title: format!("Capacity of the delta-tube of a {name}"),
                x_label: "delta".into(),
                y_label: "capacity".into(),
                ..Default::default()
            };
            if shape == Shape::Ball {
                let d: Vec<f64> = estimates.iter().map(|e| e.delta).collect();
                let (a, b) = (d.iter().cloned().fold(f64::INFINITY, f64::min), d.iter().cloned().fold(0.0, f64::max));
                spec.theory.push(Series::curve("4 pi (r + delta)", a, b.max(a * 1.0001), 2, false, |x| 4.0 * PI * (size + x)));
            }
            emit_plot(&table, &spec, &path)?;
        }
        Shape::Path => {
            let dt = config.dt.unwrap_or(1e-3);
            let delta_factor = config.delta.map_or(1.0, |d| d / (2.0 * dt).sqrt());
            let mut rows = Vec::new();
            let mut moments = Vec::new();
            let mut pts = Vec::new();
            for (i, &s) in config.s_list.iter().enumerate() {
                let pc = PathCapacityConfig {
                    dt,
                    delta_factor,
                    paths: config.replicas,
                    walkers_per_path: config.walkers,
                    seed: derive_seed(config.master_seed, &[5, i as u64]),
                };
                let mo = capacity_moments(s, &pc)?;
                for (r, e) in mo.per_path.iter().enumerate() {
                    rows.push(capacity_row("path", Some(s), Some(r), e, pc.seed));
                }
                pts.push(PlotPoint::with_err(s, mo.mean[0], mo.se[0]));
                moments.push(json!({
                    "s": s, "dt": mo.dt, "delta": mo.delta,
                    "paths": mo.paths, "walkers_per_path": mo.walkers_per_path,
                    "moments": mo.mean, "std_errors": mo.se,
                    "first_moment_over_sqrt_s": mo.mean[0] / s.sqrt(),
                }));
            }
            write_csv(&out.csv(), &rows)?;
            write_json(&out.summary(), &json!({"config": config_json(config)?, "moments": moments}))?;
            let (s0, c0) = (pts[0].x, pts[0].y);
            let s1 = pts.last().unwrap().x;
            let table = PlotTable {
                series: vec![Series::new("mean capacity", pts)],
            };
            let spec = PlotSpec {
                title: "Mean capacity of a Brownian path".into(),
                x_label: "s".into(),
                y_label: "E cap(beta[0, s])".into(),
                log_x: true,
                log_y: true,
                theory: if s1 > s0 {
                    vec![Series::curve("s^(1/2) scaling", s0, s1, 20, true, |s| c0 * (s / s0).sqrt())]
                } else {
                    Vec::new()
                },
            };
            emit_plot(&table, &spec, &path)?;
        }
    }
    Ok(vec![path])
}

fn eigen_settings(config: &ExperimentConfig) -> EigenSettings {
    EigenSettings {
        tol: config.tol,
        ..Default::default()
    }
}

fn run_spectrum(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let m = config.m;
    let g = config.g_or_default();
    let settings = eigen_settings(config);
    let path = out.svg("");
    if !config.eps_list.is_empty() {
        let rows = eigen_smallball_curve(m, &config.eps_list, g, &settings)?;
        let csv_rows: Vec<SmallBallCsvRow> = rows
            .iter()
            .map(|r| SmallBallCsvRow {
                m,
                epsilon: r.epsilon,
                g,
                lambda1: r.lambda1,
                theory: r.theory,
                relative_deviation: r.relative_deviation,
                residual: r.residual,
                seed: config.master_seed,
            })
            .collect();
        write_csv(&out.csv(), &csv_rows)?;
        let monotone = rows.windows(2).all(|w| (w[1].epsilon > w[0].epsilon) == (w[1].lambda1 > w[0].lambda1));
        write_json(
            &out.summary(),
            &json!({"config": config_json(config)?, "small_ball": rows, "monotone_in_epsilon": monotone}),
        )?;
        let (a, b) = (
            config.eps_list.iter().cloned().fold(f64::INFINITY, f64::min),
            config.eps_list.iter().cloned().fold(0.0, f64::max),
        );
        let table = PlotTable {
            series: vec![Series::new(
                "lambda_1",
                rows.iter().map(|r| PlotPoint::new(r.epsilon, r.lambda1)).collect(),
            )],
        };
        let spec = PlotSpec {
            title: format!("Torus minus a ball of radius epsilon, m = {m}, g = {g}"),
            x_label: "epsilon".into(),
            y_label: "lambda_1".into(),
            theory: vec![Series::curve("small-ball law", a, b.max(a * 1.0001), 40, false, |e| {
                small_ball_eigenvalue(m as u32, e)
            })],
            ..Default::default()
        };
        emit_plot(&table, &spec, &path)?;
    } else {
        let tc = torus_config(config);
        let (rows, monotone) = path_spectrum(m, &config.s_list, config.replicas, &tc, &settings)?;
        write_csv(&out.csv(), &rows)?;
        let per_s: Vec<_> = config
            .s_list
            .iter()
            .map(|&s| {
                let l: Vec<f64> = rows.iter().filter(|r| r.s == s).map(|r| r.lambda1).collect();
                let mo = Moments::from_slice(&l);
                json!({"s": s, "mean_lambda1": mo.mean(), "std_error": mo.std_error()})
            })
            .collect();
        write_json(
            &out.summary(),
            &json!({"config": config_json(config)?, "dt": tc.dt(), "g": tc.g, "per_s": per_s, "monotone_in_s": monotone}),
        )?;
        let table = PlotTable {
            series: vec![Series::new(
                "mean lambda_1",
                per_s
                    .iter()
                    .map(|v| {
                        PlotPoint::with_err(
                            v["s"].as_f64().unwrap_or(0.0),
                            v["mean_lambda1"].as_f64().unwrap_or(0.0),
                            v["std_error"].as_f64().unwrap_or(0.0),
                        )
                    })
                    .collect(),
            )],
        };
        let spec = PlotSpec {
            title: format!("Smallest Dirichlet eigenvalue off a Brownian path, m = {m}"),
            x_label: "s".into(),
            y_label: "lambda_1".into(),
            log_y: true,
            ..Default::default()
        };
        emit_plot(&table, &spec, &path)?;
    }
    Ok(vec![path])
}

fn run_probe(config: &ExperimentConfig, out: &Outputs) -> Result<Vec<PathBuf>> {
    let m = config.m;
    let tc = torus_config(config);
    let table = conjecture_probe(m, &config.s_list, config.replicas, &tc, &eigen_settings(config))?;
    write_csv(&out.csv(), &table.rows)?;
    let statistic_name = if m == 3 {
        "(log s / s)^2 E lambda_1"
    } else {
        "s^(-1/2) log E lambda_1"
    };
    write_json(
        &out.summary(),
        &json!({
            "label": "PROBE: conjectured laws, reported as trends only",
            "config": config_json(config)?,
            "dt": tc.dt(), "g": tc.g,
            "statistic": statistic_name,
            "summary": table.summary,
            "lambda_nondecreasing_in_s": table.monotone,
        }),
    )?;
    let ratio = PlotTable {
        series: vec![
            Series::new("median", table.summary.iter().map(|r| PlotPoint::new(r.s, r.ratio_median)).collect()),
            Series::new("lower quartile", table.summary.iter().map(|r| PlotPoint::new(r.s, r.ratio_q1)).collect()),
            Series::new("upper quartile", table.summary.iter().map(|r| PlotPoint::new(r.s, r.ratio_q3)).collect()),
        ],
    };
    let (a, b) = (config.s_list[0], *config.s_list.last().unwrap());
    let ratio_spec = PlotSpec {
        title: format!("PROBE: lambda_1 rho^2 / pi^2, m = {m}"),
        x_label: "s".into(),
        y_label: "lambda_1 rho(s)^2 / pi^2".into(),
        log_x: true,
        theory: vec![Series::curve("heuristic ratio 1", a, b.max(a * 1.0001), 2, true, |_| 1.0)],
        ..Default::default()
    };
    let conj = table.summary.first().map_or(0.0, |r| r.conjectured);
    let stat = PlotTable {
        series: vec![Series::new(
            statistic_name,
            table.summary.iter().map(|r| PlotPoint::new(r.s, r.statistic)).collect(),
        )],
    };
    let stat_spec = PlotSpec {
        title: format!("PROBE: conjectured large-s law, m = {m}"),
        x_label: "s".into(),
        y_label: statistic_name.into(),
        log_x: true,
        theory: vec![Series::curve(format!("conjectured {conj:.3}"), a, b.max(a * 1.0001), 2, true, |_| conj)],
        ..Default::default()
    };
    let p1 = out.svg("ratio");
    let p2 = out.svg("statistic");
    emit_plot(&ratio, &ratio_spec, &p1)?;
    emit_plot(&stat, &stat_spec, &p2)?;
    Ok(vec![p1, p2])
}

/// Raises an error naming the first file that differs between two runs.
pub fn compare_outputs(a: &RunOutput, b: &RunOutput) -> Result<()> {
    let pairs = [(&a.csv, &b.csv), (&a.summary, &b.summary)];
    for (x, y) in pairs.into_iter().chain(a.plots.iter().zip(&b.plots)) {
        if std::fs::read(x)? != std::fs::read(y)? {
            return Err(LabError::Mismatch(format!("{} and {} differ", x.display(), y.display())));
        }
    }
    Ok(())
}
