//! Expected heat content `E(s, t)` of the complement of a Brownian path,
//! estimated as the mean volume of the Wiener sausage
//! `W(s, t) = beta_1[0, s] + beta_2[0, t]` of two independent paths.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::heat_content_log_limit_2d;
use crate::error::{LabError, Result};
use crate::fit::{weighted_least_squares, DataPoint, FitModel, fit_power_law};
use crate::geometry::raster::{rasterize_free, VoxelSet};
use crate::stats::{MCEstimate, Moments};
use crate::stochastic::{sample_path_capped, Path, RngStream, DEFAULT_MAX_POINTS};

/// Largest bounding box, in cells, handled with a dense bitmap.
const DENSE_BOX_CELLS: u64 = 1 << 32;

/// Default cap on raster sizes.
pub const DEFAULT_MAX_VOXELS: usize = 20_000_000;

/// Number of distinct index sums `u + v`, `u` in `a`, `v` in `b`.
pub fn sumset_count(a: &VoxelSet, b: &VoxelSet) -> Result<u64> {
    if a.m != b.m {
        return Err(LabError::Mismatch(format!("dimensions {} and {}", a.m, b.m)));
    }
    if a.h != b.h {
        return Err(LabError::Mismatch(format!("voxel sizes {} and {}", a.h, b.h)));
    }
    if a.is_periodic() || b.is_periodic() {
        return Err(LabError::InvalidParameter("sumsets are taken in free space".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0);
    }
    // Translating the larger set by every voxel of the smaller one.
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let m = a.m;
    let (lo_s, hi_s) = small.bounds().unwrap();
    let (lo_l, hi_l) = large.bounds().unwrap();
    let extent: Vec<u64> = (0..m)
        .map(|k| (hi_s[k] - lo_s[k] + hi_l[k] - lo_l[k] + 1) as u64)
        .collect();
    let box_cells = extent.iter().try_fold(1u64, |acc, &e| acc.checked_mul(e));
    let strides: Vec<u64> = extent
        .iter()
        .scan(1u64, |acc, &e| {
            let s = *acc;
            *acc = acc.saturating_mul(e);
            Some(s)
        })
        .collect();
    let offsets = |set: &VoxelSet, lo: &[i64]| -> Vec<u64> {
        set.iter()
            .map(|c| (0..m).map(|k| (c[k] - lo[k]) as u64 * strides[k]).sum())
            .collect()
    };
    match box_cells {
        Some(cells) if cells <= DENSE_BOX_CELLS => {
            let off_s = offsets(small, &lo_s);
            let off_l = offsets(large, &lo_l);
            let mut bits = vec![0u64; cells.div_ceil(64) as usize];
            for &base in &off_s {
                for &o in &off_l {
                    let idx = base + o;
                    bits[(idx >> 6) as usize] |= 1u64 << (idx & 63);
                }
            }
            Ok(bits.iter().map(|w| w.count_ones() as u64).sum())
        }
        _ => {
            let mut seen: HashSet<Vec<i64>> = HashSet::new();
            for u in small.iter() {
                for v in large.iter() {
                    seen.insert(u.iter().zip(v).map(|(x, y)| x + y).collect());
                }
            }
            Ok(seen.len() as u64)
        }
    }
}

/// `h^m` times the number of voxels of the sumset of two free rasters.
/// Symmetric in its arguments.
pub fn sumset_volume(a: &VoxelSet, b: &VoxelSet) -> Result<f64> {
    Ok(sumset_count(a, b)? as f64 * a.h.powi(a.m as i32))
}

/// Resolution rule for heat-content estimates.
///
/// The voxel size is tied to the shorter path, `h = h_rel sqrt(min(s, t))`,
/// and the time step to the voxel, `dt = dt_ratio h^2` (the default
/// `dt_ratio = 1/8` gives `sqrt(2 dt) = h / 2`). Under this rule the
/// discrete estimator inherits the exact Brownian scaling
/// `E(s, t) = a^{-m} E(a^2 s, a^2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatDiscretization {
    pub h_rel: f64,
    pub dt_ratio: f64,
    pub max_voxels: usize,
}

impl HeatDiscretization {
    pub fn new(h_rel: f64) -> Self {
        HeatDiscretization {
            h_rel,
            dt_ratio: 0.125,
            max_voxels: DEFAULT_MAX_VOXELS,
        }
    }

    /// `(dt, h)` for the pair of durations `(s, t)`.
    pub fn for_times(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        let scale = s.min(t);
        if !(scale > 0.0) {
            return Err(LabError::InvalidParameter(format!(
                "relative resolution needs s, t > 0, got ({s}, {t})"
            )));
        }
        let h = self.h_rel * scale.sqrt();
        Ok((self.dt_ratio * h * h, h))
    }
}

fn raster_capped(path: &Path, h: f64, max_voxels: usize) -> Result<VoxelSet> {
    let v = rasterize_free(path, h)?;
    if v.len() > max_voxels {
        return Err(LabError::ResourceLimit {
            what: "raster voxels",
            requested: v.len() as u64,
            cap: max_voxels as u64,
        });
    }
    Ok(v)
}

fn check_times(m: usize, s: f64, t: f64) -> Result<()> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(LabError::InvalidParameter(format!("times must be non-negative, got ({s}, {t})")));
    }
    if m >= 4 {
        // Paths are polar for m >= 4; E(s, t) -> 0 under refinement.
        eprintln!("warning: heat content of a Brownian path vanishes for m = {m}; estimate is pure discretization");
    }
    Ok(())
}

/// Sausage volume of one replica.
fn replica_volume(
    m: usize,
    s: f64,
    t: f64,
    dt: f64,
    h: f64,
    max_voxels: usize,
    stream: &RngStream,
) -> Result<f64> {
    let p1 = sample_path_capped(m, s, dt, &stream.child(1), DEFAULT_MAX_POINTS)?;
    let p2 = sample_path_capped(m, t, dt, &stream.child(2), DEFAULT_MAX_POINTS)?;
    let a = raster_capped(&p1, h, max_voxels)?;
    let b = raster_capped(&p2, h, max_voxels)?;
    sumset_volume(&a, &b)
}

/// Monte Carlo estimate of `E(s, t)` from `replicas` independent pairs of
/// paths sampled at step `dt` and rasterized at voxel size `h`.
pub fn estimate_heat_content(
    m: usize,
    s: f64,
    t: f64,
    replicas: usize,
    dt: f64,
    h: f64,
    seed: u64,
) -> Result<MCEstimate> {
    estimate_heat_content_capped(m, s, t, replicas, dt, h, seed, DEFAULT_MAX_VOXELS)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_heat_content_capped(
    m: usize,
    s: f64,
    t: f64,
    replicas: usize,
    dt: f64,
    h: f64,
    seed: u64,
    max_voxels: usize,
) -> Result<MCEstimate> {
    check_times(m, s, t)?;
    if replicas == 0 {
        return Err(LabError::InvalidParameter("replica budget is zero".into()));
    }
    let root = RngStream::new(seed, 0x5a05a6e);
    let volumes: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| replica_volume(m, s, t, dt, h, max_voxels, &root.child(r as u64)))
        .collect::<Result<_>>()?;
    Ok(MCEstimate::from_samples(&volumes, dt, h, seed))
}

/// [`estimate_heat_content`] with `(dt, h)` chosen by `disc`.
pub fn estimate_heat_content_scaled(
    m: usize,
    s: f64,
    t: f64,
    replicas: usize,
    disc: &HeatDiscretization,
    seed: u64,
) -> Result<MCEstimate> {
    let (dt, h) = disc.for_times(s, t)?;
    estimate_heat_content_capped(m, s, t, replicas, dt, h, seed, disc.max_voxels)
}

/// `E(s, t)` over a grid of `t`, every replica sharing its two paths across
/// the grid (common random numbers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatContentCurve {
    pub m: usize,
    pub s: f64,
    pub t_grid: Vec<f64>,
    pub estimates: Vec<MCEstimate>,
    /// `samples[r][i]` is the sausage volume of replica `r` at `t_grid[i]`.
    pub samples: Vec<Vec<f64>>,
}

/// Sausage volumes of one replica over `t_grid`. Both paths are simulated
/// once at the finest step and subsampled for coarser grid points.
fn replica_curve(
    m: usize,
    s: f64,
    t_grid: &[f64],
    steps: &[(f64, f64, usize)],
    dt_min: f64,
    max_voxels: usize,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let p1 = sample_path_capped(m, s, dt_min, &stream.child(1), DEFAULT_MAX_POINTS)?;
    let p2 = sample_path_capped(m, t_max, dt_min, &stream.child(2), DEFAULT_MAX_POINTS)?;
    t_grid
        .iter()
        .zip(steps)
        .map(|(&t, &(_, h, factor))| {
            let a = raster_capped(&p1.subsampled(factor), h, max_voxels)?;
            let n2 = (t / dt_min).round() as usize;
            let b = raster_capped(&p2.prefix(n2).subsampled(factor), h, max_voxels)?;
            sumset_volume(&a, &b)
        })
        .collect()
}

/// Finest step and per-`t` `(dt, h, subsampling factor)` for a
/// common-random-number curve. Fails unless every step and every `t` is an
/// integer multiple of the finest step.
pub fn curve_plan(s: f64, t_grid: &[f64], disc: &HeatDiscretization) -> Result<(f64, Vec<(f64, f64, usize)>)> {
    let pairs: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| disc.for_times(s, t))
        .collect::<Result<_>>()?;
    let dt_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut steps = Vec::with_capacity(pairs.len());
    for (&t, &(dt, h)) in t_grid.iter().zip(&pairs) {
        let ratio = dt / dt_min;
        let factor = ratio.round();
        if (ratio - factor).abs() > 1e-6 * ratio {
            return Err(LabError::InvalidParameter(format!(
                "time step at t = {t} is not an integer multiple of the finest step"
            )));
        }
        if ((t / dt_min).round() - t / dt_min).abs() > 1e-6 * (t / dt_min) {
            return Err(LabError::InvalidParameter(format!(
                "t = {t} is not a multiple of the finest step"
            )));
        }
        steps.push((dt, h, factor as usize));
    }
    Ok((dt_min, steps))
}

pub fn heat_content_curve(
    m: usize,
    s: f64,
    t_grid: &[f64],
    replicas: usize,
    disc: &HeatDiscretization,
    seed: u64,
) -> Result<HeatContentCurve> {
    if t_grid.is_empty() {
        return Err(LabError::InvalidParameter("empty t grid".into()));
    }
    if replicas == 0 {
        return Err(LabError::InvalidParameter("replica budget is zero".into()));
    }
    for &t in t_grid {
        check_times(m, s, t)?;
    }
    let (dt_min, steps) = curve_plan(s, t_grid, disc)?;
    let root = RngStream::new(seed, 0xc0de);
    let samples: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| replica_curve(m, s, t_grid, &steps, dt_min, disc.max_voxels, &root.child(r as u64)))
        .collect::<Result<_>>()?;
    let estimates = steps
        .iter()
        .enumerate()
        .map(|(i, &(dt, h, _))| {
            let col: Vec<f64> = samples.iter().map(|row| row[i]).collect();
            MCEstimate::from_samples(&col, dt, h, seed)
        })
        .collect();
    Ok(HeatContentCurve {
        m,
        s,
        t_grid: t_grid.to_vec(),
        estimates,
        samples,
    })
}

/// Small-`t` coefficients of `E(s, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatContentFit {
    pub m: usize,
    pub s: f64,
    pub t_grid: Vec<f64>,
    /// m = 3: coefficient of `t^{1/2}`.
    pub c1: Option<f64>,
    pub c1_se: Option<f64>,
    /// m = 3: coefficient of `t`.
    pub c2: Option<f64>,
    pub c2_se: Option<f64>,
    /// m = 2: extrapolated limit of `E(s, t) ln(1/t) / s`.
    pub log_limit: Option<f64>,
    pub log_limit_se: Option<f64>,
    /// Weighted residual sum of squares and degrees of freedom.
    pub residual: f64,
    pub dof: usize,
    /// Whether `residual / dof` is below the configured threshold.
    pub accepted: bool,
}

/// Default acceptance threshold on the reduced residual.
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 4.0;

/// Fits the small-`t` behaviour of `E(s, t)`.
///
/// m = 3: weighted least squares on the basis `(t^{1/2}, t, t^{3/2})`.
/// m = 2: `E(s, t) ln(1/t) / s = L + c / ln(1/t)`, extrapolating `L`.
pub fn fit_small_t(m: usize, s: f64, t_grid: &[f64], estimates: &[MCEstimate]) -> Result<HeatContentFit> {
    fit_small_t_with(m, s, t_grid, estimates, None, DEFAULT_RESIDUAL_THRESHOLD)
}

/// [`fit_small_t`] on a common-random-number curve. Coefficient standard
/// errors come from applying the fitted linear estimator to each replica.
pub fn fit_small_t_curve(curve: &HeatContentCurve) -> Result<HeatContentFit> {
    fit_small_t_with(
        curve.m,
        curve.s,
        &curve.t_grid,
        &curve.estimates,
        Some(&curve.samples),
        DEFAULT_RESIDUAL_THRESHOLD,
    )
}

pub fn fit_small_t_with(
    m: usize,
    s: f64,
    t_grid: &[f64],
    estimates: &[MCEstimate],
    replicas: Option<&[Vec<f64>]>,
    threshold: f64,
) -> Result<HeatContentFit> {
    if t_grid.len() != estimates.len() {
        return Err(LabError::Mismatch("t grid and estimates differ in length".into()));
    }
    let t_min = t_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    if !(t_min > 0.0) || t_max / t_min < 10.0 * (1.0 - 1e-9) {
        return Err(LabError::Degenerate("t grid must span at least a decade of t > 0".into()));
    }
    let y: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let sigma: Vec<f64> = estimates.iter().map(|e| e.std_error).collect();
    let replica_se = |estimator: &dyn Fn(&[f64]) -> Vec<f64>, k: usize| -> Option<f64> {
        replicas.map(|rows| {
            let vals: Vec<f64> = rows.iter().map(|r| estimator(r)[k]).collect();
            Moments::from_slice(&vals).std_error()
        })
    };
    match m {
        3 => {
            let design: Vec<Vec<f64>> = t_grid.iter().map(|&t| vec![t.sqrt(), t, t * t.sqrt()]).collect();
            let fit = weighted_least_squares(&design, &y, &sigma)?;
            let apply = |r: &[f64]| fit.apply(r);
            let c1_se = replica_se(&apply, 0).unwrap_or(fit.std_errors[0]);
            let c2_se = replica_se(&apply, 1).unwrap_or(fit.std_errors[1]);
            Ok(HeatContentFit {
                m,
                s,
                t_grid: t_grid.to_vec(),
                c1: Some(fit.coefficients[0]),
                c1_se: Some(c1_se),
                c2: Some(fit.coefficients[1]),
                c2_se: Some(c2_se),
                log_limit: None,
                log_limit_se: None,
                residual: fit.chi2,
                dof: fit.dof,
                accepted: fit.dof == 0 || fit.chi2 / fit.dof as f64 <= threshold,
            })
        }
        2 => {
            let pts: Vec<DataPoint> = t_grid
                .iter()
                .zip(estimates)
                .map(|(&t, e)| {
                    let w = (1.0 / t).ln() / s;
                    DataPoint {
                        x: t,
                        y: e.mean * w,
                        sigma: e.std_error * w,
                    }
                })
                .collect();
            let fit = fit_power_law(&pts, FitModel::InverseLog)?;
            let limit = fit.coefficient("L").unwrap();
            let mut limit_se = limit.std_error;
            if let Some(rows) = replicas {
                let design: Vec<Vec<f64>> = t_grid.iter().map(|&t| vec![1.0, 1.0 / (1.0 / t).ln()]).collect();
                let lin = weighted_least_squares(
                    &design,
                    &pts.iter().map(|p| p.y).collect::<Vec<_>>(),
                    &pts.iter().map(|p| p.sigma).collect::<Vec<_>>(),
                )?;
                let vals: Vec<f64> = rows
                    .iter()
                    .map(|r| {
                        let yr: Vec<f64> = r
                            .iter()
                            .zip(t_grid)
                            .map(|(v, &t)| v * (1.0 / t).ln() / s)
                            .collect();
                        lin.apply(&yr)[0]
                    })
                    .collect();
                limit_se = Moments::from_slice(&vals).std_error();
            }
            Ok(HeatContentFit {
                m,
                s,
                t_grid: t_grid.to_vec(),
                c1: None,
                c1_se: None,
                c2: None,
                c2_se: None,
                log_limit: Some(limit.value),
                log_limit_se: Some(limit_se),
                residual: fit.residual,
                dof: fit.dof,
                accepted: fit.dof == 0 || fit.residual / fit.dof as f64 <= threshold,
            })
        }
        _ => Err(LabError::InvalidParameter(format!(
            "small-t fits are defined for m = 2, 3, got {m}"
        ))),
    }
}

/// Relative deviation of the m = 2 extrapolated limit from `4 pi`.
pub fn log_limit_deviation(fit: &HeatContentFit) -> Option<f64> {
    fit.log_limit
        .map(|l| (l - heat_content_log_limit_2d()) / heat_content_log_limit_2d())
}

/// Spread of the conditional heat content `E_{beta_1[0,s]}(t)` across
/// independent paths `beta_1`, at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongLawRow {
    pub t: f64,
    pub mean: f64,
    /// Standard deviation of the per-path inner means.
    pub raw_std: f64,
    /// Path-to-path standard deviation with the inner Monte Carlo variance
    /// removed.
    pub path_std: f64,
    pub relative_std: f64,
    pub outer: usize,
    pub inner: usize,
}

/// Conditional heat contents `E_{beta_1[0,s]}(t)` for `outer` independent
/// paths, each averaged over `inner` independent `beta_2[0,t]`.
pub fn strong_law_check(
    m: usize,
    s: f64,
    t_grid: &[f64],
    outer: usize,
    inner: usize,
    disc: &HeatDiscretization,
    seed: u64,
) -> Result<Vec<StrongLawRow>> {
    if m != 3 {
        return Err(LabError::InvalidParameter("the strong-law check is defined for m = 3".into()));
    }
    if outer < 2 || inner < 2 {
        return Err(LabError::InvalidParameter("need at least two outer and inner replicas".into()));
    }
    let root = RngStream::new(seed, 0x57a7);
    t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let (dt, h) = if s > 0.0 {
                disc.for_times(s, t)?
            } else {
                disc.for_times(t, t)?
            };
            let per_path: Vec<(f64, f64)> = (0..outer)
                .into_par_iter()
                .map(|o| {
                    let stream = root.child(i as u64).child(o as u64);
                    let p1 = sample_path_capped(m, s, dt, &stream, DEFAULT_MAX_POINTS)?;
                    let a = raster_capped(&p1, h, disc.max_voxels)?;
                    let mut mom = Moments::new();
                    for j in 0..inner {
                        let p2 = sample_path_capped(m, t, dt, &stream.child(1_000_000 + j as u64), DEFAULT_MAX_POINTS)?;
                        let b = raster_capped(&p2, h, disc.max_voxels)?;
                        mom.push(sumset_volume(&a, &b)?);
                    }
                    Ok((mom.mean(), if inner > 1 { mom.variance() } else { 0.0 }))
                })
                .collect::<Result<_>>()?;
            let means = Moments::from_slice(&per_path.iter().map(|p| p.0).collect::<Vec<_>>());
            let within = per_path.iter().map(|p| p.1).sum::<f64>() / outer as f64;
            let between = (means.variance() - within / inner as f64).max(0.0);
            let mean = means.mean();
            Ok(StrongLawRow {
                t,
                mean,
                raw_std: means.std_dev(),
                path_std: between.sqrt(),
                relative_std: if mean > 0.0 { between.sqrt() / mean } else { 0.0 },
                outer,
                inner,
            })
        })
        .collect()
}
