//! Newtonian capacity in R^3 by walk-on-spheres, moments of the capacity of
//! a Brownian path, and sampling of equilibrium measures.
//!
//! Capacities are normalized classically: the unit ball has capacity `4 pi`.
//! A set is replaced by its closed `delta`-tube, whose capacity decreases to
//! that of the set as `delta` shrinks.

mod obstacle;

pub use obstacle::{Ball, Obstacle, Polyline, Segment, Vec3};

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::weighted_least_squares;
use crate::stats::{MCEstimate, Moments};
use crate::stochastic::{sample_path, RngStream};
use obstacle::{norm, sub};

/// Walkers sharing one random stream.
const CHUNK: usize = 512;

/// Fraction of the distance to the set used as walk-on-spheres radius.
const STEP_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    /// Tube radius; a walker closer than this to the set has hit it.
    pub delta: f64,
    pub walkers: usize,
    /// `R_out / R_launch`.
    pub r_out_factor: f64,
    /// `R_launch / (enclosing radius + 2 delta)`.
    pub launch_factor: f64,
    /// Steps after which a walker is abandoned and counted as escaped.
    pub max_steps: usize,
    pub seed: u64,
}

impl CapacityConfig {
    pub fn new(delta: f64, walkers: usize, seed: u64) -> Self {
        CapacityConfig {
            delta,
            walkers,
            r_out_factor: 8.0,
            launch_factor: 1.1,
            max_steps: 1_000_000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(LabError::InvalidParameter(format!("tube radius must be positive, got {}", self.delta)));
        }
        if self.walkers == 0 {
            return Err(LabError::InvalidParameter("walker budget is zero".into()));
        }
        if !(self.r_out_factor >= 4.0) {
            return Err(LabError::InvalidParameter(format!(
                "R_out must be at least 4 R_launch, got factor {}",
                self.r_out_factor
            )));
        }
        if !(self.launch_factor > 1.0) {
            return Err(LabError::InvalidParameter("launch sphere must strictly enclose the set".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub cap_mean: f64,
    pub cap_se: f64,
    pub delta: f64,
    pub r_launch: f64,
    pub r_out: f64,
    pub walkers: usize,
    pub hits: usize,
    /// Walkers abandoned at the step cap (counted as escaped).
    pub starved: usize,
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = norm(&v);
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Two unit vectors completing `e` to an orthonormal frame.
fn frame(e: &Vec3) -> (Vec3, Vec3) {
    let a = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = obstacle::dot(&a, e);
    let u = [a[0] - d * e[0], a[1] - d * e[1], a[2] - d * e[2]];
    let n = norm(&u);
    let u = [u[0] / n, u[1] / n, u[2] / n];
    let w = [
        e[1] * u[2] - e[2] * u[1],
        e[2] * u[0] - e[0] * u[2],
        e[0] * u[1] - e[1] * u[0],
    ];
    (u, w)
}

/// Exact hitting point on the sphere `|y - c| = big_r` of Brownian motion
/// started at `x` outside it, given that it hits.
fn reentry_point(x: &Vec3, c: &Vec3, big_r: f64, rng: &mut ChaCha8Rng) -> Vec3 {
    let rel = sub(x, c);
    let r = norm(&rel);
    let e = [rel[0] / r, rel[1] / r, rel[2] / r];
    // cos of the angle to e has density proportional to |x - y|^{-3}.
    let a = r * r + big_r * big_r;
    let b = 2.0 * r * big_r;
    let v: f64 = rng.random();
    let w = 1.0 / (r + big_r) + v * (1.0 / (r - big_r) - 1.0 / (r + big_r));
    let u = ((a - 1.0 / (w * w)) / b).clamp(-1.0, 1.0);
    let phi = 2.0 * PI * rng.random::<f64>();
    let (p, q) = frame(&e);
    let st = (1.0 - u * u).max(0.0).sqrt();
    let mut y = [0.0; 3];
    for k in 0..3 {
        y[k] = c[k] + big_r * (u * e[k] + st * (phi.cos() * p[k] + phi.sin() * q[k]));
    }
    y
}

enum Walk {
    Hit(Vec3),
    Escaped,
    Starved,
}

struct Launcher<'a, O: Obstacle + ?Sized> {
    obstacle: &'a O,
    center: Vec3,
    r_bound: f64,
    r_launch: f64,
    r_out: f64,
    delta: f64,
    max_steps: usize,
}

impl<'a, O: Obstacle + ?Sized> Launcher<'a, O> {
    fn new(obstacle: &'a O, cfg: &CapacityConfig) -> Result<Self> {
        cfg.validate()?;
        let (center, r_bound) = obstacle.bounding_sphere();
        let r_launch = cfg.launch_factor * (r_bound + 2.0 * cfg.delta);
        Ok(Launcher {
            obstacle,
            center,
            r_bound,
            r_launch,
            r_out: cfg.r_out_factor * r_launch,
            delta: cfg.delta,
            max_steps: cfg.max_steps,
        })
    }

    fn walk(&self, rng: &mut ChaCha8Rng) -> Walk {
        let c = &self.center;
        let e = unit_vector(rng);
        let mut x = [
            c[0] + self.r_launch * e[0],
            c[1] + self.r_launch * e[1],
            c[2] + self.r_launch * e[2],
        ];
        for _ in 0..self.max_steps {
            let r = norm(&sub(&x, c));
            if r >= self.r_out {
                if rng.random::<f64>() < self.r_launch / r {
                    x = reentry_point(&x, c, self.r_launch, rng);
                    continue;
                }
                return Walk::Escaped;
            }
            // Outside the launch sphere the enclosing sphere bounds the
            // distance from below and is cheaper.
            let d = if r > self.r_launch {
                r - self.r_bound
            } else {
                self.obstacle.distance(&x)
            };
            if d < self.delta {
                return Walk::Hit(x);
            }
            let e = unit_vector(rng);
            let step = STEP_FRACTION * d;
            for k in 0..3 {
                x[k] += step * e[k];
            }
        }
        Walk::Starved
    }

    /// Walks in chunk `chunk`, `[chunk * CHUNK, ...)` up to `total`.
    fn run_chunk(&self, root: &RngStream, chunk: usize, total: usize) -> Vec<Walk> {
        let mut rng = root.child(chunk as u64).rng();
        let n = CHUNK.min(total - chunk * CHUNK);
        (0..n).map(|_| self.walk(&mut rng)).collect()
    }
}

fn count_hits(walks: &[Walk]) -> (usize, usize) {
    walks.iter().fold((0, 0), |(h, s), w| match w {
        Walk::Hit(_) => (h + 1, s),
        Walk::Starved => (h, s + 1),
        Walk::Escaped => (h, s),
    })
}

/// Capacity of the `delta`-tube of `obstacle`:
/// `cap = 4 pi R_launch P(hit)` for walkers launched uniformly on a sphere of
/// radius `R_launch` centered at the enclosing sphere's center.
pub fn capacity<O: Obstacle + ?Sized>(obstacle: &O, cfg: &CapacityConfig) -> Result<CapacityEstimate> {
    let launcher = Launcher::new(obstacle, cfg)?;
    let root = RngStream::new(cfg.seed, 0xca9);
    let chunks = cfg.walkers.div_ceil(CHUNK);
    let counts: Vec<(usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|k| count_hits(&launcher.run_chunk(&root, k, cfg.walkers)))
        .collect();
    let hits: usize = counts.iter().map(|c| c.0).sum();
    let starved: usize = counts.iter().map(|c| c.1).sum();
    Ok(estimate_from_hits(&launcher, cfg, hits, starved))
}

fn estimate_from_hits<O: Obstacle + ?Sized>(
    launcher: &Launcher<'_, O>,
    cfg: &CapacityConfig,
    hits: usize,
    starved: usize,
) -> CapacityEstimate {
    let n = cfg.walkers as f64;
    let p = hits as f64 / n;
    let scale = 4.0 * PI * launcher.r_launch;
    CapacityEstimate {
        cap_mean: scale * p,
        cap_se: scale * (p * (1.0 - p) / n).sqrt(),
        delta: cfg.delta,
        r_launch: launcher.r_launch,
        r_out: launcher.r_out,
        walkers: cfg.walkers,
        hits,
        starved,
    }
}

/// Capacity estimates over a decreasing sequence of tube radii, with the
/// `delta -> 0` limit extrapolated by a weighted linear fit in `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub estimates: Vec<CapacityEstimate>,
    pub intercept: f64,
    pub intercept_se: f64,
    pub slope: f64,
}

pub fn capacity_delta_sweep<O: Obstacle + ?Sized>(
    obstacle: &O,
    deltas: &[f64],
    cfg: &CapacityConfig,
) -> Result<DeltaSweep> {
    if deltas.len() < 2 {
        return Err(LabError::InvalidParameter("a tube-radius sweep needs two radii".into()));
    }
    let estimates: Vec<CapacityEstimate> = deltas
        .iter()
        .map(|&delta| capacity(obstacle, &CapacityConfig { delta, ..*cfg }))
        .collect::<Result<_>>()?;
    let design: Vec<Vec<f64>> = deltas.iter().map(|&d| vec![1.0, d]).collect();
    let y: Vec<f64> = estimates.iter().map(|e| e.cap_mean).collect();
    let sigma: Vec<f64> = estimates.iter().map(|e| e.cap_se.max(1e-12)).collect();
    let fit = weighted_least_squares(&design, &y, &sigma)?;
    Ok(DeltaSweep {
        estimates,
        intercept: fit.coefficients[0],
        intercept_se: fit.std_errors[0],
        slope: fit.coefficients[1],
    })
}

/// Path sampling and walker budget for capacities of Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCapacityConfig {
    pub dt: f64,
    /// `delta = delta_factor * sqrt(2 dt)`.
    pub delta_factor: f64,
    pub paths: usize,
    pub walkers_per_path: usize,
    pub seed: u64,
}

impl PathCapacityConfig {
    pub fn delta(&self) -> f64 {
        self.delta_factor * (2.0 * self.dt).sqrt()
    }

    fn walker_config(&self, path_index: usize) -> CapacityConfig {
        CapacityConfig::new(
            self.delta(),
            self.walkers_per_path,
            RngStream::new(self.seed, 0xcafe).child(path_index as u64).stream_id,
        )
    }

    fn path_stream(&self, path_index: usize) -> RngStream {
        RngStream::new(self.seed, 0x9a7).child(path_index as u64)
    }
}

/// Moments `C_i = E cap(beta[0, s])^i`, `i = 1, 2, 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityMoments {
    pub s: f64,
    pub dt: f64,
    pub delta: f64,
    pub paths: usize,
    pub walkers_per_path: usize,
    pub mean: [f64; 3],
    pub se: [f64; 3],
    /// Per-path capacity estimates.
    pub per_path: Vec<CapacityEstimate>,
}

/// Unbiased estimate of `(scale * p)^k` from `hits` out of `n` Bernoulli(p).
fn power_estimate(hits: usize, n: usize, scale: f64, k: u32) -> f64 {
    let mut v = 1.0;
    for j in 0..k as usize {
        if n <= j {
            return f64::NAN;
        }
        v *= hits.saturating_sub(j) as f64 / (n - j) as f64;
    }
    v * scale.powi(k as i32)
}

fn path_hits(s: f64, cfg: &PathCapacityConfig, i: usize) -> Result<CapacityEstimate> {
    let path = sample_path(3, s, cfg.dt, &cfg.path_stream(i))?;
    let line = Polyline::from_path(&path)?;
    capacity(&line, &cfg.walker_config(i))
}

/// Capacity moments of `beta[0, s]` in R^3. The finite walker count biases
/// plain powers of per-path estimates upward; the falling-factorial
/// estimators used here are unbiased for every power.
pub fn capacity_moments(s: f64, cfg: &PathCapacityConfig) -> Result<CapacityMoments> {
    if cfg.paths < 2 {
        return Err(LabError::InvalidParameter("need at least two paths".into()));
    }
    if cfg.walkers_per_path < 3 {
        return Err(LabError::InvalidParameter("need at least three walkers per path".into()));
    }
    let per: Vec<CapacityEstimate> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| path_hits(s, cfg, i))
        .collect::<Result<_>>()?;
    let mut mean = [0.0; 3];
    let mut se = [0.0; 3];
    for k in 1..=3u32 {
        let vals: Vec<f64> = per
            .iter()
            .map(|e| power_estimate(e.hits, e.walkers, 4.0 * PI * e.r_launch, k))
            .collect();
        let mom = Moments::from_slice(&vals);
        mean[k as usize - 1] = mom.mean();
        se[k as usize - 1] = mom.std_error();
    }
    Ok(CapacityMoments {
        s,
        dt: cfg.dt,
        delta: cfg.delta(),
        paths: cfg.paths,
        walkers_per_path: cfg.walkers_per_path,
        mean,
        se,
        per_path: per,
    })
}

/// `E cap(beta[0, s])` extrapolated to zero tube radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCapacitySweep {
    pub s: f64,
    pub dts: Vec<f64>,
    pub deltas: Vec<f64>,
    pub means: Vec<MCEstimate>,
    pub intercept: f64,
    pub intercept_se: f64,
}

/// Mean capacity of `beta[0, s]` at several step sizes, each with tube
/// radius `delta_factor sqrt(2 dt)`. Coarser paths are subsamples of the
/// finest one, so the sweep uses common random numbers and the per-path
/// linear extrapolation to `delta = 0` has an honest standard error.
pub fn path_capacity_sweep(s: f64, dts: &[f64], cfg: &PathCapacityConfig) -> Result<PathCapacitySweep> {
    if dts.len() < 2 {
        return Err(LabError::InvalidParameter("a step-size sweep needs two steps".into()));
    }
    if cfg.paths < 2 {
        return Err(LabError::InvalidParameter("need at least two paths".into()));
    }
    let dt_min = dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let factors: Vec<usize> = dts
        .iter()
        .map(|&dt| {
            let f = dt / dt_min;
            if (f - f.round()).abs() > 1e-6 * f {
                Err(LabError::InvalidParameter(format!("step {dt} is not a multiple of {dt_min}")))
            } else {
                Ok(f.round() as usize)
            }
        })
        .collect::<Result<_>>()?;
    let deltas: Vec<f64> = dts.iter().map(|&dt| cfg.delta_factor * (2.0 * dt).sqrt()).collect();
    let rows: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(3, s, dt_min, &cfg.path_stream(i))?;
            factors
                .iter()
                .zip(&deltas)
                .map(|(&f, &delta)| {
                    let line = Polyline::from_path(&path.subsampled(f))?;
                    let wc = CapacityConfig {
                        delta,
                        ..cfg.walker_config(i)
                    };
                    Ok(capacity(&line, &wc)?.cap_mean)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let means: Vec<MCEstimate> = (0..dts.len())
        .map(|j| {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            MCEstimate::from_samples(&col, dts[j], deltas[j], cfg.seed)
        })
        .collect();
    let design: Vec<Vec<f64>> = deltas.iter().map(|&d| vec![1.0, d]).collect();
    let fit = weighted_least_squares(
        &design,
        &means.iter().map(|e| e.mean).collect::<Vec<_>>(),
        &means.iter().map(|e| e.std_error.max(1e-12)).collect::<Vec<_>>(),
    )?;
    let intercepts: Vec<f64> = rows.iter().map(|r| fit.apply(r)[0]).collect();
    let im = Moments::from_slice(&intercepts);
    Ok(PathCapacitySweep {
        s,
        dts: dts.to_vec(),
        deltas,
        means,
        intercept: im.mean(),
        intercept_se: im.std_error(),
    })
}

/// Hitting points of the `delta`-tube for walkers from infinity: samples of
/// the normalized equilibrium measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSample {
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub delta: f64,
    pub walkers_used: usize,
}

/// First `n_points` hits of walkers launched as in [`capacity`], with
/// `cfg.walkers` as the total walker budget.
pub fn sample_equilibrium<O: Obstacle + ?Sized>(
    obstacle: &O,
    n_points: usize,
    cfg: &CapacityConfig,
) -> Result<EquilibriumSample> {
    let launcher = Launcher::new(obstacle, cfg)?;
    let root = RngStream::new(cfg.seed, 0xe9);
    let chunks = cfg.walkers.div_ceil(CHUNK);
    let batch = rayon::current_num_threads().max(1) * 4;
    let mut points = Vec::with_capacity(n_points);
    let mut used = 0;
    let mut next = 0;
    while points.len() < n_points && next < chunks {
        let end = (next + batch).min(chunks);
        let results: Vec<Vec<Walk>> = (next..end)
            .into_par_iter()
            .map(|k| launcher.run_chunk(&root, k, cfg.walkers))
            .collect();
        for walks in results {
            for w in walks {
                if points.len() == n_points {
                    break;
                }
                used += 1;
                if let Walk::Hit(x) = w {
                    points.push(x);
                }
            }
        }
        next = end;
    }
    if points.len() < n_points {
        return Err(LabError::WalkerBudget {
            hits: points.len(),
            requested: n_points,
            walkers: cfg.walkers as u64,
        });
    }
    Ok(EquilibriumSample {
        weights: vec![1.0 / n_points as f64; n_points],
        points,
        delta: cfg.delta,
        walkers_used: used,
    })
}

/// `int int |x - y| mu(dx) mu(dy)` for the equilibrium measure `mu` of the
/// `delta`-tube: `cap^2` times the mean distance of `n_pairs` independent
/// pairs of equilibrium samples.
pub fn energy_integral<O: Obstacle + ?Sized>(
    obstacle: &O,
    n_pairs: usize,
    cfg: &CapacityConfig,
) -> Result<MCEstimate> {
    if n_pairs < 2 {
        return Err(LabError::InvalidParameter("need at least two pairs".into()));
    }
    let cap = capacity(obstacle, cfg)?;
    let sample_cfg = CapacityConfig {
        walkers: cfg.walkers.max(2 * n_pairs),
        ..*cfg
    };
    let sample = if cap.hits == 0 {
        None
    } else {
        Some(sample_equilibrium(obstacle, 2 * n_pairs, &sample_cfg))
    };
    let distances: Vec<f64> = match sample {
        None => vec![0.0; n_pairs],
        Some(Err(LabError::WalkerBudget { .. })) if cap.cap_mean < 1e-9 => vec![0.0; n_pairs],
        Some(s) => {
            let s = s?;
            s.points.chunks(2).map(|p| norm(&sub(&p[0], &p[1]))).collect()
        }
    };
    let d = Moments::from_slice(&distances);
    let mean = cap.cap_mean * cap.cap_mean * d.mean();
    let rel2 = if d.mean() > 0.0 && cap.cap_mean > 0.0 {
        (d.std_error() / d.mean()).powi(2) + (2.0 * cap.cap_se / cap.cap_mean).powi(2)
    } else {
        0.0
    };
    Ok(MCEstimate {
        mean,
        std_error: mean * rel2.sqrt(),
        replicas: n_pairs,
        dt: 0.0,
        h: cfg.delta,
        seed: cfg.seed,
    })
}

/// Mean energy integral of `beta[0, s]` over independent paths.
pub fn path_energy(s: f64, n_pairs: usize, cfg: &PathCapacityConfig) -> Result<MCEstimate> {
    let vals: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(3, s, cfg.dt, &cfg.path_stream(i))?;
            let line = Polyline::from_path(&path)?;
            Ok(energy_integral(&line, n_pairs, &cfg.walker_config(i))?.mean)
        })
        .collect::<Result<_>>()?;
    Ok(MCEstimate::from_samples(&vals, cfg.dt, cfg.delta(), cfg.seed))
}

/// `c_3 = (4 pi)^{-2} C_3 - (8 pi)^{-1} E(energy)` with propagated error.
pub fn third_coefficient(moments: &CapacityMoments, energy: &MCEstimate) -> (f64, f64) {
    let a = 1.0 / (16.0 * PI * PI);
    let b = 1.0 / (8.0 * PI);
    let v = a * moments.mean[2] - b * energy.mean;
    let se = ((a * moments.se[2]).powi(2) + (b * energy.std_error).powi(2)).sqrt();
    (v, se)
}
