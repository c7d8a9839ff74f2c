//! Cover time of the torus grid by the epsilon-neighborhood of a path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::edt::{distance_field, inradius, within};
use crate::geometry::inradius::TorusConfig;
use crate::geometry::raster::{rasterize, unravel, TorusOccupancy};
use crate::stochastic::{sample_path, step_count, wrap_to_torus, TorusPath, MAX_DIM};

/// First sample time at which every voxel center lies within `epsilon` of
/// the path raster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverRecord {
    pub epsilon: f64,
    /// Cover time, or the path duration when `censored`.
    pub t_cover: f64,
    /// Index of the covering sample.
    pub step: Option<usize>,
    pub censored: bool,
}

/// Streams path points and tracks which voxel centers are still farther
/// than `epsilon` from the raster.
#[derive(Debug, Clone)]
pub struct CoverTracker {
    occupancy: TorusOccupancy,
    epsilon: f64,
    stencil: Vec<i64>,
    covered: Vec<bool>,
    uncovered: usize,
    samples: usize,
    covered_at: Option<usize>,
    fresh: Vec<usize>,
}

impl CoverTracker {
    pub fn new(m: usize, g: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(LabError::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if g < 2 {
            return Err(LabError::InvalidParameter(format!("grid must have g >= 2, got {g}")));
        }
        let h = 1.0 / g as f64;
        let reach = ((epsilon / h).floor() as i64).min(g as i64 / 2);
        let mut stencil = Vec::new();
        let mut offset = vec![-reach; m];
        'outer: loop {
            let d2: u64 = offset.iter().map(|&o| (o * o) as u64).sum();
            if within(d2, h, epsilon) {
                stencil.extend_from_slice(&offset);
            }
            for k in 0..m {
                if offset[k] < reach {
                    offset[k] += 1;
                    continue 'outer;
                }
                offset[k] = -reach;
            }
            break;
        }
        let n = g.pow(m as u32);
        Ok(CoverTracker {
            occupancy: TorusOccupancy::new(m, g),
            epsilon,
            stencil,
            covered: vec![false; n],
            uncovered: n,
            samples: 0,
            covered_at: None,
            fresh: Vec::new(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_covered(&self) -> bool {
        self.uncovered == 0
    }

    pub fn uncovered(&self) -> usize {
        self.uncovered
    }

    /// Sample index at which coverage completed.
    pub fn covered_at(&self) -> Option<usize> {
        self.covered_at
    }

    pub fn occupancy(&self) -> &TorusOccupancy {
        &self.occupancy
    }

    /// Adds the next path point (unwrapped coordinates). Returns whether the
    /// grid is covered afterwards.
    pub fn push(&mut self, point: &[f64]) -> bool {
        let m = self.occupancy.m();
        let g = self.occupancy.g();
        let gi = g as i64;
        let mut fresh = std::mem::take(&mut self.fresh);
        fresh.clear();
        self.occupancy.push(point, |lin| fresh.push(lin));
        if self.uncovered > 0 {
            let mut base = [0i64; MAX_DIM];
            for &lin in &fresh {
                unravel(lin, g, &mut base[..m]);
                for off in self.stencil.chunks_exact(m) {
                    let mut idx = 0usize;
                    for k in (0..m).rev() {
                        idx = idx * g + (base[k] + off[k]).rem_euclid(gi) as usize;
                    }
                    if !self.covered[idx] {
                        self.covered[idx] = true;
                        self.uncovered -= 1;
                    }
                }
                if self.uncovered == 0 {
                    break;
                }
            }
            if self.uncovered == 0 {
                self.covered_at = Some(self.samples);
            }
        }
        self.fresh = fresh;
        self.samples += 1;
        self.is_covered()
    }
}

/// Cover time of the `g^m` grid by the `epsilon`-neighborhood of the
/// path raster, evaluated at sample times.
pub fn cover_time(path: &TorusPath, epsilon: f64, g: usize) -> Result<CoverRecord> {
    if path.is_empty() {
        return Err(LabError::Empty("path"));
    }
    let mut tracker = CoverTracker::new(path.m(), g, epsilon)?;
    for p in path.unwrapped.iter() {
        if tracker.push(p) {
            break;
        }
    }
    let dt = path.dt();
    Ok(match tracker.covered_at() {
        Some(k) => CoverRecord {
            epsilon,
            t_cover: k as f64 * dt,
            step: Some(k),
            censored: false,
        },
        None => CoverRecord {
            epsilon,
            t_cover: path.wrapped.duration(),
            step: None,
            censored: true,
        },
    })
}

/// One `(trajectory, epsilon)` comparison of `{rho(s) > epsilon}` with
/// `{T_epsilon > s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub replica: usize,
    pub s: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub t_cover: f64,
    pub censored: bool,
    pub rho_exceeds: bool,
    pub uncovered_at_s: bool,
}

impl IdentityRow {
    pub fn agrees(&self) -> bool {
        self.rho_exceeds == self.uncovered_at_s
    }
}

/// Inradius at `s` and cover times on the same trajectory, simulated up to
/// `horizon >= s` so that cover times on both sides of `s` occur.
pub fn cover_identity_check(
    m: usize,
    s: f64,
    horizon: f64,
    eps_list: &[f64],
    replicas: usize,
    cfg: &TorusConfig,
) -> Result<Vec<IdentityRow>> {
    if !(horizon >= s) {
        return Err(LabError::InvalidParameter(format!("horizon {horizon} shorter than s = {s}")));
    }
    if replicas == 0 || eps_list.is_empty() {
        return Err(LabError::InvalidParameter("need replicas and radii".into()));
    }
    let dt = cfg.dt();
    let n = step_count(s, dt)? as usize;
    let rows: Vec<Vec<IdentityRow>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let path = wrap_to_torus(&sample_path(m, horizon, dt, &cfg.replica_stream(r).child(0xc0))?);
            let prefix = wrap_to_torus(&path.unwrapped.prefix(n));
            let rho = inradius(&distance_field(&rasterize(&prefix, cfg.g)?)?).rho;
            eps_list
                .iter()
                .map(|&eps| {
                    let rec = cover_time(&path, eps, cfg.g)?;
                    Ok(IdentityRow {
                        replica: r,
                        s,
                        epsilon: eps,
                        rho,
                        t_cover: rec.t_cover,
                        censored: rec.censored,
                        rho_exceeds: rho > eps,
                        uncovered_at_s: rec.step.is_none_or(|k| k > n),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::edt::{distance_field, inradius};
    use crate::geometry::raster::rasterize;
    use crate::stochastic::{sample_path, wrap_to_torus, Path, RngStream};

    #[test]
    fn huge_epsilon_covers_immediately() {
        let p = wrap_to_torus(&sample_path(3, 0.1, 1e-3, &RngStream::new(1, 1)).unwrap());
        let r = cover_time(&p, 3f64.sqrt() / 2.0, 16).unwrap();
        assert_eq!(r.t_cover, 0.0);
        assert_eq!(r.step, Some(0));
        assert!(!r.censored);
    }

    #[test]
    fn zero_time_iff_epsilon_reaches_initial_inradius() {
        let p = wrap_to_torus(&Path {
            m: 2,
            dt: 0.1,
            points: vec![0.0, 0.0, 0.3, 0.1],
        });
        let g = 16;
        let field = distance_field(&rasterize(&wrap_to_torus(&p.unwrapped.prefix(0)), g).unwrap()).unwrap();
        let rho0 = inradius(&field).rho;
        assert_eq!(cover_time(&p, rho0, g).unwrap().t_cover, 0.0);
        assert!(cover_time(&p, rho0 * 0.999, g).unwrap().step != Some(0));
    }

    #[test]
    fn censored_when_path_ends_first() {
        let p = wrap_to_torus(&sample_path(2, 0.01, 1e-4, &RngStream::new(1, 2)).unwrap());
        let r = cover_time(&p, 0.01, 32).unwrap();
        assert!(r.censored);
        assert_eq!(r.step, None);
    }

    #[test]
    fn smaller_radius_never_covers_sooner() {
        let p = wrap_to_torus(&sample_path(2, 3.0, 2e-4, &RngStream::new(4, 4)).unwrap());
        let mut last = 0.0;
        for eps in [0.4, 0.3, 0.2, 0.15, 0.1, 0.07] {
            let r = cover_time(&p, eps, 32).unwrap();
            assert!(r.t_cover >= last);
            last = r.t_cover;
        }
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        assert!(CoverTracker::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn identity_on_a_few_trajectories() {
        let cfg = TorusConfig::new(24, 3);
        let rows = cover_identity_check(2, 0.3, 1.5, &[0.05, 0.1, 0.2, 0.3], 6, &cfg).unwrap();
        assert_eq!(rows.len(), 24);
        assert!(rows.iter().all(|r| r.agrees()));
        assert!(rows.iter().any(|r| r.rho_exceeds) && rows.iter().any(|r| !r.rho_exceeds));
    }
}
