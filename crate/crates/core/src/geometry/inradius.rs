//! Monte Carlo mean of the inradius of the torus cut by a Brownian path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{inradius_limit, inradius_log_slope_2d};
use crate::error::{LabError, Result};
use crate::fit::{fit_power_law, DataPoint, FitModel, FitResult};
use crate::geometry::edt::{distance_field_from_mask, inradius};
use crate::geometry::raster::TorusOccupancy;
use crate::stats::Moments;
use crate::stochastic::{step_count, IncrementSampler, RngStream, MAX_DIM};

/// Discretization of torus experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusConfig {
    /// Grid cells per axis.
    pub g: usize,
    /// Time step; `None` selects `h^2 / 8`, i.e. `sqrt(2 dt) = h / 2`.
    pub dt: Option<f64>,
    pub seed: u64,
    /// Cap on simulated steps per trajectory.
    pub max_steps: u64,
}

impl TorusConfig {
    pub fn new(g: usize, seed: u64) -> Self {
        TorusConfig {
            g,
            dt: None,
            seed,
            max_steps: 2_000_000_000,
        }
    }

    pub fn h(&self) -> f64 {
        1.0 / self.g as f64
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.h() * self.h() / 8.0)
    }

    pub fn replica_stream(&self, replica: usize) -> RngStream {
        RngStream::new(self.seed, 0x1a7d).child(replica as u64)
    }
}

fn check_s_list(s_list: &[f64]) -> Result<()> {
    if s_list.is_empty() {
        return Err(LabError::InvalidParameter("s_list is empty".into()));
    }
    if s_list.windows(2).any(|w| !(w[1] > w[0])) || !(s_list[0] >= 0.0) {
        return Err(LabError::InvalidParameter("s_list must be increasing and non-negative".into()));
    }
    Ok(())
}

/// Inradius `rho(s)` at every `s` of `s_list` along one trajectory.
/// The trajectory is simulated once; later times extend the same path.
pub fn inradius_trajectory(
    m: usize,
    s_list: &[f64],
    cfg: &TorusConfig,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(s_list.len());
    for_each_checkpoint(m, s_list, cfg, stream, |_, mask| {
        let field = distance_field_from_mask(m, cfg.g, mask)?;
        out.push(inradius(&field).rho);
        Ok(())
    })?;
    Ok(out)
}

/// Streams one torus trajectory and calls `visit(k, mask)` with the
/// occupancy mask of `beta[0, s_list[k]]`; prefixes are shared.
pub fn for_each_checkpoint(
    m: usize,
    s_list: &[f64],
    cfg: &TorusConfig,
    stream: &RngStream,
    mut visit: impl FnMut(usize, &[bool]) -> Result<()>,
) -> Result<()> {
    check_s_list(s_list)?;
    let dt = cfg.dt();
    let checkpoints: Vec<u64> = s_list.iter().map(|&s| step_count(s, dt)).collect::<Result<_>>()?;
    let last = *checkpoints.last().unwrap();
    if last > cfg.max_steps {
        return Err(LabError::ResourceLimit {
            what: "trajectory steps",
            requested: last,
            cap: cfg.max_steps,
        });
    }
    let mut occupancy = TorusOccupancy::new(m, cfg.g);
    let mut sampler = IncrementSampler::new(m, dt, stream);
    let mut point = [0.0; MAX_DIM];
    occupancy.push(&point[..m], |_| {});
    let mut step = 0u64;
    for (k, &target) in checkpoints.iter().enumerate() {
        while step < target {
            sampler.advance(&mut point[..m]);
            occupancy.push(&point[..m], |_| {});
            step += 1;
        }
        visit(k, occupancy.mask())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InradiusRow {
    pub s: f64,
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
    /// Voxel quantization bound `h sqrt(m)`.
    pub quantization: f64,
    /// `(s / ln s)^{1/(m-2)} E rho(s)` for m >= 3.
    pub levelled: Option<f64>,
    pub levelled_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InradiusCurve {
    pub m: usize,
    pub g: usize,
    pub dt: f64,
    pub seed: u64,
    pub rows: Vec<InradiusRow>,
    /// `samples[r][k]` is `rho(s_k)` of replica `r`.
    pub samples: Vec<Vec<f64>>,
    /// Levelled-constant fit (m >= 3) or log-slope fit in `sqrt(s)` (m = 2);
    /// `None` when the data cannot support the fit (e.g. a zero mean).
    pub fit: Option<FitResult>,
    pub fit_error: Option<String>,
}

/// Mean inradius over `replicas` trajectories at each `s` in `s_list`, with
/// the levelled constant (m >= 3) or the log-slope against `sqrt(s)` (m = 2).
pub fn mean_inradius_curve(
    m: usize,
    s_list: &[f64],
    replicas: usize,
    cfg: &TorusConfig,
) -> Result<InradiusCurve> {
    if replicas == 0 {
        return Err(LabError::InvalidParameter("replica budget is zero".into()));
    }
    check_s_list(s_list)?;
    let samples: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| inradius_trajectory(m, s_list, cfg, &cfg.replica_stream(r)))
        .collect::<Result<_>>()?;
    let h = cfg.h();
    let rows: Vec<InradiusRow> = s_list
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let mom = Moments::from_slice(&samples.iter().map(|v| v[k]).collect::<Vec<_>>());
            let level = (m >= 3 && s > 1.0).then(|| (s / s.ln()).powf(1.0 / (m as f64 - 2.0)));
            InradiusRow {
                s,
                mean: mom.mean(),
                std_error: mom.std_error(),
                replicas,
                quantization: h * (m as f64).sqrt(),
                levelled: level.map(|l| l * mom.mean()),
                levelled_se: level.map(|l| l * mom.std_error()),
            }
        })
        .collect();
    let (fit, fit_error) = match fit_inradius(m, &rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(InradiusCurve {
        m,
        g: cfg.g,
        dt: cfg.dt(),
        seed: cfg.seed,
        rows,
        samples,
        fit,
        fit_error,
    })
}

fn fit_inradius(m: usize, rows: &[InradiusRow]) -> Result<FitResult> {
    if m >= 3 {
        let pts: Vec<DataPoint> = rows
            .iter()
            .filter(|r| r.s > 1.0)
            .map(|r| DataPoint {
                x: r.s,
                y: r.mean,
                sigma: r.std_error,
            })
            .collect();
        Ok(fit_power_law(&pts, FitModel::PowerLog {
            exponent: 1.0 / (m as f64 - 2.0),
        })?
        .with_theory("C", inradius_limit(m as u32)))
    } else {
        let pts: Vec<DataPoint> = rows
            .iter()
            .map(|r| DataPoint {
                x: r.s.sqrt(),
                y: r.mean,
                sigma: r.std_error,
            })
            .collect();
        Ok(fit_power_law(&pts, FitModel::LogLinear)?.with_theory("b", inradius_log_slope_2d()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_is_nonincreasing_along_a_trajectory() {
        let cfg = TorusConfig::new(16, 3);
        let rho = inradius_trajectory(2, &[0.0, 0.1, 0.5, 1.0, 2.0], &cfg, &cfg.replica_stream(0)).unwrap();
        assert_eq!(rho[0], 2f64.sqrt() / 2.0);
        assert!(rho.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_replicas_rejected() {
        let cfg = TorusConfig::new(8, 1);
        assert!(mean_inradius_curve(3, &[1.0], 0, &cfg).is_err());
        assert!(mean_inradius_curve(3, &[2.0, 1.0], 2, &cfg).is_err());
    }

    #[test]
    fn curve_is_deterministic() {
        let cfg = TorusConfig::new(8, 5);
        let a = mean_inradius_curve(3, &[2.0, 4.0, 8.0], 4, &cfg).unwrap();
        let b = mean_inradius_curve(3, &[2.0, 4.0, 8.0], 4, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.fit.is_some() != a.fit_error.is_some());
    }
}
