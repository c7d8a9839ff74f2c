//! Fast end-to-end sanity checks against exact or closed-form oracles.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::fit::{fit_power_law, DataPoint, FitModel};
use crate::geometry::{cover_identity_check, distance_field, TorusConfig, VoxelSet};
use crate::potential::{capacity, Ball, CapacityConfig};
use crate::sausage::sumset_count;
use crate::spectral::{slab_discrete_eigenvalue, slab_mask, smallest_eigenvalue, EigenSettings, GridOperator};
use crate::stats::Moments;
use crate::stochastic::{sample_path, torus_distance, RngStream, GENERATOR_VARIANCE};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> SelfTestResult {
    match f() {
        Ok((passed, detail)) => SelfTestResult { name, passed, detail },
        Err(e) => SelfTestResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn increment_variance() -> Result<(bool, String)> {
    let dt = 1e-3;
    let p = sample_path(3, 20.0, dt, &RngStream::new(1, 1))?;
    let mut sq = Moments::new();
    for w in p.points.chunks(3).collect::<Vec<_>>().windows(2) {
        for k in 0..3 {
            let d = w[1][k] - w[0][k];
            sq.push(d * d);
        }
    }
    let want = GENERATOR_VARIANCE * dt;
    let z = (sq.mean() - want) / sq.std_error();
    Ok((z.abs() < 3.0, format!("variance {:.6e} vs {want:.6e} (z = {z:.2})", sq.mean())))
}

fn sumset_symmetry() -> Result<(bool, String)> {
    use rand::Rng;
    let mut rng = RngStream::new(2, 2).rng();
    for _ in 0..20 {
        let a: Vec<i64> = (0..3 * rng.random_range(1..30)).map(|_| rng.random_range(-5..5)).collect();
        let b: Vec<i64> = (0..3 * rng.random_range(1..30)).map(|_| rng.random_range(-8..8)).collect();
        let a = VoxelSet::from_cells(3, 0.1, None, a)?;
        let b = VoxelSet::from_cells(3, 0.1, None, b)?;
        if sumset_count(&a, &b)? != sumset_count(&b, &a)? {
            return Ok((false, "asymmetric sumset".into()));
        }
    }
    Ok((true, "20 random pairs".into()))
}

fn distance_transform() -> Result<(bool, String)> {
    use rand::Rng;
    let mut rng = RngStream::new(3, 3).rng();
    let g = 12usize;
    let h = 1.0 / g as f64;
    let cells: Vec<i64> = (0..2 * 9).map(|_| rng.random_range(0..g as i64)).collect();
    let obstacle = VoxelSet::from_cells(2, h, Some(g), cells)?;
    let field = distance_field(&obstacle)?;
    let mut worst: f64 = 0.0;
    for lin in 0..g * g {
        let x = [(lin % g) as f64 * h, (lin / g) as f64 * h];
        let brute = obstacle
            .iter()
            .map(|c| torus_distance(&x, &[c[0] as f64 * h, c[1] as f64 * h]))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((field.value(lin) - brute).abs());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.1e}")))
}

fn ball_capacity_check() -> Result<(bool, String)> {
    let ball = Ball::new([0.0; 3], 1.0)?;
    let e = capacity(&ball, &CapacityConfig::new(1e-3, 20_000, 4))?;
    let want = 4.0 * PI * (1.0 + 1e-3);
    let z = (e.cap_mean - want) / e.cap_se;
    Ok((z.abs() < 3.5, format!("{:.4} +- {:.4} vs {want:.4}", e.cap_mean, e.cap_se)))
}

fn slab_eigenvalue() -> Result<(bool, String)> {
    let g = 32;
    let op = GridOperator::new(2, g, &slab_mask(2, g))?;
    let r = smallest_eigenvalue(&op, &EigenSettings { tol: 1e-10, ..Default::default() })?;
    let want = slab_discrete_eigenvalue(g);
    let rel = (r.lambda1 - want).abs() / want;
    Ok((rel < 1e-8, format!("{:.8} vs {want:.8}", r.lambda1)))
}

fn cover_identity() -> Result<(bool, String)> {
    let rows = cover_identity_check(2, 0.2, 0.6, &[0.05, 0.1, 0.2], 8, &TorusConfig::new(24, 5))?;
    let bad = rows.iter().filter(|r| !r.agrees()).count();
    Ok((bad == 0, format!("{} of {} agree", rows.len() - bad, rows.len())))
}

fn synthetic_fit() -> Result<(bool, String)> {
    let pts: Vec<DataPoint> = [4.0f64, 9.0, 16.0, 25.0, 36.0]
        .iter()
        .map(|&s| DataPoint {
            x: s.sqrt(),
            y: (-1.7725 * s.sqrt()).exp(),
            sigma: 0.01 * (-1.7725 * s.sqrt()).exp(),
        })
        .collect();
    let fit = fit_power_law(&pts, FitModel::LogLinear)?;
    let b = fit.coefficient("b").map_or(f64::NAN, |c| c.value);
    Ok(((b + 1.7725).abs() < 1e-9, format!("slope {b:.6}")))
}

/// Runs every check; none takes more than a fraction of a second.
pub fn selftest() -> Vec<SelfTestResult> {
    vec![
        check("increment variance", increment_variance),
        check("sumset symmetry", sumset_symmetry),
        check("periodic distance transform", distance_transform),
        check("ball capacity", ball_capacity_check),
        check("slab eigenvalue", slab_eigenvalue),
        check("cover-time identity", cover_identity),
        check("log-linear fit", synthetic_fit),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for r in super::selftest() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
