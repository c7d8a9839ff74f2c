//! Smallest Dirichlet eigenvalue of `-Laplacian` on the torus with an
//! obstacle removed, by shift-invert Lanczos with conjugate-gradient solves
//! on the finite-difference operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::small_ball_eigenvalue;
use crate::error::{LabError, Result};
use crate::geometry::edt::{distance_field_from_mask, inradius};
use crate::geometry::inradius::{for_each_checkpoint, TorusConfig};
use crate::geometry::raster::unravel;
use crate::stats::quantile_sorted;
use crate::stochastic::{torus_distance, MAX_DIM};

const NONE: u32 = u32::MAX;

/// Neighbour table of a finite-difference `-Laplacian`: `2m` entries per
/// unknown, `NONE` where the neighbour is on the obstacle.
#[derive(Debug, Clone)]
struct Stencil {
    m: usize,
    g: usize,
    neighbours: Vec<u32>,
}

impl Stencil {
    fn dim(&self) -> usize {
        self.neighbours.len() / (2 * self.m)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let deg = 2 * self.m;
        let scale = (self.g * self.g) as f64;
        let diag = deg as f64;
        y.par_iter_mut()
            .zip(self.neighbours.par_chunks(deg))
            .enumerate()
            .with_min_len(4096)
            .for_each(|(i, (yi, nb))| {
                let mut acc = diag * x[i];
                for &j in nb {
                    if j != NONE {
                        acc -= x[j as usize];
                    }
                }
                *yi = scale * acc;
            });
    }

    /// Connected components, each as a sorted list of unknowns.
    fn components(&self) -> Vec<Vec<u32>> {
        let deg = 2 * self.m;
        let n = self.dim();
        let mut label = vec![NONE; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != NONE {
                continue;
            }
            let id = out.len() as u32;
            let mut members = vec![start as u32];
            label[start] = id;
            stack.push(start as u32);
            while let Some(i) = stack.pop() {
                for &j in &self.neighbours[i as usize * deg..(i as usize + 1) * deg] {
                    if j != NONE && label[j as usize] == NONE {
                        label[j as usize] = id;
                        members.push(j);
                        stack.push(j);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    /// The operator restricted to `members` (a union of components).
    fn restrict(&self, members: &[u32]) -> Stencil {
        let deg = 2 * self.m;
        let local = |j: u32| members.binary_search(&j).map_or(NONE, |k| k as u32);
        let neighbours = members
            .iter()
            .flat_map(|&i| self.neighbours[i as usize * deg..(i as usize + 1) * deg].iter())
            .map(|&j| if j == NONE { NONE } else { local(j) })
            .collect();
        Stencil {
            m: self.m,
            g: self.g,
            neighbours,
        }
    }
}

/// `(2m+1)`-point finite-difference `-Laplacian` on the free voxels of a
/// periodic grid; obstacle rows and columns are deleted (Dirichlet).
#[derive(Debug, Clone)]
pub struct GridOperator {
    /// Free-voxel index of every grid cell, `NONE` on the obstacle.
    index: Vec<u32>,
    stencil: Stencil,
    obstacle_len: usize,
}

impl GridOperator {
    pub fn new(m: usize, g: usize, obstacle: &[bool]) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&m) || g < 2 {
            return Err(LabError::InvalidParameter(format!("grid m = {m}, g = {g}")));
        }
        let total = g.checked_pow(m as u32).filter(|&n| n < NONE as usize).ok_or(LabError::ResourceLimit {
            what: "grid cells",
            requested: (g as u64).saturating_pow(m as u32),
            cap: NONE as u64,
        })?;
        if obstacle.len() != total {
            return Err(LabError::Mismatch(format!("mask has {} cells, grid {total}", obstacle.len())));
        }
        let mut index = vec![NONE; total];
        let mut free = 0u32;
        for (i, &o) in obstacle.iter().enumerate() {
            if !o {
                index[i] = free;
                free += 1;
            }
        }
        let mut neighbours = Vec::with_capacity(free as usize * 2 * m);
        let mut cell = [0i64; MAX_DIM];
        let mut strides = [1usize; MAX_DIM];
        for k in 1..m {
            strides[k] = strides[k - 1] * g;
        }
        for (lin, _) in obstacle.iter().enumerate().filter(|(_, &o)| !o) {
            unravel(lin, g, &mut cell[..m]);
            for k in 0..m {
                let c = cell[k] as usize;
                let up = if c + 1 == g { lin + strides[k] - g * strides[k] } else { lin + strides[k] };
                let down = if c == 0 { lin + (g - 1) * strides[k] } else { lin - strides[k] };
                neighbours.push(index[up]);
                neighbours.push(index[down]);
            }
        }
        Ok(GridOperator {
            index,
            stencil: Stencil { m, g, neighbours },
            obstacle_len: total - free as usize,
        })
    }

    pub fn m(&self) -> usize {
        self.stencil.m
    }

    pub fn g(&self) -> usize {
        self.stencil.g
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.index.len() - self.obstacle_len
    }

    pub fn obstacle_len(&self) -> usize {
        self.obstacle_len
    }

    /// Free-voxel index of grid cell `lin`.
    pub fn free_index(&self, lin: usize) -> Option<usize> {
        match self.index[lin] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.stencil.apply(x, y)
    }

    /// Number of connected components of the free set.
    pub fn component_count(&self) -> usize {
        self.stencil.components().len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` by conjugate gradients from the initial `x`, to relative
/// residual `tol`. Returns the iteration count.
fn conjugate_gradient(op: &Stencil, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let mut ax = vec![0.0; n];
    op.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            return Ok(it);
        }
        op.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= tol * bnorm {
        return Ok(max_iter);
    }
    Err(LabError::NoConvergence {
        solver: "conjugate gradient",
        iterations: max_iter,
        residual: rr.sqrt() / bnorm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralStatus {
    Converged,
    /// No obstacle: the torus is closed and `lambda_1 = 0`.
    EmptyObstacle,
    /// No free voxel: the spectrum is empty and `lambda1` is infinite.
    EmptyDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// `|A v - lambda v| / |v|`.
    pub residual: f64,
    pub iterations: usize,
    pub cg_iterations: usize,
    pub g: usize,
    pub status: SpectralStatus,
    /// Eigenvector on the free voxels, unit norm.
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSettings {
    /// Relative eigen-residual `|A v - lambda v| / lambda` to reach.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_cg_iterations: usize,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            tol: 1e-6,
            max_iterations: 2000,
            max_cg_iterations: 100_000,
        }
    }
}

/// Smallest eigenpair. The free set is split into connected components, each
/// with a simple ground state, and shift-invert Lanczos (inner solves to
/// `tol / 10`) runs on every component; the lowest wins and its vector is
/// extended by zero.
pub fn smallest_eigenvalue(op: &GridOperator, settings: &EigenSettings) -> Result<SpectralResult> {
    let n = op.dim();
    let g = op.g();
    if op.obstacle_len() == 0 {
        return Ok(SpectralResult {
            lambda1: 0.0,
            residual: 0.0,
            iterations: 0,
            cg_iterations: 0,
            g,
            status: SpectralStatus::EmptyObstacle,
            vector: vec![1.0 / (n as f64).sqrt(); n],
        });
    }
    if n == 0 {
        return Ok(SpectralResult {
            lambda1: f64::INFINITY,
            residual: 0.0,
            iterations: 0,
            cg_iterations: 0,
            g,
            status: SpectralStatus::EmptyDomain,
            vector: Vec::new(),
        });
    }
    if !(settings.tol > 0.0) {
        return Err(LabError::InvalidParameter(format!("tolerance {}", settings.tol)));
    }
    let components = op.stencil.components();
    if components.len() == 1 {
        return shift_invert_lanczos(&op.stencil, settings);
    }
    let mut best: Option<(SpectralResult, &[u32])> = None;
    let (mut iterations, mut cg_iterations) = (0, 0);
    for members in &components {
        let r = shift_invert_lanczos(&op.stencil.restrict(members), settings)?;
        iterations += r.iterations;
        cg_iterations += r.cg_iterations;
        if best.as_ref().is_none_or(|(b, _)| r.lambda1 < b.lambda1) {
            best = Some((r, members));
        }
    }
    let (mut r, members) = best.expect("at least one component");
    let mut vector = vec![0.0; n];
    for (&i, &x) in members.iter().zip(&r.vector) {
        vector[i as usize] = x;
    }
    r.vector = vector;
    r.iterations = iterations;
    r.cg_iterations = cg_iterations;
    Ok(r)
}

/// Krylov basis size per restart.
const KRYLOV: usize = 12;

/// Restarted shift-invert Lanczos: a Krylov basis of `A^-1` from the current
/// vector, Rayleigh-Ritz with the exact `A`, restart from the lowest Ritz
/// vector. Clustered ground states converge far faster than with plain
/// inverse iteration. `iterations` counts inner solves.
fn shift_invert_lanczos(op: &Stencil, settings: &EigenSettings) -> Result<SpectralResult> {
    let n = op.dim();
    // The ground state is positive, so a constant start overlaps it.
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut av = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(KRYLOV);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(KRYLOV);
    let mut solves = 0;
    let mut cg_total = 0;
    let mut residual = f64::INFINITY;
    let mut lambda = f64::NAN;
    while solves < settings.max_iterations {
        basis.clear();
        basis.push(v.clone());
        while basis.len() < KRYLOV.min(n) && solves < settings.max_iterations {
            let b = basis.last().expect("nonempty basis");
            let mut x = vec![0.0; n];
            cg_total += conjugate_gradient(op, b, &mut x, settings.tol / 10.0, settings.max_cg_iterations)?;
            solves += 1;
            let raw = norm(&x);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &x);
                    x.iter_mut().zip(q).for_each(|(xi, qi)| *xi -= c * qi);
                }
            }
            let xn = norm(&x);
            // Breakdown: the basis spans an invariant subspace.
            if !(xn > 1e-10 * raw) {
                break;
            }
            x.iter_mut().for_each(|xi| *xi /= xn);
            basis.push(x);
        }
        images.clear();
        for q in &basis {
            let mut y = vec![0.0; n];
            op.apply(q, &mut y);
            images.push(y);
        }
        let k = basis.len();
        let h = nalgebra::DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])));
        let eig = h.symmetric_eigen();
        let low = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).expect("nonempty");
        let y = eig.eigenvectors.column(low);
        v.iter_mut().for_each(|x| *x = 0.0);
        av.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..k {
            v.iter_mut().zip(&basis[j]).for_each(|(a, b)| *a += y[j] * b);
            av.iter_mut().zip(&images[j]).for_each(|(a, b)| *a += y[j] * b);
        }
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        // Recompute A v exactly rather than trusting the combination.
        op.apply(&v, &mut av);
        lambda = dot(&v, &av);
        residual = av.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        // A one-vector basis means `v` is invariant up to roundoff.
        if residual <= settings.tol * lambda || k == 1 {
            // The ground state has one sign; fix it positive.
            if v.iter().sum::<f64>() < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            return Ok(SpectralResult {
                lambda1: lambda,
                residual,
                iterations: solves,
                cg_iterations: cg_total,
                g: op.g,
                status: SpectralStatus::Converged,
                vector: v,
            });
        }
    }
    Err(LabError::NoConvergence {
        solver: "shift-invert Lanczos",
        iterations: solves,
        residual: residual / lambda,
    })
}

/// Voxels whose centres lie within torus distance `epsilon` of the origin.
pub fn ball_mask(m: usize, g: usize, epsilon: f64) -> Vec<bool> {
    let total = g.pow(m as u32);
    let h = 1.0 / g as f64;
    let origin = [0.0; MAX_DIM];
    let mut cell = [0i64; MAX_DIM];
    let mut x = [0.0; MAX_DIM];
    (0..total)
        .map(|lin| {
            unravel(lin, g, &mut cell[..m]);
            for k in 0..m {
                x[k] = cell[k] as f64 * h;
            }
            torus_distance(&x[..m], &origin[..m]) <= epsilon
        })
        .collect()
}

/// The hyperplane `{x_1 = 0}` as a one-voxel-thick slab.
pub fn slab_mask(m: usize, g: usize) -> Vec<bool> {
    (0..g.pow(m as u32)).map(|lin| lin % g == 0).collect()
}

/// Finite-difference ground state of the slab problem: `(2 - 2 cos(pi/g)) g^2`.
pub fn slab_discrete_eigenvalue(g: usize) -> f64 {
    let g = g as f64;
    (2.0 - 2.0 * (std::f64::consts::PI / g).cos()) * g * g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallRow {
    pub m: usize,
    pub g: usize,
    pub epsilon: f64,
    pub lambda1: f64,
    pub theory: f64,
    pub relative_deviation: f64,
    pub residual: f64,
}

/// `lambda_1` of the torus minus a small ball, for each radius, against the
/// small-ball law.
pub fn eigen_smallball_curve(
    m: usize,
    eps_list: &[f64],
    g: usize,
    settings: &EigenSettings,
) -> Result<Vec<SmallBallRow>> {
    if m < 2 {
        return Err(LabError::InvalidParameter("small-ball law needs m >= 2".into()));
    }
    let h = 1.0 / g as f64;
    eps_list
        .iter()
        .map(|&eps| {
            if !(eps > h && eps < 0.25) {
                return Err(LabError::InvalidParameter(format!(
                    "radius {eps} outside (h, 1/4) with h = {h}"
                )));
            }
            let op = GridOperator::new(m, g, &ball_mask(m, g, eps))?;
            let res = smallest_eigenvalue(&op, settings)?;
            let theory = small_ball_eigenvalue(m as u32, eps);
            Ok(SmallBallRow {
                m,
                g,
                epsilon: eps,
                lambda1: res.lambda1,
                theory,
                relative_deviation: (res.lambda1 - theory) / theory,
                residual: res.residual,
            })
        })
        .collect()
}

/// One `(rho(s), lambda_1(s))` pair from a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub m: usize,
    pub s: f64,
    pub g: usize,
    pub replica: usize,
    pub rho: f64,
    pub lambda1: f64,
    pub residual: f64,
    pub seed: u64,
}

/// Per-`s` summary of the probe. Not a test of anything: the statistics
/// are compared with conjectured constants only to show a trend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub s: f64,
    pub replicas: usize,
    pub mean_lambda: f64,
    /// Quartiles of `lambda_1 rho^2 / pi^2`.
    pub ratio_q1: f64,
    pub ratio_median: f64,
    pub ratio_q3: f64,
    /// m = 3: `(log s / s)^2 E lambda_1`; m = 2: `s^{-1/2} log E lambda_1`.
    pub statistic: f64,
    /// Conjectured limit of `statistic`.
    pub conjectured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeTable {
    pub rows: Vec<ProbeRow>,
    pub summary: Vec<ProbeSummary>,
    /// Whether `lambda_1` was nondecreasing in `s` along every trajectory.
    pub monotone: bool,
}

fn conjectured_statistic(m: usize, s: f64, mean_lambda: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    if m == 3 {
        ((s.ln() / s).powi(2) * mean_lambda, (2.0 * PI).powi(4) / 9.0)
    } else {
        (mean_lambda.ln() / s.sqrt(), 2.0 * PI.sqrt())
    }
}

/// Inradius and smallest eigenvalue at every `s` of `s_list` along
/// shared-prefix trajectories; rows ordered by replica, then `s`. The flag
/// reports whether `lambda_1` was nondecreasing in `s` on every trajectory.
pub fn path_spectrum(
    m: usize,
    s_list: &[f64],
    replicas: usize,
    cfg: &TorusConfig,
    settings: &EigenSettings,
) -> Result<(Vec<ProbeRow>, bool)> {
    if replicas == 0 {
        return Err(LabError::InvalidParameter("replica budget is zero".into()));
    }
    let per_replica: Vec<Vec<ProbeRow>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rows = Vec::with_capacity(s_list.len());
            for_each_checkpoint(m, s_list, cfg, &cfg.replica_stream(r), |k, mask| {
                let rho = inradius(&distance_field_from_mask(m, cfg.g, mask)?).rho;
                let op = GridOperator::new(m, cfg.g, mask)?;
                let res = smallest_eigenvalue(&op, settings)?;
                rows.push(ProbeRow {
                    m,
                    s: s_list[k],
                    g: cfg.g,
                    replica: r,
                    rho,
                    lambda1: res.lambda1,
                    residual: res.residual,
                    seed: cfg.seed,
                });
                Ok(())
            })?;
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let monotone = per_replica.iter().all(|rows| {
        rows.windows(2)
            .all(|w| w[1].lambda1 >= w[0].lambda1 * (1.0 - 10.0 * settings.tol))
    });
    Ok((per_replica.into_iter().flatten().collect(), monotone))
}

/// [`path_spectrum`] summarized against the conjectured large-`s` laws.
pub fn conjecture_probe(
    m: usize,
    s_list: &[f64],
    replicas: usize,
    cfg: &TorusConfig,
    settings: &EigenSettings,
) -> Result<ProbeTable> {
    if m != 2 && m != 3 {
        return Err(LabError::InvalidParameter(format!("probes are defined for m = 2, 3, got {m}")));
    }
    let (rows, monotone) = path_spectrum(m, s_list, replicas, cfg, settings)?;
    let n = s_list.len();
    let at = |k: usize| rows.iter().skip(k).step_by(n);
    let summary = s_list
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut ratios: Vec<f64> = at(k)
                .map(|row| row.lambda1 * row.rho.powi(2) / std::f64::consts::PI.powi(2))
                .collect();
            ratios.sort_by(f64::total_cmp);
            let mean_lambda = at(k).map(|row| row.lambda1).sum::<f64>() / replicas as f64;
            let (statistic, conjectured) = conjectured_statistic(m, s, mean_lambda);
            ProbeSummary {
                s,
                replicas,
                mean_lambda,
                ratio_q1: quantile_sorted(&ratios, 0.25),
                ratio_median: quantile_sorted(&ratios, 0.5),
                ratio_q3: quantile_sorted(&ratios, 0.75),
                statistic,
                conjectured,
            }
        })
        .collect();
    Ok(ProbeTable {
        rows,
        summary,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn dense(op: &GridOperator) -> DMatrix<f64> {
        let n = op.dim();
        let mut a = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut col);
            for i in 0..n {
                a[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        a
    }

    #[test]
    fn empty_obstacle_and_domain() {
        let op = GridOperator::new(2, 6, &[false; 36]).unwrap();
        let r = smallest_eigenvalue(&op, &EigenSettings::default()).unwrap();
        assert_eq!(r.status, SpectralStatus::EmptyObstacle);
        assert_eq!(r.lambda1, 0.0);
        let op = GridOperator::new(2, 6, &[true; 36]).unwrap();
        let r = smallest_eigenvalue(&op, &EigenSettings::default()).unwrap();
        assert_eq!(r.status, SpectralStatus::EmptyDomain);
    }

    #[test]
    fn operator_is_symmetric() {
        let mask = ball_mask(3, 6, 0.2);
        let a = dense(&GridOperator::new(3, 6, &mask).unwrap());
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn slab_matches_discrete_formula() {
        let op = GridOperator::new(2, 32, &slab_mask(2, 32)).unwrap();
        let r = smallest_eigenvalue(&op, &EigenSettings { tol: 1e-10, ..Default::default() }).unwrap();
        let want = slab_discrete_eigenvalue(32);
        assert!((r.lambda1 - want).abs() < 1e-8 * want, "{} vs {want}", r.lambda1);
    }

    #[test]
    fn disconnected_free_set_takes_the_widest_slab() {
        let g = 32;
        let mask: Vec<bool> = (0..g * g).map(|lin| lin % g == 0 || lin % g == 10).collect();
        let op = GridOperator::new(2, g, &mask).unwrap();
        assert_eq!(op.component_count(), 2);
        let r = smallest_eigenvalue(&op, &EigenSettings::default()).unwrap();
        let want = (2.0 - 2.0 * (std::f64::consts::PI / 22.0).cos()) * (g * g) as f64;
        assert!((r.lambda1 - want).abs() / want < 1e-6);
        let mut av = vec![0.0; op.dim()];
        op.apply(&r.vector, &mut av);
        let res: f64 = av.iter().zip(&r.vector).map(|(a, v)| (a - r.lambda1 * v).powi(2)).sum::<f64>().sqrt();
        assert!(res <= 1e-5 * r.lambda1);
    }

    #[test]
    fn rayleigh_quotient_sandwich() {
        let op = GridOperator::new(2, 24, &ball_mask(2, 24, 0.1)).unwrap();
        let r = smallest_eigenvalue(&op, &EigenSettings::default()).unwrap();
        let mut av = vec![0.0; op.dim()];
        op.apply(&r.vector, &mut av);
        let rq = dot(&r.vector, &av) / dot(&r.vector, &r.vector);
        assert!((rq - r.lambda1).abs() <= r.residual + 1e-12);
    }

    #[test]
    fn domain_monotonicity() {
        let s = EigenSettings::default();
        let small = smallest_eigenvalue(&GridOperator::new(2, 32, &ball_mask(2, 32, 0.05)).unwrap(), &s).unwrap();
        let big = smallest_eigenvalue(&GridOperator::new(2, 32, &ball_mask(2, 32, 0.1)).unwrap(), &s).unwrap();
        assert!(big.lambda1 > small.lambda1);
    }

    #[test]
    fn probe_rows_pair_rho_and_lambda() {
        let cfg = TorusConfig::new(16, 2);
        let t = conjecture_probe(2, &[0.05, 0.1, 0.2], 3, &cfg, &EigenSettings::default()).unwrap();
        assert_eq!(t.rows.len(), 9);
        assert!(t.monotone);
        for row in &t.rows {
            assert!(row.rho > 0.0 && row.lambda1 > 0.0);
        }
        assert!(t.summary.iter().all(|s| s.ratio_q1 <= s.ratio_median && s.ratio_median <= s.ratio_q3));
    }

    #[test]
    fn radius_below_resolution_is_rejected() {
        assert!(eigen_smallball_curve(2, &[0.01], 32, &EigenSettings::default()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_dense_diagonalization(
            m in 2usize..=3,
            g in 3usize..=8,
            bits in prop::collection::vec(prop::bool::weighted(0.2), 512),
        ) {
            let total = g.pow(m as u32);
            let mut mask = bits[..total].to_vec();
            mask[0] = true;
            let op = GridOperator::new(m, g, &mask).unwrap();
            prop_assume!(op.dim() > 0);
            let settings = EigenSettings { tol: 1e-11, max_iterations: 20_000, ..Default::default() };
            let got = smallest_eigenvalue(&op, &settings).unwrap();
            let eig = dense(&op).symmetric_eigen();
            let want = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!((got.lambda1 - want).abs() <= 1e-8 * want, "{} vs {}", got.lambda1, want);
        }
    }
}
