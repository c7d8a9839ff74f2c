//! Reproducible random streams and Brownian path sampling.
//!
//! Brownian motion here has the Laplacian as generator: every coordinate
//! increment over a step `dt` is `N(0, 2 dt)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};

/// Variance of one coordinate of `beta(t)` per unit time.
pub const GENERATOR_VARIANCE: f64 = 2.0;

/// Default cap on the number of stored path points.
pub const DEFAULT_MAX_POINTS: u64 = 50_000_000;

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

/// A `(master_seed, stream_id)` pair identifying one independent random
/// sequence. ChaCha8 keyed by the master seed, with the stream id selecting
/// the ChaCha stream, so sequences are platform independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    /// A distinct stream derived from this one, e.g. one per replica.
    pub fn child(&self, tag: u64) -> Self {
        RngStream {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x5851_f42d))),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Sequential generator of Gaussian path increments.
pub struct IncrementSampler {
    m: usize,
    sigma: f64,
    rng: ChaCha8Rng,
}

impl IncrementSampler {
    pub fn new(m: usize, dt: f64, stream: &RngStream) -> Self {
        IncrementSampler {
            m,
            sigma: (GENERATOR_VARIANCE * dt).sqrt(),
            rng: stream.rng(),
        }
    }

    /// Fills `out[..m]` with one increment.
    #[inline]
    pub fn fill(&mut self, out: &mut [f64]) {
        for v in out.iter_mut().take(self.m) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = self.sigma * z;
        }
    }

    /// Advances `point[..m]` by one increment.
    #[inline]
    pub fn advance(&mut self, point: &mut [f64]) {
        for v in point.iter_mut().take(self.m) {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v += self.sigma * z;
        }
    }
}

/// Number of steps for a path of duration `s` at step `dt`.
pub fn step_count(s: f64, dt: f64) -> Result<u64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(LabError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(LabError::InvalidParameter(format!("s must be non-negative, got {s}")));
    }
    let n = (s / dt).round();
    if n >= u64::MAX as f64 {
        return Err(LabError::ResourceLimit {
            what: "path steps",
            requested: u64::MAX,
            cap: DEFAULT_MAX_POINTS,
        });
    }
    Ok(n as u64)
}

fn check_dim(m: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&m) {
        return Err(LabError::InvalidParameter(format!(
            "dimension must lie in 2..={MAX_DIM}, got {m}"
        )));
    }
    Ok(())
}

/// A discretized Brownian trajectory in R^m.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub m: usize,
    pub dt: f64,
    /// Flattened `(n + 1) * m` coordinates.
    pub points: Vec<f64>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.points.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.len().saturating_sub(1)
    }

    /// Total time `n * dt`.
    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.m)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// Prefix covering `[0, steps * dt]`.
    pub fn prefix(&self, steps: usize) -> Path {
        let k = (steps + 1).min(self.len());
        Path {
            m: self.m,
            dt: self.dt,
            points: self.points[..k * self.m].to_vec(),
        }
    }

    /// Multiplies all coordinates by `a` and time by `a^2`.
    pub fn rescaled(&self, a: f64) -> Path {
        Path {
            m: self.m,
            dt: self.dt * a * a,
            points: self.points.iter().map(|x| x * a).collect(),
        }
    }

    /// Keeps every `factor`-th point; the law is that of a path at step
    /// `factor * dt`.
    pub fn subsampled(&self, factor: usize) -> Path {
        assert!(factor >= 1);
        let points = self
            .iter()
            .step_by(factor)
            .flat_map(|p| p.iter().copied())
            .collect();
        Path {
            m: self.m,
            dt: self.dt * factor as f64,
            points,
        }
    }
}

/// Samples `beta[0, s]` started at the origin.
pub fn sample_path(m: usize, s: f64, dt: f64, stream: &RngStream) -> Result<Path> {
    sample_path_capped(m, s, dt, stream, DEFAULT_MAX_POINTS)
}

/// [`sample_path`] with an explicit cap on stored points.
pub fn sample_path_capped(
    m: usize,
    s: f64,
    dt: f64,
    stream: &RngStream,
    max_points: u64,
) -> Result<Path> {
    check_dim(m)?;
    let n = step_count(s, dt)?;
    if n.saturating_add(1) > max_points {
        return Err(LabError::ResourceLimit {
            what: "path points",
            requested: n.saturating_add(1),
            cap: max_points,
        });
    }
    let n = n as usize;
    let mut points = vec![0.0; (n + 1) * m];
    let mut sampler = IncrementSampler::new(m, dt, stream);
    for i in 1..=n {
        let (prev, cur) = points.split_at_mut(i * m);
        let cur = &mut cur[..m];
        cur.copy_from_slice(&prev[(i - 1) * m..]);
        sampler.advance(cur);
    }
    Ok(Path { m, dt, points })
}

/// Reduces a coordinate into `(-1/2, 1/2]`.
#[inline]
pub fn wrap_coordinate(x: f64) -> f64 {
    let w = x - (x - 0.5).ceil();
    // x - ceil(x - 1/2) lies in (-1/2, 1/2] in exact arithmetic; guard the
    // rounding edge where it evaluates to exactly -1/2.
    if w <= -0.5 {
        w + 1.0
    } else {
        w
    }
}

/// Torus distance between two points of `(-1/2, 1/2]^m`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).abs().rem_euclid(1.0);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// A path wrapped onto the unit torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPath {
    /// Coordinates reduced into `(-1/2, 1/2]^m`.
    pub wrapped: Path,
    /// The path in R^m it was wrapped from.
    pub unwrapped: Path,
}

impl TorusPath {
    pub fn m(&self) -> usize {
        self.wrapped.m
    }

    pub fn dt(&self) -> f64 {
        self.wrapped.dt
    }

    pub fn len(&self) -> usize {
        self.wrapped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wrapped.is_empty()
    }
}

/// Wraps every point of `path` onto the torus. Idempotent on the wrapped
/// coordinates.
pub fn wrap_to_torus(path: &Path) -> TorusPath {
    let wrapped = Path {
        m: path.m,
        dt: path.dt,
        points: path.points.iter().map(|&x| wrap_coordinate(x)).collect(),
    };
    TorusPath {
        wrapped,
        unwrapped: path.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Moments;
    use proptest::prelude::*;

    #[test]
    fn zero_time_path_is_origin() {
        let p = sample_path(3, 0.0, 1e-3, &RngStream::new(1, 0)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.point(0), &[0.0, 0.0, 0.0]);
        assert_eq!(p.duration(), 0.0);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(sample_path(2, 1.0, 0.0, &RngStream::new(1, 0)).is_err());
        assert!(sample_path(2, 1.0, -1.0, &RngStream::new(1, 0)).is_err());
        assert!(sample_path(1, 1.0, 0.1, &RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn point_budget_is_enforced() {
        let err = sample_path_capped(2, 1.0, 1e-3, &RngStream::new(1, 0), 100).unwrap_err();
        assert!(matches!(err, LabError::ResourceLimit { .. }));
    }

    #[test]
    fn step_count_rounds() {
        assert_eq!(step_count(1.0, 0.3).unwrap(), 3);
        assert_eq!(step_count(1.0, 1e-4).unwrap(), 10_000);
    }

    #[test]
    fn same_stream_same_path() {
        let s = RngStream::new(42, 9);
        let a = sample_path(3, 0.5, 1e-3, &s).unwrap();
        let b = sample_path(3, 0.5, 1e-3, &s).unwrap();
        assert_eq!(a, b);
        let c = sample_path(3, 0.5, 1e-3, &s.child(1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn increment_variance_is_two_dt() {
        let dt = 1e-3;
        let p = sample_path(3, 20.0, dt, &RngStream::new(5, 1)).unwrap();
        let mut m = Moments::new();
        for w in p.points.windows(2 * 3).step_by(3) {
            for k in 0..3 {
                let d = w[3 + k] - w[k];
                m.push(d * d);
            }
        }
        let target = GENERATOR_VARIANCE * dt;
        assert!((m.mean() - target).abs() < 3.0 * m.std_error(), "{} vs {}", m.mean(), target);
    }

    #[test]
    fn wrap_examples() {
        assert!((wrap_coordinate(0.75) + 0.25).abs() < 1e-15);
        assert_eq!(wrap_coordinate(0.0), 0.0);
        assert_eq!(wrap_coordinate(0.5), 0.5);
        assert_eq!(wrap_coordinate(-0.5), 0.5);
        let w = wrap_coordinate(-0.5 - 1e-9);
        assert!((w - (0.5 - 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn subsample_and_prefix() {
        let p = sample_path(2, 1.0, 0.01, &RngStream::new(3, 3)).unwrap();
        let q = p.subsampled(10);
        assert_eq!(q.len(), 11);
        assert_eq!(q.point(1), p.point(10));
        assert!((q.duration() - 1.0).abs() < 1e-12);
        assert_eq!(p.prefix(5).len(), 6);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_half_open_cell(x in -50.0f64..50.0) {
            let w = wrap_coordinate(x);
            prop_assert!(w > -0.5 && w <= 0.5);
            prop_assert_eq!(wrap_coordinate(w), w);
            let k = (x - w).round();
            prop_assert!((x - w - k).abs() < 1e-9);
        }

        #[test]
        fn torus_distance_is_a_bounded_metric(
            a in prop::collection::vec(-0.5f64..0.5, 3),
            b in prop::collection::vec(-0.5f64..0.5, 3),
            c in prop::collection::vec(-0.5f64..0.5, 3),
        ) {
            let ab = torus_distance(&a, &b);
            prop_assert!(ab <= 3f64.sqrt() / 2.0 + 1e-12);
            prop_assert!((ab - torus_distance(&b, &a)).abs() < 1e-15);
            prop_assert!(ab <= torus_distance(&a, &c) + torus_distance(&c, &b) + 1e-12);
            prop_assert!(torus_distance(&a, &a) == 0.0);
        }

        #[test]
        fn wrapping_commutes_with_translation(x in -3.0f64..3.0, k in -5i32..5) {
            let a = wrap_coordinate(x);
            let b = wrap_coordinate(x + k as f64);
            prop_assert!((a - b).abs() < 1e-9 || (a - b).abs() > 1.0 - 1e-9);
        }
    }
}
