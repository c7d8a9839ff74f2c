//! Exact Euclidean distance transform on the periodic grid.
//!
//! Separable lower-envelope transform (one pass per axis). Each periodic
//! line is unrolled to three periods before the 1-D pass; no torus distance
//! exceeds half a period per axis, so the middle period of the unrolled
//! envelope is exact.

use crate::error::{LabError, Result};
use crate::geometry::raster::VoxelSet;

const INF: u64 = u64::MAX / 4;

/// Squared distances in voxel units from every voxel center to the nearest
/// obstacle voxel center, torus metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    pub m: usize,
    pub g: usize,
    d2: Vec<u64>,
}

/// Whether a center at squared voxel distance `d2` lies within `epsilon`.
///
/// Cover-time bookkeeping and the inradius both go through this exact
/// expression so that `rho > epsilon` and "not covered" agree bit for bit.
#[inline]
pub fn within(d2: u64, h: f64, epsilon: f64) -> bool {
    distance_of(d2, h) <= epsilon
}

#[inline]
pub fn distance_of(d2: u64, h: f64) -> f64 {
    (d2 as f64).sqrt() * h
}

impl DistanceField {
    pub fn h(&self) -> f64 {
        1.0 / self.g as f64
    }

    pub fn len(&self) -> usize {
        self.d2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d2.is_empty()
    }

    /// Squared distance in voxel units at linear index `lin`.
    pub fn squared(&self, lin: usize) -> u64 {
        self.d2[lin]
    }

    pub fn squared_values(&self) -> &[u64] {
        &self.d2
    }

    /// Distance in torus units at linear index `lin`.
    pub fn value(&self, lin: usize) -> f64 {
        distance_of(self.d2[lin], self.h())
    }

    pub fn values(&self) -> Vec<f64> {
        let h = self.h();
        self.d2.iter().map(|&d| distance_of(d, h)).collect()
    }

    /// Largest squared distance and one voxel attaining it.
    pub fn max_squared(&self) -> (u64, usize) {
        let mut best = (0u64, 0usize);
        for (i, &d) in self.d2.iter().enumerate() {
            if d > best.0 {
                best = (d, i);
            }
        }
        best
    }
}

/// Distance field of a nonempty periodic obstacle.
pub fn distance_field(obstacle: &VoxelSet) -> Result<DistanceField> {
    let g = obstacle
        .grid
        .ok_or_else(|| LabError::InvalidParameter("distance field needs a periodic obstacle".into()))?;
    distance_field_from_mask(obstacle.m, g, &obstacle.to_mask()?)
}

/// Distance field from a dense obstacle mask (axis 0 fastest).
pub fn distance_field_from_mask(m: usize, g: usize, mask: &[bool]) -> Result<DistanceField> {
    if mask.len() != g.pow(m as u32) {
        return Err(LabError::Mismatch(format!(
            "mask of length {} does not match g={g}, m={m}",
            mask.len()
        )));
    }
    if !mask.iter().any(|&b| b) {
        return Err(LabError::Empty("obstacle"));
    }
    let mut d2: Vec<u64> = mask.iter().map(|&b| if b { 0 } else { INF }).collect();
    let mut line = vec![0u64; g];
    let mut out = vec![0u64; g];
    let mut work = EnvelopeWork::new(3 * g);
    for axis in 0..m {
        let stride = g.pow(axis as u32);
        let block = stride * g;
        for base_hi in (0..d2.len()).step_by(block) {
            for base_lo in 0..stride {
                let base = base_hi + base_lo;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = d2[base + i * stride];
                }
                periodic_envelope(&line, &mut out, &mut work);
                for (i, &v) in out.iter().enumerate() {
                    d2[base + i * stride] = v;
                }
            }
        }
    }
    Ok(DistanceField { m, g, d2 })
}

struct EnvelopeWork {
    vertices: Vec<usize>,
    bounds: Vec<f64>,
}

impl EnvelopeWork {
    fn new(n: usize) -> Self {
        EnvelopeWork {
            vertices: vec![0; n],
            bounds: vec![0.0; n + 1],
        }
    }
}

/// `out[i] = min_j f[j] + dper(i, j)^2` on a periodic line of length `g`.
fn periodic_envelope(f: &[u64], out: &mut [u64], work: &mut EnvelopeWork) {
    let g = f.len();
    let n = 3 * g;
    let value = |q: usize| f[q % g];
    let v = &mut work.vertices;
    let z = &mut work.bounds;
    let mut k: isize = -1;
    for q in 0..n {
        let fq = value(q);
        if fq >= INF {
            continue;
        }
        let fq = fq as f64 + (q * q) as f64;
        loop {
            if k < 0 {
                k = 0;
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                break;
            }
            let p = v[k as usize];
            let fp = value(p) as f64 + (p * p) as f64;
            let s = (fq - fp) / (2.0 * (q as f64 - p as f64));
            if s <= z[k as usize] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k as usize] = q;
            z[k as usize] = s;
            z[k as usize + 1] = f64::INFINITY;
            break;
        }
    }
    if k < 0 {
        out.fill(INF);
        return;
    }
    let mut j = 0usize;
    for (i, o) in out.iter_mut().enumerate() {
        let x = (i + g) as f64;
        while z[j + 1] < x {
            j += 1;
        }
        let p = v[j];
        let d = (i + g) as i64 - p as i64;
        *o = value(p) + (d * d) as u64;
    }
}

/// Inradius of the complement of an obstacle, `max_x d(x, obstacle)` over
/// voxel centers, with its quantization bound `h sqrt(m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inradius {
    pub rho: f64,
    pub quantization: f64,
    /// Linear index of a voxel center attaining the maximum.
    pub center: usize,
}

pub fn inradius(field: &DistanceField) -> Inradius {
    let (d2, center) = field.max_squared();
    let h = field.h();
    Inradius {
        rho: distance_of(d2, h),
        quantization: h * (field.m as f64).sqrt(),
        center,
    }
}
