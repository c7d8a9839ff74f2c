//! Compact sets in R^3 with exact distance queries.

use crate::error::{LabError, Result};
use crate::stochastic::Path;

pub type Vec3 = [f64; 3];

pub(crate) fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// A compact set with a Euclidean distance function.
pub trait Obstacle: Sync {
    /// Distance from `x` to the set.
    fn distance(&self, x: &Vec3) -> f64;
    /// Center and radius of a sphere enclosing the set.
    fn bounding_sphere(&self) -> (Vec3, f64);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(LabError::InvalidParameter(format!("ball radius {radius}")));
        }
        Ok(Ball { center, radius })
    }
}

impl Obstacle for Ball {
    fn distance(&self, x: &Vec3) -> f64 {
        (norm(&sub(x, &self.center)) - self.radius).max(0.0)
    }

    fn bounding_sphere(&self) -> (Vec3, f64) {
        (self.center, self.radius)
    }
}

fn segment_distance(x: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = sub(b, a);
    let ax = sub(x, a);
    let len2 = dot(&ab, &ab);
    let u = if len2 > 0.0 { (dot(&ax, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let d = [ax[0] - u * ab[0], ax[1] - u * ab[1], ax[2] - u * ab[2]];
    norm(&d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Obstacle for Segment {
    fn distance(&self, x: &Vec3) -> f64 {
        segment_distance(x, &self.a, &self.b)
    }

    fn bounding_sphere(&self) -> (Vec3, f64) {
        let c = [
            0.5 * (self.a[0] + self.b[0]),
            0.5 * (self.a[1] + self.b[1]),
            0.5 * (self.a[2] + self.b[2]),
        ];
        (c, 0.5 * norm(&sub(&self.b, &self.a)))
    }
}

const LEAF_SEGMENTS: usize = 8;

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: segment range `[start, end)`. Inner: children indices.
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

fn box_distance2(x: &Vec3, lo: &Vec3, hi: &Vec3) -> f64 {
    let mut d2 = 0.0;
    for k in 0..3 {
        let d = (lo[k] - x[k]).max(x[k] - hi[k]).max(0.0);
        d2 += d * d;
    }
    d2
}

/// The range of a piecewise-linear curve. Distances are exact for the
/// polyline; a bounding-volume hierarchy over runs of consecutive segments
/// serves the queries.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
    center: Vec3,
    radius: f64,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::Empty("polyline"));
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for p in &points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
        let radius = points.iter().map(|p| norm(&sub(p, &center))).fold(0.0, f64::max);
        let mut line = Polyline {
            points,
            nodes: Vec::new(),
            center,
            radius,
        };
        let n_seg = line.segments();
        line.build(0, n_seg);
        Ok(line)
    }

    /// A three-dimensional sample path as a polyline.
    pub fn from_path(path: &Path) -> Result<Self> {
        if path.m != 3 {
            return Err(LabError::InvalidParameter(format!(
                "capacities are computed in three dimensions, got m = {}",
                path.m
            )));
        }
        Polyline::new(path.iter().map(|p| [p[0], p[1], p[2]]).collect())
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// Number of segments; a single point counts as one degenerate segment.
    fn segments(&self) -> usize {
        self.points.len().saturating_sub(1).max(1)
    }

    fn segment(&self, i: usize) -> (&Vec3, &Vec3) {
        let j = (i + 1).min(self.points.len() - 1);
        (&self.points[i], &self.points[j])
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in start..end {
            let (a, b) = self.segment(i);
            for k in 0..3 {
                lo[k] = lo[k].min(a[k]).min(b[k]);
                hi[k] = hi[k].max(a[k]).max(b[k]);
            }
        }
        let idx = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
        });
        if end - start > LEAF_SEGMENTS {
            let mid = start + (end - start) / 2;
            let l = self.build(start, mid);
            let r = self.build(mid, end);
            self.nodes[idx].children = Some((l, r));
        }
        idx
    }

    fn nearest2(&self, x: &Vec3, node: usize, best2: &mut f64) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for i in n.start..n.end {
                    let (a, b) = self.segment(i);
                    let d = segment_distance(x, a, b);
                    if d * d < *best2 {
                        *best2 = d * d;
                    }
                }
            }
            Some((l, r)) => {
                let dl = box_distance2(x, &self.nodes[l].lo, &self.nodes[l].hi);
                let dr = box_distance2(x, &self.nodes[r].lo, &self.nodes[r].hi);
                let (first, d1, second, d2) = if dl <= dr { (l, dl, r, dr) } else { (r, dr, l, dl) };
                if d1 < *best2 {
                    self.nearest2(x, first, best2);
                }
                if d2 < *best2 {
                    self.nearest2(x, second, best2);
                }
            }
        }
    }
}

impl Obstacle for Polyline {
    fn distance(&self, x: &Vec3) -> f64 {
        let mut best2 = f64::INFINITY;
        self.nearest2(x, 0, &mut best2);
        best2.sqrt()
    }

    fn bounding_sphere(&self) -> (Vec3, f64) {
        (self.center, self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_and_segment_distances() {
        let b = Ball::new([1.0, 0.0, 0.0], 0.5).unwrap();
        assert!((b.distance(&[3.0, 0.0, 0.0]) - 1.5).abs() < 1e-15);
        assert_eq!(b.distance(&[1.0, 0.1, 0.0]), 0.0);
        let s = Segment {
            a: [0.0, 0.0, 0.0],
            b: [1.0, 0.0, 0.0],
        };
        assert!((s.distance(&[0.5, 2.0, 0.0]) - 2.0).abs() < 1e-15);
        assert!((s.distance(&[-3.0, 0.0, 4.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_polyline() {
        let p = Polyline::new(vec![[1.0, 2.0, 3.0]]).unwrap();
        assert!((p.distance(&[1.0, 2.0, 5.0]) - 2.0).abs() < 1e-15);
        assert_eq!(p.bounding_sphere().1, 0.0);
    }

    proptest! {
        #[test]
        fn polyline_distance_matches_linear_scan(
            pts in prop::collection::vec(prop::array::uniform3(-2.0f64..2.0), 1..80),
            x in prop::array::uniform3(-4.0f64..4.0),
        ) {
            let line = Polyline::new(pts.clone()).unwrap();
            let mut best = f64::INFINITY;
            for i in 0..pts.len().saturating_sub(1).max(1) {
                let j = (i + 1).min(pts.len() - 1);
                best = best.min(segment_distance(&x, &pts[i], &pts[j]));
            }
            prop_assert!((line.distance(&x) - best).abs() < 1e-12);
            let (c, r) = line.bounding_sphere();
            for p in &pts {
                prop_assert!(norm(&sub(p, &c)) <= r + 1e-12);
            }
        }
    }
}
