//! Voxel rasterization of sampled paths.
//!
//! Voxel `i` along an axis covers `[(i - 1/2) h, (i + 1/2) h)`, so the origin
//! is the center of voxel 0. On the torus (`h = 1/g`) indices are reduced
//! modulo `g`.

use crate::error::{LabError, Result};
use crate::stochastic::{Path, TorusPath, MAX_DIM};

/// A finite set of voxels at edge length `h`, free or periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    pub m: usize,
    pub h: f64,
    /// `Some(g)` for a periodic set on the `g^m` torus grid.
    pub grid: Option<usize>,
    /// Flattened coordinate tuples, sorted lexicographically and unique.
    cells: Vec<i64>,
}

impl VoxelSet {
    /// Builds a set from arbitrary (possibly repeated) tuples. Periodic
    /// coordinates are reduced into `[0, g)`.
    pub fn from_cells(m: usize, h: f64, grid: Option<usize>, mut cells: Vec<i64>) -> Result<Self> {
        if m == 0 || cells.len() % m != 0 {
            return Err(LabError::Mismatch(format!(
                "cell buffer of length {} is not a multiple of m={m}",
                cells.len()
            )));
        }
        if let Some(g) = grid {
            for c in cells.iter_mut() {
                *c = c.rem_euclid(g as i64);
            }
        }
        let mut set = VoxelSet { m, h, grid, cells };
        set.canonicalize();
        Ok(set)
    }

    fn canonicalize(&mut self) {
        let m = self.m;
        let n = self.cells.len() / m;
        let mut order: Vec<usize> = (0..n).collect();
        let cells = &self.cells;
        order.sort_unstable_by(|&a, &b| cells[a * m..(a + 1) * m].cmp(&cells[b * m..(b + 1) * m]));
        order.dedup_by(|a, b| cells[*a * m..(*a + 1) * m] == cells[*b * m..(*b + 1) * m]);
        let mut out = Vec::with_capacity(order.len() * m);
        for i in order {
            out.extend_from_slice(&cells[i * m..(i + 1) * m]);
        }
        self.cells = out;
    }

    pub fn len(&self) -> usize {
        self.cells.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_periodic(&self) -> bool {
        self.grid.is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.cells.chunks_exact(self.m)
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        let m = self.m;
        let n = self.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.cells[mid * m..(mid + 1) * m].cmp(cell) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// `h^m` times the cell count.
    pub fn volume(&self) -> f64 {
        self.len() as f64 * self.h.powi(self.m as i32)
    }

    /// Per-axis inclusive bounds, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.iter();
        let first = it.next()?;
        let mut lo = first.to_vec();
        let mut hi = first.to_vec();
        for c in it {
            for k in 0..self.m {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        Some((lo, hi))
    }

    /// Dense occupancy mask of a periodic set, axis 0 fastest.
    pub fn to_mask(&self) -> Result<Vec<bool>> {
        let g = self
            .grid
            .ok_or_else(|| LabError::InvalidParameter("mask requires a periodic voxel set".into()))?;
        let mut mask = vec![false; g.pow(self.m as u32)];
        for c in self.iter() {
            mask[linear_index(c, g)] = true;
        }
        Ok(mask)
    }

    /// Periodic set from a dense mask.
    pub fn from_mask(m: usize, g: usize, mask: &[bool]) -> Result<Self> {
        if mask.len() != g.pow(m as u32) {
            return Err(LabError::Mismatch(format!(
                "mask of length {} does not match g={g}, m={m}",
                mask.len()
            )));
        }
        let mut cells = Vec::new();
        let mut tuple = vec![0i64; m];
        for (lin, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
            unravel(lin, g, &mut tuple);
            cells.extend_from_slice(&tuple);
        }
        // Linear order is axis-0 fastest; lexicographic order needs a sort.
        VoxelSet::from_cells(m, 1.0 / g as f64, Some(g), cells)
    }
}

/// Linear index of a periodic cell, axis 0 fastest.
#[inline]
pub fn linear_index(cell: &[i64], g: usize) -> usize {
    let mut lin = 0usize;
    for &c in cell.iter().rev() {
        lin = lin * g + c as usize;
    }
    lin
}

/// Inverse of [`linear_index`].
#[inline]
pub fn unravel(mut lin: usize, g: usize, out: &mut [i64]) {
    for c in out.iter_mut() {
        *c = (lin % g) as i64;
        lin /= g;
    }
}

#[inline]
fn cell_of(x: &[f64], h: f64, out: &mut [i64]) {
    for (c, &v) in out.iter_mut().zip(x) {
        *c = (v / h + 0.5).floor() as i64;
    }
}

/// Calls `emit` for every voxel entered by the segment `a -> b` after the
/// voxel containing `a`, in traversal order. Consecutive emitted voxels
/// share a face.
pub fn segment_cells(a: &[f64], b: &[f64], h: f64, mut emit: impl FnMut(&[i64])) {
    let m = a.len();
    debug_assert!(m <= MAX_DIM);
    let mut cell = [0i64; MAX_DIM];
    let mut end = [0i64; MAX_DIM];
    cell_of(a, h, &mut cell[..m]);
    cell_of(b, h, &mut end[..m]);
    let mut remaining: u64 = (0..m).map(|k| (end[k] - cell[k]).unsigned_abs()).sum();
    if remaining == 0 {
        return;
    }
    let mut t_max = [f64::INFINITY; MAX_DIM];
    let mut t_delta = [f64::INFINITY; MAX_DIM];
    let mut step = [0i64; MAX_DIM];
    for k in 0..m {
        if end[k] == cell[k] {
            continue;
        }
        let ua = a[k] / h + 0.5;
        let d = b[k] / h + 0.5 - ua;
        step[k] = if end[k] > cell[k] { 1 } else { -1 };
        let boundary = if step[k] > 0 {
            (cell[k] + 1) as f64
        } else {
            cell[k] as f64
        };
        t_max[k] = (boundary - ua) / d;
        t_delta[k] = 1.0 / d.abs();
    }
    while remaining > 0 {
        let mut axis = usize::MAX;
        let mut best = f64::INFINITY;
        for k in 0..m {
            if cell[k] != end[k] && (axis == usize::MAX || t_max[k] < best) {
                axis = k;
                best = t_max[k];
            }
        }
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        remaining -= 1;
        emit(&cell[..m]);
    }
}

/// Calls `emit` for every voxel of the supercover of the polyline through
/// `path`, starting with the voxel of the first point. Voxels revisited by the
/// path are emitted again.
pub fn path_cells(path: &Path, h: f64, mut emit: impl FnMut(&[i64])) {
    let m = path.m;
    let mut first = [0i64; MAX_DIM];
    let mut it = path.iter();
    let Some(p0) = it.next() else { return };
    cell_of(p0, h, &mut first[..m]);
    emit(&first[..m]);
    let mut prev = p0;
    for p in it {
        segment_cells(prev, p, h, &mut emit);
        prev = p;
    }
}

/// Free-space supercover raster of a path at voxel size `h`.
pub fn rasterize_free(path: &Path, h: f64) -> Result<VoxelSet> {
    if path.is_empty() {
        return Err(LabError::Empty("path"));
    }
    if !(h > 0.0) {
        return Err(LabError::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let mut cells = Vec::new();
    path_cells(path, h, |c| cells.extend_from_slice(c));
    VoxelSet::from_cells(path.m, h, None, cells)
}

/// Periodic supercover raster of a torus path on a `g^m` grid.
pub fn rasterize(path: &TorusPath, g: usize) -> Result<VoxelSet> {
    if path.is_empty() {
        return Err(LabError::Empty("path"));
    }
    if g < 2 {
        return Err(LabError::InvalidParameter(format!("grid must have g >= 2, got {g}")));
    }
    let mut grid = TorusOccupancy::new(path.m(), g);
    grid.add_path(&path.unwrapped, |_| {});
    grid.to_voxel_set()
}

/// Incrementally built periodic occupancy of a path raster.
///
/// Points are supplied in unwrapped coordinates so that segments crossing
/// the periodic seam are traversed continuously.
#[derive(Debug, Clone)]
pub struct TorusOccupancy {
    m: usize,
    g: usize,
    h: f64,
    occupied: Vec<bool>,
    count: usize,
    last: Option<[f64; MAX_DIM]>,
    scratch: Vec<i64>,
}

impl TorusOccupancy {
    pub fn new(m: usize, g: usize) -> Self {
        TorusOccupancy {
            m,
            g,
            h: 1.0 / g as f64,
            occupied: vec![false; g.pow(m as u32)],
            count: 0,
            last: None,
            scratch: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mask(&self) -> &[bool] {
        &self.occupied
    }

    pub fn occupied_count(&self) -> usize {
        self.count
    }

    #[inline]
    fn mark(&mut self, cell: &[i64], on_new: &mut impl FnMut(usize)) {
        let g = self.g as i64;
        let mut lin = 0usize;
        for &c in cell.iter().rev() {
            lin = lin * self.g + c.rem_euclid(g) as usize;
        }
        if !self.occupied[lin] {
            self.occupied[lin] = true;
            self.count += 1;
            on_new(lin);
        }
    }

    /// Extends the raster by the next path point; `on_new` receives the
    /// linear index of every voxel that becomes occupied.
    pub fn push(&mut self, point: &[f64], mut on_new: impl FnMut(usize)) {
        let m = self.m;
        let h = self.h;
        match self.last {
            None => {
                let mut c = [0i64; MAX_DIM];
                cell_of(point, h, &mut c[..m]);
                self.mark(&c[..m], &mut on_new);
            }
            Some(prev) => {
                let mut scratch = std::mem::take(&mut self.scratch);
                scratch.clear();
                segment_cells(&prev[..m], point, h, |c| scratch.extend_from_slice(c));
                for c in scratch.chunks_exact(m) {
                    self.mark(c, &mut on_new);
                }
                self.scratch = scratch;
            }
        }
        let mut last = [0.0; MAX_DIM];
        last[..m].copy_from_slice(&point[..m]);
        self.last = Some(last);
    }

    pub fn add_path(&mut self, path: &Path, mut on_new: impl FnMut(usize)) {
        for p in path.iter() {
            self.push(p, &mut on_new);
        }
    }

    pub fn to_voxel_set(&self) -> Result<VoxelSet> {
        VoxelSet::from_mask(self.m, self.g, &self.occupied)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{sample_path, wrap_to_torus, RngStream};
    use proptest::prelude::*;

    fn torus_path(points: Vec<f64>, m: usize) -> TorusPath {
        wrap_to_torus(&Path { m, dt: 1.0, points })
    }

    #[test]
    fn single_point_at_origin() {
        let p = torus_path(vec![0.0, 0.0], 2);
        let v = rasterize(&p, 8).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.contains(&[0, 0]));
    }

    #[test]
    fn adjacent_samples_give_both_cells() {
        let h = 1.0 / 8.0;
        let p = torus_path(vec![0.0, 0.0, 0.9 * h, 0.0], 2);
        let v = rasterize(&p, 8).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(&[0, 0]) && v.contains(&[1, 0]));
    }

    #[test]
    fn seam_crossing_touches_both_edges() {
        // Unwrapped segment from 0.45 to 0.55 crosses x = 1/2.
        let path = Path {
            m: 2,
            dt: 1.0,
            points: vec![0.45, 0.0, 0.55, 0.0],
        };
        let tp = wrap_to_torus(&path);
        let g = 10;
        let v = rasterize(&tp, g).unwrap();
        // 0.45 sits on the boundary of voxel 4/5; 0.55 is in voxel 5 / -5.
        let xs: Vec<i64> = v.iter().map(|c| c[0]).collect();
        assert!(xs.contains(&5) || xs.contains(&4));
        assert!(v.iter().all(|c| c[1] == 0));
        let path = Path {
            m: 2,
            dt: 1.0,
            points: vec![0.47, 0.0, 0.53, 0.0],
        };
        let v = rasterize(&wrap_to_torus(&path), 20).unwrap();
        let xs: Vec<i64> = v.iter().map(|c| c[0]).collect();
        // voxel 9 covers [0.425, 0.475), voxel 10 == -10 covers the seam.
        assert_eq!(xs, vec![9, 10, 11]);
    }

    #[test]
    fn empty_path_is_an_error() {
        let p = Path {
            m: 2,
            dt: 1.0,
            points: vec![],
        };
        assert!(rasterize_free(&p, 0.1).is_err());
        assert!(rasterize(&wrap_to_torus(&p), 8).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let p = sample_path(3, 0.2, 1e-3, &RngStream::new(2, 2)).unwrap();
        let v = rasterize(&wrap_to_torus(&p), 16).unwrap();
        let back = VoxelSet::from_mask(3, 16, &v.to_mask().unwrap()).unwrap();
        assert_eq!(v, back);
    }

    fn brute_supercover(a: &[f64], b: &[f64], h: f64) -> Vec<Vec<i64>> {
        // Dense sampling of the segment.
        let mut out: Vec<Vec<i64>> = Vec::new();
        let n = 20_000;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let c: Vec<i64> = a
                .iter()
                .zip(b)
                .map(|(x, y)| ((x + t * (y - x)) / h + 0.5).floor() as i64)
                .collect();
            if out.last() != Some(&c) {
                out.push(c);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn traversal_matches_dense_sampling(
            a in prop::collection::vec(-1.0f64..1.0, 3),
            d in prop::collection::vec(-0.3f64..0.3, 3),
        ) {
            let h = 0.1;
            let b: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x + y).collect();
            let mut got = vec![];
            let mut c0 = vec![0i64; 3];
            cell_of(&a, h, &mut c0);
            got.push(c0);
            segment_cells(&a, &b, h, |c| got.push(c.to_vec()));
            let want = brute_supercover(&a, &b, h);
            // Dense sampling can skip a voxel only at near-corner crossings;
            // every sampled voxel must be in the traversal and the traversal
            // must be face connected.
            for c in &want {
                prop_assert!(got.contains(c));
            }
            for w in got.windows(2) {
                let dist: i64 = w[0].iter().zip(&w[1]).map(|(x, y)| (x - y).abs()).sum();
                prop_assert_eq!(dist, 1);
            }
        }
    }
}
