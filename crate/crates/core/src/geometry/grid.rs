use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Configuration;
use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

/// Open axis-aligned box `(lo, hi)` in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidConfig("box corners must have equal, positive dimension".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidConfig(format!("degenerate box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// The max-norm ball `Λ_r(center)`.
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *x > a + EPS && *x < b - EPS)
    }
}

/// A finite union of open boxes; the one-particle domain `Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub boxes: Vec<BoxRegion>,
}

impl Region {
    pub fn new(boxes: Vec<BoxRegion>) -> Result<Self> {
        let Some(first) = boxes.first() else {
            return Err(Error::InvalidConfig("region needs at least one box".into()));
        };
        let d = first.d();
        if boxes.iter().any(|b| b.d() != d) {
            return Err(Error::InvalidConfig("region boxes differ in dimension".into()));
        }
        Ok(Self { boxes })
    }

    pub fn single(b: BoxRegion) -> Self {
        Self { boxes: vec![b] }
    }

    /// `(0, m + 1)^d`: exactly `m` lattice sites per axis at unit spacing.
    pub fn lattice_cube(d: usize, m: usize) -> Self {
        Self::single(BoxRegion { lo: vec![0.0; d], hi: vec![m as f64 + 1.0; d] })
    }

    pub fn d(&self) -> usize {
        self.boxes[0].d()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Bounding box corners.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in &self.boxes {
            for i in 0..d {
                lo[i] = lo[i].min(b.lo[i]);
                hi[i] = hi[i].max(b.hi[i]);
            }
        }
        (lo, hi)
    }
}

/// Grid nodes of one particle: points `k * h` (`k ∈ Z^d`) strictly inside a
/// region, in lexicographic order of `k`.
#[derive(Clone, Debug)]
pub struct ParticleGrid {
    d: usize,
    h: f64,
    nodes: Vec<Vec<i64>>,
    lookup: HashMap<Vec<i64>, usize>,
}

impl ParticleGrid {
    pub fn new(region: &Region, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidConfig(format!("grid spacing {h} must be positive")));
        }
        let d = region.d();
        let mut nodes = Vec::new();
        for b in &region.boxes {
            let ranges: Vec<(i64, i64)> = (0..d)
                .map(|i| ((b.lo[i] / h + EPS).floor() as i64 + 1, (b.hi[i] / h - EPS).ceil() as i64 - 1))
                .collect();
            if ranges.iter().any(|(a, z)| a > z) {
                continue;
            }
            let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                let p: Vec<f64> = k.iter().map(|&c| c as f64 * h).collect();
                if b.contains(&p) {
                    nodes.push(k.clone());
                }
                for axis in (0..d).rev() {
                    if k[axis] < ranges[axis].1 {
                        k[axis] += 1;
                        continue 'outer;
                    }
                    k[axis] = ranges[axis].0;
                }
                break;
            }
        }
        nodes.sort();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::DomainMismatch(format!("no grid node of spacing {h} inside the region")));
        }
        let lookup = nodes.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Ok(Self { d, h, nodes, lookup })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lattice(&self, i: usize) -> &[i64] {
        &self.nodes[i]
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        self.nodes[i].iter().map(|&k| k as f64 * self.h).collect()
    }

    /// Neighbor of node `i` one step along `axis` in direction `step`.
    pub fn neighbor(&self, i: usize, axis: usize, step: i64) -> Option<usize> {
        let mut k = self.nodes[i].clone();
        k[axis] += step;
        self.lookup.get(&k).copied()
    }

    pub fn index_of(&self, lattice: &[i64]) -> Option<usize> {
        self.lookup.get(lattice).copied()
    }

    /// Nodes within max-norm distance `< 1/2` of `p`.
    fn half_ball(&self, p: &[f64]) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| {
                self.nodes[i].iter().zip(p).all(|(&k, &c)| (k as f64 * self.h - c).abs() < 0.5 - EPS)
            })
            .collect()
    }
}

/// Node indices of the cell `B_{1/2}(x)` on a product grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellIndex {
    pub nodes: Vec<usize>,
}

impl CellIndex {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// The `n`-particle grid: the product of one grid per particle. Node indices
/// are mixed-radix with particle 0 most significant.
#[derive(Clone, Debug)]
pub struct ProductGrid {
    factors: Vec<ParticleGrid>,
    strides: Vec<usize>,
    dim: usize,
}

impl ProductGrid {
    pub fn new(factors: Vec<ParticleGrid>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return Err(Error::DimensionMismatch("product grid needs at least one particle".into()));
        };
        if factors.iter().any(|f| f.d != first.d || (f.h - first.h).abs() > EPS) {
            return Err(Error::DimensionMismatch("particle grids differ in dimension or spacing".into()));
        }
        let mut strides = vec![1; factors.len()];
        for j in (0..factors.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * factors[j + 1].len();
        }
        let dim = strides[0] * factors[0].len();
        Ok(Self { factors, strides, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn d(&self) -> usize {
        self.factors[0].d
    }

    pub fn h(&self) -> f64 {
        self.factors[0].h
    }

    pub fn factor(&self, j: usize) -> &ParticleGrid {
        &self.factors[j]
    }

    pub fn stride(&self, j: usize) -> usize {
        self.strides[j]
    }

    /// Per-particle node indices of product node `idx`.
    pub fn split(&self, idx: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.factors).map(|(s, f)| (idx / s) % f.len()).collect()
    }

    pub fn join(&self, parts: &[usize]) -> usize {
        parts.iter().zip(&self.strides).map(|(p, s)| p * s).sum()
    }

    pub fn configuration(&self, idx: usize) -> Configuration {
        let coords = self
            .split(idx)
            .iter()
            .zip(&self.factors)
            .flat_map(|(&i, f)| f.position(i))
            .collect();
        Configuration { d: self.d(), coords }
    }

    /// `χ_x` realized as the set of nodes with max-norm distance `< 1/2`
    /// from `x` in `R^{dn}`. Empty when the ball misses the grid.
    pub fn cell_indicator(&self, x: &Configuration) -> Result<CellIndex> {
        if x.n() != self.n() || x.d() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "configuration ({}, {}) on a grid for (n, d) = ({}, {})",
                x.n(),
                x.d(),
                self.n(),
                self.d()
            )));
        }
        let per: Vec<Vec<usize>> =
            self.factors.iter().enumerate().map(|(j, f)| f.half_ball(x.point(j))).collect();
        let mut nodes = vec![0usize];
        for (j, set) in per.iter().enumerate() {
            let mut next = Vec::with_capacity(nodes.len() * set.len());
            for &base in &nodes {
                for &i in set {
                    next.push(base + i * self.strides[j]);
                }
            }
            nodes = next;
        }
        nodes.sort_unstable();
        Ok(CellIndex { nodes })
    }

    /// Label `u ∈ Z^{dn}` of the half-open unit cell `[u - 1/2, u + 1/2)`
    /// holding node `idx`; these cells tile configuration space.
    pub fn tiling_cell(&self, idx: usize) -> Vec<i64> {
        self.configuration(idx).coords.iter().map(|c| (c + 0.5 + EPS).floor() as i64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_cube_has_m_sites() {
        let g = ParticleGrid::new(&Region::lattice_cube(1, 12), 1.0).unwrap();
        assert_eq!(g.len(), 12);
        assert_eq!(g.position(0), vec![1.0]);
        assert_eq!(g.neighbor(0, 0, -1), None);
        assert_eq!(g.neighbor(0, 0, 1), Some(1));
    }

    #[test]
    fn continuum_nodes_are_interior() {
        let region = Region::single(BoxRegion::new(vec![-2.0], vec![2.0]).unwrap());
        let g = ParticleGrid::new(&region, 0.5).unwrap();
        let xs: Vec<f64> = (0..g.len()).map(|i| g.position(i)[0]).collect();
        assert_eq!(xs, vec![-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]);
    }

    #[test]
    fn union_of_boxes_deduplicates() {
        let region = Region::new(vec![
            BoxRegion::new(vec![0.0, 0.0], vec![3.0, 2.0]).unwrap(),
            BoxRegion::new(vec![1.0, 0.0], vec![4.0, 3.0]).unwrap(),
        ])
        .unwrap();
        let g = ParticleGrid::new(&region, 1.0).unwrap();
        // (1,1),(2,1) from the first box; (2,1),(3,1),(2,2),(3,2) from the second
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn cell_indicator_examples() {
        let region = Region::single(BoxRegion::new(vec![-2.0], vec![2.0]).unwrap());
        let grid = ProductGrid::new(vec![ParticleGrid::new(&region, 0.5).unwrap()]).unwrap();
        let cell = grid.cell_indicator(&Configuration::line(&[0.0]).unwrap()).unwrap();
        assert_eq!(cell.nodes, vec![3]);
        let outside = grid.cell_indicator(&Configuration::line(&[7.0]).unwrap()).unwrap();
        assert!(outside.is_empty());

        let fine = ProductGrid::new(vec![ParticleGrid::new(&region, 0.25).unwrap()]).unwrap();
        let cell = fine.cell_indicator(&Configuration::line(&[0.0]).unwrap()).unwrap();
        assert_eq!(cell.len(), 3);
    }

    #[test]
    fn far_cells_are_disjoint() {
        let region = Region::lattice_cube(1, 10);
        let f = ParticleGrid::new(&region, 0.25).unwrap();
        let grid = ProductGrid::new(vec![f.clone(), f]).unwrap();
        let a = grid.cell_indicator(&Configuration::line(&[2.0, 5.0]).unwrap()).unwrap();
        let b = grid.cell_indicator(&Configuration::line(&[3.0, 5.0]).unwrap()).unwrap();
        assert_eq!(a.len(), 9);
        assert!(a.nodes.iter().all(|i| !b.nodes.contains(i)));
    }

    #[test]
    fn split_join_roundtrip() {
        let f = ParticleGrid::new(&Region::lattice_cube(1, 4), 1.0).unwrap();
        let g = ParticleGrid::new(&Region::lattice_cube(1, 3), 1.0).unwrap();
        let grid = ProductGrid::new(vec![f, g]).unwrap();
        assert_eq!(grid.dim(), 12);
        for idx in 0..12 {
            assert_eq!(grid.join(&grid.split(idx)), idx);
        }
        assert_eq!(grid.configuration(5).coords(), &[2.0, 3.0]);
    }
}
