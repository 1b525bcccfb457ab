//! Configuration-space geometry: particle configurations, the Hausdorff
//! pseudo-metric on them, cluster partitions and the unit cells `χ_x`.
//!
//! All norms are max-norms, both on `R^d` and on `R^{dn}`.

mod grid;

pub use grid::{BoxRegion, CellIndex, ParticleGrid, ProductGrid, Region};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^{dn}` read as `n` ordered particle positions in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Configuration {
    d: usize,
    coords: Vec<f64>,
}

impl Configuration {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("configuration has no particles".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::DimensionMismatch("particles have dimension 0".into()));
        }
        let mut coords = Vec::with_capacity(n * d);
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "particle dimensions differ ({} vs {d})",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(d, coords)
    }

    /// Builds a configuration from `n * d` coordinates, particle-major.
    pub fn from_flat(d: usize, coords: Vec<f64>) -> Result<Self> {
        if d == 0 || coords.is_empty() || coords.len() % d != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates do not split into particles of dimension {d}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite coordinate".into()));
        }
        Ok(Self { d, coords })
    }

    /// One-dimensional convenience constructor: `x = (x_1, ..., x_n)`.
    pub fn line(positions: &[f64]) -> Result<Self> {
        Self::from_flat(1, positions.to_vec())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.coords[j * self.d..(j + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.d)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The sub-configuration `x_J` for an ordered index list.
    pub fn select(&self, indices: &[usize]) -> Configuration {
        let mut coords = Vec::with_capacity(indices.len() * self.d);
        for &j in indices {
            coords.extend_from_slice(self.point(j));
        }
        Configuration { d: self.d, coords }
    }

    /// Translates every particle by the same vector.
    pub fn shifted(&self, shift: &[f64]) -> Configuration {
        let mut coords = self.coords.clone();
        for p in coords.chunks_exact_mut(self.d) {
            for (c, s) in p.iter_mut().zip(shift) {
                *c += s;
            }
        }
        Configuration { d: self.d, coords }
    }

    /// Max-norm distance to `other` in `R^{dn}`.
    pub fn sup_dist(&self, other: &Configuration) -> f64 {
        max_norm_dist(&self.coords, &other.coords)
    }

    fn check_compatible(&self, other: &Configuration) -> Result<()> {
        if self.d != other.d || self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "configurations have (n, d) = ({}, {}) and ({}, {})",
                self.n(),
                self.d,
                other.n(),
                other.d
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for Configuration {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        Configuration::new(points)
    }
}

impl From<Configuration> for Vec<Vec<f64>> {
    fn from(x: Configuration) -> Self {
        x.points().map(<[f64]>::to_vec).collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (j, p) in self.points().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (i, c) in p.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

pub(crate) fn max_norm_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()))
}

/// Directed part `max_j min_k |x_j - y_k|` of the Hausdorff distance.
fn directed(x: &Configuration, y: &Configuration) -> f64 {
    x.points()
        .map(|p| y.points().map(|q| max_norm_dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between the point sets `{x_j}` and `{y_k}`.
pub fn hausdorff_dist(x: &Configuration, y: &Configuration) -> Result<f64> {
    x.check_compatible(y)?;
    Ok(directed(x, y).max(directed(y, x)))
}

/// A split `{1..n} = J ∪ K` into two nonempty, disjoint index sets
/// (stored zero-based and sorted).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    j: Vec<usize>,
    k: Vec<usize>,
}

impl Partition {
    /// Builds the partition with `J = j` and `K` its complement in `0..n`.
    pub fn new(n: usize, j: &[usize]) -> Result<Self> {
        let mut in_j = vec![false; n];
        for &idx in j {
            if idx >= n {
                return Err(Error::InvalidPartition(format!("index {idx} out of range for n = {n}")));
            }
            if in_j[idx] {
                return Err(Error::InvalidPartition(format!("index {idx} repeated")));
            }
            in_j[idx] = true;
        }
        let j: Vec<usize> = (0..n).filter(|&i| in_j[i]).collect();
        let k: Vec<usize> = (0..n).filter(|&i| !in_j[i]).collect();
        if j.is_empty() || k.is_empty() {
            return Err(Error::InvalidPartition("both blocks must be nonempty".into()));
        }
        Ok(Self { j, k })
    }

    pub fn j(&self) -> &[usize] {
        &self.j
    }

    pub fn k(&self) -> &[usize] {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.j.len() + self.k.len()
    }

    /// True when particles `a` and `b` lie in different blocks.
    pub fn separates(&self, a: usize, b: usize) -> bool {
        self.j.binary_search(&a).is_ok() != self.j.binary_search(&b).is_ok()
    }

    /// Same split, normalized so that particle 0 lies in `J`.
    fn canonical(&self) -> Partition {
        if self.j.first() == Some(&0) {
            self.clone()
        } else {
            Partition { j: self.k.clone(), k: self.j.clone() }
        }
    }
}

/// `max{dist_H(x_J, y_J), dist_H(x_K, y_K)}`.
pub fn partition_dist(x: &Configuration, y: &Configuration, p: &Partition) -> Result<f64> {
    x.check_compatible(y)?;
    if p.n() != x.n() {
        return Err(Error::InvalidPartition(format!(
            "partition of {} particles used with n = {}",
            p.n(),
            x.n()
        )));
    }
    let dj = hausdorff_dist(&x.select(p.j()), &y.select(p.j()))?;
    let dk = hausdorff_dist(&x.select(p.k()), &y.select(p.k()))?;
    Ok(dj.max(dk))
}

/// `max_{j,k} |x_j - x_k|`.
pub fn diameter(x: &Configuration) -> f64 {
    let n = x.n();
    let mut diam = 0.0_f64;
    for a in 0..n {
        for b in a + 1..n {
            diam = diam.max(max_norm_dist(x.point(a), x.point(b)));
        }
    }
    diam
}

/// Smallest max-norm distance between a particle in `J` and one in `K`.
pub fn cross_separation(x: &Configuration, p: &Partition) -> f64 {
    p.j()
        .iter()
        .flat_map(|&a| p.k().iter().map(move |&b| (a, b)))
        .map(|(a, b)| max_norm_dist(x.point(a), x.point(b)))
        .fold(f64::INFINITY, f64::min)
}

/// Splits `x` into two clusters separated by at least `threshold / n`.
///
/// Candidates are the gaps between consecutive particles after sorting along
/// each coordinate axis. The candidate with the largest cross-separation wins,
/// ties going to the lexicographically smallest `J` (with particle 0 in `J`).
/// Returns `None` when no candidate reaches `threshold / n`; that can only
/// happen when `diameter(x) < threshold`.
pub fn find_cluster_partition(x: &Configuration, threshold: f64) -> Option<Partition> {
    let n = x.n();
    if n < 2 {
        return None;
    }
    let mut best: Option<(f64, Partition)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for axis in 0..x.d() {
        order.sort_by(|&a, &b| x.point(a)[axis].total_cmp(&x.point(b)[axis]).then(a.cmp(&b)));
        for cut in 1..n {
            let gap = x.point(order[cut])[axis] - x.point(order[cut - 1])[axis];
            if gap <= 0.0 {
                continue;
            }
            let Ok(p) = Partition::new(n, &order[..cut]) else { continue };
            let p = p.canonical();
            let sep = cross_separation(x, &p);
            let better = match &best {
                None => true,
                Some((s, q)) => sep > *s || (sep == *s && p.j() < q.j()),
            };
            if better {
                best = Some((sep, p));
            }
        }
    }
    best.filter(|(sep, _)| *sep >= threshold / n as f64).map(|(_, p)| p)
}
