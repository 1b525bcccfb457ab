//! Per-realization spectral computations: ground energies, eigenpairs in a
//! window, resolvent and spectral-projector blocks `χ_x f(H) χ_y`.

mod cutoff;

pub use cutoff::{cutoff_order_for_distance, gevrey_cutoff, CutoffFunction, MAX_CUTOFF_ORDER};

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CellIndex, Configuration};
use crate::linalg::{cocg_solve, inertia_below, thick_restart_lanczos, BandLu, LanczosOptions, Target};
use crate::sparse::SparseOperator;

/// Largest dimension handled by dense decomposition.
pub const DENSE_MAX: usize = 2000;
/// Largest dimension solved by banded factorization.
pub const DIRECT_MAX: usize = 50_000;
const DIRECT_STORAGE_MAX: usize = 20_000_000;
const SMALL_DENSE: usize = 64;

/// Closed energy interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EnergyWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!("energy window [{lo}, {hi}] is not a bounded interval")));
        }
        Ok(Self { lo, hi, label: None })
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// `[center - width/2, center + width/2]`.
    pub fn centered(center: f64, width: f64) -> Result<Self> {
        Self::new(center - width / 2.0, center + width / 2.0)
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo && e <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Distance from `e` to the interval.
    pub fn dist(&self, e: f64) -> f64 {
        (self.lo - e).max(e - self.hi).max(0.0)
    }
}

/// Eigenpairs sorted by eigenvalue; eigenvectors are the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSet {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn from_columns(h: &SparseOperator, mut pairs: Vec<(f64, Vec<f64>)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dim = h.dim();
        let mut vectors = DMatrix::zeros(dim, pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        let mut residuals = Vec::with_capacity(pairs.len());
        let mut hv = vec![0.0; dim];
        for (k, (lambda, v)) in pairs.into_iter().enumerate() {
            h.apply(&v, &mut hv);
            residuals.push(hv.iter().zip(&v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt());
            vectors.column_mut(k).copy_from_slice(&v);
            values.push(lambda);
        }
        Self { values, vectors, residuals }
    }

    /// Keeps the pairs whose eigenvalue lies in `window`.
    pub fn restrict(&self, window: &EnergyWindow) -> EigenSet {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| window.contains(self.values[k])).collect();
        EigenSet {
            values: keep.iter().map(|&k| self.values[k]).collect(),
            vectors: self.vectors.select_columns(&keep),
            residuals: keep.iter().map(|&k| self.residuals[k]).collect(),
        }
    }

    /// Index ranges of numerically degenerate eigenvalues; one range per
    /// distinct eigenvalue `E`, i.e. per spectral projector `P_E`.
    pub fn groups(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.len() {
            if k == self.len() || self.values[k] - self.values[k - 1] > 1e-9 * (1.0 + self.values[k].abs()) {
                out.push(start..k);
                start = k;
            }
        }
        out
    }
}

fn check_dense(h: &SparseOperator) -> Result<()> {
    if h.dim() > DENSE_MAX {
        return Err(Error::TooLargeForDense { dim: h.dim(), cap: DENSE_MAX });
    }
    Ok(())
}

/// Complete eigendecomposition by dense symmetric QR.
pub fn full_eigen(h: &SparseOperator) -> Result<EigenSet> {
    check_dense(h)?;
    let eig = SymmetricEigen::new(h.to_dense());
    let pairs = (0..h.dim()).map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())).collect();
    Ok(EigenSet::from_columns(h, pairs))
}

fn start_vector(dim: usize) -> Vec<f64> {
    (0..dim).map(|i| 1.0 + 0.25 * ((i as f64) * 0.618_033_988_75).sin()).collect()
}

/// Smallest eigenvalue of `h` (thick-restart Lanczos, dense fallback).
pub fn ground_energy(h: &SparseOperator) -> Result<f64> {
    if h.dim() <= SMALL_DENSE {
        return Ok(full_eigen(h)?.values[0]);
    }
    let opts = LanczosOptions { nev: 1, max_basis: 60, max_restarts: 400, tol: 1e-10 };
    let apply = |x: &[f64], y: &mut [f64]| {
        h.apply(x, y);
        Ok(())
    };
    match thick_restart_lanczos(apply, h.dim(), &start_vector(h.dim()), &[], Target::Smallest, &opts) {
        Ok(p) => Ok(p.values[0]),
        Err(e @ Error::NotConverged { .. }) if h.dim() > DENSE_MAX => Err(e),
        Err(Error::NotConverged { .. }) => Ok(full_eigen(h)?.values[0]),
        Err(e) => Err(e),
    }
}

/// Number of eigenvalues of `h` in the closed window, from two inertia counts.
pub fn count_in_window(h: &SparseOperator, window: &EnergyWindow) -> Result<usize> {
    let above = inertia_below(h, window.hi + 1e-12 * (1.0 + window.hi.abs()))?;
    let below = inertia_below(h, window.lo)?;
    Ok(above.saturating_sub(below))
}

/// All eigenpairs with eigenvalue in `window`.
///
/// Dense below [`DENSE_MAX`]; otherwise shift-invert Lanczos about the window
/// center with locking of converged vectors, run until the found count equals
/// the inertia count. More than `budget` pairs is an error.
pub fn eigenpairs_in_window(h: &SparseOperator, window: &EnergyWindow, budget: usize) -> Result<EigenSet> {
    if h.dim() <= DENSE_MAX {
        let set = full_eigen(h)?.restrict(window);
        if set.len() > budget {
            return Err(Error::TooManyEigenpairs { count: set.len(), budget });
        }
        return Ok(set);
    }
    let count = count_in_window(h, window)?;
    if count > budget {
        return Err(Error::TooManyEigenpairs { count, budget });
    }
    if count == 0 {
        return Ok(EigenSet::from_columns(h, vec![]));
    }
    let mut sigma = 0.5 * (window.lo + window.hi);
    let lu = loop {
        match BandLu::<f64>::factor(h, sigma, true) {
            Ok(lu) => break lu,
            Err(Error::SolverBreakdown(_)) => sigma += 1e-9 * (1.0 + window.width()),
            Err(e) => return Err(e),
        }
    };
    let apply = |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        lu.solve(y);
        Ok(())
    };
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut hv = vec![0.0; h.dim()];
    for round in 0..8 {
        let missing = count - found.len();
        let opts = LanczosOptions { nev: missing, max_basis: (3 * missing + 20).max(40), max_restarts: 200, tol: 1e-12 };
        let start: Vec<f64> = start_vector(h.dim()).iter().enumerate().map(|(i, v)| v * (1.0 + (round * i) as f64 % 3.0)).collect();
        let pairs = thick_restart_lanczos(apply, h.dim(), &start, &locked, Target::LargestMagnitude, &opts)?;
        let mut progressed = false;
        for v in pairs.vectors {
            h.apply(&v, &mut hv);
            let lambda: f64 = hv.iter().zip(&v).map(|(a, b)| a * b).sum();
            if window.contains(lambda) {
                locked.push(v.clone());
                found.push((lambda, v));
                progressed = true;
            }
        }
        if found.len() >= count || !progressed {
            break;
        }
    }
    if found.len() != count {
        return Err(Error::NotConverged { iterations: found.len(), residual: f64::NAN });
    }
    let set = EigenSet::from_columns(h, found);
    if let Some(bad) = set.residuals.iter().zip(&set.values).find(|(r, l)| **r > 1e-8 * (1.0 + l.abs())) {
        return Err(Error::NotConverged { iterations: 0, residual: *bad.0 });
    }
    Ok(set)
}

/// Block-norm options.
#[derive(Clone, Debug)]
pub struct BlockOptions {
    /// Largest number of nodes allowed in a cell.
    pub cell_cap: usize,
    /// Relative residual for the iterative solver.
    pub tol: f64,
    pub force_iterative: bool,
}

impl Default for BlockOptions {
    fn default() -> Self {
        Self { cell_cap: 64, tol: 1e-10, force_iterative: false }
    }
}

/// Node sets of `χ_x` and `χ_y`, checked against the cap.
pub fn cells(h: &SparseOperator, x: &Configuration, y: &Configuration, cap: usize) -> Result<(CellIndex, CellIndex)> {
    let cx = h.grid().cell_indicator(x)?;
    let cy = h.grid().cell_indicator(y)?;
    for (c, conf) in [(&cx, x), (&cy, y)] {
        if c.is_empty() {
            return Err(Error::EmptyCell(conf.to_string()));
        }
        if c.len() > cap {
            return Err(Error::CellTooLarge { size: c.len(), cap });
        }
    }
    Ok((cx, cy))
}

/// Solver for `(H - z) u = b`, reused across many right-hand sides.
pub enum ShiftedSolver<'a> {
    Direct(BandLu<Complex64>),
    Iterative { h: &'a SparseOperator, z: Complex64, tol: f64 },
}

impl<'a> ShiftedSolver<'a> {
    pub fn new(h: &'a SparseOperator, z: Complex64, opts: &BlockOptions) -> Result<Self> {
        if !opts.force_iterative && h.dim() <= DIRECT_MAX && BandLu::<Complex64>::storage(h) <= DIRECT_STORAGE_MAX {
            Ok(Self::Direct(BandLu::factor(h, z, true)?))
        } else {
            Ok(Self::Iterative { h, z, tol: opts.tol })
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Self::Direct(lu) => {
                let mut x = b.to_vec();
                lu.solve(&mut x);
                Ok(x)
            }
            Self::Iterative { h, z, tol } => cocg_solve(h, *z, b, *tol, 20 * h.dim().max(500)),
        }
    }

    /// Dense block of `(H - z)^{-1}` with rows `rows` and columns `cols`;
    /// one solve per column.
    pub fn block(&self, rows: &CellIndex, cols: &CellIndex) -> Result<DMatrix<Complex64>> {
        let dim = match self {
            Self::Direct(_) => None,
            Self::Iterative { h, .. } => Some(h.dim()),
        };
        let columns: Vec<Vec<Complex64>> = cols
            .nodes
            .par_iter()
            .map(|&c| {
                let n = dim.unwrap_or_else(|| self.dim());
                let mut e = vec![Complex64::default(); n];
                e[c] = Complex64::new(1.0, 0.0);
                let u = self.solve(&e)?;
                Ok(rows.nodes.iter().map(|&r| u[r]).collect())
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |i, j| columns[j][i]))
    }

    fn dim(&self) -> usize {
        match self {
            Self::Direct(lu) => lu.pivot_values().len(),
            Self::Iterative { h, .. } => h.dim(),
        }
    }
}

/// Largest singular value.
pub fn spectral_norm_c(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// `‖χ_x (H - z)^{-1} χ_y‖`.
pub fn resolvent_block_norm(
    h: &SparseOperator,
    z: Complex64,
    x: &Configuration,
    y: &Configuration,
    opts: &BlockOptions,
) -> Result<f64> {
    let (cx, cy) = cells(h, x, y, opts.cell_cap)?;
    let solver = ShiftedSolver::new(h, z, opts)?;
    Ok(spectral_norm_c(&solver.block(&cx, &cy)?))
}

/// `χ_x f(H) χ_y` assembled from eigenpairs: `Σ_k f(E_k) (χ_x v_k)(χ_y v_k)ᵀ`.
pub fn function_block<F>(eigs: &EigenSet, range: Range<usize>, rows: &CellIndex, cols: &CellIndex, f: F) -> DMatrix<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for k in range {
        let w = f(eigs.values[k]);
        if w == Complex64::default() {
            continue;
        }
        let v = eigs.vectors.column(k);
        for (j, &c) in cols.nodes.iter().enumerate() {
            let vc = w * v[c];
            for (i, &r) in rows.nodes.iter().enumerate() {
                m[(i, j)] += vc * v[r];
            }
        }
    }
    m
}

/// `χ_x P χ_y` for the eigenvectors in `range`.
pub fn projector_block(eigs: &EigenSet, range: Range<usize>, rows: &CellIndex, cols: &CellIndex) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(rows.len(), cols.len());
    for k in range {
        let v = eigs.vectors.column(k);
        for (j, &c) in cols.nodes.iter().enumerate() {
            for (i, &r) in rows.nodes.iter().enumerate() {
                m[(i, j)] += v[r] * v[c];
            }
        }
    }
    m
}

/// Projector block norms over the eigenpairs of a window.
#[derive(Clone, Debug, Serialize)]
pub struct ProjectorNorms {
    /// `(E, ‖χ_x P_E χ_y‖)` per distinct eigenvalue.
    pub per_energy: Vec<(f64, f64)>,
    /// `Σ_E ‖χ_x P_E χ_y‖`.
    pub sum: f64,
    /// `‖χ_x P_I χ_y‖` for the whole window.
    pub window: f64,
}

pub fn projector_block_norm(eigs: &EigenSet, rows: &CellIndex, cols: &CellIndex) -> ProjectorNorms {
    let per_energy: Vec<(f64, f64)> = eigs
        .groups()
        .into_iter()
        .map(|g| (eigs.values[g.start], spectral_norm(&projector_block(eigs, g, rows, cols))))
        .collect();
    let sum = per_energy.iter().map(|p| p.1).sum();
    let window = spectral_norm(&projector_block(eigs, 0..eigs.len(), rows, cols));
    ProjectorNorms { per_energy, sum, window }
}

/// `‖χ_x χ(H) (H - z)^{-1} χ_y‖` from the full spectral decomposition.
pub fn restricted_resolvent_block_norm(
    h: &SparseOperator,
    z: Complex64,
    cutoff: &CutoffFunction,
    x: &Configuration,
    y: &Configuration,
    cap: usize,
) -> Result<f64> {
    let eigs = full_eigen(h)?;
    restricted_resolvent_from_eigs(h, &eigs, z, cutoff, x, y, cap)
}

/// As [`restricted_resolvent_block_norm`] with a precomputed decomposition.
pub fn restricted_resolvent_from_eigs(
    h: &SparseOperator,
    eigs: &EigenSet,
    z: Complex64,
    cutoff: &CutoffFunction,
    x: &Configuration,
    y: &Configuration,
    cap: usize,
) -> Result<f64> {
    let (cx, cy) = cells(h, x, y, cap)?;
    let block = function_block(eigs, 0..eigs.len(), &cx, &cy, |e| {
        let c = cutoff.value(e);
        if c == 0.0 {
            Complex64::default()
        } else {
            Complex64::new(c, 0.0) / (Complex64::new(e, 0.0) - z)
        }
    });
    Ok(spectral_norm_c(&block))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, sample_disorder, ModelConfig, ProductDomain};

    fn lattice(m: usize, n: usize, eta: f64, seed: u64) -> SparseOperator {
        let cfg = ModelConfig::lattice(1, n, m, eta);
        let dis = sample_disorder(&cfg, seed, 0).unwrap();
        assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), n), &dis).unwrap()
    }

    #[test]
    fn ground_energy_free_chain() {
        let h = lattice(10, 1, 0.0, 0);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 11.0).cos();
        assert!((ground_energy(&h).unwrap() - exact).abs() < 1e-12);
        let h = lattice(300, 1, 0.0, 0);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / 301.0).cos();
        let e0 = ground_energy(&h).unwrap();
        assert!((e0 - exact).abs() < 1e-8 * exact.max(1e-3), "{e0} vs {exact}");
    }

    #[test]
    fn nonnegative_diagonal_never_lowers_ground_energy() {
        let h = lattice(120, 1, 2.0, 4);
        let e0 = ground_energy(&h).unwrap();
        let bump: Vec<f64> = (0..h.dim()).map(|i| ((i * 7) % 5) as f64 * 0.1).collect();
        let e1 = ground_energy(&h.with_added_diagonal(&bump)).unwrap();
        assert!(e1 >= e0 - 1e-10);
    }

    #[test]
    fn two_particle_ground_energy_is_twice_one_particle() {
        let h1 = lattice(15, 1, 3.0, 9);
        let h2 = lattice(15, 2, 3.0, 9);
        let e1 = ground_energy(&h1).unwrap();
        let e2 = ground_energy(&h2).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-8 * (1.0 + e2.abs()), "{e2} vs {}", 2.0 * e1);
    }

    #[test]
    fn window_below_spectrum_is_empty() {
        let h = lattice(20, 1, 1.0, 1);
        let w = EnergyWindow::new(-5.0, -1.0).unwrap();
        assert!(eigenpairs_in_window(&h, &w, 10).unwrap().is_empty());
        assert_eq!(count_in_window(&h, &w).unwrap(), 0);
    }

    #[test]
    fn window_budget_is_enforced() {
        let h = lattice(20, 1, 1.0, 1);
        let w = EnergyWindow::new(-1.0, 10.0).unwrap();
        assert!(matches!(eigenpairs_in_window(&h, &w, 5), Err(Error::TooManyEigenpairs { count: 20, budget: 5 })));
    }

    #[test]
    fn sparse_window_path_matches_inertia_and_dense() {
        // two particles on 48 sites: dimension 2304 > DENSE_MAX, with the
        // exact degeneracies of the non-interacting tensor sum
        let h = lattice(48, 2, 4.0, 2);
        assert!(h.dim() > DENSE_MAX);
        let h1 = lattice(48, 1, 4.0, 2);
        let one = full_eigen(&h1).unwrap().values;
        let mut sums: Vec<f64> = one.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect();
        sums.sort_by(f64::total_cmp);
        let w = EnergyWindow::new(sums[10] - 1e-6, sums[30] + 1e-6).unwrap();
        let want: Vec<f64> = sums.iter().copied().filter(|&e| w.contains(e)).collect();
        let set = eigenpairs_in_window(&h, &w, 100).unwrap();
        assert_eq!(set.len(), count_in_window(&h, &w).unwrap());
        assert_eq!(set.len(), want.len());
        for (got, want) in set.values.iter().zip(&want) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert!(set.residuals.iter().all(|&r| r < 1e-8 * 10.0));
    }

    #[test]
    fn self_adjoint_resolvent_symmetry() {
        let h = lattice(30, 1, 5.0, 3);
        let x = Configuration::line(&[4.0]).unwrap();
        let y = Configuration::line(&[11.0]).unwrap();
        let z = Complex64::new(3.0, 0.01);
        let o = BlockOptions::default();
        let a = resolvent_block_norm(&h, z, &x, &y, &o).unwrap();
        let b = resolvent_block_norm(&h, z.conj(), &y, &x, &o).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn resolvent_norm_at_unit_imaginary_part_is_at_most_one() {
        let h = lattice(25, 1, 3.0, 8);
        let x = Configuration::line(&[10.0]).unwrap();
        let v = resolvent_block_norm(&h, Complex64::new(2.0, 1.0), &x, &x, &BlockOptions::default()).unwrap();
        assert!(v <= 1.0 + 1e-12);
    }

    #[test]
    fn iterative_solver_matches_direct() {
        let h = lattice(12, 2, 2.0, 5);
        let x = Configuration::line(&[3.0, 8.0]).unwrap();
        let y = Configuration::line(&[6.0, 2.0]).unwrap();
        let z = Complex64::new(2.5, 0.1);
        let direct = resolvent_block_norm(&h, z, &x, &y, &BlockOptions::default()).unwrap();
        let opts = BlockOptions { force_iterative: true, tol: 1e-12, ..Default::default() };
        let iterative = resolvent_block_norm(&h, z, &x, &y, &opts).unwrap();
        assert!((direct - iterative).abs() < 1e-8 * direct, "{direct} vs {iterative}");
    }

    #[test]
    fn first_resolvent_identity() {
        let h = lattice(20, 1, 4.0, 6);
        let z1 = Complex64::new(1.5, 0.2);
        let z2 = Complex64::new(2.5, 0.05);
        let opts = BlockOptions::default();
        let s1 = ShiftedSolver::new(&h, z1, &opts).unwrap();
        let s2 = ShiftedSolver::new(&h, z2, &opts).unwrap();
        let mut e = vec![Complex64::default(); h.dim()];
        e[7] = Complex64::new(1.0, 0.0);
        let r1 = s1.solve(&e).unwrap();
        let r2 = s2.solve(&e).unwrap();
        let chained = s1.solve(&r2).unwrap();
        let err: f64 = (0..h.dim()).map(|i| (r1[i] - r2[i] - (z1 - z2) * chained[i]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn projector_properties() {
        let h = lattice(16, 1, 2.0, 2);
        let eigs = full_eigen(&h).unwrap();
        let grid = h.grid();
        let x = Configuration::line(&[5.0]).unwrap();
        let y = Configuration::line(&[9.0]).unwrap();
        let cx = grid.cell_indicator(&x).unwrap();
        let cy = grid.cell_indicator(&y).unwrap();
        let all = projector_block_norm(&eigs, &cx, &cx);
        assert!((all.window - 1.0).abs() < 1e-12);
        let xy = projector_block_norm(&eigs, &cx, &cy);
        let yy = projector_block_norm(&eigs, &cy, &cy);
        for ((e, pxy), ((_, pxx), (_, pyy))) in xy.per_energy.iter().zip(all.per_energy.iter().zip(&yy.per_energy)) {
            assert!(*pxy <= (pxx * pyy).sqrt() + 1e-14, "E = {e}");
            let k = eigs.values.iter().position(|v| v == e).unwrap();
            let rank_one = eigs.vectors[(cx.nodes[0], k)].abs() * eigs.vectors[(cy.nodes[0], k)].abs();
            assert!((pxy - rank_one).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_of_local_projector_is_sum_of_weights() {
        let h = lattice(14, 1, 2.0, 3);
        let eigs = full_eigen(&h).unwrap();
        let w = EnergyWindow::new(1.0, 3.0).unwrap();
        let sub = eigs.restrict(&w);
        let cx = h.grid().cell_indicator(&Configuration::line(&[7.0]).unwrap()).unwrap();
        let block = projector_block(&sub, 0..sub.len(), &cx, &cx);
        let weights: f64 = (0..sub.len()).map(|k| sub.vectors[(cx.nodes[0], k)].powi(2)).sum();
        assert!((block.trace() - weights).abs() < 1e-14);
    }

    #[test]
    fn empty_and_oversized_cells_are_errors() {
        let h = lattice(10, 1, 1.0, 0);
        let far = Configuration::line(&[40.0]).unwrap();
        let x = Configuration::line(&[3.0]).unwrap();
        let z = Complex64::new(1.0, 0.1);
        assert!(matches!(resolvent_block_norm(&h, z, &far, &x, &BlockOptions::default()), Err(Error::EmptyCell(_))));
        let cfg = ModelConfig::continuum(
            1,
            1,
            0.125,
            0.0,
            6.0,
            crate::model::SingleSiteProfile::new(crate::model::ProfileShape::Box, 1.0, 0.5).unwrap(),
            1.0,
        );
        let dis = sample_disorder(&cfg, 0, 0).unwrap();
        let hc = assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), 1), &dis).unwrap();
        let opts = BlockOptions { cell_cap: 4, ..Default::default() };
        assert!(matches!(resolvent_block_norm(&hc, z, &x, &x, &opts), Err(Error::CellTooLarge { size: 7, cap: 4 })));
    }
}
