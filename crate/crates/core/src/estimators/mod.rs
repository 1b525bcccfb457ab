//! Disorder-ensemble Monte Carlo estimators.
//!
//! Realizations run in parallel; per-realization scalars are gathered in
//! realization order and reduced sequentially, so results do not depend on
//! the size of the worker pool.

mod profile;

pub use profile::{eigenfunction_decay_profile, EigenProfile};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hausdorff_dist, Configuration, Region};
use crate::model::{assemble_hamiltonian, DisorderSample, ModelConfig, ProductDomain};
use crate::sparse::SparseOperator;
use crate::spectral::{
    cells, eigenpairs_in_window, function_block, ground_energy, projector_block_norm, spectral_norm_c, BlockOptions,
    EnergyWindow, ShiftedSolver,
};

/// Monte Carlo mean with standard error `std / √count` (zero when `count < 2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl EnsembleEstimate {
    pub fn from_samples(seed: u64, samples: Vec<f64>, keep: bool) -> Self {
        let count = samples.len();
        let mean = samples.iter().sum::<f64>() / count.max(1) as f64;
        let stderr = if count > 1 {
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, count, seed, samples: keep.then_some(samples) }
    }

    /// `stderr / mean`.
    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.mean.abs()
    }
}

/// Seed and size of a disorder ensemble. Realization `r` uses the disorder
/// stream `(seed, first + r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub seed: u64,
    pub realizations: usize,
    #[serde(default)]
    pub first: u64,
    #[serde(default)]
    pub keep_samples: bool,
}

impl Ensemble {
    pub fn new(seed: u64, realizations: usize) -> Self {
        Self { seed, realizations, first: 0, keep_samples: false }
    }

    pub fn keep_samples(mut self) -> Self {
        self.keep_samples = true;
        self
    }

    fn check(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("ensemble needs at least one realization".into()));
        }
        Ok(())
    }

    /// Runs `f` on every realization index and returns the rows in order.
    /// Any failing realization aborts the whole ensemble.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        self.check()?;
        (0..self.realizations as u64).into_par_iter().map(|r| f(self.first + r)).collect()
    }

    /// Columnwise estimates from per-realization rows of equal length.
    pub fn estimates(&self, rows: &[Vec<f64>]) -> Vec<EnsembleEstimate> {
        let k = rows.first().map_or(0, Vec::len);
        (0..k)
            .map(|c| EnsembleEstimate::from_samples(self.seed, rows.iter().map(|row| row[c]).collect(), self.keep_samples))
            .collect()
    }
}

/// Finite-volume operator `H_{Ω^n}(ω)` for realization `r`.
pub fn realization_operator(config: &ModelConfig, omega: &Region, seed: u64, r: u64) -> Result<SparseOperator> {
    let disorder = DisorderSample::covering(config, &[omega], seed, r)?;
    assemble_hamiltonian(config, &ProductDomain::power(omega, config.n()), &disorder)
}

/// One `(z, x, y)` point of a fractional-moment query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmPoint {
    pub z: Complex64,
    pub x: Configuration,
    pub y: Configuration,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidConfig(format!("fractional power must lie in (0, 1), got {s}")));
    }
    Ok(())
}

/// `E‖χ_x (H_Ω - z)^{-1} χ_y‖^s` for several points sharing one ensemble;
/// each realization assembles once and factors once per distinct `z`.
pub fn frac_moment_many(
    config: &ModelConfig,
    omega: &Region,
    points: &[FmPoint],
    s: f64,
    ens: &Ensemble,
    opts: &BlockOptions,
) -> Result<Vec<EnsembleEstimate>> {
    check_s(s)?;
    let mut by_z: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        if p.z.im == 0.0 {
            return Err(Error::InvalidConfig("fractional moments need Im z != 0".into()));
        }
        by_z.entry((p.z.re.to_bits(), p.z.im.to_bits())).or_default().push(i);
    }
    let rows = ens.map(|r| {
        let h = realization_operator(config, omega, ens.seed, r)?;
        let mut row = vec![0.0; points.len()];
        for idx in by_z.values() {
            let solver = ShiftedSolver::new(&h, points[idx[0]].z, opts)?;
            for &i in idx {
                let (cx, cy) = cells(&h, &points[i].x, &points[i].y, opts.cell_cap)?;
                row[i] = spectral_norm_c(&solver.block(&cx, &cy)?).powf(s);
            }
        }
        Ok(row)
    })?;
    Ok(ens.estimates(&rows))
}

pub fn frac_moment(
    config: &ModelConfig,
    omega: &Region,
    point: &FmPoint,
    s: f64,
    ens: &Ensemble,
    opts: &BlockOptions,
) -> Result<EnsembleEstimate> {
    Ok(frac_moment_many(config, omega, std::slice::from_ref(point), s, ens, opts)?.remove(0))
}

/// Finite query grid standing in for the supremum defining `B_s(I, L)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsQuery {
    pub window: EnergyWindow,
    pub l: f64,
    pub s: f64,
    pub pairs: Vec<(Configuration, Configuration)>,
    pub re_z: Vec<f64>,
    pub im_z: Vec<f64>,
    pub domains: Vec<Region>,
}

impl BsQuery {
    pub fn validate(&self) -> Result<()> {
        check_s(self.s)?;
        if self.pairs.is_empty() || self.re_z.is_empty() || self.im_z.is_empty() || self.domains.is_empty() {
            return Err(Error::InvalidConfig("B_s query grids must be nonempty".into()));
        }
        for (x, y) in &self.pairs {
            let d = hausdorff_dist(x, y)?;
            if d < self.l {
                return Err(Error::InvalidConfig(format!("pair {x} / {y} has dist_H = {d} < L = {}", self.l)));
            }
        }
        if let Some(e) = self.re_z.iter().find(|e| !self.window.contains(**e)) {
            return Err(Error::InvalidConfig(format!("Re z = {e} lies outside the window")));
        }
        if let Some(e) = self.im_z.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::InvalidConfig(format!("Im z = {e} must lie in (0, 1)")));
        }
        Ok(())
    }
}

/// Grid point attaining the maximum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BsWitness {
    pub domain: usize,
    pub z: Complex64,
    pub x: Configuration,
    pub y: Configuration,
}

#[derive(Clone, Debug, Serialize)]
pub struct BsEstimate {
    pub estimate: EnsembleEstimate,
    pub witness: BsWitness,
    /// Every grid point with its estimate, in grid order.
    pub grid: Vec<(BsWitness, EnsembleEstimate)>,
}

/// Maximum of the fractional-moment estimates over the query grid. Ties keep
/// the first grid point (domain, then Re z, Im z, then pair order).
pub fn bs_estimate(config: &ModelConfig, q: &BsQuery, ens: &Ensemble, opts: &BlockOptions) -> Result<BsEstimate> {
    q.validate()?;
    let mut grid = Vec::new();
    for (k, omega) in q.domains.iter().enumerate() {
        let mut points = Vec::new();
        for &re in &q.re_z {
            for &im in &q.im_z {
                for (x, y) in &q.pairs {
                    points.push(FmPoint { z: Complex64::new(re, im), x: x.clone(), y: y.clone() });
                }
            }
        }
        let est = frac_moment_many(config, omega, &points, q.s, ens, opts)?;
        for (p, e) in points.into_iter().zip(est) {
            grid.push((BsWitness { domain: k, z: p.z, x: p.x, y: p.y }, e));
        }
    }
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if g.1.mean > grid[best].1.mean {
            best = i;
        }
    }
    Ok(BsEstimate { estimate: grid[best].1.clone(), witness: grid[best].0.clone(), grid })
}

/// `E Σ_{E ∈ σ(H) ∩ I} ‖χ_x P_E χ_y‖` for several pairs sharing one ensemble.
pub fn ef_correlator_many(
    config: &ModelConfig,
    omega: &Region,
    window: &EnergyWindow,
    pairs: &[(Configuration, Configuration)],
    ens: &Ensemble,
    budget: usize,
    cell_cap: usize,
) -> Result<Vec<EnsembleEstimate>> {
    let rows = ens.map(|r| {
        let h = realization_operator(config, omega, ens.seed, r)?;
        let eigs = eigenpairs_in_window(&h, window, budget)?;
        pairs
            .iter()
            .map(|(x, y)| {
                let (cx, cy) = cells(&h, x, y, cell_cap)?;
                Ok(projector_block_norm(&eigs, &cx, &cy).sum)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(ens.estimates(&rows))
}

pub fn ef_correlator(
    config: &ModelConfig,
    omega: &Region,
    window: &EnergyWindow,
    x: &Configuration,
    y: &Configuration,
    ens: &Ensemble,
    budget: usize,
) -> Result<EnsembleEstimate> {
    let pair = [(x.clone(), y.clone())];
    Ok(ef_correlator_many(config, omega, window, &pair, ens, budget, BlockOptions::default().cell_cap)?.remove(0))
}

/// `(|J|, E Tr(χ_x P_J))` for `J = [E_c - w/2, E_c + w/2]`.
pub fn wegner_curve(
    config: &ModelConfig,
    omega: &Region,
    x: &Configuration,
    center: f64,
    widths: &[f64],
    ens: &Ensemble,
    budget: usize,
) -> Result<Vec<(f64, EnsembleEstimate)>> {
    if let Some(w) = widths.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidConfig(format!("Wegner widths must be nonnegative, got {w}")));
    }
    let widest = widths.iter().copied().fold(0.0, f64::max);
    let outer = EnergyWindow::centered(center, widest)?;
    let windows: Vec<EnergyWindow> = widths.iter().map(|&w| EnergyWindow::centered(center, w)).collect::<Result<_>>()?;
    let rows = ens.map(|r| {
        let h = realization_operator(config, omega, ens.seed, r)?;
        let (cx, _) = cells(&h, x, x, usize::MAX)?;
        let eigs = eigenpairs_in_window(&h, &outer, budget)?;
        let weights: Vec<f64> =
            (0..eigs.len()).map(|k| cx.nodes.iter().map(|&i| eigs.vectors[(i, k)].powi(2)).sum()).collect();
        Ok(windows
            .iter()
            .map(|w| (0..eigs.len()).filter(|&k| w.contains(eigs.values[k])).map(|k| weights[k]).sum())
            .collect())
    })?;
    Ok(widths.iter().copied().zip(ens.estimates(&rows)).collect())
}

/// Estimated spectrum bottom `E_0`: minimum ground energy over a
/// calibration ensemble minus two standard errors of the mean.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumBottom {
    pub e0: f64,
    pub minimum: f64,
    pub ground: EnsembleEstimate,
}

pub fn estimate_spectrum_bottom(config: &ModelConfig, omega: &Region, ens: &Ensemble) -> Result<SpectrumBottom> {
    let values = ens.map(|r| ground_energy(&realization_operator(config, omega, ens.seed, r)?))?;
    let minimum = values.iter().copied().fold(f64::INFINITY, f64::min);
    let ground = EnsembleEstimate::from_samples(ens.seed, values, ens.keep_samples);
    Ok(SpectrumBottom { e0: minimum - 2.0 * ground.stderr, minimum, ground })
}

/// `E E_0(H^{(j)}_Ω)` for each particle count `j`, every count evaluated on
/// the same disorder realizations.
pub fn ground_energies(
    config: &ModelConfig,
    omega: &Region,
    particles: &[usize],
    ens: &Ensemble,
) -> Result<Vec<EnsembleEstimate>> {
    if particles.contains(&0) {
        return Err(Error::InvalidConfig("particle counts must be >= 1".into()));
    }
    let configs: Vec<ModelConfig> = particles.iter().map(|&j| config.clone().with_particles(j)).collect();
    let rows = ens.map(|r| {
        configs.iter().map(|c| ground_energy(&realization_operator(c, omega, ens.seed, r)?)).collect::<Result<Vec<f64>>>()
    })?;
    Ok(ens.estimates(&rows))
}

/// Cube of side `L` used by the tail estimate: `L` sites per axis on the
/// lattice, `(lo, lo + L)^d` at the lower corner of the domain otherwise.
pub fn lifshitz_box(config: &ModelConfig, l: f64) -> Result<Region> {
    use crate::geometry::BoxRegion;
    use crate::model::Mode;
    let d = config.d();
    match config.mode() {
        Mode::StrictLattice => {
            if l.fract() != 0.0 || l < 1.0 {
                return Err(Error::InvalidConfig(format!("lattice box side must be a positive integer, got {l}")));
            }
            Ok(Region::lattice_cube(d, l as usize))
        }
        Mode::Continuum => {
            let (lo, _) = config.region()?.bounds();
            let hi = lo.iter().map(|a| a + l).collect();
            Ok(Region::single(BoxRegion::new(lo, hi)?))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailPoint {
    pub l: f64,
    pub hits: usize,
    pub count: usize,
    pub probability: f64,
    /// 95% Wilson score interval.
    pub ci: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct LifshitzTail {
    pub e_ref: f64,
    pub points: Vec<TailPoint>,
    /// `-d log P / d log L` over the points with `P > 0`, when at least two exist.
    pub slope: Option<f64>,
}

pub fn wilson_interval(hits: usize, count: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = count as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Empirical `P(E_0(H_{B_L}) ≤ E_ref + 1/L)` per side length.
pub fn lifshitz_tail(config: &ModelConfig, sides: &[f64], e_ref: f64, ens: &Ensemble) -> Result<LifshitzTail> {
    let mut points = Vec::with_capacity(sides.len());
    for &l in sides {
        let omega = lifshitz_box(config, l)?;
        let energies = ens.map(|r| ground_energy(&realization_operator(config, &omega, ens.seed, r)?))?;
        let hits = energies.iter().filter(|&&e| e <= e_ref + 1.0 / l).count();
        let count = energies.len();
        points.push(TailPoint { l, hits, count, probability: hits as f64 / count as f64, ci: wilson_interval(hits, count) });
    }
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|p| p.hits > 0).map(|p| (p.l.ln(), p.probability.ln())).collect();
    let slope = (logs.len() >= 2).then(|| {
        let m = logs.len() as f64;
        let (sx, sy) = logs.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let (mx, my) = (sx / m, sy / m);
        let num: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -num / den
    });
    Ok(LifshitzTail { e_ref, points, slope })
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicalEstimate {
    /// `E max_t ‖χ_x e^{-itH} P_I χ_y‖`.
    pub sup_time: EnsembleEstimate,
    /// `E Σ_{E ∈ I} ‖χ_x P_E χ_y‖`.
    pub bound: EnsembleEstimate,
    /// Realizations where the time maximum exceeded the bound.
    pub violations: usize,
}

/// Time-maximum of the evolved projector block against its eigenvalue-sum bound.
#[allow(clippy::too_many_arguments)]
pub fn dynamical_proxy(
    config: &ModelConfig,
    omega: &Region,
    window: &EnergyWindow,
    x: &Configuration,
    y: &Configuration,
    times: &[f64],
    ens: &Ensemble,
    budget: usize,
) -> Result<DynamicalEstimate> {
    if times.is_empty() {
        return Err(Error::InvalidConfig("dynamical proxy needs a nonempty time grid".into()));
    }
    let rows = ens.map(|r| {
        let h = realization_operator(config, omega, ens.seed, r)?;
        let eigs = eigenpairs_in_window(&h, window, budget)?;
        let (cx, cy) = cells(&h, x, y, BlockOptions::default().cell_cap)?;
        let bound = projector_block_norm(&eigs, &cx, &cy).sum;
        let sup = times
            .iter()
            .map(|&t| spectral_norm_c(&function_block(&eigs, 0..eigs.len(), &cx, &cy, |e| Complex64::from_polar(1.0, -t * e))))
            .fold(0.0, f64::max);
        Ok(vec![sup, bound])
    })?;
    let violations = rows.iter().filter(|r| r[0] > r[1] * (1.0 + 1e-12) + 1e-15).count();
    let mut est = ens.estimates(&rows).into_iter();
    Ok(DynamicalEstimate { sup_time: est.next().unwrap(), bound: est.next().unwrap(), violations })
}
