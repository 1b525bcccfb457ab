use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{hausdorff_dist, Configuration};
use crate::sparse::SparseOperator;
use crate::spectral::EigenSet;

/// Cell masses of one normalized eigenfunction over the half-open unit
/// tiling of configuration space.
#[derive(Clone, Debug, Serialize)]
pub struct EigenProfile {
    pub energy: f64,
    /// Cell of maximal mass; ties go to the lexicographically smallest cell.
    pub center: Vec<i64>,
    /// `(cell, ‖χ_u φ‖)` in lexicographic cell order.
    pub cells: Vec<(Vec<i64>, f64)>,
}

impl EigenProfile {
    /// `(dist_H(u, center), ‖χ_u φ‖)` for every occupied cell.
    pub fn decay_samples(&self, d: usize) -> Result<Vec<(f64, f64)>> {
        let c = Configuration::from_flat(d, self.center.iter().map(|&v| v as f64).collect())?;
        self.cells
            .iter()
            .map(|(u, m)| {
                let cu = Configuration::from_flat(d, u.iter().map(|&v| v as f64).collect())?;
                Ok((hausdorff_dist(&c, &cu)?, *m))
            })
            .collect()
    }

    /// `Σ_u ‖χ_u φ‖²`.
    pub fn total_mass(&self) -> f64 {
        self.cells.iter().map(|c| c.1 * c.1).sum()
    }
}

/// Localization centers and cell profiles of the eigenfunctions in `eigs`.
pub fn eigenfunction_decay_profile(h: &SparseOperator, eigs: &EigenSet) -> Vec<EigenProfile> {
    let grid = h.grid();
    let cell_of: Vec<Vec<i64>> = (0..h.dim()).map(|i| grid.tiling_cell(i)).collect();
    (0..eigs.len())
        .map(|k| {
            let v = eigs.vectors.column(k);
            let norm2: f64 = v.iter().map(|a| a * a).sum();
            let mut mass: BTreeMap<&[i64], f64> = BTreeMap::new();
            for (i, c) in cell_of.iter().enumerate() {
                *mass.entry(c.as_slice()).or_default() += v[i] * v[i] / norm2;
            }
            let mut center: &[i64] = &[];
            let mut best = -1.0;
            for (c, &m) in &mass {
                if m > best {
                    best = m;
                    center = c;
                }
            }
            EigenProfile {
                energy: eigs.values[k],
                center: center.to_vec(),
                cells: mass.iter().map(|(c, m)| (c.to_vec(), m.sqrt())).collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, sample_disorder, ModelConfig, ProductDomain};
    use crate::spectral::full_eigen;
    use nalgebra::DMatrix;

    #[test]
    fn delta_vector_is_centered_on_its_cell() {
        let cfg = ModelConfig::lattice(1, 2, 6, 1.0);
        let dis = sample_disorder(&cfg, 1, 0).unwrap();
        let h = assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), 2), &dis).unwrap();
        let idx = h.grid().join(&[2, 4]);
        let mut v = DMatrix::zeros(h.dim(), 1);
        v[(idx, 0)] = 1.0;
        let set = EigenSet { values: vec![0.0], vectors: v, residuals: vec![0.0] };
        let p = eigenfunction_decay_profile(&h, &set);
        assert_eq!(p[0].center, vec![3, 5]);
    }

    #[test]
    fn cell_masses_sum_to_one() {
        let cfg = ModelConfig::continuum(
            1,
            1,
            0.25,
            0.0,
            8.0,
            crate::model::SingleSiteProfile::new(crate::model::ProfileShape::Tent, 1.0, 1.0).unwrap(),
            2.0,
        );
        let dis = sample_disorder(&cfg, 2, 0).unwrap();
        let h = assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), 1), &dis).unwrap();
        let eigs = full_eigen(&h).unwrap();
        for p in eigenfunction_decay_profile(&h, &eigs) {
            assert!((p.total_mass() - 1.0).abs() < 1e-8);
        }
    }
}
