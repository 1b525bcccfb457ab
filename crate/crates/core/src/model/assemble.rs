use std::sync::Arc;

use super::{DisorderSample, ModelConfig};
use crate::error::{Error, Result};
use crate::geometry::{max_norm_dist, BoxRegion, Configuration, ParticleGrid, Partition, ProductGrid, Region};
use crate::sparse::{OperatorMeta, SparseOperator};

/// A product domain `Ω_1 × ... × Ω_n ⊂ R^{dn}`, one region per particle.
/// `Ω^n` and the max-norm balls `B_L(x)` are both of this form.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductDomain {
    pub factors: Vec<Region>,
}

impl ProductDomain {
    pub fn power(region: &Region, n: usize) -> Self {
        Self { factors: vec![region.clone(); n] }
    }

    /// `B_L(x) = Π_j Λ_L(x_j)`.
    pub fn ball(x: &Configuration, radius: f64) -> Result<Self> {
        let factors = x
            .points()
            .map(|p| BoxRegion::ball(p, radius).map(Region::single))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { factors })
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }
}

/// `H^{(n)}_{Ω^n}` on `domain`: Dirichlet Laplacian plus `V_0`, the alloy
/// potential `Σ_ζ η_ζ N_ζ` and `α_W W^{(n)}`.
pub fn assemble_hamiltonian(
    config: &ModelConfig,
    domain: &ProductDomain,
    disorder: &DisorderSample,
) -> Result<SparseOperator> {
    assemble_impl(config, domain, disorder, None)
}

/// `H^{(J,K)}`: as [`assemble_hamiltonian`] but without the interaction
/// between particles in different blocks of `partition`.
pub fn assemble_partial(
    config: &ModelConfig,
    domain: &ProductDomain,
    disorder: &DisorderSample,
    partition: &Partition,
) -> Result<SparseOperator> {
    if partition.n() != config.n() {
        return Err(Error::InvalidPartition(format!(
            "partition of {} particles for n = {}",
            partition.n(),
            config.n()
        )));
    }
    assemble_impl(config, domain, disorder, Some(partition))
}

fn one_particle_potential(config: &ModelConfig, grid: &ParticleGrid, disorder: &DisorderSample) -> Result<Vec<f64>> {
    let r_u = config.r_u();
    let d = grid.d();
    (0..grid.len())
        .map(|i| {
            let p = grid.position(i);
            let lo: Vec<i64> = p.iter().map(|x| (x - r_u).floor() as i64).collect();
            let hi: Vec<i64> = p.iter().map(|x| (x + r_u).ceil() as i64).collect();
            let mut v = config.background.value(&p);
            let mut zeta = lo.clone();
            loop {
                let offset: Vec<f64> = p.iter().zip(&zeta).map(|(x, &z)| x - z as f64).collect();
                let u = config.single_site.value(&offset);
                if u != 0.0 {
                    let eta = disorder.eta(&zeta).ok_or_else(|| {
                        Error::DomainMismatch(format!("no coupling sampled for site {zeta:?}"))
                    })?;
                    v += eta * u;
                }
                let mut axis = d;
                while axis > 0 {
                    axis -= 1;
                    if zeta[axis] < hi[axis] {
                        zeta[axis] += 1;
                        break;
                    }
                    zeta[axis] = lo[axis];
                    if axis == 0 {
                        return Ok(v);
                    }
                }
            }
        })
        .collect()
}

fn assemble_impl(
    config: &ModelConfig,
    domain: &ProductDomain,
    disorder: &DisorderSample,
    partition: Option<&Partition>,
) -> Result<SparseOperator> {
    config.validate()?;
    let n = config.n();
    let d = config.d();
    let h = config.h();
    if domain.n() != n {
        return Err(Error::DomainMismatch(format!("domain has {} factors for n = {n}", domain.n())));
    }
    let omega = config.region()?;
    let mut factors = Vec::with_capacity(n);
    for region in &domain.factors {
        if region.d() != d {
            return Err(Error::DomainMismatch(format!("domain factor of dimension {} for d = {d}", region.d())));
        }
        let g = ParticleGrid::new(region, h)?;
        if let Some(i) = (0..g.len()).find(|&i| !omega.contains(&g.position(i))) {
            return Err(Error::DomainMismatch(format!(
                "grid node {:?} lies outside the configured domain",
                g.position(i)
            )));
        }
        factors.push(g);
    }
    let potentials =
        factors.iter().map(|g| one_particle_potential(config, g, disorder)).collect::<Result<Vec<_>>>()?;
    let positions: Vec<Vec<Vec<f64>>> =
        factors.iter().map(|g| (0..g.len()).map(|i| g.position(i)).collect()).collect();
    let grid = ProductGrid::new(factors)?;

    let hopping = 1.0 / (h * h);
    let kinetic_diag = 2.0 * (d * n) as f64 * hopping;
    let alpha_w = config.alpha_w();
    let interacting = alpha_w != 0.0 && !config.interaction.is_none();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| partition.is_none_or(|p| !p.separates(a, b)))
        .collect();

    let dim = grid.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::with_capacity(dim * (2 * d * n + 1));
    let mut vals = Vec::with_capacity(dim * (2 * d * n + 1));
    row_ptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * d * n + 1);
    for idx in 0..dim {
        let parts = grid.split(idx);
        let mut diag = kinetic_diag;
        for (j, &i) in parts.iter().enumerate() {
            diag += potentials[j][i];
        }
        if interacting {
            for &(a, b) in &pairs {
                let r = max_norm_dist(&positions[a][parts[a]], &positions[b][parts[b]]);
                diag += alpha_w * config.interaction.value(r, h);
            }
        }
        row.clear();
        row.push((idx, diag));
        for (j, &i) in parts.iter().enumerate() {
            let f = grid.factor(j);
            for axis in 0..d {
                for step in [-1i64, 1] {
                    if let Some(nb) = f.neighbor(i, axis, step) {
                        let col = idx + nb * grid.stride(j) - i * grid.stride(j);
                        row.push((col, -hopping));
                    }
                }
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        for &(c, v) in &row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let meta = OperatorMeta {
        config_hash: config.hash(),
        seed: Some(disorder.seed()),
        realization: Some(disorder.realization()),
    };
    Ok(SparseOperator::from_csr(row_ptr, cols, vals, Arc::new(grid), meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_disorder, InteractionKind, InteractionSign, InteractionSpec};

    #[test]
    fn free_chain_stencil() {
        let cfg = ModelConfig::lattice(1, 1, 5, 0.0);
        let dis = sample_disorder(&cfg, 0, 0).unwrap();
        let h = assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), 1), &dis).unwrap();
        let dense = h.to_dense();
        for i in 0..5 {
            assert_eq!(dense[(i, i)], 2.0);
            if i + 1 < 5 {
                assert_eq!(dense[(i, i + 1)], -1.0);
                assert_eq!(dense[(i + 1, i)], -1.0);
            }
        }
        assert_eq!(h.nnz(), 5 + 2 * 4);
    }

    #[test]
    fn lattice_potential_is_on_site() {
        let cfg = ModelConfig::lattice(1, 1, 6, 3.0);
        let dis = sample_disorder(&cfg, 5, 1).unwrap();
        let h = assemble_hamiltonian(&cfg, &ProductDomain::power(&cfg.region().unwrap(), 1), &dis).unwrap();
        for i in 0..6 {
            let eta = dis.eta(&[i as i64 + 1]).unwrap();
            assert!((h.diagonal()[i] - 2.0 - eta).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_drops_cross_interaction() {
        let w = InteractionSpec {
            kind: InteractionKind::Polynomial { c_w: 1.0, p_w: 2.0 },
            sign: InteractionSign::Repulsive,
        };
        let cfg = ModelConfig::lattice(1, 3, 4, 1.0).with_interaction(w.clone(), 0.5);
        let dis = sample_disorder(&cfg, 3, 0).unwrap();
        let dom = ProductDomain::power(&cfg.region().unwrap(), 3);
        let full = assemble_hamiltonian(&cfg, &dom, &dis).unwrap();
        let p = Partition::new(3, &[0, 2]).unwrap();
        let part = assemble_partial(&cfg, &dom, &dis, &p).unwrap();
        let grid = full.grid().clone();
        for idx in 0..full.dim() {
            let x = grid.configuration(idx);
            let cross: f64 = [(0, 1), (1, 2)]
                .iter()
                .map(|&(a, b)| 0.5 * w.value(max_norm_dist(x.point(a), x.point(b)), 1.0))
                .sum();
            assert!((full.diagonal()[idx] - part.diagonal()[idx] - cross).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_outside_config_is_rejected() {
        let cfg = ModelConfig::lattice(1, 1, 5, 1.0);
        let dis = sample_disorder(&cfg, 0, 0).unwrap();
        let far = ProductDomain::ball(&Configuration::line(&[20.0]).unwrap(), 3.0).unwrap();
        assert!(matches!(assemble_hamiltonian(&cfg, &far, &dis), Err(Error::DomainMismatch(_))));
        let two = ProductDomain::power(&cfg.region().unwrap(), 2);
        assert!(assemble_hamiltonian(&cfg, &two, &dis).is_err());
    }
}
