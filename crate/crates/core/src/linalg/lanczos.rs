use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, norm2};
use crate::error::{Error, Result};

/// Which end of the Ritz spectrum is wanted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Smallest,
    LargestMagnitude,
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    pub nev: usize,
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Converged when every wanted pair has `‖A y - θ y‖ ≤ tol·max(1, |θ|)`.
    pub tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { nev: 1, max_basis: 60, max_restarts: 400, tol: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct RitzPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
    }
}

/// Thick-restart Lanczos for a symmetric operator, restricted to the
/// orthogonal complement of `locked`.
///
/// The projected matrix is kept dense (`T = Vᵀ A V`) and every new direction
/// is fully reorthogonalized, so after a restart that keeps the best Ritz
/// vectors the expansion simply continues from the pending residual direction.
pub fn thick_restart_lanczos<F>(
    apply: F,
    n: usize,
    start: &[f64],
    locked: &[Vec<f64>],
    target: Target,
    opts: &LanczosOptions,
) -> Result<RitzPairs>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let free = n - locked.len();
    let nev = opts.nev.min(free);
    if nev == 0 {
        return Ok(RitzPairs { values: vec![], vectors: vec![], residuals: vec![], restarts: 0 });
    }
    let max_basis = opts.max_basis.max(2 * nev + 8).min(free);
    let keep = (nev + max_basis / 3).min(max_basis.saturating_sub(1)).max(nev);

    let mut next = start.to_vec();
    orthogonalize(&mut next, locked);
    let mut nrm = norm2(&next);
    if nrm < 1e-12 {
        next = (0..n).map(|i| ((i as f64 + 1.0) * 0.754_877_666).sin()).collect();
        orthogonalize(&mut next, locked);
        nrm = norm2(&next);
    }
    next.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_basis + 1);
    let mut t = DMatrix::<f64>::zeros(max_basis, max_basis);
    let mut w = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut last_residual = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        let mut exhausted = false;
        while basis.len() < max_basis {
            let j = basis.len();
            basis.push(next.clone());
            apply(&basis[j], &mut w)?;
            for (i, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                t[(i, j)] = c;
                t[(j, i)] = c;
            }
            orthogonalize(&mut w, locked);
            orthogonalize(&mut w, &basis);
            let beta = norm2(&w);
            if beta < 1e-13 || basis.len() == free {
                exhausted = true;
                break;
            }
            next = w.iter().map(|x| x / beta).collect();
        }
        let m = basis.len();
        let eig = SymmetricEigen::new(t.view((0, 0), (m, m)).into_owned());
        let mut order: Vec<usize> = (0..m).collect();
        match target {
            Target::Smallest => order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])),
            Target::LargestMagnitude => {
                order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()))
            }
        }
        let ritz = |k: usize| -> Vec<f64> {
            let mut y = vec![0.0; n];
            for (i, v) in basis.iter().enumerate() {
                let s = eig.eigenvectors[(i, k)];
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += s * vi;
                }
            }
            y
        };

        let wanted: Vec<(f64, Vec<f64>)> = order[..nev.min(m)].iter().map(|&k| (eig.eigenvalues[k], ritz(k))).collect();
        let mut residuals = Vec::with_capacity(wanted.len());
        for (theta, y) in &wanted {
            apply(y, &mut scratch)?;
            let r = scratch.iter().zip(y).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
            residuals.push(r);
        }
        let converged = wanted.iter().zip(&residuals).all(|((theta, _), r)| *r <= opts.tol * theta.abs().max(1.0));
        last_residual = residuals.iter().copied().fold(0.0, f64::max);
        if converged || (exhausted && m == free) {
            let (values, vectors) = wanted.into_iter().unzip();
            return Ok(RitzPairs { values, vectors, residuals, restarts: restart });
        }
        if exhausted {
            // invariant subspace found without the wanted pairs: restart fresh
            next = (0..n).map(|i| ((i as f64 + 3.0) * 0.569_840_29 * (restart as f64 + 1.0)).sin()).collect();
            orthogonalize(&mut next, locked);
            orthogonalize(&mut next, &basis);
            let nrm = norm2(&next);
            if nrm < 1e-12 {
                let (values, vectors) = wanted.into_iter().unzip();
                return Ok(RitzPairs { values, vectors, residuals, restarts: restart });
            }
            next.iter_mut().for_each(|x| *x /= nrm);
        }
        let kept: Vec<usize> = order[..keep.min(m)].to_vec();
        let new_basis: Vec<Vec<f64>> = kept.iter().map(|&k| ritz(k)).collect();
        t.fill(0.0);
        for (i, &k) in kept.iter().enumerate() {
            t[(i, i)] = eig.eigenvalues[k];
        }
        basis = new_basis;
    }
    Err(Error::NotConverged { iterations: opts.max_restarts, residual: last_residual })
}
