//! Independent references: transfer matrices, dense Jacobi diagonalization,
//! dense inertia counts and the literal Hausdorff double loop. None of these
//! call into the sparse, banded or Krylov kernels they are used to check.

mod jacobi;

pub use jacobi::{jacobi_eigen, DenseSpectrum};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Partition};
use crate::model::DisorderDistribution;
use crate::sparse::SparseOperator;

/// Largest dimension accepted by the dense oracles.
pub const ORACLE_DENSE_MAX: usize = 2000;

#[derive(Clone, Debug, Serialize)]
pub struct TransferMatrixResult {
    pub energy: f64,
    /// Lyapunov exponent per lattice unit (replica mean).
    pub gamma: f64,
    pub stderr: f64,
    pub length: usize,
    pub replicas: usize,
    pub disorder: DisorderDistribution,
}

/// Lyapunov exponent of `ψ_{i+1} = (2 + V_i - E) ψ_i - ψ_{i-1}` with i.i.d.
/// `V_i`, averaged over independent chains.
pub fn transfer_matrix_lyapunov(
    disorder: &DisorderDistribution,
    energy: f64,
    length: usize,
    replicas: usize,
    seed: u64,
) -> Result<TransferMatrixResult> {
    disorder.validate()?;
    if length == 0 || replicas == 0 {
        return Err(Error::InvalidConfig("transfer matrix needs positive length and replica count".into()));
    }
    let gammas: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let (mut prev, mut cur) = (0.0f64, 1.0f64);
            let mut log_norm = 0.0;
            for _ in 0..length {
                let v = disorder.quantile(rng.random::<f64>());
                let next = (2.0 + v - energy) * cur - prev;
                prev = cur;
                cur = next;
                let nrm = cur.abs().max(prev.abs());
                if !(1e-100..=1e100).contains(&nrm) {
                    log_norm += nrm.ln();
                    cur /= nrm;
                    prev /= nrm;
                }
            }
            (log_norm + cur.hypot(prev).ln()) / length as f64
        })
        .collect();
    let mean = gammas.iter().sum::<f64>() / replicas as f64;
    let stderr = if replicas > 1 {
        let var = gammas.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (replicas - 1) as f64;
        (var / replicas as f64).sqrt()
    } else {
        0.0
    };
    Ok(TransferMatrixResult { energy, gamma: mean.max(0.0), stderr, length, replicas, disorder: disorder.clone() })
}

/// Closed-form Lyapunov exponent of the free chain: `ln` of the larger root of
/// `λ² - (2 - E) λ + 1 = 0`; zero inside the band `[0, 4]`.
pub fn free_chain_lyapunov(energy: f64) -> f64 {
    let b = 2.0 - energy;
    if b.abs() <= 2.0 {
        return 0.0;
    }
    ((b.abs() + (b * b - 4.0).sqrt()) / 2.0).ln()
}

/// Full spectrum of `h` through dense cyclic Jacobi rotations.
pub fn dense_brute_force(h: &SparseOperator) -> Result<DenseSpectrum> {
    let n = h.dim();
    if n > ORACLE_DENSE_MAX {
        return Err(Error::TooLargeForDense { dim: n, cap: ORACLE_DENSE_MAX });
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in h.row(i) {
            a[i * n + j] = v;
        }
    }
    Ok(jacobi_eigen(n, a))
}

/// Eigenvalues strictly below `sigma` by unpivoted dense `LDLᵀ` of `H - σ`.
pub fn dense_inertia(h: &SparseOperator, sigma: f64) -> usize {
    let n = h.dim();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in h.row(i) {
            a[i * n + j] = v;
        }
        a[i * n + i] -= sigma;
    }
    let mut negative = 0;
    for k in 0..n {
        let mut p = a[k * n + k];
        if p == 0.0 {
            p = 1e-300;
        }
        if p < 0.0 {
            negative += 1;
        }
        for i in k + 1..n {
            let l = a[i * n + k] / p;
            if l == 0.0 {
                continue;
            }
            for j in k + 1..=i {
                a[i * n + j] -= l * a[j * n + k];
            }
        }
    }
    negative
}

/// `(χ_x (H - z)^{-1} χ_y)` as `Σ_E (χ_x v_E)(χ_y v_E)ᵀ / (E - z)`.
pub fn spectral_sum_block(spec: &DenseSpectrum, z: Complex64, rows: &[usize], cols: &[usize]) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![Complex64::default(); cols.len()]; rows.len()];
    for k in 0..spec.values.len() {
        let w = Complex64::new(1.0, 0.0) / (Complex64::new(spec.values[k], 0.0) - z);
        for (i, &r) in rows.iter().enumerate() {
            let vr = spec.vector(k)[r];
            for (j, &c) in cols.iter().enumerate() {
                out[i][j] += w * vr * spec.vector(k)[c];
            }
        }
    }
    out
}

/// Largest singular value of a complex block via the real embedding of
/// `BᴴB` and Jacobi.
pub fn block_norm_oracle(b: &[Vec<Complex64>]) -> f64 {
    let rows = b.len();
    if rows == 0 || b[0].is_empty() {
        return 0.0;
    }
    let cols = b[0].len();
    let m = 2 * cols;
    let mut a = vec![0.0; m * m];
    for p in 0..cols {
        for q in 0..cols {
            let g: Complex64 = (0..rows).map(|i| b[i][p].conj() * b[i][q]).sum();
            a[p * m + q] = g.re;
            a[(p + cols) * m + q + cols] = g.re;
            a[p * m + q + cols] = -g.im;
            a[(p + cols) * m + q] = g.im;
        }
    }
    let spec = jacobi_eigen(m, a);
    spec.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..a.len() {
        let d = (a[i] - b[i]).abs();
        if d > m {
            m = d;
        }
    }
    m
}

/// `max{max_j min_k |x_j - y_k|, max_k min_j |x_j - y_k|}` as a literal double loop.
pub fn hausdorff_brute(x: &Configuration, y: &Configuration) -> f64 {
    let mut forward = 0.0f64;
    for j in 0..x.n() {
        let mut best = f64::INFINITY;
        for k in 0..y.n() {
            best = best.min(sup_norm(x.point(j), y.point(k)));
        }
        forward = forward.max(best);
    }
    let mut backward = 0.0f64;
    for k in 0..y.n() {
        let mut best = f64::INFINITY;
        for j in 0..x.n() {
            best = best.min(sup_norm(x.point(j), y.point(k)));
        }
        backward = backward.max(best);
    }
    forward.max(backward)
}

/// `max{dist_H(x_J, y_J), dist_H(x_K, y_K)}` through [`hausdorff_brute`].
pub fn partition_dist_brute(x: &Configuration, y: &Configuration, p: &Partition) -> f64 {
    hausdorff_brute(&x.select(p.j()), &y.select(p.j())).max(hausdorff_brute(&x.select(p.k()), &y.select(p.k())))
}

/// Every partition of `{0..n}` with particle 0 in `J`.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    (0..(1u32 << (n - 1)) - 1)
        .filter_map(|mask| {
            let j: Vec<usize> = std::iter::once(0).chain((1..n).filter(|i| mask & (1 << (i - 1)) != 0)).collect();
            Partition::new(n, &j).ok()
        })
        .collect()
}

/// Minimum cross-separation by enumeration.
pub fn separation_brute(x: &Configuration, p: &Partition) -> f64 {
    let mut m = f64::INFINITY;
    for &a in p.j() {
        for &b in p.k() {
            m = m.min(sup_norm(x.point(a), x.point(b)));
        }
    }
    m
}
