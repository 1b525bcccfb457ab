use num_complex::Complex64;

use super::norm2;
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate orthogonal CG for the complex symmetric
/// system `(H - z) x = b`. Converges to `‖r‖ ≤ tol ‖b‖`.
pub fn cocg_solve(h: &SparseOperator, z: Complex64, b: &[Complex64], tol: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let n = h.dim();
    let inv_diag: Vec<Complex64> = h.diagonal().iter().map(|&d| 1.0 / (Complex64::new(d, 0.0) - z)).collect();
    let b_norm = norm2(b);
    let mut x = vec![Complex64::default(); n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut w: Vec<Complex64> = r.iter().zip(&inv_diag).map(|(a, m)| a * m).collect();
    let mut p = w.clone();
    let mut rho = bilinear(&r, &w);
    let mut q = vec![Complex64::default(); n];
    for iter in 0..max_iter {
        h.apply(&p, &mut q);
        for (qi, pi) in q.iter_mut().zip(&p) {
            *qi -= z * pi;
        }
        let pq = bilinear(&p, &q);
        if pq.norm() < 1e-300 {
            return Err(Error::SolverBreakdown(format!("COCG breakdown at iteration {iter}")));
        }
        let alpha = rho / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if norm2(&r) <= tol * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            w[i] = r[i] * inv_diag[i];
        }
        let rho_next = bilinear(&r, &w);
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..n {
            p[i] = w[i] + beta * p[i];
        }
    }
    Err(Error::SolverBreakdown(format!(
        "COCG did not reach relative residual {tol:e} in {max_iter} iterations"
    )))
}
