use super::Scalar;
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// LU factorization of the banded matrix `H - shift` (half-bandwidth `b`).
///
/// With pivoting the row interchanges widen the upper band to `2b`; storage
/// is one window of `3b + 1` entries per row covering columns
/// `[r - b, r + 2b]`. Multipliers are kept per elimination step and replayed
/// in order during the solve.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    width: usize,
    upper: Vec<T>,
    multipliers: Vec<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    pub fn factor(h: &SparseOperator, shift: T, pivoting: bool) -> Result<Self> {
        let n = h.dim();
        let kl = h.bandwidth();
        let width = 3 * kl + 1;
        let mut upper = vec![T::default(); n * width];
        for i in 0..n {
            for (c, v) in h.row(i) {
                upper[i * width + c + kl - i] = T::from_real(v);
            }
            upper[i * width + kl] -= shift;
        }
        let mut lu = Self { n, kl, width, upper, multipliers: vec![T::default(); n * kl], pivots: (0..n).collect() };
        lu.eliminate(pivoting)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> usize {
        r * self.width + c + self.kl - r
    }

    fn eliminate(&mut self, pivoting: bool) -> Result<()> {
        let (n, kl) = (self.n, self.kl);
        let scale = self.upper.iter().map(|v| v.modulus()).fold(0.0, f64::max).max(1e-300);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + 2 * kl).min(n - 1);
            if pivoting {
                let mut p = k;
                let mut best = self.upper[self.at(k, k)].modulus();
                for r in k + 1..=last_row {
                    let m = self.upper[self.at(r, k)].modulus();
                    if m > best {
                        best = m;
                        p = r;
                    }
                }
                if best == 0.0 {
                    return Err(Error::SolverBreakdown(format!("singular band matrix at column {k}")));
                }
                if p != k {
                    for c in k..=last_col {
                        let (a, b) = (self.at(k, c), self.at(p, c));
                        self.upper.swap(a, b);
                    }
                }
                self.pivots[k] = p;
            } else if self.upper[self.at(k, k)].modulus() <= 1e-14 * scale {
                // inertia counting only: nudge an exactly singular pivot
                let i = self.at(k, k);
                self.upper[i] = T::from_real(1e-14 * scale);
            }
            let pivot = self.upper[self.at(k, k)];
            for r in k + 1..=last_row {
                let l = self.upper[self.at(r, k)] / pivot;
                self.multipliers[k * kl + (r - k - 1)] = l;
                if l == T::default() {
                    continue;
                }
                let i = self.at(r, k);
                self.upper[i] = T::default();
                for c in k + 1..=last_col {
                    let u = self.upper[self.at(k, c)];
                    let i = self.at(r, c);
                    self.upper[i] -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Diagonal of `U`.
    pub fn pivot_values(&self) -> Vec<T> {
        (0..self.n).map(|k| self.upper[self.at(k, k)]).collect()
    }

    /// Solves `(H - shift) x = b` in place.
    pub fn solve(&self, b: &mut [T]) {
        let (n, kl) = (self.n, self.kl);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.multipliers[k * kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + 2 * kl).min(n - 1) {
                acc -= self.upper[self.at(k, c)] * b[c];
            }
            b[k] = acc / self.upper[self.at(k, k)];
        }
    }

    /// Number of stored entries the factorization of `h` needs.
    pub fn storage(h: &SparseOperator) -> usize {
        h.dim() * (3 * h.bandwidth() + 1)
    }
}

/// Number of eigenvalues of `h` strictly below `sigma` (Sylvester inertia of
/// the unpivoted `LDL^T` of `h - sigma`).
pub fn inertia_below(h: &SparseOperator, sigma: f64) -> Result<usize> {
    let lu = BandLu::<f64>::factor(h, sigma, false)?;
    Ok(lu.pivot_values().iter().filter(|&&p| p < 0.0).count())
}
