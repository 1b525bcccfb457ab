//! Gevrey-type smooth cutoffs: `χ = 0` on the window, `χ = 1` at distance
//! `≥ 2r`, with the transition built from an `N`-fold convolution of boxes.

use serde::Serialize;

use super::EnergyWindow;
use crate::error::{Error, Result};

/// Largest supported convolution order.
pub const MAX_CUTOFF_ORDER: usize = 60;

/// `χ(E) = g(dist(E, J))` where `g` is the cumulative distribution of a sum of
/// `N` independent uniforms on `[0, r/N]`, shifted to start at `r`.
///
/// Derivatives satisfy `|χ^{(k)}| ≤ c (A N / r)^k` for `k ≤ N` with `c = 1`
/// and `A = 2`.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffFunction {
    pub window: EnergyWindow,
    pub r: f64,
    pub order: usize,
    pub c: f64,
    pub a: f64,
}

/// Cutoff for `window` with collar `r` and order `order`.
pub fn gevrey_cutoff(window: &EnergyWindow, r: f64, order: usize) -> Result<CutoffFunction> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidConfig(format!("cutoff collar must be positive, got {r}")));
    }
    if !(2..=MAX_CUTOFF_ORDER).contains(&order) {
        return Err(Error::CutoffOrder { order, max: MAX_CUTOFF_ORDER });
    }
    Ok(CutoffFunction { window: window.clone(), r, order, c: 1.0, a: 2.0 })
}

/// Order used at energy distance `dist`: `⌊δ·dist⌋ + 2`.
pub fn cutoff_order_for_distance(delta: f64, dist: f64) -> usize {
    (delta * dist.max(0.0)).floor() as usize + 2
}

/// `M_m(t - i)` for `i = 0..=shifts` (cardinal B-spline of order `m`, support `[0, m]`).
fn bspline_shifts(m: usize, t: f64, shifts: usize) -> Vec<f64> {
    // level j holds M_j(t - i) for i = 0..=shifts + m - j
    let top = shifts + m - 1;
    let mut cur: Vec<f64> = (0..=top)
        .map(|i| {
            let s = t - i as f64;
            if (0.0..1.0).contains(&s) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for j in 2..=m {
        let len = cur.len() - 1;
        let next: Vec<f64> = (0..len)
            .map(|i| {
                let s = t - i as f64;
                (s * cur[i] + (j as f64 - s) * cur[i + 1]) / (j - 1) as f64
            })
            .collect();
        cur = next;
    }
    cur.truncate(shifts + 1);
    cur
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl CutoffFunction {
    fn width(&self) -> f64 {
        self.r / self.order as f64
    }

    /// Transition profile `g^{(k)}(u)`, `u` the distance to the window.
    fn profile(&self, u: f64, k: usize) -> f64 {
        let n = self.order;
        let t = (u - self.r) / self.width();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= n as f64 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if k == 0 {
            // CDF of the Irwin-Hall law: Σ_{j ≥ 0} M_{N+1}(t - j)
            let shifts = t.floor() as usize;
            return bspline_shifts(n + 1, t, shifts).iter().sum::<f64>().min(1.0);
        }
        if k > n {
            return f64::NAN;
        }
        let q = k - 1;
        let m = bspline_shifts(n - q, t, q);
        let s: f64 = (0..=q)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(q, i) * m[i])
            .sum();
        s / self.width().powi(k as i32)
    }

    pub fn value(&self, e: f64) -> f64 {
        self.derivative(e, 0)
    }

    /// `χ^{(k)}(E)` for `k ≤ N`; `NaN` above the order.
    pub fn derivative(&self, e: f64, k: usize) -> f64 {
        let w = &self.window;
        if e < w.lo {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * self.profile(w.lo - e, k)
        } else if e > w.hi {
            self.profile(e - w.hi, k)
        } else {
            0.0
        }
    }

    /// `c (A N / r)^k`.
    pub fn bound(&self, k: usize) -> f64 {
        self.c * (self.a * self.order as f64 / self.r).powi(k as i32)
    }
}
