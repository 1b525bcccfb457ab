use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default stretch-exponent grid.
pub const GAMMA_GRID: [f64; 5] = [0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0];

/// One `(dist, value ± stderr)` observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySample {
    pub dist: f64,
    pub value: f64,
    pub stderr: f64,
}

impl DecaySample {
    pub fn new(dist: f64, value: f64, stderr: f64) -> Self {
        Self { dist, value, stderr }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMethod {
    GammaGrid,
    /// Continuous search over `γ ∈ (0, 1]`; the objective is not convex.
    Free,
}

/// `value ≈ C exp(-μ dist^γ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub mu: f64,
    pub gamma: f64,
    /// RMS of the log-residuals.
    pub residual: f64,
    pub mu_stderr: f64,
    pub c_stderr: f64,
    pub method: FitMethod,
    /// Weighted residual sum of squares per candidate `γ`.
    pub candidates: Vec<(f64, f64)>,
}

impl DecayFit {
    pub fn localized(&self) -> bool {
        self.mu > 0.0
    }

    pub fn predict(&self, dist: f64) -> f64 {
        self.c * (-self.mu * dist.powf(self.gamma)).exp()
    }
}

struct Line {
    intercept: f64,
    slope: f64,
    wssr: f64,
    rms: f64,
    cov: [[f64; 2]; 2],
}

fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64], absolute: bool) -> Result<Line> {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        s0 += ws[i];
        s1 += ws[i] * xs[i];
        s2 += ws[i] * xs[i] * xs[i];
        t0 += ws[i] * ys[i];
        t1 += ws[i] * xs[i] * ys[i];
    }
    let det = s0 * s2 - s1 * s1;
    if det.abs() <= 1e-14 * s0 * s2 {
        return Err(Error::InsufficientData("decay fit needs distinct distances".into()));
    }
    let slope = (s0 * t1 - s1 * t0) / det;
    let intercept = (s2 * t0 - s1 * t1) / det;
    let mut wssr = 0.0;
    let mut ssr = 0.0;
    for i in 0..xs.len() {
        let r = ys[i] - intercept - slope * xs[i];
        wssr += ws[i] * r * r;
        ssr += r * r;
    }
    let m = xs.len() as f64;
    let scale = if absolute { 1.0 } else if m > 2.0 { wssr / (m - 2.0) } else { 0.0 };
    let cov = [[scale * s2 / det, -scale * s1 / det], [-scale * s1 / det, scale * s0 / det]];
    Ok(Line { intercept, slope, wssr, rms: (ssr / m).sqrt(), cov })
}

fn prepare(samples: &[DecaySample]) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    if let Some(s) = samples.iter().find(|s| !(s.value > 0.0) || !s.value.is_finite()) {
        return Err(Error::InsufficientData(format!("decay fit needs positive values, got {}", s.value)));
    }
    let mut dists: Vec<f64> = samples.iter().map(|s| s.dist).collect();
    dists.sort_by(f64::total_cmp);
    dists.dedup();
    if dists.len() < 3 {
        return Err(Error::InsufficientData(format!("decay fit needs 3 distinct distances, got {}", dists.len())));
    }
    let ys = samples.iter().map(|s| s.value.ln()).collect();
    let weighted = samples.iter().all(|s| s.stderr > 0.0);
    let ws = samples
        .iter()
        .map(|s| if weighted { (s.value / s.stderr).powi(2) } else { 1.0 })
        .collect();
    Ok((ys, ws, weighted))
}

fn fit_at(samples: &[DecaySample], ys: &[f64], ws: &[f64], weighted: bool, gamma: f64) -> Result<Line> {
    let xs: Vec<f64> = samples.iter().map(|s| s.dist.powf(gamma)).collect();
    weighted_line(&xs, ys, ws, weighted)
}

fn finish(line: Line, gamma: f64, method: FitMethod, candidates: Vec<(f64, f64)>) -> DecayFit {
    let c = line.intercept.exp();
    DecayFit {
        c,
        mu: -line.slope,
        gamma,
        residual: line.rms,
        mu_stderr: line.cov[1][1].max(0.0).sqrt(),
        c_stderr: c * line.cov[0][0].max(0.0).sqrt(),
        method,
        candidates,
    }
}

/// Weighted least squares of `ln value` against `dist^γ` for each `γ` in
/// `gammas`, keeping the smallest weighted residual (earlier entries win
/// ties). Weights are `(value / stderr)²` when every sample carries a
/// positive standard error, uniform otherwise.
pub fn fit_decay(samples: &[DecaySample], gammas: &[f64]) -> Result<DecayFit> {
    let (ys, ws, weighted) = prepare(samples)?;
    if gammas.is_empty() || gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
        return Err(Error::InvalidConfig("γ grid must be nonempty inside (0, 1]".into()));
    }
    let mut best: Option<(Line, f64)> = None;
    let mut candidates = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let line = fit_at(samples, &ys, &ws, weighted, g)?;
        candidates.push((g, line.wssr));
        if best.as_ref().is_none_or(|(b, _)| line.wssr < b.wssr * (1.0 - 1e-12) - 1e-300) {
            best = Some((line, g));
        }
    }
    let (line, g) = best.expect("nonempty grid");
    Ok(finish(line, g, FitMethod::GammaGrid, candidates))
}

/// Free fit over `γ ∈ [0.05, 1]`: coarse scan followed by golden-section refinement.
pub fn fit_decay_free(samples: &[DecaySample]) -> Result<DecayFit> {
    let (ys, ws, weighted) = prepare(samples)?;
    let cost = |g: f64| fit_at(samples, &ys, &ws, weighted, g).map(|l| l.wssr);
    let (lo, hi) = (0.05, 1.0);
    let steps = 96;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=steps {
        let g = lo + (hi - lo) * i as f64 / steps as f64;
        let c = cost(g)?;
        if c < best.1 {
            best = (g, c);
        }
    }
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = b - phi * (b - a);
        let m2 = a + phi * (b - a);
        if cost(m1)? <= cost(m2)? {
            b = m2;
        } else {
            a = m1;
        }
    }
    let g = 0.5 * (a + b);
    let line = fit_at(samples, &ys, &ws, weighted, g)?;
    let wssr = line.wssr;
    Ok(finish(line, g, FitMethod::Free, vec![(g, wssr)]))
}

/// Straight-line fit `y ≈ intercept + slope·x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Weighted coefficient of determination.
    pub r2: f64,
    /// Standard errors taken from paired per-realization samples.
    pub paired: bool,
}

/// Weighted least squares with weights `1/σ²` (uniform if any `σ` is zero).
///
/// With `samples` (one vector per abscissa, aligned by realization) the
/// estimates are the means of per-realization fits with those same weights,
/// and their standard errors come from the spread of the per-realization
/// coefficients; this keeps correlations between abscissae. Without samples
/// the `σ` are treated as independent and absolute.
pub fn linear_fit(xs: &[f64], ys: &[f64], sigmas: &[f64], samples: Option<&[Vec<f64>]>) -> Result<LinearFit> {
    let k = xs.len();
    if k < 3 || ys.len() != k || sigmas.len() != k {
        return Err(Error::InsufficientData(format!("linear fit needs >= 3 aligned points, got {k}")));
    }
    let w: Vec<f64> = if sigmas.iter().all(|s| *s > 0.0) {
        sigmas.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; k]
    };
    let sw: f64 = w.iter().sum();
    let xbar = w.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(xs).map(|(w, x)| w * (x - xbar).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("linear fit needs distinct abscissae".into()));
    }
    // slope = Σ a_i y_i, intercept = Σ b_i y_i
    let a: Vec<f64> = (0..k).map(|i| w[i] * (xs[i] - xbar) / sxx).collect();
    let b: Vec<f64> = (0..k).map(|i| w[i] / sw - xbar * a[i]).collect();
    let dot = |c: &[f64], y: &[f64]| c.iter().zip(y).map(|(c, y)| c * y).sum::<f64>();
    let slope = dot(&a, ys);
    let intercept = dot(&b, ys);
    let ybar = dot(&w, ys) / sw;
    let ss_tot: f64 = (0..k).map(|i| w[i] * (ys[i] - ybar).powi(2)).sum();
    let ss_res: f64 = (0..k).map(|i| w[i] * (ys[i] - intercept - slope * xs[i]).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let (slope_stderr, intercept_stderr, paired) = match samples {
        Some(rows) => {
            if rows.len() != k || rows.iter().any(|r| r.len() != rows[0].len()) || rows[0].len() < 2 {
                return Err(Error::InsufficientData("paired samples must be aligned with >= 2 realizations".into()));
            }
            let m = rows[0].len();
            let coef = |c: &[f64]| -> f64 {
                let per: Vec<f64> = (0..m).map(|r| (0..k).map(|i| c[i] * rows[i][r]).sum()).collect();
                let mean = per.iter().sum::<f64>() / m as f64;
                let var = per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
                (var / m as f64).sqrt()
            };
            (coef(&a), coef(&b), true)
        }
        None => {
            let var = |c: &[f64]| (0..k).map(|i| c[i] * c[i] * sigmas[i] * sigmas[i]).sum::<f64>().sqrt();
            (var(&a), var(&b), false)
        }
    };
    Ok(LinearFit { slope, intercept, slope_stderr, intercept_stderr, r2, paired })
}
