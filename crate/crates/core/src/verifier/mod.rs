//! Decay fits and the deterministic bookkeeping of the rescaling argument:
//! the rescaling inequality, its iteration, exponent schedules and the
//! initial-scale, subadditivity and Combes-Thomas checks.
//!
//! Abstract constants are always inputs; every report echoes the constants
//! it was evaluated under.

mod fit;

pub use fit::{fit_decay, fit_decay_free, linear_fit, DecayFit, DecaySample, FitMethod, LinearFit, GAMMA_GRID};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EnsembleEstimate;
use crate::model::InteractionKind;

/// Upper envelope `w_b` of the pair interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WbBound {
    None,
    /// `c_w r^{-p_w}`.
    Polynomial { c_w: f64, p_w: f64 },
    /// `c_w exp(-μ_w r^γ_w)`.
    Exponential { c_w: f64, mu_w: f64, gamma_w: f64 },
}

impl WbBound {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            WbBound::None => 0.0,
            WbBound::Polynomial { c_w, p_w } => c_w * r.powf(-p_w),
            WbBound::Exponential { c_w, mu_w, gamma_w } => c_w * (-mu_w * r.powf(gamma_w)).exp(),
        }
    }

    pub fn from_interaction(kind: &InteractionKind) -> Self {
        match *kind {
            InteractionKind::None => WbBound::None,
            InteractionKind::Exponential { c_w, mu_w, gamma_w } => WbBound::Exponential { c_w, mu_w, gamma_w },
            InteractionKind::Polynomial { c_w, p_w } | InteractionKind::HardCoreRegularized { c_w, p_w, .. } => {
                WbBound::Polynomial { c_w, p_w }
            }
        }
    }
}

/// Constants of the rescaling inequality. `c = None` asks for the smallest
/// admissible constant instead of a verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingConstants {
    #[serde(default)]
    pub c: Option<f64>,
    pub nu2: f64,
    pub alpha: f64,
    pub gamma_star: f64,
    pub s: f64,
    pub d: usize,
    pub n: usize,
    /// Safety distance `R = r_U + 6`.
    pub r: f64,
    pub wb: WbBound,
}

impl RescalingConstants {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.s > 0.0 && self.s < 1.0 / 3.0) {
            return bad(format!("rescaling needs s in (0, 1/3), got {}", self.s));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1]", self.alpha));
        }
        if !(self.gamma_star > 0.0 && self.gamma_star <= 1.0) {
            return bad(format!("gamma* = {} must lie in (0, 1]", self.gamma_star));
        }
        if !(self.nu2 > 0.0 && self.r > 0.0) || self.d == 0 || self.n == 0 {
            return bad("nu2, R, d, n must be positive".into());
        }
        if let Some(c) = self.c {
            if !(c > 0.0) {
                return bad(format!("C = {c} must be positive"));
            }
        }
        Ok(())
    }

    /// `(L + L^α, 2L, 2L + 2L^α + 9R)`.
    pub fn scales(&self, l: f64) -> (f64, f64, f64) {
        let la = l.powf(self.alpha);
        (l + la, 2.0 * l, 2.0 * l + 2.0 * la + 9.0 * self.r)
    }
}

/// `B_s` estimate at one separation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleValue {
    pub mean: f64,
    pub stderr: f64,
}

impl From<&EnsembleEstimate> for ScaleValue {
    fn from(e: &EnsembleEstimate) -> Self {
        Self { mean: e.mean, stderr: e.stderr }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RescalingReport {
    pub l: f64,
    pub scales: (f64, f64, f64),
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// The three bracketed summands (the last two vanish for `n = 1`).
    pub terms: [f64; 3],
    /// Smallest `C` with `lhs ≤ C·Σ terms` at the point estimates.
    pub c_min: f64,
    pub rhs: Option<f64>,
    pub rhs_stderr: Option<f64>,
    /// At 2σ; `None` when `C` is not pinned.
    pub satisfied: Option<bool>,
    pub constants: RescalingConstants,
}

/// Evaluates `B(2L+2L^α+9R) ≤ C(L^{8dn} B(L+L^α)² + e^{-ν₂ L^{αγ*}} + L^{(5+α)nd} w_b(L^α/4n)^s B(2L))`.
pub fn rescaling_check(
    b_small: ScaleValue,
    b_mid: ScaleValue,
    b_large: ScaleValue,
    k: &RescalingConstants,
    l: f64,
) -> Result<RescalingReport> {
    k.validate()?;
    if !(l > 0.0) {
        return Err(Error::InvalidConfig(format!("scale L = {l} must be positive")));
    }
    let (d, n) = (k.d as f64, k.n as f64);
    let t1 = l.powf(8.0 * d * n) * b_small.mean.powi(2);
    let dt1 = l.powf(8.0 * d * n) * 2.0 * b_small.mean * b_small.stderr;
    let (t2, t3, dt3) = if k.n == 1 {
        (0.0, 0.0, 0.0)
    } else {
        let f = l.powf((5.0 + k.alpha) * n * d) * k.wb.eval(l.powf(k.alpha) / (4.0 * n)).powf(k.s);
        ((-k.nu2 * l.powf(k.alpha * k.gamma_star)).exp(), f * b_mid.mean, f * b_mid.stderr)
    };
    let bracket = t1 + t2 + t3;
    let c_min = if b_large.mean <= 0.0 { 0.0 } else { b_large.mean / bracket };
    let (rhs, rhs_stderr, satisfied) = match k.c {
        Some(c) => {
            let rhs = c * bracket;
            let sigma = c * dt1.hypot(dt3);
            let slack = 2.0 * sigma.hypot(b_large.stderr);
            (Some(rhs), Some(sigma), Some(b_large.mean <= rhs + slack))
        }
        None => (None, None, None),
    };
    Ok(RescalingReport {
        l,
        scales: k.scales(l),
        lhs: b_large.mean,
        lhs_stderr: b_large.stderr,
        terms: [t1, t2, t3],
        c_min,
        rhs,
        rhs_stderr,
        satisfied,
        constants: k.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Polynomially decaying `w_b`, `α ∈ (0, 1)`.
    Poly,
    /// Exponentially decaying `w_b`, `α = 1`.
    Exp,
}

/// Inputs of the corollary iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryInputs {
    pub c_prime: f64,
    pub q_prime: f64,
    pub l1: f64,
    /// Theorem constant `C` (required).
    pub c: f64,
    pub constants: RescalingConstants,
    pub variant: Variant,
    /// Number of doubling steps `[2^k L1, 2^{k+1} L1]` to check.
    pub steps: usize,
    /// Sample points per step interval.
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationStep {
    pub k: usize,
    pub l_lo: f64,
    pub l_hi: f64,
    /// Largest value of each term over the sampled `L`.
    pub terms: [f64; 3],
    pub worst_l: [f64; 3],
    pub closes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub variant: Variant,
    pub beta: f64,
    pub nu_prime: f64,
    /// Components whose minimum defines `ν'`.
    pub nu_candidates: Vec<f64>,
    pub steps: Vec<IterationStep>,
    pub first_failure: Option<usize>,
    /// Unmet hypotheses; never repaired.
    pub violations: Vec<String>,
    /// `(L, B(L), 2C'e^{-ν'L^β})` on the propagated range, when `B` was supplied.
    pub bound_checks: Vec<(f64, f64, f64)>,
    pub verdict: bool,
    pub inputs: CorollaryInputs,
}

/// `β` and the `ν'` candidates of the iteration.
pub fn corollary_rates(inp: &CorollaryInputs) -> (f64, Vec<f64>) {
    let k = &inp.constants;
    let ln2 = std::f64::consts::LN_2;
    match inp.variant {
        Variant::Poly => {
            let beta = (k.alpha * k.gamma_star).min(1.0 - k.alpha);
            (beta, vec![ln2 / (4.0 * inp.l1).powf(beta), k.nu2 / (5f64.powf(beta) * 2.0)])
        }
        Variant::Exp => {
            let g = k.gamma_star;
            let mu_w = match k.wb {
                WbBound::Exponential { mu_w, .. } => mu_w,
                _ => f64::NAN,
            };
            (
                g,
                vec![
                    ln2 / (4.0 * inp.l1 + 9.0 * k.r).powf(g),
                    k.nu2 / (5f64.powf(g) * 2.0),
                    k.s * mu_w / (2.0 * (20.0 * k.n as f64).powf(g)),
                ],
            )
        }
    }
}

/// The three terms of the iteration step at `L`.
pub fn corollary_terms(inp: &CorollaryInputs, nu: f64, beta: f64, l: f64) -> [f64; 3] {
    let k = &inp.constants;
    let (d, n) = (k.d as f64, k.n as f64);
    let (cp, q, c, r) = (inp.c_prime, inp.q_prime, inp.c, k.r);
    match inp.variant {
        Variant::Poly => {
            let a = k.alpha;
            let la = l.powf(a);
            let big = 2.0 * l + 2.0 * la + 9.0 * r;
            let (c_w, p_w) = match k.wb {
                WbBound::Polynomial { c_w, p_w } => (c_w, p_w),
                _ => (0.0, 0.0),
            };
            let t1 = 5f64.powf(q) * 2.0 * cp * c * l.powf(8.0 * d * n - q)
                * (nu * big.powf(beta) - 2.0 * nu * (l + la).powf(beta)).exp();
            let t2 = c / (2.0 * cp) * 5f64.powf(q) * l.powf(q)
                * (nu * 5f64.powf(beta) * l.powf(beta) - k.nu2 * l.powf(a * k.gamma_star)).exp();
            let t3 = 3f64.powf(q) * c * l.powf((5.0 + a) * n * d) * c_w.powf(k.s)
                * (la / (4.0 * n)).powf(-p_w * k.s)
                * (nu * (big.powf(beta) - (2.0 * l).powf(beta))).exp();
            [t1, t2, t3]
        }
        Variant::Exp => {
            let g = k.gamma_star;
            let (c_w, mu_w) = match k.wb {
                WbBound::Exponential { c_w, mu_w, .. } => (c_w, mu_w),
                _ => (0.0, 0.0),
            };
            let t1 = 5f64.powf(q) * 2.0 * cp * c * l.powf(8.0 * d * n - q)
                * (nu * (4.0 * l + 9.0 * r).powf(g) - 2.0 * nu * (2.0 * l).powf(g)).exp();
            let t2 = c / (2.0 * cp) * 5f64.powf(q) * l.powf(q) * (nu * (5.0 * l).powf(g) - k.nu2 * l.powf(g)).exp();
            let t3 = 3f64.powf(q) * c * l.powf(6.0 * n * d) * c_w.powf(k.s)
                * (-k.s * mu_w * (l / (4.0 * n)).powf(g)).exp()
                * (nu * ((5.0 * l).powf(g) - (2.0 * l).powf(g))).exp();
            [t1, t2, t3]
        }
    }
}

/// Replays the corollary's induction: fixes `β`, `ν'`, then checks on each
/// doubling interval of `L` that every term stays below `1/3`. When `b` is
/// given, the initial hypothesis `B(L) ≤ C'L^{-q'}` is checked on the initial
/// interval and the propagated bound compared with `b` on the checked range.
pub fn iterate_corollary(inp: &CorollaryInputs, b: Option<&dyn Fn(f64) -> f64>) -> Result<CorollaryReport> {
    let k = &inp.constants;
    k.validate()?;
    if !(inp.c_prime > 0.0 && inp.l1 > 0.0 && inp.c > 0.0) || inp.steps == 0 || inp.samples < 2 {
        return Err(Error::InvalidConfig("iteration needs C' > 0, L1 > 0, C > 0, steps >= 1, samples >= 2".into()));
    }
    let (d, n) = (k.d as f64, k.n as f64);
    let mut violations = Vec::new();
    if !(inp.q_prime > 8.0 * d * n) {
        violations.push(format!("q' = {} must exceed 8dn = {}", inp.q_prime, 8.0 * d * n));
    }
    match (inp.variant, k.wb) {
        (Variant::Poly, WbBound::Polynomial { p_w, .. }) => {
            if !(k.alpha < 1.0) {
                violations.push(format!("polynomial variant needs alpha < 1, got {}", k.alpha));
            }
            if !(k.alpha * p_w * k.s > (5.0 + k.alpha) * n * d) {
                violations.push(format!(
                    "alpha p_w s = {} must exceed (5 + alpha) n d = {}",
                    k.alpha * p_w * k.s,
                    (5.0 + k.alpha) * n * d
                ));
            }
        }
        (Variant::Exp, WbBound::Exponential { gamma_w, .. }) => {
            if k.alpha != 1.0 {
                violations.push(format!("exponential variant uses alpha = 1, got {}", k.alpha));
            }
            if (gamma_w - k.gamma_star).abs() > 1e-12 {
                violations.push(format!("w_b decay order {gamma_w} must equal gamma* = {}", k.gamma_star));
            }
        }
        (v, wb) => violations.push(format!("variant {v:?} does not match interaction envelope {wb:?}")),
    }
    let (beta, nu_candidates) = corollary_rates(inp);
    let nu = nu_candidates.iter().copied().fold(f64::INFINITY, f64::min);

    let mut steps = Vec::with_capacity(inp.steps);
    let mut first_failure = None;
    for step in 0..inp.steps {
        let lo = inp.l1 * 2f64.powi(step as i32);
        let hi = 2.0 * lo;
        let mut terms = [0.0f64; 3];
        let mut worst_l = [lo; 3];
        for i in 0..inp.samples {
            let l = lo * (hi / lo).powf(i as f64 / (inp.samples - 1) as f64);
            let t = corollary_terms(inp, nu, beta, l);
            for j in 0..3 {
                if t[j] > terms[j] || t[j].is_nan() {
                    terms[j] = t[j];
                    worst_l[j] = l;
                }
            }
        }
        let closes = terms.iter().all(|&t| t <= 1.0 / 3.0);
        if !closes && first_failure.is_none() {
            first_failure = Some(step);
        }
        steps.push(IterationStep { k: step, l_lo: lo, l_hi: hi, terms, worst_l, closes });
    }

    let mut bound_checks = Vec::new();
    if let Some(b) = b {
        let top = match inp.variant {
            Variant::Poly => 4.0 * inp.l1,
            Variant::Exp => 4.0 * inp.l1 + 9.0 * k.r,
        };
        for i in 0..inp.samples {
            let l = inp.l1 + (top - inp.l1) * i as f64 / (inp.samples - 1) as f64;
            if b(l) > inp.c_prime * l.powf(-inp.q_prime) {
                violations.push(format!("initial hypothesis B(L) <= C'L^-q' fails at L = {l}"));
                break;
            }
        }
        let last = inp.l1 * 2f64.powi(inp.steps as i32);
        for i in 0..inp.samples {
            let l = inp.l1 * (last / inp.l1).powf(i as f64 / (inp.samples - 1) as f64);
            bound_checks.push((l, b(l), 2.0 * inp.c_prime * (-nu * l.powf(beta)).exp()));
        }
    }
    let verdict = violations.is_empty() && first_failure.is_none();
    Ok(CorollaryReport {
        variant: inp.variant,
        beta,
        nu_prime: nu,
        nu_candidates,
        steps,
        first_failure,
        violations,
        bound_checks,
        verdict,
        inputs: inp.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentSchedule {
    pub beta1: f64,
    /// `β^{(k)}` for `k = 1..=n`.
    pub beta: Vec<f64>,
    /// `α^{(k)}` for `k = 2..=n`.
    pub alpha: Vec<f64>,
    /// `(p_w + 8d) / (48d)`.
    pub bound: f64,
    /// Largest `n` strictly below the bound.
    pub max_n: usize,
    pub admissible: bool,
}

/// `β^{(k)} = β₁/(1+(k-1)β₁)`, `α^{(k)} = (1+(k-2)β₁)/(1+(k-1)β₁)`, and the
/// particle-number bound `n < (p_w + 8d)/(48d)`.
pub fn exponent_schedule(beta1: f64, n: usize, d: usize, p_w: f64) -> Result<ExponentSchedule> {
    if !(beta1 > 0.0 && beta1 <= 1.0) || n == 0 || d == 0 || !(p_w > 0.0) {
        return Err(Error::InvalidConfig("schedule needs beta1 in (0, 1], n, d >= 1, p_w > 0".into()));
    }
    let beta = (1..=n).map(|k| beta1 / (1.0 + (k as f64 - 1.0) * beta1)).collect();
    let alpha = (2..=n).map(|k| (1.0 + (k as f64 - 2.0) * beta1) / (1.0 + (k as f64 - 1.0) * beta1)).collect();
    let bound = (p_w + 8.0 * d as f64) / (48.0 * d as f64);
    let max_n = (bound.ceil() as usize).saturating_sub(1);
    Ok(ExponentSchedule { beta1, beta, alpha, bound, max_n, admissible: (n as f64) < bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialScaleReport {
    /// `(L, B, stderr, C'L^{-q'})` for the scales inside `[L1, 4L1 + 9R]`.
    pub points: Vec<(f64, f64, f64, f64)>,
    /// Every point satisfies `B ≤ C'L^{-q'} + 2σ`.
    pub pass: bool,
    /// Every point satisfies `B + 2σ ≤ C'L^{-q'}`.
    pub pass_strict: bool,
    /// `min C'L^{-q'} / B` over the points.
    pub margin: f64,
    /// `α_W^s ≤ C'(4L1+9R)^{-q'}/(2C)`, when `(α_W, s, C)` is given.
    pub perturbative: Option<bool>,
    pub perturbative_rhs: Option<f64>,
}

/// Initial-scale hypothesis on `[L1, 4L1 + 9R]`.
pub fn initial_scale_check(
    data: &[(f64, ScaleValue)],
    c_prime: f64,
    q_prime: f64,
    l1: f64,
    r: f64,
    perturbative: Option<(f64, f64, f64)>,
) -> Result<InitialScaleReport> {
    let top = 4.0 * l1 + 9.0 * r;
    let points: Vec<(f64, f64, f64, f64)> = data
        .iter()
        .filter(|(l, _)| *l >= l1 && *l <= top)
        .map(|&(l, b)| (l, b.mean, b.stderr, c_prime * l.powf(-q_prime)))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "initial-scale check needs 3 scales in [{l1}, {top}], got {}",
            points.len()
        )));
    }
    let pass = points.iter().all(|p| p.1 <= p.3 + 2.0 * p.2);
    let pass_strict = points.iter().all(|p| p.1 + 2.0 * p.2 <= p.3);
    let margin = points.iter().map(|p| if p.1 > 0.0 { p.3 / p.1 } else { f64::INFINITY }).fold(f64::INFINITY, f64::min);
    let (perturbative, perturbative_rhs) = match perturbative {
        Some((alpha_w, s, c)) => {
            let rhs = c_prime * top.powf(-q_prime) / (2.0 * c);
            (Some(alpha_w.powf(s) <= rhs), Some(rhs))
        }
        None => (None, None),
    };
    Ok(InitialScaleReport { points, pass, pass_strict, margin, perturbative, perturbative_rhs })
}

/// Ground-energy ensemble estimate for `particles` particles on a box of side `side`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundEstimate {
    pub particles: usize,
    pub side: f64,
    pub estimate: ScaleValue,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityReport {
    pub side: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `Σ Ê_0^{(j_i)} - Ê_0^{(n)}`; nonpositive for repulsive interactions.
    pub gap: f64,
    /// `sqrt(σ_n² + (Σ σ_i)²)`: the parts are treated as fully correlated.
    pub sigma: f64,
    pub allowance: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

/// `Ê_0^{(n)} ≤ Σ Ê_0^{(j_i)} + 3σ + allowance`.
pub fn subadditivity_check(whole: &GroundEstimate, parts: &[GroundEstimate], allowance: f64) -> Result<SubadditivityReport> {
    if parts.is_empty() {
        return Err(Error::InvalidConfig("subadditivity needs at least one part".into()));
    }
    if let Some(p) = parts.iter().find(|p| p.side != whole.side) {
        return Err(Error::DomainMismatch(format!("part on box side {} vs whole on {}", p.side, whole.side)));
    }
    let total: usize = parts.iter().map(|p| p.particles).sum();
    if total != whole.particles {
        return Err(Error::InvalidConfig(format!("parts hold {total} particles, whole has {}", whole.particles)));
    }
    let rhs: f64 = parts.iter().map(|p| p.estimate.mean).sum();
    let sigma_parts: f64 = parts.iter().map(|p| p.estimate.stderr).sum();
    let sigma = whole.estimate.stderr.hypot(sigma_parts);
    let tolerance = 3.0 * sigma + allowance;
    let lhs = whole.estimate.mean;
    Ok(SubadditivityReport { side: whole.side, lhs, rhs, gap: rhs - lhs, sigma, allowance, tolerance, satisfied: lhs <= rhs + tolerance })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtStatus {
    Pass,
    Fail,
    /// No positive gap: the estimate says nothing.
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CtPoint {
    pub gap: f64,
    pub z: f64,
    pub mu: f64,
    pub mu_stderr: f64,
    /// `μ(g)(1 + |z| + g)/g`.
    pub mu0: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CtReport {
    pub status: CtStatus,
    pub points: Vec<CtPoint>,
    pub monotone: bool,
    /// `max C(g)·g` unless supplied.
    pub c0: f64,
    pub amplitude_ok: bool,
    pub mu0_min: f64,
    pub messages: Vec<String>,
}

/// Combes-Thomas shape: positive rates nondecreasing in the gap (within 2σ),
/// amplitudes below `C0/g·(1 + slack)`.
pub fn ct_check(data: &[(f64, f64, DecayFit)], c0: Option<f64>, slack: f64) -> CtReport {
    let mut messages = Vec::new();
    let mut points: Vec<CtPoint> = data
        .iter()
        .filter(|(g, z, _)| {
            if *g <= 0.0 {
                messages.push(format!("z = {z}: gap {g} is not positive, skipped"));
            }
            *g > 0.0
        })
        .map(|(g, z, f)| CtPoint {
            gap: *g,
            z: *z,
            mu: f.mu,
            mu_stderr: f.mu_stderr,
            mu0: f.mu * (1.0 + z.abs() + g) / g,
            amplitude: f.c,
        })
        .collect();
    points.sort_by(|a, b| a.gap.total_cmp(&b.gap));
    if points.is_empty() {
        return CtReport {
            status: CtStatus::Skipped,
            points,
            monotone: true,
            c0: c0.unwrap_or(f64::NAN),
            amplitude_ok: true,
            mu0_min: f64::NAN,
            messages,
        };
    }
    let mut ok = true;
    for p in &points {
        if !(p.mu > 0.0) {
            messages.push(format!("gap {}: fitted rate {} is not positive", p.gap, p.mu));
            ok = false;
        }
    }
    let monotone = points.windows(2).all(|w| w[1].mu >= w[0].mu - 2.0 * w[0].mu_stderr.hypot(w[1].mu_stderr));
    if !monotone {
        messages.push("fitted rate decreases with the gap".into());
    }
    let c0 = c0.unwrap_or_else(|| points.iter().map(|p| p.amplitude * p.gap).fold(0.0, f64::max));
    let amplitude_ok = points.iter().all(|p| p.amplitude <= c0 / p.gap * (1.0 + slack));
    let mu0_min = points.iter().map(|p| p.mu0).fold(f64::INFINITY, f64::min);
    let status = if ok && monotone && amplitude_ok { CtStatus::Pass } else { CtStatus::Fail };
    CtReport { status, points, monotone, c0, amplitude_ok, mu0_min, messages }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(n: usize) -> RescalingConstants {
        RescalingConstants {
            c: Some(1.0),
            nu2: 1.0,
            alpha: 0.5,
            gamma_star: 1.0,
            s: 0.25,
            d: 1,
            n,
            r: 6.5,
            wb: WbBound::Polynomial { c_w: 1.0, p_w: 60.0 },
        }
    }

    fn sv(mean: f64) -> ScaleValue {
        ScaleValue { mean, stderr: 0.0 }
    }

    #[test]
    fn zero_inputs_satisfy_rescaling() {
        let k = consts(2);
        let r = rescaling_check(sv(0.0), sv(0.0), sv(0.0), &k, 50.0).unwrap();
        assert_eq!(r.rhs.unwrap(), (-(50f64).sqrt()).exp());
        assert_eq!(r.satisfied, Some(true));
    }

    #[test]
    fn single_particle_keeps_first_summand() {
        let k = consts(1);
        let r = rescaling_check(sv(0.1), sv(0.2), sv(0.0), &k, 10.0).unwrap();
        assert_eq!(r.terms[1], 0.0);
        assert_eq!(r.terms[2], 0.0);
        assert!((r.terms[0] - 1e6).abs() < 1e-6);
    }

    #[test]
    fn synthetic_exponential_b_satisfies_rescaling() {
        let k = consts(2);
        let b = |l: f64| (-l).exp();
        for l in [20.0, 50.0, 100.0] {
            let (a, m, big) = k.scales(l);
            let r = rescaling_check(sv(b(a)), sv(b(m)), sv(b(big)), &k, l).unwrap();
            assert_eq!(r.satisfied, Some(true));
            assert!(r.c_min < 1.0);
        }
        let mut open = k.clone();
        open.c = None;
        assert!(rescaling_check(sv(0.1), sv(0.1), sv(0.1), &open, 10.0).unwrap().satisfied.is_none());
        open.s = 0.5;
        assert!(rescaling_check(sv(0.1), sv(0.1), sv(0.1), &open, 10.0).is_err());
    }

    #[test]
    fn schedule_values() {
        let s = exponent_schedule(1.0, 3, 1, 100.0).unwrap();
        assert_eq!(s.beta, vec![1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(s.alpha, vec![0.5, 2.0 / 3.0]);
        assert_eq!(s.max_n, 2);
        assert!(!s.admissible);
        let s = exponent_schedule(1.0, 2, 1, 100.0).unwrap();
        assert!(s.admissible);
        // integer bound: (88 + 8) / 48 = 2 excludes n = 2
        assert_eq!(exponent_schedule(1.0, 1, 1, 88.0).unwrap().max_n, 1);
    }

    fn exp_inputs(l1: f64) -> CorollaryInputs {
        CorollaryInputs {
            c_prime: 1.0,
            q_prime: 9.0,
            l1,
            c: 1.0,
            constants: RescalingConstants {
                c: Some(1.0),
                nu2: 1.0,
                alpha: 1.0,
                gamma_star: 1.0,
                s: 0.25,
                d: 1,
                n: 1,
                r: 6.5,
                wb: WbBound::Exponential { c_w: 1.0, mu_w: 1.0, gamma_w: 1.0 },
            },
            variant: Variant::Exp,
            steps: 6,
            samples: 33,
        }
    }

    #[test]
    fn exp_variant_beta_and_nu() {
        for g in [0.25, 0.5, 1.0] {
            let mut inp = exp_inputs(1000.0);
            inp.constants.gamma_star = g;
            inp.constants.wb = WbBound::Exponential { c_w: 1.0, mu_w: 1.0, gamma_w: g };
            let rep = iterate_corollary(&inp, None).unwrap();
            assert_eq!(rep.beta, g);
            let want = [
                std::f64::consts::LN_2 / (4000.0f64 + 58.5).powf(g),
                1.0 / (5f64.powf(g) * 2.0),
                0.25 / (2.0 * 20f64.powf(g)),
            ];
            assert_eq!(rep.nu_candidates, want);
        }
    }

    #[test]
    fn third_term_failure_is_reported() {
        let mut inp = exp_inputs(1000.0);
        inp.constants.n = 2;
        inp.q_prime = 17.0;
        let (beta, cands) = corollary_rates(&inp);
        let nu = cands.iter().copied().fold(f64::INFINITY, f64::min);
        // scale c_w so the largest sampled third term is 0.4
        let worst = (0..inp.samples)
            .map(|i| corollary_terms(&inp, nu, beta, 1000.0 * 2f64.powf(i as f64 / 32.0))[2])
            .fold(0.0, f64::max);
        let c_w = (0.4 / worst).powf(1.0 / inp.constants.s);
        inp.constants.wb = WbBound::Exponential { c_w, mu_w: 1.0, gamma_w: 1.0 };
        let rep = iterate_corollary(&inp, None).unwrap();
        assert!((rep.steps[0].terms[2] - 0.4).abs() < 1e-9);
        assert_eq!(rep.first_failure, Some(0));
        assert!(!rep.verdict);
    }

    #[test]
    fn hypothesis_violations_are_reported() {
        let mut inp = exp_inputs(1000.0);
        inp.q_prime = 4.0;
        let rep = iterate_corollary(&inp, None).unwrap();
        assert!(!rep.violations.is_empty());
        assert!(!rep.verdict);
    }

    #[test]
    fn initial_scale_examples() {
        let l1 = 10.0;
        let zero: Vec<(f64, ScaleValue)> = [10.0, 20.0, 40.0].iter().map(|&l| (l, sv(0.0))).collect();
        assert!(initial_scale_check(&zero, 1.0, 9.0, l1, 6.5, None).unwrap().pass);
        let half: Vec<(f64, ScaleValue)> = [10.0f64, 20.0, 40.0].iter().map(|&l| (l, sv(0.5 * l.powf(-9.0)))).collect();
        let r = initial_scale_check(&half, 1.0, 9.0, l1, 6.5, Some((0.0, 0.25, 1.0))).unwrap();
        assert!(r.pass && r.pass_strict);
        assert!((r.margin - 2.0).abs() < 1e-12);
        assert_eq!(r.perturbative, Some(true));
        assert!(initial_scale_check(&half[..2], 1.0, 9.0, l1, 6.5, None).is_err());
    }

    #[test]
    fn subadditivity_shapes() {
        let g = |p, side, mean| GroundEstimate { particles: p, side, estimate: ScaleValue { mean, stderr: 0.01 } };
        let r = subadditivity_check(&g(2, 10.0, 1.0), &[g(1, 10.0, 0.5), g(1, 10.0, 0.5)], 0.0).unwrap();
        assert!(r.satisfied && r.gap == 0.0);
        assert!(subadditivity_check(&g(2, 10.0, 1.0), &[g(1, 20.0, 0.5), g(1, 10.0, 0.5)], 0.0).is_err());
        assert!(subadditivity_check(&g(3, 10.0, 1.0), &[g(1, 10.0, 0.5), g(1, 10.0, 0.5)], 0.0).is_err());
    }

    fn fit(mu: f64, c: f64) -> DecayFit {
        DecayFit { c, mu, gamma: 1.0, residual: 0.0, mu_stderr: 0.0, c_stderr: 0.0, method: FitMethod::GammaGrid, candidates: vec![] }
    }

    #[test]
    fn combes_thomas_shape() {
        let ok = ct_check(&[(0.5, -0.5, fit(0.6, 2.0)), (1.0, -1.0, fit(0.9, 1.0)), (2.0, -2.0, fit(1.3, 0.5))], None, 0.1);
        assert_eq!(ok.status, CtStatus::Pass);
        assert!((ok.points[0].mu0 - 0.6 * 2.0 / 0.5).abs() < 1e-12);
        let bad = ct_check(&[(0.5, -0.5, fit(0.9, 1.0)), (1.0, -1.0, fit(0.6, 1.0))], None, 0.1);
        assert_eq!(bad.status, CtStatus::Fail);
        let skip = ct_check(&[(0.0, 2.0, fit(0.9, 1.0))], None, 0.1);
        assert_eq!(skip.status, CtStatus::Skipped);
    }
}
