//! One plan/run pair per experiment kind. Planning parses the `[query]`
//! table and performs every static check; running touches the numerics.

use anderloc::estimators::{
    bs_estimate, dynamical_proxy, ef_correlator_many, estimate_spectrum_bottom, frac_moment_many, ground_energies,
    lifshitz_box, lifshitz_tail, realization_operator, wegner_curve, BsQuery, Ensemble, FmPoint,
};
use anderloc::model::{Finding, InteractionKind, Severity};
use anderloc::oracles::{free_chain_lyapunov, hausdorff_brute, transfer_matrix_lyapunov};
use anderloc::spectral::{eigenpairs_in_window, full_eigen, ground_energy, resolvent_block_norm, BlockOptions, EnergyWindow};
use anderloc::model::DisorderDistribution;
use anderloc::verifier::{
    ct_check, exponent_schedule, fit_decay, initial_scale_check, iterate_corollary, linear_fit, rescaling_check,
    subadditivity_check, CorollaryInputs, CtStatus, DecayFit, DecaySample, GroundEstimate, RescalingConstants,
    ScaleValue, Variant, WbBound, GAMMA_GRID,
};
use anderloc::{hausdorff_dist, Configuration, ModelConfig, Region};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::output::{num, opt_num, Table};
use crate::spec::{ExperimentSpec, Kind};
use crate::{CliError, CliResult};

fn default_im_z() -> Vec<f64> {
    vec![0.1, 0.01, 0.001]
}
fn default_budget() -> usize {
    256
}
fn default_cap() -> usize {
    BlockOptions::default().cell_cap
}
fn default_calibration() -> usize {
    200
}
fn default_points() -> usize {
    64
}
fn yes() -> bool {
    true
}
fn default_slack() -> f64 {
    0.5
}
fn default_gamma() -> f64 {
    1.0
}
fn default_length() -> usize {
    100_000
}
fn default_replicas() -> usize {
    8
}

/// Calibration ensembles draw realizations from this index on, disjoint
/// from the measurement ensemble.
pub const CALIBRATION_FIRST: u64 = 1 << 32;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub x: Configuration,
    pub y: Configuration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumQuery {
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracmomQuery {
    pub s: f64,
    pub pairs: Vec<PairSpec>,
    pub re_z: Vec<f64>,
    #[serde(default = "default_im_z")]
    pub im_z: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
    /// Fit `C exp(-μ L^γ)` over the pairs at each `z`.
    #[serde(default)]
    pub fit: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsScanQuery {
    pub s: f64,
    /// Separations `L`; for each, pairs are the anchors and their translates by `L`.
    pub ls: Vec<f64>,
    pub anchors: Vec<Configuration>,
    #[serde(default)]
    pub axis: usize,
    pub window: [f64; 2],
    pub re_z: Vec<f64>,
    #[serde(default = "default_im_z")]
    pub im_z: Vec<f64>,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
    #[serde(default = "yes")]
    pub fit: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatorQuery {
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    /// Window `[E_0 + a, E_0 + b]` with `E_0` from a calibration ensemble.
    #[serde(default)]
    pub above_e0: Option<[f64; 2]>,
    #[serde(default = "default_calibration")]
    pub calibration: usize,
    pub pairs: Vec<PairSpec>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
    #[serde(default = "yes")]
    pub fit: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerQuery {
    pub x: Configuration,
    pub center: f64,
    pub widths: Vec<f64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_r2")]
    pub min_r2: f64,
}

fn default_r2() -> f64 {
    0.9
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifshitzQuery {
    pub sides: Vec<f64>,
    #[serde(default)]
    pub e_ref: Option<f64>,
    #[serde(default = "default_calibration")]
    pub calibration: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicalQuery {
    pub window: [f64; 2],
    pub pairs: Vec<PairSpec>,
    pub t_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleQuery {
    pub s: f64,
    pub ls: Vec<f64>,
    pub anchors: Vec<Configuration>,
    #[serde(default)]
    pub axis: usize,
    pub window: [f64; 2],
    pub re_z: Vec<f64>,
    #[serde(default = "default_im_z")]
    pub im_z: Vec<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    pub nu2: f64,
    pub alpha: f64,
    pub gamma_star: f64,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticB {
    /// `B(L) = amplitude·exp(-rate·L)`.
    pub rate: f64,
    #[serde(default = "one_f")]
    pub amplitude: f64,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateQuery {
    pub c_prime: f64,
    pub q_prime: f64,
    pub l1: f64,
    pub c: f64,
    pub nu2: f64,
    pub alpha: f64,
    pub gamma_star: f64,
    pub s: f64,
    pub variant: Variant,
    pub steps: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    /// Safety distance `R`; defaults to `r_U + 6` of the model.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub wb: Option<WbBound>,
    #[serde(default)]
    pub synthetic_b: Option<SyntheticB>,
}

fn default_samples() -> usize {
    33
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleQuery {
    pub beta1: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub p_w: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialQuery {
    pub c_prime: f64,
    pub q_prime: f64,
    pub l1: f64,
    pub ls: Vec<f64>,
    pub anchors: Vec<Configuration>,
    #[serde(default)]
    pub axis: usize,
    pub s: f64,
    pub window: [f64; 2],
    pub re_z: Vec<f64>,
    #[serde(default = "default_im_z")]
    pub im_z: Vec<f64>,
    /// Theorem constant `C` for the perturbative condition on `α_W`.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubaddQuery {
    pub sides: Vec<f64>,
    /// Particle counts of the parts; defaults to `n` single particles.
    #[serde(default)]
    pub parts: Option<Vec<usize>>,
    #[serde(default)]
    pub allowance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CtQuery {
    pub gaps: Vec<f64>,
    pub anchor: Configuration,
    pub distances: Vec<f64>,
    #[serde(default)]
    pub axis: usize,
    #[serde(default)]
    pub realization: u64,
    #[serde(default)]
    pub c0: Option<f64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_cap")]
    pub cell_cap: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Lyapunov,
    FreeChain,
    Hausdorff,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleQuery {
    pub oracle: OracleKind,
    #[serde(default)]
    pub energies: Vec<f64>,
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Uniform disorder strength when no model is given.
    #[serde(default)]
    pub eta_max: Option<f64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub x: Option<Configuration>,
    #[serde(default)]
    pub y: Option<Configuration>,
}

/// A fully checked experiment, ready to run.
#[derive(Clone, Debug)]
pub enum Plan {
    Spectrum(SpectrumQuery),
    Fracmom(FracmomQuery),
    BsScan(BsScanQuery),
    Correlator(CorrelatorQuery),
    Wegner(WegnerQuery),
    Lifshitz(LifshitzQuery),
    Dynamical(DynamicalQuery),
    RescaleCheck(RescaleQuery, RescalingConstants),
    Iterate(CorollaryInputs, Option<SyntheticB>),
    Schedule { beta1: f64, n: usize, d: usize, p_w: f64 },
    InitialCheck(InitialQuery),
    Subadd(SubaddQuery, Vec<usize>),
    CtCheck(CtQuery),
    Oracle(OracleQuery),
}

pub struct Outcome {
    pub table: Table,
    pub result: Value,
    /// `Some(false)` on a hypothesis-violation verdict.
    pub verdict: Option<bool>,
    pub summary: String,
}

fn bad<T>(m: impl Into<String>) -> CliResult<T> {
    Err(CliError::parse(m))
}

fn check_window(w: [f64; 2]) -> CliResult<EnergyWindow> {
    Ok(EnergyWindow::new(w[0], w[1])?)
}

fn check_s(s: f64) -> CliResult<()> {
    if !(s > 0.0 && s < 1.0) {
        return bad(format!("s = {s} must lie in (0, 1)"));
    }
    Ok(())
}

fn check_im(im: &[f64]) -> CliResult<()> {
    if im.is_empty() {
        return bad("im_z grid is empty");
    }
    if let Some(v) = im.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return bad(format!("Im z = {v} must lie in (0, 1)"));
    }
    Ok(())
}

fn nonempty<T>(v: &[T], what: &str) -> CliResult<()> {
    if v.is_empty() {
        return bad(format!("{what} grid is empty"));
    }
    Ok(())
}

fn check_anchors(model: &ModelConfig, anchors: &[Configuration], axis: usize) -> CliResult<()> {
    nonempty(anchors, "anchors")?;
    if axis >= model.d() {
        return bad(format!("axis {axis} out of range for d = {}", model.d()));
    }
    if let Some(a) = anchors.iter().find(|a| a.d() != model.d() || a.n() != model.n()) {
        return bad(format!("anchor {a} does not have n = {} points in d = {}", model.n(), model.d()));
    }
    Ok(())
}

fn check_pairs(model: &ModelConfig, pairs: &[PairSpec]) -> CliResult<()> {
    nonempty(pairs, "pairs")?;
    for p in pairs {
        for c in [&p.x, &p.y] {
            if c.d() != model.d() || c.n() != model.n() {
                return bad(format!("configuration {c} does not have n = {} points in d = {}", model.n(), model.d()));
            }
        }
    }
    Ok(())
}

fn corollary_inputs(q: &IterateQuery, model: Option<&ModelConfig>) -> CliResult<CorollaryInputs> {
    let need = |what: &str| CliError::parse(format!("iterate: `{what}` missing and no model to default from"));
    let d = q.d.or(model.map(ModelConfig::d)).ok_or_else(|| need("d"))?;
    let n = q.n.or(model.map(ModelConfig::n)).ok_or_else(|| need("n"))?;
    let r = q.r.or(model.map(ModelConfig::safety_r)).ok_or_else(|| need("r"))?;
    let wb = q.wb.or(model.map(|m| WbBound::from_interaction(&m.interaction.kind))).ok_or_else(|| need("wb"))?;
    let inp = CorollaryInputs {
        c_prime: q.c_prime,
        q_prime: q.q_prime,
        l1: q.l1,
        c: q.c,
        constants: RescalingConstants { c: Some(q.c), nu2: q.nu2, alpha: q.alpha, gamma_star: q.gamma_star, s: q.s, d, n, r, wb },
        variant: q.variant,
        steps: q.steps,
        samples: q.samples,
    };
    inp.constants.validate()?;
    Ok(inp)
}

/// Parses and statically checks the experiment; no numerics run.
pub fn plan(spec: &ExperimentSpec) -> CliResult<Plan> {
    if spec.experiment.realizations == 0 {
        return bad("experiment.realizations must be >= 1");
    }
    let kind = spec.kind();
    let model = if kind.needs_model() { Some(spec.model()?) } else { spec.model.as_ref() };
    if let Some(m) = model {
        m.validate()?;
    }
    Ok(match kind {
        Kind::Spectrum => {
            let q: SpectrumQuery = spec.query()?;
            if let Some(w) = q.window {
                check_window(w)?;
            }
            Plan::Spectrum(q)
        }
        Kind::Fracmom => {
            let q: FracmomQuery = spec.query()?;
            check_s(q.s)?;
            check_pairs(model.unwrap(), &q.pairs)?;
            nonempty(&q.re_z, "re_z")?;
            check_im(&q.im_z)?;
            Plan::Fracmom(q)
        }
        Kind::BsScan => {
            let q: BsScanQuery = spec.query()?;
            check_s(q.s)?;
            check_anchors(model.unwrap(), &q.anchors, q.axis)?;
            nonempty(&q.ls, "ls")?;
            nonempty(&q.re_z, "re_z")?;
            check_im(&q.im_z)?;
            let w = check_window(q.window)?;
            if let Some(e) = q.re_z.iter().find(|e| !w.contains(**e)) {
                return bad(format!("Re z = {e} lies outside the window"));
            }
            Plan::BsScan(q)
        }
        Kind::Correlator => {
            let q: CorrelatorQuery = spec.query()?;
            match (q.window, q.above_e0) {
                (Some(w), None) | (None, Some(w)) => {
                    check_window(w)?;
                }
                _ => return bad("correlator needs exactly one of `window` and `above_e0`"),
            }
            if q.above_e0.is_some() && q.calibration == 0 {
                return bad("calibration ensemble must be nonempty");
            }
            check_pairs(model.unwrap(), &q.pairs)?;
            Plan::Correlator(q)
        }
        Kind::Wegner => {
            let q: WegnerQuery = spec.query()?;
            if q.widths.len() < 3 {
                return bad("wegner needs at least three widths");
            }
            if let Some(w) = q.widths.iter().find(|w| !(**w > 0.0)) {
                return bad(format!("width {w} must be positive"));
            }
            Plan::Wegner(q)
        }
        Kind::Lifshitz => {
            let q: LifshitzQuery = spec.query()?;
            nonempty(&q.sides, "sides")?;
            for &l in &q.sides {
                lifshitz_box(model.unwrap(), l)?;
            }
            Plan::Lifshitz(q)
        }
        Kind::Dynamical => {
            let q: DynamicalQuery = spec.query()?;
            check_window(q.window)?;
            check_pairs(model.unwrap(), &q.pairs)?;
            if q.points < 2 || !(q.t_max > 0.0) {
                return bad("dynamical needs t_max > 0 and at least two time points");
            }
            Plan::Dynamical(q)
        }
        Kind::RescaleCheck => {
            let q: RescaleQuery = spec.query()?;
            let m = model.unwrap();
            let k = RescalingConstants {
                c: q.c,
                nu2: q.nu2,
                alpha: q.alpha,
                gamma_star: q.gamma_star,
                s: q.s,
                d: m.d(),
                n: m.n(),
                r: m.safety_r(),
                wb: WbBound::from_interaction(&m.interaction.kind),
            };
            k.validate()?;
            check_anchors(m, &q.anchors, q.axis)?;
            nonempty(&q.ls, "ls")?;
            nonempty(&q.re_z, "re_z")?;
            check_im(&q.im_z)?;
            check_window(q.window)?;
            Plan::RescaleCheck(q, k)
        }
        Kind::Iterate => {
            let q: IterateQuery = spec.query()?;
            let inp = corollary_inputs(&q, model)?;
            Plan::Iterate(inp, q.synthetic_b)
        }
        Kind::Schedule => {
            let q: ScheduleQuery = spec.query()?;
            let need = |w: &str| CliError::parse(format!("schedule: `{w}` missing and no model to default from"));
            let n = q.n.or(model.map(ModelConfig::n)).ok_or_else(|| need("n"))?;
            let d = q.d.or(model.map(ModelConfig::d)).ok_or_else(|| need("d"))?;
            let p_w = match q.p_w {
                Some(p) => p,
                None => match model.map(|m| &m.interaction.kind) {
                    Some(InteractionKind::Polynomial { p_w, .. }) | Some(InteractionKind::HardCoreRegularized { p_w, .. }) => *p_w,
                    _ => return Err(need("p_w")),
                },
            };
            exponent_schedule(q.beta1, n, d, p_w)?;
            Plan::Schedule { beta1: q.beta1, n, d, p_w }
        }
        Kind::InitialCheck => {
            let q: InitialQuery = spec.query()?;
            check_s(q.s)?;
            check_anchors(model.unwrap(), &q.anchors, q.axis)?;
            if q.ls.len() < 3 {
                return bad("initial-check needs at least three scales");
            }
            nonempty(&q.re_z, "re_z")?;
            check_im(&q.im_z)?;
            check_window(q.window)?;
            if !(q.c_prime > 0.0 && q.l1 > 0.0) {
                return bad("C' and L1 must be positive");
            }
            Plan::InitialCheck(q)
        }
        Kind::Subadd => {
            let q: SubaddQuery = spec.query()?;
            let m = model.unwrap();
            nonempty(&q.sides, "sides")?;
            let parts = q.parts.clone().unwrap_or_else(|| vec![1; m.n()]);
            if parts.len() < 2 || parts.contains(&0) || parts.iter().sum::<usize>() != m.n() {
                return bad(format!("parts {parts:?} must be >= 2 positive counts summing to n = {}", m.n()));
            }
            for &l in &q.sides {
                lifshitz_box(m, l)?;
            }
            Plan::Subadd(q, parts)
        }
        Kind::CtCheck => {
            let q: CtQuery = spec.query()?;
            let m = model.unwrap();
            check_anchors(m, std::slice::from_ref(&q.anchor), q.axis)?;
            if q.distances.len() < 3 {
                return bad("ct-check needs at least three distances");
            }
            nonempty(&q.gaps, "gaps")?;
            if !(q.gamma > 0.0 && q.gamma <= 1.0) {
                return bad(format!("gamma = {} must lie in (0, 1]", q.gamma));
            }
            Plan::CtCheck(q)
        }
        Kind::Oracle => {
            let q: OracleQuery = spec.query()?;
            match q.oracle {
                OracleKind::Lyapunov => {
                    nonempty(&q.energies, "energies")?;
                    if model.is_none() && q.eta_max.is_none() {
                        return bad("lyapunov oracle needs a model or `eta_max`");
                    }
                    if q.length == 0 || q.replicas == 0 {
                        return bad("length and replicas must be >= 1");
                    }
                }
                OracleKind::FreeChain => {
                    if !matches!(q.m, Some(m) if m >= 1) {
                        return bad("free-chain oracle needs `m` >= 1");
                    }
                }
                OracleKind::Hausdorff => {
                    let (Some(x), Some(y)) = (&q.x, &q.y) else { return bad("hausdorff oracle needs `x` and `y`") };
                    hausdorff_dist(x, y)?;
                }
            }
            Plan::Oracle(q)
        }
    })
}

/// Static findings for `validate`: model findings plus the plan check, and
/// the particle-number warning for schedule experiments.
pub fn findings(spec: &ExperimentSpec) -> Vec<Finding> {
    let mut out = Vec::new();
    if let Some(m) = &spec.model {
        out.extend(m.findings());
    }
    let model_hard = out.iter().any(|f| f.severity == Severity::Hard);
    match plan(spec) {
        Ok(Plan::Schedule { beta1, n, d, p_w }) => {
            if let Ok(s) = exponent_schedule(beta1, n, d, p_w) {
                if !s.admissible {
                    out.push(Finding::warning(format!(
                        "n = {n} violates n < (p_w + 8d)/(48d) = {} for p_w = {p_w}, d = {d}",
                        s.bound
                    )));
                }
            }
        }
        Ok(_) => {}
        Err(e) if model_hard && e.message.starts_with("invalid configuration") => {}
        Err(e) => out.push(Finding::hard(e.message)),
    }
    out
}

fn ensemble(spec: &ExperimentSpec) -> Ensemble {
    Ensemble::new(spec.experiment.seed, spec.experiment.realizations)
}

fn est_cols(e: &anderloc::estimators::EnsembleEstimate) -> [String; 3] {
    [num(e.mean), num(e.stderr), e.count.to_string()]
}

fn fit_over(points: &[(f64, f64, f64)]) -> Option<DecayFit> {
    let samples: Vec<DecaySample> =
        points.iter().filter(|p| p.1 > 0.0).map(|&(d, v, s)| DecaySample::new(d, v, s)).collect();
    fit_decay(&samples, &GAMMA_GRID).ok()
}

/// Translate of every particle by `dist` along `axis`; `dist_H` to the
/// original is exactly `dist`.
pub fn translate(x: &Configuration, axis: usize, dist: f64) -> Configuration {
    let mut shift = vec![0.0; x.d()];
    shift[axis] = dist;
    x.shifted(&shift)
}

/// Smallest grid-attainable separation `≥ l`.
fn grid_distance(model: &ModelConfig, l: f64) -> f64 {
    let h = model.h();
    (l / h - 1e-9).ceil() * h
}

struct BsAt {
    l: f64,
    est: anderloc::estimators::BsEstimate,
}

#[allow(clippy::too_many_arguments)]
fn bs_at(
    model: &ModelConfig,
    omega: &Region,
    anchors: &[Configuration],
    axis: usize,
    l: f64,
    s: f64,
    window: [f64; 2],
    re_z: &[f64],
    im_z: &[f64],
    ens: &Ensemble,
    cap: usize,
) -> CliResult<BsAt> {
    let pairs = anchors.iter().map(|x| (x.clone(), translate(x, axis, l))).collect();
    let q = BsQuery {
        window: EnergyWindow::new(window[0], window[1])?,
        l,
        s,
        pairs,
        re_z: re_z.to_vec(),
        im_z: im_z.to_vec(),
        domains: vec![omega.clone()],
    };
    let opts = BlockOptions { cell_cap: cap, ..BlockOptions::default() };
    Ok(BsAt { l, est: bs_estimate(model, &q, ens, &opts)? })
}

const FM_COLUMNS: [&str; 10] = ["query_id", "L", "s", "re_z", "im_z", "mean", "stderr", "count", "witness_x", "witness_y"];

/// Runs a checked plan.
pub fn execute(spec: &ExperimentSpec, plan: &Plan) -> CliResult<Outcome> {
    let ens = ensemble(spec);
    let model = spec.model.as_ref();
    let omega = || -> CliResult<Region> { Ok(model.expect("planned with a model").region()?) };
    match plan {
        Plan::Spectrum(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let window = q.window.map(check_window).transpose()?;
            let rows = ens.map(|r| {
                let h = realization_operator(m, &omega, ens.seed, r)?;
                let eigs = match &window {
                    Some(w) => eigenpairs_in_window(&h, w, q.budget)?,
                    None => full_eigen(&h)?,
                };
                Ok((h.dim(), eigs.values, eigs.residuals))
            })?;
            let mut t = Table::new("spectrum/1", &["realization", "index", "eigenvalue", "residual"]);
            let mut counts = Vec::new();
            for (r, (_, vals, res)) in rows.iter().enumerate() {
                counts.push(vals.len());
                for (i, (v, e)) in vals.iter().zip(res).enumerate() {
                    t.push(vec![r.to_string(), i.to_string(), num(*v), num(*e)]);
                }
            }
            let dim = rows.first().map_or(0, |r| r.0);
            let summary = format!("{} eigenvalues over {} realizations (dimension {dim})", t.rows.len(), rows.len());
            Ok(Outcome { table: t, result: json!({ "dimension": dim, "counts": counts, "window": q.window }), verdict: None, summary })
        }
        Plan::Fracmom(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let mut points = Vec::new();
            for p in &q.pairs {
                for &re in &q.re_z {
                    for &im in &q.im_z {
                        points.push(FmPoint { z: Complex64::new(re, im), x: p.x.clone(), y: p.y.clone() });
                    }
                }
            }
            let opts = BlockOptions { cell_cap: q.cell_cap, ..BlockOptions::default() };
            let est = frac_moment_many(m, &omega, &points, q.s, &ens, &opts)?;
            let mut t = Table::new("fm/1", &FM_COLUMNS);
            let mut dists = Vec::new();
            for (i, (p, e)) in points.iter().zip(&est).enumerate() {
                let l = hausdorff_dist(&p.x, &p.y)?;
                dists.push(l);
                let [a, b, c] = est_cols(e);
                t.push(vec![i.to_string(), num(l), num(q.s), num(p.z.re), num(p.z.im), a, b, c, p.x.to_string(), p.y.to_string()]);
            }
            let mut fits = Vec::new();
            if q.fit {
                for &re in &q.re_z {
                    for &im in &q.im_z {
                        let pts: Vec<(f64, f64, f64)> = points
                            .iter()
                            .zip(&est)
                            .zip(&dists)
                            .filter(|((p, _), _)| p.z == Complex64::new(re, im))
                            .map(|((_, e), &l)| (l, e.mean, e.stderr))
                            .collect();
                        fits.push(json!({ "re_z": re, "im_z": im, "fit": fit_over(&pts) }));
                    }
                }
            }
            let summary = format!("{} fractional-moment estimates", t.rows.len());
            Ok(Outcome { table: t, result: json!({ "fits": fits }), verdict: None, summary })
        }
        Plan::BsScan(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let mut t = Table::new("fm/1", &FM_COLUMNS);
            let mut pts = Vec::new();
            for (i, &l) in q.ls.iter().enumerate() {
                let b = bs_at(m, &omega, &q.anchors, q.axis, l, q.s, q.window, &q.re_z, &q.im_z, &ens, q.cell_cap)?;
                let e = &b.est.estimate;
                let w = &b.est.witness;
                pts.push((b.l, e.mean, e.stderr));
                let [a, bb, c] = est_cols(e);
                t.push(vec![i.to_string(), num(l), num(q.s), num(w.z.re), num(w.z.im), a, bb, c, w.x.to_string(), w.y.to_string()]);
            }
            let decreasing = pts.windows(2).all(|w| w[1].0 < w[0].0 || w[1].1 <= w[0].1);
            let fit = if q.fit { fit_over(&pts) } else { None };
            let summary = format!("B_s at {} separations; nonincreasing: {decreasing}", pts.len());
            Ok(Outcome { table: t, result: json!({ "nonincreasing": decreasing, "fit": fit }), verdict: None, summary })
        }
        Plan::Correlator(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let (window, e0) = match (q.window, q.above_e0) {
                (Some(w), _) => (check_window(w)?, None),
                (None, Some([a, b])) => {
                    let cal = Ensemble { first: CALIBRATION_FIRST, ..Ensemble::new(ens.seed, q.calibration) };
                    let bottom = estimate_spectrum_bottom(m, &omega, &cal)?;
                    let w = EnergyWindow::new(bottom.e0 + a, bottom.e0 + b)?.labeled(format!("E0 + [{a}, {b}], E0 = {}", bottom.e0));
                    (w, Some(bottom))
                }
                _ => unreachable!("checked by plan"),
            };
            let pairs: Vec<(Configuration, Configuration)> = q.pairs.iter().map(|p| (p.x.clone(), p.y.clone())).collect();
            let est = ef_correlator_many(m, &omega, &window, &pairs, &ens, q.budget, q.cell_cap)?;
            let mut t = Table::new("ec/1", &["query_id", "L", "window_lo", "window_hi", "mean", "stderr", "count", "witness_x", "witness_y"]);
            let mut pts = Vec::new();
            for (i, ((x, y), e)) in pairs.iter().zip(&est).enumerate() {
                let l = hausdorff_dist(x, y)?;
                pts.push((l, e.mean, e.stderr));
                let [a, b, c] = est_cols(e);
                t.push(vec![i.to_string(), num(l), num(window.lo), num(window.hi), a, b, c, x.to_string(), y.to_string()]);
            }
            let fit = if q.fit { fit_over(&pts) } else { None };
            let summary = format!("{} correlator estimates on [{}, {}]", t.rows.len(), window.lo, window.hi);
            Ok(Outcome { table: t, result: json!({ "window": window, "e0": e0, "fit": fit }), verdict: None, summary })
        }
        Plan::Wegner(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let ens = ens.keep_samples();
            let curve = wegner_curve(m, &omega, &q.x, q.center, &q.widths, &ens, q.budget)?;
            let mut t = Table::new("wegner/1", &["width", "mean", "stderr", "count"]);
            for (w, e) in &curve {
                let [a, b, c] = est_cols(e);
                t.push(vec![num(*w), a, b, c]);
            }
            let ys: Vec<f64> = curve.iter().map(|c| c.1.mean).collect();
            let sg: Vec<f64> = curve.iter().map(|c| c.1.stderr).collect();
            let rows: Vec<Vec<f64>> = curve.iter().map(|c| c.1.samples.clone().unwrap_or_default()).collect();
            let paired = if ens.realizations >= 2 { Some(rows.as_slice()) } else { None };
            let fit = linear_fit(&q.widths, &ys, &sg, paired)?;
            let ok = fit.r2 >= q.min_r2 && fit.intercept.abs() <= 2.0 * fit.intercept_stderr;
            let summary = format!(
                "slope {:.4}, intercept {:.5} ± {:.5}, R² {:.4}",
                fit.slope, fit.intercept, fit.intercept_stderr, fit.r2
            );
            Ok(Outcome { table: t, result: json!({ "fit": fit, "linear": ok }), verdict: Some(ok), summary })
        }
        Plan::Lifshitz(q) => {
            let m = model.unwrap();
            let (e_ref, bottom) = match q.e_ref {
                Some(e) => (e, None),
                None => {
                    let largest = q.sides.iter().copied().fold(f64::MIN, f64::max);
                    let cal = Ensemble { first: CALIBRATION_FIRST, ..Ensemble::new(ens.seed, q.calibration) };
                    let b = estimate_spectrum_bottom(m, &lifshitz_box(m, largest)?, &cal)?;
                    (b.e0, Some(b))
                }
            };
            let tail = lifshitz_tail(m, &q.sides, e_ref, &ens)?;
            let mut t = Table::new("lifshitz/1", &["L", "hits", "count", "probability", "ci_lo", "ci_hi"]);
            for p in &tail.points {
                t.push(vec![num(p.l), p.hits.to_string(), p.count.to_string(), num(p.probability), num(p.ci.0), num(p.ci.1)]);
            }
            let summary = format!("tail probabilities at {} sides, E_ref = {e_ref}", tail.points.len());
            Ok(Outcome { table: t, result: json!({ "e_ref": e_ref, "calibration": bottom, "slope": tail.slope }), verdict: None, summary })
        }
        Plan::Dynamical(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let window = check_window(q.window)?;
            let times: Vec<f64> = (0..q.points).map(|k| q.t_max * k as f64 / (q.points - 1) as f64).collect();
            let mut t = Table::new(
                "dynamical/1",
                &["query_id", "L", "sup_mean", "sup_stderr", "bound_mean", "bound_stderr", "count", "violations"],
            );
            let mut total = 0;
            for (i, p) in q.pairs.iter().enumerate() {
                let e = dynamical_proxy(m, &omega, &window, &p.x, &p.y, &times, &ens, q.budget)?;
                total += e.violations;
                t.push(vec![
                    i.to_string(),
                    num(hausdorff_dist(&p.x, &p.y)?),
                    num(e.sup_time.mean),
                    num(e.sup_time.stderr),
                    num(e.bound.mean),
                    num(e.bound.stderr),
                    e.sup_time.count.to_string(),
                    e.violations.to_string(),
                ]);
            }
            let summary = format!("{} pairs, {total} realizations above the eigenvalue-sum bound", q.pairs.len());
            Ok(Outcome { table: t, result: json!({ "times": times, "violations": total }), verdict: Some(total == 0), summary })
        }
        Plan::RescaleCheck(q, k) => {
            let m = model.unwrap();
            let omega = omega()?;
            let mut t = Table::new(
                "rescale/1",
                &[
                    "L", "scale_small", "scale_mid", "scale_large", "b_small", "b_small_stderr", "b_mid", "b_mid_stderr",
                    "b_large", "b_large_stderr", "term1", "term2", "term3", "c_min", "rhs", "satisfied",
                ],
            );
            let mut reports = Vec::new();
            for &l in &q.ls {
                let (a, b, c) = k.scales(l);
                let at = |scale: f64| {
                    let dist = grid_distance(m, scale);
                    bs_at(m, &omega, &q.anchors, q.axis, dist, q.s, q.window, &q.re_z, &q.im_z, &ens, q.cell_cap)
                };
                let (ba, bb, bc) = (at(a)?, at(b)?, at(c)?);
                let v = |x: &BsAt| ScaleValue::from(&x.est.estimate);
                let rep = rescaling_check(v(&ba), v(&bb), v(&bc), k, l)?;
                t.push(vec![
                    num(l),
                    num(ba.l),
                    num(bb.l),
                    num(bc.l),
                    num(v(&ba).mean),
                    num(v(&ba).stderr),
                    num(v(&bb).mean),
                    num(v(&bb).stderr),
                    num(v(&bc).mean),
                    num(v(&bc).stderr),
                    num(rep.terms[0]),
                    num(rep.terms[1]),
                    num(rep.terms[2]),
                    num(rep.c_min),
                    opt_num(rep.rhs),
                    rep.satisfied.map(|s| s.to_string()).unwrap_or_default(),
                ]);
                reports.push(rep);
            }
            let violated = reports.iter().any(|r| r.satisfied == Some(false));
            let verdict = if k.c.is_some() { Some(!violated) } else { None };
            let c_min = reports.iter().map(|r| r.c_min).fold(0.0, f64::max);
            let summary = format!("rescaling at {} scales; smallest admissible C {}", reports.len(), num(c_min));
            Ok(Outcome { table: t, result: json!({ "reports": reports }), verdict, summary })
        }
        Plan::Iterate(inp, synth) => {
            let b = synth.as_ref().map(|s| {
                let (a, r) = (s.amplitude, s.rate);
                move |l: f64| a * (-r * l).exp()
            });
            let report = match &b {
                Some(f) => iterate_corollary(inp, Some(f))?,
                None => iterate_corollary(inp, None)?,
            };
            let mut t = Table::new("iterate/1", &["k", "l_lo", "l_hi", "term1", "term2", "term3", "closes"]);
            for s in &report.steps {
                t.push(vec![
                    s.k.to_string(),
                    num(s.l_lo),
                    num(s.l_hi),
                    num(s.terms[0]),
                    num(s.terms[1]),
                    num(s.terms[2]),
                    s.closes.to_string(),
                ]);
            }
            let summary = format!(
                "beta = {}, nu' = {}, first failing step: {:?}",
                num(report.beta),
                num(report.nu_prime),
                report.first_failure
            );
            let verdict = Some(report.verdict);
            Ok(Outcome { table: t, result: serde_json::to_value(&report).unwrap_or(Value::Null), verdict, summary })
        }
        Plan::Schedule { beta1, n, d, p_w } => {
            let s = exponent_schedule(*beta1, *n, *d, *p_w)?;
            let mut t = Table::new("schedule/1", &["k", "beta", "alpha"]);
            for (i, b) in s.beta.iter().enumerate() {
                let alpha = if i == 0 { String::new() } else { num(s.alpha[i - 1]) };
                t.push(vec![(i + 1).to_string(), num(*b), alpha]);
            }
            let summary = format!("n = {n}, bound (p_w + 8d)/(48d) = {}, admissible: {}", s.bound, s.admissible);
            Ok(Outcome { table: t, result: serde_json::to_value(&s).unwrap_or(Value::Null), verdict: Some(s.admissible), summary })
        }
        Plan::InitialCheck(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let mut data = Vec::new();
            for &l in &q.ls {
                let dist = grid_distance(m, l);
                let b = bs_at(m, &omega, &q.anchors, q.axis, dist, q.s, q.window, &q.re_z, &q.im_z, &ens, q.cell_cap)?;
                data.push((b.l, ScaleValue::from(&b.est.estimate)));
            }
            let pert = q.c.map(|c| (m.alpha_w(), q.s, c));
            let rep = initial_scale_check(&data, q.c_prime, q.q_prime, q.l1, m.safety_r(), pert)?;
            let mut t = Table::new("initial/1", &["L", "b", "stderr", "bound"]);
            for &(l, b, s, bound) in &rep.points {
                t.push(vec![num(l), num(b), num(s), num(bound)]);
            }
            let ok = rep.pass && rep.perturbative != Some(false);
            let summary = format!("{} scales checked, margin {}", rep.points.len(), rep.margin);
            Ok(Outcome { table: t, result: serde_json::to_value(&rep).unwrap_or(Value::Null), verdict: Some(ok), summary })
        }
        Plan::Subadd(q, parts) => {
            let m = model.unwrap();
            let mut counts: Vec<usize> = vec![m.n()];
            for &p in parts {
                if !counts.contains(&p) {
                    counts.push(p);
                }
            }
            let mut t = Table::new("subadd/1", &["side", "particles", "mean", "stderr", "count"]);
            let mut reports = Vec::new();
            for &side in &q.sides {
                let omega = lifshitz_box(m, side)?;
                let est = ground_energies(m, &omega, &counts, &ens)?;
                for (c, e) in counts.iter().zip(&est) {
                    let [a, b, cc] = est_cols(e);
                    t.push(vec![num(side), c.to_string(), a, b, cc]);
                }
                let ge = |j: usize| {
                    let i = counts.iter().position(|&c| c == j).unwrap();
                    GroundEstimate { particles: j, side, estimate: ScaleValue::from(&est[i]) }
                };
                let part_est: Vec<GroundEstimate> = parts.iter().map(|&j| ge(j)).collect();
                reports.push(subadditivity_check(&ge(m.n()), &part_est, q.allowance)?);
            }
            let ok = reports.iter().all(|r| r.satisfied);
            let nonincreasing = reports.windows(2).all(|w| w[1].gap.abs() <= w[0].gap.abs());
            let summary = format!("subadditivity at {} sides: {}", reports.len(), if ok { "holds" } else { "violated" });
            Ok(Outcome {
                table: t,
                result: json!({ "reports": reports, "gap_magnitude_nonincreasing": nonincreasing }),
                verdict: Some(ok),
                summary,
            })
        }
        Plan::CtCheck(q) => {
            let m = model.unwrap();
            let omega = omega()?;
            let h = realization_operator(m, &omega, ens.seed, q.realization)?;
            let e0 = ground_energy(&h)?;
            let opts = BlockOptions { cell_cap: q.cell_cap, ..BlockOptions::default() };
            let mut t = Table::new("ct/1", &["gap", "z", "dist", "value"]);
            let mut data = Vec::new();
            for &g in &q.gaps {
                let z = e0 - g;
                let mut samples = Vec::new();
                for &dist in &q.distances {
                    let y = translate(&q.anchor, q.axis, dist);
                    let v = resolvent_block_norm(&h, Complex64::new(z, 0.0), &q.anchor, &y, &opts)?;
                    t.push(vec![num(g), num(z), num(dist), num(v)]);
                    samples.push(DecaySample::new(dist, v, 0.0));
                }
                data.push((g, z, fit_decay(&samples, &[q.gamma])?));
            }
            let rep = ct_check(&data, q.c0, q.slack);
            let summary = format!("Combes-Thomas check: {:?} (E0 = {e0})", rep.status);
            let verdict = Some(rep.status != CtStatus::Fail);
            Ok(Outcome { table: t, result: json!({ "e0": e0, "report": rep }), verdict, summary })
        }
        Plan::Oracle(q) => oracle_table(q, model, spec.experiment.seed),
    }
}

/// Oracle tables, shared by `run` and the `oracle` subcommand.
pub fn oracle_table(q: &OracleQuery, model: Option<&ModelConfig>, seed: u64) -> CliResult<Outcome> {
    match q.oracle {
        OracleKind::Lyapunov => {
            let dist = match (model, q.eta_max) {
                (_, Some(eta)) => DisorderDistribution::uniform(eta),
                (Some(m), None) => m.disorder.clone(),
                (None, None) => return bad("lyapunov oracle needs a model or `eta_max`"),
            };
            dist.validate()?;
            let mut t = Table::new("lyapunov/1", &["energy", "gamma", "stderr", "length", "replicas", "free_gamma"]);
            for &e in &q.energies {
                let r = transfer_matrix_lyapunov(&dist, e, q.length, q.replicas, seed)?;
                t.push(vec![
                    num(e),
                    num(r.gamma),
                    num(r.stderr),
                    r.length.to_string(),
                    r.replicas.to_string(),
                    num(free_chain_lyapunov(e)),
                ]);
            }
            let summary = format!("Lyapunov exponents at {} energies", q.energies.len());
            Ok(Outcome { table: t, result: json!({ "disorder": dist }), verdict: None, summary })
        }
        OracleKind::FreeChain => {
            let m = q.m.ok_or_else(|| CliError::parse("free-chain oracle needs `m`"))?;
            let mut t = Table::new("free-chain/1", &["k", "eigenvalue"]);
            for k in 1..=m {
                let v = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (m as f64 + 1.0)).cos();
                t.push(vec![k.to_string(), num(v)]);
            }
            Ok(Outcome { table: t, result: json!({ "m": m }), verdict: None, summary: format!("free chain, m = {m}") })
        }
        OracleKind::Hausdorff => {
            let (Some(x), Some(y)) = (&q.x, &q.y) else { return bad("hausdorff oracle needs `x` and `y`") };
            let fast = hausdorff_dist(x, y)?;
            let brute = hausdorff_brute(x, y);
            let mut t = Table::new("hausdorff/1", &["x", "y", "dist_h", "brute"]);
            t.push(vec![x.to_string(), y.to_string(), num(fast), num(brute)]);
            Ok(Outcome { table: t, result: json!({ "agree": fast == brute }), verdict: None, summary: format!("dist_H = {fast}") })
        }
    }
}
