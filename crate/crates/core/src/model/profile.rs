use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileShape {
    /// `a` on the closed max-norm ball of radius `r_U`.
    Box,
    /// `a (1 - |x|/r_U)` inside the ball.
    Tent,
    /// `a exp(1 - 1/(1 - (|x|/r_U)^2))` inside the ball; smooth, `U(0) = a`.
    SmoothBump,
}

/// Single-site bump `U`: non-negative, bounded, supported in `Λ_{r_U}(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleSiteProfile {
    pub shape: ProfileShape,
    pub amplitude: f64,
    pub r_u: f64,
}

impl SingleSiteProfile {
    pub fn new(shape: ProfileShape, amplitude: f64, r_u: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!("single-site amplitude {amplitude} must be >= 0")));
        }
        if !(r_u > 0.0) || !r_u.is_finite() {
            return Err(Error::InvalidConfig(format!("support radius r_U = {r_u} must be > 0")));
        }
        Ok(Self { shape, amplitude, r_u })
    }

    /// On-site profile of the discrete Anderson model.
    pub fn lattice_delta() -> Self {
        Self { shape: ProfileShape::Box, amplitude: 1.0, r_u: 0.5 }
    }

    /// `U(offset)` with `offset = x - ζ`.
    pub fn value(&self, offset: &[f64]) -> f64 {
        let rho = offset.iter().fold(0.0_f64, |m, c| m.max(c.abs())) / self.r_u;
        match self.shape {
            ProfileShape::Box if rho <= 1.0 + 1e-12 => self.amplitude,
            ProfileShape::Tent if rho < 1.0 => self.amplitude * (1.0 - rho),
            ProfileShape::SmoothBump if rho < 1.0 => self.amplitude * (1.0 - 1.0 / (1.0 - rho * rho)).exp(),
            _ => 0.0,
        }
    }
}

/// Marginal law of the couplings `η_ζ`; supported on `[0, η_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "density", rename_all = "kebab-case")]
pub enum DisorderDistribution {
    Uniform { eta_max: f64 },
    /// Density proportional to `exp(-rate·η)` on `[0, η_max]`.
    TruncatedExponential { eta_max: f64, rate: f64 },
}

impl DisorderDistribution {
    pub fn uniform(eta_max: f64) -> Self {
        Self::Uniform { eta_max }
    }

    pub fn eta_max(&self) -> f64 {
        match *self {
            Self::Uniform { eta_max } | Self::TruncatedExponential { eta_max, .. } => eta_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let eta_max = self.eta_max();
        if !(eta_max >= 0.0) || !eta_max.is_finite() {
            return Err(Error::InvalidConfig(format!("eta_max = {eta_max} must be finite and >= 0")));
        }
        if let Self::TruncatedExponential { rate, .. } = *self {
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::InvalidConfig(format!("exponential rate {rate} must be >= 0")));
            }
        }
        Ok(())
    }

    /// Inverse CDF at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Self::Uniform { eta_max } => u * eta_max,
            Self::TruncatedExponential { eta_max, rate } => {
                if rate * eta_max < 1e-12 {
                    return u * eta_max;
                }
                let tail = (-rate * eta_max).exp();
                (-(1.0 - u * (1.0 - tail)).ln() / rate).min(eta_max)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Uniform { eta_max } => eta_max / 2.0,
            Self::TruncatedExponential { eta_max, rate } => {
                if rate * eta_max < 1e-12 {
                    return eta_max / 2.0;
                }
                let tail = (-rate * eta_max).exp();
                1.0 / rate - eta_max * tail / (1.0 - tail)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionSign {
    /// `w = +w_b`.
    #[default]
    Repulsive,
    /// `w = -w_b` (attractive).
    Signed,
}

/// Pair interaction `w(r) = ± w_b(r)`, `r = |x_j - x_k|` in max-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InteractionKind {
    None,
    /// `c_w exp(-μ_w r^γ_w)`.
    Exponential { c_w: f64, mu_w: f64, gamma_w: f64 },
    /// `c_w max(r, h)^{-p_w}`; capped at the grid spacing.
    Polynomial { c_w: f64, p_w: f64 },
    /// `c_w max(r, core)^{-p_w}`.
    HardCoreRegularized { c_w: f64, p_w: f64, core: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    #[serde(flatten)]
    pub kind: InteractionKind,
    #[serde(default)]
    pub sign: InteractionSign,
}

impl InteractionSpec {
    pub fn none() -> Self {
        Self { kind: InteractionKind::None, sign: InteractionSign::Repulsive }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        match self.kind {
            InteractionKind::None => Ok(()),
            InteractionKind::Exponential { c_w, mu_w, gamma_w } => {
                if !(c_w >= 0.0 && mu_w > 0.0) {
                    return bad(format!("exponential interaction needs c_w >= 0, mu_w > 0 (got {c_w}, {mu_w})"));
                }
                if !(gamma_w > 0.0 && gamma_w <= 1.0) {
                    return bad(format!("gamma_w = {gamma_w} must lie in (0, 1]"));
                }
                Ok(())
            }
            InteractionKind::Polynomial { c_w, p_w } => {
                if !(c_w >= 0.0 && p_w > 0.0) {
                    return bad(format!("polynomial interaction needs c_w >= 0, p_w > 0 (got {c_w}, {p_w})"));
                }
                Ok(())
            }
            InteractionKind::HardCoreRegularized { c_w, p_w, core } => {
                if !(c_w >= 0.0 && p_w > 0.0 && core > 0.0) {
                    return bad(format!(
                        "hard-core interaction needs c_w >= 0, p_w > 0, core > 0 (got {c_w}, {p_w}, {core})"
                    ));
                }
                Ok(())
            }
        }
    }

    /// Decreasing envelope `w_b(r)`; `h` is the grid spacing used to cap the
    /// polynomial kind at the origin.
    pub fn bound(&self, r: f64, h: f64) -> f64 {
        match self.kind {
            InteractionKind::None => 0.0,
            InteractionKind::Exponential { c_w, mu_w, gamma_w } => c_w * (-mu_w * r.max(0.0).powf(gamma_w)).exp(),
            InteractionKind::Polynomial { c_w, p_w } => c_w * r.max(h).powf(-p_w),
            InteractionKind::HardCoreRegularized { c_w, p_w, core } => c_w * r.max(core).powf(-p_w),
        }
    }

    pub fn value(&self, r: f64, h: f64) -> f64 {
        match self.sign {
            InteractionSign::Repulsive => self.bound(r, h),
            InteractionSign::Signed => -self.bound(r, h),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, InteractionKind::None)
    }
}

/// `Z^d`-periodic bounded background `V_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Background {
    #[default]
    Zero,
    /// `amplitude · Σ_i cos(2π x_i)`.
    Cosine { amplitude: f64 },
}

impl Background {
    pub fn value(&self, p: &[f64]) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Cosine { amplitude } => {
                amplitude * p.iter().map(|x| (2.0 * std::f64::consts::PI * x).cos()).sum::<f64>()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_are_supported_in_ball() {
        for shape in [ProfileShape::Box, ProfileShape::Tent, ProfileShape::SmoothBump] {
            let u = SingleSiteProfile::new(shape, 2.0, 0.75).unwrap();
            assert!(u.value(&[0.0]) > 0.0);
            assert_eq!(u.value(&[0.76]), 0.0);
            assert_eq!(u.value(&[0.1, -0.8]), 0.0);
            for k in 0..100 {
                let v = u.value(&[k as f64 * 0.01 - 0.5]);
                assert!((0.0..=2.0).contains(&v));
            }
        }
        assert!(SingleSiteProfile::new(ProfileShape::Box, -1.0, 0.5).is_err());
        assert!(SingleSiteProfile::new(ProfileShape::Box, 1.0, 0.0).is_err());
    }

    #[test]
    fn truncated_exponential_quantile_stays_in_support() {
        let rho = DisorderDistribution::TruncatedExponential { eta_max: 3.0, rate: 2.0 };
        assert_eq!(rho.quantile(0.0), 0.0);
        for k in 0..1000 {
            let v = rho.quantile(k as f64 / 1000.0);
            assert!((0.0..=3.0).contains(&v));
        }
        let tail = (-6.0_f64).exp();
        let median = rho.quantile(0.5);
        let cdf = (1.0 - (-2.0 * median).exp()) / (1.0 - tail);
        assert!((cdf - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interaction_envelope_is_monotone() {
        let kinds = [
            InteractionKind::Exponential { c_w: 1.0, mu_w: 0.5, gamma_w: 0.5 },
            InteractionKind::Polynomial { c_w: 2.0, p_w: 3.0 },
            InteractionKind::HardCoreRegularized { c_w: 1.0, p_w: 2.0, core: 0.7 },
        ];
        for kind in kinds {
            let w = InteractionSpec { kind, sign: InteractionSign::Signed };
            w.validate().unwrap();
            let mut prev = f64::INFINITY;
            for k in 0..200 {
                let r = k as f64 * 0.05;
                let b = w.bound(r, 0.25);
                assert!(b.is_finite() && b <= prev);
                assert!(w.value(r, 0.25).abs() <= b);
                prev = b;
            }
        }
        let bad = InteractionSpec {
            kind: InteractionKind::Exponential { c_w: 1.0, mu_w: 1.0, gamma_w: 1.5 },
            sign: InteractionSign::Repulsive,
        };
        assert!(bad.validate().is_err());
    }
}
