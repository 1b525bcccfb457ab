//! Finite-volume discretized `n`-particle Hamiltonians with alloy-type
//! disorder and pair interactions.

mod assemble;
mod disorder;
mod profile;

pub use assemble::{assemble_hamiltonian, assemble_partial, ProductDomain};
pub use disorder::{sample_disorder, DisorderSample};
pub use profile::{
    Background, DisorderDistribution, InteractionKind, InteractionSign, InteractionSpec, ProfileShape,
    SingleSiteProfile,
};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{BoxRegion, Region};

/// Discretization of the one-particle space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Finite differences on the lattice `hZ^d`, `1/h` integer.
    Continuum,
    /// Graph Laplacian of `Z^d` (unit spacing).
    StrictLattice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    pub d: usize,
    pub n: usize,
    pub mode: Mode,
    #[serde(default)]
    pub alpha_w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSection {
    pub boxes: Vec<BoxRegion>,
}

fn no_interaction() -> InteractionSpec {
    InteractionSpec::none()
}

/// Full model description. Serializes to the sectioned configuration file
/// layout (`[model]`, `[grid]`, `[domain]`, `[background]`, `[single_site]`,
/// `[disorder]`, `[interaction]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    pub domain: DomainSection,
    #[serde(default)]
    pub background: Background,
    pub single_site: SingleSiteProfile,
    pub disorder: DisorderDistribution,
    #[serde(default = "no_interaction")]
    pub interaction: InteractionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Hard,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

impl Finding {
    pub fn hard(message: impl Into<String>) -> Self {
        Self { severity: Severity::Hard, message: message.into() }
    }

    pub fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }
}

impl ModelConfig {
    /// Discrete Anderson model on `m^d` sites: on-site uniform couplings in
    /// `[0, η_max]`, no interaction.
    pub fn lattice(d: usize, n: usize, m: usize, eta_max: f64) -> Self {
        let region = Region::lattice_cube(d, m);
        Self {
            model: ModelSection { d, n, mode: Mode::StrictLattice, alpha_w: 0.0 },
            grid: GridSection::default(),
            domain: DomainSection { boxes: region.boxes },
            background: Background::Zero,
            single_site: SingleSiteProfile::lattice_delta(),
            disorder: DisorderDistribution::uniform(eta_max),
            interaction: InteractionSpec::none(),
        }
    }

    /// Finite-difference model on the open box `(lo, hi)^d`.
    pub fn continuum(d: usize, n: usize, h: f64, lo: f64, hi: f64, single_site: SingleSiteProfile, eta_max: f64) -> Self {
        Self {
            model: ModelSection { d, n, mode: Mode::Continuum, alpha_w: 0.0 },
            grid: GridSection { h: Some(h) },
            domain: DomainSection { boxes: vec![BoxRegion { lo: vec![lo; d], hi: vec![hi; d] }] },
            background: Background::Zero,
            single_site,
            disorder: DisorderDistribution::uniform(eta_max),
            interaction: InteractionSpec::none(),
        }
    }

    pub fn with_interaction(mut self, interaction: InteractionSpec, alpha_w: f64) -> Self {
        self.interaction = interaction;
        self.model.alpha_w = alpha_w;
        self
    }

    pub fn with_particles(mut self, n: usize) -> Self {
        self.model.n = n;
        self
    }

    pub fn with_disorder(mut self, disorder: DisorderDistribution) -> Self {
        self.disorder = disorder;
        self
    }

    pub fn with_domain(mut self, region: Region) -> Self {
        self.domain = DomainSection { boxes: region.boxes };
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model configuration serializes")
    }

    pub fn d(&self) -> usize {
        self.model.d
    }

    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn mode(&self) -> Mode {
        self.model.mode
    }

    pub fn alpha_w(&self) -> f64 {
        self.model.alpha_w
    }

    /// Grid spacing; 1 in strict-lattice mode.
    pub fn h(&self) -> f64 {
        match self.model.mode {
            Mode::StrictLattice => 1.0,
            Mode::Continuum => self.grid.h.unwrap_or(f64::NAN),
        }
    }

    pub fn r_u(&self) -> f64 {
        self.single_site.r_u
    }

    /// Safety distance `R = r_U + 6`.
    pub fn safety_r(&self) -> f64 {
        self.single_site.r_u + 6.0
    }

    pub fn region(&self) -> Result<Region> {
        Region::new(self.domain.boxes.clone())
    }

    /// Short content hash of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// All static findings; hard ones make the configuration unusable.
    pub fn findings(&self) -> Vec<Finding> {
        let mut out = Vec::new();
        let m = &self.model;
        if m.d == 0 || m.n == 0 {
            out.push(Finding::hard(format!("d = {} and n = {} must be >= 1", m.d, m.n)));
            return out;
        }
        if !(m.alpha_w >= 0.0) || !m.alpha_w.is_finite() {
            out.push(Finding::hard(format!("alpha_w = {} must be >= 0", m.alpha_w)));
        }
        match m.mode {
            Mode::Continuum => match self.grid.h {
                None => out.push(Finding::hard("continuum mode requires grid.h")),
                Some(h) if !(h > 0.0) || !h.is_finite() => {
                    out.push(Finding::hard(format!("grid.h = {h} must be > 0")))
                }
                Some(h) => {
                    let inv = 1.0 / h;
                    if (inv - inv.round()).abs() > 1e-9 * inv.max(1.0) {
                        out.push(Finding::hard(format!("1/grid.h = {inv} must be an integer")));
                    }
                }
            },
            Mode::StrictLattice => {
                if matches!(self.grid.h, Some(h) if h != 1.0) {
                    out.push(Finding::hard("strict-lattice mode has unit spacing; drop grid.h"));
                }
            }
        }
        match self.region() {
            Err(e) => out.push(Finding::hard(e.to_string())),
            Ok(r) if r.d() != m.d => {
                out.push(Finding::hard(format!("domain boxes have dimension {} but d = {}", r.d(), m.d)))
            }
            Ok(_) => {}
        }
        if let Err(e) = SingleSiteProfile::new(self.single_site.shape, self.single_site.amplitude, self.single_site.r_u)
        {
            out.push(Finding::hard(e.to_string()));
        }
        if let Err(e) = self.disorder.validate() {
            out.push(Finding::hard(e.to_string()));
        } else if self.disorder.eta_max() == 0.0 {
            out.push(Finding::warning("eta_max = 0: the disorder ensemble is degenerate"));
        }
        if let Err(e) = self.interaction.validate() {
            out.push(Finding::hard(e.to_string()));
        }
        if out.iter().all(|f| f.severity != Severity::Hard) {
            let margin = covering_margin(self);
            if !(margin > 0.0) {
                out.push(Finding::hard(format!(
                    "covering condition fails: inf of the summed single-site profiles is {margin}"
                )));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let hard: Vec<String> =
            self.findings().into_iter().filter(|f| f.severity == Severity::Hard).map(|f| f.message).collect();
        if hard.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(hard.join("; ")))
        }
    }
}

/// `min` over the grid nodes of one period cell of `Σ_ζ U(x - ζ)`.
pub fn covering_margin(config: &ModelConfig) -> f64 {
    let d = config.d();
    let h = config.h();
    let steps = (1.0 / h).round().max(1.0) as i64;
    let reach = config.r_u().ceil() as i64 + 1;
    let mut k = vec![0i64; d];
    let mut margin = f64::INFINITY;
    'outer: loop {
        let p: Vec<f64> = k.iter().map(|&c| c as f64 * h).collect();
        let mut total = 0.0;
        let mut z = vec![-reach; d];
        'sites: loop {
            let offset: Vec<f64> = p.iter().zip(&z).map(|(x, &s)| x - s as f64).collect();
            total += config.single_site.value(&offset);
            for axis in 0..d {
                if z[axis] < reach + 1 {
                    z[axis] += 1;
                    continue 'sites;
                }
                z[axis] = -reach;
            }
            break;
        }
        margin = margin.min(total);
        for axis in 0..d {
            if k[axis] + 1 < steps {
                k[axis] += 1;
                continue 'outer;
            }
            k[axis] = 0;
        }
        break;
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_profile(r_u: f64) -> SingleSiteProfile {
        SingleSiteProfile::new(ProfileShape::Box, 1.0, r_u).unwrap()
    }

    #[test]
    fn covering_margin_examples() {
        let cfg = ModelConfig::continuum(1, 1, 0.5, 0.0, 4.0, box_profile(0.5), 1.0);
        assert_eq!(covering_margin(&cfg), 1.0);
        let gappy = ModelConfig::continuum(1, 1, 0.1, 0.0, 4.0, box_profile(0.2), 1.0);
        assert_eq!(covering_margin(&gappy), 0.0);
        assert!(gappy.validate().is_err());
    }

    #[test]
    fn tent_margin_is_linear_in_amplitude() {
        let tent = |a| SingleSiteProfile::new(ProfileShape::Tent, a, 0.8).unwrap();
        let m1 = covering_margin(&ModelConfig::continuum(2, 1, 0.25, 0.0, 4.0, tent(1.0), 1.0));
        let m3 = covering_margin(&ModelConfig::continuum(2, 1, 0.25, 0.0, 4.0, tent(3.0), 1.0));
        assert!(m1 > 0.0);
        assert!((m3 - 3.0 * m1).abs() < 1e-12);
    }

    #[test]
    fn safety_distance() {
        let cfg = ModelConfig::continuum(1, 1, 0.5, 0.0, 4.0, box_profile(0.75), 1.0);
        assert_eq!(cfg.safety_r(), 6.75);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut cfg = ModelConfig::lattice(1, 2, 10, 1.0);
        cfg.model.alpha_w = -0.5;
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig::continuum(1, 1, 0.3, 0.0, 4.0, box_profile(0.5), 1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::lattice(1, 1, 10, 1.0);
        cfg.model.d = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let text = r#"
[model]
d = 1
n = 2
mode = "continuum"
alpha_w = 0.25

[grid]
h = 0.5

[domain]
boxes = [{ lo = [0.0], hi = [6.0] }]

[single_site]
shape = "smooth-bump"
amplitude = 2.0
r_u = 1.0

[disorder]
density = "truncated-exponential"
eta_max = 3.0
rate = 1.5

[interaction]
kind = "polynomial"
c_w = 1.0
p_w = 4.0
sign = "signed"
"#;
        let cfg = ModelConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.h(), 0.5);
        assert_eq!(cfg.interaction.sign, InteractionSign::Signed);
        assert_eq!(cfg.background, Background::Zero);
        let again = ModelConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }
}
