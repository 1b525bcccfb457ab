use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::geometry::Region;

const SITE_BITS: u32 = 21;
const SITE_OFFSET: i64 = 1 << (SITE_BITS - 1);

/// One realization `ω` of the couplings `η_ζ` on a box of sites.
///
/// Every value is a pure function of `(seed, realization, ζ)`: the pair
/// `(seed, realization)` keys a ChaCha8 generator and `ζ` selects its stream,
/// so overlapping boxes see identical couplings.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderSample {
    seed: u64,
    realization: u64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn stream_id(zeta: &[i64]) -> Result<u64> {
    if zeta.len() * SITE_BITS as usize > 64 {
        return Err(Error::InvalidConfig(format!("site labels support d <= 3, got d = {}", zeta.len())));
    }
    let mut id = 0u64;
    for &z in zeta {
        let shifted = z + SITE_OFFSET;
        if !(0..(1 << SITE_BITS)).contains(&shifted) {
            return Err(Error::InvalidConfig(format!("site coordinate {z} out of range")));
        }
        id = (id << SITE_BITS) | shifted as u64;
    }
    Ok(id)
}

/// Uniform variate in `[0, 1)` attached to site `ζ`.
fn site_uniform(seed: u64, realization: u64, zeta: &[i64]) -> Result<f64> {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id(zeta)?);
    Ok((rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
}

impl DisorderSample {
    /// Couplings for every site within `r_U` of any of `regions`.
    pub fn covering(config: &ModelConfig, regions: &[&Region], seed: u64, realization: u64) -> Result<Self> {
        let d = config.d();
        let reach = config.r_u();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for region in regions {
            let (a, b) = region.bounds();
            for i in 0..d {
                lo[i] = lo[i].min((a[i] - reach).floor() as i64);
                hi[i] = hi[i].max((b[i] + reach).ceil() as i64);
            }
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let total: usize = shape.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut zeta = lo.clone();
        for _ in 0..total {
            let u = site_uniform(seed, realization, &zeta)?;
            values.push(config.disorder.quantile(u));
            for axis in (0..d).rev() {
                if zeta[axis] < hi[axis] {
                    zeta[axis] += 1;
                    break;
                }
                zeta[axis] = lo[axis];
            }
        }
        Ok(Self { seed, realization, lo, shape, values })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `η_ζ`, or `None` for a site outside the sampled box.
    pub fn eta(&self, zeta: &[i64]) -> Option<f64> {
        let mut offset = 0usize;
        for ((z, lo), n) in zeta.iter().zip(&self.lo).zip(&self.shape) {
            let k = z - lo;
            if k < 0 || k as usize >= *n {
                return None;
            }
            offset = offset * n + k as usize;
        }
        Some(self.values[offset])
    }

    /// Overrides one coupling (used for monotonicity studies).
    pub fn set_eta(&mut self, zeta: &[i64], value: f64) -> Result<()> {
        let mut offset = 0usize;
        for ((z, lo), n) in zeta.iter().zip(&self.lo).zip(&self.shape) {
            let k = z - lo;
            if k < 0 || k as usize >= *n {
                return Err(Error::DomainMismatch(format!("site {zeta:?} outside the sampled box")));
            }
            offset = offset * n + k as usize;
        }
        self.values[offset] = value;
        Ok(())
    }

    /// Site labels in storage order.
    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        let total = self.values.len();
        (0..total).map(move |mut flat| {
            let mut zeta = vec![0i64; self.shape.len()];
            for axis in (0..self.shape.len()).rev() {
                zeta[axis] = self.lo[axis] + (flat % self.shape[axis]) as i64;
                flat /= self.shape[axis];
            }
            zeta
        })
    }
}

/// Couplings on the configured domain dilated by `r_U`.
pub fn sample_disorder(config: &ModelConfig, seed: u64, realization: u64) -> Result<DisorderSample> {
    let region = config.region()?;
    DisorderSample::covering(config, &[&region], seed, realization)
}
