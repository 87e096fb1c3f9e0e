//! Data augmentation: perturbs correct feature vectors into labelled
//! incorrect ones and builds balanced per-epoch training sets.
//!
//! A task output of N values, each k bits wide, has N*(2^k - 1)
//! incorrect variants; enumerating them is hopeless, so the incorrect
//! class is sampled. Three strategies cover the space: random bit
//! flips in the 32-bit float encoding (the same corruption the fault
//! injector applies), multiplicative scaling by a random power of ten,
//! and additive noise scaled to the training-set standard deviation.
//! A perturbation is accepted only when it deviates from its source by
//! at least the minimum relative deviation and stays finite, so the
//! detector is not trained to flag quality-irrelevant or untrainable
//! patterns (non-finite vectors are flagged before inference anyway).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::elementwise_relative_error;
use crate::mlp::Classification;
use crate::FeatureVector;

/// Attempts before giving up on reaching the minimum deviation.
pub const PERTURB_MAX_ATTEMPTS: u32 = 64;

/// Exclusion half-width around zero for the scale-noise exponent.
const SCALE_EXPONENT_DEADBAND: f64 = 0.05;

/// Relative frequency of each perturbation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyWeights {
    pub bitflip: f64,
    pub scale_noise: f64,
    pub additive_noise: f64,
}

impl Default for StrategyWeights {
    fn default() -> Self {
        Self {
            bitflip: 0.6,
            scale_noise: 0.2,
            additive_noise: 0.2,
        }
    }
}

impl StrategyWeights {
    fn total(&self) -> f64 {
        self.bitflip + self.scale_noise + self.additive_noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationParams {
    pub strategy_weights: StrategyWeights,
    /// Most bits flipped per corrupted element.
    pub max_bits_flipped: u32,
    /// Most elements corrupted per vector; the count is drawn uniformly
    /// from 1..=max_elements.
    pub max_elements: usize,
    /// Minimum elementwise relative deviation from the source vector.
    pub min_deviation: f64,
    /// Feature positions eligible for corruption (for example, offset
    /// fields derived from task inputs are excluded). `None` means all.
    pub perturbable_indices: Option<Vec<usize>>,
    /// Per-dimension scale of the additive-noise strategy, normally the
    /// training-set standard deviation. `None` means unit scale.
    pub additive_scale: Option<Vec<f32>>,
}

impl Default for PerturbationParams {
    fn default() -> Self {
        Self {
            strategy_weights: StrategyWeights::default(),
            max_bits_flipped: 8,
            max_elements: 2,
            min_deviation: 0.01,
            perturbable_indices: None,
            additive_scale: None,
        }
    }
}

impl PerturbationParams {
    pub fn validate(&self) -> Result<()> {
        let w = &self.strategy_weights;
        if w.bitflip < 0.0 || w.scale_noise < 0.0 || w.additive_noise < 0.0 {
            return Err(Error::InvalidConfig(
                "strategy weights must be non-negative".into(),
            ));
        }
        if (w.total() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "strategy weights must sum to 1 (got {})",
                w.total()
            )));
        }
        if !(self.min_deviation > 0.0) {
            return Err(Error::InvalidConfig("min_deviation must be > 0".into()));
        }
        if self.max_bits_flipped == 0 || self.max_bits_flipped > 32 {
            return Err(Error::InvalidConfig(
                "max_bits_flipped must be in 1..=32".into(),
            ));
        }
        if self.max_elements == 0 {
            return Err(Error::InvalidConfig("max_elements must be >= 1".into()));
        }
        Ok(())
    }
}

enum Strategy {
    Bitflip,
    ScaleNoise,
    AdditiveNoise,
}

fn pick_strategy(weights: &StrategyWeights, rng: &mut impl Rng) -> Strategy {
    let r = rng.random::<f64>() * weights.total();
    if r < weights.bitflip {
        Strategy::Bitflip
    } else if r < weights.bitflip + weights.scale_noise {
        Strategy::ScaleNoise
    } else {
        Strategy::AdditiveNoise
    }
}

/// Flips the listed bit positions (0 = LSB, 31 = sign) in the 32-bit
/// encoding of `value`.
pub fn flip_bits(value: f32, bits: &[u32]) -> f32 {
    let mut raw = value.to_bits();
    for &b in bits {
        raw ^= 1u32 << b;
    }
    f32::from_bits(raw)
}

fn corrupt_element(value: f32, params: &PerturbationParams, scale: f32, rng: &mut impl Rng) -> f32 {
    match pick_strategy(&params.strategy_weights, rng) {
        Strategy::Bitflip => {
            let nbits = rng.random_range(1..=params.max_bits_flipped) as usize;
            let picks = rand::seq::index::sample(rng, 32, nbits.min(32));
            let bits: Vec<u32> = picks.iter().map(|b| b as u32).collect();
            flip_bits(value, &bits)
        }
        Strategy::ScaleNoise => {
            // 10^u with u uniform in [-3, 3] minus a deadband around 0.
            let u = loop {
                let u = rng.random_range(-3.0..3.0);
                if u.abs() >= SCALE_EXPONENT_DEADBAND {
                    break u;
                }
            };
            value * 10f64.powf(u) as f32
        }
        Strategy::AdditiveNoise => {
            let sigma = (scale as f64).abs().max(1e-12);
            let noise = Normal::new(0.0, sigma).expect("sigma is positive").sample(rng);
            value + noise as f32
        }
    }
}

/// Produces a corrupted copy of `fv` that deviates from it by at least
/// `params.min_deviation` mean relative error and is entirely finite.
/// Resamples up to [`PERTURB_MAX_ATTEMPTS`] times before reporting the
/// deviation unreachable.
pub fn perturb(fv: &[f32], params: &PerturbationParams, rng: &mut impl Rng) -> Result<FeatureVector> {
    params.validate()?;
    if fv.is_empty() {
        return Err(Error::NothingToPerturb);
    }
    let all_indices: Vec<usize>;
    let indices: &[usize] = match &params.perturbable_indices {
        Some(idx) => {
            if idx.is_empty() {
                return Err(Error::NothingToPerturb);
            }
            if idx.iter().any(|&i| i >= fv.len()) {
                return Err(Error::DimensionMismatch {
                    context: "perturbable_indices",
                    expected: fv.len(),
                    actual: *idx.iter().max().unwrap() + 1,
                });
            }
            idx
        }
        None => {
            all_indices = (0..fv.len()).collect();
            &all_indices
        }
    };
    for _ in 0..PERTURB_MAX_ATTEMPTS {
        let mut out = fv.to_vec();
        let count = rng.random_range(1..=params.max_elements.min(indices.len()));
        let picks = rand::seq::index::sample(rng, indices.len(), count);
        for pick in picks.iter() {
            let i = indices[pick];
            let scale = params
                .additive_scale
                .as_ref()
                .map(|s| s[i])
                .unwrap_or(1.0);
            out[i] = corrupt_element(out[i], params, scale, rng);
        }
        if out.iter().all(|v| v.is_finite())
            && elementwise_relative_error(&out, fv)? >= params.min_deviation
        {
            return Ok(out);
        }
    }
    Err(Error::DeviationUnreachable {
        tau: params.min_deviation,
        attempts: PERTURB_MAX_ATTEMPTS,
    })
}

/// A balanced epoch set: every correct vector labelled correct, plus
/// one fresh perturbation of each labelled incorrect, shuffled
/// deterministically by `rng`.
pub fn balanced_epoch_set(
    correct_set: &[FeatureVector],
    params: &PerturbationParams,
    rng: &mut impl Rng,
) -> Result<Vec<(FeatureVector, Classification)>> {
    if correct_set.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut samples = Vec::with_capacity(2 * correct_set.len());
    for fv in correct_set {
        samples.push((fv.clone(), Classification::Correct));
    }
    for fv in correct_set {
        samples.push((perturb(fv, params, rng)?, Classification::Incorrect));
    }
    samples.shuffle(rng);
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::chacha_stream;
    use proptest::prelude::*;

    #[test]
    fn sign_bit_flip_negates() {
        assert_eq!(flip_bits(1.0, &[31]), -1.0);
        assert_eq!(flip_bits(-2.5, &[31]), 2.5);
    }

    #[test]
    fn exponent_msb_flip_overflows_to_infinity() {
        // 1.0 has exponent 127; setting the exponent MSB gives 255,
        // i.e. the nominal 2^128 overflows the format.
        let v = flip_bits(1.0, &[30]);
        assert!(v.is_infinite() && v > 0.0);
    }

    #[test]
    fn double_flip_restores_value() {
        let v = flip_bits(flip_bits(3.75, &[7, 19]), &[19, 7]);
        assert_eq!(v, 3.75);
    }

    #[test]
    fn perturb_reaches_minimum_deviation() {
        let params = PerturbationParams::default();
        let fv: Vec<f32> = vec![1.5, -2.0, 700.0, 0.01, 3.25];
        let mut rng = chacha_stream(42, 0);
        for _ in 0..200 {
            let out = perturb(&fv, &params, &mut rng).unwrap();
            let dev = elementwise_relative_error(&out, &fv).unwrap();
            assert!(dev >= params.min_deviation, "deviation {dev}");
            assert!(out.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn perturb_respects_perturbable_indices() {
        let params = PerturbationParams {
            perturbable_indices: Some(vec![0, 2]),
            ..PerturbationParams::default()
        };
        let fv: Vec<f32> = vec![1.0, 55.5, -3.0, 0.125];
        let mut rng = chacha_stream(3, 1);
        for _ in 0..100 {
            let out = perturb(&fv, &params, &mut rng).unwrap();
            assert_eq!(out[1].to_bits(), fv[1].to_bits());
            assert_eq!(out[3].to_bits(), fv[3].to_bits());
        }
    }

    #[test]
    fn perturb_errors_when_deviation_unreachable() {
        // Scale noise alone cannot move an all-zero vector.
        let params = PerturbationParams {
            strategy_weights: StrategyWeights {
                bitflip: 0.0,
                scale_noise: 1.0,
                additive_noise: 0.0,
            },
            ..PerturbationParams::default()
        };
        let fv = vec![0.0f32; 4];
        let mut rng = chacha_stream(1, 0);
        assert!(matches!(
            perturb(&fv, &params, &mut rng),
            Err(Error::DeviationUnreachable { .. })
        ));
    }

    #[test]
    fn perturb_rejects_empty_input() {
        let mut rng = chacha_stream(0, 0);
        assert!(perturb(&[], &PerturbationParams::default(), &mut rng).is_err());
    }

    #[test]
    fn balanced_set_counts_and_determinism() {
        let correct: Vec<FeatureVector> =
            (0..100).map(|i| vec![i as f32, 1.0, -2.0]).collect();
        let params = PerturbationParams::default();

        let a = balanced_epoch_set(&correct, &params, &mut chacha_stream(5, 0)).unwrap();
        assert_eq!(a.len(), 200);
        let correct_count = a
            .iter()
            .filter(|(_, l)| *l == Classification::Correct)
            .count();
        assert_eq!(correct_count, 100);

        let b = balanced_epoch_set(&correct, &params, &mut chacha_stream(5, 0)).unwrap();
        assert_eq!(a, b);

        let c = balanced_epoch_set(&correct, &params, &mut chacha_stream(6, 0)).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn perturbations_always_deviate(
            seed in 0u64..500,
            fv in proptest::collection::vec(-100.0f32..100.0, 2..12),
        ) {
            let params = PerturbationParams::default();
            let mut rng = chacha_stream(seed, 2);
            if let Ok(out) = perturb(&fv, &params, &mut rng) {
                let dev = elementwise_relative_error(&out, &fv).unwrap();
                prop_assert!(dev >= params.min_deviation);
            }
        }
    }
}
