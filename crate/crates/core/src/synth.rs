//! Synthetic instances with ground truth: partial views of a universe of
//! objects, outliers, and per-modality score corruption.
//!
//! True scores are 1 for pairs of the same object and 0 otherwise. Each
//! modality then corrupts every cross-set score independently: a flip
//! `s -> 1 - s` with probability `flip_rate`, masking to the inconclusive 0.5
//! with probability `inconclusive_rate`, and, for unmasked scores, additive
//! Gaussian noise clipped to `[0, 1]`.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{offsets_of, Assignment, ClusterLabeling, Instance, INCONCLUSIVE};

/// Attempts at drawing a configuration without empty sets.
pub const MAX_REDRAWS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityNoise {
    pub noise_sigma: f64,
    pub inconclusive_rate: f64,
    pub flip_rate: f64,
}

impl ModalityNoise {
    pub const CLEAN: ModalityNoise = ModalityNoise { noise_sigma: 0.0, inconclusive_rate: 0.0, flip_rate: 0.0 };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub universe_size: usize,
    pub num_sets: usize,
    pub modality_count: usize,
    pub observe_prob: f64,
    pub outliers: usize,
    pub noise_sigma: f64,
    pub inconclusive_rate: f64,
    pub flip_rate: f64,
    /// Per-modality corruption; when non-empty it must have one entry per
    /// modality and replaces the three global rates.
    pub modality_overrides: Vec<ModalityNoise>,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            universe_size: 10,
            num_sets: 4,
            modality_count: 1,
            observe_prob: 0.7,
            outliers: 0,
            noise_sigma: 0.1,
            inconclusive_rate: 0.1,
            flip_rate: 0.05,
            modality_overrides: Vec::new(),
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    /// Zero-corruption variant of this configuration.
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.inconclusive_rate = 0.0;
        self.flip_rate = 0.0;
        self.modality_overrides.clear();
        self
    }

    pub fn noise_for(&self, modality: usize) -> ModalityNoise {
        self.modality_overrides.get(modality).copied().unwrap_or(ModalityNoise {
            noise_sigma: self.noise_sigma,
            inconclusive_rate: self.inconclusive_rate,
            flip_rate: self.flip_rate,
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_sets == 0 {
            return bad("num_sets must be >= 1".into());
        }
        if self.modality_count == 0 {
            return bad("modality_count must be >= 1".into());
        }
        if !(self.observe_prob > 0.0 && self.observe_prob <= 1.0) {
            return bad(format!("observe_prob {} not in (0, 1]", self.observe_prob));
        }
        if !self.modality_overrides.is_empty() && self.modality_overrides.len() != self.modality_count {
            return bad(format!(
                "{} modality overrides for {} modalities",
                self.modality_overrides.len(),
                self.modality_count
            ));
        }
        for k in 0..self.modality_count {
            let nz = self.noise_for(k);
            if !(nz.noise_sigma.is_finite() && nz.noise_sigma >= 0.0) {
                return bad(format!("modality {k}: noise_sigma must be >= 0"));
            }
            for (name, r) in [("inconclusive_rate", nz.inconclusive_rate), ("flip_rate", nz.flip_rate)] {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("modality {k}: {name} {r} not in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// True object identity per element; outliers carry identities of their own.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub labels: Vec<usize>,
}

impl GroundTruth {
    pub fn clusters(&self) -> ClusterLabeling {
        ClusterLabeling::new(self.labels.clone()).canonical()
    }

    pub fn assignment(&self, set_sizes: &[usize]) -> Result<Assignment> {
        Assignment::from_clusters(&ClusterLabeling::new(self.labels.clone()), set_sizes)
    }
}

/// Independent child seed for `(stream, index)` under a base seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

pub fn generate(config: &SynthConfig) -> Result<(Instance, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let n = config.num_sets;

    let mut members: Option<Vec<Vec<usize>>> = None;
    for _ in 0..MAX_REDRAWS {
        let draw: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut set: Vec<usize> =
                    (0..config.universe_size).filter(|_| rng.random_bool(config.observe_prob)).collect();
                // Outliers are dealt round-robin.
                set.extend((i..config.outliers).step_by(n).map(|j| config.universe_size + j));
                set
            })
            .collect();
        if draw.iter().all(|s| !s.is_empty()) {
            members = Some(draw);
            break;
        }
    }
    let mut members = members.ok_or_else(|| {
        Error::InvalidConfig(format!("could not draw {n} non-empty sets in {MAX_REDRAWS} attempts"))
    })?;
    for set in &mut members {
        set.shuffle(&mut rng);
    }

    let set_sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let labels: Vec<usize> = members.concat();
    let offsets = offsets_of(&set_sizes);
    let m = labels.len();
    let l = config.modality_count;
    let noise: Vec<ModalityNoise> = (0..l).map(|k| config.noise_for(k)).collect();
    let gauss: Vec<Option<Normal<f64>>> = noise
        .iter()
        .map(|nz| (nz.noise_sigma > 0.0).then(|| Normal::new(0.0, nz.noise_sigma).expect("validated sigma")))
        .collect();

    let mut instance = Instance::new(set_sizes, l)?;
    for i in 0..n {
        for a in offsets[i]..offsets[i + 1] {
            for b in offsets[i + 1]..m {
                let truth = if labels[a] == labels[b] { 1.0 } else { 0.0 };
                let scores: Vec<f64> = (0..l)
                    .map(|k| {
                        let mut s = truth;
                        if rng.random_bool(noise[k].flip_rate) {
                            s = 1.0 - s;
                        }
                        if rng.random_bool(noise[k].inconclusive_rate) {
                            return INCONCLUSIVE;
                        }
                        if let Some(g) = &gauss[k] {
                            s = (s + g.sample(&mut rng)).clamp(0.0, 1.0);
                        }
                        s
                    })
                    .collect();
                instance.set_score(a, b, scores)?;
            }
        }
    }
    Ok((instance, GroundTruth { labels }))
}

/// One draw of the four-modality fusion study.
#[derive(Clone, Debug, PartialEq)]
pub struct MultimodalCase {
    pub fused: Instance,
    pub truth: GroundTruth,
    /// `singles[k]` keeps modality `k` only.
    pub singles: Vec<Instance>,
}

/// Corruption profiles of the fusion study, strongest first.
pub const MULTIMODAL_PROFILES: [ModalityNoise; 4] = [
    // precise but often inconclusive
    ModalityNoise { noise_sigma: 0.05, inconclusive_rate: 0.6, flip_rate: 0.0 },
    // noisy but complete
    ModalityNoise { noise_sigma: 0.3, inconclusive_rate: 0.0, flip_rate: 0.05 },
    // flip-prone
    ModalityNoise { noise_sigma: 0.05, inconclusive_rate: 0.2, flip_rate: 0.2 },
    // weak
    ModalityNoise { noise_sigma: 0.25, inconclusive_rate: 0.5, flip_rate: 0.15 },
];

pub fn multimodal_config(seed: u64) -> SynthConfig {
    SynthConfig {
        universe_size: 8,
        num_sets: 5,
        modality_count: 4,
        observe_prob: 0.7,
        outliers: 3,
        modality_overrides: MULTIMODAL_PROFILES.to_vec(),
        rng_seed: seed,
        ..SynthConfig::default()
    }
}

/// `count` fused instances with heterogeneous modalities, plus their
/// single-modality restrictions.
pub fn multimodal_suite(seed: u64, count: usize) -> Result<Vec<MultimodalCase>> {
    (0..count)
        .map(|t| {
            let (fused, truth) = generate(&multimodal_config(derive_seed(seed, 0, t as u64)))?;
            let singles = (0..fused.modality_count())
                .map(|k| fused.select_modalities(&[k]))
                .collect::<Result<Vec<_>>>()?;
            Ok(MultimodalCase { fused, truth, singles })
        })
        .collect()
}
