//! Deterministic synthetic sequence dataset with controlled appearance bias.
//!
//! Every class `c` owns an appearance vector `a_c` and a zero-temporal-mean
//! modulation pattern `p_c(t) = m_c * sin(2*pi*f_c*t/T + phi_c)`; frame `t`
//! of a sample is `a_c + p_c(t) + noise`. Because the pattern sums to zero
//! over `t`, the per-sequence frame mean carries only the appearance, so two
//! classes sharing `a_c` are indistinguishable to any order-insensitive
//! observer.
//!
//! Appearance sharing happens in two places:
//!
//! * a leading block of InD classes is paired two-per-appearance, so
//!   closed-set accuracy has headroom that only temporal sensitivity fills;
//! * `appearance_twin_fraction` of the OoD classes reuse the appearance of an
//!   *unpaired* InD class with a fresh pattern — the open-set trap, since a
//!   purely appearance-driven encoder maps them straight onto that InD class.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::math;
use crate::Result;

/// Norm of every class appearance vector.
const APPEARANCE_SCALE: f64 = 0.08;
/// Norm of every class temporal modulation direction.
const TEMPORAL_SCALE: f64 = 0.15;

/// A single synthetic sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    pub id: u64,
    /// `T x d_f` frame features, row per frame.
    pub frames: Mat,
    /// Global class index; OoD classes follow the InD classes.
    pub label: usize,
    pub is_ood: bool,
    /// Id of the original sample when this one is a shuffled copy.
    pub shuffled_from: Option<u64>,
}

impl SequenceSample {
    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn frame_dim(&self) -> usize {
        self.frames.cols()
    }

    /// Frames flattened row-major (frame 0 first), preserving order.
    pub fn flattened(&self) -> &[f64] {
        self.frames.data()
    }

    /// Mean frame vector over the sequence.
    pub fn frame_mean(&self) -> Vec<f64> {
        let t = self.num_frames();
        let mut mean = vec![0.0; self.frame_dim()];
        for r in 0..t {
            linalg::axpy(1.0, self.frames.row(r), &mut mean);
        }
        linalg::scale(&mut mean, 1.0 / t as f64);
        mean
    }
}

/// Generator parameters; everything downstream is a pure function of these.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorConfig {
    pub num_ind_classes: usize,
    pub num_ood_classes: usize,
    pub frames_per_seq: usize,
    pub frame_dim: usize,
    pub noise_sigma: f64,
    /// Fraction of OoD classes that reuse an InD appearance vector.
    pub appearance_twin_fraction: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_ind_classes: 8,
            num_ood_classes: 4,
            frames_per_seq: 8,
            frame_dim: 16,
            noise_sigma: 0.1,
            appearance_twin_fraction: 0.5,
            seed: 7,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_ind_classes == 0 {
            return Err(Error::InvalidConfig {
                field: "num_ind_classes",
                reason: alloc::format!("must be >= 1, got {}", self.num_ind_classes),
            });
        }
        if self.frames_per_seq < 2 {
            return Err(Error::InvalidConfig {
                field: "frames_per_seq",
                reason: alloc::format!("must be >= 2, got {}", self.frames_per_seq),
            });
        }
        if self.frame_dim < 2 {
            return Err(Error::InvalidConfig {
                field: "frame_dim",
                reason: alloc::format!("must be >= 2, got {}", self.frame_dim),
            });
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig {
                field: "noise_sigma",
                reason: alloc::format!("must be finite and >= 0, got {}", self.noise_sigma),
            });
        }
        if !(0.0..=1.0).contains(&self.appearance_twin_fraction) {
            return Err(Error::InvalidConfig {
                field: "appearance_twin_fraction",
                reason: alloc::format!("must lie in [0, 1], got {}", self.appearance_twin_fraction),
            });
        }
        Ok(())
    }

    pub fn total_classes(&self) -> usize {
        self.num_ind_classes + self.num_ood_classes
    }

    /// Number of InD appearance pairs (classes `2j`/`2j+1` share `a_c`).
    pub fn num_ind_pairs(&self) -> usize {
        self.num_ind_classes / 4
    }

    /// Number of OoD classes acting as appearance twins.
    pub fn num_twins(&self) -> usize {
        let exact = self.appearance_twin_fraction * self.num_ood_classes as f64;
        math::floor(exact + 0.5) as usize
    }
}

/// Static description of one generated class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassInfo {
    pub id: usize,
    pub is_ood: bool,
    /// For twin OoD classes, the InD class whose appearance they reuse.
    pub twin_of: Option<usize>,
    /// InD classes sharing their appearance with another InD class.
    pub paired_with: Option<usize>,
}

/// Twin assignment and InD pairing, derivable from the config alone.
pub fn class_layout(cfg: &GeneratorConfig) -> Vec<ClassInfo> {
    let num_pairs = cfg.num_ind_pairs();
    let num_twins = cfg.num_twins();
    let unpaired: Vec<usize> = (2 * num_pairs..cfg.num_ind_classes).collect();

    let mut classes = Vec::with_capacity(cfg.total_classes());
    for c in 0..cfg.num_ind_classes {
        let paired_with = if c < 2 * num_pairs {
            Some(c ^ 1)
        } else {
            None
        };
        classes.push(ClassInfo {
            id: c,
            is_ood: false,
            twin_of: None,
            paired_with,
        });
    }
    for o in 0..cfg.num_ood_classes {
        let twin_of = if o < num_twins {
            Some(if unpaired.is_empty() {
                o % cfg.num_ind_classes
            } else {
                unpaired[o % unpaired.len()]
            })
        } else {
            None
        };
        classes.push(ClassInfo {
            id: cfg.num_ind_classes + o,
            is_ood: true,
            twin_of,
            paired_with: None,
        });
    }
    classes
}

struct ClassParams {
    appearance: Vec<f64>,
    /// Temporal direction, scaled.
    modulation: Vec<f64>,
    frequency: usize,
    phase: f64,
}

impl ClassParams {
    /// Pattern value multiplier at frame `t`.
    fn wave(&self, t: usize, frames: usize) -> f64 {
        let angle =
            2.0 * core::f64::consts::PI * self.frequency as f64 * t as f64 / frames as f64
                + self.phase;
        math::sin(angle)
    }
}

fn draw_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if linalg::normalize(&mut v).is_ok() {
            return v;
        }
    }
}

/// Mutually orthonormal directions while dimension allows, falling back to
/// plain unit draws afterwards.
fn draw_appearance_directions(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v = draw_unit(rng, dim);
        if dirs.len() < dim {
            for prev in &dirs {
                let proj = linalg::dot(&v, prev);
                linalg::axpy(-proj, prev, &mut v);
            }
            if linalg::normalize(&mut v).is_err() {
                v = draw_unit(rng, dim);
            }
        }
        dirs.push(v);
    }
    dirs
}

fn class_parameters(cfg: &GeneratorConfig, layout: &[ClassInfo]) -> Vec<ClassParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let distinct_appearances = layout
        .iter()
        .filter(|c| c.twin_of.is_none() && (c.is_ood || c.paired_with.map_or(true, |p| p > c.id)))
        .count();
    let dirs = draw_appearance_directions(&mut rng, distinct_appearances, cfg.frame_dim);

    // Assign directions in class order, reusing for pairs and twins.
    let total = cfg.total_classes();
    let mut appearance: Vec<Option<Vec<f64>>> = vec![None; total];
    let mut next_dir = 0;
    for info in layout {
        if let Some(partner) = info.twin_of {
            appearance[info.id] = appearance[partner].clone();
        } else if let Some(partner) = info.paired_with.filter(|&p| p < info.id) {
            appearance[info.id] = appearance[partner].clone();
        } else {
            let mut dir = dirs[next_dir].clone();
            next_dir += 1;
            linalg::scale(&mut dir, APPEARANCE_SCALE);
            appearance[info.id] = Some(dir);
        }
    }

    let max_freq = (cfg.frames_per_seq / 2).saturating_sub(1).max(1);
    let mut params = Vec::with_capacity(total);
    for info in layout {
        let mut modulation = draw_unit(&mut rng, cfg.frame_dim);
        linalg::scale(&mut modulation, TEMPORAL_SCALE);
        let phase = rng.random::<f64>() * 2.0 * core::f64::consts::PI;
        let mut frequency = 1 + info.id % max_freq;
        if let Some(partner) = info.twin_of {
            let partner_freq = 1 + partner % max_freq;
            if frequency == partner_freq && max_freq > 1 {
                frequency = 1 + frequency % max_freq;
            }
        }
        params.push(ClassParams {
            appearance: appearance[info.id].clone().expect("assigned above"),
            modulation,
            frequency,
            phase,
        });
    }
    params
}

/// Generates `count_per_class` sequences for every class (InD classes first),
/// bit-reproducible from `cfg.seed`.
pub fn generate(cfg: &GeneratorConfig, count_per_class: usize) -> Result<Vec<SequenceSample>> {
    cfg.validate()?;
    if count_per_class == 0 {
        return Err(Error::InvalidConfig {
            field: "count_per_class",
            reason: alloc::string::String::from("must be >= 1"),
        });
    }

    let layout = class_layout(cfg);
    let params = class_parameters(cfg, &layout);
    // Sample noise comes from its own stream so class geometry above is
    // independent of how many samples are drawn.
    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));

    let t = cfg.frames_per_seq;
    let d = cfg.frame_dim;
    let mut samples = Vec::with_capacity(cfg.total_classes() * count_per_class);
    let mut next_id = 0u64;
    for (info, p) in layout.iter().zip(params.iter()) {
        for _ in 0..count_per_class {
            let mut frames = Mat::zeros(t, d);
            for ft in 0..t {
                let wave = p.wave(ft, t);
                let row = frames.row_mut(ft);
                for (c, out) in row.iter_mut().enumerate() {
                    let noise: f64 = noise_rng.sample(StandardNormal);
                    *out = p.appearance[c] + wave * p.modulation[c] + cfg.noise_sigma * noise;
                }
            }
            samples.push(SequenceSample {
                id: next_id,
                frames,
                label: info.id,
                is_ood: info.is_ood,
                shuffled_from: None,
            });
            next_id += 1;
        }
    }
    Ok(samples)
}

/// Returns a copy of `sample` with frames under a uniformly random
/// *non-identity* permutation; the frame multiset is preserved.
pub fn shuffle_frames(sample: &SequenceSample, seed: u64) -> Result<SequenceSample> {
    let t = sample.num_frames();
    if t < 2 {
        return Err(Error::InvalidConfig {
            field: "frames_per_seq",
            reason: alloc::string::String::from("cannot shuffle fewer than 2 frames"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..t).collect();
    loop {
        // Fisher-Yates
        for i in (1..t).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        if perm.iter().enumerate().any(|(i, &p)| i != p) {
            break;
        }
    }

    let mut frames = Mat::zeros(t, sample.frame_dim());
    for (dst, &src) in perm.iter().enumerate() {
        frames.row_mut(dst).copy_from_slice(sample.frames.row(src));
    }
    Ok(SequenceSample {
        id: sample.id,
        frames,
        label: sample.label,
        is_ood: sample.is_ood,
        shuffled_from: Some(sample.id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_cfg() -> GeneratorConfig {
        GeneratorConfig {
            num_ind_classes: 2,
            num_ood_classes: 1,
            frames_per_seq: 4,
            frame_dim: 4,
            noise_sigma: 0.0,
            appearance_twin_fraction: 0.0,
            seed: 3,
        }
    }

    #[test]
    fn zero_noise_determinism_within_class() {
        let samples = generate(&tiny_cfg(), 2).unwrap();
        assert_eq!(samples[0].label, samples[1].label);
        assert_eq!(samples[0].frames, samples[1].frames);
    }

    #[test]
    fn same_seed_same_dataset() {
        let cfg = GeneratorConfig::default();
        let a = generate(&cfg, 3).unwrap();
        let b = generate(&cfg, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn twin_shares_frame_mean_at_zero_noise() {
        // Single InD class plus a twin OoD class; zero-mean patterns make the
        // per-sequence frame means coincide exactly (up to float round-off).
        let cfg = GeneratorConfig {
            num_ind_classes: 1,
            num_ood_classes: 1,
            frames_per_seq: 8,
            frame_dim: 6,
            noise_sigma: 0.0,
            appearance_twin_fraction: 1.0,
            seed: 11,
        };
        let samples = generate(&cfg, 1).unwrap();
        let ind_mean = samples[0].frame_mean();
        let ood_mean = samples[1].frame_mean();
        assert!(samples[1].is_ood);
        for (a, b) in ind_mean.iter().zip(ood_mean.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn patterns_have_zero_temporal_mean() {
        let cfg = GeneratorConfig {
            noise_sigma: 0.0,
            ..GeneratorConfig::default()
        };
        let samples = generate(&cfg, 1).unwrap();
        let layout = class_layout(&cfg);
        // Mean frame equals the appearance vector (shared by twins), so the
        // modulation summed to zero across frames.
        for info in &layout {
            if let Some(partner) = info.twin_of {
                let twin = samples.iter().find(|s| s.label == info.id).unwrap();
                let ind = samples.iter().find(|s| s.label == partner).unwrap();
                for (a, b) in twin.frame_mean().iter().zip(ind.frame_mean().iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn shuffle_two_frames_swaps() {
        let samples = generate(&tiny_cfg(), 1).unwrap();
        let mut sample = samples[0].clone();
        sample.frames = Mat::from_vec(vec![1.0, 2.0, 3.0, 4.0], 2, 2).unwrap();
        let shuffled = shuffle_frames(&sample, 1).unwrap();
        assert_eq!(shuffled.frames.row(0), &[3.0, 4.0]);
        assert_eq!(shuffled.frames.row(1), &[1.0, 2.0]);
        assert_eq!(shuffled.shuffled_from, Some(sample.id));
        assert_eq!(shuffled.label, sample.label);
    }

    #[test]
    fn shuffle_preserves_frame_multiset_and_is_never_identity() {
        let cfg = GeneratorConfig::default();
        let samples = generate(&cfg, 1).unwrap();
        for (i, sample) in samples.iter().enumerate().take(6) {
            let shuffled = shuffle_frames(sample, 1000 + i as u64).unwrap();
            assert_ne!(shuffled.frames, sample.frames);
            let mut a: Vec<Vec<u64>> = (0..sample.num_frames())
                .map(|r| sample.frames.row(r).iter().map(|v| v.to_bits()).collect())
                .collect();
            let mut b: Vec<Vec<u64>> = (0..shuffled.num_frames())
                .map(|r| shuffled.frames.row(r).iter().map(|v| v.to_bits()).collect())
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shuffle_is_deterministic() {
        let samples = generate(&GeneratorConfig::default(), 1).unwrap();
        let a = shuffle_frames(&samples[0], 42).unwrap();
        let b = shuffle_frames(&samples[0], 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffle_rejects_single_frame() {
        let mut sample = generate(&tiny_cfg(), 1).unwrap()[0].clone();
        sample.frames = Mat::from_vec(vec![1.0, 2.0], 1, 2).unwrap();
        assert!(shuffle_frames(&sample, 0).is_err());
    }

    #[test]
    fn layout_marks_twins_and_pairs() {
        let cfg = GeneratorConfig::default(); // 8 InD, 4 OoD, twin fraction 0.5
        let layout = class_layout(&cfg);
        assert_eq!(layout.len(), 12);
        assert_eq!(layout[0].paired_with, Some(1));
        assert_eq!(layout[1].paired_with, Some(0));
        assert_eq!(layout[2].paired_with, Some(3));
        assert_eq!(layout[4].paired_with, None);
        let twins: Vec<_> = layout.iter().filter(|c| c.twin_of.is_some()).collect();
        assert_eq!(twins.len(), 2);
        // Twins alias unpaired InD classes.
        for t in twins {
            let partner = t.twin_of.unwrap();
            assert!(partner >= 4 && partner < 8);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GeneratorConfig::default();
        cfg.appearance_twin_fraction = 1.5;
        assert!(generate(&cfg, 1).is_err());
        let mut cfg = GeneratorConfig::default();
        cfg.frames_per_seq = 1;
        assert!(generate(&cfg, 1).is_err());
        assert!(generate(&GeneratorConfig::default(), 0).is_err());
    }
}
