//! Prototype losses: plain prototypical learning (PL), prototypical
//! similarity learning (PSL), and PSL with contrastive terms (PSL-CT).
//!
//! All three share one softmax-over-exponents skeleton. With the anchor `z`,
//! its class prototype `k_i`, temperature `tau`, and target similarity `s`:
//!
//! * PL numerator exponent: `z.k_i / tau`
//! * PSL / PSL-CT numerator exponent: `(1 - |z.k_i - s|) / tau`
//! * negative terms (other prototypes, different-class samples): `z.n / tau`
//! * soft-positive terms (same-class samples, the anchor's shuffled copy):
//!   `|z.p - s_p| / tau` with `s_p = s` for same-class and `s_shuf` for the
//!   shuffled copy
//!
//! The loss is `-log(exp(num) / (exp(num) + sum of denominator terms))`,
//! evaluated through a max-shifted log-sum-exp so small temperatures stay
//! finite. Gradients are exact analytic derivatives with respect to every
//! participating vector; the subgradient of `|x|` at `x = 0` is taken as 0.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::feature::{FeatureMatrix, FeatureVector, PrototypeBank};
use crate::linalg::{self, Mat};
use crate::math;
use crate::Result;

/// Which of the three objectives to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LossMode {
    #[cfg_attr(feature = "serde", serde(rename = "PL"))]
    Pl,
    #[cfg_attr(feature = "serde", serde(rename = "PSL"))]
    Psl,
    #[cfg_attr(feature = "serde", serde(rename = "PSL_CT"))]
    PslCt,
}

/// Temperature and target-similarity hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossConfig {
    /// Temperature `tau > 0`.
    pub tau: f64,
    /// Target similarity `s` in (0, 1] for the prototype and same-class terms.
    pub s: f64,
    /// Target similarity for the shuffled soft positive; defaults to `s`.
    pub s_shuf: f64,
}

impl LossConfig {
    pub fn new(tau: f64, s: f64) -> Self {
        Self { tau, s, s_shuf: s }
    }

    pub fn with_s_shuf(mut self, s_shuf: f64) -> Self {
        self.s_shuf = s_shuf;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidConfig {
                field: "tau",
                reason: alloc::format!("must be positive and finite, got {}", self.tau),
            });
        }
        for (field, v) in [("s", self.s), ("s_shuf", self.s_shuf)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig {
                    field,
                    reason: alloc::format!("must lie in (0, 1], got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Contrast sets for a single anchor: in-batch negatives `Q_ns`, same-class
/// soft positives `Q_sc`, and the anchor's shuffled copy `Q_shuf`.
#[derive(Debug, Clone, Default)]
pub struct ContrastSets {
    pub negatives: Vec<FeatureVector>,
    pub same_class: Vec<FeatureVector>,
    pub shuffled: Option<FeatureVector>,
}

impl ContrastSets {
    pub fn is_empty(&self) -> bool {
        self.negatives.is_empty() && self.same_class.is_empty() && self.shuffled.is_none()
    }
}

/// Loss value plus exact gradients for every participating vector.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    pub grad_anchor: Vec<f64>,
    /// Full `N x d` prototype gradient (rows for untouched classes are zero).
    pub grad_prototypes: Mat,
    pub grad_negatives: Vec<Vec<f64>>,
    pub grad_same_class: Vec<Vec<f64>>,
    pub grad_shuffled: Option<Vec<f64>>,
}

/// Batch-mean loss with gradients accumulated across every role each
/// vector plays (anchor, negative, soft positive).
#[derive(Debug, Clone)]
pub struct BatchLossOutput {
    pub value: f64,
    pub grad_features: Mat,
    pub grad_shuffled: Option<Mat>,
    pub grad_prototypes: Mat,
}

/// Unchecked numerical kernel shared by the public loss operations.
///
/// Inputs are raw slices and are not validated; this is the seam used for
/// finite-difference verification, where perturbed points leave the unit
/// sphere by more than the API tolerance. `negatives`/`same_class`/`shuffled`
/// are ignored unless `mode` is [`LossMode::PslCt`].
pub fn loss_kernel(
    mode: LossMode,
    z: &[f64],
    label: usize,
    prototypes: &Mat,
    negatives: &[&[f64]],
    same_class: &[&[f64]],
    shuffled: Option<&[f64]>,
    cfg: &LossConfig,
) -> LossOutput {
    let dim = z.len();
    let num_classes = prototypes.rows();
    let tau = cfg.tau;

    let (negatives, same_class, shuffled) = match mode {
        LossMode::Pl | LossMode::Psl => (&[][..], &[][..], None),
        LossMode::PslCt => (negatives, same_class, shuffled),
    };

    // Exponents in a fixed order: numerator, other prototypes, extra
    // negatives, same-class soft positives, shuffled soft positive.
    let term_count = 1 + (num_classes - 1) + negatives.len() + same_class.len()
        + usize::from(shuffled.is_some());
    let mut exponents = Vec::with_capacity(term_count);
    // d(exponent)/d(dot) for each term, in the same order.
    let mut dot_coeffs = Vec::with_capacity(term_count);

    let c0 = linalg::dot(z, prototypes.row(label));
    match mode {
        LossMode::Pl => {
            exponents.push(c0 / tau);
            dot_coeffs.push(1.0 / tau);
        }
        LossMode::Psl | LossMode::PslCt => {
            exponents.push((1.0 - math::abs(c0 - cfg.s)) / tau);
            dot_coeffs.push(-math::sign(c0 - cfg.s) / tau);
        }
    }

    for j in 0..num_classes {
        if j == label {
            continue;
        }
        exponents.push(linalg::dot(z, prototypes.row(j)) / tau);
        dot_coeffs.push(1.0 / tau);
    }
    for n in negatives {
        exponents.push(linalg::dot(z, n) / tau);
        dot_coeffs.push(1.0 / tau);
    }
    for p in same_class {
        let c = linalg::dot(z, p);
        exponents.push(math::abs(c - cfg.s) / tau);
        dot_coeffs.push(math::sign(c - cfg.s) / tau);
    }
    if let Some(q) = shuffled {
        let c = linalg::dot(z, q);
        exponents.push(math::abs(c - cfg.s_shuf) / tau);
        dot_coeffs.push(math::sign(c - cfg.s_shuf) / tau);
    }

    let lse = math::log_sum_exp(&exponents);
    let value = lse - exponents[0];

    // dL/d(exponent_j) is softmax_j, minus 1 for the numerator term.
    let mut grad_anchor = vec![0.0; dim];
    let mut grad_prototypes = Mat::zeros(num_classes, dim);
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    let mut grad_same_class = Vec::with_capacity(same_class.len());
    let mut grad_shuffled = None;

    let mut term = 0;
    let mut coeff_for = |idx: usize, exp_val: f64| -> f64 {
        let softmax = math::exp(exp_val - lse);
        let dl = if idx == 0 { softmax - 1.0 } else { softmax };
        dl * dot_coeffs[idx]
    };

    let coeff = coeff_for(term, exponents[term]);
    linalg::axpy(coeff, prototypes.row(label), &mut grad_anchor);
    linalg::axpy(coeff, z, grad_prototypes.row_mut(label));
    term += 1;

    for j in 0..num_classes {
        if j == label {
            continue;
        }
        let coeff = coeff_for(term, exponents[term]);
        linalg::axpy(coeff, prototypes.row(j), &mut grad_anchor);
        linalg::axpy(coeff, z, grad_prototypes.row_mut(j));
        term += 1;
    }
    for n in negatives {
        let coeff = coeff_for(term, exponents[term]);
        linalg::axpy(coeff, n, &mut grad_anchor);
        let mut g = vec![0.0; dim];
        linalg::axpy(coeff, z, &mut g);
        grad_negatives.push(g);
        term += 1;
    }
    for p in same_class {
        let coeff = coeff_for(term, exponents[term]);
        linalg::axpy(coeff, p, &mut grad_anchor);
        let mut g = vec![0.0; dim];
        linalg::axpy(coeff, z, &mut g);
        grad_same_class.push(g);
        term += 1;
    }
    if let Some(q) = shuffled {
        let coeff = coeff_for(term, exponents[term]);
        linalg::axpy(coeff, q, &mut grad_anchor);
        let mut g = vec![0.0; dim];
        linalg::axpy(coeff, z, &mut g);
        grad_shuffled = Some(g);
    }

    LossOutput {
        value,
        grad_anchor,
        grad_prototypes,
        grad_negatives,
        grad_same_class,
        grad_shuffled,
    }
}

fn validate_anchor(z: &FeatureVector, label: usize, bank: &PrototypeBank) -> Result<()> {
    bank.check_label(label)?;
    if z.dim() != bank.dim() {
        return Err(Error::ShapeMismatch {
            context: "anchor dimension vs prototype dimension",
            expected: bank.dim(),
            actual: z.dim(),
        });
    }
    Ok(())
}

/// PL loss: softmax cross-entropy over cosine similarities to the prototypes.
pub fn pl_loss(
    z: &FeatureVector,
    label: usize,
    bank: &PrototypeBank,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.validate()?;
    validate_anchor(z, label, bank)?;
    Ok(loss_kernel(
        LossMode::Pl,
        z.values(),
        label,
        bank.as_mat(),
        &[],
        &[],
        None,
        cfg,
    ))
}

/// PSL loss: the numerator targets similarity `s` instead of 1.
pub fn psl_loss(
    z: &FeatureVector,
    label: usize,
    bank: &PrototypeBank,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.validate()?;
    validate_anchor(z, label, bank)?;
    Ok(loss_kernel(
        LossMode::Psl,
        z.values(),
        label,
        bank.as_mat(),
        &[],
        &[],
        None,
        cfg,
    ))
}

/// PSL-CT loss: PSL plus in-batch negatives and soft positives in the
/// denominator.
pub fn psl_ct_loss(
    z: &FeatureVector,
    label: usize,
    bank: &PrototypeBank,
    contrasts: &ContrastSets,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    cfg.validate()?;
    validate_anchor(z, label, bank)?;
    let dim = z.dim();
    for v in contrasts
        .negatives
        .iter()
        .chain(contrasts.same_class.iter())
        .chain(contrasts.shuffled.iter())
    {
        v.check_dim(dim)?;
    }
    let negatives: Vec<&[f64]> = contrasts.negatives.iter().map(|v| v.values()).collect();
    let same_class: Vec<&[f64]> = contrasts.same_class.iter().map(|v| v.values()).collect();
    Ok(loss_kernel(
        LossMode::PslCt,
        z.values(),
        label,
        bank.as_mat(),
        &negatives,
        &same_class,
        contrasts.shuffled.as_ref().map(|v| v.values()),
        cfg,
    ))
}

/// Mean per-anchor loss over a mini-batch.
///
/// Under [`LossMode::PslCt`] each anchor's negatives are the other-label rows
/// of `features`, its soft positives the same-label rows excluding itself,
/// plus its own row of `shuffled_features` when provided. Shuffled rows never
/// act as anchors and never enter other anchors' contrast sets. Gradients are
/// accumulated across every role a row plays and scaled by `1 / batch`.
pub fn batch_loss(
    features: &FeatureMatrix,
    labels: &[usize],
    shuffled_features: Option<&FeatureMatrix>,
    bank: &PrototypeBank,
    cfg: &LossConfig,
    mode: LossMode,
) -> Result<BatchLossOutput> {
    cfg.validate()?;
    let batch = features.rows();
    if batch == 0 {
        return Err(Error::EmptyInput("batch_loss features"));
    }
    if labels.len() != batch {
        return Err(Error::ShapeMismatch {
            context: "batch_loss labels vs features rows",
            expected: batch,
            actual: labels.len(),
        });
    }
    if features.dim() != bank.dim() {
        return Err(Error::ShapeMismatch {
            context: "batch_loss feature dimension vs prototypes",
            expected: bank.dim(),
            actual: features.dim(),
        });
    }
    features.check_rows_unit_norm()?;
    if let Some(sh) = shuffled_features {
        if sh.rows() != batch || sh.dim() != features.dim() {
            return Err(Error::ShapeMismatch {
                context: "batch_loss shuffled_features shape",
                expected: batch,
                actual: sh.rows(),
            });
        }
        sh.check_rows_unit_norm()?;
    }
    for &label in labels {
        bank.check_label(label)?;
    }

    let dim = features.dim();
    let mut value = 0.0;
    let mut grad_features = Mat::zeros(batch, dim);
    let mut grad_prototypes = Mat::zeros(bank.num_classes(), dim);
    let mut grad_shuffled = shuffled_features.map(|_| Mat::zeros(batch, dim));

    let mut neg_idx: Vec<usize> = Vec::with_capacity(batch);
    let mut pos_idx: Vec<usize> = Vec::with_capacity(batch);
    for anchor in 0..batch {
        neg_idx.clear();
        pos_idx.clear();
        let label = labels[anchor];
        if mode == LossMode::PslCt {
            for other in 0..batch {
                if labels[other] != label {
                    neg_idx.push(other);
                } else if other != anchor {
                    pos_idx.push(other);
                }
            }
        }
        let negatives: Vec<&[f64]> = neg_idx.iter().map(|&r| features.row(r)).collect();
        let same_class: Vec<&[f64]> = pos_idx.iter().map(|&r| features.row(r)).collect();
        let shuffled = match mode {
            LossMode::PslCt => shuffled_features.map(|sh| sh.row(anchor)),
            _ => None,
        };

        let out = loss_kernel(
            mode,
            features.row(anchor),
            label,
            bank.as_mat(),
            &negatives,
            &same_class,
            shuffled,
            cfg,
        );

        value += out.value;
        linalg::axpy(1.0, &out.grad_anchor, grad_features.row_mut(anchor));
        grad_prototypes.axpy(1.0, &out.grad_prototypes);
        for (slot, g) in neg_idx.iter().zip(out.grad_negatives.iter()) {
            linalg::axpy(1.0, g, grad_features.row_mut(*slot));
        }
        for (slot, g) in pos_idx.iter().zip(out.grad_same_class.iter()) {
            linalg::axpy(1.0, g, grad_features.row_mut(*slot));
        }
        if let (Some(gm), Some(g)) = (grad_shuffled.as_mut(), out.grad_shuffled.as_ref()) {
            linalg::axpy(1.0, g, gm.row_mut(anchor));
        }
    }

    let inv = 1.0 / batch as f64;
    value *= inv;
    grad_features.scale(inv);
    grad_prototypes.scale(inv);
    if let Some(gm) = grad_shuffled.as_mut() {
        gm.scale(inv);
    }

    Ok(BatchLossOutput {
        value,
        grad_features,
        grad_shuffled,
        grad_prototypes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn bank_2d() -> PrototypeBank {
        PrototypeBank::new(Mat::from_vec(vec![1.0, 0.0, 0.0, 1.0], 2, 2).unwrap()).unwrap()
    }

    fn e1() -> FeatureVector {
        FeatureVector::new(vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn pl_anchor_on_prototype() {
        let cfg = LossConfig::new(1.0, 1.0);
        let out = pl_loss(&e1(), 0, &bank_2d(), &cfg).unwrap();
        // -log(e / (e + 1)) = log(1 + e^{-1})
        assert_abs_diff_eq!(out.value, math::ln(1.0 + math::exp(-1.0)), epsilon = 1e-12);
        assert!(out.value > 0.0);
    }

    #[test]
    fn pl_sharp_temperature() {
        let cfg = LossConfig::new(0.1, 1.0);
        let out = pl_loss(&e1(), 0, &bank_2d(), &cfg).unwrap();
        assert_abs_diff_eq!(out.value, math::ln(1.0 + math::exp(-10.0)), epsilon = 1e-15);
    }

    #[test]
    fn psl_worked_example() {
        // z = k_0, s = 0.8: numerator exponent (1 - 0.2)/1, one negative at 0.
        let cfg = LossConfig::new(1.0, 0.8);
        let out = psl_loss(&e1(), 0, &bank_2d(), &cfg).unwrap();
        assert_abs_diff_eq!(out.value, math::ln(1.0 + math::exp(-0.8)), epsilon = 1e-12);
        assert_abs_diff_eq!(out.value, 0.37110, epsilon = 1e-5);
    }

    #[test]
    fn psl_ct_worked_example() {
        // One same-class contrast at similarity 1, s = s_shuf = 0.8:
        // denominator = e^{0.8} + e^{0} + e^{0.2};
        // -log(e^{0.8} / (e^{0.8} + 1 + e^{0.2})) = log(1 + e^{-0.8} + e^{-0.6}).
        let cfg = LossConfig::new(1.0, 0.8);
        let contrasts = ContrastSets {
            negatives: vec![],
            same_class: vec![e1()],
            shuffled: None,
        };
        let out = psl_ct_loss(&e1(), 0, &bank_2d(), &contrasts, &cfg).unwrap();
        let expected = math::ln(1.0 + math::exp(-0.8) + math::exp(-0.6));
        assert_abs_diff_eq!(out.value, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.value, 0.6922220202061113, epsilon = 1e-12);
    }

    #[test]
    fn psl_ct_empty_contrasts_is_psl() {
        let cfg = LossConfig::new(0.7, 0.6);
        let z = FeatureVector::normalized(vec![0.3, -0.9]).unwrap();
        let a = psl_loss(&z, 1, &bank_2d(), &cfg).unwrap();
        let b = psl_ct_loss(&z, 1, &bank_2d(), &ContrastSets::default(), &cfg).unwrap();
        assert_abs_diff_eq!(a.value, b.value, epsilon = 1e-15);
        for (x, y) in a.grad_anchor.iter().zip(b.grad_anchor.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn validation_errors() {
        let cfg = LossConfig::new(1.0, 1.0);
        let bank = bank_2d();
        assert!(matches!(
            pl_loss(&e1(), 2, &bank, &cfg),
            Err(Error::LabelOutOfRange { .. })
        ));
        assert!(LossConfig::new(0.0, 1.0).validate().is_err());
        assert!(LossConfig::new(1.0, 0.0).validate().is_err());
        assert!(LossConfig::new(1.0, 1.1).validate().is_err());
        assert!(LossConfig::new(1.0, 0.8).with_s_shuf(2.0).validate().is_err());
    }

    #[test]
    fn batch_singleton_psl_ct_equals_psl() {
        let cfg = LossConfig::new(0.5, 0.8);
        let bank = bank_2d();
        let z = FeatureVector::normalized(vec![0.6, 0.8]).unwrap();
        let features = FeatureMatrix::from_vectors(&[z.clone()]).unwrap();
        let batch = batch_loss(&features, &[0], None, &bank, &cfg, LossMode::PslCt).unwrap();
        let single = psl_loss(&z, 0, &bank, &cfg).unwrap();
        assert_abs_diff_eq!(batch.value, single.value, epsilon = 1e-15);
    }

    #[test]
    fn batch_pl_is_mean_of_pl() {
        let cfg = LossConfig::new(0.5, 1.0);
        let bank = bank_2d();
        let a = FeatureVector::normalized(vec![0.6, 0.8]).unwrap();
        let b = FeatureVector::normalized(vec![0.9, -0.1]).unwrap();
        let features = FeatureMatrix::from_vectors(&[a.clone(), b.clone()]).unwrap();
        let batch = batch_loss(&features, &[0, 0], None, &bank, &cfg, LossMode::Pl).unwrap();
        let la = pl_loss(&a, 0, &bank, &cfg).unwrap().value;
        let lb = pl_loss(&b, 0, &bank, &cfg).unwrap().value;
        assert_abs_diff_eq!(batch.value, 0.5 * (la + lb), epsilon = 1e-15);
    }

    #[test]
    fn batch_shape_mismatch() {
        let cfg = LossConfig::new(0.5, 1.0);
        let bank = bank_2d();
        let features = FeatureMatrix::from_vectors(&[e1()]).unwrap();
        assert!(matches!(
            batch_loss(&features, &[0, 1], None, &bank, &cfg, LossMode::Pl),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn tiny_temperature_stays_finite() {
        let cfg = LossConfig::new(0.02, 0.8);
        let bank = bank_2d();
        let z = FeatureVector::normalized(vec![0.9, 0.43588989435]).unwrap();
        let out = psl_loss(&z, 0, &bank, &cfg).unwrap();
        assert!(out.value.is_finite());
        assert!(out.grad_anchor.iter().all(|g| g.is_finite()));
    }
}
