//! Two-layer perceptron on the flattened frame sequence, with manual
//! backpropagation through the L2 output normalization.
//!
//! The flattening keeps frame order, so permuting frames changes the input
//! and an order-sensitive mapping is learnable.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::feature::FeatureVector;
use crate::linalg::{self, Mat};
use crate::math;
use crate::synth::SequenceSample;
use crate::Result;

/// Weights of the encoder `z = normalize(W2 relu(W1 x + b1) + b2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// Pre-activation of the hidden layer.
    pub hidden_pre: Vec<f64>,
    /// relu(hidden_pre).
    pub hidden: Vec<f64>,
    /// Pre-normalization output.
    pub out_pre: Vec<f64>,
    pub out_norm: f64,
    /// Normalized embedding.
    pub z: Vec<f64>,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub w1: Mat,
    pub b1: Vec<f64>,
    pub w2: Mat,
    pub b2: Vec<f64>,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Self {
            w1: Mat::zeros(params.w1.rows(), params.w1.cols()),
            b1: vec![0.0; params.b1.len()],
            w2: Mat::zeros(params.w2.rows(), params.w2.cols()),
            b2: vec![0.0; params.b2.len()],
        }
    }

    pub fn reset(&mut self) {
        self.w1.fill(0.0);
        self.b1.iter_mut().for_each(|v| *v = 0.0);
        self.w2.fill(0.0);
        self.b2.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.w1.scale(alpha);
        linalg::scale(&mut self.b1, alpha);
        self.w2.scale(alpha);
        linalg::scale(&mut self.b2, alpha);
    }
}

impl EncoderParams {
    /// He-normal first layer, Xavier-normal second, zero biases.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, embed_dim: usize, rng: &mut R) -> Self {
        let mut w1 = Mat::zeros(hidden_dim, input_dim);
        let s1 = math::sqrt(2.0 / input_dim as f64);
        for v in w1.data_mut() {
            *v = s1 * rng.sample::<f64, _>(StandardNormal);
        }
        let mut w2 = Mat::zeros(embed_dim, hidden_dim);
        let s2 = math::sqrt(1.0 / hidden_dim as f64);
        for v in w2.data_mut() {
            *v = s2 * rng.sample::<f64, _>(StandardNormal);
        }
        Self {
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; embed_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.w2.rows()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::ShapeMismatch {
                context: "encoder input dimension",
                expected: self.input_dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Forward pass keeping every intermediate needed by [`Self::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<EncoderCache> {
        self.check_input(input.len())?;
        let h = self.hidden_dim();
        let d = self.embed_dim();

        let mut hidden_pre = vec![0.0; h];
        self.w1.matvec(input, &mut hidden_pre);
        for (v, b) in hidden_pre.iter_mut().zip(&self.b1) {
            *v += b;
        }
        let hidden: Vec<f64> = hidden_pre.iter().map(|&v| v.max(0.0)).collect();

        let mut out_pre = vec![0.0; d];
        self.w2.matvec(&hidden, &mut out_pre);
        for (v, b) in out_pre.iter_mut().zip(&self.b2) {
            *v += b;
        }

        let out_norm = linalg::norm(&out_pre);
        if out_norm < 1e-300 {
            return Err(Error::ZeroNorm { norm: out_norm });
        }
        let z: Vec<f64> = out_pre.iter().map(|&v| v / out_norm).collect();
        Ok(EncoderCache {
            hidden_pre,
            hidden,
            out_pre,
            out_norm,
            z,
        })
    }

    /// Embeds a sequence sample; the result is unit-norm by construction.
    pub fn encode(&self, sample: &SequenceSample) -> Result<FeatureVector> {
        let cache = self.forward(sample.flattened())?;
        FeatureVector::new(cache.z)
    }

    /// Accumulates parameter gradients for one sample given `dL/dz`.
    ///
    /// The normalization is differentiated exactly:
    /// `dL/dv = (I - z z^T) (dL/dz) / ||v||` with `v` the pre-norm output.
    pub fn backward(
        &self,
        input: &[f64],
        cache: &EncoderCache,
        grad_z: &[f64],
        grads: &mut EncoderGrads,
    ) {
        debug_assert_eq!(grad_z.len(), self.embed_dim());

        let zdot = linalg::dot(&cache.z, grad_z);
        let grad_out: Vec<f64> = cache
            .z
            .iter()
            .zip(grad_z)
            .map(|(&zi, &gi)| (gi - zdot * zi) / cache.out_norm)
            .collect();

        grads.w2.add_outer(1.0, &grad_out, &cache.hidden);
        linalg::axpy(1.0, &grad_out, &mut grads.b2);

        let mut grad_hidden = vec![0.0; self.hidden_dim()];
        self.w2.matvec_t(&grad_out, &mut grad_hidden);
        for (g, &pre) in grad_hidden.iter_mut().zip(&cache.hidden_pre) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }

        grads.w1.add_outer(1.0, &grad_hidden, input);
        linalg::axpy(1.0, &grad_hidden, &mut grads.b1);
    }
}
