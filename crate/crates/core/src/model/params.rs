use rand::Rng;

use crate::autodiff::{Tape, Var};
use crate::matrix::Matrix;

/// Negative slope of the attention LeakyReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

/// One graph-attention layer. Generic over the storage so the same structure
/// holds concrete weights (`Matrix`) or their handles on a tape (`Var`).
#[derive(Debug, Clone, PartialEq)]
pub struct GatLayerParams<T = Matrix> {
    /// `in_dim x (heads · head_dim)`.
    pub weight: T,
    /// `heads x head_dim`, applied to the message source.
    pub attn_src: T,
    /// `heads x head_dim`, applied to the receiving node.
    pub attn_dst: T,
    /// Row vector over the layer output.
    pub bias: T,
    pub heads: usize,
    /// Concatenate head outputs, otherwise average them.
    pub concat_heads: bool,
    pub leaky_slope: f64,
}

/// Two-layer MLP mapping encoder output to feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector<T = Matrix> {
    pub w1: T,
    pub b1: T,
    pub w2: T,
    pub b2: T,
}

/// All learnable weights of the auto-encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T = Matrix> {
    pub encoder_layers: Vec<GatLayerParams<T>>,
    /// Linear re-embedding of the encoder output before decoding.
    pub enc_dec_bridge: T,
    pub decoder_layer: GatLayerParams<T>,
    pub projector: Projector<T>,
}

/// Layer sizes used to initialise [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub num_layers: usize,
    pub decoder_heads: usize,
}

impl<T> GatLayerParams<T> {
    fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> GatLayerParams<U> {
        GatLayerParams {
            weight: f(&self.weight),
            attn_src: f(&self.attn_src),
            attn_dst: f(&self.attn_dst),
            bias: f(&self.bias),
            heads: self.heads,
            concat_heads: self.concat_heads,
            leaky_slope: self.leaky_slope,
        }
    }

    fn tensors(&self) -> [&T; 4] {
        [&self.weight, &self.attn_src, &self.attn_dst, &self.bias]
    }

    fn tensors_mut(&mut self) -> [&mut T; 4] {
        [
            &mut self.weight,
            &mut self.attn_src,
            &mut self.attn_dst,
            &mut self.bias,
        ]
    }
}

impl GatLayerParams {
    pub fn init<R: Rng + ?Sized>(
        in_dim: usize,
        head_dim: usize,
        heads: usize,
        concat_heads: bool,
        rng: &mut R,
    ) -> Self {
        let out_dim = if concat_heads { heads * head_dim } else { head_dim };
        Self {
            weight: Matrix::xavier(in_dim, heads * head_dim, rng),
            attn_src: Matrix::xavier(heads, head_dim, rng),
            attn_dst: Matrix::xavier(heads, head_dim, rng),
            bias: Matrix::zeros(1, out_dim),
            heads,
            concat_heads,
            leaky_slope: LEAKY_SLOPE,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.attn_src.cols()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.bias.cols()
    }
}

impl<T> Projector<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Projector<U> {
        Projector {
            w1: f(&self.w1),
            b1: f(&self.b1),
            w2: f(&self.w2),
            b2: f(&self.b2),
        }
    }
}

impl<T> ModelParams<T> {
    /// Applies `f` to every tensor, keeping the structure.
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> ModelParams<U> {
        ModelParams {
            encoder_layers: self.encoder_layers.iter().map(|l| l.map(&mut f)).collect(),
            enc_dec_bridge: f(&self.enc_dec_bridge),
            decoder_layer: self.decoder_layer.map(&mut f),
            projector: self.projector.map(f),
        }
    }

    /// Tensors in declaration order: encoder layers (weight, attn_src,
    /// attn_dst, bias), bridge, decoder layer, projector (w1, b1, w2, b2).
    pub fn tensors(&self) -> Vec<&T> {
        let mut out = Vec::new();
        for l in &self.encoder_layers {
            out.extend(l.tensors());
        }
        out.push(&self.enc_dec_bridge);
        out.extend(self.decoder_layer.tensors());
        let p = &self.projector;
        out.extend([&p.w1, &p.b1, &p.w2, &p.b2]);
        out
    }

    /// Mutable tensors, same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut T> {
        let mut out = Vec::new();
        for l in &mut self.encoder_layers {
            out.extend(l.tensors_mut());
        }
        out.push(&mut self.enc_dec_bridge);
        out.extend(self.decoder_layer.tensors_mut());
        let p = &mut self.projector;
        out.extend([&mut p.w1, &mut p.b1, &mut p.w2, &mut p.b2]);
        out
    }
}

impl ModelParams {
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let Architecture {
            in_dim,
            hidden_dim,
            heads,
            num_layers,
            decoder_heads,
        } = *arch;
        assert!(num_layers >= 1, "encoder needs at least one layer");
        assert!(heads >= 1 && decoder_heads >= 1);
        assert_eq!(hidden_dim % heads, 0, "hidden_dim must split evenly over heads");
        let mut encoder_layers = Vec::with_capacity(num_layers);
        let mut dim = in_dim;
        for layer in 0..num_layers {
            let last = layer + 1 == num_layers;
            let params = if last {
                GatLayerParams::init(dim, hidden_dim, heads, false, rng)
            } else {
                GatLayerParams::init(dim, hidden_dim / heads, heads, true, rng)
            };
            dim = params.out_dim();
            encoder_layers.push(params);
        }
        let enc_dec_bridge = Matrix::xavier(hidden_dim, hidden_dim, rng);
        let decoder_layer = GatLayerParams::init(hidden_dim, in_dim, decoder_heads, false, rng);
        let projector = Projector {
            w1: Matrix::xavier(hidden_dim, hidden_dim, rng),
            b1: Matrix::zeros(1, hidden_dim),
            w2: Matrix::xavier(hidden_dim, in_dim, rng),
            b2: Matrix::zeros(1, in_dim),
        };
        Self {
            encoder_layers,
            enc_dec_bridge,
            decoder_layer,
            projector,
        }
    }

    /// Registers every tensor as a trainable leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> ModelParams<Var> {
        self.map(|m| tape.param(m.clone()))
    }

    pub fn hidden_dim(&self) -> usize {
        self.enc_dec_bridge.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.encoder_layers[0].in_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }
}
