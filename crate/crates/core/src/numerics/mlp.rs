use serde::{Deserialize, Serialize};

use super::{Matrix, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// Dense layer `y = act(x · Wᵀ + b)` with `W` stored as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// A stack of dense layers whose dimensions chain and whose last layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Layer>", into = "Vec<Layer>")]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl TryFrom<Vec<Layer>> for MlpParams {
    type Error = Error;

    fn try_from(layers: Vec<Layer>) -> Result<Self> {
        MlpParams::new(layers)
    }
}

impl From<MlpParams> for Vec<Layer> {
    fn from(p: MlpParams) -> Self {
        p.layers
    }
}

/// Activations recorded by [`MlpParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Matrix>,
    /// Pre-activation of each layer.
    pre: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<LayerGrad>,
}

impl MlpGrads {
    /// Gradient tensors in the same order as [`MlpParams::tensors`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn into_tensors(self) -> Vec<Vec<f64>> {
        self.layers
            .into_iter()
            .flat_map(|l| [l.weight.into_vec(), l.bias])
            .collect()
    }
}

impl MlpParams {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        };
        if last.activation != Activation::Linear {
            return Err(Error::Config("final MLP layer must be linear".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return Err(Error::shape(
                    "MlpParams::new",
                    format!("bias of length {} in layer {i}", l.out_dim()),
                    l.bias.len(),
                ));
            }
            if l.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("MlpParams::new"));
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::shape(
                    "MlpParams::new",
                    format!("layer {} input width {}", i + 1, w[0].out_dim()),
                    w[1].in_dim(),
                ));
            }
        }
        Ok(MlpParams { layers })
    }

    /// Random network with the given layer widths.
    ///
    /// `widths = [in, h1, ..., out]`; hidden layers use `hidden`, the output
    /// layer is linear. Weights are uniform in `±sqrt(6 / (fan_in + fan_out))`,
    /// biases start at zero.
    pub fn init(widths: &[usize], hidden: Activation, rng: &mut Rng) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        let n_layers = widths.len() - 1;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.uniform_in(-limit, limit))
                    .collect();
                Layer {
                    weight: Matrix::from_vec(fan_out, fan_in, data).expect("sized above"),
                    bias: vec![0.0; fan_out],
                    activation: if i + 1 == n_layers {
                        Activation::Linear
                    } else {
                        hidden
                    },
                }
            })
            .collect();
        MlpParams::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// Layer widths `[in, h1, ..., out]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    /// Evaluates the network on a batch (one row per sample).
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape("mlp forward", self.input_dim(), x.cols()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let mut z = h.matmul_nt(&layer.weight)?;
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let out = z.map(|v| layer.activation.apply(v));
            inputs.push(h);
            pre.push(z);
            h = out;
        }
        Ok((h, ForwardCache { inputs, pre }))
    }

    /// Reverse-mode pass: returns parameter gradients and the gradient w.r.t. the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &Matrix,
    ) -> Result<(MlpGrads, Matrix)> {
        if cache.pre.len() != self.layers.len() {
            return Err(Error::shape(
                "mlp backward",
                format!("cache for {} layers", self.layers.len()),
                cache.pre.len(),
            ));
        }
        let last_pre = cache.pre.last().expect("non-empty");
        if grad_output.shape() != last_pre.shape() {
            return Err(Error::shape(
                "mlp backward",
                format!("{:?}", last_pre.shape()),
                format!("{:?}", grad_output.shape()),
            ));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_output.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let pre = &cache.pre[i];
            if layer.activation != Activation::Linear {
                for (gv, &p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    *gv *= layer.activation.derivative(p);
                }
            }
            let weight = g.matmul_tn(&cache.inputs[i])?;
            let mut bias = vec![0.0; layer.out_dim()];
            for r in 0..g.rows() {
                for (b, v) in bias.iter_mut().zip(g.row(r)) {
                    *b += v;
                }
            }
            let g_in = g.matmul(&layer.weight)?;
            grads.push(LayerGrad { weight, bias });
            g = g_in;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, g))
    }
}
