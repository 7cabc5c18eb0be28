use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tape::{Tape, Var};

pub const CHECKPOINT_VERSION: &str = "itx-mlp-v1";
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

/// Hidden-layer nonlinearity. The output layer is always affine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
}

impl Default for Activation {
    fn default() -> Self {
        Activation::LeakyRelu { slope: DEFAULT_LEAKY_SLOPE }
    }
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
        }
    }

    fn record(self, tape: &mut Tape, x: Var) -> Var {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::LeakyRelu { slope } => tape.leaky_relu(x, slope),
        }
    }

    fn gain(self) -> f64 {
        let slope = match self {
            Activation::Relu => 0.0,
            Activation::LeakyRelu { slope } => slope,
        };
        (2.0 / (1.0 + slope * slope)).sqrt()
    }
}

/// What is applied to the affine output of the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    #[default]
    Identity,
    /// `z -> -|z|`, so the network output is never positive.
    NegAbs,
}

/// Fully connected network. Weights are stored `fan_in x fan_out` so a
/// batch with one sample per row maps as `X W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    activation: Activation,
    head: Head,
    /// `[W0, b0, W1, b1, ...]`, biases are `1 x fan_out`.
    params: Vec<Array2<f64>>,
}

impl Mlp {
    /// Uniform fan-in init scaled by the activation gain, zero biases.
    pub fn new(layer_dims: &[usize], activation: Activation, head: Head, seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::BadParams(format!("invalid layer dims {layer_dims:?}")));
        }
        if head == Head::NegAbs && layer_dims[layer_dims.len() - 1] != 1 {
            return Err(Error::BadParams("non-positive head needs a scalar output".into()));
        }
        if let Activation::LeakyRelu { slope } = activation {
            if !slope.is_finite() {
                return Err(Error::NonFinite("activation slope"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(2 * (layer_dims.len() - 1));
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = activation.gain() * (3.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..bound));
            params.push(w);
            params.push(Array2::zeros((1, fan_out)));
        }
        Ok(Mlp { layer_dims: layer_dims.to_vec(), activation, head, params })
    }

    /// Scalar potential network `R^dim -> (-inf, 0]`.
    pub fn potential(dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let dims: Vec<usize> = std::iter::once(dim).chain(hidden.iter().copied()).chain([1]).collect();
        Mlp::new(&dims, activation, Head::NegAbs, seed)
    }

    /// Map network `R^dim -> R^dim`.
    pub fn map(dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let dims: Vec<usize> = std::iter::once(dim).chain(hidden.iter().copied()).chain([dim]).collect();
        Mlp::new(&dims, activation, Head::Identity, seed)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layer_dims[self.layer_dims.len() - 1]
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn params(&self) -> &[Array2<f64>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: x.ncols() });
        }
        Ok(())
    }

    /// Forward pass without recording, one sample per row.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let layers = self.layer_dims.len() - 1;
        let mut h = x.clone();
        for l in 0..layers {
            h = h.dot(&self.params[2 * l]) + &self.params[2 * l + 1];
            if l + 1 < layers {
                h.mapv_inplace(|v| self.activation.apply(v));
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteActivation(l));
            }
        }
        if self.head == Head::NegAbs {
            h.mapv_inplace(|v| -v.abs());
        }
        Ok(h)
    }

    /// Push the parameters onto `tape` as leaves, in [`Mlp::params`] order.
    pub fn register(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.iter().map(|p| tape.leaf(p.clone())).collect()
    }

    /// Record the forward pass of `x` using parameter leaves from [`Mlp::register`].
    pub fn record(&self, tape: &mut Tape, params: &[Var], x: Var) -> Result<Var> {
        let (_, cols) = tape.value(x).dim();
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: cols });
        }
        if params.len() != self.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameter handles, got {}",
                self.params.len(),
                params.len()
            )));
        }
        let layers = self.layer_dims.len() - 1;
        let mut h = x;
        for l in 0..layers {
            h = tape.matmul(h, params[2 * l]);
            h = tape.add_row(h, params[2 * l + 1]);
            if l + 1 < layers {
                h = self.activation.record(tape, h);
            }
            if tape.value(h).iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteActivation(l));
            }
        }
        if self.head == Head::NegAbs {
            h = tape.abs(h);
            h = tape.neg(h);
        }
        Ok(h)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION.to_string(),
            layer_dims: self.layer_dims.clone(),
            activation: self.activation,
            head: self.head,
            params: self.params.iter().map(|p| p.iter().copied().collect()).collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {:?}", ck.version)));
        }
        let mut net = Mlp::new(&ck.layer_dims, ck.activation, ck.head, 0)?;
        if ck.params.len() != net.params.len() {
            return Err(Error::Format(format!(
                "expected {} parameter tensors, found {}",
                net.params.len(),
                ck.params.len()
            )));
        }
        for (slot, flat) in net.params.iter_mut().zip(&ck.params) {
            if flat.len() != slot.len() {
                return Err(Error::Format(format!(
                    "parameter tensor of shape {:?} given {} values",
                    slot.dim(),
                    flat.len()
                )));
            }
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("checkpoint parameter"));
            }
            *slot = Array2::from_shape_vec(slot.dim(), flat.clone()).map_err(|e| Error::Format(e.to_string()))?;
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let ck: Checkpoint = serde_json::from_reader(file)?;
        Mlp::from_checkpoint(&ck)
    }
}

/// On-disk network: tensors flattened row-major in `[W0, b0, W1, b1, ...]`
/// order, `W` being `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    #[serde(default)]
    pub head: Head,
    pub params: Vec<Vec<f64>>,
}
