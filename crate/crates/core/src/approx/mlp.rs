//! Fully connected networks with hand-written forward and backward passes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Architecture of a dense network: layer widths (input first, output last)
/// and one activation per hidden layer. The output layer is always linear,
/// so Q-values stay unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    layer_widths: Vec<usize>,
    activations: Vec<Activation>,
}

impl MlpSpec {
    /// Spec with the same activation on every hidden layer.
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Self {
        let hidden = layer_widths.len().saturating_sub(2);
        Self::with_activations(layer_widths, vec![activation; hidden])
    }

    pub fn with_activations(layer_widths: Vec<usize>, activations: Vec<Activation>) -> Self {
        assert!(layer_widths.len() >= 2, "need at least input and output widths");
        assert!(layer_widths.iter().all(|&w| w > 0), "layer widths must be positive");
        assert_eq!(
            activations.len(),
            layer_widths.len() - 2,
            "one activation per hidden layer"
        );
        Self { layer_widths, activations }
    }

    pub fn layer_widths(&self) -> &[usize] {
        &self.layer_widths
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_widths.len() - 1
    }

    fn activation_of_layer(&self, layer: usize) -> Activation {
        // The final layer is linear.
        if layer + 1 == self.layer_count() {
            Activation::Identity
        } else {
            self.activations[layer]
        }
    }

    pub fn param_count(&self) -> usize {
        self.layer_widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    pub fn layout(&self) -> Layout {
        let mut layers = Vec::with_capacity(self.layer_count());
        let mut offset = 0;
        for w in self.layer_widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            layers.push(LayerLayout { weight_offset: offset, bias_offset: offset + fan_out * fan_in, fan_in, fan_out });
            offset += fan_out * (fan_in + 1);
        }
        Layout { layers, total: offset }
    }

    /// Seeded uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for both
    /// weights and biases of each layer.
    pub fn init_params(&self, seed: u64) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(self.param_count());
        for w in self.layer_widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let count = w[1] * (w[0] + 1);
            values.extend((0..count).map(|_| rng.gen_range(-bound..=bound)));
        }
        ParamVector::new(values)
    }
}

/// Deterministic flat placement of every weight and bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    layers: Vec<LayerLayout>,
    total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LayerLayout {
    weight_offset: usize,
    bias_offset: usize,
    fan_in: usize,
    fan_out: usize,
}

impl Layout {
    pub fn total(&self) -> usize {
        self.total
    }

    /// Flat index of weight (row, col) of a layer, row-major with `row`
    /// indexing the output unit.
    pub fn weight_index(&self, layer: usize, row: usize, col: usize) -> usize {
        let l = &self.layers[layer];
        debug_assert!(row < l.fan_out && col < l.fan_in);
        l.weight_offset + row * l.fan_in + col
    }

    pub fn bias_index(&self, layer: usize, row: usize) -> usize {
        let l = &self.layers[layer];
        debug_assert!(row < l.fan_out);
        l.bias_offset + row
    }
}

/// Flat parameter storage for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }
}

/// Activations of the final layer for the given input.
///
/// Panics on an input-width mismatch; shapes are a programmer contract.
pub fn mlp_forward(spec: &MlpSpec, params: &ParamVector, input: &[f64]) -> Vec<f64> {
    assert_eq!(input.len(), spec.input_width(), "input width mismatch");
    assert_eq!(params.len(), spec.param_count(), "parameter count mismatch");
    let (output, _, _) = forward_trace(spec, params, input);
    output
}

/// Forward pass that keeps per-layer pre-activations and activations for
/// backpropagation. `activations[0]` is the input itself.
fn forward_trace(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let layout = spec.layout();
    let p = params.as_slice();
    let mut activations: Vec<Vec<f64>> = vec![input.to_vec()];
    let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(spec.layer_count());
    for layer in 0..spec.layer_count() {
        let act_fn = spec.activation_of_layer(layer);
        let l = &layout.layers[layer];
        let x = activations.last().unwrap();
        let mut z = vec![0.0; l.fan_out];
        for (row, z_row) in z.iter_mut().enumerate() {
            let w = &p[l.weight_offset + row * l.fan_in..l.weight_offset + (row + 1) * l.fan_in];
            let mut acc = p[l.bias_offset + row];
            for (wk, xk) in w.iter().zip(x.iter()) {
                acc += wk * xk;
            }
            *z_row = acc;
        }
        let a = z.iter().map(|&v| act_fn.apply(v)).collect();
        pre_activations.push(z);
        activations.push(a);
    }
    (activations.last().unwrap().clone(), activations, pre_activations)
}

/// Gradient of `⟨output, output_grad⟩` with respect to every parameter.
pub fn mlp_backward(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
    output_grad: &[f64],
) -> ParamVector {
    mlp_backward_full(spec, params, input, output_grad).0
}

/// Like [`mlp_backward`] but also returns the gradient with respect to the
/// input, which the dueling head needs to chain through its shared trunk.
pub fn mlp_backward_full(
    spec: &MlpSpec,
    params: &ParamVector,
    input: &[f64],
    output_grad: &[f64],
) -> (ParamVector, Vec<f64>) {
    assert_eq!(input.len(), spec.input_width(), "input width mismatch");
    assert_eq!(output_grad.len(), spec.output_width(), "output grad width mismatch");
    assert_eq!(params.len(), spec.param_count(), "parameter count mismatch");

    let layout = spec.layout();
    let p = params.as_slice();
    let (_, activations, pre_activations) = forward_trace(spec, params, input);

    let mut grad = ParamVector::zeros(params.len());
    let g = grad.as_mut_slice();
    // delta = d⟨out, g⟩/d(pre-activation of current layer)
    let mut delta: Vec<f64> = output_grad
        .iter()
        .zip(pre_activations.last().unwrap())
        .map(|(&gk, &zk)| gk * spec.activation_of_layer(spec.layer_count() - 1).derivative(zk))
        .collect();

    for layer in (0..spec.layer_count()).rev() {
        let l = &layout.layers[layer];
        let x = &activations[layer];
        for (row, &d) in delta.iter().enumerate() {
            g[l.bias_offset + row] = d;
            let w_row = &mut g[l.weight_offset + row * l.fan_in..l.weight_offset + (row + 1) * l.fan_in];
            for (slot, &xk) in w_row.iter_mut().zip(x.iter()) {
                *slot = d * xk;
            }
        }
        if layer > 0 {
            let act_fn = spec.activation_of_layer(layer - 1);
            let z_prev = &pre_activations[layer - 1];
            let mut next = vec![0.0; l.fan_in];
            for (row, &d) in delta.iter().enumerate() {
                let w = &p[l.weight_offset + row * l.fan_in..l.weight_offset + (row + 1) * l.fan_in];
                for (slot, &wk) in next.iter_mut().zip(w.iter()) {
                    *slot += d * wk;
                }
            }
            for (slot, &z) in next.iter_mut().zip(z_prev.iter()) {
                *slot *= act_fn.derivative(z);
            }
            delta = next;
        } else {
            // Input gradient: W^T delta with no activation on the raw input.
            let mut input_grad = vec![0.0; l.fan_in];
            for (row, &d) in delta.iter().enumerate() {
                let w = &p[l.weight_offset + row * l.fan_in..l.weight_offset + (row + 1) * l.fan_in];
                for (slot, &wk) in input_grad.iter_mut().zip(w.iter()) {
                    *slot += d * wk;
                }
            }
            return (grad, input_grad);
        }
    }
    unreachable!("layer_count >= 1")
}
