//! Small feedforward networks with hand-written reverse-mode gradients.
//!
//! A network is a chain of dense layers `a_k = act_k(W_k a_{k-1} + b_k)` with a
//! scalar output. Discriminators use a sigmoid output; the radial generator uses
//! an absolute-value output. Everything is batched over the rows of a [`Matrix`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numkit::{axpy, dot, norm1, norm2, Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Relu,
    /// `max(min(x + 1/2, 1), 0)`.
    Ramp,
    Identity,
    /// `|x|`; keeps radial generator outputs non-negative.
    Abs,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
            Activation::Ramp => (x + 0.5).clamp(0.0, 1.0),
            Activation::Identity => x,
            Activation::Abs => x.abs(),
        }
    }

    /// Derivative at pre-activation `x` with output `y`. Kinks get derivative 0.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Ramp => {
                if x > -0.5 && x < 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Pre-activations where the derivative jumps.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            Activation::Relu | Activation::Abs => &[0.0],
            Activation::Ramp => &[-0.5, 0.5],
            Activation::Sigmoid | Activation::Identity => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `out × in`.
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
    pub act: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Every weight and bias i.i.d. `N(0, std²)`.
    GaussianSmall {
        std: f64,
    },
    /// Weights `Uniform(±√(6/(fan_in+fan_out)))`, biases zero.
    Xavier,
    Zero,
}

impl InitScheme {
    /// `N(0, .05)` read as standard deviation 0.05.
    pub const GAUSSIAN_DEFAULT: InitScheme = InitScheme::GaussianSmall { std: 0.05 };
}

/// Per-sample activations recorded by [`Mlp::trace`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    /// Activated output of layer `k`.
    pub fn layer_output(&self, k: usize) -> &Matrix {
        &self.post[k]
    }

    pub fn layer_pre(&self, k: usize) -> &Matrix {
        &self.pre[k]
    }

    /// Network outputs, one per row.
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("non-empty network").as_slice()
    }

    /// Output-layer pre-activations.
    pub fn logits(&self) -> &[f64] {
        self.pre.last().expect("non-empty network").as_slice()
    }

    /// Features seen by the output layer: the penultimate activations, or the raw
    /// input for a network without hidden layers.
    pub fn features(&self) -> &Matrix {
        let l = self.post.len();
        if l >= 2 {
            &self.post[l - 2]
        } else {
            &self.input
        }
    }
}

/// Where the upstream gradient of a backward pass is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seed {
    /// Gradient with respect to the activated output.
    Output,
    /// Gradient with respect to the pre-activation (logit) of the last layer used.
    PreActivation,
}

/// Parameter gradient with the same layout as the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradient {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Option<Vec<f64>>>,
}

impl Gradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| Matrix::zeros(l.out_dim(), l.in_dim()))
                .collect(),
            biases: net
                .layers
                .iter()
                .map(|l| l.bias.as_ref().map(|b| vec![0.0; b.len()]))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &Gradient) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            w.add_scaled(alpha, o).expect("gradient layouts match");
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            if let (Some(b), Some(o)) = (b, o) {
                axpy(alpha, o, b);
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            if let Some(b) = b {
                out.extend_from_slice(b);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&g| g == 0.0)
    }
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            check_dim("Mlp layer chain", pair[0].out_dim(), pair[1].in_dim())?;
        }
        for l in &layers {
            if let Some(b) = &l.bias {
                check_dim("Mlp bias length", l.out_dim(), b.len())?;
            }
        }
        check_dim("Mlp output width", 1, layers.last().map_or(0, Layer::out_dim))?;
        Ok(Self { layers })
    }

    /// Random network with dimension chain `dims = [d0, ..., dL]` (`dL` = 1) and one
    /// activation per layer. Every layer gets a bias.
    pub fn init(dims: &[usize], acts: &[Activation], scheme: InitScheme, rng: &mut Rng) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Empty("dimension chain needs input and output sizes"));
        }
        check_dim("Mlp::init activations", dims.len() - 1, acts.len())?;
        if dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("zero-width layer in {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .zip(acts)
            .map(|(pair, &act)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let mut weights = Matrix::zeros(fan_out, fan_in);
                let mut bias = vec![0.0; fan_out];
                match scheme {
                    InitScheme::GaussianSmall { std } => {
                        weights
                            .as_mut_slice()
                            .iter_mut()
                            .for_each(|w| *w = rng.normal(0.0, std));
                        bias.iter_mut().for_each(|b| *b = rng.normal(0.0, std));
                    }
                    InitScheme::Xavier => {
                        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        weights
                            .as_mut_slice()
                            .iter_mut()
                            .for_each(|w| *w = rng.uniform_range(-bound, bound));
                    }
                    InitScheme::Zero => {}
                }
                Layer {
                    weights,
                    bias: Some(bias),
                    act,
                }
            })
            .collect();
        Self::new(layers)
    }

    /// `p - hidden... - 1` discriminator with the given hidden activation and a sigmoid output.
    pub fn discriminator(
        p: usize,
        hidden: &[usize],
        hidden_act: Activation,
        scheme: InitScheme,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut dims = vec![p];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut acts = vec![hidden_act; hidden.len()];
        acts.push(Activation::Sigmoid);
        Self::init(&dims, &acts, scheme, rng)
    }

    /// Deep ReLU discriminator: bias-free ReLU layers `relu_widths`, a sigmoid
    /// feature layer of width `2p` with biases, then a bias-free sigmoid output.
    pub fn deep_relu(p: usize, relu_widths: &[usize], scheme: InitScheme, rng: &mut Rng) -> Result<Self> {
        let mut dims = vec![p];
        dims.extend_from_slice(relu_widths);
        dims.push(2 * p);
        dims.push(1);
        let mut acts = vec![Activation::Relu; relu_widths.len()];
        acts.push(Activation::Sigmoid);
        acts.push(Activation::Sigmoid);
        let mut net = Self::init(&dims, &acts, scheme, rng)?;
        let l = net.layers.len();
        for (k, layer) in net.layers.iter_mut().enumerate() {
            if k + 2 != l {
                layer.bias = None;
            }
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Layer::out_dim));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn output_layer(&self) -> &Layer {
        self.layers.last().expect("non-empty network")
    }

    /// `‖w‖₁` of the output-layer weights.
    pub fn output_l1(&self) -> f64 {
        norm1(self.output_layer().weights.as_slice())
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        check_dim("Mlp::forward input", self.input_dim(), x.len())?;
        let mut a = x.to_vec();
        for layer in &self.layers {
            a = layer
                .weights
                .row_iter()
                .enumerate()
                .map(|(j, w)| {
                    let b = layer.bias.as_ref().map_or(0.0, |b| b[j]);
                    layer.act.apply(dot(w, &a) + b)
                })
                .collect();
        }
        Ok(a[0])
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.output().to_vec())
    }

    pub fn trace(&self, x: &Matrix) -> Result<ForwardTrace> {
        check_dim("Mlp::trace input", self.input_dim(), x.cols())?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().unwrap_or(x);
            let (z, a) = layer_forward(layer, input);
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace {
            input: x.clone(),
            pre,
            post,
        })
    }

    /// Vector-Jacobian product through the first `depth` layers.
    ///
    /// `upstream` has one row per sample and one column per unit of layer
    /// `depth - 1`. Returns the parameter gradient (zero beyond `depth`) and the
    /// gradient with respect to each input row.
    pub fn backward(&self, trace: &ForwardTrace, depth: usize, upstream: &Matrix, seed: Seed) -> (Gradient, Matrix) {
        assert!(depth >= 1 && depth <= self.layers.len(), "backward depth out of range");
        let m = trace.input.rows();
        assert_eq!(upstream.rows(), m, "upstream rows");
        assert_eq!(upstream.cols(), self.layers[depth - 1].out_dim(), "upstream width");

        let mut grad = Gradient::zeros_like(self);
        let mut delta = upstream.clone();
        if seed == Seed::Output {
            scale_by_derivative(
                &mut delta,
                &self.layers[depth - 1],
                &trace.pre[depth - 1],
                &trace.post[depth - 1],
            );
        }
        for k in (0..depth).rev() {
            let layer = &self.layers[k];
            let input = if k == 0 { &trace.input } else { &trace.post[k - 1] };
            let gw = &mut grad.weights[k];
            for (d_row, x_row) in delta.row_iter().zip(input.row_iter()) {
                for (j, &d) in d_row.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, x_row, gw.row_mut(j));
                    }
                }
            }
            if let Some(gb) = grad.biases[k].as_mut() {
                for d_row in delta.row_iter() {
                    axpy(1.0, d_row, gb);
                }
            }
            let mut next = Matrix::zeros(m, layer.in_dim());
            for (i, d_row) in delta.row_iter().enumerate() {
                let out = next.row_mut(i);
                for (j, &d) in d_row.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, layer.weights.row(j), out);
                    }
                }
            }
            if k > 0 {
                scale_by_derivative(&mut next, &self.layers[k - 1], &trace.pre[k - 1], &trace.post[k - 1]);
            }
            delta = next;
        }
        (grad, delta)
    }

    /// `self += alpha · grad`.
    pub fn apply_step(&mut self, alpha: f64, grad: &Gradient) {
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&grad.weights).zip(&grad.biases) {
            layer.weights.add_scaled(alpha, gw).expect("gradient layout matches");
            if let (Some(b), Some(g)) = (layer.bias.as_mut(), gb) {
                axpy(alpha, g, b);
            }
        }
    }

    /// All parameters in layer order: weights row-major, then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            if let Some(b) = &l.bias {
                out.extend_from_slice(b);
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("Mlp::set_params", self.params().len(), params.len())?;
        let mut offset = 0;
        for l in &mut self.layers {
            let n = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&params[offset..offset + n]);
            offset += n;
            if let Some(b) = l.bias.as_mut() {
                let n = b.len();
                b.copy_from_slice(&params[offset..offset + n]);
                offset += n;
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }

    /// Flat CSV dump: a `dims` header, then one `w<k>` and `b<k>` line per layer.
    pub fn write_param_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dims: Vec<String> = self.layer_dims().iter().map(usize::to_string).collect();
        writeln!(out, "dims,{}", dims.join(","))?;
        for (k, l) in self.layers.iter().enumerate() {
            let w: Vec<String> = l.weights.as_slice().iter().map(f64::to_string).collect();
            writeln!(out, "w{k},{}", w.join(","))?;
            if let Some(b) = &l.bias {
                let b: Vec<String> = b.iter().map(f64::to_string).collect();
                writeln!(out, "b{k},{}", b.join(","))?;
            }
        }
        Ok(())
    }
}

fn layer_forward(layer: &Layer, input: &Matrix) -> (Matrix, Matrix) {
    let m = input.rows();
    let out = layer.out_dim();
    let mut z = Matrix::zeros(m, out);
    for (i, x) in input.row_iter().enumerate() {
        let zr = z.row_mut(i);
        for (j, w) in layer.weights.row_iter().enumerate() {
            zr[j] = dot(w, x) + layer.bias.as_ref().map_or(0.0, |b| b[j]);
        }
    }
    let mut a = z.clone();
    a.as_mut_slice().iter_mut().for_each(|v| *v = layer.act.apply(*v));
    (z, a)
}

fn scale_by_derivative(delta: &mut Matrix, layer: &Layer, pre: &Matrix, post: &Matrix) {
    for ((d, &x), &y) in delta.as_mut_slice().iter_mut().zip(pre.as_slice()).zip(post.as_slice()) {
        *d *= layer.act.derivative(x, y);
    }
}

/// Gradient of `Σᵢ upstreamᵢ · net(xᵢ)` with respect to every parameter.
pub fn grad_params(net: &Mlp, batch: &Matrix, upstream: &[f64]) -> Result<Gradient> {
    check_dim("grad_params upstream", batch.rows(), upstream.len())?;
    let trace = net.trace(batch)?;
    let (g, _) = net.backward(&trace, net.layers.len(), &Matrix::column_vector(upstream), Seed::Output);
    Ok(g)
}

/// Gradient of `Σᵢ upstreamᵢ · net(xᵢ)` with respect to each input row.
pub fn grad_input(net: &Mlp, batch: &Matrix, upstream: &[f64]) -> Result<Matrix> {
    check_dim("grad_input upstream", batch.rows(), upstream.len())?;
    let trace = net.trace(batch)?;
    let (_, gx) = net.backward(&trace, net.layers.len(), &Matrix::column_vector(upstream), Seed::Output);
    Ok(gx)
}

/// Norm caps for theorem-conforming discriminator classes. All off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormConstraints {
    /// `Σ_j |w_j| ≤ κ` on the output-layer weights.
    pub l1_output_cap: Option<f64>,
    /// Per-unit `ℓ1` cap on every layer before the second-last.
    pub l1_hidden_cap: Option<f64>,
    /// Per-unit `ℓ2` cap on the second-last layer.
    pub l2_row_cap: Option<f64>,
    /// `|b_j| ≤ τ` on the second-last layer biases.
    pub bias_cap: Option<f64>,
}

impl NormConstraints {
    pub fn is_empty(&self) -> bool {
        self.l1_output_cap.is_none()
            && self.l1_hidden_cap.is_none()
            && self.l2_row_cap.is_none()
            && self.bias_cap.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, cap) in [
            ("l1_output_cap", self.l1_output_cap),
            ("l1_hidden_cap", self.l1_hidden_cap),
            ("l2_row_cap", self.l2_row_cap),
            ("bias_cap", self.bias_cap),
        ] {
            if let Some(c) = cap {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::InvalidConfig(format!("{name} must be positive, got {c}")));
                }
            }
        }
        Ok(())
    }
}

// Vectors within this relative slack of a cap count as inside, which makes the
// projections exactly idempotent despite rounding in the projected output.
const CAP_SLACK: f64 = 1e-12;

/// Euclidean projection onto `{v : ‖v‖₁ ≤ radius}` (sort-based).
pub fn project_l1_ball(v: &mut [f64], radius: f64) {
    if norm1(v) <= radius * (1.0 + CAP_SLACK) {
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut threshold = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u - t > 0.0 {
            threshold = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = x.signum() * (x.abs() - threshold).max(0.0);
    }
}

pub fn project_l2_ball(v: &mut [f64], radius: f64) {
    let n = norm2(v);
    if n <= radius * (1.0 + CAP_SLACK) {
        return;
    }
    let s = radius / n;
    v.iter_mut().for_each(|x| *x *= s);
}

/// Projects each constrained parameter group onto its cap; untouched groups stay
/// bit-identical.
pub fn project_norms(net: &Mlp, c: &NormConstraints) -> Mlp {
    let mut out = net.clone();
    let l = out.layers.len();
    if let Some(kappa) = c.l1_output_cap {
        project_l1_ball(out.layers[l - 1].weights.as_mut_slice(), kappa);
    }
    if l >= 2 {
        let second_last = &mut out.layers[l - 2];
        if let Some(r) = c.l2_row_cap {
            for j in 0..second_last.out_dim() {
                project_l2_ball(second_last.weights.row_mut(j), r);
            }
        }
        if let (Some(tau), Some(b)) = (c.bias_cap, second_last.bias.as_mut()) {
            b.iter_mut().for_each(|v| *v = v.clamp(-tau, tau));
        }
    }
    if let Some(cap) = c.l1_hidden_cap {
        for layer in out.layers.iter_mut().take(l.saturating_sub(2)) {
            for j in 0..layer.out_dim() {
                project_l1_ball(layer.weights.row_mut(j), cap);
            }
        }
    }
    out
}
