//! Dense tanh network with batched backpropagation and Adam.
//!
//! Generic over the float type: models are trained and stored in `f32`; the
//! same code instantiated at `f64` serves gradient checking.

use ndarray::{Array1, Array2, ArrayView2, Axis, NdFloat};
use num_traits::FromPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub trait Real: NdFloat + FromPrimitive {}
impl<T: NdFloat + FromPrimitive> Real for T {}

#[inline]
fn cast<A: Real>(x: f64) -> A {
    A::from_f64(x).expect("finite constant")
}

/// Dense layer `y = x W + b`, with `W` stored as `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<A> {
    pub weights: Array2<A>,
    pub bias: Array1<A>,
}

impl<A: Real> Dense<A> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Feed-forward network: tanh on every hidden layer, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<A> {
    pub layers: Vec<Dense<A>>,
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<A> {
    pub weights: Vec<Array2<A>>,
    pub bias: Vec<Array1<A>>,
}

impl<A: Real> Gradients<A> {
    pub fn zeros_like(mlp: &Mlp<A>) -> Self {
        Self {
            weights: mlp.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            bias: mlp.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    /// Flattened in the same order as [`Mlp::param`].
    pub fn flatten(&self) -> Vec<A> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }
}

impl<A: Real> Mlp<A> {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot(sizes: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mlp = Self::zeros(sizes);
        for layer in &mut mlp.layers {
            let limit = (6.0 / (layer.inputs() + layer.outputs()) as f64).sqrt();
            layer.weights.mapv_inplace(|_| cast(rng.random_range(-limit..limit)));
        }
        mlp
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.layers[0].inputs()];
        sizes.extend(self.layers.iter().map(Dense::outputs));
        sizes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn position(&self, mut index: usize) -> (usize, Option<(usize, usize)>, usize) {
        for (li, layer) in self.layers.iter().enumerate() {
            let nw = layer.weights.len();
            if index < nw {
                let cols = layer.outputs();
                return (li, Some((index / cols, index % cols)), 0);
            }
            index -= nw;
            if index < layer.bias.len() {
                return (li, None, index);
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter by flat index: each layer's weights row-major, then its bias.
    pub fn param(&self, index: usize) -> A {
        match self.position(index) {
            (l, Some(rc), _) => self.layers[l].weights[rc],
            (l, None, b) => self.layers[l].bias[b],
        }
    }

    pub fn set_param(&mut self, index: usize, value: A) {
        match self.position(index) {
            (l, Some(rc), _) => self.layers[l].weights[rc] = value,
            (l, None, b) => self.layers[l].bias[b] = value,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    pub fn cast<B: Real>(&self) -> Mlp<B> {
        let conv = |x: &A| B::from_f64(x.to_f64().unwrap()).unwrap();
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: l.weights.map(conv),
                    bias: l.bias.map(conv),
                })
                .collect(),
        }
    }

    /// Activations of every layer, input first. The last entry is the output.
    pub fn forward_all(&self, x: ArrayView2<A>) -> Vec<Array2<A>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = acts[i].dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(A::tanh);
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: ArrayView2<A>) -> Array2<A> {
        self.forward_all(x).pop().unwrap()
    }

    /// Backpropagates `d_out` (gradient w.r.t. the network output). Returns the
    /// parameter gradients and the gradient w.r.t. the input.
    pub fn backward(&self, acts: &[Array2<A>], d_out: Array2<A>) -> (Gradients<A>, Array2<A>) {
        let n = self.layers.len();
        let mut grads = Gradients::zeros_like(self);
        let mut delta = d_out;
        for i in (0..n).rev() {
            grads.weights[i] = acts[i].t().dot(&delta);
            grads.bias[i] = delta.sum_axis(Axis(0));
            let mut d_in = delta.dot(&self.layers[i].weights.t());
            if i > 0 {
                // acts[i] = tanh(z), so d tanh / dz = 1 - acts[i]^2
                ndarray::Zip::from(&mut d_in)
                    .and(&acts[i])
                    .for_each(|d, &a| *d *= A::one() - a * a);
            }
            delta = d_in;
        }
        (grads, delta)
    }

    /// Sum of squared errors over `x` divided by `denominator`, with its
    /// parameter gradients. With `denominator = x.nrows()` this is the MSE.
    pub fn squared_error_gradients(&self, x: ArrayView2<A>, y: &[A], denominator: A) -> (A, Gradients<A>) {
        let acts = self.forward_all(x);
        let out = acts.last().unwrap();
        let mut loss = A::zero();
        let two = cast::<A>(2.0);
        let d_out = Array2::from_shape_fn(out.raw_dim(), |(r, _)| {
            let e = out[(r, 0)] - y[r];
            loss += e * e;
            two * e / denominator
        });
        let (grads, _) = self.backward(&acts, d_out);
        (loss / denominator, grads)
    }

    /// Mean squared error on `x`, `y`.
    pub fn mse(&self, x: ArrayView2<A>, y: &[A]) -> A {
        let out = self.forward(x);
        let n = cast::<A>(y.len() as f64);
        out.column(0)
            .iter()
            .zip(y)
            .fold(A::zero(), |s, (&o, &t)| s + (o - t) * (o - t))
            / n
    }

    /// Gradient of the scalar output with respect to the input vector.
    pub fn input_gradient(&self, x: &[A]) -> Vec<A> {
        let x = ndarray::ArrayView2::from_shape((1, x.len()), x).unwrap();
        let acts = self.forward_all(x);
        let (_, dx) = self.backward(&acts, Array2::ones((1, 1)));
        dx.row(0).to_vec()
    }
}

/// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
#[derive(Debug, Clone)]
pub struct Adam<A> {
    pub learning_rate: A,
    pub beta1: A,
    pub beta2: A,
    pub epsilon: A,
    step: i32,
    m: Gradients<A>,
    v: Gradients<A>,
}

impl<A: Real> Adam<A> {
    pub fn new(mlp: &Mlp<A>, learning_rate: f64) -> Self {
        Self {
            learning_rate: cast(learning_rate),
            beta1: cast(0.9),
            beta2: cast(0.999),
            epsilon: cast(1e-8),
            step: 0,
            m: Gradients::zeros_like(mlp),
            v: Gradients::zeros_like(mlp),
        }
    }

    pub fn step(&mut self, mlp: &mut Mlp<A>, grads: &Gradients<A>) {
        self.step += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let lr_t = self.learning_rate * (A::one() - b2.powi(self.step)).sqrt() / (A::one() - b1.powi(self.step));
        let update = |p: &mut A, m: &mut A, v: &mut A, g: A| {
            *m = b1 * *m + (A::one() - b1) * g;
            *v = b2 * *v + (A::one() - b2) * g * g;
            *p -= lr_t * *m / (v.sqrt() + eps);
        };
        for (i, layer) in mlp.layers.iter_mut().enumerate() {
            ndarray::Zip::from(&mut layer.weights)
                .and(&mut self.m.weights[i])
                .and(&mut self.v.weights[i])
                .and(&grads.weights[i])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            ndarray::Zip::from(&mut layer.bias)
                .and(&mut self.m.bias[i])
                .and(&mut self.v.bias[i])
                .and(&grads.bias[i])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}
