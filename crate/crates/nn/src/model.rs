use pkde_core::rng::{purpose, stream};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::layers::*;
use crate::scalar::Scalar;

/// How decoder features meet the encoder features of the same level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkipMode {
    /// Channel concatenation (U-Net).
    Concat,
    /// Elementwise sum (LinkNet).
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutActivation {
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub depth: usize,
    pub base_width: usize,
    pub skip_mode: SkipMode,
    pub out_activation: OutActivation,
}

impl ModelConfig {
    pub fn new(depth: usize, base_width: usize, skip_mode: SkipMode) -> Self {
        Self {
            in_channels: 2,
            depth,
            base_width,
            skip_mode,
            out_activation: OutActivation::Sigmoid,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.depth == 0 || self.depth > 8 {
            return Err(NnError::Config(format!("depth must be in 1..=8, got {}", self.depth)));
        }
        if self.base_width == 0 || self.in_channels == 0 {
            return Err(NnError::Config("channel counts must be positive".into()));
        }
        Ok(())
    }

    /// Channels at level `i`; level `depth` is the bottleneck.
    pub fn width(&self, level: usize) -> usize {
        self.base_width << level
    }

    /// Checks that an `h × w` input survives `depth` halvings.
    pub fn check_extent(&self, h: usize, w: usize) -> Result<(), NnError> {
        let f = 1usize << self.depth;
        if h == 0 || w == 0 || h % f != 0 || w % f != 0 {
            return Err(NnError::Shape {
                layer: "input".into(),
                message: format!("{h}x{w} is not divisible by 2^{} = {f}", self.depth),
            });
        }
        Ok(())
    }

    /// Convolutions in parameter order with their names.
    pub fn layout(&self) -> Vec<(String, usize, usize, usize)> {
        let d = self.depth;
        let mut out = Vec::new();
        for i in 0..d {
            let cin = if i == 0 { self.in_channels } else { self.width(i - 1) };
            out.push((format!("enc{i}.conv1"), cin, self.width(i), 3));
            out.push((format!("enc{i}.conv2"), self.width(i), self.width(i), 3));
        }
        out.push(("mid.conv1".into(), self.width(d - 1), self.width(d), 3));
        out.push(("mid.conv2".into(), self.width(d), self.width(d), 3));
        for i in (0..d).rev() {
            let joined = match self.skip_mode {
                SkipMode::Concat => 2 * self.width(i),
                SkipMode::Add => self.width(i),
            };
            out.push((format!("dec{i}.up"), self.width(i + 1), self.width(i), 3));
            out.push((format!("dec{i}.conv1"), joined, self.width(i), 3));
            out.push((format!("dec{i}.conv2"), self.width(i), self.width(i), 3));
        }
        out.push(("head".into(), self.width(0), 1, 1));
        out
    }
}

/// Parameters of one encoder-decoder plus a fixed per-channel input
/// normalization `(x − shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub config: ModelConfig,
    pub convs: Vec<Conv<T>>,
    pub input_shift: Vec<T>,
    pub input_scale: Vec<T>,
}

/// Parameter gradients in the order of [`ModelConfig::layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weight: Vec<Vec<T>>,
    pub bias: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn zeros(net: &Network<T>) -> Self {
        Self {
            weight: net.convs.iter().map(|c| vec![T::zero(); c.weight.len()]).collect(),
            bias: net.convs.iter().map(|c| vec![T::zero(); c.bias.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight).chain(self.bias.iter_mut().zip(&other.bias)) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Index of the first parameter tensor with a non-finite entry.
    pub fn first_non_finite(&self) -> Option<usize> {
        (0..self.weight.len())
            .find(|&i| self.weight[i].iter().chain(&self.bias[i]).any(|v| !v.is_finite()))
    }
}

struct Level<T> {
    a: ConvCache<T>,
    a_out: Act<T>,
    b: ConvCache<T>,
    b_out: Act<T>,
}

struct DecLevel<T> {
    up: ConvCache<T>,
    up_out: Act<T>,
    skip_channels: usize,
    conv: Level<T>,
}

/// Intermediate values of one forward pass.
pub struct Tape<T> {
    enc: Vec<(Level<T>, Vec<u32>)>,
    mid: Level<T>,
    dec: Vec<DecLevel<T>>,
    head: ConvCache<T>,
    out: Act<T>,
}

impl<T> Tape<T> {
    pub fn output(&self) -> &Act<T> {
        &self.out
    }
}

fn conv_relu<T: Scalar>(conv: &Conv<T>, x: &Act<T>) -> (Act<T>, ConvCache<T>) {
    let (mut y, cache) = conv_forward(conv, x);
    relu_forward(&mut y);
    (y, cache)
}

fn double<T: Scalar>(a: &Conv<T>, b: &Conv<T>, x: &Act<T>) -> (Act<T>, Level<T>) {
    let (a_out, ca) = conv_relu(a, x);
    let (b_out, cb) = conv_relu(b, &a_out);
    (
        b_out.clone(),
        Level {
            a: ca,
            a_out,
            b: cb,
            b_out,
        },
    )
}

/// Backward through conv→ReLU→conv→ReLU, returning the input gradient.
fn double_backward<T: Scalar>(
    a: (&Conv<T>, usize),
    b: (&Conv<T>, usize),
    lv: &Level<T>,
    mut g: Act<T>,
    grads: &mut Gradients<T>,
    need_input: bool,
) -> Option<Act<T>> {
    relu_backward(&lv.b_out, &mut g);
    let (ia, ib) = (a.1, b.1);
    let mut g = conv_backward(b.0, &lv.b, &g, &mut grads.weight[ib], &mut grads.bias[ib], true).expect("input grad");
    relu_backward(&lv.a_out, &mut g);
    conv_backward(a.0, &lv.a, &g, &mut grads.weight[ia], &mut grads.bias[ia], need_input)
}

impl<T: Scalar> Network<T> {
    pub fn zeros(config: ModelConfig) -> Result<Self, NnError> {
        config.validate()?;
        Ok(Self {
            convs: config.layout().into_iter().map(|(_, cin, cout, k)| Conv::zeros(cin, cout, k)).collect(),
            input_shift: vec![T::zero(); config.in_channels],
            input_scale: vec![T::one(); config.in_channels],
            config,
        })
    }

    /// He initialization: weights `N(0, 2 / fan_in)`, biases zero. Each
    /// convolution draws from its own stream keyed on `(seed, index)`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        let mut net = Self::zeros(config)?;
        for (i, conv) in net.convs.iter_mut().enumerate() {
            let fan_in = (conv.cin * conv.k * conv.k) as f64;
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive sd");
            let mut rng = stream(seed, &[purpose::INIT, i as u64]);
            for w in &mut conv.weight {
                *w = T::of(normal.sample(&mut rng));
            }
        }
        Ok(net)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U + Copy) -> Network<U> {
        Network {
            config: self.config,
            convs: self.convs.iter().map(|c| c.map(f)).collect(),
            input_shift: self.input_shift.iter().map(|&v| f(v)).collect(),
            input_scale: self.input_scale.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.convs.iter().map(|c| c.weight.len() + c.bias.len()).sum()
    }

    fn idx(&self) -> Indices {
        Indices { d: self.config.depth }
    }

    /// Applies the input normalization and checks the sample shape.
    pub fn prepare(&self, x: &Act<T>) -> Result<Act<T>, NnError> {
        if x.c != self.config.in_channels {
            return Err(NnError::Shape {
                layer: "enc0.conv1".into(),
                message: format!("expected {} input channels, got {}", self.config.in_channels, x.c),
            });
        }
        self.config.check_extent(x.h, x.w)?;
        let hw = x.plane();
        let mut data = x.data.clone();
        for c in 0..x.c {
            let (s, k) = (self.input_shift[c], self.input_scale[c]);
            for v in &mut data[c * hw..(c + 1) * hw] {
                *v = (*v - s) / k;
            }
        }
        Ok(Act::new(x.c, x.h, x.w, data))
    }

    /// Forward pass of one `[in_channels, h, w]` sample.
    pub fn forward_sample(&self, x: &Act<T>) -> Result<Tape<T>, NnError> {
        let ix = self.idx();
        let d = self.config.depth;
        let c = &self.convs;
        let mut h = self.prepare(x)?;
        let mut enc = Vec::with_capacity(d);
        for i in 0..d {
            let (out, lv) = double(&c[ix.enc(i, 0)], &c[ix.enc(i, 1)], &h);
            let (pooled, arg) = maxpool_forward(&out);
            enc.push((lv, arg));
            h = pooled;
        }
        let (mut h, mid) = double(&c[ix.mid(0)], &c[ix.mid(1)], &h);
        let mut dec = Vec::with_capacity(d);
        for i in (0..d).rev() {
            let (up_out, up) = conv_relu(&c[ix.dec(i, 0)], &upsample_forward(&h));
            let skip = &enc[i].0.b_out;
            let joined = match self.config.skip_mode {
                SkipMode::Concat => concat_forward(&up_out, skip),
                SkipMode::Add => add_forward(&up_out, skip),
            };
            let (out, conv) = double(&c[ix.dec(i, 1)], &c[ix.dec(i, 2)], &joined);
            dec.push(DecLevel {
                up,
                up_out,
                skip_channels: skip.c,
                conv,
            });
            h = out;
        }
        let (z, head) = conv_forward(&c[ix.head()], &h);
        let out = sigmoid_forward(&z);
        Ok(Tape { enc, mid, dec, head, out })
    }

    /// Parameter gradients for one sample given `d loss / d output`.
    pub fn backward_sample(&self, tape: &Tape<T>, grad_out: &Act<T>) -> Result<Gradients<T>, NnError> {
        if grad_out.shape() != tape.out.shape() {
            return Err(NnError::Shape {
                layer: "head".into(),
                message: format!("upstream gradient {:?} vs output {:?}", grad_out.shape(), tape.out.shape()),
            });
        }
        let ix = self.idx();
        let d = self.config.depth;
        let c = &self.convs;
        let mut grads = Gradients::zeros(self);

        let mut g = grad_out.clone();
        sigmoid_backward(&tape.out, &mut g);
        let hi = ix.head();
        let mut g = conv_backward(&c[hi], &tape.head, &g, &mut grads.weight[hi], &mut grads.bias[hi], true).expect("input grad");

        let mut skip_grads: Vec<Option<Act<T>>> = (0..d).map(|_| None).collect();
        // tape.dec is ordered from the deepest level up
        for (k, lv) in tape.dec.iter().enumerate().rev() {
            let i = d - 1 - k;
            let gj = double_backward((&c[ix.dec(i, 1)], ix.dec(i, 1)), (&c[ix.dec(i, 2)], ix.dec(i, 2)), &lv.conv, g, &mut grads, true)
                .expect("input grad");
            let (mut g_up, g_skip) = match self.config.skip_mode {
                SkipMode::Concat => concat_backward(&gj, gj.c - lv.skip_channels),
                SkipMode::Add => (gj.clone(), gj),
            };
            skip_grads[i] = Some(g_skip);
            relu_backward(&lv.up_out, &mut g_up);
            let u = ix.dec(i, 0);
            let g_in = conv_backward(&c[u], &lv.up, &g_up, &mut grads.weight[u], &mut grads.bias[u], true).expect("input grad");
            g = upsample_backward(&g_in);
        }
        let mut g = double_backward((&c[ix.mid(0)], ix.mid(0)), (&c[ix.mid(1)], ix.mid(1)), &tape.mid, g, &mut grads, true)
            .expect("input grad");
        for i in (0..d).rev() {
            let (lv, arg) = &tape.enc[i];
            let mut gb = maxpool_backward(&g, arg, lv.b_out.shape());
            let gs = skip_grads[i].take().expect("skip gradient");
            for (a, &b) in gb.data.iter_mut().zip(&gs.data) {
                *a += b;
            }
            match double_backward((&c[ix.enc(i, 0)], ix.enc(i, 0)), (&c[ix.enc(i, 1)], ix.enc(i, 1)), lv, gb, &mut grads, i > 0) {
                Some(next) => g = next,
                None => break,
            }
        }
        if let Some(i) = grads.first_non_finite() {
            return Err(NnError::Numerical {
                layer: self.config.layout()[i].0.clone(),
                message: "non-finite gradient".into(),
            });
        }
        Ok(grads)
    }
}

struct Indices {
    d: usize,
}

impl Indices {
    fn enc(&self, level: usize, j: usize) -> usize {
        2 * level + j
    }

    fn mid(&self, j: usize) -> usize {
        2 * self.d + j
    }

    /// `j`: 0 = up, 1 = conv1, 2 = conv2.
    fn dec(&self, level: usize, j: usize) -> usize {
        2 * self.d + 2 + 3 * (self.d - 1 - level) + j
    }

    fn head(&self) -> usize {
        5 * self.d + 2
    }
}
