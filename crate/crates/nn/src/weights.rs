use std::path::Path;

use pkde_core::format::{read_tensor, write_tensor};
use pkde_core::CoreError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::layers::{mae, Act};
use crate::model::{Gradients, ModelConfig, Network};
use crate::tensor::Tensor4;

pub const HEADER_FILE: &str = "model.json";

/// Adam moments and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Gradients<f32>,
    pub v: Gradients<f32>,
}

impl AdamState {
    pub fn new(net: &Network<f32>) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: Gradients::zeros(net),
            v: Gradients::zeros(net),
        }
    }
}

/// Network parameters with optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub net: Network<f32>,
    pub adam: AdamState,
}

fn flush(v: f32) -> f32 {
    if v.abs() < f32::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// Moment coefficients, epsilon and the (already incremented) step.
type AdamHp = (f64, f64, f64, u64);

fn adam_update(w: &mut [f32], g: &[f32], m: &mut [f32], v: &mut [f32], lr: f64, (b1, b2, eps, step): AdamHp) {
    let t = step.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..w.len() {
        let gi = f64::from(g[i]);
        let mi = b1 * f64::from(m[i]) + (1.0 - b1) * gi;
        let vi = b2 * f64::from(v[i]) + (1.0 - b2) * gi * gi;
        m[i] = flush(mi as f32);
        v[i] = flush(vi as f32);
        let update = lr * (mi / c1) / ((vi / c2).sqrt() + eps);
        w[i] = (f64::from(w[i]) - update) as f32;
    }
}

impl Weights {
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        let net = Network::init(config, seed)?;
        let adam = AdamState::new(&net);
        Ok(Self { net, adam })
    }

    pub fn from_network(net: Network<f32>) -> Self {
        let adam = AdamState::new(&net);
        Self { net, adam }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.net.config
    }

    /// One Adam step with learning rate `lr`.
    pub fn adam_step(&mut self, grads: &Gradients<f32>, lr: f64) {
        let s = &mut self.adam;
        s.step += 1;
        let hp = (s.beta1, s.beta2, s.epsilon, s.step);
        for (i, conv) in self.net.convs.iter_mut().enumerate() {
            adam_update(&mut conv.weight, &grads.weight[i], &mut s.m.weight[i], &mut s.v.weight[i], lr, hp);
            adam_update(&mut conv.bias, &grads.bias[i], &mut s.m.bias[i], &mut s.v.bias[i], lr, hp);
        }
    }

    /// Saves a JSON header plus one tensor file per parameter and moment.
    pub fn save(&self, dir: &Path) -> Result<(), NnError> {
        std::fs::create_dir_all(dir).map_err(|e| CoreError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let layout = self.net.config.layout();
        let mut params = Vec::new();
        for (i, (name, cin, cout, k)) in layout.iter().enumerate() {
            let wd = [*cout, *cin, *k, *k];
            let bd = [*cout];
            let files = [
                (format!("{name}.weight.pktens"), &wd[..], &self.net.convs[i].weight),
                (format!("{name}.bias.pktens"), &bd[..], &self.net.convs[i].bias),
                (format!("{name}.weight.m.pktens"), &wd[..], &self.adam.m.weight[i]),
                (format!("{name}.weight.v.pktens"), &wd[..], &self.adam.v.weight[i]),
                (format!("{name}.bias.m.pktens"), &bd[..], &self.adam.m.bias[i]),
                (format!("{name}.bias.v.pktens"), &bd[..], &self.adam.v.bias[i]),
            ];
            for (file, dims, data) in files {
                write_tensor(&dir.join(file), dims, data)?;
            }
            params.push(ParamEntry {
                name: name.clone(),
                weight_dims: wd.to_vec(),
                bias_dims: bd.to_vec(),
            });
        }
        let header = Header {
            format_version: 1,
            config: self.net.config,
            input_shift: self.net.input_shift.clone(),
            input_scale: self.net.input_scale.clone(),
            adam: AdamHeader {
                beta1: self.adam.beta1,
                beta2: self.adam.beta2,
                epsilon: self.adam.epsilon,
                step: self.adam.step,
            },
            parameters: params,
        };
        let path = dir.join(HEADER_FILE);
        let text = serde_json::to_string_pretty(&header).expect("header serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CoreError::Io { path, source: e })?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, NnError> {
        let path = dir.join(HEADER_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CoreError::Io {
            path: path.clone(),
            source: e,
        })?;
        let header: Header = serde_json::from_str(&text).map_err(|e| CoreError::Json { path, source: e })?;
        let mut net = Network::<f32>::zeros(header.config)?;
        if header.input_shift.len() != header.config.in_channels || header.input_scale.len() != header.config.in_channels {
            return Err(NnError::Data("input normalization does not match in_channels".into()));
        }
        net.input_shift = header.input_shift;
        net.input_scale = header.input_scale;
        let mut adam = AdamState::new(&net);
        adam.beta1 = header.adam.beta1;
        adam.beta2 = header.adam.beta2;
        adam.epsilon = header.adam.epsilon;
        adam.step = header.adam.step;
        let layout = header.config.layout();
        if layout.len() != header.parameters.len() {
            return Err(NnError::Data(format!(
                "header lists {} parameters, config needs {}",
                header.parameters.len(),
                layout.len()
            )));
        }
        let read = |file: String, expect: usize| -> Result<Vec<f32>, NnError> {
            let t = read_tensor(&dir.join(&file))?;
            if t.data.len() != expect {
                return Err(NnError::Shape {
                    layer: file,
                    message: format!("expected {expect} values, got {}", t.data.len()),
                });
            }
            Ok(t.data)
        };
        for (i, (name, ..)) in layout.iter().enumerate() {
            if header.parameters[i].name != *name {
                return Err(NnError::Data(format!("parameter {i} is `{}`, expected `{name}`", header.parameters[i].name)));
            }
            let (nw, nb) = (net.convs[i].weight.len(), net.convs[i].bias.len());
            net.convs[i].weight = read(format!("{name}.weight.pktens"), nw)?;
            net.convs[i].bias = read(format!("{name}.bias.pktens"), nb)?;
            adam.m.weight[i] = read(format!("{name}.weight.m.pktens"), nw)?;
            adam.v.weight[i] = read(format!("{name}.weight.v.pktens"), nw)?;
            adam.m.bias[i] = read(format!("{name}.bias.m.pktens"), nb)?;
            adam.v.bias[i] = read(format!("{name}.bias.v.pktens"), nb)?;
        }
        Ok(Self { net, adam })
    }
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    weight_dims: Vec<usize>,
    bias_dims: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AdamHeader {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    input_shift: Vec<f32>,
    input_scale: Vec<f32>,
    adam: AdamHeader,
    parameters: Vec<ParamEntry>,
}

/// Forward pass over a `[B, in_channels, H, W]` batch, samples in parallel.
pub fn forward(weights: &Weights, input: &Tensor4) -> Result<Tensor4, NnError> {
    let outs: Vec<Act<f32>> = (0..input.batch())
        .into_par_iter()
        .map(|b| weights.net.forward_sample(&input.act(b)).map(|t| t.output().clone()))
        .collect::<Result<_, _>>()?;
    if outs.is_empty() {
        let [_, _, h, w] = input.dims();
        return Ok(Tensor4::zeros([0, 1, h, w]));
    }
    Tensor4::stack(&outs)
}

/// Parameter gradients of `Σ upstream · output` over the batch. Per-sample
/// gradients are summed in batch order, so the result does not depend on
/// the thread count.
pub fn backward(weights: &Weights, input: &Tensor4, upstream: &Tensor4) -> Result<Gradients<f32>, NnError> {
    if upstream.batch() != input.batch() {
        return Err(NnError::Shape {
            layer: "head".into(),
            message: format!("upstream batch {} vs input batch {}", upstream.batch(), input.batch()),
        });
    }
    let per: Vec<Gradients<f32>> = (0..input.batch())
        .into_par_iter()
        .map(|b| {
            let tape = weights.net.forward_sample(&input.act(b))?;
            weights.net.backward_sample(&tape, &upstream.act(b))
        })
        .collect::<Result<_, _>>()?;
    let mut total = Gradients::zeros(&weights.net);
    for g in &per {
        total.add_assign(g);
    }
    Ok(total)
}

/// Mean absolute error over all elements and `d loss / d pred`.
pub fn mae_loss(pred: &Tensor4, target: &Tensor4) -> Result<(f64, Tensor4), NnError> {
    if pred.dims() != target.dims() {
        return Err(NnError::Shape {
            layer: "mae".into(),
            message: format!("prediction {:?} vs target {:?}", pred.dims(), target.dims()),
        });
    }
    let (loss, grad) = mae(pred.data(), target.data());
    Ok((loss, Tensor4::new(pred.dims(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SkipMode;

    fn batch(seed: u64, b: usize) -> Tensor4 {
        let data = (0..b * 2 * 64).map(|i| ((i as u64 * 2654435761 + seed) % 1000) as f32 / 1000.0).collect();
        Tensor4::new([b, 2, 8, 8], data).unwrap()
    }

    #[test]
    fn save_load_is_lossless() {
        let mut w = Weights::init(ModelConfig::new(2, 4, SkipMode::Concat), 7).unwrap();
        w.net.input_shift = vec![0.3, 0.1];
        w.net.input_scale = vec![0.7, 1.3];
        let x = batch(1, 2);
        let g = backward(&w, &x, &Tensor4::new([2, 1, 8, 8], vec![0.01; 128]).unwrap()).unwrap();
        w.adam_step(&g, 1e-3);
        let dir = tempfile::tempdir().unwrap();
        w.save(dir.path()).unwrap();
        let back = Weights::load(dir.path()).unwrap();
        assert_eq!(back, w);
        assert_eq!(forward(&back, &x).unwrap(), forward(&w, &x).unwrap());
    }

    #[test]
    fn identical_samples_identical_rows() {
        let w = Weights::init(ModelConfig::new(2, 4, SkipMode::Add), 3).unwrap();
        let one = batch(5, 1);
        let mut data = one.data().to_vec();
        data.extend_from_slice(one.data());
        let y = forward(&w, &Tensor4::new([2, 2, 8, 8], data).unwrap()).unwrap();
        assert_eq!(y.sample(0), y.sample(1));
        assert!(y.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn mae_loss_brute_force() {
        let p = Tensor4::new([3, 1, 4, 4], (0..48).map(|i| (i as f32 * 0.37).sin().abs()).collect()).unwrap();
        let t = Tensor4::new([3, 1, 4, 4], (0..48).map(|i| (i as f32 * 0.11).cos().abs()).collect()).unwrap();
        let (l, g) = mae_loss(&p, &t).unwrap();
        let brute: f64 = p.data().iter().zip(t.data()).map(|(a, b)| f64::from((a - b).abs())).sum::<f64>() / 48.0;
        assert!((l - brute).abs() < 1e-7);
        for ((a, b), gv) in p.data().iter().zip(t.data()).zip(g.data()) {
            assert_eq!(*gv, (a - b).signum() / 48.0);
        }
        assert!(mae_loss(&p, &Tensor4::zeros([3, 1, 4, 5])).is_err());
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut w = Weights::init(ModelConfig::new(1, 2, SkipMode::Add), 0).unwrap();
        let before = w.net.convs[0].weight[0];
        let mut g = Gradients::zeros(&w.net);
        g.weight[0][0] = 0.5;
        w.adam_step(&g, 1e-3);
        assert!((f64::from(before - w.net.convs[0].weight[0]) - 1e-3).abs() < 1e-6);
        assert_eq!(w.adam.step, 1);
    }
}
