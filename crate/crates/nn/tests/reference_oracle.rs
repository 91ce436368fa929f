//! The library forward pass against a plain-loop reimplementation.

use pkde_nn::layers::Conv;
use pkde_nn::{forward, ModelConfig, Network, SkipMode, Tensor4, Weights};

type Img = Vec<Vec<Vec<f64>>>;

fn conv(c: &Conv<f32>, x: &Img) -> Img {
    let (h, w) = (x[0].len(), x[0][0].len());
    let r = (c.k / 2) as isize;
    let mut out = vec![vec![vec![0.0; w]; h]; c.cout];
    for o in 0..c.cout {
        for y in 0..h {
            for xx in 0..w {
                let mut s = c.bias[o] as f64;
                for i in 0..c.cin {
                    for ky in 0..c.k {
                        for kx in 0..c.k {
                            let sy = y as isize + ky as isize - r;
                            let sx = xx as isize + kx as isize - r;
                            if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                continue;
                            }
                            let wv = c.weight[((o * c.cin + i) * c.k + ky) * c.k + kx] as f64;
                            s += wv * x[i][sy as usize][sx as usize];
                        }
                    }
                }
                out[o][y][xx] = s;
            }
        }
    }
    out
}

fn relu(mut x: Img) -> Img {
    x.iter_mut().flatten().flatten().for_each(|v| *v = v.max(0.0));
    x
}

fn pool(x: &Img) -> Img {
    x.iter()
        .map(|p| {
            (0..p.len() / 2)
                .map(|y| {
                    (0..p[0].len() / 2)
                        .map(|xx| p[2 * y][2 * xx].max(p[2 * y][2 * xx + 1]).max(p[2 * y + 1][2 * xx]).max(p[2 * y + 1][2 * xx + 1]))
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Bilinear resampling at half-pixel centers with edge clamping.
fn upsample(x: &Img) -> Img {
    let (h, w) = (x[0].len(), x[0][0].len());
    let coord = |o: usize, n: usize| {
        let s = ((o as f64 + 0.5) / 2.0 - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        (i0, (i0 + 1).min(n - 1), s - i0 as f64)
    };
    x.iter()
        .map(|p| {
            (0..2 * h)
                .map(|y| {
                    let (y0, y1, fy) = coord(y, h);
                    (0..2 * w)
                        .map(|xx| {
                            let (x0, x1, fx) = coord(xx, w);
                            let top = p[y0][x0] * (1.0 - fx) + p[y0][x1] * fx;
                            let bot = p[y1][x0] * (1.0 - fx) + p[y1][x1] * fx;
                            top * (1.0 - fy) + bot * fy
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn reference(net: &Network<f32>, input: &Img) -> Img {
    let c = &net.convs;
    let x: Img = input
        .iter()
        .enumerate()
        .map(|(ch, p)| {
            let (s, k) = (net.input_shift[ch] as f64, net.input_scale[ch] as f64);
            p.iter().map(|row| row.iter().map(|v| (v - s) / k).collect()).collect()
        })
        .collect();
    let e = relu(conv(&c[1], &relu(conv(&c[0], &x))));
    let m = relu(conv(&c[3], &relu(conv(&c[2], &pool(&e)))));
    let mut joined = relu(conv(&c[4], &upsample(&m)));
    joined.extend(e);
    let d = relu(conv(&c[6], &relu(conv(&c[5], &joined))));
    conv(&c[7], &d)
        .into_iter()
        .map(|p| p.into_iter().map(|row| row.into_iter().map(|z| 1.0 / (1.0 + (-z).exp())).collect()).collect())
        .collect()
}

#[test]
fn depth_one_width_four_matches_plain_loops() {
    let config = ModelConfig::new(1, 4, SkipMode::Concat);
    let names: Vec<String> = config.layout().into_iter().map(|l| l.0).collect();
    assert_eq!(
        names,
        ["enc0.conv1", "enc0.conv2", "mid.conv1", "mid.conv2", "dec0.up", "dec0.conv1", "dec0.conv2", "head"]
    );
    let mut net = Network::<f32>::init(config, 11).unwrap();
    for (i, conv) in net.convs.iter_mut().enumerate() {
        for (j, b) in conv.bias.iter_mut().enumerate() {
            *b = 0.1 * ((3 * i + j) as f32).sin();
        }
    }
    net.input_shift = vec![0.4, 0.2];
    net.input_scale = vec![0.1, 0.3];
    let weights = Weights::from_network(net);

    for trial in 0..3 {
        let data: Vec<f32> = (0..2 * 64).map(|i| (((i * 37 + trial * 11) % 101) as f32) / 101.0).collect();
        let input = Tensor4::new([1, 2, 8, 8], data.clone()).unwrap();
        let got = forward(&weights, &input).unwrap();
        let img: Img = (0..2)
            .map(|c| (0..8).map(|y| (0..8).map(|x| data[(c * 8 + y) * 8 + x] as f64).collect()).collect())
            .collect();
        let want = reference(&weights.net, &img);
        for y in 0..8 {
            for x in 0..8 {
                let g = got.data()[y * 8 + x] as f64;
                assert!((g - want[0][y][x]).abs() <= 1e-5, "({y},{x}): {g} vs {}", want[0][y][x]);
            }
        }
    }
}
