//! Layer primitives on single samples in `(channels, height, width)` layout.
//!
//! Every forward function returns whatever its backward needs. Backward
//! functions accumulate parameter gradients with `+=` so per-sample results
//! can be summed in a fixed order.

use crate::scalar::Scalar;

/// One sample's activations, row-major `[c][h][w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Act<T> {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Act<T> {
    pub fn new(c: usize, h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), c * h * w, "activation size");
        Self { c, h, w, data }
    }

    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self::new(c, h, w, vec![T::zero(); c * h * w])
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.c, self.h, self.w]
    }
}

/// Square convolution with stride 1 and "same" zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv<T> {
    pub cin: usize,
    pub cout: usize,
    /// Kernel size, 1 or 3.
    pub k: usize,
    /// `[cout][cin][k][k]`.
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub struct ConvCache<T> {
    /// im2col matrix `[cin·k·k][h·w]`, or the input itself for 1×1.
    col: Vec<T>,
    h: usize,
    w: usize,
}

impl<T: Scalar> Conv<T> {
    pub fn zeros(cin: usize, cout: usize, k: usize) -> Self {
        assert!(k == 1 || k == 3, "kernel size {k}");
        Self {
            cin,
            cout,
            k,
            weight: vec![T::zero(); cout * cin * k * k],
            bias: vec![T::zero(); cout],
        }
    }

    fn patch(&self) -> usize {
        self.cin * self.k * self.k
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Conv<U> {
        Conv {
            cin: self.cin,
            cout: self.cout,
            k: self.k,
            weight: self.weight.iter().map(|&v| f(v)).collect(),
            bias: self.bias.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn im2col<T: Scalar>(x: &Act<T>) -> Vec<T> {
    let (h, w) = (x.h, x.w);
    let hw = h * w;
    let mut col = vec![T::zero(); x.c * 9 * hw];
    for ci in 0..x.c {
        let src = &x.data[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut col[((ci * 3 + ky) * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let srow = &src[sy as usize * w..][..w];
                    let drow = &mut row[y * w..][..w];
                    // dest x reads source x + kx - 1
                    match kx {
                        0 => drow[1..].copy_from_slice(&srow[..w - 1]),
                        1 => drow.copy_from_slice(srow),
                        _ => drow[..w - 1].copy_from_slice(&srow[1..]),
                    }
                }
            }
        }
    }
    col
}

fn col2im<T: Scalar>(col: &[T], c: usize, h: usize, w: usize) -> Act<T> {
    let hw = h * w;
    let mut out = Act::zeros(c, h, w);
    for ci in 0..c {
        let dst = &mut out.data[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[((ci * 3 + ky) * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let drow = &mut dst[sy as usize * w..][..w];
                    let srow = &row[y * w..][..w];
                    match kx {
                        0 => drow[..w - 1].iter_mut().zip(&srow[1..]).for_each(|(d, &s)| *d += s),
                        1 => drow.iter_mut().zip(srow).for_each(|(d, &s)| *d += s),
                        _ => drow[1..].iter_mut().zip(&srow[..w - 1]).for_each(|(d, &s)| *d += s),
                    }
                }
            }
        }
    }
    out
}

pub fn conv_forward<T: Scalar>(conv: &Conv<T>, x: &Act<T>) -> (Act<T>, ConvCache<T>) {
    assert_eq!(x.c, conv.cin, "conv input channels");
    let hw = x.plane();
    let col = if conv.k == 3 { im2col(x) } else { x.data.clone() };
    let mut out = Vec::with_capacity(conv.cout * hw);
    for &b in &conv.bias {
        out.extend(std::iter::repeat_n(b, hw));
    }
    T::gemm(conv.cout, conv.patch(), hw, T::one(), &conv.weight, false, &col, false, T::one(), &mut out);
    (Act::new(conv.cout, x.h, x.w, out), ConvCache { col, h: x.h, w: x.w })
}

/// Accumulates `dW`, `db` and returns `dX` when `need_input`.
pub fn conv_backward<T: Scalar>(
    conv: &Conv<T>,
    cache: &ConvCache<T>,
    grad_out: &Act<T>,
    grad_weight: &mut [T],
    grad_bias: &mut [T],
    need_input: bool,
) -> Option<Act<T>> {
    let hw = cache.h * cache.w;
    for (o, gb) in grad_bias.iter_mut().enumerate() {
        let mut s = T::zero();
        for &g in &grad_out.data[o * hw..(o + 1) * hw] {
            s += g;
        }
        *gb += s;
    }
    T::gemm(conv.cout, hw, conv.patch(), T::one(), &grad_out.data, false, &cache.col, true, T::one(), grad_weight);
    if !need_input {
        return None;
    }
    let mut dcol = vec![T::zero(); conv.patch() * hw];
    T::gemm(conv.patch(), conv.cout, hw, T::one(), &conv.weight, true, &grad_out.data, false, T::zero(), &mut dcol);
    Some(if conv.k == 3 {
        col2im(&dcol, conv.cin, cache.h, cache.w)
    } else {
        Act::new(conv.cin, cache.h, cache.w, dcol)
    })
}

pub fn relu_forward<T: Scalar>(x: &mut Act<T>) {
    for v in &mut x.data {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Masks `grad` where the ReLU output was not positive.
pub fn relu_backward<T: Scalar>(out: &Act<T>, grad: &mut Act<T>) {
    for (g, &y) in grad.data.iter_mut().zip(&out.data) {
        if y <= T::zero() {
            *g = T::zero();
        }
    }
}

/// 2×2 max pooling. Returns the flat input index of each maximum; ties go
/// to the first element in row-major order.
pub fn maxpool_forward<T: Scalar>(x: &Act<T>) -> (Act<T>, Vec<u32>) {
    assert!(x.h % 2 == 0 && x.w % 2 == 0, "pooling needs even extent");
    let (oh, ow) = (x.h / 2, x.w / 2);
    let mut out = Vec::with_capacity(x.c * oh * ow);
    let mut arg = Vec::with_capacity(x.c * oh * ow);
    for c in 0..x.c {
        for y in 0..oh {
            for xx in 0..ow {
                let base = (c * x.h + 2 * y) * x.w + 2 * xx;
                let mut best = base;
                for idx in [base + 1, base + x.w, base + x.w + 1] {
                    if x.data[idx] > x.data[best] {
                        best = idx;
                    }
                }
                out.push(x.data[best]);
                arg.push(best as u32);
            }
        }
    }
    (Act::new(x.c, oh, ow, out), arg)
}

pub fn maxpool_backward<T: Scalar>(grad_out: &Act<T>, argmax: &[u32], in_shape: [usize; 3]) -> Act<T> {
    let mut g = Act::zeros(in_shape[0], in_shape[1], in_shape[2]);
    for (&v, &i) in grad_out.data.iter().zip(argmax) {
        g.data[i as usize] += v;
    }
    g
}

/// Source taps of output index `o` for 2× bilinear upsampling with
/// half-pixel centers, clamped at the edges.
fn taps(o: usize, n: usize) -> [(usize, f64); 2] {
    let i = o / 2;
    let other = if o % 2 == 0 { i.saturating_sub(1) } else { (i + 1).min(n - 1) };
    [(i, 0.75), (other, 0.25)]
}

/// Bilinear 2× upsampling.
pub fn upsample_forward<T: Scalar>(x: &Act<T>) -> Act<T> {
    let (oh, ow) = (2 * x.h, 2 * x.w);
    let mut out = Act::zeros(x.c, oh, ow);
    for c in 0..x.c {
        let src = &x.data[c * x.plane()..][..x.plane()];
        let dst = &mut out.data[c * oh * ow..][..oh * ow];
        for y in 0..oh {
            for (sy, wy) in taps(y, x.h) {
                let srow = &src[sy * x.w..][..x.w];
                for xx in 0..ow {
                    let mut v = T::zero();
                    for (sx, wx) in taps(xx, x.w) {
                        v += T::of(wy * wx) * srow[sx];
                    }
                    dst[y * ow + xx] += v;
                }
            }
        }
    }
    out
}

pub fn upsample_backward<T: Scalar>(grad_out: &Act<T>) -> Act<T> {
    let (h, w) = (grad_out.h / 2, grad_out.w / 2);
    let mut g = Act::zeros(grad_out.c, h, w);
    for c in 0..grad_out.c {
        let src = &grad_out.data[c * grad_out.plane()..][..grad_out.plane()];
        let dst = &mut g.data[c * h * w..][..h * w];
        for y in 0..grad_out.h {
            for (sy, wy) in taps(y, h) {
                for x in 0..grad_out.w {
                    let v = src[y * grad_out.w + x];
                    for (sx, wx) in taps(x, w) {
                        dst[sy * w + sx] += T::of(wy * wx) * v;
                    }
                }
            }
        }
    }
    g
}

/// Channel concatenation `[a; b]`.
pub fn concat_forward<T: Scalar>(a: &Act<T>, b: &Act<T>) -> Act<T> {
    assert_eq!((a.h, a.w), (b.h, b.w), "concat extent");
    let mut data = a.data.clone();
    data.extend_from_slice(&b.data);
    Act::new(a.c + b.c, a.h, a.w, data)
}

pub fn concat_backward<T: Scalar>(grad: &Act<T>, ca: usize) -> (Act<T>, Act<T>) {
    let split = ca * grad.plane();
    (
        Act::new(ca, grad.h, grad.w, grad.data[..split].to_vec()),
        Act::new(grad.c - ca, grad.h, grad.w, grad.data[split..].to_vec()),
    )
}

/// Elementwise sum; its backward passes the gradient to both inputs.
pub fn add_forward<T: Scalar>(a: &Act<T>, b: &Act<T>) -> Act<T> {
    assert_eq!(a.shape(), b.shape(), "add shapes");
    Act::new(a.c, a.h, a.w, a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect())
}

/// Logistic function, kept strictly inside (0, 1) at the precision of `T`.
pub fn sigmoid_forward<T: Scalar>(x: &Act<T>) -> Act<T> {
    let hi = T::one() - T::epsilon() / T::of(2.0);
    let lo = T::min_positive_value();
    let data = x
        .data
        .iter()
        .map(|&z| {
            let y = if z >= T::zero() {
                T::one() / (T::one() + (-z).exp())
            } else {
                let e = z.exp();
                e / (T::one() + e)
            };
            y.max(lo).min(hi)
        })
        .collect();
    Act::new(x.c, x.h, x.w, data)
}

pub fn sigmoid_backward<T: Scalar>(out: &Act<T>, grad: &mut Act<T>) {
    for (g, &y) in grad.data.iter_mut().zip(&out.data) {
        let v = *g * y * (T::one() - y);
        // flush subnormals, which are very slow on most CPUs
        *g = if v.abs() < T::min_positive_value() { T::zero() } else { v };
    }
}

/// Mean absolute error over all elements and its gradient
/// `sign(pred − target) / n` with `sign(0) = 0`.
pub fn mae<T: Scalar>(pred: &[T], target: &[T]) -> (f64, Vec<T>) {
    assert_eq!(pred.len(), target.len(), "mae operand sizes");
    let n = pred.len() as f64;
    let inv = T::of(1.0 / n);
    let mut sum = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d.f64().abs();
            if d > T::zero() {
                inv
            } else if d < T::zero() {
                -inv
            } else {
                T::zero()
            }
        })
        .collect();
    (sum / n, grad)
}
