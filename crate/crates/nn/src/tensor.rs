use crate::error::NnError;
use crate::layers::Act;
use crate::scalar::Scalar;

/// Batch of images, row-major `[batch, channels, height, width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f32>,
}

impl Tensor4 {
    pub fn new(dims: [usize; 4], data: Vec<f32>) -> Result<Self, NnError> {
        let n: usize = dims.iter().product();
        if data.len() != n {
            return Err(NnError::Shape {
                layer: "tensor".into(),
                message: format!("{dims:?} needs {n} values, got {}", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(NnError::Numerical {
                layer: "tensor".into(),
                message: format!("non-finite value {} at index {i}", data[i]),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn sample_len(&self) -> usize {
        self.dims[1] * self.dims[2] * self.dims[3]
    }

    pub fn sample(&self, b: usize) -> &[f32] {
        let n = self.sample_len();
        &self.data[b * n..(b + 1) * n]
    }

    /// Sample `b` as an activation of element type `T`.
    pub fn act<T: Scalar>(&self, b: usize) -> Act<T> {
        let [_, c, h, w] = self.dims;
        Act::new(c, h, w, self.sample(b).iter().map(|&v| T::of(f64::from(v))).collect())
    }

    /// Stacks equally shaped samples.
    pub fn stack<T: Scalar>(samples: &[Act<T>]) -> Result<Self, NnError> {
        let Some(first) = samples.first() else {
            return Ok(Self::zeros([0, 0, 0, 0]));
        };
        let mut data = Vec::with_capacity(samples.len() * first.data.len());
        for s in samples {
            if s.shape() != first.shape() {
                return Err(NnError::Shape {
                    layer: "batch".into(),
                    message: format!("sample {:?} vs {:?}", s.shape(), first.shape()),
                });
            }
            data.extend(s.data.iter().map(|&v| v.f64() as f32));
        }
        Self::new([samples.len(), first.c, first.h, first.w], data)
    }
}
