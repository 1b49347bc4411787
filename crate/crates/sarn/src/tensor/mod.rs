//! Reverse-mode automatic differentiation over flat f32 buffers.
//!
//! The engine is deliberately small: it provides exactly the operators the
//! models in this crate need (convolution, affine maps, ReLU, layer norm,
//! softmax, cross-entropy, concatenation and a few reductions), recorded on a
//! per-batch tape that is replayed in reverse for gradients. Storage is f32;
//! reductions (sums, means, variances) accumulate in f64.

mod adam;
mod checkpoint;
mod gradcheck;
mod graph;
pub(crate) mod kernels;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, read_checkpoint, write_checkpoint, Checkpoint,
};
pub use gradcheck::grad_check;
pub use graph::{Graph, Var};
pub use params::{he_uniform, GradBuffer, ParamId, ParamSet};

/// Dense n-dimensional array of f32 in row-major order.
///
/// Shape/data consistency is asserted at construction; code paths that build
/// tensors from untrusted bytes validate sizes before constructing.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    /// Gradient buffer, populated on parameter tensors by
    /// [`ParamSet::accumulate`] and consumed by the optimizer.
    pub grad: Option<Vec<f32>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            numel,
            data.len(),
            "shape {:?} implies {} elements, got {}",
            shape,
            numel,
            data.len()
        );
        assert!(
            shape.iter().all(|&d| d > 0),
            "zero-sized dimension in shape {:?}",
            shape
        );
        Tensor {
            shape,
            data,
            grad: None,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
            grad: None,
        }
    }

    pub fn scalar(v: f32) -> Self {
        Tensor {
            shape: vec![],
            data: vec![v],
            grad: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// Simultaneous access to values and the gradient slot.
    pub fn data_and_grad_mut(&mut self) -> (&mut [f32], &mut Option<Vec<f32>>) {
        (&mut self.data, &mut self.grad)
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    /// True for rank-0 tensors and single-element higher ranks.
    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn item(&self) -> f32 {
        self.data[0]
    }

    /// Ensures the gradient buffer exists and returns it.
    pub fn grad_mut(&mut self) -> &mut [f32] {
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self.grad.as_mut().unwrap()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.fill(0.0);
        }
    }
}
