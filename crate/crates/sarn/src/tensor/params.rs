use crate::rng::Pcg32;
use crate::tensor::Tensor;

/// Handle to one named parameter group inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// Ordered collection of named, trainable tensors.
///
/// Ids are dense indices in registration order, so iteration, gradient
/// buffers, and checkpoints all share one stable ordering.
#[derive(Debug, Default)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(!name.is_empty(), "parameter name must be non-empty");
        assert!(
            self.id_of(name).is_none(),
            "duplicate parameter name {:?}",
            name
        );
        self.names.push(name.to_string());
        self.tensors.push(tensor);
        ParamId(self.names.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &str, &mut Tensor)> {
        self.names
            .iter()
            .zip(&mut self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    /// Total scalar parameter count across all groups.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Adds `buf` into the per-tensor `grad` fields, allocating them lazily.
    /// Gradient reduction across workers must call this in a fixed order.
    pub fn accumulate(&mut self, buf: &GradBuffer) {
        assert_eq!(buf.lens.len(), self.tensors.len(), "foreign grad buffer");
        for (tensor, slot) in self.tensors.iter_mut().zip(&buf.slots) {
            if let Some(src) = slot {
                let grad = tensor.grad_mut();
                for (g, &s) in grad.iter_mut().zip(src) {
                    *g += s;
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.zero_grad();
        }
    }
}

/// Per-group gradient accumulator detached from the parameter values.
///
/// `Graph::backward` adds into one of these; each worker owns its own, and a
/// deterministic reduction merges them (or feeds them to
/// [`ParamSet::accumulate`]) in a fixed order. Groups never reached by any
/// backward pass stay unallocated, which lets the optimizer distinguish "zero
/// gradient" from "no gradient ever produced".
#[derive(Debug, Clone)]
pub struct GradBuffer {
    lens: Vec<usize>,
    slots: Vec<Option<Vec<f32>>>,
}

impl GradBuffer {
    pub fn new(params: &ParamSet) -> Self {
        let lens: Vec<usize> = params.tensors.iter().map(Tensor::numel).collect();
        let slots = vec![None; lens.len()];
        GradBuffer { lens, slots }
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId) -> &mut [f32] {
        let len = self.lens[id.0];
        self.slots[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub fn get(&self, id: ParamId) -> Option<&[f32]> {
        self.slots[id.0].as_deref()
    }

    /// Elementwise `self += other`. Merge order must be fixed by the caller
    /// for reproducible sums.
    pub fn merge_from(&mut self, other: &GradBuffer) {
        assert_eq!(self.lens, other.lens, "mismatched grad buffers");
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            let Some(src) = src else { continue };
            match dst {
                Some(d) => {
                    for (a, &b) in d.iter_mut().zip(src) {
                        *a += b;
                    }
                }
                None => *dst = Some(src.clone()),
            }
        }
    }

    /// Resets allocated slots to zero; unallocated slots stay unallocated.
    pub fn zero(&mut self) {
        for slot in self.slots.iter_mut().flatten() {
            slot.fill(0.0);
        }
    }
}

/// He-style uniform init: limit = sqrt(6 / fan_in).
pub fn he_uniform(shape: &[usize], fan_in: usize, rng: &mut Pcg32) -> Tensor {
    assert!(fan_in > 0, "he_uniform: fan_in must be positive");
    let limit = (6.0 / fan_in as f32).sqrt();
    let numel: usize = shape.iter().product();
    let data: Vec<f32> = (0..numel).map(|_| rng.next_symmetric(limit)).collect();
    Tensor::new(shape.to_vec(), data)
}
