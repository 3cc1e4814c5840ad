use crate::autodiff::ops::Op;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

pub(crate) struct Node {
    pub op: Op,
    pub inputs: Vec<Var>,
    pub value: Tensor,
    pub requires_grad: bool,
}

/// Dynamic tape for reverse-mode differentiation.
///
/// Nodes are appended during the forward pass; every input of a node refers
/// to an earlier node, so reverse append order is a valid topological order
/// for `backward`. A graph is rebuilt for every forward pass.
#[derive(Default)]
pub struct Graph {
    pub(crate) nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new(), grads: Vec::new() }
    }

    /// Insert a leaf tensor. Leaves with `requires_grad` accumulate the sum
    /// of gradients over all their uses.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(Op::Leaf, vec![], value, requires_grad)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.constant(Tensor::scalar(value))
    }

    pub(crate) fn push(
        &mut self,
        op: Op,
        inputs: Vec<Var>,
        value: Tensor,
        requires_grad: bool,
    ) -> Var {
        let id = self.nodes.len();
        self.nodes.push(Node { op, inputs, value, requires_grad });
        Var(id)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last `backward` loss with respect to `v`.
    /// Present for leaves with `requires_grad`; interior gradients are
    /// discarded as soon as they have been propagated.
    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Reverse pass from a scalar loss. Visits each node exactly once in
    /// reverse append order and populates gradients for differentiable leaves.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(Error::NonScalarLoss { shape: loss_value.shape().to_vec() });
        }

        let mut grads: Vec<Option<Tensor>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Tensor::full(loss_value.shape().to_vec(), 1.0));

        for idx in (0..self.nodes.len()).rev() {
            if !self.nodes[idx].requires_grad {
                grads[idx] = None;
                continue;
            }
            if matches!(self.nodes[idx].op, Op::Leaf) {
                continue; // keep accumulated leaf gradient
            }
            let Some(gout) = grads[idx].take() else { continue };
            self.propagate(idx, &gout, &mut grads);
        }

        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, idx: usize, gout: &Tensor, grads: &mut [Option<Tensor>]) {
        let node = &self.nodes[idx];
        let input_values: Vec<&Tensor> =
            node.inputs.iter().map(|v| &self.nodes[v.0].value).collect();
        for (slot, input) in node.inputs.iter().enumerate() {
            if !self.nodes[input.0].requires_grad {
                continue;
            }
            let shape = self.nodes[input.0].value.shape().to_vec();
            let gin = grads[input.0].get_or_insert_with(|| Tensor::zeros(shape));
            node.op
                .accumulate_input_grad(slot, &input_values, &node.value, gout, gin);
        }
    }
}
