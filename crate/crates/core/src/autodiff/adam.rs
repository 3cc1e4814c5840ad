use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// A named trainable tensor with a persistent gradient accumulator.
///
/// Parameters outlive any single tape: each forward pass binds them as fresh
/// leaves, and [`pull_grads`] copies the tape gradients back here.
#[derive(Clone, Debug)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape().to_vec());
        Param { name: name.into(), value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Register every parameter as a differentiable leaf on `graph`.
pub fn bind_params(graph: &mut Graph, params: &[Param]) -> Vec<Var> {
    params.iter().map(|p| graph.leaf(p.value.clone(), true)).collect()
}

/// Accumulate tape gradients into the parameters bound at `vars`.
pub fn pull_grads(graph: &Graph, vars: &[Var], params: &mut [Param]) -> Result<()> {
    for (v, p) in vars.iter().zip(params.iter_mut()) {
        let g = graph.grad(*v).ok_or_else(|| Error::MissingGrad(p.name.clone()))?;
        for (acc, &gv) in p.grad.data_mut().iter_mut().zip(g.data()) {
            *acc += gv;
        }
    }
    Ok(())
}

/// Adam optimizer with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    /// Apply one update from the accumulated gradients, then zero them.
    pub fn step(&mut self, params: &mut [Param]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::InvalidArgument {
                op: "adam",
                msg: format!(
                    "optimizer tracks {} parameters but step got {}",
                    self.m.len(),
                    params.len()
                ),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            if m.len() != p.value.len() {
                return Err(Error::InvalidArgument {
                    op: "adam",
                    msg: format!("parameter {} changed size", p.name),
                });
            }
            for ((x, &g), (mi, vi)) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(p.grad.data())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *x -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
