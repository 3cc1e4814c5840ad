//! Layer parameter construction and forward helpers shared by both networks.

use rand::Rng;

use crate::autodiff::{Graph, Param, Tensor, Var};
use crate::error::{Error, Result};

/// Uniform fan-in initialization: every entry from `±1/sqrt(fan_in)`.
fn init_uniform(rng: &mut impl Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Weight `[fan_in, fan_out]` + bias `[fan_out]` for a fully connected layer.
pub(crate) fn linear_params(
    rng: &mut impl Rng,
    name: &str,
    fan_in: usize,
    fan_out: usize,
) -> Vec<Param> {
    let w = Tensor::new(vec![fan_in, fan_out], init_uniform(rng, fan_in * fan_out, fan_in))
        .expect("linear weight shape");
    let b = Tensor::vector(init_uniform(rng, fan_out, fan_in));
    vec![Param::new(format!("{name}.w"), w), Param::new(format!("{name}.b"), b)]
}

/// Weight `[taps, cin, cout]` + bias `[cout]` for a 1-D convolution.
pub(crate) fn conv_params(
    rng: &mut impl Rng,
    name: &str,
    taps: usize,
    cin: usize,
    cout: usize,
) -> Vec<Param> {
    let fan_in = taps * cin;
    let w = Tensor::new(vec![taps, cin, cout], init_uniform(rng, fan_in * cout, fan_in))
        .expect("conv weight shape");
    let b = Tensor::vector(init_uniform(rng, cout, fan_in));
    vec![Param::new(format!("{name}.w"), w), Param::new(format!("{name}.b"), b)]
}

/// Sequential reader over the bound parameter [`Var`]s of one network.
pub(crate) struct VarCursor<'a> {
    vars: &'a [Var],
    at: usize,
}

impl<'a> VarCursor<'a> {
    pub fn new(op: &'static str, vars: &'a [Var], expected: usize) -> Result<Self> {
        if vars.len() != expected {
            return Err(Error::InvalidArgument {
                op,
                msg: format!("expected {expected} bound parameters, got {}", vars.len()),
            });
        }
        Ok(VarCursor { vars, at: 0 })
    }

    /// Next (weight, bias) pair in declaration order.
    pub fn pair(&mut self) -> (Var, Var) {
        let (w, b) = (self.vars[self.at], self.vars[self.at + 1]);
        self.at += 2;
        (w, b)
    }
}

/// `relu(x @ w + b)` or the linear part only when `activate` is false.
pub(crate) fn linear(
    g: &mut Graph,
    x: Var,
    w: Var,
    b: Var,
    activate: bool,
) -> Result<Var> {
    let h = g.matmul(x, w)?;
    let h = g.bias_add(h, b)?;
    Ok(if activate { g.relu(h) } else { h })
}

/// Validate an `[n, width]` point matrix input.
pub(crate) fn check_points(g: &Graph, op: &'static str, x: Var, width: usize) -> Result<()> {
    let v = g.value(x);
    if !v.is_matrix() || v.cols() != width || v.rows() == 0 {
        return Err(Error::InvalidArgument {
            op,
            msg: format!("expected a non-empty [n,{width}] input, got shape {:?}", v.shape()),
        });
    }
    Ok(())
}
