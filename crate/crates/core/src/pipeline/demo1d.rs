//! One-dimensional sanity demo: descending a wiggly objective directly on the
//! scalar variable versus reparameterizing the variable as the output of a
//! small network and descending in parameter space. The network version tends
//! to hop between basins instead of stalling in the nearest local minimum.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{bind_params, pull_grads, Graph, Param, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::layers::{linear_params, VarCursor};

/// Hidden widths of the demo network (input and output are both width 1).
const DEMO_HIDDEN: [usize; 4] = [10, 20, 30, 40];

/// Trajectories and final values of both optimization styles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Demo1DResult {
    /// `x` before each direct gradient step (length = iterations).
    pub x_trace_direct: Vec<f64>,
    /// `f_theta(z)` before each network-space step (length = iterations).
    pub x_trace_net: Vec<f64>,
    /// Latent input `z` before each network-space step (length = iterations).
    pub z_trace: Vec<f64>,
    /// `x` after the last direct step.
    pub final_x_direct: f64,
    /// `f_theta(z)` after the last network-space step.
    pub final_x_net: f64,
    /// Objective value at `final_x_direct`.
    pub final_l_direct: f64,
    /// Objective value at `final_x_net`.
    pub final_l_net: f64,
}

/// The demo objective `L(x) = x^2 / 2 + 5 sin(10 x) + 20 sin(x)`.
pub fn demo_objective(x: f64) -> f64 {
    0.5 * x * x + 5.0 * (10.0 * x).sin() + 20.0 * x.sin()
}

/// Graph version of [`demo_objective`] applied elementwise to `x`.
fn objective_var(g: &mut Graph, x: Var) -> Result<Var> {
    let sq = g.mul(x, x)?;
    let quad = g.mul_const(sq, 0.5);
    let x10 = g.mul_const(x, 10.0);
    let s10 = g.sin(x10);
    let wiggle = g.mul_const(s10, 5.0);
    let s1 = g.sin(x);
    let slow = g.mul_const(s1, 20.0);
    let partial = g.add(quad, wiggle)?;
    g.add(partial, slow)
}

/// Forward pass of the demo network: four ELU hidden layers, linear output.
fn net_forward(g: &mut Graph, z: Var, vars: &[Var]) -> Result<Var> {
    let mut cursor = VarCursor::new("demo_forward", vars, 2 * (DEMO_HIDDEN.len() + 1))?;
    let mut cur = z;
    for _ in DEMO_HIDDEN {
        let (w, b) = cursor.pair();
        let h = g.matmul(cur, w)?;
        let h = g.bias_add(h, b)?;
        cur = g.elu(h);
    }
    let (w, b) = cursor.pair();
    let h = g.matmul(cur, w)?;
    g.bias_add(h, b)
}

/// Fresh demo-network parameters plus the latent scalar, in draw order.
fn demo_params(seed: u64) -> Vec<Param> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::new();
    let mut fan_in = 1;
    for (i, &width) in DEMO_HIDDEN.iter().enumerate() {
        params.extend(linear_params(&mut rng, &format!("demo.fc{}", i + 1), fan_in, width));
        fan_in = width;
    }
    params.extend(linear_params(&mut rng, "demo.out", fan_in, 1));
    let z0: f64 = rng.gen_range(-1.0..1.0);
    params.push(Param::new("demo.z", Tensor::new(vec![1, 1], vec![z0]).expect("latent shape")));
    params
}

/// Current network output for the given parameters (no gradients recorded).
fn net_value(params: &[Param]) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.constant(p.value.clone())).collect();
    let (net_vars, z) = (&vars[..vars.len() - 1], vars[vars.len() - 1]);
    let x = net_forward(&mut g, z, net_vars)?;
    Ok(g.value(x).item())
}

/// Run both optimizations from a shared starting point `x0 = f_theta0(z0)`.
///
/// Both sides use plain gradient descent with the same learning rate and
/// iteration count; traces record values *before* each update.
pub fn demo_1d(iterations: usize, lr: f64, seed: u64) -> Result<Demo1DResult> {
    if iterations == 0 {
        return Err(Error::InvalidArgument { op: "demo_1d", msg: "iterations must be positive".into() });
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidArgument { op: "demo_1d", msg: format!("learning rate must be positive, got {lr}") });
    }

    let mut params = demo_params(seed);
    let x0 = net_value(&params)?;

    // Direct descent on the scalar.
    let mut x = x0;
    let mut x_trace_direct = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        x_trace_direct.push(x);
        let mut g = Graph::new();
        let xv = g.leaf(Tensor::scalar(x), true);
        let loss = objective_var(&mut g, xv)?;
        g.backward(loss)?;
        let grad = g.grad(xv).expect("scalar leaf gradient").data()[0];
        x -= lr * grad;
    }
    let final_x_direct = x;

    // Descent on the network parameters and latent input jointly.
    let mut x_trace_net = Vec::with_capacity(iterations);
    let mut z_trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut g = Graph::new();
        let vars = bind_params(&mut g, &params);
        let (net_vars, z) = (&vars[..vars.len() - 1], vars[vars.len() - 1]);
        let xv = net_forward(&mut g, z, net_vars)?;
        x_trace_net.push(g.value(xv).item());
        z_trace.push(params.last().expect("latent param").value.data()[0]);
        let loss = objective_var(&mut g, xv)?;
        g.backward(loss)?;
        pull_grads(&g, &vars, &mut params)?;
        for p in params.iter_mut() {
            let grads = p.grad.data().to_vec();
            for (v, gr) in p.value.data_mut().iter_mut().zip(grads) {
                *v -= lr * gr;
            }
            p.zero_grad();
        }
    }
    let final_x_net = net_value(&params)?;

    Ok(Demo1DResult {
        x_trace_direct,
        x_trace_net,
        z_trace,
        final_x_direct,
        final_x_net,
        final_l_direct: demo_objective(final_x_direct),
        final_l_net: demo_objective(final_x_net),
    })
}
