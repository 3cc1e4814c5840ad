//! M-Net: a continuous occupancy field over global coordinates.

use rand::Rng;

use crate::autodiff::{Graph, Param, Var};
use crate::error::{Error, Result};
use crate::model::layers::{check_points, linear, linear_params, VarCursor};

/// Architecture of an [`MNet`]. The default mirrors the reference stack
/// FC(64)-FC(512)-FC(512)-FC(256)-FC(128)-FC(1).
#[derive(Clone, Debug)]
pub struct MNetConfig {
    /// Input coordinate dimensionality (2 for planar registration).
    pub input_dim: usize,
    /// Hidden layer widths; the final FC(1) + sigmoid is implicit.
    pub hidden: Vec<usize>,
}

impl MNetConfig {
    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.is_empty() || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument {
                op: "mnet",
                msg: format!("invalid architecture {self:?}"),
            });
        }
        Ok(())
    }
}

impl Default for MNetConfig {
    fn default() -> Self {
        MNetConfig { input_dim: 2, hidden: vec![64, 512, 512, 256, 128] }
    }
}

/// Occupancy network: coordinates `[n,D]` -> probabilities `[n]` in (0,1).
///
/// Hidden layers use ReLU; the scalar output passes through a sigmoid, so
/// the map is continuous and queryable at any resolution.
#[derive(Clone, Debug)]
pub struct MNet {
    config: MNetConfig,
    params: Vec<Param>,
}

impl MNet {
    pub fn new(config: MNetConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::new();
        let mut cin = config.input_dim;
        for (i, &width) in config.hidden.iter().enumerate() {
            params.extend(linear_params(rng, &format!("mnet.fc{i}"), cin, width));
            cin = width;
        }
        params.extend(linear_params(rng, "mnet.out", cin, 1));
        Ok(MNet { config, params })
    }

    pub fn config(&self) -> &MNetConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    /// Zero the final layer so the network outputs exactly 0.5 everywhere.
    pub fn zero_output_layer(&mut self) {
        let n = self.params.len();
        for p in &mut self.params[n - 2..] {
            p.value.data_mut().fill(0.0);
        }
    }

    /// Occupancy probabilities, one per input row: `[n,D] -> [n]`.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], x: Var) -> Result<Var> {
        check_points(g, "mnet", x, self.config.input_dim)?;
        let mut cursor = VarCursor::new("mnet", vars, self.params.len())?;
        let mut h = x;
        for _ in &self.config.hidden {
            let (w, b) = cursor.pair();
            h = linear(g, h, w, b, true)?;
        }
        let (w, b) = cursor.pair();
        let logits = linear(g, h, w, b, false)?;
        let probs = g.sigmoid(logits);
        let n = g.value(probs).rows();
        g.reshape(probs, vec![n])
    }
}
