//! L-Net: regresses the sensor pose of a single scan from its local points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Param, Var};
use crate::error::{Error, Result};
use crate::model::layers::{check_points, conv_params, linear, linear_params, VarCursor};

/// Feature-extractor style for the localization network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LNetVariant {
    /// Dilated 1-D convolutions along the beam axis; requires organized
    /// (beam-ordered) scans.
    Conv,
    /// Shared per-point MLP (order-independent); works on unorganized scans.
    Pointwise,
}

/// Architecture of an [`LNet`]. The default mirrors the reference stack
/// C(64)-C(128)-C(1024)-M(1024)-FC(512)-FC(256)-FC(3) with kernel 3 and
/// dilation 2; smaller feature/head sizes are used for fast CPU benchmarks.
#[derive(Clone, Debug)]
pub struct LNetConfig {
    pub variant: LNetVariant,
    /// Channel widths of the per-point / convolutional feature layers.
    pub features: Vec<usize>,
    /// Hidden widths of the fully connected head after global max-pooling.
    pub head: Vec<usize>,
    pub kernel: usize,
    pub dilation: usize,
}

impl LNetConfig {
    pub fn conv_default() -> Self {
        LNetConfig {
            variant: LNetVariant::Conv,
            features: vec![64, 128, 1024],
            head: vec![512, 256],
            kernel: 3,
            dilation: 2,
        }
    }

    pub fn pointwise_default() -> Self {
        LNetConfig { variant: LNetVariant::Pointwise, ..Self::conv_default() }
    }

    fn validate(&self) -> Result<()> {
        let bad = self.features.is_empty()
            || self.head.iter().chain(&self.features).any(|&w| w == 0)
            || self.kernel == 0
            || self.kernel % 2 == 0
            || self.dilation == 0;
        if bad {
            return Err(Error::InvalidArgument {
                op: "lnet",
                msg: format!("invalid architecture {self:?}"),
            });
        }
        Ok(())
    }
}

impl Default for LNetConfig {
    fn default() -> Self {
        Self::conv_default()
    }
}

/// Localization network: local scan `[n,2]` -> pose `(tx, ty, alpha)`.
///
/// Parameters are shared across all scans of a dataset; hidden layers use
/// ReLU and the 3-wide output layer has no activation. The rotation output
/// is left unconstrained during optimization.
#[derive(Clone, Debug)]
pub struct LNet {
    config: LNetConfig,
    params: Vec<Param>,
}

impl LNet {
    pub fn new(config: LNetConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut params = Vec::new();
        let mut cin = 2;
        for (i, &cout) in config.features.iter().enumerate() {
            let name = format!("lnet.feat{i}");
            match config.variant {
                LNetVariant::Conv => {
                    params.extend(conv_params(rng, &name, config.kernel, cin, cout));
                }
                LNetVariant::Pointwise => params.extend(linear_params(rng, &name, cin, cout)),
            }
            cin = cout;
        }
        for (i, &width) in config.head.iter().enumerate() {
            params.extend(linear_params(rng, &format!("lnet.head{i}"), cin, width));
            cin = width;
        }
        params.extend(linear_params(rng, "lnet.out", cin, 3));
        Ok(LNet { config, params })
    }

    pub fn config(&self) -> &LNetConfig {
        &self.config
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    /// Forward one scan (an `[n,2]` matrix var) to its pose, a `[3]` vector
    /// var holding `(tx, ty, alpha)`.
    pub fn forward(&self, g: &mut Graph, vars: &[Var], scan: Var) -> Result<Var> {
        check_points(g, "lnet", scan, 2)?;
        let mut cursor = VarCursor::new("lnet", vars, self.params.len())?;
        let mut h = scan;
        for _ in &self.config.features {
            let (w, b) = cursor.pair();
            h = match self.config.variant {
                LNetVariant::Conv => {
                    let c = g.conv1d(h, w, self.config.dilation)?;
                    let c = g.bias_add(c, b)?;
                    g.relu(c)
                }
                LNetVariant::Pointwise => linear(g, h, w, b, true)?,
            };
        }
        let pooled = g.max_rows(h)?;
        let width = g.value(pooled).len();
        let mut h = g.reshape(pooled, vec![1, width])?;
        for _ in &self.config.head {
            let (w, b) = cursor.pair();
            h = linear(g, h, w, b, true)?;
        }
        let (w, b) = cursor.pair();
        let out = linear(g, h, w, b, false)?;
        g.reshape(out, vec![3])
    }
}
