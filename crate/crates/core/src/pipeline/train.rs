//! Gradient-based registration: network training and direct pose descent.

use std::ops::Range;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{bind_params, pull_grads, Adam, Graph, Param, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{self, transform_points, Pose2, Trajectory};
use crate::model::{
    lnet_poses, sample_free_space, total_loss_with_poses, FreeSpaceSamples, LNet, LNetConfig,
    LossConfig, MNet, MNetConfig,
};
use crate::pipeline::icp::{run_icp_poses, IcpMetric};
use crate::pipeline::{
    compute_metrics, derive_seed, wrap_angle, ParamSnapshot, RegistrationResult, RunConfig,
    Variant, WarmStart,
};
use crate::simulator::SimDataset;

/// Pre-transform every scan by its coarse pose. The refinement estimated on
/// the returned scans composes with the coarse poses: the final absolute
/// pose of scan `i` is `delta_i ∘ coarse_i`.
pub fn warm_start_compose(
    scans: &[Vec<[f64; 2]>],
    coarse: &[Pose2],
) -> Result<Vec<Vec<[f64; 2]>>> {
    if scans.len() != coarse.len() {
        return Err(Error::LengthMismatch {
            what: "scans vs coarse poses",
            lhs: scans.len(),
            rhs: coarse.len(),
        });
    }
    Ok(scans.iter().zip(coarse).map(|(s, p)| transform_points(p, s)).collect())
}

struct Prepared {
    /// What the networks see: warm-start pre-transformed, scaled scans.
    net_scans: Vec<Vec<[f64; 2]>>,
    /// Original local scans, for metrics against ground truth.
    raw_scans: Vec<Vec<[f64; 2]>>,
    coarse: Option<Trajectory>,
    scale: f64,
    gt: Trajectory,
}

fn auto_scale(scans: &[Vec<[f64; 2]>]) -> f64 {
    scans
        .iter()
        .flatten()
        .flat_map(|p| [p[0].abs(), p[1].abs()])
        .fold(1.0f64, f64::max)
}

fn prepare(dataset: &SimDataset, cfg: &RunConfig) -> Result<Prepared> {
    let raw_scans = dataset.scans();
    if raw_scans.len() < 2 {
        return Err(Error::InvalidArgument {
            op: "register",
            msg: format!("need at least 2 scans, got {}", raw_scans.len()),
        });
    }
    let coarse = match cfg.warm_start {
        WarmStart::None => None,
        WarmStart::IcpPoint => {
            Some(run_icp_poses(&raw_scans, IcpMetric::Point, cfg.icp_max_iter, cfg.icp_tol)?)
        }
        WarmStart::IcpPlane => {
            Some(run_icp_poses(&raw_scans, IcpMetric::Plane, cfg.icp_max_iter, cfg.icp_tol)?)
        }
    };
    let pre = match &coarse {
        Some(c) => warm_start_compose(&raw_scans, c)?,
        None => raw_scans.clone(),
    };
    let scale = match cfg.coord_scale {
        Some(s) => s,
        None => auto_scale(&pre),
    };
    let net_scans = pre
        .iter()
        .map(|s| s.iter().map(|p| [p[0] / scale, p[1] / scale]).collect())
        .collect();
    Ok(Prepared { net_scans, raw_scans, coarse, scale, gt: dataset.gt_poses() })
}

/// Undo coordinate scaling and warm-start composition; wrap rotations into
/// the reporting range.
fn finalize_poses(scaled: &[[f64; 3]], scale: f64, coarse: Option<&Trajectory>) -> Trajectory {
    scaled
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let delta = Pose2::new(p[0] * scale, p[1] * scale, p[2]);
            let abs = match coarse {
                Some(c) => delta.compose(&c[i]),
                None => delta,
            };
            Pose2::new(abs.tx, abs.ty, wrap_angle(abs.alpha))
        })
        .collect()
}

fn chunk_ranges(len: usize, batch: usize) -> Vec<Range<usize>> {
    (0..len).step_by(batch).map(|s| s..(s + batch).min(len)).collect()
}

fn epoch_samples(
    scans: &[Vec<[f64; 2]>],
    range: &Range<usize>,
    cfg: &RunConfig,
    epoch: usize,
) -> Result<Vec<FreeSpaceSamples>> {
    range
        .clone()
        .map(|i| {
            sample_free_space(
                &scans[i],
                cfg.samples_per_ray,
                derive_seed(cfg.seed, epoch as u64, i as u64),
            )
        })
        .collect()
}

fn loss_config(cfg: &RunConfig) -> LossConfig {
    LossConfig {
        lambda: cfg.lambda,
        samples_per_ray: cfg.samples_per_ray,
        neighbor_window: cfg.neighbor_window,
    }
}

fn lnet_config(cfg: &RunConfig) -> LNetConfig {
    LNetConfig {
        variant: cfg.lnet_variant,
        features: cfg.lnet_features.clone(),
        head: cfg.lnet_head.clone(),
        kernel: cfg.lnet_kernel,
        dilation: cfg.lnet_dilation,
    }
}

fn mnet_config(cfg: &RunConfig) -> MNetConfig {
    MNetConfig { input_dim: 2, hidden: cfg.mnet_hidden.clone() }
}

/// Record the ATE of the poses entering this epoch (world frame).
fn push_ate(
    trace: &mut Vec<f64>,
    scaled: &[[f64; 3]],
    prep: &Prepared,
) -> Result<()> {
    let poses = finalize_poses(scaled, prep.scale, prep.coarse.as_ref());
    trace.push(geometry::ate(&poses, &prep.gt)?);
    Ok(())
}

fn check_finite(value: f64, epoch: usize) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss { epoch, value });
    }
    Ok(())
}

/// Train the localization and occupancy networks against the unsupervised
/// loss and report the final per-scan pose estimates.
pub fn run_deepmapping(dataset: &SimDataset, cfg: &RunConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    if cfg.variant != Variant::Deepmapping {
        return Err(Error::InvalidArgument {
            op: "run_deepmapping",
            msg: format!("config variant is {:?}", cfg.variant),
        });
    }
    let started = Instant::now();
    let prep = prepare(dataset, cfg)?;
    let k = prep.net_scans.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lnet = LNet::new(lnet_config(cfg), &mut rng)?;
    let mut mnet = MNet::new(mnet_config(cfg), &mut rng)?;
    let mut adam_l = Adam::new(cfg.lr);
    let mut adam_m = Adam::new(cfg.lr);
    let lcfg = loss_config(cfg);
    let chunks = chunk_ranges(k, cfg.batch_size);

    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut ate_trace = Vec::with_capacity(cfg.epochs);
    let mut snapshots = Vec::new();
    let mut initial_poses = Vec::new();

    for epoch in 0..cfg.epochs {
        if cfg.log_param_epochs.contains(&epoch) {
            snapshots.push(snapshot(epoch, lnet.params(), &mnet));
        }
        let mut weighted_loss = 0.0;
        let mut epoch_poses = vec![[0.0f64; 3]; k];
        for range in &chunks {
            let samples = epoch_samples(&prep.net_scans, range, cfg, epoch)?;
            let scans = &prep.net_scans[range.clone()];

            let mut g = Graph::new();
            let lvars = bind_params(&mut g, lnet.params());
            let mvars = bind_params(&mut g, mnet.params());
            let poses = lnet_poses(&mut g, &lnet, &lvars, scans)?;
            let loss =
                total_loss_with_poses(&mut g, &mnet, &mvars, scans, &samples, &poses, &lcfg)?;
            let value = g.value(loss).item();
            check_finite(value, epoch)?;
            weighted_loss += value * range.len() as f64;
            for (i, pv) in range.clone().zip(&poses) {
                let d = g.value(*pv).data();
                epoch_poses[i] = [d[0], d[1], d[2]];
            }

            g.backward(loss)?;
            pull_grads(&g, &lvars, lnet.params_mut())?;
            pull_grads(&g, &mvars, mnet.params_mut())?;
            adam_l.step(lnet.params_mut())?;
            adam_m.step(mnet.params_mut())?;
        }
        loss_trace.push(weighted_loss / k as f64);
        push_ate(&mut ate_trace, &epoch_poses, &prep)?;
        if epoch == 0 {
            initial_poses = finalize_poses(&epoch_poses, prep.scale, prep.coarse.as_ref());
        }
    }
    if cfg.log_param_epochs.contains(&cfg.epochs) {
        snapshots.push(snapshot(cfg.epochs, lnet.params(), &mnet));
    }

    // Final forward pass with the trained parameters.
    let mut final_scaled = vec![[0.0f64; 3]; k];
    for range in &chunks {
        let mut g = Graph::new();
        let lvars: Vec<Var> =
            lnet.params().iter().map(|p| g.constant(p.value.clone())).collect();
        let poses = lnet_poses(&mut g, &lnet, &lvars, &prep.net_scans[range.clone()])?;
        for (i, pv) in range.clone().zip(&poses) {
            let d = g.value(*pv).data();
            final_scaled[i] = [d[0], d[1], d[2]];
        }
    }
    let estimated = finalize_poses(&final_scaled, prep.scale, prep.coarse.as_ref());
    let metrics = Some(compute_metrics(&estimated, &prep.raw_scans, &prep.gt)?);

    Ok(RegistrationResult {
        estimated_poses: estimated,
        initial_poses,
        loss_trace,
        ate_trace,
        metrics,
        wall_time: started.elapsed().as_secs_f64(),
        coord_scale: prep.scale,
        config: cfg.clone(),
        param_snapshots: snapshots,
    })
}

/// Optimize raw pose variables (initialized from one untrained L-Net
/// forward pass) jointly with the occupancy network.
pub fn run_direct_opt(dataset: &SimDataset, cfg: &RunConfig) -> Result<RegistrationResult> {
    cfg.validate()?;
    if cfg.variant != Variant::Direct {
        return Err(Error::InvalidArgument {
            op: "run_direct_opt",
            msg: format!("config variant is {:?}", cfg.variant),
        });
    }
    let started = Instant::now();
    let prep = prepare(dataset, cfg)?;
    let k = prep.net_scans.len();

    // Same RNG discipline as run_deepmapping, so the untrained L-Net (and
    // hence the initial poses) match that run bit for bit.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lnet = LNet::new(lnet_config(cfg), &mut rng)?;
    let mut mnet = MNet::new(mnet_config(cfg), &mut rng)?;

    let mut init = Vec::with_capacity(3 * k);
    {
        let mut g = Graph::new();
        let lvars: Vec<Var> =
            lnet.params().iter().map(|p| g.constant(p.value.clone())).collect();
        let poses = lnet_poses(&mut g, &lnet, &lvars, &prep.net_scans)?;
        for pv in &poses {
            init.extend_from_slice(g.value(*pv).data());
        }
    }
    drop(lnet);
    let mut pose_param = vec![Param::new("poses", Tensor::new(vec![k, 3], init)?)];

    let mut adam_p = Adam::new(cfg.lr);
    let mut adam_m = Adam::new(cfg.lr);
    let lcfg = loss_config(cfg);
    let chunks = chunk_ranges(k, cfg.batch_size);

    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut ate_trace = Vec::with_capacity(cfg.epochs);
    let mut snapshots = Vec::new();
    let mut initial_poses = Vec::new();

    for epoch in 0..cfg.epochs {
        if cfg.log_param_epochs.contains(&epoch) {
            snapshots.push(snapshot(epoch, &pose_param, &mnet));
        }
        let epoch_poses: Vec<[f64; 3]> = pose_param[0]
            .value
            .data()
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        if epoch == 0 {
            initial_poses = finalize_poses(&epoch_poses, prep.scale, prep.coarse.as_ref());
        }
        push_ate(&mut ate_trace, &epoch_poses, &prep)?;

        let mut weighted_loss = 0.0;
        for range in &chunks {
            let samples = epoch_samples(&prep.net_scans, range, cfg, epoch)?;
            let scans = &prep.net_scans[range.clone()];

            let mut g = Graph::new();
            let pvars = bind_params(&mut g, &pose_param);
            let mvars = bind_params(&mut g, mnet.params());
            let poses: Vec<Var> = range
                .clone()
                .map(|i| {
                    let row = g.gather_rows(pvars[0], vec![i])?;
                    g.reshape(row, vec![3])
                })
                .collect::<Result<_>>()?;
            let loss =
                total_loss_with_poses(&mut g, &mnet, &mvars, scans, &samples, &poses, &lcfg)?;
            let value = g.value(loss).item();
            check_finite(value, epoch)?;
            weighted_loss += value * range.len() as f64;

            g.backward(loss)?;
            pull_grads(&g, &pvars, &mut pose_param)?;
            pull_grads(&g, &mvars, mnet.params_mut())?;
            adam_p.step(&mut pose_param)?;
            adam_m.step(mnet.params_mut())?;
        }
        loss_trace.push(weighted_loss / k as f64);
    }
    if cfg.log_param_epochs.contains(&cfg.epochs) {
        snapshots.push(snapshot(cfg.epochs, &pose_param, &mnet));
    }

    let final_scaled: Vec<[f64; 3]> = pose_param[0]
        .value
        .data()
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let estimated = finalize_poses(&final_scaled, prep.scale, prep.coarse.as_ref());
    let metrics = Some(compute_metrics(&estimated, &prep.raw_scans, &prep.gt)?);

    Ok(RegistrationResult {
        estimated_poses: estimated,
        initial_poses,
        loss_trace,
        ate_trace,
        metrics,
        wall_time: started.elapsed().as_secs_f64(),
        coord_scale: prep.scale,
        config: cfg.clone(),
        param_snapshots: snapshots,
    })
}

fn snapshot(epoch: usize, head: &[Param], mnet: &MNet) -> ParamSnapshot {
    let mut params: Vec<Param> = head.to_vec();
    params.extend(mnet.params().iter().cloned());
    ParamSnapshot { epoch, params }
}

/// Rebuild the two networks of a [`run_deepmapping`] run from one of its
/// parameter snapshots. `cfg` must be the config the run used, so the
/// network shapes and parameter names line up.
pub fn networks_from_snapshot(cfg: &RunConfig, snap: &ParamSnapshot) -> Result<(LNet, MNet)> {
    if cfg.variant != Variant::Deepmapping {
        return Err(Error::InvalidArgument {
            op: "networks_from_snapshot",
            msg: format!("config variant is {:?}", cfg.variant),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut lnet = LNet::new(lnet_config(cfg), &mut rng)?;
    let mut mnet = MNet::new(mnet_config(cfg), &mut rng)?;
    let n_l = lnet.params().len();
    let n_m = mnet.params().len();
    if snap.params.len() != n_l + n_m {
        return Err(Error::InvalidArgument {
            op: "networks_from_snapshot",
            msg: format!("snapshot holds {} parameters, networks have {}", snap.params.len(), n_l + n_m),
        });
    }
    for (dst, src) in lnet.params_mut().iter_mut().zip(&snap.params[..n_l]) {
        restore_param(dst, src)?;
    }
    for (dst, src) in mnet.params_mut().iter_mut().zip(&snap.params[n_l..]) {
        restore_param(dst, src)?;
    }
    Ok((lnet, mnet))
}

fn restore_param(dst: &mut Param, src: &Param) -> Result<()> {
    if dst.name != src.name || dst.value.shape() != src.value.shape() {
        return Err(Error::InvalidArgument {
            op: "networks_from_snapshot",
            msg: format!(
                "parameter mismatch: networks expect {} {:?}, snapshot has {} {:?}",
                dst.name,
                dst.value.shape(),
                src.name,
                src.value.shape()
            ),
        });
    }
    dst.value = src.value.clone();
    dst.zero_grad();
    Ok(())
}
