//! Checkpoint files: a JSON object mapping parameter names to their
//! shape and row-major values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Param, Tensor};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Entry {
    shape: Vec<usize>,
    values: Vec<f64>,
}

pub fn save_checkpoint(path: &Path, params: &[Param]) -> Result<()> {
    let map: BTreeMap<&str, Entry> = params
        .iter()
        .map(|p| {
            (p.name.as_str(), Entry { shape: p.value.shape().to_vec(), values: p.value.data().to_vec() })
        })
        .collect();
    let json = serde_json::to_string_pretty(&map)?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<BTreeMap<String, Tensor>> {
    let text = std::fs::read_to_string(path)?;
    let map: BTreeMap<String, Entry> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (name, entry) in map {
        let t = Tensor::new(entry.shape, entry.values).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            msg: format!("parameter {name}: {e}"),
        })?;
        out.insert(name, t);
    }
    Ok(out)
}

/// Overwrite `params` values from a checkpoint, matching by name.
pub fn restore_params(path: &Path, params: &mut [Param]) -> Result<()> {
    let map = load_checkpoint(path)?;
    for p in params.iter_mut() {
        let t = map.get(&p.name).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            msg: format!("missing parameter {}", p.name),
        })?;
        if t.shape() != p.value.shape() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                msg: format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    p.name,
                    t.shape(),
                    p.value.shape()
                ),
            });
        }
        p.value = t.clone();
    }
    Ok(())
}
