//! Named parameter storage with gradient accumulators, AdamW moments and a
//! versioned JSON checkpoint format.

use super::tape::Gradients;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

const CHECKPOINT_VERSION: &str = "polcal-checkpoint-1";

#[derive(Debug, Clone)]
struct Slot {
    value: Tensor,
    grad: Tensor,
    m: Tensor,
    v: Tensor,
}

/// Map of named parameters. Iteration order is the name order, so training is
/// deterministic run to run.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    slots: BTreeMap<String, Slot>,
    step: u64,
}

/// AdamW hyper-parameters with the standard defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        AdamW {
            lr: 1e-3,
            weight_decay: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Register a parameter. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<()> {
        let name = name.into();
        if self.slots.contains_key(&name) {
            return Err(Error::config(format!("duplicate parameter name `{name}`")));
        }
        let (r, c) = value.shape();
        self.slots.insert(
            name,
            Slot {
                value,
                grad: Tensor::zeros(r, c),
                m: Tensor::zeros(r, c),
                v: Tensor::zeros(r, c),
            },
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.slots.get(name).map(|s| &s.value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.slots.get_mut(name).map(|s| &mut s.value)
    }

    pub fn grad(&self, name: &str) -> Option<&Tensor> {
        self.slots.get(name).map(|s| &s.grad)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.slots.keys()
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn num_values(&self) -> usize {
        self.slots.values().map(|s| s.value.len()).sum()
    }

    /// Fold one backward pass worth of gradients into the accumulators.
    pub fn accumulate(&mut self, grads: &Gradients) -> Result<()> {
        for (name, g) in grads.iter() {
            let slot = self
                .slots
                .get_mut(name)
                .ok_or_else(|| Error::config(format!("gradient for unknown parameter `{name}`")))?;
            if slot.grad.shape() != g.shape() {
                return Err(Error::Shape {
                    op: "accumulate",
                    detail: format!(
                        "parameter `{name}`: {:?} vs gradient {:?}",
                        slot.grad.shape(),
                        g.shape()
                    ),
                });
            }
            slot.grad.add_assign(g);
        }
        Ok(())
    }

    /// Scale every accumulated gradient, e.g. by 1/batch_size.
    pub fn scale_grads(&mut self, c: f64) {
        for slot in self.slots.values_mut() {
            slot.grad.data.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn zero_grads(&mut self) {
        for slot in self.slots.values_mut() {
            slot.grad.fill(0.0);
        }
    }

    /// Clear AdamW state (moments and step count), e.g. when a new training
    /// stage begins on an already-trained model.
    pub fn reset_optimizer(&mut self) {
        self.step = 0;
        for slot in self.slots.values_mut() {
            slot.m.fill(0.0);
            slot.v.fill(0.0);
            slot.grad.fill(0.0);
        }
    }

    /// L2 norm over all accumulated gradients.
    pub fn grad_norm(&self) -> f64 {
        self.slots
            .values()
            .map(|s| s.grad.sq_norm())
            .sum::<f64>()
            .sqrt()
    }

    /// One decoupled-weight-decay Adam update; zeroes gradients afterwards.
    pub fn adamw_step(&mut self, cfg: &AdamW) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for slot in self.slots.values_mut() {
            for i in 0..slot.value.data.len() {
                let g = slot.grad.data[i];
                slot.m.data[i] = cfg.beta1 * slot.m.data[i] + (1.0 - cfg.beta1) * g;
                slot.v.data[i] = cfg.beta2 * slot.v.data[i] + (1.0 - cfg.beta2) * g * g;
                let m_hat = slot.m.data[i] / bc1;
                let v_hat = slot.v.data[i] / bc2;
                let p = slot.value.data[i];
                slot.value.data[i] =
                    p - cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * p);
            }
            slot.grad.fill(0.0);
        }
    }

    /// True if every parameter value is finite.
    pub fn all_finite(&self) -> bool {
        self.slots.values().all(|s| s.value.all_finite())
    }

    /// True if two stores hold identical parameter values.
    pub fn values_equal(&self, other: &ParamStore) -> bool {
        self.slots.len() == other.slots.len()
            && self.slots.iter().all(|(name, slot)| {
                other
                    .slots
                    .get(name)
                    .map(|o| o.value == slot.value)
                    .unwrap_or(false)
            })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION.to_string(),
            params: self
                .slots
                .iter()
                .map(|(name, slot)| CheckpointParam {
                    name: name.clone(),
                    rows: slot.value.rows,
                    cols: slot.value.cols,
                    data: slot.value.data.clone(),
                })
                .collect(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    /// Load a checkpoint into this store. Every parameter must already exist
    /// with a matching shape; extra or missing names are rejected.
    pub fn load_into(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let file: CheckpointFile = serde_json::from_str(&text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::data(format!(
                "checkpoint {}: unsupported version `{}`",
                path.display(),
                file.version
            )));
        }
        if file.params.len() != self.slots.len() {
            return Err(Error::data(format!(
                "checkpoint {}: has {} parameters, model expects {}",
                path.display(),
                file.params.len(),
                self.slots.len()
            )));
        }
        for p in &file.params {
            let slot = self.slots.get_mut(&p.name).ok_or_else(|| {
                Error::data(format!(
                    "checkpoint {}: unknown parameter `{}`",
                    path.display(),
                    p.name
                ))
            })?;
            if slot.value.shape() != (p.rows, p.cols) {
                return Err(Error::data(format!(
                    "checkpoint {}: parameter `{}` has shape ({}, {}), model expects {:?}",
                    path.display(),
                    p.name,
                    p.rows,
                    p.cols,
                    slot.value.shape()
                )));
            }
            if p.data.len() != p.rows * p.cols {
                return Err(Error::data(format!(
                    "checkpoint {}: parameter `{}` data length mismatch",
                    path.display(),
                    p.name
                )));
            }
            slot.value = Tensor::from_vec(p.rows, p.cols, p.data.clone());
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: String,
    params: Vec<CheckpointParam>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointParam {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}
