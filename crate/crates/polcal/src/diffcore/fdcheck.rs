//! Central-finite-difference verification of the backward pass.

use super::params::ParamStore;
use super::tape::{NodeId, Tape};
use crate::error::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::BTreeMap;

/// Compare analytic gradients against central finite differences.
///
/// `loss_fn` must build the loss graph for the current parameter values and
/// return the scalar loss node. Up to `samples_per_param` coordinates of each
/// parameter are probed (all of them when the tensor is small). Returns
///
/// ```text
/// max over probed coordinates of
///     |analytic - numeric| / max(1e-12, |analytic| + |numeric|)
/// ```
///
/// A store with no parameters yields 0 by convention.
pub fn finite_diff_check<F>(
    store: &mut ParamStore,
    eps: f64,
    samples_per_param: usize,
    seed: u64,
    mut loss_fn: F,
) -> Result<f64>
where
    F: FnMut(&ParamStore, &mut Tape) -> Result<NodeId>,
{
    assert!(eps > 0.0, "finite_diff_check: eps must be positive");
    if store.is_empty() {
        return Ok(0.0);
    }

    // Analytic gradients at the current point.
    let mut tape = Tape::new();
    let loss = loss_fn(store, &mut tape)?;
    let grads = tape.backward(loss)?;
    let analytic: BTreeMap<String, Vec<f64>> = store
        .names()
        .map(|name| {
            let g = grads
                .get(name)
                .map(|t| t.data.clone())
                .unwrap_or_else(|| vec![0.0; store.get(name).unwrap().len()]);
            (name.clone(), g)
        })
        .collect();

    let mut rng = StdRng::seed_from_u64(seed);
    let names: Vec<String> = store.names().cloned().collect();
    let mut worst: f64 = 0.0;

    for name in names {
        let len = store.get(&name).unwrap().len();
        let coords: Vec<usize> = if len <= samples_per_param {
            (0..len).collect()
        } else {
            (0..samples_per_param).map(|_| rng.gen_range(0..len)).collect()
        };
        for idx in coords {
            let original = store.get(&name).unwrap().data[idx];

            store.get_mut(&name).unwrap().data[idx] = original + eps;
            let mut t_plus = Tape::new();
            let l_plus = loss_fn(store, &mut t_plus)?;
            let f_plus = t_plus.value(l_plus).item();

            store.get_mut(&name).unwrap().data[idx] = original - eps;
            let mut t_minus = Tape::new();
            let l_minus = loss_fn(store, &mut t_minus)?;
            let f_minus = t_minus.value(l_minus).item();

            store.get_mut(&name).unwrap().data[idx] = original;

            let numeric = (f_plus - f_minus) / (2.0 * eps);
            let a = analytic[&name][idx];
            let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
