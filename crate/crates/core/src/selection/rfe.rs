use serde::{Deserialize, Serialize};

use super::svm::{svm_train, SvmModel};
use crate::error::{bail_arg, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// Surviving column indices, ascending.
    pub selected: Vec<usize>,
    /// Model trained on the surviving columns, weights aligned with `selected`.
    pub model: SvmModel,
    /// Fewer columns than `target` were available.
    pub shortfall: bool,
}

/// Drops the column with the smallest |w| (earlier column on ties) until
/// `target` remain. `x` is row-major with `d` columns.
pub fn rfe(x: &[f64], d: usize, y: &[u8], c: f64, target: usize) -> Result<RfeResult> {
    if target == 0 {
        bail_arg!("RFE target must be at least 1");
    }
    let n = y.len();
    let mut active: Vec<usize> = (0..d).collect();
    loop {
        let sub: Vec<f64> = (0..n)
            .flat_map(|i| active.iter().map(move |&j| x[i * d + j]))
            .collect();
        let model = svm_train(&sub, active.len(), y, c)?;
        if active.len() <= target {
            return Ok(RfeResult {
                selected: active,
                model,
                shortfall: d < target,
            });
        }
        let mut drop = 0;
        for k in 1..active.len() {
            if model.weights[k].abs() < model.weights[drop].abs() {
                drop = k;
            }
        }
        active.remove(drop);
    }
}
