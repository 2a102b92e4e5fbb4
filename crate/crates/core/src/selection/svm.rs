use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

const KKT_TOL: f64 = 1e-9;
const GAP_TOL: f64 = 1e-9;
const TAU: f64 = 1e-12;

/// Linear soft-margin SVM, `score(x) = w . x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Primal minus dual objective at the returned solution.
    pub duality_gap: f64,
}

impl SvmModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// `(1/2)|w|^2 + C * sum hinge(y_i (w . x_i + b))` with labels mapped to -1/+1.
pub fn primal_objective(x: &[f64], d: usize, y: &[u8], c: f64, w: &[f64], b: f64) -> f64 {
    let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let hinge: f64 = x
        .chunks_exact(d.max(1))
        .zip(y)
        .map(|(row, &l)| {
            let s = if d == 0 { b } else { row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b };
            (1.0 - sign(l) * s).max(0.0)
        })
        .sum();
    reg + c * hinge
}

fn sign(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// SMO on the dual with second-order working-set selection. `x` is row-major
/// with `d` columns. Deterministic: ties go to the lowest index.
pub fn svm_train(x: &[f64], d: usize, y: &[u8], c: f64) -> Result<SvmModel> {
    let n = y.len();
    if x.len() != n * d {
        bail_arg!("{} values for {n} x {d} design matrix", x.len());
    }
    if !(c > 0.0 && c.is_finite()) {
        bail_arg!("C must be positive and finite, got {c}");
    }
    let npos = y.iter().filter(|&&l| l == 1).count();
    if npos == 0 || npos == n {
        return Err(Error::Precondition("SVM training needs both classes".into()));
    }
    let row = |i: usize| &x[i * d..(i + 1) * d];
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = row(i).iter().zip(row(j)).map(|(a, b)| a * b).sum();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let yv: Vec<f64> = y.iter().map(|&l| sign(l)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(1_000_000);

    let weights_of = |alpha: &[f64]| {
        let mut w = vec![0.0; d];
        for i in 0..n {
            if alpha[i] != 0.0 {
                for (wj, xj) in w.iter_mut().zip(row(i)) {
                    *wj += alpha[i] * yv[i] * xj;
                }
            }
        }
        w
    };
    let bias_of = |alpha: &[f64], grad: &[f64]| {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut nfree) = (0.0, 0usize);
        for i in 0..n {
            let yg = yv[i] * grad[i];
            if alpha[i] >= c {
                if yv[i] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[i] <= 0.0 {
                if yv[i] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                nfree += 1;
                sum += yg;
            }
        }
        let rho = if nfree > 0 { sum / nfree as f64 } else { 0.5 * (ub + lb) };
        -rho
    };
    let gap_of = |alpha: &[f64], grad: &[f64]| {
        let w = weights_of(alpha);
        let b = bias_of(alpha, grad);
        let p = primal_objective(x, d, y, c, &w, b);
        let dual = alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        (p - dual, p, w, b)
    };

    let mut iter = 0;
    loop {
        // Maximal violating index i in I_up.
        let (mut gmax, mut gmax_idx) = (f64::NEG_INFINITY, usize::MAX);
        for t in 0..n {
            let in_up = if yv[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if in_up && -yv[t] * grad[t] > gmax {
                gmax = -yv[t] * grad[t];
                gmax_idx = t;
            }
        }
        let i = gmax_idx;
        let (mut gmax2, mut obj_min, mut j) = (f64::NEG_INFINITY, f64::INFINITY, usize::MAX);
        if i != usize::MAX {
            for t in 0..n {
                let in_low = if yv[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !in_low {
                    continue;
                }
                let yg = yv[t] * grad[t];
                gmax2 = gmax2.max(yg);
                let grad_diff = gmax + yg;
                if grad_diff > 0.0 {
                    let mut quad = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -grad_diff * grad_diff / quad;
                    if obj < obj_min {
                        obj_min = obj;
                        j = t;
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        if j == usize::MAX || violation < KKT_TOL {
            break;
        }
        if iter % 64 == 63 {
            let (gap, p, _, _) = gap_of(&alpha, &grad);
            if gap <= GAP_TOL * p.abs().max(1.0) {
                break;
            }
        }
        if iter >= max_iter {
            let (gap, ..) = gap_of(&alpha, &grad);
            return Err(Error::NoConvergence { iterations: iter, gap });
        }
        iter += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let qij = yv[i] * yv[j] * k[i * n + j];
        if yv[i] != yv[j] {
            let mut quad = k[i * n + i] + k[j * n + j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[i * n + i] + k[j * n + j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (dai, daj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for t in 0..n {
            grad[t] += yv[t] * (yv[i] * k[i * n + t] * dai + yv[j] * k[j * n + t] * daj);
        }
    }
    let (gap, _, weights, bias) = gap_of(&alpha, &grad);
    Ok(SvmModel {
        weights,
        bias,
        iterations: iter,
        duality_gap: gap,
    })
}
