//! Reference forward pass of bottleneck cross-attention: the radiomics vector is
//! the single query, latent feature positions are keys and values.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

/// Projection weights, row-major `in x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttentionConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub d_radiomics: usize,
    pub w_q: Vec<f64>,
    pub w_k: Vec<f64>,
    pub w_v: Vec<f64>,
    pub w_o: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionOutput {
    pub fused: Vec<f64>,
    /// `weights[h][p]`: attention of head `h` on latent position `p`.
    pub weights: Vec<Vec<f64>>,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect()
}

/// `x W` for row vector `x` and row-major `W` with `x.len()` rows.
fn vec_mat(x: &[f64], w: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (i, &xi) in x.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
            *o += xi * wij;
        }
    }
    out
}

impl AttentionConfig {
    /// Glorot-uniform weights from a seed.
    pub fn seeded(d_radiomics: usize, d_model: usize, n_heads: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = Self {
            d_model,
            n_heads,
            d_radiomics,
            w_q: uniform_matrix(&mut rng, d_radiomics, d_model),
            w_k: uniform_matrix(&mut rng, d_model, d_model),
            w_v: uniform_matrix(&mut rng, d_model, d_model),
            w_o: uniform_matrix(&mut rng, d_model, d_model),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_radiomics == 0 {
            bail_arg!("attention dimensions must be positive");
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            bail_arg!("n_heads {} does not divide d_model {}", self.n_heads, self.d_model);
        }
        let dm2 = self.d_model * self.d_model;
        if self.w_q.len() != self.d_radiomics * self.d_model
            || self.w_k.len() != dm2
            || self.w_v.len() != dm2
            || self.w_o.len() != dm2
        {
            bail_arg!("projection matrix sizes do not match the dimensions");
        }
        if [&self.w_q, &self.w_k, &self.w_v, &self.w_o]
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Data("non-finite projection weight".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check_latent(latent: &[Vec<f64>], cfg: &AttentionConfig) -> Result<()> {
    if latent.is_empty() {
        return Err(Error::Precondition("latent has no positions".into()));
    }
    if let Some(row) = latent.iter().find(|r| r.len() != cfg.d_model) {
        bail_arg!("latent row of width {}, expected {}", row.len(), cfg.d_model);
    }
    Ok(())
}

/// Fused vector `W_O . concat_h(softmax(q_h K_h^T / sqrt(d_h)) V_h)`.
pub fn cross_attention_forward(radiomics: &[f64], latent: &[Vec<f64>], cfg: &AttentionConfig) -> Result<AttentionOutput> {
    cfg.validate()?;
    if radiomics.len() != cfg.d_radiomics {
        bail_arg!("radiomics vector of length {}, expected {}", radiomics.len(), cfg.d_radiomics);
    }
    check_latent(latent, cfg)?;
    let dm = cfg.d_model;
    let dh = cfg.head_dim();
    let q = vec_mat(radiomics, &cfg.w_q, dm);
    let keys: Vec<Vec<f64>> = latent.iter().map(|r| vec_mat(r, &cfg.w_k, dm)).collect();
    let vals: Vec<Vec<f64>> = latent.iter().map(|r| vec_mat(r, &cfg.w_v, dm)).collect();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut concat = vec![0.0; dm];
    let mut weights = Vec::with_capacity(cfg.n_heads);
    for h in 0..cfg.n_heads {
        let span = h * dh..(h + 1) * dh;
        let logits: Vec<f64> = keys
            .iter()
            .map(|k| q[span.clone()].iter().zip(&k[span.clone()]).map(|(a, b)| a * b).sum::<f64>() * scale)
            .collect();
        let w = softmax(&logits);
        for (p, v) in vals.iter().enumerate() {
            for (c, &vv) in concat[span.clone()].iter_mut().zip(&v[span.clone()]) {
                *c += w[p] * vv;
            }
        }
        weights.push(w);
    }
    Ok(AttentionOutput {
        fused: vec_mat(&concat, &cfg.w_o, dm),
        weights,
    })
}

/// One forward pass per query row, sharing the latent positions.
pub fn cross_attention_forward_multi(
    queries: &[Vec<f64>],
    latent: &[Vec<f64>],
    cfg: &AttentionConfig,
) -> Result<Vec<AttentionOutput>> {
    queries.iter().map(|q| cross_attention_forward(q, latent, cfg)).collect()
}

/// `W_O` applied to the value projection of one latent row: the exact output
/// when that row is the only position.
pub fn single_position_output(row: &[f64], cfg: &AttentionConfig) -> Vec<f64> {
    let v = vec_mat(row, &cfg.w_v, cfg.d_model);
    vec_mat(&v, &cfg.w_o, cfg.d_model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttnSuiteReport {
    pub trials: usize,
    pub max_weight_sum_error: f64,
    pub max_permutation_error: f64,
    pub single_position_mismatches: usize,
    pub degenerate_scalings: usize,
    pub passed: bool,
}

pub const WEIGHT_SUM_TOL: f64 = 1e-6;
pub const PERMUTATION_TOL: f64 = 1e-9;

/// Randomized checks of softmax normalization, permutation invariance over
/// latent positions, the single-position identity and sensitivity to scaling
/// one latent row.
pub fn attn_invariant_suite(cfg: &AttentionConfig, trials: usize, seed: u64) -> Result<AttnSuiteReport> {
    cfg.validate()?;
    if trials == 0 {
        bail_arg!("at least one trial required");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AttnSuiteReport {
        trials,
        max_weight_sum_error: 0.0,
        max_permutation_error: 0.0,
        single_position_mismatches: 0,
        degenerate_scalings: 0,
        passed: false,
    };
    let random_vec = |n: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>();
    for _ in 0..trials {
        let positions = rng.random_range(2..=16);
        let r = random_vec(cfg.d_radiomics, &mut rng);
        let latent: Vec<Vec<f64>> = (0..positions).map(|_| random_vec(cfg.d_model, &mut rng)).collect();
        let out = cross_attention_forward(&r, &latent, cfg)?;
        for w in &out.weights {
            let err = (w.iter().sum::<f64>() - 1.0).abs();
            report.max_weight_sum_error = report.max_weight_sum_error.max(err);
        }

        let mut perm: Vec<usize> = (0..positions).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&p| latent[p].clone()).collect();
        let out_p = cross_attention_forward(&r, &shuffled, cfg)?;
        for (a, b) in out.fused.iter().zip(&out_p.fused) {
            report.max_permutation_error = report.max_permutation_error.max((a - b).abs());
        }

        let single = cross_attention_forward(&r, &latent[..1], cfg)?;
        if single.weights.iter().any(|w| w != &[1.0]) || single.fused != single_position_output(&latent[0], cfg) {
            report.single_position_mismatches += 1;
        }

        let mut scaled = latent.clone();
        let k = rng.random_range(0..positions);
        scaled[k].iter_mut().for_each(|v| *v *= 3.0);
        let out_s = cross_attention_forward(&r, &scaled, cfg)?;
        let change = out.fused.iter().zip(&out_s.fused).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change <= 1e-12 {
            report.degenerate_scalings += 1;
        }
    }
    report.passed = report.max_weight_sum_error <= WEIGHT_SUM_TOL
        && report.max_permutation_error <= PERMUTATION_TOL
        && report.single_position_mismatches == 0
        && report.degenerate_scalings == 0;
    Ok(report)
}
