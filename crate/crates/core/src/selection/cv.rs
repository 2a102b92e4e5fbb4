use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bh_fdr, pointbiserial_pvalues, rfe, stratified_folds, FeatureTable, MedianImputer, SvmModel,
    ZScoreParams, DEFAULT_SIZE_BIN,
};
use crate::error::{bail_arg, Error, Result};
use crate::metrics::{auroc, average_precision, ScoredCases};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub q: f64,
    pub c: f64,
    pub target: usize,
    pub folds: usize,
    pub size_bin: u64,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            q: 0.05,
            c: 1.0,
            target: 10,
            folds: 10,
            size_bin: DEFAULT_SIZE_BIN,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub kept_after_fdr: Vec<String>,
    pub selected: Vec<String>,
    pub auroc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedWeight {
    pub feature: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub config: SelectionConfig,
    pub kept_after_fdr: Vec<String>,
    pub final_selected: Vec<String>,
    /// Fewer than `target` features survived the FDR filter in the best fold.
    pub shortfall: bool,
    pub folds: Vec<FoldReport>,
    pub mean_auroc: f64,
    pub std_auroc: f64,
    pub mean_ap: f64,
    pub best_fold: usize,
    pub weights: Vec<NamedWeight>,
    pub bias: f64,
    /// Each case scored by the model of the fold that held it out.
    #[serde(skip)]
    pub out_of_fold: Option<ScoredCases>,
}

/// Everything a fold learned, exposed so callers can audit that nothing was
/// fitted on held-out cases.
#[derive(Debug, Clone)]
pub struct FoldTrace {
    pub fold: usize,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub imputer: MedianImputer,
    pub zscore: ZScoreParams,
    pub kept: Vec<usize>,
    pub selected: Vec<usize>,
    pub model: Option<SvmModel>,
}

struct FoldOutcome {
    trace: FoldTrace,
    test_scores: Vec<f64>,
    auroc: f64,
    ap: f64,
    shortfall: bool,
}

fn run_fold(table: &FeatureTable, cfg: &SelectionConfig, fold: usize, assignment: &[usize]) -> Result<FoldOutcome> {
    let train_rows: Vec<usize> = (0..table.n_cases()).filter(|&i| assignment[i] != fold).collect();
    let test_rows: Vec<usize> = (0..table.n_cases()).filter(|&i| assignment[i] == fold).collect();
    let train = table.select_rows(&train_rows);
    let test = table.select_rows(&test_rows);
    for (part, name) in [(&train, "train"), (&test, "test")] {
        let pos = part.labels.iter().filter(|&&l| l == 1).count();
        if pos == 0 || pos == part.n_cases() {
            return Err(Error::Precondition(format!(
                "stratification left fold {fold} {name} split with a single class"
            )));
        }
    }
    let imputer = MedianImputer::fit(&train);
    let train = imputer.apply(&train)?;
    let test = imputer.apply(&test)?;
    let zscore = ZScoreParams::fit(&train)?;
    let train = zscore.apply(&train)?;
    let test = zscore.apply(&test)?;
    let pvalues: Vec<f64> = pointbiserial_pvalues(&train)?.into_iter().map(|(_, p)| p).collect();
    let kept = bh_fdr(&pvalues, cfg.q)?;
    let (selected, model, shortfall) = if kept.is_empty() {
        (Vec::new(), None, true)
    } else {
        let sub = train.select_columns(&kept);
        let r = rfe(&sub.values, kept.len(), &sub.labels, cfg.c, cfg.target)?;
        let selected: Vec<usize> = r.selected.iter().map(|&k| kept[k]).collect();
        (selected, Some(r.model), r.shortfall)
    };
    let test_scores: Vec<f64> = match &model {
        Some(m) => (0..test.n_cases())
            .map(|i| {
                let x: Vec<f64> = selected.iter().map(|&j| test.get(i, j)).collect();
                m.score(&x)
            })
            .collect(),
        None => vec![0.0; test.n_cases()],
    };
    let scored = ScoredCases::new(test.case_ids.clone(), test_scores.clone(), test.labels.clone())?;
    Ok(FoldOutcome {
        auroc: auroc(&scored)?,
        ap: average_precision(&scored)?,
        shortfall,
        test_scores,
        trace: FoldTrace {
            fold,
            train_rows,
            test_rows,
            imputer,
            zscore,
            kept,
            selected,
            model,
        },
    })
}

/// Cross-validated selection: per fold impute, standardize, FDR filter and RFE
/// on the training cases only, then score the held-out cases.
pub fn select_features_cv(table: &FeatureTable, cfg: &SelectionConfig) -> Result<SelectionReport> {
    select_features_cv_traced(table, cfg, |_| {})
}

/// As [`select_features_cv`], handing every fold's fitted state to `hook` in fold order.
pub fn select_features_cv_traced(
    table: &FeatureTable,
    cfg: &SelectionConfig,
    mut hook: impl FnMut(&FoldTrace),
) -> Result<SelectionReport> {
    if cfg.target == 0 {
        bail_arg!("target must be at least 1");
    }
    if table.n_features() == 0 {
        bail_arg!("feature table has no feature columns");
    }
    let assignment = stratified_folds(&table.lesion_size_voxels, &table.labels, cfg.folds, cfg.size_bin, cfg.seed)?;
    let outcomes: Vec<FoldOutcome> = (0..cfg.folds)
        .into_par_iter()
        .map(|k| run_fold(table, cfg, k, &assignment))
        .collect::<Result<_>>()?;

    let names = |idx: &[usize]| idx.iter().map(|&j| table.feature_names[j].clone()).collect::<Vec<_>>();
    let mut oof = vec![0.0; table.n_cases()];
    let mut folds = Vec::with_capacity(cfg.folds);
    for o in &outcomes {
        hook(&o.trace);
        for (&row, &s) in o.trace.test_rows.iter().zip(&o.test_scores) {
            oof[row] = s;
        }
        folds.push(FoldReport {
            fold: o.trace.fold,
            n_train: o.trace.train_rows.len(),
            n_test: o.trace.test_rows.len(),
            kept_after_fdr: names(&o.trace.kept),
            selected: names(&o.trace.selected),
            auroc: o.auroc,
            ap: o.ap,
        });
    }
    let mut best = 0;
    for (k, o) in outcomes.iter().enumerate() {
        if o.auroc > outcomes[best].auroc {
            best = k;
        }
    }
    let aurocs: Vec<f64> = outcomes.iter().map(|o| o.auroc).collect();
    let (mean_auroc, std_auroc) = crate::stats::mean_std(&aurocs);
    let mean_ap = outcomes.iter().map(|o| o.ap).sum::<f64>() / outcomes.len() as f64;
    let b = &outcomes[best];
    let weights = match &b.trace.model {
        Some(m) => b
            .trace
            .selected
            .iter()
            .zip(&m.weights)
            .map(|(&j, &w)| NamedWeight {
                feature: table.feature_names[j].clone(),
                weight: w,
            })
            .collect(),
        None => Vec::new(),
    };
    if b.shortfall {
        log::warn!(
            "best fold kept {} features, fewer than the target {}",
            b.trace.selected.len(),
            cfg.target
        );
    }
    Ok(SelectionReport {
        config: cfg.clone(),
        kept_after_fdr: names(&b.trace.kept),
        final_selected: names(&b.trace.selected),
        shortfall: b.shortfall,
        folds,
        mean_auroc,
        std_auroc,
        mean_ap,
        best_fold: best,
        weights,
        bias: b.trace.model.as_ref().map_or(0.0, |m| m.bias),
        out_of_fold: Some(ScoredCases::new(table.case_ids.clone(), oof, table.labels.clone())?),
    })
}
