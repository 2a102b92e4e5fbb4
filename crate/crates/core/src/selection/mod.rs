//! Global feature selection: imputation, z-scoring, FDR-controlled univariate
//! filtering, SVM-RFE and lesion-size-stratified cross-validation.

mod cv;
mod folds;
mod rfe;
mod standardize;
mod svm;
mod table;
mod univariate;

pub use cv::{
    select_features_cv, select_features_cv_traced, FoldReport, FoldTrace, NamedWeight, SelectionConfig,
    SelectionReport,
};
pub use folds::{size_strata, stratified_folds, DEFAULT_SIZE_BIN};
pub use rfe::{rfe, RfeResult};
pub use standardize::{zscore_fit_apply, MedianImputer, ZScoreParams, CONSTANT_STD};
pub use svm::{primal_objective, svm_train, SvmModel};
pub use table::FeatureTable;
pub use univariate::{bh_fdr, pearson_p, pointbiserial_pvalues};
