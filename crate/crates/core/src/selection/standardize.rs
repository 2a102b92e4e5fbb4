use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{bail_arg, Error, Result};

pub const CONSTANT_STD: f64 = 1e-12;

/// Per-feature medians of the training rows, used to fill NaN cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianImputer {
    pub feature_names: Vec<String>,
    pub medians: Vec<f64>,
}

impl MedianImputer {
    /// Columns without any finite value get median 0.
    pub fn fit(train: &FeatureTable) -> Self {
        let medians = (0..train.n_features())
            .map(|j| {
                let mut col: Vec<f64> = train.column(j).into_iter().filter(|v| !v.is_nan()).collect();
                if col.is_empty() {
                    return 0.0;
                }
                col.sort_by(f64::total_cmp);
                let m = col.len() / 2;
                if col.len() % 2 == 1 {
                    col[m]
                } else {
                    0.5 * (col[m - 1] + col[m])
                }
            })
            .collect();
        Self {
            feature_names: train.feature_names.clone(),
            medians,
        }
    }

    pub fn apply(&self, table: &FeatureTable) -> Result<FeatureTable> {
        if table.feature_names != self.feature_names {
            bail_arg!("feature columns differ from the imputer's training table");
        }
        let d = table.n_features();
        let mut out = table.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            if v.is_nan() {
                *v = self.medians[k % d];
            }
        }
        Ok(out)
    }
}

/// Train-set mean and population standard deviation per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose std fell below the constant threshold; they standardize to 0.
    pub constant: Vec<bool>,
}

impl ZScoreParams {
    pub fn fit(train: &FeatureTable) -> Result<Self> {
        if train.n_cases() == 0 {
            return Err(Error::Precondition("cannot standardize on an empty table".into()));
        }
        if train.has_nan() {
            return Err(Error::Data("NaN in training table; impute first".into()));
        }
        let n = train.n_cases() as f64;
        let (mut mean, mut std, mut constant) = (vec![], vec![], vec![]);
        for j in 0..train.n_features() {
            let col = train.column(j);
            let m = col.iter().sum::<f64>() / n;
            let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            mean.push(m);
            std.push(s);
            constant.push(s < CONSTANT_STD);
        }
        Ok(Self {
            feature_names: train.feature_names.clone(),
            mean,
            std,
            constant,
        })
    }

    pub fn apply(&self, table: &FeatureTable) -> Result<FeatureTable> {
        if table.feature_names != self.feature_names {
            bail_arg!("feature columns differ from the standardization fit");
        }
        let d = table.n_features();
        let mut out = table.clone();
        for (k, v) in out.values.iter_mut().enumerate() {
            let j = k % d;
            *v = if self.constant[j] {
                0.0
            } else {
                (*v - self.mean[j]) / self.std[j]
            };
        }
        Ok(out)
    }
}

/// Fits on `train` and returns the parameters with both tables standardized.
pub fn zscore_fit_apply(
    train: &FeatureTable,
    apply_to: &FeatureTable,
) -> Result<(ZScoreParams, FeatureTable, FeatureTable)> {
    let params = ZScoreParams::fit(train)?;
    let a = params.apply(train)?;
    let b = params.apply(apply_to)?;
    Ok((params, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cols: &[&[f64]]) -> FeatureTable {
        let n = cols[0].len();
        let mut values = vec![];
        for i in 0..n {
            values.extend(cols.iter().map(|c| c[i]));
        }
        FeatureTable::new(
            (0..n).map(|i| i.to_string()).collect(),
            (0..cols.len()).map(|j| format!("f{j}")).collect(),
            values,
            vec![0; n],
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn hand_example() {
        let t = table(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]]);
        let (p, z, _) = zscore_fit_apply(&t, &t).unwrap();
        assert_eq!(p.mean[0], 2.0);
        assert!((p.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(z.get(1, 0), 0.0);
        assert_eq!(p.constant, vec![false, true]);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_columns_rejected() {
        let a = table(&[&[1.0, 2.0]]);
        let mut b = a.clone();
        b.feature_names[0] = "g".into();
        assert!(matches!(zscore_fit_apply(&a, &b), Err(Error::Argument(_))));
    }

    #[test]
    fn median_imputation() {
        let t = table(&[&[1.0, f64::NAN, 3.0, 10.0], &[f64::NAN; 4]]);
        let imp = MedianImputer::fit(&t);
        assert_eq!(imp.medians, vec![3.0, 0.0]);
        let filled = imp.apply(&t).unwrap();
        assert_eq!(filled.get(1, 0), 3.0);
        assert!(!filled.has_nan());
    }
}
