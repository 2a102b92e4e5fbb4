use std::path::Path;

use crate::error::{bail_arg, Error, Result};

/// Cases by named features, with binary labels and lesion sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub case_ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// Row-major, `case_ids.len()` rows of `feature_names.len()` values.
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    pub lesion_size_voxels: Vec<u64>,
}

const FIXED_COLUMNS: [&str; 3] = ["case_id", "label", "lesion_size_voxels"];

impl FeatureTable {
    pub fn new(
        case_ids: Vec<String>,
        feature_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<u8>,
        lesion_size_voxels: Vec<u64>,
    ) -> Result<Self> {
        let n = case_ids.len();
        if labels.len() != n || lesion_size_voxels.len() != n {
            bail_arg!("{n} cases but {} labels and {} sizes", labels.len(), lesion_size_voxels.len());
        }
        if values.len() != n * feature_names.len() {
            bail_arg!("{} values for {n} x {} table", values.len(), feature_names.len());
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            bail_arg!("labels must be 0 or 1, got {l}");
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = feature_names.iter().find(|f| !seen.insert(f.as_str())) {
            bail_arg!("duplicate feature column {dup}");
        }
        Ok(Self {
            case_ids,
            feature_names,
            values,
            labels,
            lesion_size_voxels,
        })
    }

    pub fn n_cases(&self) -> usize {
        self.case_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn get(&self, case: usize, feature: usize) -> f64 {
        self.values[case * self.n_features() + feature]
    }

    pub fn row(&self, case: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[case * d..(case + 1) * d]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_cases()).map(|i| self.get(i, feature)).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(rows.len() * self.n_features());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureTable {
            case_ids: rows.iter().map(|&r| self.case_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            lesion_size_voxels: rows.iter().map(|&r| self.lesion_size_voxels[r]).collect(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(self.n_cases() * cols.len());
        for i in 0..self.n_cases() {
            values.extend(cols.iter().map(|&c| self.get(i, c)));
        }
        FeatureTable {
            case_ids: self.case_ids.clone(),
            feature_names: cols.iter().map(|&c| self.feature_names[c].clone()).collect(),
            values,
            labels: self.labels.clone(),
            lesion_size_voxels: self.lesion_size_voxels.clone(),
        }
    }

    /// Reads `case_id,label,lesion_size_voxels,<features...>`; empty cells are NaN.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.len() < 3 || header.iter().take(3).ne(FIXED_COLUMNS) {
            return Err(Error::Data(format!(
                "{}: header must start with case_id,label,lesion_size_voxels",
                path.display()
            )));
        }
        let feature_names: Vec<String> = header.iter().skip(3).map(str::to_owned).collect();
        let (mut ids, mut labels, mut sizes, mut values) = (vec![], vec![], vec![], vec![]);
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Data(format!("{} row {}: bad {what}", path.display(), line + 2));
            ids.push(rec[0].to_owned());
            labels.push(rec[1].trim().parse::<u8>().map_err(|_| bad("label"))?);
            sizes.push(rec[2].trim().parse::<u64>().map_err(|_| bad("lesion size"))?);
            for cell in rec.iter().skip(3) {
                let cell = cell.trim();
                values.push(if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| bad("feature value"))?
                });
            }
        }
        Self::new(ids, feature_names, values, labels, sizes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(FIXED_COLUMNS.iter().copied().chain(self.feature_names.iter().map(String::as_str)))?;
        for i in 0..self.n_cases() {
            let mut rec = vec![
                self.case_ids[i].clone(),
                self.labels[i].to_string(),
                self.lesion_size_voxels[i].to_string(),
            ];
            rec.extend(self.row(i).iter().map(|v| if v.is_nan() { String::new() } else { v.to_string() }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
