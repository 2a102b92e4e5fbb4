//! Case-level evaluation: AUROC, average precision and a paired permutation test.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

/// Per-case scores with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCases {
    pub case_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auroc,
    Ap,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    case_id: String,
    score: f64,
    label: u8,
}

impl ScoredCases {
    pub fn new(case_ids: Vec<String>, scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if case_ids.len() != scores.len() || scores.len() != labels.len() {
            bail_arg!(
                "length mismatch: {} ids, {} scores, {} labels",
                case_ids.len(),
                scores.len(),
                labels.len()
            );
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            bail_arg!("labels must be 0 or 1, got {l}");
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::Data("NaN score".into()));
        }
        Ok(Self {
            case_ids,
            scores,
            labels,
        })
    }

    /// Unnamed cases, ids are running indices.
    pub fn from_scores(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let ids = (0..scores.len()).map(|i| i.to_string()).collect();
        Self::new(ids, scores, labels)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let (mut ids, mut scores, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        for row in rdr.deserialize() {
            let row: ScoreRow = row?;
            ids.push(row.case_id);
            scores.push(row.score);
            labels.push(row.label);
        }
        Self::new(ids, scores, labels).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.len() {
            w.serialize(ScoreRow {
                case_id: self.case_ids[i].clone(),
                score: self.scores[i],
                label: self.labels[i],
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn check_both_classes(labels: &[u8]) -> Result<(usize, usize)> {
    let p = labels.iter().filter(|&&l| l == 1).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::Precondition(format!(
            "both classes required, got {p} positive and {n} negative"
        )));
    }
    Ok((p, n))
}

/// Indices ordered by descending score; equal scores stay in input order.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

fn auroc_raw(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (p, n) = check_both_classes(labels)?;
    let order = descending_order(scores);
    // Walk tie groups from the top, counting negatives ranked strictly below each positive.
    let mut neg_above = 0u64;
    let mut twice_correct = 0u64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        let neg_below = n as u64 - neg_above - gn;
        twice_correct += 2 * gp * neg_below + gp * gn;
        neg_above += gn;
        i = j;
    }
    Ok(twice_correct as f64 / (2.0 * p as f64 * n as f64))
}

fn ap_raw(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let p = labels.iter().filter(|&&l| l == 1).count();
    if p == 0 {
        return Err(Error::Precondition("average precision needs a positive case".into()));
    }
    let order = descending_order(scores);
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut gp = 0;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            gp += labels[order[j]] as usize;
            j += 1;
        }
        seen += j - i;
        tp += gp;
        if gp > 0 {
            ap += gp as f64 * (tp as f64 / seen as f64);
        }
        i = j;
    }
    Ok(ap / p as f64)
}

/// Mann-Whitney AUROC with ties credited one half.
pub fn auroc(s: &ScoredCases) -> Result<f64> {
    auroc_raw(&s.scores, &s.labels)
}

/// Step-wise average precision over descending thresholds, ties grouped.
pub fn average_precision(s: &ScoredCases) -> Result<f64> {
    ap_raw(&s.scores, &s.labels)
}

pub fn metric_value(metric: Metric, scores: &[f64], labels: &[u8]) -> Result<f64> {
    match metric {
        Metric::Auroc => auroc_raw(scores, labels),
        Metric::Ap => ap_raw(scores, labels),
    }
}

pub const MIN_PERMUTATIONS: usize = 100;

/// Paired case-swap permutation test on |metric(a) - metric(b)|.
///
/// Permutation `k` draws its swaps from ChaCha stream `k`, so results do not
/// depend on thread count or scheduling.
pub fn paired_permutation_test(
    a: &ScoredCases,
    b: &ScoredCases,
    metric: Metric,
    n_perm: usize,
    seed: u64,
) -> Result<f64> {
    if a.case_ids != b.case_ids {
        bail_arg!("score sets cover different cases");
    }
    if a.labels != b.labels {
        bail_arg!("score sets disagree on labels");
    }
    if n_perm < MIN_PERMUTATIONS {
        bail_arg!("at least {MIN_PERMUTATIONS} permutations required, got {n_perm}");
    }
    let observed = (metric_value(metric, &a.scores, &a.labels)?
        - metric_value(metric, &b.scores, &b.labels)?)
    .abs();
    let tol = 1e-12 * observed.max(1.0);
    let n = a.len();
    let exceed: usize = (0..n_perm as u64)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n]),
            |(sa, sb), k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k);
                for i in 0..n {
                    if rng.random::<bool>() {
                        sa[i] = b.scores[i];
                        sb[i] = a.scores[i];
                    } else {
                        sa[i] = a.scores[i];
                        sb[i] = b.scores[i];
                    }
                }
                let ma = metric_value(metric, sa, &a.labels).expect("classes checked");
                let mb = metric_value(metric, sb, &a.labels).expect("classes checked");
                usize::from((ma - mb).abs() >= observed - tol)
            },
        )
        .sum();
    Ok((1 + exceed) as f64 / (1 + n_perm) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> ScoredCases {
        ScoredCases::from_scores(vec![0.1, 0.4, 0.35, 0.8], vec![0, 0, 1, 1]).unwrap()
    }

    #[test]
    fn worked_example() {
        assert!((auroc(&worked()).unwrap() - 0.75).abs() < 1e-12);
        assert!((average_precision(&worked()).unwrap() - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        let sep = ScoredCases::from_scores(vec![0.0, 0.1, 0.9, 1.0], vec![0, 0, 1, 1]).unwrap();
        assert_eq!(auroc(&sep).unwrap(), 1.0);
        assert_eq!(average_precision(&sep).unwrap(), 1.0);
        let flat = ScoredCases::from_scores(vec![0.3; 6], vec![0, 1, 0, 1, 1, 0]).unwrap();
        assert_eq!(auroc(&flat).unwrap(), 0.5);
        assert!((average_precision(&flat).unwrap() - 0.5).abs() < 1e-15);
        let one = ScoredCases::from_scores(vec![0.1, 0.2], vec![1, 1]).unwrap();
        assert!(matches!(auroc(&one), Err(Error::Precondition(_))));
        let none = ScoredCases::from_scores(vec![0.1, 0.2], vec![0, 0]).unwrap();
        assert!(average_precision(&none).is_err());
    }

    #[test]
    fn identical_models_give_p_one() {
        let s = worked();
        assert_eq!(paired_permutation_test(&s, &s, Metric::Auroc, 200, 3).unwrap(), 1.0);
    }

    #[test]
    fn permutation_rejects_bad_input() {
        let s = worked();
        let mut t = s.clone();
        t.case_ids[0] = "x".into();
        assert!(matches!(
            paired_permutation_test(&s, &t, Metric::Ap, 200, 0),
            Err(Error::Argument(_))
        ));
        assert!(paired_permutation_test(&s, &s, Metric::Ap, 10, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        worked().write_csv(&path).unwrap();
        assert_eq!(ScoredCases::read_csv(&path).unwrap(), worked());
    }
}
