use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{bail_arg, Result};

pub const DEFAULT_SIZE_BIN: u64 = 500;

/// Fold index per case. Positive cases are stratified by `size / bin`; each
/// stratum, then the negatives, is shuffled and dealt round-robin, the deal
/// continuing where the previous group stopped.
pub fn stratified_folds(
    lesion_size_voxels: &[u64],
    labels: &[u8],
    folds: usize,
    bin: u64,
    seed: u64,
) -> Result<Vec<usize>> {
    if folds < 2 {
        bail_arg!("need at least 2 folds, got {folds}");
    }
    if bin == 0 {
        bail_arg!("size bin must be positive");
    }
    if lesion_size_voxels.len() != labels.len() {
        bail_arg!("{} sizes for {} labels", lesion_size_voxels.len(), labels.len());
    }
    if folds > labels.len() {
        bail_arg!("{folds} folds for {} cases", labels.len());
    }
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut negatives = Vec::new();
    for (i, (&l, &s)) in labels.iter().zip(lesion_size_voxels).enumerate() {
        if l == 1 {
            groups.entry(s / bin).or_default().push(i);
        } else {
            negatives.push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for mut group in groups.into_values().chain(std::iter::once(negatives)) {
        group.shuffle(&mut rng);
        for i in group {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

/// Strata of positive cases keyed by `size / bin`.
pub fn size_strata(lesion_size_voxels: &[u64], labels: &[u8], bin: u64) -> BTreeMap<u64, Vec<usize>> {
    let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, (&l, &s)) in labels.iter().zip(lesion_size_voxels).enumerate() {
        if l == 1 {
            out.entry(s / bin).or_default().push(i);
        }
    }
    out
}
