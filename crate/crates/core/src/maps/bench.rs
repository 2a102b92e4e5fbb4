use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{extract_map_fast, extract_map_naive, MapConfig, DEFAULT_MAP_FEATURES};
use crate::error::{bail_arg, Error, Result};
use crate::phantoms::{make_phantom, PhantomKind, PhantomSpec};
use crate::stats::{mean_std, welch_t_test, WelchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Cube edge lengths of the textured phantoms.
    pub sizes: Vec<usize>,
    pub kernel: usize,
    pub features: Vec<String>,
    /// Worker counts for the fast path; the naive path always runs serially.
    pub threads: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64],
            kernel: 5,
            features: DEFAULT_MAP_FEATURES.iter().map(|s| s.to_string()).collect(),
            threads: vec![1, 2, 8],
            repetitions: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Naive,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub size: usize,
    pub strategy: Strategy,
    pub threads: usize,
    /// Wall time of each repetition for all features, seconds.
    pub times_s: Vec<f64>,
    pub mean_s: f64,
    pub std_s: f64,
    pub median_s: f64,
    pub mean_per_feature_s: f64,
    pub std_per_feature_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchComparison {
    pub size: usize,
    pub fast_threads: usize,
    /// Naive over fast, from means and from medians.
    pub speedup_mean: f64,
    pub speedup_median: f64,
    pub welch: WelchResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub available_cpus: usize,
    pub mask_voxels: Vec<usize>,
    pub entries: Vec<BenchEntry>,
    pub comparisons: Vec<BenchComparison>,
    /// Fast maps matched naive maps bit for bit in every repetition.
    pub outputs_identical: bool,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn entry(size: usize, strategy: Strategy, threads: usize, times_s: Vec<f64>, n_features: usize) -> BenchEntry {
    let (mean_s, std_s) = mean_std(&times_s);
    let nf = n_features as f64;
    BenchEntry {
        size,
        strategy,
        threads,
        median_s: median(&times_s),
        mean_per_feature_s: mean_s / nf,
        std_per_feature_s: std_s / nf,
        mean_s,
        std_s,
        times_s,
    }
}

/// Textured phantom of edge `size` used for benchmarking.
pub fn bench_phantom(size: usize, seed: u64) -> Result<(crate::VolumeGrid, crate::MaskGrid)> {
    make_phantom(
        &PhantomSpec::new(
            PhantomKind::TexturedBlob {
                radius_mm: 0.35 * size as f64,
                class: 1,
                noise_hu: 40.0,
                base_hu: 60.0,
                contrast: 1.0,
            },
            [size; 3],
        )
        .with_seed(seed),
    )
}

/// Times the naive path (serial, one feature at a time) against the fast path
/// at each thread count, on the same inputs.
pub fn bench_maps(config: &BenchConfig) -> Result<BenchReport> {
    if config.repetitions < 2 {
        bail_arg!("benchmark needs at least 2 repetitions, got {}", config.repetitions);
    }
    if config.features.is_empty() || config.sizes.is_empty() || config.threads.is_empty() {
        bail_arg!("benchmark needs sizes, features and thread counts");
    }
    if config.repetitions < 5 {
        log::warn!("fewer than 5 repetitions; medians will be noisy");
    }
    let cfg = MapConfig::with_kernel(config.kernel);
    cfg.validate()?;
    let features: Vec<&str> = config.features.iter().map(String::as_str).collect();
    for f in &features {
        super::parse_map_feature(f)?;
    }
    let mut entries = Vec::new();
    let mut comparisons = Vec::new();
    let mut mask_voxels = Vec::new();
    let mut identical = true;
    for &size in &config.sizes {
        let (grid, mask) = bench_phantom(size, config.seed)?;
        mask_voxels.push(mask.count());
        let mut naive_times = Vec::new();
        let mut reference = Vec::new();
        for _ in 0..config.repetitions {
            let t = Instant::now();
            let maps: Vec<_> = features
                .iter()
                .map(|f| extract_map_naive(&grid, &mask, f, &cfg))
                .collect::<Result<_>>()?;
            naive_times.push(t.elapsed().as_secs_f64());
            reference = maps;
        }
        log::info!("size {size}: naive median {:.3}s", median(&naive_times));
        let naive = entry(size, Strategy::Naive, 1, naive_times, features.len());
        for &threads in &config.threads {
            let mut times = Vec::new();
            for _ in 0..config.repetitions {
                let t = Instant::now();
                let maps = extract_map_fast(&grid, &mask, &features, &cfg, threads)?;
                times.push(t.elapsed().as_secs_f64());
                identical &= maps.iter().zip(&reference).all(|(a, b)| a.same_values(b));
            }
            let fast = entry(size, Strategy::Fast, threads, times, features.len());
            log::info!("size {size}: fast x{threads} median {:.3}s", fast.median_s);
            let welch = welch_t_test(&naive.times_s, &fast.times_s)
                .ok_or_else(|| Error::Precondition("too few repetitions for a t-test".into()))?;
            comparisons.push(BenchComparison {
                size,
                fast_threads: threads,
                speedup_mean: naive.mean_s / fast.mean_s,
                speedup_median: naive.median_s / fast.median_s,
                welch,
            });
            entries.push(fast);
        }
        entries.push(naive);
    }
    Ok(BenchReport {
        config: config.clone(),
        available_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
        mask_voxels,
        entries,
        comparisons,
        outputs_identical: identical,
    })
}

impl BenchReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// One row per (size, strategy, threads).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "size",
            "strategy",
            "threads",
            "repetitions",
            "mean_s",
            "std_s",
            "median_s",
            "mean_per_feature_s",
            "std_per_feature_s",
        ])?;
        for e in &self.entries {
            let strategy = match e.strategy {
                Strategy::Naive => "naive",
                Strategy::Fast => "fast",
            };
            w.write_record([
                e.size.to_string(),
                strategy.to_string(),
                e.threads.to_string(),
                e.times_s.len().to_string(),
                e.mean_s.to_string(),
                e.std_s.to_string(),
                e.median_s.to_string(),
                e.mean_per_feature_s.to_string(),
                e.std_per_feature_s.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}
