//! Batch command-line front end.
//!
//! Settings come from an optional JSON config file; command-line flags override it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_global, ExtractConfig, FeatureVector};
use crate::grid::{MaskGrid, VolumeGrid};
use crate::io::read_volume_auto;
use crate::maps::{extract_map_fast, parse_map_feature, BenchConfig, MapConfig, DEFAULT_MAP_FEATURES};
use crate::metrics::{auroc, average_precision, paired_permutation_test, Metric, ScoredCases};
use crate::phantoms::{make_cohort, make_image_cohort, write_image_cohort, CohortSpec, ImageCohortSpec};
use crate::preprocess::Discretization;
use crate::selection::{select_features_cv, FeatureTable, SelectionConfig};

#[derive(Debug, Parser)]
#[command(name = "radiomap", version, about = "Radiomics features, parametric maps, selection and evaluation")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sliding-window edge in voxels.
    #[arg(long, global = true)]
    pub kernel: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global features for every case listed in a labels CSV.
    Extract(ExtractArgs),
    /// Per-voxel feature maps for every case in a directory.
    Map(MapArgs),
    /// Cross-validated FDR + SVM-RFE selection on a feature table.
    Select(SelectArgs),
    /// AUROC/AP for one or two score files, with a paired permutation test for two.
    Eval(EvalArgs),
    /// Naive versus fast parametric-map timing.
    Bench(BenchArgs),
    #[command(hide = true)]
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory holding `<case>.nii[.gz]` and `<case>_mask.nii[.gz]`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CSV with `case_id,label,lesion_size_voxels`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// LoG sigma in mm; repeat for several.
    #[arg(long = "log-sigma")]
    pub log_sigmas: Vec<f64>,
    #[arg(long, conflicts_with = "bin_count")]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub bin_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated feature names such as `glcm_Correlation`.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Restrict to these case ids.
    #[arg(long = "case", value_delimiter = ',')]
    pub cases: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Feature table CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Score CSV (`case_id,score,label`); give twice to compare models.
    #[arg(long = "scores")]
    pub scores: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub n_perm: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Auroc,
    Ap,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    /// Thread counts for the fast path.
    #[arg(long = "bench-threads", value_delimiter = ',')]
    pub bench_threads: Vec<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[command(subcommand)]
    pub what: PhantomCommand,
}

#[derive(Debug, Subcommand)]
pub enum PhantomCommand {
    /// Two-class textured-blob volumes, masks and labels.csv.
    Images {
        #[arg(long, default_value_t = 20)]
        n_pos: usize,
        #[arg(long, default_value_t = 20)]
        n_neg: usize,
        #[arg(long, default_value_t = 24)]
        size: usize,
    },
    /// Planted-signal feature table.
    Table {
        #[arg(long, default_value_t = 150)]
        n_pos: usize,
        #[arg(long, default_value_t = 150)]
        n_neg: usize,
        #[arg(long, default_value_t = 50)]
        n_features: usize,
        #[arg(long, default_value_t = 3)]
        n_signal: usize,
        #[arg(long, default_value_t = 1.5)]
        effect: f64,
    },
}

/// Everything a run can be configured with; every key is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub out: PathBuf,
    pub discretization: Discretization,
    pub log_sigmas: Vec<f64>,
    pub kernel: usize,
    pub map_discretization: Discretization,
    pub features: Vec<String>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub q: f64,
    pub c: f64,
    pub target: usize,
    pub folds: usize,
    pub size_bin: u64,
    pub scores: Vec<PathBuf>,
    pub metric: Metric,
    pub n_perm: usize,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sel = SelectionConfig::default();
        let map = MapConfig::default();
        Self {
            input: None,
            labels: None,
            table: None,
            out: PathBuf::from("."),
            discretization: ExtractConfig::default().discretization,
            log_sigmas: Vec::new(),
            kernel: map.kernel,
            map_discretization: map.discretization,
            features: DEFAULT_MAP_FEATURES.iter().map(|s| s.to_string()).collect(),
            threads: None,
            seed: sel.seed,
            q: sel.q,
            c: sel.c,
            target: sel.target,
            folds: sel.folds,
            size_bin: sel.size_bin,
            scores: Vec::new(),
            metric: Metric::Auroc,
            n_perm: 10_000,
            bench: BenchConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            q: self.q,
            c: self.c,
            target: self.target,
            folds: self.folds,
            size_bin: self.size_bin,
            seed: self.seed,
        }
    }

    fn map_config(&self) -> MapConfig {
        MapConfig {
            kernel: self.kernel,
            discretization: self.map_discretization,
            ..MapConfig::default()
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn require_path<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = p.as_deref().ok_or_else(|| usage(format!("--{what} is required")))?;
    if !p.exists() {
        return Err(usage(format!("{what} path {} does not exist", p.display())));
    }
    Ok(p)
}

/// Merges config file and flags; flags win.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
        cfg.bench.seed = s;
    }
    if let Some(k) = cli.kernel {
        cfg.kernel = k;
        cfg.bench.kernel = k;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    match &cli.command {
        Command::Extract(a) => {
            cfg.input = a.input.clone().or(cfg.input);
            cfg.labels = a.labels.clone().or(cfg.labels);
            if !a.log_sigmas.is_empty() {
                cfg.log_sigmas = a.log_sigmas.clone();
            }
            if let Some(width) = a.bin_width {
                cfg.discretization = Discretization::FixedBinWidth { width };
            }
            if let Some(count) = a.bin_count {
                cfg.discretization = Discretization::FixedBinCount { count };
            }
        }
        Command::Map(a) => {
            cfg.input = a.input.clone().or(cfg.input);
            if !a.features.is_empty() {
                cfg.features = a.features.clone();
            }
        }
        Command::Select(a) => {
            cfg.table = a.table.clone().or(cfg.table);
            cfg.q = a.q.unwrap_or(cfg.q);
            cfg.c = a.c.unwrap_or(cfg.c);
            cfg.target = a.target.unwrap_or(cfg.target);
            cfg.folds = a.folds.unwrap_or(cfg.folds);
        }
        Command::Eval(a) => {
            if !a.scores.is_empty() {
                cfg.scores = a.scores.clone();
            }
            if let Some(m) = a.metric {
                cfg.metric = match m {
                    MetricArg::Auroc => Metric::Auroc,
                    MetricArg::Ap => Metric::Ap,
                };
            }
            cfg.n_perm = a.n_perm.unwrap_or(cfg.n_perm);
        }
        Command::Bench(a) => {
            if !a.sizes.is_empty() {
                cfg.bench.sizes = a.sizes.clone();
            }
            if !a.features.is_empty() {
                cfg.bench.features = a.features.clone();
            }
            if !a.bench_threads.is_empty() {
                cfg.bench.threads = a.bench_threads.clone();
            }
            cfg.bench.repetitions = a.repetitions.unwrap_or(cfg.bench.repetitions);
        }
        Command::Phantom(_) => {}
    }
    if cfg.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(cfg)
}

const VOLUME_SUFFIXES: [&str; 3] = [".nii.gz", ".nii", ".json"];

fn find_with_suffixes(dir: &Path, stem: &str) -> Option<PathBuf> {
    VOLUME_SUFFIXES
        .iter()
        .map(|s| dir.join(format!("{stem}{s}")))
        .find(|p| p.is_file())
}

fn load_case(dir: &Path, case: &str) -> Result<(VolumeGrid, MaskGrid)> {
    let vol = find_with_suffixes(dir, case).ok_or_else(|| Error::Data(format!("no volume for case {case}")))?;
    let mask =
        find_with_suffixes(dir, &format!("{case}_mask")).ok_or_else(|| Error::Data(format!("no mask for case {case}")))?;
    let grid = read_volume_auto(&vol)?;
    let mask = MaskGrid::from_volume(&read_volume_auto(&mask)?);
    Ok((grid, mask))
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    case_id: String,
    label: u8,
    lesion_size_voxels: u64,
}

fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows: Vec<LabelRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if let Some(r) = rows.iter().find(|r| r.label > 1) {
        return Err(Error::Data(format!("case {}: label must be 0 or 1", r.case_id)));
    }
    Ok(rows)
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn cmd_extract(cfg: &RunConfig) -> Result<PathBuf> {
    let input = require_path(&cfg.input, "input")?;
    let labels = read_labels(require_path(&cfg.labels, "labels")?)?;
    let ecfg = ExtractConfig {
        discretization: cfg.discretization,
        log_sigmas: cfg.log_sigmas.clone(),
    };
    let results: Vec<Result<FeatureVector>> = labels
        .par_iter()
        .map(|row| {
            let (grid, mask) = load_case(input, &row.case_id)?;
            extract_global(&grid, &mask, &ecfg)
        })
        .collect();
    let mut names: Option<Vec<String>> = None;
    let (mut ids, mut values, mut labs, mut sizes) = (vec![], vec![], vec![], vec![]);
    let mut failures = 0;
    for (row, res) in labels.iter().zip(results) {
        match res {
            Ok(fv) => {
                let these: Vec<String> = fv.names().iter().map(|s| s.to_string()).collect();
                if names.get_or_insert_with(|| these.clone()) != &these {
                    return Err(Error::Data(format!("case {} produced a different feature set", row.case_id)));
                }
                ids.push(row.case_id.clone());
                values.extend(fv.values());
                labs.push(row.label);
                sizes.push(row.lesion_size_voxels);
            }
            Err(e) => {
                failures += 1;
                log::warn!("case {} skipped: {e}", row.case_id);
            }
        }
    }
    let names = names.ok_or_else(|| Error::Data(format!("none of {} cases could be processed", labels.len())))?;
    if failures > 0 {
        log::warn!("{failures} of {} cases skipped", labels.len());
    }
    let table = FeatureTable::new(ids, names, values, labs, sizes)?;
    create_out(&cfg.out)?;
    let path = cfg.out.join("features.csv");
    table.write_csv(&path)?;
    log::info!("wrote {} cases x {} features to {}", table.n_cases(), table.n_features(), path.display());
    Ok(path)
}

fn discover_cases(dir: &Path) -> Result<Vec<String>> {
    let mut cases = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let name = entry.map_err(|e| Error::io(dir, e))?.file_name();
        let name = name.to_string_lossy();
        for suffix in VOLUME_SUFFIXES {
            if let Some(case) = name.strip_suffix(&format!("_mask{suffix}")) {
                cases.push(case.to_owned());
            }
        }
    }
    cases.sort();
    cases.dedup();
    Ok(cases)
}

pub fn cmd_map(cfg: &RunConfig, only: &[String]) -> Result<Vec<PathBuf>> {
    let mcfg = cfg.map_config();
    mcfg.validate()?;
    for f in &cfg.features {
        parse_map_feature(f)?;
    }
    let input = require_path(&cfg.input, "input")?;
    let mut cases = discover_cases(input)?;
    if !only.is_empty() {
        cases.retain(|c| only.contains(c));
    }
    if cases.is_empty() {
        return Err(Error::Data(format!("no `<case>_mask` volumes in {}", input.display())));
    }
    let threads = cfg.threads.unwrap_or_else(rayon::current_num_threads);
    let features: Vec<&str> = cfg.features.iter().map(String::as_str).collect();
    create_out(&cfg.out)?;
    let mut written = Vec::new();
    for case in &cases {
        let maps = match load_case(input, case).and_then(|(g, m)| extract_map_fast(&g, &m, &features, &mcfg, threads)) {
            Ok(maps) => maps,
            Err(e @ Error::Argument(_)) => return Err(e),
            Err(e) => {
                log::warn!("case {case} skipped: {e}");
                continue;
            }
        };
        for m in &maps {
            written.push(m.write(&cfg.out, case)?);
        }
    }
    if written.is_empty() {
        return Err(Error::Data("no case produced maps".into()));
    }
    Ok(written)
}

pub fn cmd_select(cfg: &RunConfig) -> Result<PathBuf> {
    let table = FeatureTable::read_csv(require_path(&cfg.table, "table")?)?;
    let report = select_features_cv(&table, &cfg.selection())?;
    create_out(&cfg.out)?;
    let path = cfg.out.join("selection.json");
    write_json(&report, &path)?;
    if let Some(oof) = &report.out_of_fold {
        oof.write_csv(&cfg.out.join("scores.csv"))?;
    }
    log::info!(
        "selected {:?}; mean CV AUROC {:.3}",
        report.final_selected,
        report.mean_auroc
    );
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub scores: String,
    pub n_cases: usize,
    pub auroc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: Metric,
    pub n_perm: usize,
    pub seed: u64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub models: Vec<ModelMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    if cfg.scores.is_empty() || cfg.scores.len() > 2 {
        return Err(usage("give one or two --scores files"));
    }
    let mut sets = Vec::new();
    let mut models = Vec::new();
    for p in &cfg.scores {
        let s = ScoredCases::read_csv(require_path(&Some(p.clone()), "scores")?)?;
        models.push(ModelMetrics {
            scores: p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            n_cases: s.len(),
            auroc: auroc(&s)?,
            ap: average_precision(&s)?,
        });
        sets.push(s);
    }
    let comparison = if sets.len() == 2 {
        if sets[0].case_ids != sets[1].case_ids {
            return Err(Error::Data("score files list different cases".into()));
        }
        Some(Comparison {
            metric: cfg.metric,
            n_perm: cfg.n_perm,
            seed: cfg.seed,
            p_value: paired_permutation_test(&sets[0], &sets[1], cfg.metric, cfg.n_perm, cfg.seed)?,
        })
    } else {
        None
    };
    let report = EvalReport { models, comparison };
    create_out(&cfg.out)?;
    write_json(&report, &cfg.out.join("metrics.json"))?;
    Ok(report)
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<crate::maps::BenchReport> {
    let report = crate::maps::bench_maps(&cfg.bench)?;
    create_out(&cfg.out)?;
    report.write_json(&cfg.out.join("bench.json"))?;
    report.write_csv(&cfg.out.join("bench.csv"))?;
    for c in &report.comparisons {
        log::info!(
            "size {} fast x{}: speedup {:.2} (median), Welch p {:.2e}",
            c.size,
            c.fast_threads,
            c.speedup_median,
            c.welch.p_value
        );
    }
    Ok(report)
}

pub fn cmd_phantom(cfg: &RunConfig, what: &PhantomCommand) -> Result<()> {
    create_out(&cfg.out)?;
    match *what {
        PhantomCommand::Images { n_pos, n_neg, size } => {
            let spec = ImageCohortSpec {
                n_pos,
                n_neg,
                dims: [size; 3],
                radius_mm: [0.25 * size as f64, 0.42 * size as f64],
                seed: cfg.seed,
                ..ImageCohortSpec::default()
            };
            write_image_cohort(&make_image_cohort(&spec)?, &cfg.out)
        }
        PhantomCommand::Table {
            n_pos,
            n_neg,
            n_features,
            n_signal,
            effect,
        } => {
            let cohort = make_cohort(&CohortSpec {
                n_pos,
                n_neg,
                n_features,
                n_signal,
                effect,
                seed: cfg.seed,
            })?;
            cohort.table.write_csv(&cfg.out.join("table.csv"))?;
            write_json(&cohort.planted, &cfg.out.join("planted.json"))
        }
    }
}

/// Process exit code for an error: 1 usage, 2 data, 3 internal.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => 1,
        Error::NoConvergence { .. } => 3,
        _ => 2,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    if let Some(t) = cfg.threads {
        // A second call in the same process keeps the first pool; that is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::Extract(_) => cmd_extract(&cfg).map(drop),
        Command::Map(a) => cmd_map(&cfg, &a.cases).map(drop),
        Command::Select(_) => cmd_select(&cfg).map(drop),
        Command::Eval(_) => {
            let report = cmd_eval(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Bench(_) => cmd_bench(&cfg).map(drop),
        Command::Phantom(a) => cmd_phantom(&cfg, &a.what),
    }
}

/// Entry point of the `radiomap` binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
