//! `ulda` command-line interface.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use ulda::cwl::{
    compute_cwl_weights, compute_dense_weights, compute_inv_weights, compute_lds_weights,
    WeightScheme, WeightTable,
};
use ulda::error::{Result, UldaError};
use ulda::harness::{
    run_experiment, ExperimentConfig, ExperimentReport, RegionThreshold, RegressorKind, Strategy,
    UldaParams,
};
use ulda::io::{
    load_run_config, read_dataset, write_dataset, write_dataset_with_weights, write_histogram_csv,
    write_histogram_pair_csv, write_json, write_plan_csv, write_provenance, RunConfig,
};
use ulda::label_dist::{bin_labels, convolve, make_plan, DiscreteKernel, LabelBinning};
use ulda::rng::StreamPurpose;
use ulda::sim::{SimConfig, SyntheticCorpus};
use ulda::svg::{Chart, LineSeries, PALETTE};
use ulda::tns::{augment_sequence, TnsParams};
use ulda::{LabelHistogram, SequenceDataset};

#[derive(Parser)]
#[command(
    name = "ulda",
    version,
    about = "Approximate the utopia label distribution of time-series regression corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-sequence label histograms and a distribution plot
    Stats(StatsArgs),
    /// Convolve label histograms and derive augmentation plans
    Convolve(ConvolveArgs),
    /// Oversample sequences by time-slice normal sampling
    Augment(AugmentArgs),
    /// Append per-frame loss-weight columns
    Weights(WeightsArgs),
    /// Generate a synthetic-annotator corpus
    Simulate(SimulateArgs),
    /// Run the Baseline / CWL / TNS+CWL comparison on synthetic data
    Bench(BenchArgs),
}

/// Pipeline knobs shared by the corpus-processing subcommands. Flags override
/// the config file, which overrides built-in defaults; `ULDA_SEED` sits
/// between the seed flag and the config file.
#[derive(Args, Clone)]
struct PipelineArgs {
    /// JSON run-config file
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Number of label bins
    #[arg(long)]
    bins: Option<usize>,
    /// Gaussian kernel support width, in label units
    #[arg(long)]
    kernel_size: Option<f64>,
    /// Gaussian kernel standard deviation, in label units
    #[arg(long)]
    kernel_sigma: Option<f64>,
    /// Minimum slice window length for feature-normal estimation
    #[arg(long)]
    slice_threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Clamp out-of-range labels into the declared range
    #[arg(long, action = ArgAction::SetTrue)]
    clamp: bool,
    /// Reject out-of-range labels even if the config enables clamping
    #[arg(long, action = ArgAction::SetTrue, conflicts_with = "clamp")]
    no_clamp: bool,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => load_run_config(path)?,
            None => RunConfig::default(),
        };
        if let Ok(raw) = std::env::var("ULDA_SEED") {
            config.seed = raw.parse().map_err(|_| {
                UldaError::InvalidParameter(format!("ULDA_SEED '{raw}' is not a valid seed"))
            })?;
        }
        if let Some(bins) = self.bins {
            config.bins = bins;
        }
        if let Some(size) = self.kernel_size {
            config.kernel_size = size;
        }
        if let Some(sigma) = self.kernel_sigma {
            config.kernel_sigma = sigma;
        }
        if let Some(threshold) = self.slice_threshold {
            config.slice_threshold = threshold;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.clamp {
            config.clamp = true;
        }
        if self.no_clamp {
            config.clamp = false;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct StatsArgs {
    /// Corpus manifest (manifest.json)
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ConvolveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Weighting scheme column(s) to append (repeatable)
    #[arg(long = "scheme")]
    schemes: Vec<WeightScheme>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Clone)]
struct SimArgs {
    #[arg(long)]
    sequences: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    /// Annotators averaged into each observed label
    #[arg(long)]
    annotators: Option<usize>,
    /// Per-annotator vote standard deviation
    #[arg(long)]
    vote_std: Option<f64>,
    /// Correlation length of the utopia label curves, in frames
    #[arg(long)]
    smoothness: Option<f64>,
    #[arg(long)]
    feature_noise: Option<f64>,
    #[arg(long)]
    label_min: Option<f64>,
    #[arg(long)]
    label_max: Option<f64>,
    /// Keep observed labels unclamped even when votes overshoot the range
    #[arg(long, action = ArgAction::SetTrue)]
    no_clamp_votes: bool,
}

impl SimArgs {
    fn apply(&self, mut config: SimConfig) -> SimConfig {
        if let Some(v) = self.sequences {
            config.sequence_count = v;
        }
        if let Some(v) = self.frames {
            config.frames_per_sequence = v;
        }
        if let Some(v) = self.feature_dim {
            config.feature_dim = v;
        }
        if let Some(v) = self.annotators {
            config.annotator_count = v;
        }
        if let Some(v) = self.vote_std {
            config.vote_std = v;
        }
        if let Some(v) = self.smoothness {
            config.smoothness = v;
        }
        if let Some(v) = self.feature_noise {
            config.feature_noise = v;
        }
        if let Some(v) = self.label_min {
            config.label_min = v;
        }
        if let Some(v) = self.label_max {
            config.label_max = v;
        }
        if self.no_clamp_votes {
            config.clamp_votes = false;
        }
        config
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    sim: SimArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Regressor: "ridge" or "knn"
    #[arg(long, default_value = "ridge")]
    regressor: String,
    /// Ridge penalty
    #[arg(long)]
    penalty: Option<f64>,
    /// Neighbour count for the knn regressor
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Fraction of sequences used for training
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Absolute region-II count threshold
    #[arg(long, conflicts_with = "region_fraction")]
    region_threshold: Option<f64>,
    /// Region-II threshold as a fraction of the max bin count
    #[arg(long)]
    region_fraction: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(args) => cmd_stats(args),
        Command::Convolve(args) => cmd_convolve(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Weights(args) => cmd_weights(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn dataset_binning(dataset: &SequenceDataset, config: &RunConfig) -> Result<LabelBinning> {
    LabelBinning::new(dataset.label_min, dataset.label_max, config.bins)
}

fn histogram_chart(title: &str, series: Vec<(&str, &str, &LabelHistogram)>) -> Chart {
    let mut chart = Chart::new(title, "label", "count");
    for (name, color, hist) in series {
        let points = hist
            .counts()
            .iter()
            .enumerate()
            .map(|(bin, &count)| (hist.binning().bin_center(bin), count))
            .collect();
        chart.push(LineSeries::new(name, color, points));
    }
    chart
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let config = args.pipeline.resolve()?;
    let dataset = read_dataset(&args.data)?;
    let binning = dataset_binning(&dataset, &config)?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut total = vec![0.0; binning.bin_count()];
    for seq in &dataset.sequences {
        let hist = bin_labels(&seq.labels(), &binning, config.clamp)?;
        for (t, &c) in total.iter_mut().zip(hist.counts()) {
            *t += c;
        }
        write_histogram_csv(&args.out_dir.join(format!("hist_{}.csv", seq.id)), &hist)?;
    }
    let total_hist = LabelHistogram::new(binning, total)?;
    write_histogram_csv(&args.out_dir.join("hist_total.csv"), &total_hist)?;
    let chart = histogram_chart("label distribution", vec![("corpus", PALETTE[0], &total_hist)]);
    ulda::io::write_atomic(
        &args.out_dir.join("label_distribution.svg"),
        chart.render().as_bytes(),
    )?;
    println!(
        "stats: {} sequences, {} frames, {} bins -> {}",
        dataset.sequences.len(),
        dataset.frame_count(),
        binning.bin_count(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_convolve(args: ConvolveArgs) -> Result<()> {
    let config = args.pipeline.resolve()?;
    let dataset = read_dataset(&args.data)?;
    let binning = dataset_binning(&dataset, &config)?;
    let kernel = DiscreteKernel::build(config.kernel_size, config.kernel_sigma, binning.bin_width())?;
    std::fs::create_dir_all(&args.out_dir)?;

    let mut total_before = vec![0.0; binning.bin_count()];
    let mut total_after = vec![0.0; binning.bin_count()];
    for seq in &dataset.sequences {
        let before = bin_labels(&seq.labels(), &binning, config.clamp)?;
        let after = convolve(&before, &kernel)?;
        let plan = make_plan(&before, &after)?;
        write_histogram_pair_csv(
            &args.out_dir.join(format!("convolve_{}.csv", seq.id)),
            &before,
            &after,
        )?;
        write_plan_csv(&args.out_dir.join(format!("plan_{}.csv", seq.id)), &plan)?;
        for ((tb, ta), (&b, &a)) in total_before
            .iter_mut()
            .zip(total_after.iter_mut())
            .zip(before.counts().iter().zip(after.counts()))
        {
            *tb += b;
            *ta += a;
        }
    }
    let before_hist = LabelHistogram::new(binning, total_before)?;
    let after_hist = LabelHistogram::new(binning, total_after)?;
    write_histogram_pair_csv(&args.out_dir.join("convolve_total.csv"), &before_hist, &after_hist)?;
    let chart = histogram_chart(
        "label distribution before/after convolution",
        vec![
            ("original", PALETTE[0], &before_hist),
            ("convolved", PALETTE[1], &after_hist),
        ],
    );
    ulda::io::write_atomic(&args.out_dir.join("convolution.svg"), chart.render().as_bytes())?;
    println!(
        "convolve: {} sequences, kernel size {} sigma {} -> {}",
        dataset.sequences.len(),
        config.kernel_size,
        config.kernel_sigma,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> Result<()> {
    let config = args.pipeline.resolve()?;
    let dataset = read_dataset(&args.data)?;
    let binning = dataset_binning(&dataset, &config)?;
    let kernel = DiscreteKernel::build(config.kernel_size, config.kernel_sigma, binning.bin_width())?;

    let mut augmented = SequenceDataset {
        feature_dim: dataset.feature_dim,
        label_min: dataset.label_min,
        label_max: dataset.label_max,
        sequences: Vec::with_capacity(dataset.sequences.len()),
    };
    let mut provenance = Vec::new();
    let mut added = 0usize;
    for (index, seq) in dataset.sequences.iter().enumerate() {
        let before = bin_labels(&seq.labels(), &binning, config.clamp)?;
        let after = convolve(&before, &kernel)?;
        let plan = make_plan(&before, &after)?.restricted_to_support();
        let params = TnsParams {
            slice_threshold: config.slice_threshold,
            clamp_labels: config.clamp,
            seed: config.seed,
            stream: ((StreamPurpose::Augment as u64) << 56) | index as u64,
        };
        let (new_seq, records) = augment_sequence(seq, &plan, &params)?;
        added += new_seq.len() - seq.len();
        augmented.sequences.push(new_seq);
        provenance.extend(records);
    }
    write_dataset(&args.out_dir, &augmented)?;
    write_provenance(&args.out_dir.join("provenance.jsonl"), &provenance)?;
    println!(
        "augment: +{added} synthetic frames across {} sequences -> {}",
        augmented.sequences.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_weights(args: WeightsArgs) -> Result<()> {
    let config = args.pipeline.resolve()?;
    let schemes = if args.schemes.is_empty() {
        vec![config.weighting]
    } else {
        args.schemes.clone()
    };
    let dataset = read_dataset(&args.data)?;
    let binning = dataset_binning(&dataset, &config)?;
    let kernel = DiscreteKernel::build(config.kernel_size, config.kernel_sigma, binning.bin_width())?;

    let mut tables: Vec<(WeightScheme, Vec<Vec<f64>>)> = Vec::with_capacity(schemes.len());
    for &scheme in &schemes {
        let mut columns = Vec::with_capacity(dataset.sequences.len());
        for seq in &dataset.sequences {
            let before = bin_labels(&seq.labels(), &binning, config.clamp)?;
            let table = match scheme {
                WeightScheme::Cwl => {
                    let after = convolve(&before, &kernel)?;
                    compute_cwl_weights(&before, &after, seq, config.clamp)?
                }
                WeightScheme::Inv => compute_inv_weights(&before, seq, config.clamp)?,
                WeightScheme::Lds => compute_lds_weights(&before, &kernel, seq, config.clamp)?,
                WeightScheme::Dense => compute_dense_weights(&before, &kernel, seq, config.clamp)?,
                WeightScheme::Uniform => WeightTable::uniform(seq),
            };
            columns.push(table.weights);
        }
        tables.push((scheme, columns));
    }
    write_dataset_with_weights(&args.out_dir, &dataset, &tables)?;
    println!(
        "weights: appended {} column(s) to {} sequences -> {}",
        tables.len(),
        dataset.sequences.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn resolve_sim_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    if let Ok(raw) = std::env::var("ULDA_SEED") {
        return raw.parse().map_err(|_| {
            UldaError::InvalidParameter(format!("ULDA_SEED '{raw}' is not a valid seed"))
        });
    }
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut config = args.sim.apply(SimConfig::default());
    config.seed = resolve_sim_seed(args.seed)?;
    config.validate()?;
    let corpus = SyntheticCorpus::generate(&config)?;
    write_dataset(&args.out_dir, &corpus.observed)?;
    write_json(&args.out_dir.join("sim_config.json"), &config)?;
    println!(
        "simulate: {} sequences x {} frames (n = {}, vote_std = {}) -> {}",
        config.sequence_count,
        config.frames_per_sequence,
        config.annotator_count,
        config.vote_std,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let run = args.pipeline.resolve()?;
    let mut config = ExperimentConfig::default();
    config.sim = args.sim.apply(config.sim);
    config.sim.seed = run.seed;
    config.ulda = UldaParams {
        bins: run.bins,
        kernel_size: run.kernel_size,
        kernel_sigma: run.kernel_sigma,
        slice_threshold: run.slice_threshold,
    };
    config.regressor = match args.regressor.as_str() {
        "ridge" => RegressorKind::Ridge {
            penalty: args.penalty.unwrap_or(match run.regressor {
                RegressorKind::Ridge { penalty } => penalty,
                _ => 1e-3,
            }),
        },
        "knn" => RegressorKind::Knn {
            k: args.knn_k.unwrap_or(10),
        },
        other => {
            return Err(UldaError::InvalidParameter(format!(
                "unknown regressor '{other}' (expected 'ridge' or 'knn')"
            )))
        }
    };
    if let Some(repeats) = args.repeats {
        config.repeats = repeats;
    }
    if let Some(fraction) = args.train_fraction {
        config.train_fraction = fraction;
    }
    if let Some(threshold) = args.region_threshold {
        config.region_threshold = RegionThreshold::Absolute(threshold);
    } else if let Some(fraction) = args.region_fraction {
        config.region_threshold = RegionThreshold::FractionOfMax(fraction);
    }

    let report = run_experiment(&config)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_json(&args.out_dir.join("report.json"), &report)?;
    write_bench_figures(&args.out_dir, &report)?;

    println!(
        "bench: {} repeats, raw/convolved distribution PCC {:.4} -> {:.4}",
        report.repeats.len(),
        report.summary.mean_raw_train_vs_test_pcc,
        report.summary.mean_convolved_train_vs_test_pcc
    );
    for s in &report.summary.strategies {
        println!(
            "  {:<9} mean MSE {:.6} (std {:.6}) mean PCC {}",
            s.strategy.name(),
            s.mean_mse,
            s.std_mse,
            s.mean_pcc.map_or("n/a".to_string(), |p| format!("{p:.4}")),
        );
    }
    Ok(())
}

fn write_bench_figures(out_dir: &Path, report: &ExperimentReport) -> Result<()> {
    let binning = LabelBinning::new(
        report.config.sim.label_min,
        report.config.sim.label_max,
        report.config.ulda.bins,
    )?;
    let centers: Vec<f64> = (0..binning.bin_count()).map(|b| binning.bin_center(b)).collect();

    // densities averaged over repeats, so train and test masses are comparable
    let density = |select: &dyn Fn(&ulda::harness::RepeatReport) -> &Vec<f64>| -> Vec<(f64, f64)> {
        let mut sums = vec![0.0; centers.len()];
        for repeat in &report.repeats {
            let counts = select(repeat);
            let total: f64 = counts.iter().sum();
            if total > 0.0 {
                for (s, &c) in sums.iter_mut().zip(counts) {
                    *s += c / total;
                }
            }
        }
        centers
            .iter()
            .zip(&sums)
            .map(|(&x, &s)| (x, s / report.repeats.len() as f64))
            .collect()
    };
    let mut dist_chart = Chart::new("train vs test label distributions", "label", "density");
    dist_chart.push(LineSeries::new("train (raw)", PALETTE[0], density(&|r| &r.train_counts)));
    dist_chart.push(LineSeries::new(
        "train (convolved)",
        PALETTE[1],
        density(&|r| &r.convolved_train_counts),
    ));
    dist_chart.push(LineSeries::new(
        "test (utopia)",
        PALETTE[2],
        density(&|r| &r.test_utopia_counts),
    ));
    ulda::io::write_atomic(
        &out_dir.join("fig_distributions.svg"),
        dist_chart.render().as_bytes(),
    )?;

    // per-bin MSE with min/max ribbons, averaged over repeats where defined
    let mut mse_chart = Chart::new("per-label MSE (mean and range)", "label", "mse");
    for (strategy, color) in [(Strategy::Baseline, PALETTE[0]), (Strategy::TnsCwl, PALETTE[1])] {
        let mut mean_points = Vec::new();
        let mut band = Vec::new();
        for (bin, &x) in centers.iter().enumerate() {
            let collect = |extract: &dyn Fn(&ulda::harness::StrategyResult) -> &Vec<Option<f64>>| {
                let values: Vec<f64> = report
                    .repeats
                    .iter()
                    .filter_map(|r| {
                        r.strategies
                            .iter()
                            .find(|s| s.strategy == strategy)
                            .and_then(|s| extract(s)[bin])
                    })
                    .collect();
                if values.is_empty() {
                    None
                } else {
                    Some(values.iter().sum::<f64>() / values.len() as f64)
                }
            };
            if let Some(mean) = collect(&|s| &s.per_bin_mse) {
                mean_points.push((x, mean));
                let lo = collect(&|s| &s.per_bin_mse_min).unwrap_or(mean);
                let hi = collect(&|s| &s.per_bin_mse_max).unwrap_or(mean);
                band.push((x, lo, hi));
            }
        }
        mse_chart.push(LineSeries::new(strategy.name(), color, mean_points).with_band(band));
    }
    ulda::io::write_atomic(&out_dir.join("fig_mse.svg"), mse_chart.render().as_bytes())?;
    Ok(())
}
