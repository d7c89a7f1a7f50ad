// temporary calibration probe; not part of the deliverable
use ulda::cwl::compute_cwl_weights;
use ulda::harness::{fit_weighted_ridge, run_experiment, ExperimentConfig, RegressorKind, Strategy};
use ulda::label_dist::{bin_labels, LabelBinning, LabelHistogram};
use ulda::sim::{SimConfig, SyntheticCorpus};

/// Test MSE of ridge fits under (uniform, oracle-importance) weights, where
/// oracle importance targets the actual test utopia distribution.
fn oracle_probe(config: &ExperimentConfig, seed: u64) -> (f64, f64) {
    let sim = SimConfig { seed, ..config.sim.clone() };
    let corpus = SyntheticCorpus::generate(&sim).unwrap();
    let binning = LabelBinning::new(sim.label_min, sim.label_max, config.ulda.bins).unwrap();
    let total = sim.sequence_count;
    let train_count = ((config.train_fraction * total as f64).round() as usize).clamp(1, total - 1);
    let train = &corpus.observed.sequences[..train_count];
    let test = &corpus.observed.sequences[train_count..];

    let mut test_counts = vec![0.0; binning.bin_count()];
    let mut test_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for seq in test {
        for frame in &seq.frames {
            let y = frame.utopia_label.unwrap();
            test_counts[binning.bin_of_clamped(y)] += 1.0;
            let mut f = vec![1.0];
            f.extend_from_slice(&frame.features);
            test_rows.push((f, y));
        }
    }
    let test_total: f64 = test_counts.iter().sum();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut uniform_w = Vec::new();
    let mut oracle_w = Vec::new();
    for seq in train {
        let hist = bin_labels(&seq.labels(), &binning, true).unwrap();
        let target = LabelHistogram::new(
            binning,
            test_counts.iter().map(|&c| c / test_total * seq.len() as f64).collect(),
        )
        .unwrap();
        let table = compute_cwl_weights(&hist, &target, seq, true).unwrap();
        for (frame, &w) in seq.frames.iter().zip(&table.weights) {
            let mut f = vec![1.0];
            f.extend_from_slice(&frame.features);
            features.push(f);
            labels.push(frame.label);
            uniform_w.push(1.0);
            oracle_w.push(w);
        }
    }
    let penalty = match config.regressor {
        RegressorKind::Ridge { penalty } => penalty,
        _ => 1e-3,
    };
    let eval = |weights: &[f64]| -> f64 {
        let model = fit_weighted_ridge(&features, &labels, weights, penalty).unwrap();
        test_rows
            .iter()
            .map(|(f, y)| {
                let p = model.predict(f);
                (y - p) * (y - p)
            })
            .sum::<f64>()
            / test_rows.len() as f64
    };
    (eval(&uniform_w), eval(&oracle_w))
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |name: &str, default: f64| -> f64 {
        args.iter()
            .position(|a| a == name)
            .and_then(|i| args.get(i + 1))
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    let seeds = get("--seeds", 30.0) as u64;
    let sim = SimConfig {
        sequence_count: get("--sequences", SimConfig::default().sequence_count as f64) as usize,
        frames_per_sequence: get("--frames", SimConfig::default().frames_per_sequence as f64) as usize,
        feature_dim: get("--dim", SimConfig::default().feature_dim as f64) as usize,
        annotator_count: get("--annotators", 3.0) as usize,
        vote_std: get("--vote-std", 0.1),
        smoothness: get("--smoothness", SimConfig::default().smoothness),
        feature_noise: get("--feature-noise", SimConfig::default().feature_noise),
        ..SimConfig::default()
    };
    let mut config = ExperimentConfig {
        sim,
        repeats: 1,
        regressor: RegressorKind::Ridge { penalty: get("--penalty", 1e-3) },
        ..ExperimentConfig::default()
    };

    let mut conv_wins = 0u32;
    let mut tns_wins = 0u32;
    let mut cwl_wins = 0u32;
    let mut order_ok = 0u32;
    let mut range_wins = 0u32;
    let (mut sum_base, mut sum_cwl, mut sum_tns) = (0.0, 0.0, 0.0);
    let (mut sum_raw_pcc, mut sum_conv_pcc) = (0.0, 0.0);
    let (mut sum_range_base, mut sum_range_tns) = (0.0, 0.0);
    let mut sum_pcc_base = 0.0;
    for seed in 0..seeds {
        config.sim.seed = seed;
        let report = run_experiment(&config).unwrap();
        let r = &report.repeats[0];
        let get_strategy = |s: Strategy| r.strategies.iter().find(|x| x.strategy == s).unwrap();
        let base = get_strategy(Strategy::Baseline);
        let cwl = get_strategy(Strategy::Cwl);
        let tns = get_strategy(Strategy::TnsCwl);
        if r.distribution.convolved_train_vs_test > r.distribution.raw_train_vs_test {
            conv_wins += 1;
        }
        if tns.metrics.mse < base.metrics.mse {
            tns_wins += 1;
        }
        if cwl.metrics.mse < base.metrics.mse {
            cwl_wins += 1;
        }
        if tns.metrics.mse <= cwl.metrics.mse && cwl.metrics.mse <= base.metrics.mse {
            order_ok += 1;
        }
        let rb = base.mean_bin_mse_range.unwrap_or(f64::NAN);
        let rt = tns.mean_bin_mse_range.unwrap_or(f64::NAN);
        if rt < rb {
            range_wins += 1;
        }
        sum_base += base.metrics.mse;
        sum_cwl += cwl.metrics.mse;
        sum_tns += tns.metrics.mse;
        sum_raw_pcc += r.distribution.raw_train_vs_test;
        sum_conv_pcc += r.distribution.convolved_train_vs_test;
        sum_range_base += rb;
        sum_range_tns += rt;
        sum_pcc_base += base.metrics.pcc.unwrap_or(f64::NAN);
    }
    // one-corpus diagnostics: weight spread and augmentation volume
    {
        use ulda::cwl::compute_cwl_weights;
        use ulda::label_dist::{bin_labels, convolve, make_plan, DiscreteKernel, LabelBinning};
        config.sim.seed = 0;
        let corpus = ulda::sim::SyntheticCorpus::generate(&config.sim).unwrap();
        let binning = LabelBinning::new(-1.0, 1.0, config.ulda.bins).unwrap();
        let kernel = DiscreteKernel::build(
            config.ulda.kernel_size,
            config.ulda.kernel_sigma,
            binning.bin_width(),
        )
        .unwrap();
        let mut all_w = Vec::new();
        let mut added = 0usize;
        let mut frames = 0usize;
        for seq in &corpus.observed.sequences {
            let hist = bin_labels(&seq.labels(), &binning, true).unwrap();
            let conv = convolve(&hist, &kernel).unwrap();
            let table = compute_cwl_weights(&hist, &conv, seq, true).unwrap();
            all_w.extend(table.weights);
            let plan = make_plan(&hist, &conv).unwrap().restricted_to_support();
            added += plan.total_oversample();
            frames += seq.len();
        }
        let mw = all_w.iter().sum::<f64>() / all_w.len() as f64;
        let sw = (all_w.iter().map(|w| (w - mw) * (w - mw)).sum::<f64>() / all_w.len() as f64).sqrt();
        let max_w = all_w.iter().cloned().fold(f64::MIN, f64::max);
        let min_w = all_w.iter().cloned().fold(f64::MAX, f64::min);
        println!(
            "diag(seed0): weight std {:.4} min {:.3} max {:.3}; augment +{added}/{frames} frames",
            sw, min_w, max_w
        );
    }
    let mut oracle_wins = 0u32;
    let (mut sum_ou, mut sum_oo) = (0.0, 0.0);
    for seed in 0..seeds {
        let (uniform, oracle) = oracle_probe(&config, seed);
        if oracle < uniform {
            oracle_wins += 1;
        }
        sum_ou += uniform;
        sum_oo += oracle;
    }
    let n = seeds as f64;
    println!("oracle-importance wins: {oracle_wins}/{seeds}  (mean base {:.6} oracle {:.6})", sum_ou / n, sum_oo / n);
    println!("seeds = {seeds}");
    println!("conv pcc wins:   {conv_wins}/{seeds}  (mean raw {:.4} -> conv {:.4})", sum_raw_pcc / n, sum_conv_pcc / n);
    println!("tns<base wins:   {tns_wins}/{seeds}");
    println!("cwl<base wins:   {cwl_wins}/{seeds}");
    println!("full order ok:   {order_ok}/{seeds}");
    println!("range wins:      {range_wins}/{seeds}  (mean base {:.6} tns {:.6})", sum_range_base / n, sum_range_tns / n);
    println!("mean mse: base {:.6}  cwl {:.6}  tns {:.6}", sum_base / n, sum_cwl / n, sum_tns / n);
    println!("mean baseline pred pcc: {:.4}", sum_pcc_base / n);
}
