use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use colsnn::bench::{self, Mode};
use colsnn::config::{self, RunConfig};
use colsnn::trainer::{self, ExperimentReport, Range, SearchSpace};
use colsnn::viz::{self, HeatmapLayout};
use colsnn::{ImageSet, LabeledImage, Network, Split};

const DEFAULT_DATA_DIR: &str = "data/mnist";

#[derive(Parser)]
#[command(
    name = "colsnn",
    version,
    about = "Columnar spiking network trained with local dopamine-modulated plasticity"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// MNIST directory (overrides $COLSNN_DATA_DIR and the config's data_dir).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one epoch per seed and evaluate on the test split.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: config out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of seeds (default: config n_runs).
        #[arg(long)]
        runs: Option<usize>,
        /// Override individual config keys, e.g. `--set tau_v=6`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Write a per-image plasticity log (seed<k>.updates.csv).
        #[arg(long)]
        log_updates: bool,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        /// Only the first N test images.
        #[arg(long)]
        limit: Option<usize>,
        /// Also write metrics JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Per-timestep latency for training and inference cycles.
    Bench {
        /// Network to time; a fresh network from --config if omitted.
        #[arg(long)]
        ckpt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// train, infer, or both.
        #[arg(long, default_value = "both")]
        mode: String,
        #[arg(long, default_value_t = 1000)]
        images: usize,
        /// Images run (and discarded) before timing starts.
        #[arg(long, default_value_t = 100)]
        warmup: usize,
        /// CSV output; a readable summary goes to <out>.txt.
        #[arg(long, default_value = "latency.csv")]
        out: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Random hyperparameter search scored on a held-out block of the
    /// training file.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        budget: usize,
        /// Leading training images used per trial.
        #[arg(long, default_value_t = 6000)]
        train_subset: usize,
        /// Trailing training images used for scoring.
        #[arg(long, default_value_t = 10000)]
        validation: usize,
        /// Seed of the sampling rng.
        #[arg(long, default_value_t = 0)]
        sweep_seed: u64,
        /// Re-score the best K trials on --confirm-train leading images
        /// (same validation block) and pick the winner from those; 0 skips.
        #[arg(long, default_value_t = 0, value_name = "K")]
        confirm: usize,
        #[arg(long, default_value_t = 50000)]
        confirm_train: usize,
        #[arg(long, value_name = "LO:HI")]
        tau_v: Option<String>,
        #[arg(long, value_name = "LO:HI")]
        d: Option<String>,
        #[arg(long, value_name = "LO:HI")]
        w_max: Option<String>,
        /// w_min as a multiple of w_max.
        #[arg(long, value_name = "LO:HI")]
        w_min_ratio: Option<String>,
        /// init_scale as a multiple of w_max.
        #[arg(long, value_name = "LO:HI")]
        init_scale: Option<String>,
        /// Writes trials.csv and best.cfg here.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Render receptive fields as a PPM grid (rows = classes).
    Heatmap {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scale: usize,
        /// Also report field/class-mean correlations (needs training data).
        #[arg(long)]
        similarity: bool,
        #[command(flatten)]
        data: DataArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("colsnn: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train {
            config,
            out,
            runs,
            overrides,
            log_updates,
            data,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            for kv in &overrides {
                apply_override(&mut cfg, kv)?;
            }
            if let Some(n) = runs {
                cfg.n_runs = n;
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            cfg.validate()?;
            train(&cfg, data.data, log_updates)
        }
        Command::Eval {
            ckpt,
            limit,
            json,
            data,
        } => {
            let net = Network::load(&ckpt)?;
            let test = load_split(
                &resolve_data_dir(data.data, load_config(None)?.data_dir),
                Split::Test,
            )?;
            let n = limit.unwrap_or(test.len()).min(test.len());
            let metrics = trainer::evaluate(&net, &test.images[..n]);
            println!("{} on {n} test images", ckpt.display());
            print!(
                "{}",
                trainer::format_table(metrics.overall_accuracy, &metrics.per_class_accuracy, None)
            );
            if let Some(path) = json {
                write(&path, serde_json::to_string_pretty(&metrics)?)?;
            }
            Ok(())
        }
        Command::Bench {
            ckpt,
            config,
            mode,
            images,
            warmup,
            out,
            data,
        } => {
            let cfg = load_config(config.as_deref())?;
            let net = match ckpt {
                Some(p) => Network::load(p)?,
                None => Network::new(cfg.network.clone())?,
            };
            let test = load_split(
                &resolve_data_dir(data.data, cfg.data_dir.clone()),
                Split::Test,
            )?;
            let imgs = &test.images[..images.min(test.len())];
            let report = match mode.as_str() {
                "both" => bench::bench_run(&net, imgs, Mode::Train, warmup)?
                    .merge(bench::bench_run(&net, imgs, Mode::Infer, warmup)?),
                m => bench::bench_run(&net, imgs, m.parse()?, warmup)?,
            };
            bench::emit_report(&report, &out)?;
            print!("{}", report.summary());
            println!(
                "timer overhead: {:.3} us per sample",
                bench::timer_overhead_us(100_000)
            );
            Ok(())
        }
        Command::Sweep {
            config,
            budget,
            train_subset,
            validation,
            sweep_seed,
            confirm,
            confirm_train,
            tau_v,
            d,
            w_max,
            w_min_ratio,
            init_scale,
            out,
            data,
        } => {
            let cfg = load_config(config.as_deref())?;
            let mut space = SearchSpace::default();
            for (slot, arg) in [
                (&mut space.tau_v, &tau_v),
                (&mut space.d, &d),
                (&mut space.w_max, &w_max),
                (&mut space.w_min_ratio, &w_min_ratio),
                (&mut space.init_scale, &init_scale),
            ] {
                if let Some(text) = arg {
                    *slot = parse_range(text, slot.log)?;
                }
            }
            let train = load_split(
                &resolve_data_dir(data.data, cfg.data_dir.clone()),
                Split::Train,
            )?;
            let (tr, va) = trainer::sweep_split(&train, train_subset, validation);
            eprintln!(
                "sweep: {budget} trials, {} train / {} validation images",
                tr.len(),
                va.len()
            );
            let mut rng = trainer::sweep_rng(sweep_seed);
            let report = trainer::sweep(
                &cfg.network,
                &space,
                budget,
                &mut rng,
                &tr.images,
                &va.images,
            )?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            report.write_csv(out.join("trials.csv"))?;
            let mut header = format!(
                "# best of {budget} random-search trials (sweep seed {sweep_seed}) on {} images, validation accuracy {:.2}%\n",
                tr.len(),
                report.best_accuracy
            );
            let report = if confirm > 0 {
                let (ctr, cva) = trainer::sweep_split(&train, confirm_train, validation);
                eprintln!(
                    "confirm: top {confirm} trials on {} train / {} validation images",
                    ctr.len(),
                    cva.len()
                );
                let confirmed = trainer::confirm_top(&report, confirm, &ctr.images, &cva.images)?;
                confirmed.write_csv(out.join("confirm.csv"))?;
                header = format!(
                    "# best of the top {confirm} of {budget} random-search trials (sweep seed {sweep_seed}) re-scored on {} images, validation accuracy {:.2}%\n",
                    ctr.len(),
                    confirmed.best_accuracy
                );
                confirmed
            } else {
                report
            };
            let best = RunConfig {
                network: report.best.clone(),
                ..cfg
            };
            write(&out.join("best.cfg"), header + &best.to_text())?;
            println!(
                "best {:.2}%: {}",
                report.best_accuracy,
                trainer::describe(&report.best)
            );
            Ok(())
        }
        Command::Heatmap {
            ckpt,
            out,
            scale,
            similarity,
            data,
        } => {
            let net = Network::load(&ckpt)?;
            viz::render_heatmaps(
                &net,
                &out,
                HeatmapLayout {
                    scale,
                    ..HeatmapLayout::default()
                },
            )?;
            println!("wrote {}", out.display());
            if similarity {
                let train = load_split(
                    &resolve_data_dir(data.data, load_config(None)?.data_dir),
                    Split::Train,
                )?;
                let means = viz::class_mean_images(&train.images);
                let sim = viz::field_similarity(&net, &means);
                let intra = viz::intra_column_similarity(&net);
                println!("class  field~mean  intra-column");
                for (c, (s, i)) in sim.iter().zip(&intra).enumerate() {
                    let flag = if s.degenerate { " (flat)" } else { "" };
                    println!("{c:>5}  {:>10.3}  {i:>12.3}{flag}", s.r);
                }
                let mean = sim.iter().map(|s| s.r).sum::<f64>() / sim.len() as f64;
                println!("mean   {mean:>10.3}");
            }
            Ok(())
        }
    }
}

fn train(cfg: &RunConfig, data_override: Option<PathBuf>, log_updates: bool) -> Result<()> {
    let dir = resolve_data_dir(data_override, cfg.data_dir.clone());
    let train = load_split(&dir, Split::Train)?;
    let test = load_split(&dir, Split::Test)?;
    let train_imgs = limit(&train.images, cfg.train_limit);
    let test_imgs = limit(&test.images, cfg.test_limit);
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    write(&cfg.out_dir.join("run.cfg"), cfg.to_text())?;
    eprintln!(
        "training {} seed(s) on {} images, testing on {}",
        cfg.n_runs,
        train_imgs.len(),
        test_imgs.len()
    );

    let (nets, report) = if log_updates {
        let mut nets = Vec::new();
        let mut runs = Vec::new();
        for k in 0..cfg.n_runs as u64 {
            let net_cfg = colsnn::NetworkConfig {
                seed: cfg.network.seed + k,
                ..cfg.network.clone()
            };
            let path = cfg
                .out_dir
                .join(format!("seed{}.updates.csv", net_cfg.seed));
            let mut log = std::io::BufWriter::new(
                fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
            );
            writeln!(log, "image,kind,rewarded,n_punished")?;
            let mut io_err = None;
            let (net, run) = trainer::train_and_evaluate_logged(
                &net_cfg,
                train_imgs,
                test_imgs,
                cfg.shuffle,
                |i, up| {
                    if io_err.is_none() {
                        io_err = writeln!(log, "{}", up.log_line(i)).err();
                    }
                },
            )?;
            if let Some(e) = io_err {
                return Err(e).context("writing update log");
            }
            nets.push(net);
            runs.push(run);
        }
        (nets, ExperimentReport::from_runs(runs))
    } else {
        trainer::run_experiment(&cfg.network, cfg.n_runs, train_imgs, test_imgs, cfg.shuffle)?
    };

    for (net, run) in nets.iter().zip(&report.runs) {
        net.save(cfg.out_dir.join(format!("seed{}.ckpt", run.seed)))?;
    }
    write(&cfg.out_dir.join("metrics.csv"), report.to_csv())?;
    write(
        &cfg.out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    print!("{}", report.table());
    Ok(())
}

fn limit(images: &[LabeledImage], n: usize) -> &[LabeledImage] {
    if n == 0 {
        images
    } else {
        &images[..n.min(images.len())]
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(cfg.with_env_overrides())
}

fn apply_override(cfg: &mut RunConfig, kv: &str) -> Result<()> {
    let Some((k, v)) = kv.split_once('=') else {
        bail!("--set expects KEY=VALUE, got {kv:?}");
    };
    let (k, v) = (k.trim(), v.trim());
    if !config::set_network(&mut cfg.network, k, v)? {
        // non-network keys go through the file parser for validation
        let merged = format!("{}{k} = {v}\n", strip_key(&cfg.to_text(), k));
        *cfg = RunConfig::parse(&merged)?;
    }
    Ok(())
}

fn strip_key(text: &str, key: &str) -> String {
    text.lines()
        .filter(|l| l.split('=').next().map(str::trim) != Some(key))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// `--data`, then `$COLSNN_DATA_DIR` (already folded into the config by
/// `load_config`), then the config's `data_dir`, then `data/mnist`.
fn resolve_data_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_DIR))
}

fn load_split(dir: &Path, split: Split) -> Result<ImageSet> {
    ImageSet::load_dir(dir, split)
        .with_context(|| format!("loading MNIST {split:?} split from {}", dir.display()))
}

fn parse_range(text: &str, log: bool) -> Result<Range> {
    let (lo, hi) = text
        .split_once(':')
        .with_context(|| format!("range must be LO:HI, got {text:?}"))?;
    let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
    Ok(if log {
        Range::log(lo, hi)
    } else {
        Range::linear(lo, hi)
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
