use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use neuralreg::baselines::FerreiraBaseline;
use neuralreg::corpus::{build_vocab, RefexInstance};
use neuralreg::model::{train, EpochRecord, ModelConfig, NeuralModel};
use neuralreg::tensor::Scalar;
use neuralreg::Execution;
use serde_json::json;

use super::{load_instances, require_inputs};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{baseline_file, ModelOverrides, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TrainSystem {
    Neural,
    Ferreira,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Model file (neural) or baseline table file (ferreira).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = TrainSystem::Neural)]
    pub system: TrainSystem,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
    /// Per-epoch log; defaults to `<out>.log.tsv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
    #[command(flatten)]
    pub model: ModelOverrides,
}

pub fn run(args: TrainArgs) -> Result<()> {
    require_inputs(&[&args.train])?;
    let train_set = load_instances(&args.train)?;
    if train_set.is_empty() {
        bail!("{} holds no instances", args.train.display());
    }
    match args.system {
        TrainSystem::Ferreira => train_baseline(&args, &train_set),
        TrainSystem::Neural => match args.precision {
            Precision::F32 => train_neural::<f32>(&args, &train_set),
            Precision::F64 => train_neural::<f64>(&args, &train_set),
        },
    }
}

fn train_baseline(args: &TrainArgs, train_set: &[RefexInstance]) -> Result<()> {
    let mut manifest = RunManifest::start("train", json!({ "system": "ferreira" }));
    manifest.input(&args.train)?;
    let model = FerreiraBaseline::train(train_set)?;
    baseline_file::save(&args.out, &model)?;
    manifest.output(&args.out)?;
    manifest.finish(&manifest_path_for(&args.out))
}

fn write_log(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{}", EpochRecord::HEADER)?;
    for r in history {
        writeln!(w, "{}", r.tsv_row())?;
    }
    Ok(())
}

fn train_neural<S: Scalar>(args: &TrainArgs, train_set: &[RefexInstance]) -> Result<()> {
    let Some(dev_path) = &args.dev else {
        bail!("--dev is required for neural training");
    };
    require_inputs(&[dev_path])?;
    let dev_set = load_instances(dev_path)?;
    if dev_set.is_empty() {
        bail!("{} holds no instances", dev_path.display());
    }
    let config = args.model.apply(ModelConfig::default())?;
    let (input, output) = build_vocab(train_set, args.min_freq)?;
    let unknown = dev_set.iter().filter(|i| input.get(&i.entity_token()).is_none()).count();
    let dev_known: Vec<RefexInstance> = dev_set
        .iter()
        .filter(|i| input.get(&i.entity_token()).is_some())
        .cloned()
        .collect();
    if dev_known.is_empty() {
        bail!("no dev instance refers to an entity seen in training");
    }

    let mut manifest = RunManifest::start(
        "train",
        json!({
            "system": "neural",
            "precision": format!("{:?}", args.precision).to_lowercase(),
            "min_freq": args.min_freq,
            "model": serde_json::to_value(&config)?,
        }),
    );
    manifest.input(&args.train)?;
    manifest.input(dev_path)?;

    let model = NeuralModel::<S>::new(config, input, output)?;
    let outcome = train(model, train_set, &dev_known, Execution::default(), |r| {
        eprintln!(
            "epoch {:3}  loss {:.4}  dev accuracy {:.4}  ({:.1}s)",
            r.epoch, r.train_loss, r.dev_accuracy, r.seconds
        );
    })?;

    let mut file = BufWriter::new(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?);
    outcome.model.save(&mut file)?;
    file.flush()?;
    drop(file);
    let log = args.log.clone().unwrap_or_else(|| {
        let mut name = args.out.file_name().unwrap_or_default().to_os_string();
        name.push(".log.tsv");
        args.out.with_file_name(name)
    });
    write_log(&log, &outcome.history)?;
    manifest.output(&args.out)?;
    manifest.diagnostic(&log);
    manifest.warn("dev_unknown_entities", unknown);
    manifest.warn("stop_reason", outcome.stop.as_str());
    manifest.warn("best_epoch", outcome.best_epoch);
    manifest.warn("best_dev_accuracy", outcome.best_dev_accuracy);
    manifest.finish(&manifest_path_for(&args.out))?;
    eprintln!(
        "stopped ({}) after {} epochs; best dev accuracy {:.4} at epoch {}",
        outcome.stop.as_str(),
        outcome.history.len(),
        outcome.best_dev_accuracy,
        outcome.best_epoch
    );
    Ok(())
}
