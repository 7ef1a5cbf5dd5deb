use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use neuralreg::baselines::only_names;
use neuralreg::corpus::RefexInstance;
use neuralreg::model::NeuralModel;
use neuralreg::par::map_indexed;
use neuralreg::tensor::Scalar;
use neuralreg::Execution;
use serde_json::json;

use super::{load_instances, require_inputs};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::{baseline_file, Precision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PredictSystem {
    Neural,
    Onlynames,
    Ferreira,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long, value_enum, default_value_t = PredictSystem::Neural)]
    pub system: PredictSystem,
    /// Model file (neural) or baseline file (ferreira).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Beam size; defaults to the one stored with the model.
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
    /// Sample baseline forms from the posterior with this seed instead of argmax.
    #[arg(long)]
    pub sample_seed: Option<u64>,
}

/// One row of a predictions file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictionRow {
    pub id: String,
    pub entity: String,
    pub prediction: String,
    pub feature_source: String,
}

pub const PREDICTION_HEADER: &str = "id\tentity\tprediction\tfeature_source";

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "{PREDICTION_HEADER}")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}\t{}", r.id, r.entity, r.prediction, r.feature_source)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if n == 0 {
            if line != PREDICTION_HEADER {
                bail!("{}: expected header {PREDICTION_HEADER:?}", path.display());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, entity, prediction, source] = cols.as_slice() else {
            bail!("{}:{}: expected 4 columns", path.display(), n + 1);
        };
        rows.push(PredictionRow {
            id: id.to_string(),
            entity: entity.to_string(),
            prediction: prediction.to_string(),
            feature_source: source.to_string(),
        });
    }
    Ok(rows)
}

fn row(inst: &RefexInstance, prediction: String, source: &str) -> PredictionRow {
    PredictionRow {
        id: inst.id.clone(),
        entity: inst.entity.clone(),
        prediction,
        feature_source: source.to_string(),
    }
}

pub fn run(args: PredictArgs) -> Result<()> {
    require_inputs(&[&args.instances])?;
    if args.system != PredictSystem::Onlynames {
        let Some(model) = &args.model else {
            bail!("--model is required for --system {:?}", args.system);
        };
        require_inputs(&[model])?;
    }
    let instances = load_instances(&args.instances)?;
    let mut manifest = RunManifest::start(
        "predict",
        json!({
            "system": format!("{:?}", args.system).to_lowercase(),
            "beam": args.beam,
            "precision": format!("{:?}", args.precision).to_lowercase(),
            "sample_seed": args.sample_seed,
        }),
    );
    manifest.input(&args.instances)?;
    if let Some(m) = &args.model {
        manifest.input(m)?;
    }

    let rows = match args.system {
        PredictSystem::Onlynames => instances.iter().map(|i| row(i, only_names(&i.entity), "-")).collect(),
        PredictSystem::Ferreira => {
            let mut model = baseline_file::load(args.model.as_deref().expect("checked above"))?;
            if let Some(seed) = args.sample_seed {
                model = model.sampling(seed);
            }
            instances
                .iter()
                .enumerate()
                .map(|(k, i)| {
                    let p = model.predict(i, k);
                    row(i, p.refex, p.features.as_str())
                })
                .collect()
        }
        PredictSystem::Neural => {
            let path = args.model.as_deref().expect("checked above");
            let (rows, fallbacks) = match args.precision {
                Precision::F32 => predict_neural::<f32>(path, &instances, args.beam)?,
                Precision::F64 => predict_neural::<f64>(path, &instances, args.beam)?,
            };
            manifest.warn("unknown_entity_fallbacks", fallbacks);
            if fallbacks > 0 {
                eprintln!("warning: {fallbacks} instances had unknown entities and used the name baseline");
            }
            rows
        }
    };
    write_predictions(&args.out, &rows)?;
    manifest.output(&args.out)?;
    manifest.finish(&manifest_path_for(&args.out))?;
    eprintln!("wrote {} predictions to {}", rows.len(), args.out.display());
    Ok(())
}

fn predict_neural<S: Scalar>(
    path: &Path,
    instances: &[RefexInstance],
    beam: Option<usize>,
) -> Result<(Vec<PredictionRow>, usize)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut model = NeuralModel::<S>::load(&mut BufReader::new(file))?;
    if let Some(b) = beam {
        model.config_mut().beam_size = b;
        model.config().validate()?;
    }
    let beam = model.config().beam_size;
    let outputs = map_indexed(Execution::default(), instances, |_, inst| {
        if model.input_vocab().get(&inst.entity_token()).is_none() {
            return Ok(None);
        }
        model.beam_search(inst, beam).map(Some)
    });
    let mut rows = Vec::with_capacity(instances.len());
    let mut fallbacks = 0;
    for (inst, out) in instances.iter().zip(outputs) {
        match out? {
            Some(tokens) => rows.push(row(inst, tokens.join(" "), "-")),
            None => {
                fallbacks += 1;
                rows.push(row(inst, only_names(&inst.entity), "-"));
            }
        }
    }
    Ok((rows, fallbacks))
}
