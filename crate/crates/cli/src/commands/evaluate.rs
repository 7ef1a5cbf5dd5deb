use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use neuralreg::corpus::parse_template_file;
use neuralreg::eval::{evaluate_system, render_table, reports_tsv, significance_matrix, significance_tsv, EvalReport};
use neuralreg::Execution;
use serde_json::json;

use super::predict::read_predictions;
use super::{load_instances, require_inputs};
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Gold instance TSV.
    #[arg(long)]
    pub gold: PathBuf,
    /// `NAME=PATH` prediction file; repeat for several systems.
    #[arg(long = "pred", value_name = "NAME=PATH", required = true)]
    pub preds: Vec<String>,
    /// Template file, enabling text accuracy against relexicalized texts and BLEU.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Approximate-randomization iterations for BLEU comparisons.
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

const MAX_LISTED: usize = 10;

pub fn run(args: EvaluateArgs) -> Result<()> {
    let systems: Vec<(String, PathBuf)> = args
        .preds
        .iter()
        .map(|s| match s.split_once('=') {
            Some((name, path)) if !name.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
            _ => bail!("--pred expects NAME=PATH, got {s:?}"),
        })
        .collect::<Result<_>>()?;
    let mut inputs = vec![args.gold.as_path()];
    inputs.extend(systems.iter().map(|(_, p)| p.as_path()));
    if let Some(t) = &args.templates {
        inputs.push(t);
    }
    require_inputs(&inputs)?;

    let gold = load_instances(&args.gold)?;
    if gold.is_empty() {
        bail!("{} holds no instances", args.gold.display());
    }
    let texts = match &args.templates {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(parse_template_file(&text, &p.display().to_string())?)
        }
        None => None,
    };

    let mut manifest = RunManifest::start(
        "evaluate",
        json!({
            "systems": systems.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "iterations": args.iterations,
            "seed": args.seed,
        }),
    );
    for p in &inputs {
        manifest.input(p)?;
    }

    let mut evals = Vec::new();
    for (name, path) in &systems {
        let rows = read_predictions(path)?;
        let mut by_id: HashMap<&str, &str> = HashMap::new();
        for r in &rows {
            if by_id.insert(&r.id, &r.prediction).is_some() {
                bail!("{}: duplicate id {}", path.display(), r.id);
            }
        }
        let mut mismatches: Vec<String> = gold
            .iter()
            .filter(|g| !by_id.contains_key(g.id.as_str()))
            .map(|g| format!("missing prediction for {}", g.id))
            .collect();
        let gold_ids: std::collections::HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
        mismatches.extend(
            rows.iter()
                .filter(|r| !gold_ids.contains(r.id.as_str()))
                .map(|r| format!("prediction for unknown id {}", r.id)),
        );
        if !mismatches.is_empty() {
            let listed: Vec<&str> = mismatches.iter().take(MAX_LISTED).map(String::as_str).collect();
            bail!(
                "{name}: {} misaligned ids, first {}:\n  {}",
                mismatches.len(),
                listed.len(),
                listed.join("\n  ")
            );
        }
        let preds: Vec<Vec<String>> = gold
            .iter()
            .map(|g| by_id[g.id.as_str()].split_whitespace().map(String::from).collect())
            .collect();
        evals.push(evaluate_system(name, &gold, &preds, texts.as_deref())?);
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let reports: Vec<EvalReport> = evals.iter().map(|e| e.report.clone()).collect();
    let report_tsv = args.out.join("report.tsv");
    let report_txt = args.out.join("report.txt");
    let sig_tsv = args.out.join("significance.tsv");
    fs::write(&report_tsv, reports_tsv(&reports))?;
    let table = render_table(&reports);
    fs::write(&report_txt, &table)?;
    let rows = significance_matrix(&evals, args.iterations, args.seed, Execution::default())?;
    fs::write(&sig_tsv, significance_tsv(&rows))?;
    for p in [&report_tsv, &report_txt, &sig_tsv] {
        manifest.output(p)?;
    }
    manifest.finish(&args.out.join("manifest.json"))?;
    print!("{table}");
    Ok(())
}
