use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use neuralreg::corpus::{
    build_corpus, build_vocab, form_distribution, parse_template_file, split_dataset, write_instances, RefexInstance,
};
use serde_json::json;

use super::require_inputs;
use crate::manifest::RunManifest;

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// Template file: triples, tag map, template and text per entry.
    #[arg(long)]
    pub templates: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Train, dev and test fractions of the texts.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Minimum training frequency for vocabulary entries.
    #[arg(long, default_value_t = 1)]
    pub min_freq: usize,
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad --ratios {s:?}"))?;
    match parts.as_slice() {
        [a, b, c] => Ok((*a, *b, *c)),
        _ => bail!("--ratios needs three comma-separated values"),
    }
}

fn write_tsv(path: &Path, instances: &[RefexInstance]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_instances(&mut w, instances)?;
    Ok(())
}

fn stats_table(parts: &[(&str, &[RefexInstance])]) -> String {
    let mut s = String::from("split\tform\tcount\tpercent\n");
    for (name, insts) in parts {
        for (form, count, pct) in form_distribution(insts) {
            let _ = writeln!(s, "{name}\t{form}\t{count}\t{pct:.2}");
        }
    }
    s
}

pub fn run(args: PrepareArgs) -> Result<()> {
    require_inputs(&[&args.templates])?;
    let ratios = parse_ratios(&args.ratios)?;
    let text = fs::read_to_string(&args.templates).with_context(|| format!("reading {}", args.templates.display()))?;
    let texts = parse_template_file(&text, &args.templates.display().to_string())?;
    if texts.is_empty() {
        bail!("{} contains no texts", args.templates.display());
    }
    let corpus = build_corpus(&texts);
    if corpus.instances.is_empty() {
        bail!("no referring expressions could be extracted");
    }
    let split = split_dataset(&corpus.instances, ratios, args.seed)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut manifest = RunManifest::start(
        "prepare",
        json!({ "ratios": [ratios.0, ratios.1, ratios.2], "seed": args.seed, "min_freq": args.min_freq }),
    );
    manifest.input(&args.templates)?;
    let out = |name: &str| args.out.join(name);
    let mut written = Vec::new();
    for (name, insts) in [("train.tsv", &split.train), ("dev.tsv", &split.dev), ("test.tsv", &split.test)] {
        write_tsv(&out(name), insts)?;
        written.push(out(name));
    }
    fs::write(out("split.tsv"), split.manifest())?;
    written.push(out("split.tsv"));
    let all: Vec<RefexInstance> = corpus.instances.clone();
    let stats = stats_table(&[
        ("all", &all),
        ("train", &split.train),
        ("dev", &split.dev),
        ("test", &split.test),
    ]);
    fs::write(out("stats.tsv"), stats)?;
    written.push(out("stats.tsv"));
    if !split.train.is_empty() {
        let (input, output) = build_vocab(&split.train, args.min_freq)?;
        let mut buf = Vec::new();
        input.write(&mut buf)?;
        fs::write(out("input_vocab.txt"), &buf)?;
        buf.clear();
        output.write(&mut buf)?;
        fs::write(out("output_vocab.txt"), &buf)?;
        written.extend([out("input_vocab.txt"), out("output_vocab.txt")]);
    }
    let mut failures = String::from("text_id\terror\n");
    for (id, err) in &corpus.failures {
        let _ = writeln!(failures, "{id}\t{}", err.to_string().replace(['\t', '\n'], " "));
    }
    fs::write(out("failures.tsv"), failures)?;
    written.push(out("failures.tsv"));
    for p in &written {
        manifest.output(p)?;
    }
    manifest.warn("alignment_failures", corpus.failures.len());
    manifest.finish(&out("manifest.json"))?;

    eprintln!(
        "prepared {} instances from {} texts: train {}, dev {}, test {}",
        corpus.instances.len(),
        texts.len() - corpus.failures.len(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );
    if !corpus.failures.is_empty() {
        for (id, err) in &corpus.failures {
            eprintln!("alignment failure in {id}: {err}");
        }
        bail!("{} of {} texts could not be aligned", corpus.failures.len(), texts.len());
    }
    Ok(())
}
