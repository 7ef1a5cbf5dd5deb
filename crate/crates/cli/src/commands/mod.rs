pub mod evaluate;
pub mod predict;
pub mod prepare;
pub mod train;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use neuralreg::corpus::{read_instances, RefexInstance};
use neuralreg::model::ModelConfig;

use crate::ModelOverrides;

pub fn require_inputs(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}

pub fn load_instances(path: &Path) -> Result<Vec<RefexInstance>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_instances(BufReader::new(file), &path.display().to_string())?)
}

impl ModelOverrides {
    /// Applies file, then `--set`, then explicit flags on top of `base`.
    pub fn apply(&self, mut base: ModelConfig) -> Result<ModelConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            base.apply_text(&text)?;
        }
        for pair in &self.set {
            let Some((k, v)) = pair.split_once('=') else {
                bail!("--set expects key=value, got {pair:?}");
            };
            base.set(k.trim(), v.trim())?;
        }
        if let Some(v) = &self.variant {
            base.set("variant", v)?;
        }
        if let Some(b) = self.beam {
            base.beam_size = b;
        }
        if let Some(d) = self.dropout {
            base.dropout = d;
        }
        if let Some(s) = self.seed {
            base.seed = s;
        }
        base.validate()?;
        Ok(base)
    }
}
