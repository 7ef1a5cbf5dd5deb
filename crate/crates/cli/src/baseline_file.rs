use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use neuralreg::baselines::{FerreiraBaseline, FormModel, VariantTable};

const FORMS_SECTION: &str = "[forms]";
const VARIANTS_SECTION: &str = "[variants]";

/// Writes the form counts and the variant table as two text sections.
pub fn save(path: &Path, model: &FerreiraBaseline) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{FORMS_SECTION}")?;
    model.forms.write(&mut buf)?;
    writeln!(buf, "{VARIANTS_SECTION}")?;
    model.variants.write(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn load(path: &Path) -> Result<FerreiraBaseline> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(rest) = text.strip_prefix(&format!("{FORMS_SECTION}\n")) else {
        bail!("{}: not a baseline file", path.display());
    };
    let Some((forms, variants)) = rest.split_once(&format!("{VARIANTS_SECTION}\n")) else {
        bail!("{}: missing {VARIANTS_SECTION} section", path.display());
    };
    let source = path.display().to_string();
    Ok(FerreiraBaseline {
        forms: FormModel::read(forms.as_bytes(), &source)?,
        variants: VariantTable::read(variants.as_bytes(), &source)?,
        mode: None,
    })
}
