use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::tensor::{read_params, write_params, Scalar};

use super::config::ModelConfig;
use super::network::NeuralModel;

const FORMAT: &str = "neuralreg-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: ModelConfig,
    input_vocab: Vec<String>,
    output_vocab: Vec<String>,
}

impl<S: Scalar> NeuralModel<S> {
    /// Writes the parameter container with a JSON header holding the
    /// configuration and both vocabularies. Values are stored as f32.
    pub fn save(&self, w: &mut impl Write) -> Result<()> {
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            config: self.config().clone(),
            input_vocab: self.input_vocab().tokens().to_vec(),
            output_vocab: self.output_vocab().tokens().to_vec(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Contract(e.to_string()))?;
        write_params(w, &json, self.params())
    }

    pub fn load(r: &mut impl Read) -> Result<Self> {
        let (json, params) = read_params::<S>(r)?;
        let header: Header =
            serde_json::from_slice(&json).map_err(|e| Error::parse("model header", e.to_string()))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::parse(
                "model header",
                format!("unsupported model format {} v{}", header.format, header.version),
            ));
        }
        let input = Vocabulary::from_tokens(header.input_vocab, "model input vocabulary")?;
        let output = Vocabulary::from_tokens(header.output_vocab, "model output vocabulary")?;
        NeuralModel::from_parts(header.config, input, output, params)
    }
}
