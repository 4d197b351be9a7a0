use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::TrainedPipeline;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "eee-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    pipeline: TrainedPipeline,
}

pub fn model_to_json(pipeline: &TrainedPipeline) -> Result<String> {
    let env = Envelope {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        pipeline: pipeline.clone(),
    };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Model(format!("serializing model: {e}")))
}

pub fn model_from_json(text: &str) -> Result<TrainedPipeline> {
    let env: Envelope = serde_json::from_str(text).map_err(|e| Error::Model(format!("parsing model: {e}")))?;
    if env.format != MODEL_FORMAT || env.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported model file {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
            env.format, env.version
        )));
    }
    Ok(env.pipeline)
}

pub fn save_model(pipeline: &TrainedPipeline, path: &Path) -> Result<()> {
    fs::write(path, model_to_json(pipeline)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedPipeline> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
