use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainedModel;
use crate::{Error, Result};

pub const ARTIFACT_FORMAT: &str = "lendwise-model";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    model: T,
}

/// Writes the model as versioned JSON. Floats are written in shortest
/// round-trip form, so predictions after reloading are bit-identical.
pub fn write_model<W: Write>(m: &TrainedModel, w: W) -> Result<()> {
    let env = Envelope {
        format: ARTIFACT_FORMAT.to_string(),
        version: ARTIFACT_VERSION,
        model: m,
    };
    serde_json::to_writer_pretty(w, &env)?;
    Ok(())
}

pub fn read_model<R: Read>(r: R) -> Result<TrainedModel> {
    let env: Envelope<serde_json::Value> = serde_json::from_reader(r)?;
    if env.format != ARTIFACT_FORMAT {
        return Err(Error::Artifact(format!("unexpected format `{}`", env.format)));
    }
    if env.version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!("unsupported version {}", env.version)));
    }
    Ok(serde_json::from_value(env.model)?)
}

pub fn save_model(m: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_model(m, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(f))
}
