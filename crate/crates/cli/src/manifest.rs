//! Run manifests: a record of one invocation, written next to its outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub input_paths: Vec<PathBuf>,
    /// Every option of the command, keyed by its long flag name.
    pub parameters: BTreeMap<String, Value>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new<A: Serialize>(
        command: &str,
        args: &A,
        input_paths: Vec<PathBuf>,
        seed: Option<u64>,
        output_dir: &Path,
    ) -> CliResult<Self> {
        let parameters = match serde_json::to_value(args) {
            Ok(Value::Object(map)) => map.into_iter().collect(),
            Ok(other) => return Err(CliError::usage(format!("unexpected parameter shape {other}"))),
            Err(e) => return Err(CliError::usage(format!("cannot record parameters: {e}"))),
        };
        Ok(RunManifest {
            command: command.to_string(),
            input_paths,
            parameters,
            seed,
            output_dir: output_dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            source: isl_core::Error::Parse {
                line: e.line() as u64,
                message: e.to_string(),
            },
        })
    }

    /// Decodes the recorded parameters back into a command's arguments.
    pub fn arguments<A: serde::de::DeserializeOwned>(&self) -> CliResult<A> {
        let map: serde_json::Map<String, Value> = self.parameters.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map)).map_err(|e| {
            CliError::Core(isl_core::Error::Schema {
                field: "parameters".into(),
                message: format!("cannot rebuild `{}` arguments: {e}", self.command),
            })
        })
    }
}
