//! Run manifest embedded in every output document: enough to reproduce the
//! run exactly (command, full configuration, seed, library version) plus
//! timestamps and output paths.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: None,
            output_paths: Vec::new(),
        }
    }

    pub fn finish(&mut self, outputs: &[String]) {
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
        self.output_paths = outputs.to_vec();
    }
}
