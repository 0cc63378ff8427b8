//! Run manifests: one JSON sidecar per output file, carrying the command,
//! its configuration snapshot, wall-clock timestamps and the produced
//! paths. Timestamps live only here so the result files themselves stay
//! byte-identical across reruns.

use serde_json::Value;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

pub struct ManifestWriter {
    command: String,
    config_snapshot: Value,
    started_unix: f64,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl ManifestWriter {
    pub fn start(command: &str, config_snapshot: Value) -> Self {
        ManifestWriter {
            command: command.to_string(),
            config_snapshot,
            started_unix: now_unix(),
        }
    }

    /// Write the manifest next to the first produced file; commands that
    /// streamed to stdout produced no files and get no manifest.
    pub fn finish(&mut self, outputs: Vec<PathBuf>, status: &str) -> Result<(), super::CliError> {
        let Some(first) = outputs.first() else {
            return Ok(());
        };
        let doc = serde_json::json!({
            "schema": 1,
            "command": self.command,
            "config_snapshot": self.config_snapshot,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "started_unix": self.started_unix,
            "finished_unix": now_unix(),
            "outputs": outputs,
            "status": status,
        });
        let path = first.with_extension(format!(
            "{}manifest.json",
            first
                .extension()
                .map(|e| format!("{}.", e.to_string_lossy()))
                .unwrap_or_default()
        ));
        std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n").map_err(|e| {
            super::CliError::Usage(format!("cannot write manifest {}: {e}", path.display()))
        })?;
        Ok(())
    }
}
