use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::LoadedConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

/// Where a command writes, and what it stamps on every report.
pub struct Sink {
    dir: PathBuf,
    provenance: Provenance,
    config: serde_json::Value,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    config: &'a serde_json::Value,
    result: &'a T,
}

impl Sink {
    pub fn new(dir: &Path, command: &'static str, loaded: &LoadedConfig, seed: u64, timestamp: bool) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let generated_unix = timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        });
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance: Provenance {
                tool: "tracechain",
                version: env!("CARGO_PKG_VERSION"),
                command,
                config_sha256: loaded.sha256.clone(),
                seed,
                generated_unix,
            },
            config: loaded.raw.clone(),
        })
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<fs::File>), CliError> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    }

    /// Writes `{provenance, config, result}` as pretty JSON.
    pub fn json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(name)?;
        let envelope = Envelope {
            provenance: &self.provenance,
            config: &self.config,
            result,
        };
        serde_json::to_writer_pretty(&mut w, &envelope).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn csv<F>(&self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let (path, mut w) = self.create(name)?;
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
