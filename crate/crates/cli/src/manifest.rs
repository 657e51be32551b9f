//! `manifest.json`: one record per command run in an output directory.
//!
//! A later run of the same command replaces the earlier record, so the
//! manifest always describes the files currently on disk.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigDoc;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<ArtifactEntry>,
    /// The effective config, after flag and environment overrides.
    pub config: ConfigDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn load(dir: &Path) -> CliResult<Option<RunManifest>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn upsert(&mut self, record: RunRecord) {
        self.runs.retain(|r| r.command != record.command);
        self.runs.push(record);
    }

    pub fn find(&self, path: &str) -> Option<&ArtifactEntry> {
        self.runs.iter().flat_map(|r| &r.artifacts).find(|a| a.path == path)
    }

    pub fn artifact_paths(&self) -> impl Iterator<Item = &str> {
        self.runs.iter().flat_map(|r| &r.artifacts).map(|a| a.path.as_str())
    }
}

/// Collects timings, warnings and written files while a command runs.
pub struct Recorder {
    dir: PathBuf,
    started_at: String,
    stage_start: Option<(String, Instant)>,
    stages: Vec<StageTiming>,
    warnings: Vec<String>,
    artifacts: Vec<String>,
}

impl Recorder {
    pub fn new(dir: &Path) -> CliResult<Recorder> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Recorder {
            dir: dir.to_path_buf(),
            started_at: now(),
            stage_start: None,
            stages: Vec::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stage(&mut self, name: &str) {
        self.end_stage();
        self.stage_start = Some((name.to_string(), Instant::now()));
    }

    fn end_stage(&mut self) {
        if let Some((name, t)) = self.stage_start.take() {
            self.stages.push(StageTiming {
                name,
                seconds: t.elapsed().as_secs_f64(),
            });
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Writes `contents` to `rel` (creating parent directories) and records it.
    pub fn write(&mut self, rel: &str, contents: &[u8]) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        if !self.artifacts.iter().any(|a| a == rel) {
            self.artifacts.push(rel.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Closes the run and merges its record into the directory's manifest.
    pub fn finish(mut self, config: &ConfigDoc) -> CliResult<RunRecord> {
        self.end_stage();
        let mut artifacts = Vec::with_capacity(self.artifacts.len());
        for rel in &self.artifacts {
            let path = self.dir.join(rel);
            artifacts.push(ArtifactEntry {
                path: rel.clone(),
                bytes: fs::metadata(&path)?.len(),
                sha256: sha256_file(&path)?,
            });
        }
        let record = RunRecord {
            command: config.command.name().to_string(),
            config_hash: config.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.seed(),
            started_at: self.started_at,
            finished_at: now(),
            stages: self.stages,
            warnings: self.warnings,
            artifacts,
            config: config.clone(),
        };
        let mut manifest = RunManifest::load(&self.dir)?.unwrap_or_default();
        manifest.upsert(record.clone());
        manifest.save(&self.dir)?;
        Ok(record)
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
