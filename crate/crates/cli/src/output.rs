//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lcmp::Result;

pub const MANIFEST: &str = "manifest.json";

/// Files written by one command, in write order.
pub struct Run {
    dir: PathBuf,
    outputs: Vec<(String, String)>,
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    /// Writes `manifest.json`; `extra` entries are merged into the top level.
    pub fn finish(self, command: &str, flags: &BTreeMap<String, String>, seed: u64, extra: Value) -> Result<()> {
        let outputs: Vec<Value> = self.outputs.iter().map(|(p, h)| json!({ "path": p, "sha256": h })).collect();
        let mut manifest = json!({
            "command": command,
            "flags": flags,
            "seed": seed,
            "outputs": outputs,
        });
        if let (Value::Object(m), Value::Object(e)) = (&mut manifest, extra) {
            m.extend(e);
        }
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(())
    }
}
