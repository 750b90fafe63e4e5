//! Output directory with checksummed CSV/JSON files and a manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Collects written files and their checksums.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    config: Value,
    written: Vec<(String, String)>,
}

impl OutputDir {
    /// Creates `root` if needed. `config` is embedded in every file.
    pub fn create(root: &Path, config: Value) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            config,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(path)
    }

    /// Comma-separated, LF line endings. The first line is a `#` comment carrying the
    /// version and the resolved config, then the header row.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut text = String::new();
        writeln!(text, "# metasep {} config={}", env!("CARGO_PKG_VERSION"), self.config).expect("string write");
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    /// Pretty-printed JSON document with a `config` field added at the top level.
    pub fn write_json(&mut self, name: &str, mut body: Value) -> Result<PathBuf> {
        if let Value::Object(m) = &mut body {
            m.insert("config".into(), self.config.clone());
            m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        }
        let mut text = serde_json::to_string_pretty(&body)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes `manifest.json` and returns every output path, manifest last.
    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        let outputs: Vec<Value> = self
            .written
            .iter()
            .map(|(name, sum)| json!({ "file": name, "sha256": sum }))
            .collect();
        let manifest = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "outputs": outputs,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.path("manifest.json");
        std::fs::write(&path, text.as_bytes()).map_err(|e| Error::io(&path, e))?;
        let mut paths: Vec<PathBuf> = self.written.iter().map(|(n, _)| self.root.join(n)).collect();
        paths.push(path);
        self.written.clear();
        Ok(paths)
    }
}

/// Shortest round-trip decimal form; non-finite values print as `inf`, `-inf`, `NaN`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), json!({"seed": 1})).unwrap();
        out.write_csv("t.csv", &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        let paths = out.finish().unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# metasep ") && lines[0].contains("\"seed\":1"));
        assert_eq!(&lines[1..], &["a,b", "1,2"]);
        assert!(!text.contains('\r'));
        let manifest: Value = serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        let sum = hex::encode(Sha256::digest(text.as_bytes()));
        assert_eq!(manifest["outputs"][0]["sha256"], sum);
    }
}
