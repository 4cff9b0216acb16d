use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedResource {
    /// File name as referenced by the entry page, e.g. `d3.v5.min.js`.
    #[serde(rename = "match")]
    pub match_name: String,
    /// Vendored copy, relative to the manifest's directory.
    pub replacement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFile {
    pub logical_name: String,
    /// Source file, relative to the manifest's directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmissionManifest {
    pub required_files: Vec<String>,
    pub entry_point: String,
    #[serde(default)]
    pub pinned_resources: Vec<PinnedResource>,
    #[serde(default)]
    pub dataset_files: Vec<DatasetFile>,
    /// Where pinned copies and datasets are looked up; the directory the
    /// manifest was loaded from.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Rejects absolute paths and any `..` component.
pub fn check_relative(p: &str) -> Result<(), HarnessError> {
    let path = Path::new(p);
    if p.is_empty() || p.contains('\\') || p.contains('\0') {
        return Err(HarnessError::PathEscape(p.to_string()));
    }
    for c in path.components() {
        match c {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(HarnessError::PathEscape(p.to_string())),
        }
    }
    Ok(())
}

impl SubmissionManifest {
    pub fn from_json(bytes: &[u8]) -> Result<Self, HarnessError> {
        let m: SubmissionManifest =
            serde_json::from_slice(bytes).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut m = Self::from_json(&bytes)?;
        m.base_dir = path.parent().map(Path::to_path_buf);
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !self.required_files.contains(&self.entry_point) {
            return Err(HarnessError::Manifest(format!(
                "entry point {:?} is not a required file",
                self.entry_point
            )));
        }
        for f in &self.required_files {
            check_relative(f)?;
        }
        for p in &self.pinned_resources {
            if p.match_name.is_empty() || p.match_name.contains('/') {
                return Err(HarnessError::Manifest(format!(
                    "pin match {:?} must be a bare file name",
                    p.match_name
                )));
            }
            check_relative(&p.replacement)?;
        }
        for d in &self.dataset_files {
            check_relative(&d.logical_name)?;
            check_relative(&d.path)?;
        }
        Ok(())
    }

    /// Path of a manifest-relative file.
    pub(crate) fn resolve(&self, rel: &str, fallback: &Path) -> PathBuf {
        self.base_dir.as_deref().unwrap_or(fallback).join(rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_point_must_be_required() {
        let e = SubmissionManifest::from_json(br#"{"required_files": ["a.js"], "entry_point": "index.html"}"#);
        assert!(matches!(e, Err(HarnessError::Manifest(_))));
    }

    #[test]
    fn escapes_rejected() {
        for bad in ["../x.html", "/etc/passwd", "a/../../b", "a\\b"] {
            assert!(check_relative(bad).is_err(), "{bad}");
        }
        for ok in ["index.html", "js/app.js", "./data.csv"] {
            assert!(check_relative(ok).is_ok(), "{ok}");
        }
        let e = SubmissionManifest::from_json(
            br#"{"required_files": ["index.html", "../../etc/passwd"], "entry_point": "index.html"}"#,
        );
        assert!(matches!(e, Err(HarnessError::PathEscape(_))));
    }
}
