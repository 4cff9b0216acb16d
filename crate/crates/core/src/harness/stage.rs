use std::fs;
use std::path::{Component, Path, PathBuf};

use regex::{Captures, Regex};

use super::{check_relative, HarnessError, SubmissionManifest};

/// A sandbox copy of a submission, ready to serve.
#[derive(Debug)]
pub struct StagedSite {
    pub root_dir: PathBuf,
    pub entry_point: String,
    /// Set by [`super::serve`].
    pub base_url: Option<String>,
    /// `(original reference, replacement)` for every rewritten reference.
    pub applied_rewrites: Vec<(String, String)>,
    _dir: tempfile::TempDir,
}

impl StagedSite {
    /// URL of the entry page once served.
    pub fn entry_url(&self) -> Option<String> {
        self.base_url.as_ref().map(|b| format!("{b}{}", self.entry_point))
    }
}

fn io(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn attr_regex() -> Regex {
    Regex::new(r#"(?i)\b(src|href)(\s*=\s*)("([^"]*)"|'([^']*)')"#).expect("static regex")
}

/// Strips `?query` and `#fragment`.
fn strip_suffix(reference: &str) -> &str {
    let end = reference.find(['?', '#']).unwrap_or(reference.len());
    &reference[..end]
}

fn has_scheme(reference: &str) -> bool {
    reference.starts_with("//")
        || reference
            .split_once(':')
            .is_some_and(|(s, _)| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c)))
}

/// Whether a page-relative reference stays inside the site root when
/// resolved from `page_dir`.
fn stays_inside(page_dir: &Path, reference: &str) -> bool {
    let path = strip_suffix(reference);
    if path.starts_with('/') {
        // root-relative: resolved against the server root, never above it
        return !path.split('/').any(|c| c == "..") || stays_inside(Path::new(""), path.trim_start_matches('/'));
    }
    let mut depth: i64 = page_dir.components().count() as i64;
    for seg in path.split('/') {
        match seg {
            ".." => depth -= 1,
            "" | "." => {}
            _ => depth += 1,
        }
        if depth < 0 {
            return false;
        }
    }
    true
}

fn copy_file(src: &Path, dst: &Path) -> Result<(), HarnessError> {
    if let Some(parent) = dst.parent() {
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
    }
    fs::copy(src, dst).map_err(|e| io(src, e))?;
    Ok(())
}

/// Copies the manifest's files into a fresh sandbox directory, rewrites
/// references to pinned libraries in the entry page, and adds datasets
/// under their logical names.
pub fn stage_submission(dir: &Path, manifest: &SubmissionManifest) -> Result<StagedSite, HarnessError> {
    manifest.validate()?;
    let root = dir.canonicalize().map_err(|e| io(dir, e))?;

    let mut missing = Vec::new();
    for rel in &manifest.required_files {
        let p = root.join(rel);
        match p.canonicalize() {
            Ok(c) if !c.starts_with(&root) => return Err(HarnessError::PathEscape(rel.clone())),
            Ok(c) if c.is_file() => {}
            _ => missing.push(rel.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(HarnessError::MissingFiles(missing));
    }

    let tmp = tempfile::Builder::new()
        .prefix("vizgrade-site-")
        .tempdir()
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    let out = tmp.path().to_path_buf();
    for rel in &manifest.required_files {
        copy_file(&root.join(rel), &out.join(rel))?;
    }

    let entry_path = out.join(&manifest.entry_point);
    let page = fs::read_to_string(&entry_path).map_err(|e| io(&entry_path, e))?;
    let page_dir = Path::new(&manifest.entry_point)
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let page_dir: PathBuf = page_dir
        .components()
        .filter(|c| matches!(c, Component::Normal(_)))
        .collect();
    let re = attr_regex();
    for caps in re.captures_iter(&page) {
        let value = caps.get(4).or_else(|| caps.get(5)).map_or("", |m| m.as_str());
        if !has_scheme(value) && !stays_inside(&page_dir, value) {
            return Err(HarnessError::PathEscape(value.to_string()));
        }
    }

    let mut rewrites = Vec::new();
    let mut vendored = Vec::new();
    let rewritten = re.replace_all(&page, |caps: &Captures<'_>| {
        let whole = caps[0].to_string();
        let value = caps.get(4).or_else(|| caps.get(5)).map_or("", |m| m.as_str());
        let name = strip_suffix(value).rsplit('/').next().unwrap_or_default();
        let Some(pin) = manifest.pinned_resources.iter().find(|p| p.match_name == name) else {
            return whole;
        };
        let file = Path::new(&pin.replacement)
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| pin.match_name.clone());
        let up = "../".repeat(page_dir.components().count());
        let replacement = format!("{up}vendor/{file}");
        rewrites.push((value.to_string(), replacement.clone()));
        vendored.push((pin.replacement.clone(), file));
        let quote = if caps.get(4).is_some() { '"' } else { '\'' };
        format!("{}{}{quote}{replacement}{quote}", &caps[1], &caps[2])
    });
    if !rewrites.is_empty() {
        fs::write(&entry_path, rewritten.as_bytes()).map_err(|e| io(&entry_path, e))?;
    }
    for (src, file) in vendored {
        check_relative(&file)?;
        copy_file(&manifest.resolve(&src, &root), &out.join("vendor").join(&file))?;
    }
    for d in &manifest.dataset_files {
        let src = manifest.resolve(&d.path, &root);
        if !src.is_file() {
            return Err(HarnessError::MissingFiles(vec![d.path.clone()]));
        }
        copy_file(&src, &out.join(&d.logical_name))?;
    }

    Ok(StagedSite {
        root_dir: out,
        entry_point: manifest.entry_point.clone(),
        base_url: None,
        applied_rewrites: rewrites,
        _dir: tmp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_checks() {
        assert!(stays_inside(Path::new(""), "js/app.js"));
        assert!(stays_inside(Path::new("sub"), "../data.csv"));
        assert!(!stays_inside(Path::new(""), "../../etc/passwd"));
        assert!(!stays_inside(Path::new("sub"), "../../x"));
        assert!(!stays_inside(Path::new(""), "/../x"));
        assert!(stays_inside(Path::new(""), "/lib/d3.js"));
        assert!(has_scheme("https://d3js.org/d3.v5.min.js"));
        assert!(has_scheme("//cdn/x.js"));
        assert!(!has_scheme("d3.v5.min.js"));
    }
}
