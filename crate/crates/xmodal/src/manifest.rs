//! JSON-lines manifests and the examples they point to.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xmodal_core::corpus::ManifestRecord;
use xmodal_core::training::Example;

use crate::cmtf;
use crate::error::{Failure, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    id: String,
    #[serde(default)]
    transcript: String,
    #[serde(default)]
    article_body: String,
    #[serde(default)]
    summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding_path: Option<String>,
}

impl From<Line> for ManifestRecord {
    fn from(l: Line) -> Self {
        ManifestRecord {
            id: l.id,
            transcript: l.transcript,
            article_body: l.article_body,
            summary: l.summary,
            feature_path: l.feature_path,
            embedding_path: l.embedding_path,
        }
    }
}

impl From<&ManifestRecord> for Line {
    fn from(r: &ManifestRecord) -> Self {
        Line {
            id: r.id.clone(),
            transcript: r.transcript.clone(),
            article_body: r.article_body.clone(),
            summary: r.summary.clone(),
            feature_path: r.feature_path.clone(),
            embedding_path: r.embedding_path.clone(),
        }
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::from(e).context(path.display()))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| (n + 1, l.to_string()))
        .collect())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    read_lines(path)?
        .into_iter()
        .map(|(n, line)| {
            serde_json::from_str::<Line>(&line)
                .map(ManifestRecord::from)
                .map_err(|e| Failure::data(format!("{}:{n}: {e}", path.display())))
        })
        .collect()
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &Line::from(r))?;
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Failure::from(e).context(path.display()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Hypothesis {
    id: String,
    text: String,
}

/// ASR hypotheses as JSON lines of `{"id": .., "text": ..}`.
pub fn read_hypotheses(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in read_lines(path)? {
        let h: Hypothesis = serde_json::from_str(&line)
            .map_err(|e| Failure::data(format!("{}:{n}: {e}", path.display())))?;
        if out.insert(h.id.clone(), h.text).is_some() {
            return Err(Failure::data(format!(
                "{}:{n}: duplicate id {}",
                path.display(),
                h.id
            )));
        }
    }
    Ok(out)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Summary tokens for the joint stage, stored as whitespace-separated
/// vocabulary indices in the `summary` field.
pub fn parse_tokens(summary: &str) -> Result<Vec<usize>> {
    summary
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Failure::data(format!("token `{t}` is not an index")))
        })
        .collect()
}

/// Loads features and target embeddings for every record. Relative paths are
/// taken from the manifest's directory.
pub fn load_examples(path: &Path, with_tokens: bool) -> Result<Vec<Example>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let records = read_manifest(path)?;
    xmodal_core::corpus::check_unique_ids(&records)?;
    records
        .into_iter()
        .map(|r| {
            let need = |p: &Option<String>, what: &str| {
                p.as_deref().map(|p| resolve(base, p)).ok_or_else(|| {
                    Failure::data(format!("{}: record {} has no {what}", path.display(), r.id))
                })
            };
            let features = cmtf::read_matrix(&need(&r.feature_path, "feature_path")?)?;
            let targets = cmtf::read_matrix(&need(&r.embedding_path, "embedding_path")?)?;
            let tokens = if with_tokens {
                parse_tokens(&r.summary).map_err(|e| e.context(&r.id))?
            } else {
                Vec::new()
            };
            Ok(Example {
                id: r.id,
                features,
                targets,
                tokens,
            })
        })
        .collect()
}
