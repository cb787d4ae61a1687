//! File formats the commands read and write.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rxn_hypergraph::ranker::CandidateQuery;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_json_line<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn to_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    for item in items {
        write_json_line(&mut buf, item)?;
    }
    Ok(String::from_utf8(buf)?)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// One `CandidateQuery` object per line.
pub fn parse_candidates(text: &str) -> Result<Vec<CandidateQuery>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let q: CandidateQuery = serde_json::from_str(l).with_context(|| format!("line {line}"))?;
        if q.candidates.is_empty() {
            bail!("line {line}: query {:?} has no candidates", q.query_id);
        }
        if let Some(t) = q.true_index.filter(|&t| t >= q.candidates.len()) {
            bail!("line {line}: true_index {t} is outside {} candidates", q.candidates.len());
        }
        out.push(q);
    }
    if out.is_empty() {
        bail!("no candidate sets");
    }
    Ok(out)
}

/// `better<TAB>worse` reaction pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let Some((a, b)) = l.split_once('\t') else {
            bail!("line {line}: expected two tab-separated reactions");
        };
        let (a, b) = (a.trim(), b.trim());
        if a.is_empty() || b.is_empty() || b.contains('\t') {
            bail!("line {line}: expected two tab-separated reactions");
        }
        out.push((a.to_string(), b.to_string()));
    }
    if out.is_empty() {
        bail!("no reaction pairs");
    }
    Ok(out)
}

/// Candidate files are JSON lines; anything else is read as a pair table.
pub fn looks_like_candidates(text: &str) -> bool {
    content_lines(text).next().is_some_and(|(_, l)| l.trim_start().starts_with('{'))
}
