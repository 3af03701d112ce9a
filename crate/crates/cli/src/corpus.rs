//! Reading and writing line corpora.
//!
//! A hypothesis corpus is either a plain text file (one line per ground
//! truth line, no confidences) or a directory of numbered per-line files:
//! `0001.txt` holds the recognized text of line 1 and `0001.llocs`, when
//! present, the matching extended llocs records.

use std::fs;
use std::path::{Path, PathBuf};

use crossvote_core::llocs::{parse_llocs, write_llocs, LineHypothesis};

use crate::error::AppError;
use crate::Result;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::data_with_path(path, e))
}

fn split_lines(text: &str) -> Vec<String> {
    let mut lines: Vec<String> = text
        .split('\n')
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_string())
        .collect();
    if lines.last().is_some_and(String::is_empty) {
        lines.pop();
    }
    lines
}

/// Numbered `*.txt` files of a corpus directory, ordered by their numeric
/// stem.
fn numbered_txt_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| AppError::data_with_path(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| AppError::data_with_path(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let number: usize = stem.parse().map_err(|_| {
            AppError::Data(format!(
                "{}: expected numbered line files like 0001.txt",
                path.display()
            ))
        })?;
        files.push((number, path));
    }
    if files.is_empty() {
        return Err(AppError::Data(format!(
            "{}: no numbered .txt files",
            dir.display()
        )));
    }
    files.sort();
    Ok(files)
}

/// One line of text per ground-truth line, from a plain file or a corpus
/// directory.
pub fn read_text_lines(path: &Path) -> Result<Vec<String>> {
    if path.is_dir() {
        numbered_txt_files(path)?
            .into_iter()
            .map(|(_, file)| Ok(first_line(&read_to_string(&file)?)))
            .collect()
    } else {
        Ok(split_lines(&read_to_string(path)?))
    }
}

fn first_line(text: &str) -> String {
    split_lines(text).into_iter().next().unwrap_or_default()
}

pub fn source_label(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("input")
        .to_string()
}

/// Loads a hypothesis corpus. Directory corpora pick up `NNNN.llocs`
/// files when present; the llocs text must match the `.txt` line.
pub fn read_model_corpus(path: &Path) -> Result<(String, Vec<LineHypothesis>)> {
    let model_id = source_label(path);
    if !path.is_dir() {
        let hyps = split_lines(&read_to_string(path)?)
            .into_iter()
            .map(|text| LineHypothesis::text_only(model_id.clone(), text))
            .collect();
        return Ok((model_id, hyps));
    }
    let mut hyps = Vec::new();
    for (_, txt_path) in numbered_txt_files(path)? {
        let text = first_line(&read_to_string(&txt_path)?);
        let llocs_path = txt_path.with_extension("llocs");
        let hyp = if llocs_path.is_file() {
            let mut hyp = parse_llocs(&read_to_string(&llocs_path)?)
                .map_err(|e| AppError::data_with_path(&llocs_path, e))?;
            if hyp.text != text {
                return Err(AppError::Data(format!(
                    "{}: llocs text `{}` disagrees with `{}`",
                    llocs_path.display(),
                    hyp.text,
                    text
                )));
            }
            hyp.model_id = model_id.clone();
            hyp
        } else {
            LineHypothesis::text_only(model_id.clone(), text)
        };
        hyps.push(hyp);
    }
    Ok((model_id, hyps))
}

/// Writes a corpus directory: `NNNN.txt` always, `NNNN.llocs` for
/// hypotheses that carry llocs.
pub fn write_model_corpus(dir: &Path, hyps: &[LineHypothesis]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::data_with_path(dir, e))?;
    for (i, hyp) in hyps.iter().enumerate() {
        let stem = format!("{:04}", i + 1);
        let txt_path = dir.join(format!("{stem}.txt"));
        fs::write(&txt_path, format!("{}\n", hyp.text))
            .map_err(|e| AppError::data_with_path(&txt_path, e))?;
        if hyp.has_llocs() {
            let llocs_path = dir.join(format!("{stem}.llocs"));
            fs::write(&llocs_path, write_llocs(hyp))
                .map_err(|e| AppError::data_with_path(&llocs_path, e))?;
        }
    }
    Ok(())
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = String::new();
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| AppError::data_with_path(path, e))
}

/// Ground truth must not contain empty lines (their CER is undefined).
pub fn validate_ground_truth(lines: &[String], what: &str) -> Result<()> {
    for (i, line) in lines.iter().enumerate() {
        if line.is_empty() {
            return Err(AppError::Data(format!("{what}: line {} is empty", i + 1)));
        }
    }
    if lines.is_empty() {
        return Err(AppError::Data(format!("{what}: no lines")));
    }
    Ok(())
}
