//! Edit distance, character error rates, improvement rates over single
//! models, and chi-square significance of error-count differences.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::Error;
use crate::Result;

/// Levenshtein distance with unit insert/delete/substitute costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    edit_distance_chars(&ac, &bc)
}

/// Two-row DP over character slices.
pub fn edit_distance_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = alloc::vec![0usize; short.len() + 1];
    for (i, &lc) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let cost = usize::from(lc != sc);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        core::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Edit distance divided by ground-truth length. Errors on empty ground
/// truth (the rate would be undefined).
pub fn compute_cer(gt: &str, pred: &str) -> Result<f64> {
    let gt_chars = gt.chars().count();
    if gt_chars == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(edit_distance(gt, pred) as f64 / gt_chars as f64)
}

/// Per-line error counts for one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineErrors {
    pub errors: usize,
    pub gt_chars: usize,
}

/// Corpus-level CER, micro-averaged: total errors over total ground-truth
/// characters, not the mean of per-line rates.
#[derive(Debug, Clone, PartialEq)]
pub struct CerReport {
    pub per_line: Vec<LineErrors>,
    pub total_errors: usize,
    pub total_chars: usize,
    pub cer: f64,
}

pub fn corpus_cer<G: AsRef<str>, P: AsRef<str>>(
    gt_lines: &[G],
    pred_lines: &[P],
) -> Result<CerReport> {
    if gt_lines.len() != pred_lines.len() {
        return Err(Error::LineCountMismatch {
            expected: gt_lines.len(),
            actual: pred_lines.len(),
        });
    }
    let mut per_line = Vec::with_capacity(gt_lines.len());
    let mut total_errors = 0usize;
    let mut total_chars = 0usize;
    for (gt, pred) in gt_lines.iter().zip(pred_lines) {
        let gt = gt.as_ref();
        let gt_chars = gt.chars().count();
        if gt_chars == 0 {
            return Err(Error::EmptyGroundTruth);
        }
        let errors = edit_distance(gt, pred.as_ref());
        per_line.push(LineErrors { errors, gt_chars });
        total_errors += errors;
        total_chars += gt_chars;
    }
    let cer = total_errors as f64 / total_chars as f64;
    Ok(CerReport {
        per_line,
        total_errors,
        total_chars,
        cer,
    })
}

/// Relative error reduction `(base - voted) / base`; requires a positive
/// base rate.
pub fn improvement_rate(base_cer: f64, voted_cer: f64) -> Result<f64> {
    if !base_cer.is_finite() || base_cer <= 0.0 {
        return Err(Error::ZeroBaseCer);
    }
    Ok((base_cer - voted_cer) / base_cer)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Chi-square test on the 2x2 table (errors vs correct characters for two
/// groups), one degree of freedom, no continuity correction. The p-value
/// uses the closed form `p = erfc(sqrt(x / 2))`.
pub fn chi_square_errors(
    err_a: usize,
    n_a: usize,
    err_b: usize,
    n_b: usize,
) -> Result<SignificanceResult> {
    if n_a == 0 || n_b == 0 {
        return Err(Error::InvalidArgument(
            "empty group in chi-square test".to_string(),
        ));
    }
    if err_a > n_a || err_b > n_b {
        return Err(Error::InvalidArgument(
            "error count exceeds trial count in chi-square test".to_string(),
        ));
    }
    let a = err_a as f64;
    let b = (n_a - err_a) as f64;
    let c = err_b as f64;
    let d = (n_b - err_b) as f64;
    let errors_margin = a + c;
    let correct_margin = b + d;
    if errors_margin == 0.0 || correct_margin == 0.0 {
        return Err(Error::DegenerateTable);
    }
    let n = (n_a + n_b) as f64;
    let diff = a * d - b * c;
    let statistic = n * diff * diff / ((a + b) * (c + d) * errors_margin * correct_margin);
    let p_value = libm::erfc(libm::sqrt(statistic / 2.0));
    Ok(SignificanceResult { statistic, p_value })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCer {
    pub model_id: String,
    pub report: CerReport,
}

/// Per-model CERs, the voted CER, improvements over the best/average/worst
/// single model, and the significance of voted-vs-best error counts.
/// Undefined values (zero bases, degenerate tables) are `None` and render
/// as `n/a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub models: Vec<ModelCer>,
    pub voted: CerReport,
    /// Index of the model with the lowest CER (first on ties).
    pub best_index: usize,
    pub improvement_best: Option<f64>,
    pub improvement_avg: Option<f64>,
    pub improvement_worst: Option<f64>,
    pub significance_vs_best: Option<SignificanceResult>,
    /// Free-form notes collected by the caller (e.g. per-line warnings);
    /// rendered at the end of the table.
    pub warnings: Vec<String>,
}

pub fn ensemble_report<G: AsRef<str>, P: AsRef<str>>(
    gt_lines: &[G],
    per_model_preds: &[(String, Vec<String>)],
    voted_preds: &[P],
) -> Result<EnsembleReport> {
    if per_model_preds.is_empty() {
        return Err(Error::InvalidArgument("no models to report on".to_string()));
    }
    let models = per_model_preds
        .iter()
        .map(|(model_id, preds)| {
            Ok(ModelCer {
                model_id: model_id.clone(),
                report: corpus_cer(gt_lines, preds)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let voted = corpus_cer(gt_lines, voted_preds)?;

    let mut best_index = 0usize;
    for (i, model) in models.iter().enumerate() {
        if model.report.cer < models[best_index].report.cer {
            best_index = i;
        }
    }
    let best = models[best_index].report.cer;
    let avg = models.iter().map(|m| m.report.cer).sum::<f64>() / models.len() as f64;
    let worst = models.iter().map(|m| m.report.cer).fold(0.0f64, f64::max);

    let improvement = |base: f64| improvement_rate(base, voted.cer).ok();
    let significance_vs_best = chi_square_errors(
        voted.total_errors,
        voted.total_chars,
        models[best_index].report.total_errors,
        models[best_index].report.total_chars,
    )
    .ok();

    Ok(EnsembleReport {
        improvement_best: improvement(best),
        improvement_avg: improvement(avg),
        improvement_worst: improvement(worst),
        best_index,
        models,
        voted,
        significance_vs_best,
        warnings: Vec::new(),
    })
}

fn fmt_percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.0}%", v * 100.0),
        None => "n/a".to_string(),
    }
}

impl EnsembleReport {
    pub fn avg_cer(&self) -> f64 {
        self.models.iter().map(|m| m.report.cer).sum::<f64>() / self.models.len() as f64
    }

    pub fn worst_index(&self) -> usize {
        let mut worst = 0usize;
        for (i, model) in self.models.iter().enumerate() {
            if model.report.cer > self.models[worst].report.cer {
                worst = i;
            }
        }
        worst
    }

    /// Plain UTF-8 table, deterministic for fixed inputs.
    pub fn render_table(&self) -> String {
        let id_width = self
            .models
            .iter()
            .map(|m| m.model_id.chars().count())
            .chain(["model".len(), "voted".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<id_width$}  {:>8}  {:>8}  {:>7}",
            "model", "errors", "chars", "CER"
        );
        for model in &self.models {
            let _ = writeln!(
                out,
                "{:<id_width$}  {:>8}  {:>8}  {:>6.2}%",
                model.model_id,
                model.report.total_errors,
                model.report.total_chars,
                model.report.cer * 100.0
            );
        }
        let _ = writeln!(
            out,
            "{:<id_width$}  {:>8}  {:>8}  {:>6.2}%",
            "voted",
            self.voted.total_errors,
            self.voted.total_chars,
            self.voted.cer * 100.0
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "improvement over best  ({}): {}",
            self.models[self.best_index].model_id,
            fmt_percent(self.improvement_best)
        );
        let _ = writeln!(
            out,
            "improvement over avg   ({:.2}%): {}",
            self.avg_cer() * 100.0,
            fmt_percent(self.improvement_avg)
        );
        let _ = writeln!(
            out,
            "improvement over worst ({}): {}",
            self.models[self.worst_index()].model_id,
            fmt_percent(self.improvement_worst)
        );
        match &self.significance_vs_best {
            Some(sig) => {
                let _ = writeln!(
                    out,
                    "chi-square voted vs best: statistic {:.4}, p {:.3e}",
                    sig.statistic, sig.p_value
                );
            }
            None => {
                let _ = writeln!(out, "chi-square voted vs best: n/a");
            }
        }
        let _ = writeln!(out, "significance counted over characters");
        if !self.warnings.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "warnings ({}):", self.warnings.len());
            for warning in &self.warnings {
                let _ = writeln!(out, "  {warning}");
            }
        }
        out
    }

    /// Machine-readable CSV: one row per model, then the voted row carrying
    /// the improvement and significance columns.
    pub fn render_csv(&self) -> String {
        let mut out = String::from(
            "model_id,cer,improvement_best,improvement_avg,improvement_worst,chi2,p\n",
        );
        for model in &self.models {
            let _ = writeln!(
                out,
                "{},{:.6},n/a,n/a,n/a,n/a,n/a",
                csv_field(&model.model_id),
                model.report.cer
            );
        }
        let fmt_opt = |v: Option<f64>| match v {
            Some(v) => format!("{v:.6}"),
            None => "n/a".to_string(),
        };
        let (chi2, p) = match &self.significance_vs_best {
            Some(sig) => (
                format!("{:.6}", sig.statistic),
                format!("{:.3e}", sig.p_value),
            ),
            None => ("n/a".to_string(), "n/a".to_string()),
        };
        let _ = writeln!(
            out,
            "voted,{:.6},{},{},{},{},{}",
            self.voted.cer,
            fmt_opt(self.improvement_best),
            fmt_opt(self.improvement_avg),
            fmt_opt(self.improvement_worst),
            chi2,
            p
        );
        out
    }
}

fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        let mut escaped = String::from("\"");
        for c in value.chars() {
            if c == '"' {
                escaped.push('"');
            }
            escaped.push(c);
        }
        escaped.push('"');
        escaped
    } else {
        value.to_string()
    }
}

/// Character set observed in a corpus; handy as a default model alphabet.
pub fn corpus_alphabet<S: AsRef<str>>(lines: &[S]) -> Vec<char> {
    let set: BTreeSet<char> = lines.iter().flat_map(|l| l.as_ref().chars()).collect();
    set.into_iter().collect()
}
