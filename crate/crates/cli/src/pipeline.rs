//! End-to-end orchestration: fold planning, hypothesis generation (synth
//! or external trainer), per-line voting, and report emission.
//!
//! Lines are voted in parallel; results are collected in line order and
//! all floating-point aggregation runs sequentially over that order, so
//! the report files are byte-identical across runs with the same config
//! and seed.

use std::path::PathBuf;
use std::process::Command;

use rayon::prelude::*;

use crossvote_core::evaluation::{corpus_alphabet, ensemble_report};
use crossvote_core::folds::make_fold_plan;
use crossvote_core::llocs::LineHypothesis;
use crossvote_core::synth::{simulate_ensemble, ErrorModel};
use crossvote_core::voting::vote_line;

use crate::config::{ErrorModelSpec, HypothesisSource, PipelineConfig};
use crate::corpus;
use crate::error::AppError;
use crate::Result;

#[derive(Debug)]
pub struct PipelineOutcome {
    pub out_dir: PathBuf,
    pub voted_cer: f64,
    pub n_warnings: usize,
    pub report_table: String,
}

/// Expands the configured synth model specs into one `ErrorModel` per
/// ensemble member. A single spec is replicated `count` times (default:
/// one model per fold); several specs are taken as-is.
fn resolve_synth_models(
    model_configs: &[PathBuf],
    count: Option<usize>,
    n_folds: usize,
    fallback_alphabet: &[char],
) -> Result<Vec<ErrorModel>> {
    let specs = model_configs
        .iter()
        .map(|path| ErrorModelSpec::parse(&corpus::read_to_string(path)?))
        .collect::<Result<Vec<_>>>()?;
    let expanded: Vec<&ErrorModelSpec> = if specs.len() == 1 {
        let n = count.unwrap_or(n_folds);
        if n == 0 {
            return Err(AppError::Data(
                "synth_models must be at least 1".to_string(),
            ));
        }
        vec![&specs[0]; n]
    } else {
        if let Some(n) = count {
            if n != specs.len() {
                return Err(AppError::Data(format!(
                    "synth_models = {n} disagrees with {} synth_model entries",
                    specs.len()
                )));
            }
        }
        specs.iter().collect()
    };
    expanded
        .into_iter()
        .map(|spec| spec.resolve(fallback_alphabet))
        .collect()
}

fn run_trainer(
    command: &str,
    cfg: &PipelineConfig,
    pool_lines: &[String],
    eval_lines: &[String],
) -> Result<Vec<PathBuf>> {
    let n_lines = cfg.n_lines.unwrap_or(pool_lines.len());
    let plan = make_fold_plan(n_lines, cfg.n_folds, cfg.shuffle_seed, cfg.train_extra)?;
    let mut model_dirs = Vec::with_capacity(cfg.n_folds);
    for split in &plan.splits {
        let fold_dir = cfg
            .out_dir
            .join("folds")
            .join(format!("fold{:02}", split.fold + 1));
        std::fs::create_dir_all(&fold_dir).map_err(|e| AppError::data_with_path(&fold_dir, e))?;
        let pick = |ids: &[usize]| {
            ids.iter()
                .map(|&i| pool_lines[i].clone())
                .collect::<Vec<_>>()
        };
        let train_path = fold_dir.join("train.txt");
        let test_path = fold_dir.join("test.txt");
        let eval_path = fold_dir.join("eval.txt");
        corpus::write_lines(&train_path, &pick(&split.train))?;
        corpus::write_lines(&test_path, &pick(&split.test))?;
        corpus::write_lines(&eval_path, eval_lines)?;
        let out_dir = cfg
            .out_dir
            .join("models")
            .join(format!("m{:02}", split.fold + 1));
        std::fs::create_dir_all(&out_dir).map_err(|e| AppError::data_with_path(&out_dir, e))?;

        let rendered = command
            .replace("{train}", &train_path.display().to_string())
            .replace("{test}", &test_path.display().to_string())
            .replace("{eval}", &eval_path.display().to_string())
            .replace("{out}", &out_dir.display().to_string());
        let status = Command::new("sh")
            .arg("-c")
            .arg(&rendered)
            .status()
            .map_err(|e| AppError::External(format!("cannot spawn `{rendered}`: {e}")))?;
        if !status.success() {
            return Err(AppError::External(format!(
                "fold {} command `{rendered}` exited with {status}",
                split.fold + 1
            )));
        }
        model_dirs.push(out_dir);
    }
    Ok(model_dirs)
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let eval_lines = corpus::read_text_lines(&cfg.eval_gt)?;
    corpus::validate_ground_truth(&eval_lines, "evaluation ground truth")?;
    let pool_lines = match &cfg.gt_pool {
        Some(path) => {
            let lines = corpus::read_text_lines(path)?;
            corpus::validate_ground_truth(&lines, "ground truth pool")?;
            lines
        }
        None => eval_lines.clone(),
    };
    if let Some(n) = cfg.n_lines {
        if n > pool_lines.len() {
            return Err(AppError::Data(format!(
                "n_lines = {n} exceeds the {}-line ground truth pool",
                pool_lines.len()
            )));
        }
    }

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| AppError::data_with_path(&cfg.out_dir, e))?;

    // step 1: fold plan (also emitted for the trainer to pick up)
    let n_lines = cfg.n_lines.unwrap_or(pool_lines.len());
    let plan = make_fold_plan(n_lines, cfg.n_folds, cfg.shuffle_seed, cfg.train_extra)?;
    let plan_path = cfg.out_dir.join("plan.tsv");
    std::fs::write(&plan_path, plan.render_tsv())
        .map_err(|e| AppError::data_with_path(&plan_path, e))?;

    // step 2: hypothesis corpora, one directory per model
    let model_dirs = match &cfg.source {
        HypothesisSource::Synth {
            model_configs,
            count,
        } => {
            let alphabet = corpus_alphabet(&eval_lines);
            let models = resolve_synth_models(model_configs, *count, cfg.n_folds, &alphabet)?;
            let ensemble = simulate_ensemble(&eval_lines, &models, cfg.base_seed)?;
            let mut dirs = Vec::with_capacity(ensemble.len());
            for (i, hyps) in ensemble.iter().enumerate() {
                let dir = cfg.out_dir.join("models").join(format!("m{:02}", i + 1));
                corpus::write_model_corpus(&dir, hyps)?;
                dirs.push(dir);
            }
            dirs
        }
        HypothesisSource::Trainer { command } => {
            run_trainer(command, cfg, &pool_lines, &eval_lines)?
        }
    };

    // step 3: read the corpora back and vote line by line
    let corpora: Vec<(String, Vec<LineHypothesis>)> = model_dirs
        .iter()
        .map(|dir| {
            let (model_id, hyps) = corpus::read_model_corpus(dir)?;
            if hyps.len() != eval_lines.len() {
                return Err(AppError::Data(format!(
                    "{}: {} hypothesis lines for {} evaluation lines",
                    dir.display(),
                    hyps.len(),
                    eval_lines.len()
                )));
            }
            Ok((model_id, hyps))
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<_> = (0..eval_lines.len())
        .into_par_iter()
        .map(|line| {
            let hyps: Vec<LineHypothesis> =
                corpora.iter().map(|(_, hyps)| hyps[line].clone()).collect();
            vote_line(&hyps, &cfg.vote)
        })
        .collect();

    let voted_lines: Vec<String> = results.iter().map(|r| r.text.clone()).collect();
    let mut warnings = Vec::new();
    for (line, result) in results.iter().enumerate() {
        for warning in &result.warnings {
            warnings.push(format!("line {}: {warning}", line + 1));
        }
    }
    corpus::write_lines(&cfg.out_dir.join("voted.txt"), &voted_lines)?;

    // step 4: report
    let per_model: Vec<(String, Vec<String>)> = corpora
        .iter()
        .map(|(model_id, hyps)| {
            (
                model_id.clone(),
                hyps.iter().map(|h| h.text.clone()).collect(),
            )
        })
        .collect();
    let mut report = ensemble_report(&eval_lines, &per_model, &voted_lines)?;
    report.warnings = warnings;

    let table = report.render_table();
    let report_path = cfg.out_dir.join("report.txt");
    std::fs::write(&report_path, &table).map_err(|e| AppError::data_with_path(&report_path, e))?;
    let csv_path = cfg.out_dir.join("report.csv");
    std::fs::write(&csv_path, report.render_csv())
        .map_err(|e| AppError::data_with_path(&csv_path, e))?;

    Ok(PipelineOutcome {
        out_dir: cfg.out_dir.clone(),
        voted_cer: report.voted.cer,
        n_warnings: report.warnings.len(),
        report_table: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossvote_core::voting::VoteConfig;
    use std::fs;
    use tempfile::tempdir;

    fn write(path: &std::path::Path, text: &str) {
        fs::write(path, text).unwrap();
    }

    fn synth_config(dir: &std::path::Path, model_cfg: &str) -> PipelineConfig {
        write(
            &dir.join("eval.txt"),
            "feder weiss\nherren kamen\nin dem walde\n",
        );
        write(&dir.join("model.cfg"), model_cfg);
        let text = "\
n_folds = 3
eval_gt = eval.txt
out_dir = out
synth_model = model.cfg
base_seed = 5
";
        PipelineConfig::parse(text, dir, None).unwrap()
    }

    #[test]
    fn zero_error_pipeline_reproduces_ground_truth() {
        let dir = tempdir().unwrap();
        let cfg = synth_config(
            dir.path(),
            "sub_rate = 0\nconf_correct = 1.0\nconf_noise = 0\n",
        );
        let outcome = run_pipeline(&cfg).unwrap();
        assert_eq!(outcome.voted_cer, 0.0);
        let voted = fs::read_to_string(outcome.out_dir.join("voted.txt")).unwrap();
        assert_eq!(voted, "feder weiss\nherren kamen\nin dem walde\n");
        assert!(outcome.out_dir.join("models/m03/0002.llocs").is_file());
        assert!(outcome.out_dir.join("plan.tsv").is_file());
    }

    #[test]
    fn same_seed_means_identical_reports() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let model = "sub_rate = 0.05\nins_rate = 0.01\ndel_rate = 0.01\n";
        let a = run_pipeline(&synth_config(dir_a.path(), model)).unwrap();
        let b = run_pipeline(&synth_config(dir_b.path(), model)).unwrap();
        for file in ["report.txt", "report.csv", "voted.txt", "plan.tsv"] {
            let bytes_a = fs::read(a.out_dir.join(file)).unwrap();
            let bytes_b = fs::read(b.out_dir.join(file)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn voted_lines_match_direct_vote_line_calls() {
        let dir = tempdir().unwrap();
        let cfg = synth_config(dir.path(), "sub_rate = 0.08\n");
        let outcome = run_pipeline(&cfg).unwrap();
        let voted: Vec<String> =
            corpus::read_text_lines(&outcome.out_dir.join("voted.txt")).unwrap();

        let corpora: Vec<_> = (1..=3)
            .map(|i| {
                corpus::read_model_corpus(&outcome.out_dir.join(format!("models/m{i:02}")))
                    .unwrap()
                    .1
            })
            .collect();
        for line in 0..3 {
            let hyps: Vec<LineHypothesis> = corpora.iter().map(|hyps| hyps[line].clone()).collect();
            assert_eq!(
                vote_line(&hyps, &VoteConfig::confidence()).text,
                voted[line]
            );
        }
    }

    #[test]
    fn trainer_failure_surfaces_exit_code() {
        let dir = tempdir().unwrap();
        write(&dir.path().join("eval.txt"), "some line\n");
        write(&dir.path().join("pool.txt"), "a\nb\nc\nd\n");
        let text = "\
n_folds = 2
eval_gt = eval.txt
gt_pool = pool.txt
out_dir = out
trainer_cmd = exit 7
";
        let cfg = PipelineConfig::parse(text, dir.path(), None).unwrap();
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("exit"));
    }

    #[test]
    fn trainer_hook_feeds_fold_outputs_into_voting() {
        let dir = tempdir().unwrap();
        write(&dir.path().join("eval.txt"), "ab\ncd\n");
        write(&dir.path().join("pool.txt"), "p\nq\nr\ns\n");
        // fake trainer: copy the eval lines into numbered hypothesis files
        let script = r#"n=1; while read -r line; do printf '%s\n' "$line" > "$OUT/$(printf '%04d' $n).txt"; n=$((n+1)); done < "$EVAL""#;
        write(&dir.path().join("train.sh"), script);
        let text = "\
n_folds = 2
mode = majority
eval_gt = eval.txt
gt_pool = pool.txt
out_dir = out
trainer_cmd = EVAL={eval} OUT={out} sh train.sh
";
        let mut cfg = PipelineConfig::parse(text, dir.path(), None).unwrap();
        // the template references train.sh relative to the working dir
        if let HypothesisSource::Trainer { command } = &cfg.source {
            let absolute = command.replace(
                "sh train.sh",
                &format!("sh {}", dir.path().join("train.sh").display()),
            );
            cfg.source = HypothesisSource::Trainer { command: absolute };
        }
        let outcome = run_pipeline(&cfg).unwrap();
        assert_eq!(outcome.voted_cer, 0.0);
        assert!(outcome.out_dir.join("folds/fold01/train.txt").is_file());
        assert!(outcome.out_dir.join("folds/fold02/test.txt").is_file());
    }
}
