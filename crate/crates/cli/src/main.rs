use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crossvote_cli::config::PipelineConfig;
use crossvote_cli::corpus;
use crossvote_cli::pipeline::run_pipeline;
use crossvote_cli::{AppError, Result};
use crossvote_core::alignment::{align_many, extract_disagreements, render_alignment};
use crossvote_core::evaluation::{corpus_alphabet, ensemble_report};
use crossvote_core::folds::make_fold_plan;
use crossvote_core::llocs::LineHypothesis;
use crossvote_core::synth::simulate_ensemble;
use crossvote_core::voting::{vote_line, VoteConfig, VoteMode};

#[derive(Parser)]
#[command(
    name = "crossvote",
    version,
    about = "Combine OCR line hypotheses by alignment and confidence voting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, ValueEnum)]
enum ModeArg {
    Majority,
    #[default]
    Confidence,
}

impl From<ModeArg> for VoteMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Majority => VoteMode::Majority,
            ModeArg::Confidence => VoteMode::Confidence,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan N folds over ground-truth lines and print the line/fold table
    Folds {
        /// Number of ground-truth lines
        #[arg(long)]
        lines: usize,
        /// Number of folds
        #[arg(long)]
        folds: usize,
        /// Shuffle lines with this seed before blocking into folds
        #[arg(long)]
        seed: Option<u64>,
        /// Move this many test lines into each split's training side
        #[arg(long, default_value_t = 0)]
        train_extra: usize,
        /// Write the plan here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Align hypothesis sources and print the disagreement regions
    Align {
        /// Two or more text files or corpus directories, one per model
        #[arg(required = true, num_args = 1..)]
        sources: Vec<PathBuf>,
    },
    /// Combine hypothesis sources into a single voted output
    Vote {
        #[arg(long, value_enum, default_value_t)]
        mode: ModeArg,
        /// Alternatives count only with confidence strictly above this
        #[arg(long, default_value_t = 0.01)]
        alt_threshold: f64,
        /// Ignore alternatives, sum only recognized characters
        #[arg(long)]
        rec_only: bool,
        /// Write voted lines here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Two or more text files or corpus directories, one per model
        #[arg(required = true, num_args = 1..)]
        sources: Vec<PathBuf>,
    },
    /// Score model and voted predictions against ground truth
    Eval {
        /// Ground-truth lines (file or corpus directory)
        #[arg(long)]
        gt: PathBuf,
        /// Voted prediction lines
        #[arg(long)]
        voted: PathBuf,
        /// Also write the machine-readable report here
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Per-model prediction sources
        #[arg(required = true, num_args = 1..)]
        models: Vec<PathBuf>,
    },
    /// Generate synthetic model corpora from ground truth
    Simulate {
        /// Ground-truth lines (file or corpus directory)
        #[arg(long)]
        gt: PathBuf,
        /// Output directory; one subdirectory per model is created
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of models when a single --model-config is replicated
        #[arg(long)]
        models: Option<usize>,
        /// Error-model config file; repeat for distinct models
        #[arg(long, required = true)]
        model_config: Vec<PathBuf>,
    },
    /// Run the whole pipeline (folds, models, voting, report) from a config
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn vote_config(mode: ModeArg, alt_threshold: f64, rec_only: bool) -> Result<VoteConfig> {
    if !(0.0..1.0).contains(&alt_threshold) {
        return Err(AppError::Usage(
            "--alt-threshold must lie in [0, 1)".to_string(),
        ));
    }
    Ok(VoteConfig {
        mode: mode.into(),
        alt_threshold,
        rec_only,
    })
}

fn read_parallel_corpora(sources: &[PathBuf]) -> Result<Vec<(String, Vec<LineHypothesis>)>> {
    let corpora = sources
        .iter()
        .map(|path| corpus::read_model_corpus(path))
        .collect::<Result<Vec<_>>>()?;
    let n_lines = corpora[0].1.len();
    for ((_, hyps), path) in corpora.iter().zip(sources) {
        if hyps.len() != n_lines {
            return Err(AppError::Data(format!(
                "{}: {} lines, but {} has {}",
                path.display(),
                hyps.len(),
                sources[0].display(),
                n_lines
            )));
        }
    }
    Ok(corpora)
}

fn cmd_folds(
    lines: usize,
    folds: usize,
    seed: Option<u64>,
    train_extra: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let plan = make_fold_plan(lines, folds, seed, train_extra)?;
    let tsv = plan.render_tsv();
    match out {
        Some(path) => std::fs::write(&path, tsv).map_err(|e| AppError::data_with_path(&path, e))?,
        None => print!("{tsv}"),
    }
    let split = &plan.splits[0];
    eprintln!(
        "{} folds over {} lines; each split trains on {} lines and tests on {}",
        folds,
        lines,
        split.train.len(),
        split.test.len()
    );
    Ok(())
}

fn cmd_align(sources: Vec<PathBuf>) -> Result<()> {
    let corpora = read_parallel_corpora(&sources)?;
    let n_lines = corpora[0].1.len();
    for line in 0..n_lines {
        let hyps: Vec<LineHypothesis> =
            corpora.iter().map(|(_, hyps)| hyps[line].clone()).collect();
        let set = align_many(&hyps);
        let regions = extract_disagreements(&set, &hyps);
        if n_lines > 1 {
            if line > 0 {
                println!();
            }
            println!("# line {}", line + 1);
        }
        println!("{}", render_alignment(&set, &regions));
    }
    Ok(())
}

fn cmd_vote(
    mode: ModeArg,
    alt_threshold: f64,
    rec_only: bool,
    out: Option<PathBuf>,
    sources: Vec<PathBuf>,
) -> Result<()> {
    let cfg = vote_config(mode, alt_threshold, rec_only)?;
    let corpora = read_parallel_corpora(&sources)?;
    let n_lines = corpora[0].1.len();
    let mut voted = Vec::with_capacity(n_lines);
    for line in 0..n_lines {
        let hyps: Vec<LineHypothesis> =
            corpora.iter().map(|(_, hyps)| hyps[line].clone()).collect();
        let result = vote_line(&hyps, &cfg);
        for warning in &result.warnings {
            eprintln!("line {}: {warning}", line + 1);
        }
        voted.push(result.text);
    }
    match out {
        Some(path) => corpus::write_lines(&path, &voted)?,
        None => {
            for line in &voted {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn cmd_eval(gt: PathBuf, voted: PathBuf, csv: Option<PathBuf>, models: Vec<PathBuf>) -> Result<()> {
    let gt_lines = corpus::read_text_lines(&gt)?;
    corpus::validate_ground_truth(&gt_lines, "ground truth")?;
    let voted_lines = corpus::read_text_lines(&voted)?;
    let per_model = models
        .iter()
        .map(|path| Ok((corpus::source_label(path), corpus::read_text_lines(path)?)))
        .collect::<Result<Vec<_>>>()?;
    let report = ensemble_report(&gt_lines, &per_model, &voted_lines)?;
    print!("{}", report.render_table());
    if let Some(path) = csv {
        std::fs::write(&path, report.render_csv())
            .map_err(|e| AppError::data_with_path(&path, e))?;
    }
    Ok(())
}

fn cmd_simulate(
    gt: PathBuf,
    out: PathBuf,
    seed: u64,
    models: Option<usize>,
    model_config: Vec<PathBuf>,
) -> Result<()> {
    let gt_lines = corpus::read_text_lines(&gt)?;
    corpus::validate_ground_truth(&gt_lines, "ground truth")?;
    let alphabet = corpus_alphabet(&gt_lines);
    let specs = model_config
        .iter()
        .map(|path| crossvote_cli::config::ErrorModelSpec::parse(&corpus::read_to_string(path)?))
        .collect::<Result<Vec<_>>>()?;
    let expanded: Vec<&crossvote_cli::config::ErrorModelSpec> = if specs.len() == 1 {
        let n = models.unwrap_or(1);
        if n == 0 {
            return Err(AppError::Usage("--models must be at least 1".to_string()));
        }
        vec![&specs[0]; n]
    } else {
        if let Some(n) = models {
            if n != specs.len() {
                return Err(AppError::Usage(format!(
                    "--models {n} disagrees with {} --model-config flags",
                    specs.len()
                )));
            }
        }
        specs.iter().collect()
    };
    let resolved = expanded
        .into_iter()
        .map(|spec| spec.resolve(&alphabet))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = simulate_ensemble(&gt_lines, &resolved, seed)?;
    for (i, hyps) in ensemble.iter().enumerate() {
        corpus::write_model_corpus(&out.join(format!("m{:02}", i + 1)), hyps)?;
    }
    eprintln!(
        "wrote {} model corpora under {}",
        ensemble.len(),
        out.display()
    );
    Ok(())
}

fn cmd_pipeline(config: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let started = Instant::now();
    let text = corpus::read_to_string(&config)?;
    let base_dir = config.parent().unwrap_or_else(|| std::path::Path::new("."));
    let cfg = PipelineConfig::parse(&text, base_dir, out)?;
    let outcome = run_pipeline(&cfg)?;
    print!("{}", outcome.report_table);
    println!("report: {}", outcome.out_dir.join("report.txt").display());
    if outcome.n_warnings > 0 {
        eprintln!("{} warnings recorded in the report", outcome.n_warnings);
    }
    eprintln!("pipeline finished in {:.2?}", started.elapsed());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Folds {
            lines,
            folds,
            seed,
            train_extra,
            out,
        } => cmd_folds(lines, folds, seed, train_extra, out),
        Command::Align { sources } => cmd_align(sources),
        Command::Vote {
            mode,
            alt_threshold,
            rec_only,
            out,
            sources,
        } => cmd_vote(mode, alt_threshold, rec_only, out, sources),
        Command::Eval {
            gt,
            voted,
            csv,
            models,
        } => cmd_eval(gt, voted, csv, models),
        Command::Simulate {
            gt,
            out,
            seed,
            models,
            model_config,
        } => cmd_simulate(gt, out, seed, models, model_config),
        Command::Pipeline { config, out } => cmd_pipeline(config, out),
    }
}

fn main() {
    // die quietly when stdout is a closed pipe (e.g. `crossvote align ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are not usage errors
            if err.use_stderr() {
                eprint!("{err}");
                std::process::exit(1);
            }
            print!("{err}");
            std::process::exit(0);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{err}");
        std::process::exit(err.exit_code());
    }
}
