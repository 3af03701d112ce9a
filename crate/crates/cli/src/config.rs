//! Plain-text key-value configuration files.
//!
//! Syntax: one `key = value` pair per line, `#` starts a comment line,
//! blank lines are ignored. Values may be wrapped in double quotes to
//! preserve leading or trailing spaces (e.g. an alphabet ending in a
//! space). Keys are unique unless documented as repeatable.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crossvote_core::synth::ErrorModel;
use crossvote_core::voting::{VoteConfig, VoteMode};

use crate::error::AppError;
use crate::Result;

pub struct KeyValues {
    pairs: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(AppError::Data(format!(
                    "config line {}: expected `key = value`",
                    i + 1
                )));
            };
            pairs.push((key.trim().to_string(), unquote(value.trim())));
        }
        Ok(Self { pairs })
    }

    /// The value of a non-repeatable key; duplicate occurrences are an error.
    pub fn get(&self, key: &str) -> Result<Option<&str>> {
        let mut found = None;
        for (k, v) in &self.pairs {
            if k == key {
                if found.is_some() {
                    return Err(AppError::Data(format!("duplicate config key `{key}`")));
                }
                found = Some(v.as_str());
            }
        }
        Ok(found)
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }
}

fn unquote(value: &str) -> String {
    if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
        value[1..value.len() - 1].to_string()
    } else {
        value.to_string()
    }
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| AppError::Data(format!("config key `{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(AppError::Data(format!(
            "config key `{key}`: expected a boolean, got `{other}`"
        ))),
    }
}

/// An error model as written in a config file; the alphabet may be left
/// out and filled in from the ground truth later.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModelSpec {
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
    pub conf_correct: f64,
    pub conf_noise: f64,
    pub alphabet: Option<Vec<char>>,
    pub confusions: BTreeMap<char, Vec<(char, f64)>>,
}

impl ErrorModelSpec {
    /// Recognized keys: `sub_rate`, `ins_rate`, `del_rate`, `conf_correct`,
    /// `conf_noise`, `alphabet`, and `confuse.<char> = target:weight,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        let mut spec = ErrorModelSpec {
            sub_rate: 0.0,
            ins_rate: 0.0,
            del_rate: 0.0,
            conf_correct: 0.97,
            conf_noise: 0.02,
            alphabet: None,
            confusions: BTreeMap::new(),
        };
        for key in kv.keys() {
            match key {
                "sub_rate" | "ins_rate" | "del_rate" | "conf_correct" | "conf_noise"
                | "alphabet" => {}
                other if other.starts_with("confuse.") => {}
                other => {
                    return Err(AppError::Data(format!("unknown error-model key `{other}`")));
                }
            }
        }
        if let Some(v) = kv.get("sub_rate")? {
            spec.sub_rate = parse_number("sub_rate", v)?;
        }
        if let Some(v) = kv.get("ins_rate")? {
            spec.ins_rate = parse_number("ins_rate", v)?;
        }
        if let Some(v) = kv.get("del_rate")? {
            spec.del_rate = parse_number("del_rate", v)?;
        }
        if let Some(v) = kv.get("conf_correct")? {
            spec.conf_correct = parse_number("conf_correct", v)?;
        }
        if let Some(v) = kv.get("conf_noise")? {
            spec.conf_noise = parse_number("conf_noise", v)?;
        }
        if let Some(v) = kv.get("alphabet")? {
            spec.alphabet = Some(v.chars().collect());
        }
        for (key, value) in kv.pairs.iter().filter(|(k, _)| k.starts_with("confuse.")) {
            let source = key.trim_start_matches("confuse.");
            let mut chars = source.chars();
            let (Some(source), None) = (chars.next(), chars.next()) else {
                return Err(AppError::Data(format!(
                    "confusion key `{key}` must name exactly one character"
                )));
            };
            let mut targets = Vec::new();
            for item in value.split(',') {
                let Some((target, weight)) = item.split_once(':') else {
                    return Err(AppError::Data(format!(
                        "confusion `{key}`: expected `target:weight`, got `{item}`"
                    )));
                };
                let mut tchars = target.chars();
                let (Some(target), None) = (tchars.next(), tchars.next()) else {
                    return Err(AppError::Data(format!(
                        "confusion `{key}`: target must be one character"
                    )));
                };
                targets.push((target, parse_number::<f64>(key, weight)?));
            }
            spec.confusions.insert(source, targets);
        }
        Ok(spec)
    }

    /// Fills in the alphabet and validates the resulting model. A derived
    /// alphabet (ground-truth characters) is extended with the confusion
    /// targets; an explicit `alphabet` key is taken as-is.
    pub fn resolve(&self, fallback_alphabet: &[char]) -> Result<ErrorModel> {
        let alphabet = match &self.alphabet {
            Some(alphabet) => alphabet.clone(),
            None => {
                let mut set: std::collections::BTreeSet<char> =
                    fallback_alphabet.iter().copied().collect();
                set.extend(
                    self.confusions
                        .values()
                        .flatten()
                        .map(|&(target, _)| target),
                );
                set.into_iter().collect()
            }
        };
        let model = ErrorModel {
            sub_rate: self.sub_rate,
            ins_rate: self.ins_rate,
            del_rate: self.del_rate,
            confusions: self.confusions.clone(),
            conf_correct: self.conf_correct,
            conf_noise: self.conf_noise,
            alphabet,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Where the pipeline gets its N hypothesis corpora from.
#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisSource {
    /// Simulated models; one spec per model, or one spec replicated
    /// `count` times.
    Synth {
        model_configs: Vec<PathBuf>,
        count: Option<usize>,
    },
    /// External command template run once per fold with `{train}`,
    /// `{test}`, `{eval}` and `{out}` substituted.
    Trainer { command: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub n_folds: usize,
    pub n_lines: Option<usize>,
    pub vote: VoteConfig,
    pub base_seed: u64,
    pub shuffle_seed: Option<u64>,
    pub train_extra: usize,
    pub out_dir: PathBuf,
    pub eval_gt: PathBuf,
    pub gt_pool: Option<PathBuf>,
    pub source: HypothesisSource,
}

const PIPELINE_KEYS: &[&str] = &[
    "n_folds",
    "n_lines",
    "mode",
    "alt_threshold",
    "rec_only",
    "base_seed",
    "shuffle_seed",
    "train_extra",
    "out_dir",
    "eval_gt",
    "gt_pool",
    "synth_model",
    "synth_models",
    "trainer_cmd",
];

pub fn parse_vote_mode(value: &str) -> Result<VoteMode> {
    match value {
        "majority" => Ok(VoteMode::Majority),
        "confidence" => Ok(VoteMode::Confidence),
        other => Err(AppError::Data(format!(
            "unknown vote mode `{other}` (expected `majority` or `confidence`)"
        ))),
    }
}

impl PipelineConfig {
    /// Parses a pipeline config; relative paths resolve against `base_dir`
    /// (normally the config file's directory). `out_override` wins over the
    /// `out_dir` key.
    pub fn parse(text: &str, base_dir: &Path, out_override: Option<PathBuf>) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        for key in kv.keys() {
            if !PIPELINE_KEYS.contains(&key) {
                return Err(AppError::Data(format!(
                    "unknown pipeline config key `{key}`"
                )));
            }
        }
        let require = |key: &str| -> Result<&str> {
            kv.get(key)?
                .ok_or_else(|| AppError::Data(format!("missing config key `{key}`")))
        };
        let resolve = |value: &str| -> PathBuf {
            let path = PathBuf::from(value);
            if path.is_absolute() {
                path
            } else {
                base_dir.join(path)
            }
        };

        let n_folds = parse_number::<usize>("n_folds", require("n_folds")?)?;
        if n_folds < 2 {
            return Err(AppError::Data("n_folds must be at least 2".to_string()));
        }
        let mut vote = VoteConfig::confidence();
        if let Some(v) = kv.get("mode")? {
            vote.mode = parse_vote_mode(v)?;
        }
        if let Some(v) = kv.get("alt_threshold")? {
            vote.alt_threshold = parse_number("alt_threshold", v)?;
            if !(0.0..1.0).contains(&vote.alt_threshold) {
                return Err(AppError::Data(
                    "alt_threshold must lie in [0, 1)".to_string(),
                ));
            }
        }
        if let Some(v) = kv.get("rec_only")? {
            vote.rec_only = parse_bool("rec_only", v)?;
        }

        let synth_models = kv.get_all("synth_model");
        let trainer_cmd = kv.get("trainer_cmd")?;
        let source = match (synth_models.is_empty(), trainer_cmd) {
            (false, None) => HypothesisSource::Synth {
                model_configs: synth_models.iter().map(|v| resolve(v)).collect(),
                count: kv
                    .get("synth_models")?
                    .map(|v| parse_number::<usize>("synth_models", v))
                    .transpose()?,
            },
            (true, Some(cmd)) => HypothesisSource::Trainer {
                command: cmd.to_string(),
            },
            (true, None) => {
                return Err(AppError::Data(
                    "config needs either `synth_model` or `trainer_cmd`".to_string(),
                ))
            }
            (false, Some(_)) => {
                return Err(AppError::Data(
                    "`synth_model` and `trainer_cmd` are mutually exclusive".to_string(),
                ))
            }
        };

        let out_dir = match out_override {
            Some(path) => path,
            None => resolve(require("out_dir")?),
        };

        Ok(PipelineConfig {
            n_folds,
            n_lines: kv
                .get("n_lines")?
                .map(|v| parse_number::<usize>("n_lines", v))
                .transpose()?,
            vote,
            base_seed: kv
                .get("base_seed")?
                .map(|v| parse_number::<u64>("base_seed", v))
                .transpose()?
                .unwrap_or(0),
            shuffle_seed: kv
                .get("shuffle_seed")?
                .map(|v| parse_number::<u64>("shuffle_seed", v))
                .transpose()?,
            train_extra: kv
                .get("train_extra")?
                .map(|v| parse_number::<usize>("train_extra", v))
                .transpose()?
                .unwrap_or(0),
            out_dir,
            eval_gt: resolve(require("eval_gt")?),
            gt_pool: kv.get("gt_pool")?.map(resolve),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values_with_comments_and_quotes() {
        let kv = KeyValues::parse("# note\n a = 1 \n\nb = \"two words \"\n").unwrap();
        assert_eq!(kv.get("a").unwrap(), Some("1"));
        assert_eq!(kv.get("b").unwrap(), Some("two words "));
        assert_eq!(kv.get("c").unwrap(), None);
    }

    #[test]
    fn duplicate_unique_key_is_an_error() {
        let kv = KeyValues::parse("a = 1\na = 2\n").unwrap();
        assert!(kv.get("a").is_err());
        assert_eq!(kv.get_all("a"), vec!["1", "2"]);
    }

    #[test]
    fn missing_equals_is_an_error() {
        assert!(KeyValues::parse("just words\n").is_err());
    }

    #[test]
    fn parses_error_model_spec() {
        let text = "\
sub_rate = 0.03
conf_correct = 0.95
alphabet = \"abco \"
confuse.e = c:0.7,o:0.3
";
        let spec = ErrorModelSpec::parse(text).unwrap();
        assert_eq!(spec.sub_rate, 0.03);
        assert_eq!(spec.conf_correct, 0.95);
        assert_eq!(spec.alphabet, Some(vec!['a', 'b', 'c', 'o', ' ']));
        assert_eq!(spec.confusions[&'e'], vec![('c', 0.7), ('o', 0.3)]);
        let model = spec.resolve(&['x']).unwrap();
        assert_eq!(model.alphabet, vec!['a', 'b', 'c', 'o', ' ']);

        // an explicit alphabet must already contain every confusion target
        let err = ErrorModelSpec::parse("alphabet = ab\nconfuse.a = c:1.0\n")
            .unwrap()
            .resolve(&['x'])
            .unwrap_err();
        assert!(err.to_string().contains("not in the alphabet"));

        // a derived alphabet picks up the targets
        let spec2 = ErrorModelSpec::parse("confuse.e = c:1.0\n").unwrap();
        let model = spec2.resolve(&['a', 'b']).unwrap();
        assert_eq!(model.alphabet, vec!['a', 'b', 'c']);
    }

    #[test]
    fn unknown_model_key_is_rejected() {
        assert!(ErrorModelSpec::parse("sub_rat = 0.03\n").is_err());
    }

    #[test]
    fn parses_pipeline_config() {
        let text = "\
n_folds = 5
mode = majority
alt_threshold = 0.02
eval_gt = eval.txt
out_dir = out
synth_model = model.cfg
synth_models = 5
base_seed = 7
";
        let cfg = PipelineConfig::parse(text, Path::new("/base"), None).unwrap();
        assert_eq!(cfg.n_folds, 5);
        assert_eq!(cfg.vote.mode, VoteMode::Majority);
        assert_eq!(cfg.vote.alt_threshold, 0.02);
        assert_eq!(cfg.eval_gt, PathBuf::from("/base/eval.txt"));
        assert_eq!(cfg.out_dir, PathBuf::from("/base/out"));
        assert_eq!(cfg.base_seed, 7);
        match cfg.source {
            HypothesisSource::Synth {
                ref model_configs,
                count,
            } => {
                assert_eq!(model_configs, &[PathBuf::from("/base/model.cfg")]);
                assert_eq!(count, Some(5));
            }
            _ => panic!("expected synth source"),
        }
    }

    #[test]
    fn pipeline_config_needs_exactly_one_source() {
        let base = Path::new(".");
        let neither = "n_folds = 2\neval_gt = e\nout_dir = o\n";
        assert!(PipelineConfig::parse(neither, base, None).is_err());
        let both = "n_folds = 2\neval_gt = e\nout_dir = o\nsynth_model = m\ntrainer_cmd = x\n";
        assert!(PipelineConfig::parse(both, base, None).is_err());
        let trainer = "n_folds = 2\neval_gt = e\nout_dir = o\ntrainer_cmd = run {train} {out}\n";
        let cfg = PipelineConfig::parse(trainer, base, None).unwrap();
        assert!(matches!(cfg.source, HypothesisSource::Trainer { .. }));
    }

    #[test]
    fn out_override_wins() {
        let text = "n_folds = 2\neval_gt = e\nout_dir = o\nsynth_model = m\n";
        let cfg =
            PipelineConfig::parse(text, Path::new("."), Some(PathBuf::from("/tmp/other"))).unwrap();
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/other"));
    }
}
