//! Simulates imperfect OCR models over known ground truth, emitting text
//! plus extended llocs with controllable error rates. Stands in for real
//! trained models so the whole pipeline can be exercised end to end.
//!
//! Unlike a real engine, which reports alternatives at nearby pixel
//! positions so their confidences can sum past 1.0, the simulator
//! normalizes each character's distribution at a single position: top-1
//! confidence plus all alternatives sum to exactly 1.0. When a character
//! is substituted, the truth is kept as a strong alternative, which is
//! the signal confidence voting feeds on.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::llocs::{Alternative, LineHypothesis, LlocsEntry};
use crate::Result;

/// Parameters of one simulated model.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    pub sub_rate: f64,
    pub ins_rate: f64,
    pub del_rate: f64,
    /// Weighted substitute characters per source character; characters
    /// without an entry substitute uniformly over the alphabet.
    pub confusions: BTreeMap<char, Vec<(char, f64)>>,
    /// Mean confidence assigned to correctly kept characters.
    pub conf_correct: f64,
    /// Spread applied to confidences and to the truth-alternative share.
    pub conf_noise: f64,
    pub alphabet: Vec<char>,
}

/// Top-1 confidence band for substituted characters: a degraded glyph is
/// read with visibly lower confidence than a clean one.
const SUB_CONF_LO: f64 = 0.55;
const SUB_CONF_SPAN: f64 = 0.30;

/// Pixel geometry of the synthetic line: consecutive fixed-width boxes.
const BOX_STRIDE: u32 = 12;
const BOX_WIDTH: u32 = 10;

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("sub_rate", self.sub_rate),
            ("ins_rate", self.ins_rate),
            ("del_rate", self.del_rate),
        ] {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::InvalidModel(alloc::format!("{name} must be >= 0")));
            }
        }
        if self.sub_rate + self.ins_rate + self.del_rate >= 1.0 {
            return Err(Error::InvalidModel(
                "error rates must sum below 1".to_string(),
            ));
        }
        if !(self.conf_correct > 0.0 && self.conf_correct <= 1.0) {
            return Err(Error::InvalidModel(
                "conf_correct must lie in (0, 1]".to_string(),
            ));
        }
        if !(self.conf_noise.is_finite() && self.conf_noise >= 0.0) {
            return Err(Error::InvalidModel("conf_noise must be >= 0".to_string()));
        }
        if self.alphabet.is_empty() {
            return Err(Error::InvalidModel(
                "alphabet must not be empty".to_string(),
            ));
        }
        for (&source, targets) in &self.confusions {
            for &(target, weight) in targets {
                if target == source {
                    return Err(Error::InvalidModel(
                        "confusion target equals its source character".to_string(),
                    ));
                }
                if !self.alphabet.contains(&target) {
                    return Err(Error::InvalidModel(alloc::format!(
                        "confusion target `{target}` is not in the alphabet"
                    )));
                }
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(Error::InvalidModel(
                        "confusion weights must be > 0".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn confusion_draw(model: &ErrorModel, source: char, rng: &mut ChaCha8Rng) -> char {
    if let Some(targets) = model.confusions.get(&source) {
        let total: f64 = targets.iter().map(|&(_, w)| w).sum();
        let mut u = rng.random::<f64>() * total;
        for &(target, weight) in targets {
            u -= weight;
            if u < 0.0 {
                return target;
            }
        }
        return targets.last().expect("validated non-empty").0;
    }
    let candidates: Vec<char> = model
        .alphabet
        .iter()
        .copied()
        .filter(|&c| c != source)
        .collect();
    if candidates.is_empty() {
        return source;
    }
    candidates[rng.random_range(0..candidates.len())]
}

/// Builds one emitted character's entry. The per-entry distribution
/// (top-1 plus alternatives) sums to 1.0; when `truth` is given it is
/// placed among the alternatives with a strong share of the remainder.
fn emit(
    model: &ErrorModel,
    top: char,
    truth: Option<char>,
    position: usize,
    rng: &mut ChaCha8Rng,
) -> LlocsEntry {
    let mut conf = if truth.is_some() {
        SUB_CONF_LO + SUB_CONF_SPAN * rng.random::<f64>()
    } else {
        let jitter = model.conf_noise * (2.0 * rng.random::<f64>() - 1.0);
        (model.conf_correct + jitter).clamp(1e-6, 1.0)
    };

    let mut alternatives: Vec<Alternative> = Vec::new();
    let pool = 1.0 - conf;
    if pool > 1e-9 {
        let mut rem = pool;
        let mut used = alloc::vec![top];
        if let Some(truth) = truth {
            let spread = model.conf_noise.min(0.45);
            let frac = 0.95 - spread * rng.random::<f64>();
            let share = rem * frac;
            alternatives.push(Alternative {
                ch: truth,
                conf: share,
            });
            rem -= share;
            used.push(truth);
        }
        let extras = rng.random_range(1..=2usize);
        for k in 0..extras {
            if rem <= 1e-12 {
                break;
            }
            let mut candidate = None;
            for _ in 0..8 {
                let pick = model.alphabet[rng.random_range(0..model.alphabet.len())];
                if !used.contains(&pick) {
                    candidate = Some(pick);
                    break;
                }
            }
            let Some(pick) = candidate else { break };
            let share = if k + 1 == extras {
                rem
            } else {
                rem * (0.5 + 0.4 * rng.random::<f64>())
            };
            alternatives.push(Alternative {
                ch: pick,
                conf: share,
            });
            rem -= share;
            used.push(pick);
        }
        if rem > 1e-12 {
            // alphabet exhausted: attach the leftover somewhere so the
            // distribution still sums to one
            match alternatives.first_mut() {
                Some(first) => first.conf += rem,
                None => conf += rem,
            }
        }
    }
    alternatives.sort_by(|a, b| {
        b.conf
            .partial_cmp(&a.conf)
            .expect("finite confidence")
            .then(a.ch.cmp(&b.ch))
    });

    let x_start = position as u32 * BOX_STRIDE;
    LlocsEntry {
        ch: top,
        x_start,
        x_end: x_start + BOX_WIDTH,
        conf,
        alternatives,
    }
}

/// Runs the noisy channel over one ground-truth line. Fully deterministic
/// given `(gt, model, seed)`.
pub fn simulate_model_line(gt: &str, model: &ErrorModel, seed: u64) -> Result<LineHypothesis> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries: Vec<LlocsEntry> = Vec::with_capacity(gt.len());
    for c in gt.chars() {
        let draw = rng.random::<f64>();
        if draw < model.del_rate {
            // character dropped
        } else if draw < model.del_rate + model.sub_rate {
            let wrong = confusion_draw(model, c, &mut rng);
            let truth = if wrong == c { None } else { Some(c) };
            entries.push(emit(model, wrong, truth, entries.len(), &mut rng));
        } else {
            entries.push(emit(model, c, None, entries.len(), &mut rng));
        }
        if rng.random::<f64>() < model.ins_rate {
            let ghost = model.alphabet[rng.random_range(0..model.alphabet.len())];
            entries.push(emit(model, ghost, None, entries.len(), &mut rng));
        }
    }
    LineHypothesis::from_entries("", entries)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn derive_seed(base: u64, model_index: usize, line_index: usize) -> u64 {
    let mut seed = splitmix64(base);
    seed = splitmix64(seed ^ (model_index as u64 + 1));
    splitmix64(seed ^ (line_index as u64 + 1))
}

/// Simulates every model over the whole corpus. Model `i` on line `j`
/// uses a seed derived from `(base_seed, i, j)`, so errors are independent
/// across models and the output is reproducible bit for bit. Hypotheses
/// get model ids `m01`, `m02`, ...
pub fn simulate_ensemble<S: AsRef<str>>(
    gt_lines: &[S],
    models: &[ErrorModel],
    base_seed: u64,
) -> Result<Vec<Vec<LineHypothesis>>> {
    if models.is_empty() {
        return Err(Error::InvalidModel("no models to simulate".to_string()));
    }
    models
        .iter()
        .enumerate()
        .map(|(i, model)| {
            gt_lines
                .iter()
                .enumerate()
                .map(|(j, line)| {
                    let mut hyp =
                        simulate_model_line(line.as_ref(), model, derive_seed(base_seed, i, j))?;
                    hyp.model_id = alloc::format!("m{:02}", i + 1);
                    Ok(hyp)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::corpus_cer;
    use alloc::string::String;
    use alloc::vec;

    fn base_model() -> ErrorModel {
        ErrorModel {
            sub_rate: 0.0,
            ins_rate: 0.0,
            del_rate: 0.0,
            confusions: BTreeMap::new(),
            conf_correct: 0.98,
            conf_noise: 0.0,
            alphabet: "abcdefghijklmnopqrstuvwxyz ".chars().collect(),
        }
    }

    #[test]
    fn identity_channel_keeps_text_and_confidence() {
        let model = base_model();
        let hyp = simulate_model_line("hello world", &model, 1).unwrap();
        assert_eq!(hyp.text, "hello world");
        for entry in hyp.entries.as_ref().unwrap() {
            assert_eq!(entry.conf, 0.98);
            let total: f64 = entry.conf + entry.alternatives.iter().map(|a| a.conf).sum::<f64>();
            assert!((total - 1.0).abs() < 1e-9, "distribution sums to {total}");
            assert!(
                !entry.alternatives.is_empty(),
                "remainder shared by alternatives"
            );
        }
    }

    #[test]
    fn same_inputs_same_output() {
        let mut model = base_model();
        model.sub_rate = 0.1;
        model.ins_rate = 0.05;
        model.del_rate = 0.05;
        let a = simulate_model_line("the quick brown fox", &model, 42).unwrap();
        let b = simulate_model_line("the quick brown fox", &model, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_model_line("the quick brown fox", &model, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pixel_boxes_are_consecutive() {
        let hyp = simulate_model_line("abc", &base_model(), 5).unwrap();
        let entries = hyp.entries.unwrap();
        for (i, entry) in entries.iter().enumerate() {
            assert_eq!(entry.x_start, i as u32 * 12);
            assert_eq!(entry.x_end, entry.x_start + 10);
        }
    }

    #[test]
    fn substitution_keeps_truth_as_alternative() {
        let mut model = base_model();
        model.sub_rate = 1.0 - 1e-9;
        let hyp = simulate_model_line("abcdef", &model, 3).unwrap();
        let entries = hyp.entries.as_ref().unwrap();
        assert_eq!(entries.len(), 6);
        for (entry, truth) in entries.iter().zip("abcdef".chars()) {
            assert_ne!(entry.ch, truth, "substitution picks a different character");
            assert!(
                entry.alternatives.iter().any(|a| a.ch == truth),
                "truth {truth} missing from alternatives of {entry:?}"
            );
        }
    }

    #[test]
    fn monte_carlo_cer_tracks_sub_rate() {
        let mut model = base_model();
        model.sub_rate = 0.03;
        let gt: Vec<String> = (0..2500)
            .map(|i| {
                let mut line = String::new();
                for k in 0..40 {
                    let c = model.alphabet[(i * 7 + k * 3) % 26];
                    line.push(c);
                }
                line
            })
            .collect();
        let corpora = simulate_ensemble(&gt, core::slice::from_ref(&model), 11).unwrap();
        let preds: Vec<String> = corpora[0].iter().map(|h| h.text.clone()).collect();
        let report = corpus_cer(&gt, &preds).unwrap();
        assert_eq!(report.total_chars, 100_000);
        assert!(
            report.cer > 0.025 && report.cer < 0.035,
            "empirical CER {} drifted from the configured 3%",
            report.cer
        );
    }

    #[test]
    fn ensemble_models_draw_independently() {
        let mut model = base_model();
        model.sub_rate = 0.05;
        let gt: Vec<String> = (0..50)
            .map(|_| "a quick brown fox jumps over it".into())
            .collect();
        let models = vec![model.clone(); 5];
        let corpora = simulate_ensemble(&gt, &models, 123).unwrap();
        for i in 0..corpora.len() {
            assert_eq!(corpora[i][0].model_id, alloc::format!("m{:02}", i + 1));
            for j in (i + 1)..corpora.len() {
                let same = corpora[i]
                    .iter()
                    .zip(&corpora[j])
                    .all(|(a, b)| a.text == b.text);
                assert!(!same, "models {i} and {j} produced identical corpora");
            }
        }
        let again = simulate_ensemble(&gt, &models, 123).unwrap();
        assert_eq!(corpora, again);
    }

    #[test]
    fn normalization_holds_under_all_error_kinds() {
        let mut model = base_model();
        model.sub_rate = 0.2;
        model.ins_rate = 0.1;
        model.del_rate = 0.1;
        model.conf_noise = 0.02;
        model.confusions.insert('e', vec![('c', 0.7), ('o', 0.3)]);
        for seed in 0..50 {
            let hyp = simulate_model_line("sneltremeelterene", &model, seed).unwrap();
            for entry in hyp.entries.as_ref().unwrap() {
                let total: f64 =
                    entry.conf + entry.alternatives.iter().map(|a| a.conf).sum::<f64>();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn validation_rejects_bad_models() {
        let mut m = base_model();
        m.sub_rate = -0.1;
        assert!(m.validate().is_err());

        let mut m = base_model();
        m.sub_rate = 0.6;
        m.del_rate = 0.5;
        assert!(m.validate().is_err());

        let mut m = base_model();
        m.confusions.insert('e', vec![('€', 1.0)]);
        assert!(m.validate().is_err(), "confusion target outside alphabet");

        let mut m = base_model();
        m.confusions.insert('e', vec![('e', 1.0)]);
        assert!(m.validate().is_err(), "confusion target equals source");

        let mut m = base_model();
        m.alphabet.clear();
        assert!(m.validate().is_err());

        assert!(simulate_ensemble::<&str>(&["x"], &[], 0).is_err());
    }

    #[test]
    fn empty_ground_truth_yields_empty_hypothesis() {
        let hyp = simulate_model_line("", &base_model(), 9).unwrap();
        assert_eq!(hyp.text, "");
    }
}
