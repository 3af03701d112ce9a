//! Resolves disagreement regions between aligned hypotheses.
//!
//! Every region is voted in two stages. First a majority vote over the
//! per-input substring lengths fixes the region's target length; inputs of
//! any other length are discarded, and a tie between modal lengths falls to
//! the shorter one (this counters the double-recognition artifact where a
//! network emits the same character twice around an epsilon output). Then
//! each of the target slots is filled either by the modal character among
//! the survivors (majority mode) or by the character with the largest
//! summed confidence, counting every alternative above the threshold
//! (confidence mode).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::alignment::{align_many, extract_disagreements, Disagreement};
use crate::llocs::{LineHypothesis, LlocsEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteMode {
    /// Per-slot modal character, no confidence information.
    Majority,
    /// Per-slot argmax of summed confidences, alternatives included.
    Confidence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteConfig {
    pub mode: VoteMode,
    /// Alternatives contribute only with confidence strictly above this.
    /// Valid range [0, 1).
    pub alt_threshold: f64,
    /// Confidence mode ignores alternatives entirely when set.
    pub rec_only: bool,
}

impl VoteConfig {
    pub fn majority() -> Self {
        Self {
            mode: VoteMode::Majority,
            ..Self::default()
        }
    }

    pub fn confidence() -> Self {
        Self::default()
    }
}

impl Default for VoteConfig {
    fn default() -> Self {
        Self {
            mode: VoteMode::Confidence,
            alt_threshold: 0.01,
            rec_only: false,
        }
    }
}

/// Accumulated support for one candidate character in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateTally {
    /// Summed confidence; in majority mode this is the plain vote count.
    pub confidence: f64,
    /// Number of surviving inputs contributing to this candidate.
    pub supporters: usize,
}

/// Outcome of one resolved disagreement region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionOutcome {
    pub region_id: usize,
    pub chosen: String,
    /// Input indices that survived the length vote.
    pub survivors: Vec<usize>,
    /// Per-slot candidate tallies.
    pub slots: Vec<BTreeMap<char, CandidateTally>>,
}

/// Final voted line plus per-region bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteResult {
    pub text: String,
    pub per_region: Vec<RegionOutcome>,
    pub warnings: Vec<String>,
}

/// Majority vote over region lengths; tied modal lengths resolve to the
/// smallest. An empty multiset yields 0.
pub fn vote_length(lengths: &[usize]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &len in lengths {
        *counts.entry(len).or_insert(0) += 1;
    }
    let mut best_len = 0usize;
    let mut best_count = 0usize;
    for (&len, &count) in &counts {
        // ascending keys, so a strict comparison keeps the smallest winner
        if count > best_count {
            best_len = len;
            best_count = count;
        }
    }
    best_len
}

fn tally_slot(
    slot_entries: &[(&LlocsEntry, usize)],
    cfg: &VoteConfig,
) -> BTreeMap<char, CandidateTally> {
    // Collect contributions first and sum them in a canonical order so the
    // result is bit-identical under any permutation of the inputs.
    let mut contributions: BTreeMap<char, Vec<f64>> = BTreeMap::new();
    let mut supporters: BTreeMap<char, usize> = BTreeMap::new();
    for (entry, _input) in slot_entries {
        contributions.entry(entry.ch).or_default().push(entry.conf);
        *supporters.entry(entry.ch).or_insert(0) += 1;
        if !cfg.rec_only {
            for alt in &entry.alternatives {
                if alt.conf > cfg.alt_threshold {
                    contributions.entry(alt.ch).or_default().push(alt.conf);
                    *supporters.entry(alt.ch).or_insert(0) += 1;
                }
            }
        }
    }
    contributions
        .into_iter()
        .map(|(ch, mut values)| {
            values.sort_by(f64::total_cmp);
            let confidence = values.iter().sum();
            (
                ch,
                CandidateTally {
                    confidence,
                    supporters: supporters[&ch],
                },
            )
        })
        .collect()
}

/// Sums each entry's top-1 confidence onto its character and, unless
/// `rec_only`, every alternative above the threshold onto its character.
pub fn sum_candidate_confidences(
    slot_entries: &[(&LlocsEntry, usize)],
    cfg: &VoteConfig,
) -> BTreeMap<char, f64> {
    tally_slot(slot_entries, cfg)
        .into_iter()
        .map(|(ch, tally)| (ch, tally.confidence))
        .collect()
}

fn pick_candidate(tallies: &BTreeMap<char, CandidateTally>) -> Option<char> {
    // Ascending character order; strict comparisons make ties fall to more
    // supporters, then to the lowest code point.
    let mut best: Option<(char, &CandidateTally)> = None;
    for (&ch, tally) in tallies {
        let better = match best {
            None => true,
            Some((_, b)) => {
                tally.confidence > b.confidence
                    || (tally.confidence == b.confidence && tally.supporters > b.supporters)
            }
        };
        if better {
            best = Some((ch, tally));
        }
    }
    best.map(|(ch, _)| ch)
}

pub(crate) fn resolve_region(region: &Disagreement, cfg: &VoteConfig) -> RegionOutcome {
    let lengths: Vec<usize> = region
        .per_input
        .iter()
        .map(|input| input.text.chars().count())
        .collect();
    let target = vote_length(&lengths);

    let mut survivors = Vec::new();
    let mut survivor_entries: Vec<Vec<LlocsEntry>> = Vec::new();
    for (input, &len) in region.per_input.iter().zip(&lengths) {
        if len != target {
            continue;
        }
        survivors.push(input.input);
        survivor_entries.push(match &input.entries {
            Some(entries) => entries.clone(),
            // no llocs: unit confidence, no alternatives
            None => input
                .text
                .chars()
                .map(|ch| LlocsEntry {
                    ch,
                    x_start: 0,
                    x_end: 0,
                    conf: 1.0,
                    alternatives: Vec::new(),
                })
                .collect(),
        });
    }

    let mut chosen = String::new();
    let mut slots = Vec::with_capacity(target);
    for slot in 0..target {
        let tallies = match cfg.mode {
            VoteMode::Majority => {
                let mut counts: BTreeMap<char, usize> = BTreeMap::new();
                for entries in &survivor_entries {
                    *counts.entry(entries[slot].ch).or_insert(0) += 1;
                }
                counts
                    .into_iter()
                    .map(|(ch, count)| {
                        (
                            ch,
                            CandidateTally {
                                confidence: count as f64,
                                supporters: count,
                            },
                        )
                    })
                    .collect()
            }
            VoteMode::Confidence => {
                let slot_entries: Vec<(&LlocsEntry, usize)> = survivor_entries
                    .iter()
                    .zip(&survivors)
                    .map(|(entries, &input)| (&entries[slot], input))
                    .collect();
                tally_slot(&slot_entries, cfg)
            }
        };
        if let Some(ch) = pick_candidate(&tallies) {
            chosen.push(ch);
        }
        slots.push(tallies);
    }

    RegionOutcome {
        region_id: region.id,
        chosen,
        survivors,
        slots,
    }
}

/// Resolves one region to its chosen string (possibly empty when the
/// length vote settles on zero). The modal length always has at least one
/// supporter, so the survivor set is never empty.
pub fn vote_region(region: &Disagreement, cfg: &VoteConfig) -> String {
    resolve_region(region, cfg).chosen
}

/// Aligns the hypotheses, resolves every disagreement region, and splices
/// the chosen strings between the unanimous columns. A single hypothesis
/// passes through unchanged. Inputs without llocs are accepted; in
/// confidence mode they count as confidence 1.0 per character and a
/// warning is recorded on the result.
pub fn vote_line(hyps: &[LineHypothesis], cfg: &VoteConfig) -> VoteResult {
    if hyps.is_empty() {
        return VoteResult {
            text: String::new(),
            per_region: Vec::new(),
            warnings: Vec::new(),
        };
    }

    let mut warnings = Vec::new();
    if cfg.mode == VoteMode::Confidence {
        for (i, hyp) in hyps.iter().enumerate() {
            if !hyp.has_llocs() {
                let label = if hyp.model_id.is_empty() {
                    format!("input {}", i + 1)
                } else {
                    format!("input {} ({})", i + 1, hyp.model_id)
                };
                warnings.push(format!(
                    "{label}: missing llocs; characters treated as confidence 1.0"
                ));
            }
        }
    }

    let set = align_many(hyps);
    let regions = extract_disagreements(&set, hyps);
    let outcomes: Vec<RegionOutcome> = regions
        .iter()
        .map(|region| resolve_region(region, cfg))
        .collect();

    let mut text = String::new();
    let mut next_region = 0usize;
    let mut col = 0usize;
    while col < set.n_cols() {
        if let Some(region) = regions.get(next_region) {
            if region.col_span.start == col {
                text.push_str(&outcomes[next_region].chosen);
                col = region.col_span.end;
                next_region += 1;
                continue;
            }
        }
        text.push(
            set.symbol(0, col)
                .expect("unanimous column has a character"),
        );
        col += 1;
    }

    VoteResult {
        text,
        per_region: outcomes,
        warnings,
    }
}
