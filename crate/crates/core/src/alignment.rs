//! Aligns N hypotheses of the same line into equal-width columns and
//! extracts maximal disagreement regions.
//!
//! Multi-alignment uses a pivot: the hypothesis with the smallest summed
//! edit distance to all others is chosen as reference, every other
//! hypothesis is pair-aligned against it, and the pairwise alignments are
//! merged by giving every pivot position a shared block of insertion
//! columns wide enough for the longest insertion any input made there.
//! The result is independent of input order up to row labels.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::Range;

use crate::evaluation::edit_distance_chars;
use crate::llocs::{LineHypothesis, LlocsEntry};

/// N gap-padded rows of equal column count. `None` cells are gaps; the
/// per-row column-to-character-index map is kept alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSet {
    rows: Vec<Vec<Option<char>>>,
    col_to_index: Vec<Vec<Option<usize>>>,
}

impl AlignedSet {
    fn from_rows(rows: Vec<Vec<Option<char>>>) -> Self {
        let col_to_index = rows
            .iter()
            .map(|row| {
                let mut next = 0usize;
                row.iter()
                    .map(|cell| {
                        cell.map(|_| {
                            let index = next;
                            next += 1;
                            index
                        })
                    })
                    .collect()
            })
            .collect();
        Self { rows, col_to_index }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// The symbol of `row` at `col`; `None` is a gap.
    pub fn symbol(&self, row: usize, col: usize) -> Option<char> {
        self.rows[row][col]
    }

    /// The character index of `row`'s hypothesis at `col`, if not a gap.
    pub fn char_index(&self, row: usize, col: usize) -> Option<usize> {
        self.col_to_index[row][col]
    }

    /// The row's text with gaps removed.
    pub fn row_text(&self, row: usize) -> String {
        self.rows[row].iter().flatten().collect()
    }

    pub fn is_unanimous(&self, col: usize) -> bool {
        let first = self.rows[0][col];
        self.rows.iter().all(|row| row[col] == first)
    }

    /// Number of the row's characters mapped strictly before `col`.
    fn chars_before(&self, row: usize, col: usize) -> usize {
        self.col_to_index[row][..col].iter().flatten().count()
    }
}

/// A maximal run of non-unanimous columns, with each input's substring and
/// (when available) the matching llocs slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    /// Ordinal, starting at 1, left to right.
    pub id: usize,
    pub col_span: Range<usize>,
    pub per_input: Vec<RegionInput>,
}

/// One input's contribution to a disagreement region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionInput {
    /// Index of the hypothesis in the aligned set.
    pub input: usize,
    /// May be empty when the input only has gaps in the region.
    pub text: String,
    /// Character indices of `text` within the hypothesis; empty ranges sit
    /// at the position where the region's characters would be inserted.
    pub char_range: Range<usize>,
    pub entries: Option<Vec<LlocsEntry>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Full-matrix edit DP with a deterministic trace-back that prefers
/// match over substitute over delete over insert on cost ties.
fn edit_steps(a: &[char], b: &[char]) -> Vec<Step> {
    let m = a.len();
    let n = b.len();
    let mut dist = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = dist[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            let del = dist[i - 1][j] + 1;
            let ins = dist[i][j - 1] + 1;
            dist[i][j] = sub.min(del).min(ins);
        }
    }
    let mut steps = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let d = dist[i][j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && dist[i - 1][j - 1] == d {
            steps.push(Step::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dist[i - 1][j - 1] + 1 == d {
            steps.push(Step::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && dist[i - 1][j] + 1 == d {
            steps.push(Step::Delete);
            i -= 1;
        } else {
            steps.push(Step::Insert);
            j -= 1;
        }
    }
    steps.reverse();
    steps
}

/// Aligns two character sequences at minimal unit edit cost. Row 0 holds
/// `a`, row 1 holds `b`.
pub fn align_pair(a: &str, b: &str) -> AlignedSet {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    let steps = edit_steps(&ac, &bc);
    let mut row_a = Vec::with_capacity(steps.len());
    let mut row_b = Vec::with_capacity(steps.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    for step in steps {
        match step {
            Step::Match | Step::Substitute => {
                row_a.push(Some(ac[ia]));
                row_b.push(Some(bc[ib]));
                ia += 1;
                ib += 1;
            }
            Step::Delete => {
                row_a.push(Some(ac[ia]));
                row_b.push(None);
                ia += 1;
            }
            Step::Insert => {
                row_a.push(None);
                row_b.push(Some(bc[ib]));
                ib += 1;
            }
        }
    }
    AlignedSet::from_rows(vec![row_a, row_b])
}

/// One hypothesis aligned against the pivot: `sym[k]` is its character at
/// pivot position k (or `None` for a deletion) and `ins[k]` the characters
/// it inserts before pivot position k, with `ins[pivot_len]` trailing.
struct PairDecomposition {
    sym: Vec<Option<char>>,
    ins: Vec<Vec<char>>,
}

fn decompose(pivot: &[char], other: &[char]) -> PairDecomposition {
    let steps = edit_steps(pivot, other);
    let mut sym = Vec::with_capacity(pivot.len());
    let mut ins = vec![Vec::new(); pivot.len() + 1];
    let mut io = 0usize;
    for step in steps {
        match step {
            Step::Match | Step::Substitute => {
                sym.push(Some(other[io]));
                io += 1;
            }
            Step::Delete => sym.push(None),
            Step::Insert => {
                ins[sym.len()].push(other[io]);
                io += 1;
            }
        }
    }
    PairDecomposition { sym, ins }
}

/// Aligns all hypotheses into one set of equal-width rows, one per input,
/// in input order. The pivot is the hypothesis with minimal summed
/// pairwise edit distance to the others; ties fall to the shortest text,
/// then the lexicographically smallest, then the lowest input index, so
/// the column structure does not depend on input order.
pub fn align_many(hyps: &[LineHypothesis]) -> AlignedSet {
    let texts: Vec<Vec<char>> = hyps.iter().map(|h| h.text.chars().collect()).collect();
    if texts.is_empty() {
        return AlignedSet::from_rows(Vec::new());
    }
    let n = texts.len();
    let mut sums = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = edit_distance_chars(&texts[i], &texts[j]);
            sums[i] += d;
            sums[j] += d;
        }
    }
    let mut pivot = 0usize;
    for i in 1..n {
        let candidate = (sums[i], texts[i].len(), &texts[i]);
        let best = (sums[pivot], texts[pivot].len(), &texts[pivot]);
        if candidate < best {
            pivot = i;
        }
    }

    let pivot_text = texts[pivot].clone();
    let decomps: Vec<PairDecomposition> = texts.iter().map(|t| decompose(&pivot_text, t)).collect();
    let mut widths = vec![0usize; pivot_text.len() + 1];
    for d in &decomps {
        for (width, run) in widths.iter_mut().zip(&d.ins) {
            *width = (*width).max(run.len());
        }
    }

    let rows = decomps
        .iter()
        .map(|d| {
            let mut row = Vec::new();
            for (k, &width) in widths.iter().enumerate() {
                for j in 0..width {
                    row.push(d.ins[k].get(j).copied());
                }
                if k < pivot_text.len() {
                    row.push(d.sym[k]);
                }
            }
            row
        })
        .collect();
    AlignedSet::from_rows(rows)
}

/// Cuts the aligned set into maximal runs of non-unanimous columns,
/// numbered from 1 left to right. Directly adjacent disagreeing columns
/// merge into one region.
pub fn extract_disagreements(set: &AlignedSet, hyps: &[LineHypothesis]) -> Vec<Disagreement> {
    assert_eq!(
        set.n_rows(),
        hyps.len(),
        "aligned set does not match hypotheses"
    );
    let n_cols = set.n_cols();
    let mut regions = Vec::new();
    let mut col = 0usize;
    while col < n_cols {
        if set.is_unanimous(col) {
            col += 1;
            continue;
        }
        let start = col;
        while col < n_cols && !set.is_unanimous(col) {
            col += 1;
        }
        let span = start..col;
        let per_input = (0..set.n_rows())
            .map(|row| {
                let mut text = String::new();
                let mut first_index = None;
                let mut count = 0usize;
                for c in span.clone() {
                    if let Some(ch) = set.symbol(row, c) {
                        text.push(ch);
                        if first_index.is_none() {
                            first_index = set.char_index(row, c);
                        }
                        count += 1;
                    }
                }
                let start_index = first_index.unwrap_or_else(|| set.chars_before(row, start));
                let char_range = start_index..start_index + count;
                let entries = hyps[row]
                    .entries
                    .as_ref()
                    .map(|es| es[char_range.clone()].to_vec());
                RegionInput {
                    input: row,
                    text,
                    char_range,
                    entries,
                }
            })
            .collect();
        regions.push(Disagreement {
            id: regions.len() + 1,
            col_span: span,
            per_input,
        });
    }
    regions
}

/// Renders the aligned line with each region replaced by its `{id}`
/// placeholder, followed by one listing line per region:
///
/// ```text
/// i{1}de mari{2}n namen
/// {1}: M1{ni}, M2{n}, M3{n}, M4{a}, M5{n}
/// {2}: M1{c}, M2{c}, M3{e}, M4{e}, M5{c}
/// ```
pub fn render_alignment(set: &AlignedSet, regions: &[Disagreement]) -> String {
    let mut out = String::new();
    let mut next_region = 0usize;
    let mut col = 0usize;
    while col < set.n_cols() {
        if let Some(region) = regions.get(next_region) {
            if region.col_span.start == col {
                let _ = write!(out, "{{{}}}", region.id);
                col = region.col_span.end;
                next_region += 1;
                continue;
            }
        }
        let ch = set
            .symbol(0, col)
            .expect("unanimous column has a character");
        out.push(ch);
        col += 1;
    }
    for region in regions {
        let _ = write!(out, "\n{{{}}}: ", region.id);
        for (i, input) in region.per_input.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "M{}{{{}}}", input.input + 1, input.text);
        }
    }
    out
}
