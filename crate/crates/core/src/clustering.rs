//! Three-stage hierarchical clustering over reversible-CA cycles.
//!
//! Stage 1 splits each encoded object vertically into CA-sized pieces and
//! groups each split's values by the cycles of the first rule. Stage 2
//! replaces every piece by the Gray code of its cycle's rank, merges the
//! pieces back into one short object, recursing with further rules while
//! the merged length still exceeds the cell-length budget, then applies
//! the second rule to the merged objects. Stage 3 sorts the final cycles
//! by the median of their member values and cuts the sequence at the
//! largest median gaps to produce the requested number of clusters.

use rayon::prelude::*;
use thiserror::Error;

use crate::ca::{self, CaError, Rule, MAX_CELLS};
use crate::encoding::EncodedDataset;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("rule list is empty")]
    EmptyRuleList,
    #[error("dataset has no objects")]
    EmptyDataset,
    #[error("split size must be at least 1")]
    SplitSizeZero,
    #[error("split size {split_size} exceeds the engine cell limit {limit}")]
    SplitSizeTooLarge { split_size: usize, limit: usize },
    #[error("max cell length {max_cell_length} outside 1..={limit}")]
    BadMaxCellLength {
        max_cell_length: usize,
        limit: usize,
    },
    #[error("rule {rule} is not reversible over {width} cells (needed at {stage})")]
    IrreversibleAtWidth {
        rule: u32,
        width: usize,
        stage: String,
    },
    #[error(
        "gray re-encoding did not shrink objects below {max_cell_length} bits within \
         {depth} recursions; check split size, rules and max cell length"
    )]
    RecursionDepthExceeded {
        depth: usize,
        max_cell_length: usize,
    },
    #[error("gray index {index} does not fit in {width} bits")]
    GrayIndexOutOfRange { index: u64, width: usize },
    #[error(
        "only {available} data-bearing cycles for {requested} clusters; \
         try different rules or a different split size"
    )]
    TooFewCycles { available: usize, requested: usize },
    #[error("cluster count must be at least 1")]
    BadClusterCount,
    #[error(transparent)]
    Ca(#[from] CaError),
}

/// Parameters of a clustering run. `rules[0]` drives stage 1, `rules[1]`
/// (when present) is the stage-2 rule applied to the merged objects, and
/// any further rules feed the recursion levels, wrapping around when
/// exhausted. With a single rule the merged objects are grouped by value
/// directly, which reproduces plain cycle-as-cluster behavior.
#[derive(Debug, Clone)]
pub struct ClusterParams {
    pub rules: Vec<Rule>,
    pub split_size: usize,
    pub cluster_count: usize,
    pub max_cell_length: usize,
    pub max_recursion_depth: usize,
}

pub const DEFAULT_MAX_CELL_LENGTH: usize = 16;
pub const DEFAULT_MAX_RECURSION_DEPTH: usize = 8;

impl ClusterParams {
    pub fn new(rules: Vec<Rule>, split_size: usize, cluster_count: usize) -> Self {
        ClusterParams {
            rules,
            split_size,
            cluster_count,
            max_cell_length: DEFAULT_MAX_CELL_LENGTH,
            max_recursion_depth: DEFAULT_MAX_RECURSION_DEPTH,
        }
    }

    fn validate(&self) -> Result<(), ClusterError> {
        if self.rules.is_empty() {
            return Err(ClusterError::EmptyRuleList);
        }
        if self.split_size == 0 {
            return Err(ClusterError::SplitSizeZero);
        }
        if self.split_size > MAX_CELLS {
            return Err(ClusterError::SplitSizeTooLarge {
                split_size: self.split_size,
                limit: MAX_CELLS,
            });
        }
        if self.max_cell_length == 0 || self.max_cell_length > MAX_CELLS {
            return Err(ClusterError::BadMaxCellLength {
                max_cell_length: self.max_cell_length,
                limit: MAX_CELLS,
            });
        }
        if self.cluster_count == 0 {
            return Err(ClusterError::BadClusterCount);
        }
        Ok(())
    }

    /// Stage-1 rule of recursion level `depth` (level 0 is the initial pass).
    fn level_rule(&self, depth: usize) -> Rule {
        if depth == 0 {
            return self.rules[0];
        }
        let pool: &[Rule] = if self.rules.len() >= 3 {
            &self.rules[2..]
        } else if self.rules.len() == 2 {
            &self.rules[1..2]
        } else {
            &self.rules[0..1]
        };
        pool[(depth - 1) % pool.len()]
    }

    fn final_rule(&self) -> Option<Rule> {
        self.rules.get(1).copied()
    }
}

/// Contiguous left-to-right split of a p-bit object into CA-sized pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitLayout {
    pub object_bits: usize,
    pub split_size: usize,
    pub widths: Vec<usize>,
    /// Set when the split size exceeded the object length and a single
    /// split was used instead.
    pub single_split_fallback: bool,
}

pub fn vertical_split(object_bits: usize, split_size: usize) -> Result<SplitLayout, ClusterError> {
    if split_size == 0 {
        return Err(ClusterError::SplitSizeZero);
    }
    if split_size > MAX_CELLS {
        return Err(ClusterError::SplitSizeTooLarge {
            split_size,
            limit: MAX_CELLS,
        });
    }
    if split_size >= object_bits {
        return Ok(SplitLayout {
            object_bits,
            split_size,
            widths: vec![object_bits],
            single_split_fallback: split_size > object_bits,
        });
    }
    let full = object_bits / split_size;
    let remainder = object_bits % split_size;
    let mut widths = vec![split_size; full];
    if remainder > 0 {
        widths.push(remainder);
    }
    Ok(SplitLayout {
        object_bits,
        split_size,
        widths,
        single_split_fallback: false,
    })
}

/// One split after stage 1: each object's piece value and the index of
/// the data-bearing cycle it falls in.
#[derive(Debug, Clone)]
pub struct SplitAssignment {
    pub width: usize,
    pub piece_values: Vec<u64>,
    /// Cycle index per object, into `cycle_min`/`cycle_len` order.
    pub object_cycles: Vec<usize>,
    pub cycle_min: Vec<u64>,
    pub cycle_len: Vec<usize>,
}

fn piece_value(bits: &[u8], start: usize, width: usize) -> u64 {
    bits[start..start + width]
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
}

/// Stage 1: assign every object's piece in every split to a cycle of the
/// rule over that split's width. Splits are processed in parallel; the
/// output order is the layout order, so the result is deterministic.
pub fn assign_split_cycles(
    objects: &[Vec<u8>],
    layout: &SplitLayout,
    rule: Rule,
) -> Result<Vec<SplitAssignment>, ClusterError> {
    let mut offsets = Vec::with_capacity(layout.widths.len());
    let mut acc = 0usize;
    for &w in &layout.widths {
        offsets.push(acc);
        acc += w;
    }
    layout
        .widths
        .par_iter()
        .zip(offsets.par_iter())
        .map(|(&width, &offset)| {
            let piece_values: Vec<u64> = objects
                .iter()
                .map(|bits| piece_value(bits, offset, width))
                .collect();
            let partition =
                ca::orbit_membership_values(rule, width, &piece_values).map_err(|e| match e {
                    CaError::NotReversible { rule, .. } => ClusterError::IrreversibleAtWidth {
                        rule,
                        width,
                        stage: "initial split clustering".to_string(),
                    },
                    other => ClusterError::Ca(other),
                })?;
            let object_cycles: Vec<usize> = piece_values
                .iter()
                .map(|&v| partition.cycle_of(v).unwrap())
                .collect();
            let cycle_min: Vec<u64> = partition.cycles().iter().map(|c| c[0]).collect();
            let cycle_len: Vec<usize> = partition.cycles().iter().map(Vec::len).collect();
            Ok(SplitAssignment {
                width,
                piece_values,
                object_cycles,
                cycle_min,
                cycle_len,
            })
        })
        .collect()
}

/// A split's cycles in rank order plus the per-object ranks and the Gray
/// width needed to encode them.
#[derive(Debug, Clone)]
pub struct RankedSplit {
    pub width: usize,
    pub cycle_count: usize,
    pub gray_width: usize,
    /// Per cycle, in rank order.
    pub orbit_lengths: Vec<usize>,
    pub data_counts: Vec<usize>,
    pub medians: Vec<f64>,
    /// Rank of each object's cycle.
    pub object_ranks: Vec<usize>,
}

fn median_u64(sorted: &[u64]) -> f64 {
    let m = sorted.len();
    (sorted[(m - 1) / 2] as f64 + sorted[m / 2] as f64) / 2.0
}

/// Rank a split's data-bearing cycles: longest orbit first, ties broken
/// by the cycle's minimum element. The densest region of the state space
/// gets Gray code 0. (Median over member values is kept per cycle for
/// the trace and the later stages.)
pub fn rank_cycles(assignment: &SplitAssignment) -> RankedSplit {
    let q = assignment.cycle_min.len();
    let mut per_cycle_values: Vec<Vec<u64>> = vec![Vec::new(); q];
    for (&value, &cycle) in assignment
        .piece_values
        .iter()
        .zip(&assignment.object_cycles)
    {
        per_cycle_values[cycle].push(value);
    }
    for values in &mut per_cycle_values {
        values.sort_unstable();
    }
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by_key(|&i| {
        (
            std::cmp::Reverse(assignment.cycle_len[i]),
            assignment.cycle_min[i],
        )
    });
    let mut rank_of = vec![0usize; q];
    for (rank, &cycle) in order.iter().enumerate() {
        rank_of[cycle] = rank;
    }
    let gray_width = gray_width_for(q);
    RankedSplit {
        width: assignment.width,
        cycle_count: q,
        gray_width,
        orbit_lengths: order.iter().map(|&i| assignment.cycle_len[i]).collect(),
        data_counts: order.iter().map(|&i| per_cycle_values[i].len()).collect(),
        medians: order
            .iter()
            .map(|&i| median_u64(&per_cycle_values[i]))
            .collect(),
        object_ranks: assignment
            .object_cycles
            .iter()
            .map(|&c| rank_of[c])
            .collect(),
    }
}

/// Bits needed to Gray-encode ranks 0..q-1; a single-cycle split still
/// contributes one bit so object lengths stay uniform.
pub fn gray_width_for(q: usize) -> usize {
    if q <= 1 {
        1
    } else {
        (usize::BITS - (q - 1).leading_zeros()) as usize
    }
}

/// Binary-reflected Gray code of `index`, zero-padded to `width` bits.
pub fn gray_code(index: u64, width: usize) -> Result<Vec<u8>, ClusterError> {
    if width < 64 && index >> width != 0 {
        return Err(ClusterError::GrayIndexOutOfRange { index, width });
    }
    let g = index ^ (index >> 1);
    Ok((0..width).rev().map(|bit| ((g >> bit) & 1) as u8).collect())
}

/// Stage-2 re-encoding: each object's pieces replaced by the Gray codes
/// of their cycle ranks and concatenated.
pub fn merge_gray_codes(
    object_count: usize,
    ranked: &[RankedSplit],
) -> Result<Vec<Vec<u8>>, ClusterError> {
    let merged_width: usize = ranked.iter().map(|r| r.gray_width).sum();
    let mut merged = vec![Vec::with_capacity(merged_width); object_count];
    for split in ranked {
        for (object, &rank) in split.object_ranks.iter().enumerate() {
            merged[object].extend(gray_code(rank as u64, split.gray_width)?);
        }
    }
    Ok(merged)
}

/// Final cycle structure over the merged objects: each object's class,
/// with classes ordered by ascending median of their member values.
#[derive(Debug, Clone)]
pub struct StageTwoState {
    pub merged_width: usize,
    pub recursion_depth: usize,
    /// Class rank per object (0-based, ascending median order).
    pub class_of_object: Vec<usize>,
    /// Ascending medians, one per class.
    pub class_medians: Vec<f64>,
    pub class_sizes: Vec<usize>,
}

/// Group merged objects by the cycles of `rule` (or by raw value when no
/// second rule is given) and rank the classes by median member value,
/// ties by smallest member.
pub fn final_cycle_classes(
    merged: &[Vec<u8>],
    rule: Option<Rule>,
    recursion_depth: usize,
) -> Result<StageTwoState, ClusterError> {
    let merged_width = merged[0].len();
    let values: Vec<u64> = merged
        .iter()
        .map(|bits| piece_value(bits, 0, merged_width))
        .collect();

    let class_keys: Vec<usize> = match rule {
        Some(rule) => {
            let mut distinct = values.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let partition = ca::orbit_membership_values(rule, merged_width, &distinct).map_err(
                |e| match e {
                    CaError::NotReversible { rule, .. } => ClusterError::IrreversibleAtWidth {
                        rule,
                        width: merged_width,
                        stage: "merged-object clustering".to_string(),
                    },
                    other => ClusterError::Ca(other),
                },
            )?;
            values
                .iter()
                .map(|&v| partition.cycle_of(v).unwrap())
                .collect()
        }
        None => {
            let mut distinct = values.clone();
            distinct.sort_unstable();
            distinct.dedup();
            values
                .iter()
                .map(|&v| distinct.binary_search(&v).unwrap())
                .collect()
        }
    };

    let class_count = class_keys.iter().copied().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<u64>> = vec![Vec::new(); class_count];
    for (&key, &value) in class_keys.iter().zip(&values) {
        members[key].push(value);
    }
    for m in &mut members {
        m.sort_unstable();
    }

    let mut order: Vec<usize> = (0..class_count)
        .filter(|&c| !members[c].is_empty())
        .collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (median_u64(&members[a]), median_u64(&members[b]));
        ma.partial_cmp(&mb)
            .unwrap()
            .then(members[a][0].cmp(&members[b][0]))
    });
    let mut rank_of = vec![usize::MAX; class_count];
    for (rank, &class) in order.iter().enumerate() {
        rank_of[class] = rank;
    }

    Ok(StageTwoState {
        merged_width,
        recursion_depth,
        class_of_object: class_keys.iter().map(|&k| rank_of[k]).collect(),
        class_medians: order.iter().map(|&c| median_u64(&members[c])).collect(),
        class_sizes: order.iter().map(|&c| members[c].len()).collect(),
    })
}

/// Final labels plus the boundaries stage 3 cut at.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// 1-based cluster label per object.
    pub labels: Vec<u32>,
    pub cluster_count: usize,
    /// Indices j of the cut boundaries: a cut after class j separates
    /// class j from class j+1 in median order.
    pub gap_boundaries: Vec<usize>,
    pub trace: ClusterTrace,
}

/// Stage 3: cut the ascending-median class sequence at the k-1 largest
/// median gaps (ties resolved toward the earliest boundary, making cut
/// sets nested across k).
pub fn partition_by_median_gaps(
    state: &StageTwoState,
    cluster_count: usize,
) -> Result<(Vec<u32>, Vec<usize>), ClusterError> {
    if cluster_count == 0 {
        return Err(ClusterError::BadClusterCount);
    }
    let u = state.class_medians.len();
    if u < cluster_count {
        return Err(ClusterError::TooFewCycles {
            available: u,
            requested: cluster_count,
        });
    }
    let mut gaps: Vec<(f64, usize)> = (0..u.saturating_sub(1))
        .map(|j| (state.class_medians[j + 1] - state.class_medians[j], j))
        .collect();
    gaps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut cuts: Vec<usize> = gaps
        .iter()
        .take(cluster_count - 1)
        .map(|&(_, j)| j)
        .collect();
    cuts.sort_unstable();

    let labels = state
        .class_of_object
        .iter()
        .map(|&rank| {
            let group = cuts.iter().take_while(|&&c| c < rank).count();
            (group + 1) as u32
        })
        .collect();
    Ok((labels, cuts))
}

/// Per-level, per-split trace so every intermediate can be audited.
#[derive(Debug, Clone)]
pub struct SplitTrace {
    pub width: usize,
    pub cycle_count: usize,
    pub gray_width: usize,
    pub medians: Vec<f64>,
    pub orbit_lengths: Vec<usize>,
    pub data_counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LevelTrace {
    pub rule: Rule,
    pub single_split_fallback: bool,
    pub splits: Vec<SplitTrace>,
    pub merged_width: usize,
}

#[derive(Debug, Clone)]
pub struct ClusterTrace {
    pub levels: Vec<LevelTrace>,
    pub final_rule: Option<Rule>,
    pub merged_width: usize,
    pub recursion_depth: usize,
    pub final_cycle_count: usize,
    pub final_medians: Vec<f64>,
    pub final_sizes: Vec<usize>,
    pub gap_boundaries: Vec<usize>,
}

impl ClusterTrace {
    pub fn render(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "rca-cluster trace v1");
        for (level, lt) in self.levels.iter().enumerate() {
            let _ = writeln!(
                out,
                "level {} rule {}{}",
                level,
                lt.rule,
                if lt.single_split_fallback {
                    " (single-split fallback)"
                } else {
                    ""
                }
            );
            for (i, s) in lt.splits.iter().enumerate() {
                let meds: Vec<String> = s.medians.iter().map(|m| format!("{m}")).collect();
                let _ = writeln!(
                    out,
                    "  split {} width {} cycles {} gray-width {} medians [{}]",
                    i + 1,
                    s.width,
                    s.cycle_count,
                    s.gray_width,
                    meds.join(", ")
                );
            }
            let _ = writeln!(out, "  merged-width {}", lt.merged_width);
        }
        match self.final_rule {
            Some(rule) => {
                let _ = writeln!(out, "final rule {} over {} cells", rule, self.merged_width);
            }
            None => {
                let _ = writeln!(
                    out,
                    "final grouping by merged value over {} cells (single-rule run)",
                    self.merged_width
                );
            }
        }
        let _ = writeln!(out, "recursion-depth {}", self.recursion_depth);
        let meds: Vec<String> = self.final_medians.iter().map(|m| format!("{m}")).collect();
        let _ = writeln!(
            out,
            "final cycles {} medians [{}]",
            self.final_cycle_count,
            meds.join(", ")
        );
        let cuts: Vec<String> = self
            .gap_boundaries
            .iter()
            .map(|c| format!("{}", c + 1))
            .collect();
        let _ = writeln!(out, "gap-cuts after cycles [{}]", cuts.join(", "));
        out
    }
}

/// End-to-end composition: vertical split, per-split cycle assignment,
/// Gray re-encoding (recursing while the merged objects stay longer than
/// the cell-length budget), final cycle grouping and median-gap cuts.
pub fn cluster(
    encoded: &EncodedDataset,
    params: &ClusterParams,
) -> Result<ClusteringResult, ClusterError> {
    params.validate()?;
    if encoded.objects.is_empty() {
        return Err(ClusterError::EmptyDataset);
    }

    let mut matrix: Vec<Vec<u8>> = encoded.objects.clone();
    let mut levels: Vec<LevelTrace> = Vec::new();
    let mut depth = 0usize;

    let merged = loop {
        let layout = vertical_split(matrix[0].len(), params.split_size)?;
        let rule = params.level_rule(depth);
        let assignments = assign_split_cycles(&matrix, &layout, rule)?;
        let ranked: Vec<RankedSplit> = assignments.iter().map(rank_cycles).collect();
        let merged = merge_gray_codes(matrix.len(), &ranked)?;
        let merged_width = merged[0].len();
        levels.push(LevelTrace {
            rule,
            single_split_fallback: layout.single_split_fallback,
            splits: ranked
                .iter()
                .map(|r| SplitTrace {
                    width: r.width,
                    cycle_count: r.cycle_count,
                    gray_width: r.gray_width,
                    medians: r.medians.clone(),
                    orbit_lengths: r.orbit_lengths.clone(),
                    data_counts: r.data_counts.clone(),
                })
                .collect(),
            merged_width,
        });
        if merged_width <= params.max_cell_length {
            break merged;
        }
        depth += 1;
        if depth > params.max_recursion_depth {
            return Err(ClusterError::RecursionDepthExceeded {
                depth: params.max_recursion_depth,
                max_cell_length: params.max_cell_length,
            });
        }
        matrix = merged;
    };

    let state = final_cycle_classes(&merged, params.final_rule(), depth)?;
    let (labels, gap_boundaries) = partition_by_median_gaps(&state, params.cluster_count)?;
    let trace = ClusterTrace {
        levels,
        final_rule: params.final_rule(),
        merged_width: state.merged_width,
        recursion_depth: state.recursion_depth,
        final_cycle_count: state.class_medians.len(),
        final_medians: state.class_medians.clone(),
        final_sizes: state.class_sizes.clone(),
        gap_boundaries: gap_boundaries.clone(),
    };
    Ok(ClusteringResult {
        labels,
        cluster_count: params.cluster_count,
        gap_boundaries,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeKind, AttributeSpec, Dataset};
    use crate::encoding;

    const EXAMPLE_RULE: u32 = 267422991;
    const IDENTITY_RULE: u32 = 4042322160;

    fn table2_encoded() -> EncodedDataset {
        let schema = vec![
            AttributeSpec {
                name: "petals".into(),
                kind: AttributeKind::Continuous,
            },
            AttributeSpec {
                name: "color".into(),
                kind: AttributeKind::Categorical,
            },
        ];
        let cells = vec![
            vec!["5".into(), "White".into()],
            vec!["10".into(), "White".into()],
            vec!["5".into(), "Red".into()],
            vec!["7".into(), "Yellow".into()],
            vec!["10".into(), "Yellow".into()],
            vec!["15".into(), "Yellow".into()],
            vec!["50".into(), "White".into()],
            vec!["55".into(), "Red".into()],
        ];
        let ds = Dataset::from_cells(schema, cells).unwrap();
        encoding::fit_and_encode(&ds).unwrap().1
    }

    #[test]
    fn vertical_split_examples() {
        let layout = vertical_split(88, 13).unwrap();
        assert_eq!(layout.widths.len(), 7);
        assert_eq!(layout.widths[6], 10);
        assert!(!layout.single_split_fallback);

        assert_eq!(vertical_split(5, 5).unwrap().widths, vec![5]);
        assert_eq!(vertical_split(5, 2).unwrap().widths, vec![2, 2, 1]);

        let fallback = vertical_split(5, 7).unwrap();
        assert_eq!(fallback.widths, vec![5]);
        assert!(fallback.single_split_fallback);

        assert!(matches!(
            vertical_split(10, 0),
            Err(ClusterError::SplitSizeZero)
        ));
        assert!(matches!(
            vertical_split(100, MAX_CELLS + 1),
            Err(ClusterError::SplitSizeTooLarge { .. })
        ));
    }

    #[test]
    fn gray_code_examples() {
        let chain: Vec<Vec<u8>> = (0..4).map(|i| gray_code(i, 2).unwrap()).collect();
        assert_eq!(chain, vec![vec![0, 0], vec![0, 1], vec![1, 1], vec![1, 0]]);
        assert_eq!(gray_code(0, 1).unwrap(), vec![0]);
        assert_eq!(gray_code(5, 3).unwrap(), vec![1, 1, 1]);
        assert!(matches!(
            gray_code(4, 2),
            Err(ClusterError::GrayIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn gray_code_matches_xor_oracle_and_unit_steps() {
        for width in 1..=6usize {
            let mut prev: Option<Vec<u8>> = None;
            for i in 0..(1u64 << width) {
                let code = gray_code(i, width).unwrap();
                let oracle = i ^ (i >> 1);
                let value = code.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
                assert_eq!(value, oracle);
                if let Some(p) = prev {
                    let diff = p.iter().zip(&code).filter(|(a, b)| a != b).count();
                    assert_eq!(diff, 1, "consecutive gray codes differ in one bit");
                }
                prev = Some(code);
            }
        }
    }

    #[test]
    fn table2_stage1_finds_three_data_cycles() {
        let encoded = table2_encoded();
        let layout = vertical_split(encoded.width, 5).unwrap();
        let assignments =
            assign_split_cycles(&encoded.objects, &layout, Rule::from_decimal(EXAMPLE_RULE))
                .unwrap();
        assert_eq!(assignments.len(), 1);
        assert_eq!(assignments[0].cycle_min.len(), 3);
    }

    #[test]
    fn table2_ranking_matches_published_trace() {
        let encoded = table2_encoded();
        let layout = vertical_split(encoded.width, 5).unwrap();
        let assignments =
            assign_split_cycles(&encoded.objects, &layout, Rule::from_decimal(EXAMPLE_RULE))
                .unwrap();
        let ranked = rank_cycles(&assignments[0]);
        assert_eq!(ranked.cycle_count, 3);
        assert_eq!(ranked.gray_width, 2);
        // orbit lengths 20, 8, 4 in rank order
        assert_eq!(ranked.orbit_lengths, vec![20, 8, 4]);
        // Obj1 -> rank 0, Obj3 -> rank 2, Obj4 -> rank 1
        assert_eq!(ranked.object_ranks, vec![0, 0, 2, 1, 0, 0, 1, 1]);
        let merged = merge_gray_codes(8, &[ranked]).unwrap();
        let strings: Vec<String> = merged
            .iter()
            .map(|bits| {
                bits.iter()
                    .map(|&b| if b == 1 { '1' } else { '0' })
                    .collect()
            })
            .collect();
        assert_eq!(
            strings,
            vec!["00", "00", "11", "01", "00", "00", "01", "01"]
        );
    }

    #[test]
    fn table2_end_to_end_partition() {
        let encoded = table2_encoded();
        let params = ClusterParams::new(vec![Rule::from_decimal(EXAMPLE_RULE)], 5, 3);
        let result = cluster(&encoded, &params).unwrap();
        let mut groups: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (i, &label) in result.labels.iter().enumerate() {
            groups.entry(label).or_default().push(i + 1);
        }
        let partition: Vec<Vec<usize>> = groups.into_values().collect();
        let mut sorted = partition.clone();
        sorted.sort();
        assert_eq!(sorted, vec![vec![1, 2, 5, 6], vec![3], vec![4, 7, 8]]);
        // identical encodings share a label
        assert_eq!(result.labels[4], result.labels[5]);
        assert_eq!(result.trace.recursion_depth, 0);
    }

    #[test]
    fn singleton_dataset_single_cluster() {
        let encoded = EncodedDataset {
            objects: vec![vec![1, 0, 1, 1]],
            width: 4,
            warnings: vec![],
        };
        let params = ClusterParams::new(vec![Rule::from_decimal(EXAMPLE_RULE)], 4, 1);
        let result = cluster(&encoded, &params).unwrap();
        assert_eq!(result.labels, vec![1]);
    }

    #[test]
    fn tied_orbit_lengths_rank_by_min_element() {
        // identity rule: every cycle has length 1, so ranks follow the
        // minimum (= only) element
        let assignment = SplitAssignment {
            width: 2,
            piece_values: vec![2, 0, 1],
            object_cycles: vec![2, 0, 1],
            cycle_min: vec![0, 1, 2],
            cycle_len: vec![1, 1, 1],
        };
        let ranked = rank_cycles(&assignment);
        assert_eq!(ranked.object_ranks, vec![2, 0, 1]);
        assert_eq!(ranked.gray_width, 2);
    }

    #[test]
    fn forced_single_cycle_splits_yield_uniform_objects() {
        // all objects identical: every split has exactly one data cycle,
        // so the merged objects are s bits of gray(0)
        let encoded = EncodedDataset {
            objects: vec![vec![1, 0, 1, 1, 0, 1]; 4],
            width: 6,
            warnings: vec![],
        };
        let params = ClusterParams::new(vec![Rule::from_decimal(EXAMPLE_RULE)], 2, 1);
        let result = cluster(&encoded, &params).unwrap();
        assert_eq!(result.trace.merged_width, 3);
        assert_eq!(result.trace.final_cycle_count, 1);
        assert_eq!(result.labels, vec![1; 4]);
    }

    #[test]
    fn recursion_consumes_third_rule_and_records_depth() {
        let encoded = EncodedDataset {
            objects: vec![
                vec![0, 0, 0, 0],
                vec![0, 1, 0, 1],
                vec![1, 0, 1, 0],
                vec![1, 1, 1, 1],
            ],
            width: 4,
            warnings: vec![],
        };
        let mut params = ClusterParams::new(
            vec![
                Rule::from_decimal(EXAMPLE_RULE),
                Rule::from_decimal(IDENTITY_RULE),
                Rule::from_decimal(IDENTITY_RULE),
            ],
            2,
            2,
        );
        params.max_cell_length = 1;
        let result = cluster(&encoded, &params).unwrap();
        assert_eq!(result.trace.recursion_depth, 1);
        assert_eq!(result.trace.levels.len(), 2);
        assert_eq!(
            result.trace.levels[1].rule,
            Rule::from_decimal(IDENTITY_RULE)
        );
        assert_eq!(result.trace.merged_width, 1);
        assert_eq!(result.labels, vec![1, 2, 2, 1]);
    }

    #[test]
    fn runaway_recursion_is_cut_off() {
        let encoded = EncodedDataset {
            objects: vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]],
            width: 2,
            warnings: vec![],
        };
        let mut params = ClusterParams::new(vec![Rule::from_decimal(IDENTITY_RULE)], 2, 2);
        params.max_cell_length = 1;
        assert!(matches!(
            cluster(&encoded, &params),
            Err(ClusterError::RecursionDepthExceeded { .. })
        ));
    }

    fn state_with_medians(medians: &[f64]) -> StageTwoState {
        StageTwoState {
            merged_width: 4,
            recursion_depth: 0,
            class_of_object: (0..medians.len()).collect(),
            class_medians: medians.to_vec(),
            class_sizes: vec![1; medians.len()],
        }
    }

    #[test]
    fn median_gap_cuts_follow_the_largest_gaps() {
        // seven cycles with the two biggest gaps after cycles 2 and 4
        // (1-based), giving groups {1,2}, {3,4}, {5,6,7}
        let state = state_with_medians(&[0.0, 1.0, 7.0, 8.0, 20.0, 21.0, 22.0]);
        let (labels, cuts) = partition_by_median_gaps(&state, 3).unwrap();
        assert_eq!(cuts, vec![1, 3]);
        assert_eq!(labels, vec![1, 1, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn cluster_count_equal_to_cycles_puts_each_cycle_alone() {
        let state = state_with_medians(&[0.0, 3.0, 9.0]);
        let (labels, _) = partition_by_median_gaps(&state, 3).unwrap();
        assert_eq!(labels, vec![1, 2, 3]);
    }

    #[test]
    fn too_few_cycles_is_a_distinct_error() {
        let state = state_with_medians(&[0.0, 3.0]);
        assert!(matches!(
            partition_by_median_gaps(&state, 5),
            Err(ClusterError::TooFewCycles {
                available: 2,
                requested: 5
            })
        ));
        assert!(matches!(
            partition_by_median_gaps(&state, 0),
            Err(ClusterError::BadClusterCount)
        ));
    }

    #[test]
    fn gap_cuts_are_nested_across_cluster_counts() {
        let state = state_with_medians(&[0.0, 2.0, 2.5, 9.0, 9.25, 14.0, 30.0, 31.0]);
        let mut previous: Option<Vec<u32>> = None;
        for k in 1..=state.class_medians.len() {
            let (labels, _) = partition_by_median_gaps(&state, k).unwrap();
            if let Some(prev) = previous {
                // refinement: objects sharing a label at k also shared one at k-1
                for i in 0..labels.len() {
                    for j in 0..labels.len() {
                        if labels[i] == labels[j] {
                            assert_eq!(prev[i], prev[j]);
                        }
                    }
                }
            }
            previous = Some(labels);
        }
    }

    #[test]
    fn row_permutation_permutes_labels() {
        let encoded = table2_encoded();
        let params = ClusterParams::new(vec![Rule::from_decimal(EXAMPLE_RULE)], 5, 3);
        let base = cluster(&encoded, &params).unwrap();
        let perm = [3usize, 0, 6, 2, 7, 1, 5, 4];
        let permuted = EncodedDataset {
            objects: perm.iter().map(|&i| encoded.objects[i].clone()).collect(),
            width: encoded.width,
            warnings: vec![],
        };
        let shuffled = cluster(&permuted, &params).unwrap();
        for (new_pos, &old_pos) in perm.iter().enumerate() {
            assert_eq!(shuffled.labels[new_pos], base.labels[old_pos]);
        }
    }

    #[test]
    fn stage1_membership_matches_full_decomposition() {
        // desk-scale oracle: one split, compare against decompose_cycles
        let rule = Rule::from_decimal(252691440);
        let width = 10usize;
        let values: Vec<u64> = vec![3, 17, 255, 256, 511, 512, 900, 1023, 77, 17];
        let objects: Vec<Vec<u8>> = values
            .iter()
            .map(|&v| (0..width).rev().map(|b| ((v >> b) & 1) as u8).collect())
            .collect();
        let layout = vertical_split(width, width).unwrap();
        let assignments = assign_split_cycles(&objects, &layout, rule).unwrap();
        let full = ca::decompose_cycles(rule, width).unwrap();
        for (i, &v) in values.iter().enumerate() {
            for (j, &w) in values.iter().enumerate() {
                let same_partial =
                    assignments[0].object_cycles[i] == assignments[0].object_cycles[j];
                let same_full = full.cycle_of(v) == full.cycle_of(w);
                assert_eq!(same_partial, same_full, "{v} vs {w}");
            }
        }
    }

    #[test]
    fn trace_renders_every_stage() {
        let encoded = table2_encoded();
        let params = ClusterParams::new(vec![Rule::from_decimal(EXAMPLE_RULE)], 5, 3);
        let result = cluster(&encoded, &params).unwrap();
        let text = result.trace.render();
        assert!(text.contains("level 0 rule 267422991"));
        assert!(text.contains("cycles 3 gray-width 2"));
        assert!(text.contains("recursion-depth 0"));
        assert!(text.contains("gap-cuts"));
    }
}
