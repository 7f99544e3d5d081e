//! Frequency-based encoding of tabular rows into fixed-length binary
//! target configurations: continuous attributes are discretized into at
//! most four equal-frequency intervals coded along the unit-hamming chain
//! 00, 01, 11, 10; categorical attributes get k-bit one-hot codes in
//! first-appearance order.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dataset::{AttributeKind, Dataset, Value};

/// Codes for up to four continuous intervals; consecutive codes differ in
/// exactly one bit.
pub const INTERVAL_CODES: [&str; 4] = ["00", "01", "11", "10"];

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("dataset has no attributes to encode")]
    EmptySchema,
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("unknown categorical value {value:?} for attribute {attribute:?}")]
    UnknownCategory { attribute: String, value: String },
    #[error("row {row} has no value for attribute index {index}")]
    ShortRow { row: usize, index: usize },
    #[error("attribute {attribute:?}: expected a {expected} value")]
    KindMismatch {
        attribute: String,
        expected: AttributeKind,
    },
    #[error("plan line {line}: {reason}")]
    PlanParse { line: usize, reason: String },
    #[error("plan does not match dataset: {0}")]
    PlanMismatch(String),
}

/// A closed interval of attribute values mapped to one 2-bit code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousEncoder {
    pub name: String,
    pub intervals: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalEncoder {
    pub name: String,
    /// Distinct values in order of first appearance; value i gets the
    /// one-hot code with the single 1 in the i-th position from the right.
    pub codebook: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeEncoder {
    Continuous(ContinuousEncoder),
    Categorical(CategoricalEncoder),
}

impl AttributeEncoder {
    pub fn name(&self) -> &str {
        match self {
            AttributeEncoder::Continuous(e) => &e.name,
            AttributeEncoder::Categorical(e) => &e.name,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            AttributeEncoder::Continuous(_) => 2,
            AttributeEncoder::Categorical(e) => e.codebook.len(),
        }
    }
}

/// Fitted per-attribute discretization mapping rows to p-bit strings.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingPlan {
    pub attributes: Vec<AttributeEncoder>,
}

impl EncodingPlan {
    pub fn total_bits(&self) -> usize {
        self.attributes.iter().map(AttributeEncoder::width).sum()
    }
}

/// An out-of-range continuous value clamped to the nearest fitted interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampWarning {
    pub row: usize,
    pub attribute: String,
    pub value: f64,
    pub interval: usize,
}

/// The encoded dataset: one bit row (values 0/1) of width `width` per
/// source row, in source order.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub objects: Vec<Vec<u8>>,
    pub width: usize,
    pub warnings: Vec<ClampWarning>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Decimal value of the whole object (only valid for width <= 64).
    pub fn decimal(&self, row: usize) -> u64 {
        self.objects[row]
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn bit_string(&self, row: usize) -> String {
        self.objects[row]
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Equal-frequency intervals over a continuous column.
///
/// Bins are allocated over the sorted multiset with ceil-of-remaining
/// sizes. A bin boundary may not split a run of equal values, so the
/// fitter first tries an exact allocation at k = min(4, distinct) and
/// then at k-1 (the duplicate-merged case where quantile boundaries
/// coincide); when neither is exact it keeps k and snaps every ideal
/// boundary to the nearest tie-free position.
pub fn fit_intervals(values: &[f64]) -> Vec<Interval> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len();

    let mut runs: Vec<(f64, usize)> = Vec::new();
    for &v in &sorted {
        match runs.last_mut() {
            Some((rv, count)) if *rv == v => *count += 1,
            _ => runs.push((v, 1)),
        }
    }
    let distinct = runs.len();
    if distinct == 1 {
        return vec![Interval {
            lo: sorted[0],
            hi: sorted[0],
        }];
    }

    // cumulative counts at which a boundary is tie-free
    let mut boundaries = Vec::with_capacity(distinct - 1);
    let mut acc = 0;
    for &(_, count) in runs.iter().take(distinct - 1) {
        acc += count;
        boundaries.push(acc);
    }

    let ceil_cuts = |k: usize| -> Vec<usize> {
        let (mut cuts, mut remaining, mut pos) = (Vec::new(), m, 0usize);
        for bins_left in (2..=k).rev() {
            let size = remaining.div_ceil(bins_left);
            pos += size;
            remaining -= size;
            cuts.push(pos);
        }
        cuts
    };

    let k_max = 4.min(distinct);
    let mut chosen: Option<Vec<usize>> = None;
    for k in [k_max, k_max - 1] {
        if k < 2 {
            break;
        }
        let cuts = ceil_cuts(k);
        if cuts.iter().all(|c| boundaries.contains(c)) {
            chosen = Some(cuts);
            break;
        }
    }
    let cuts = chosen.unwrap_or_else(|| {
        let mut snapped: Vec<usize> = ceil_cuts(k_max)
            .into_iter()
            .map(|ideal| {
                *boundaries
                    .iter()
                    .min_by_key(|&&b| (b.abs_diff(ideal), b))
                    .unwrap()
            })
            .collect();
        snapped.sort_unstable();
        snapped.dedup();
        snapped
    });

    let mut intervals = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0usize;
    for &cut in cuts.iter().chain(std::iter::once(&m)) {
        intervals.push(Interval {
            lo: sorted[prev],
            hi: sorted[cut - 1],
        });
        prev = cut;
    }
    intervals
}

/// Fit a plan over every attribute of the dataset.
pub fn fit_plan(dataset: &Dataset) -> Result<EncodingPlan, EncodeError> {
    if dataset.schema.is_empty() {
        return Err(EncodeError::EmptySchema);
    }
    if dataset.rows.is_empty() {
        return Err(EncodeError::EmptyDataset);
    }
    let mut attributes = Vec::with_capacity(dataset.schema.len());
    for (col, spec) in dataset.schema.iter().enumerate() {
        match spec.kind {
            AttributeKind::Continuous => {
                let values: Vec<f64> = dataset
                    .rows
                    .iter()
                    .map(|row| {
                        row[col]
                            .as_number()
                            .ok_or_else(|| EncodeError::KindMismatch {
                                attribute: spec.name.clone(),
                                expected: AttributeKind::Continuous,
                            })
                    })
                    .collect::<Result<_, _>>()?;
                attributes.push(AttributeEncoder::Continuous(ContinuousEncoder {
                    name: spec.name.clone(),
                    intervals: fit_intervals(&values),
                }));
            }
            AttributeKind::Categorical => {
                let mut codebook: Vec<String> = Vec::new();
                for row in &dataset.rows {
                    let text = row[col]
                        .as_text()
                        .ok_or_else(|| EncodeError::KindMismatch {
                            attribute: spec.name.clone(),
                            expected: AttributeKind::Categorical,
                        })?;
                    if !codebook.iter().any(|v| v == text) {
                        codebook.push(text.to_string());
                    }
                }
                attributes.push(AttributeEncoder::Categorical(CategoricalEncoder {
                    name: spec.name.clone(),
                    codebook,
                }));
            }
        }
    }
    Ok(EncodingPlan { attributes })
}

fn interval_for(encoder: &ContinuousEncoder, value: f64) -> (usize, bool) {
    for (i, iv) in encoder.intervals.iter().enumerate() {
        if value >= iv.lo && value <= iv.hi {
            return (i, false);
        }
    }
    // clamp to the nearest interval; gaps resolve to the nearer side,
    // ties to the lower interval
    let mut best = (0usize, f64::INFINITY);
    for (i, iv) in encoder.intervals.iter().enumerate() {
        let d = if value < iv.lo {
            iv.lo - value
        } else {
            value - iv.hi
        };
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0, true)
}

fn push_code(bits: &mut Vec<u8>, code: &str) {
    bits.extend(code.bytes().map(|b| b - b'0'));
}

fn categorical_code(index: usize, width: usize) -> String {
    let mut code = vec![b'0'; width];
    code[width - 1 - index] = b'1';
    String::from_utf8(code).unwrap()
}

/// Encode one row against a fitted plan.
pub fn encode_row(
    plan: &EncodingPlan,
    row: &[Value],
    row_index: usize,
    warnings: &mut Vec<ClampWarning>,
) -> Result<Vec<u8>, EncodeError> {
    let mut bits = Vec::with_capacity(plan.total_bits());
    for (col, enc) in plan.attributes.iter().enumerate() {
        let value = row.get(col).ok_or(EncodeError::ShortRow {
            row: row_index,
            index: col,
        })?;
        match enc {
            AttributeEncoder::Continuous(c) => {
                let x = value.as_number().ok_or_else(|| EncodeError::KindMismatch {
                    attribute: c.name.clone(),
                    expected: AttributeKind::Continuous,
                })?;
                let (idx, clamped) = interval_for(c, x);
                if clamped {
                    warnings.push(ClampWarning {
                        row: row_index,
                        attribute: c.name.clone(),
                        value: x,
                        interval: idx,
                    });
                }
                push_code(&mut bits, INTERVAL_CODES[idx]);
            }
            AttributeEncoder::Categorical(c) => {
                let text = value.as_text().ok_or_else(|| EncodeError::KindMismatch {
                    attribute: c.name.clone(),
                    expected: AttributeKind::Categorical,
                })?;
                let idx = c.codebook.iter().position(|v| v == text).ok_or_else(|| {
                    EncodeError::UnknownCategory {
                        attribute: c.name.clone(),
                        value: text.to_string(),
                    }
                })?;
                push_code(&mut bits, &categorical_code(idx, c.codebook.len()));
            }
        }
    }
    Ok(bits)
}

/// Encode every row in order.
pub fn encode_dataset(
    plan: &EncodingPlan,
    dataset: &Dataset,
) -> Result<EncodedDataset, EncodeError> {
    if dataset.rows.is_empty() {
        return Err(EncodeError::EmptyDataset);
    }
    let width = plan.total_bits();
    let mut warnings = Vec::new();
    let mut objects = Vec::with_capacity(dataset.rows.len());
    for (i, row) in dataset.rows.iter().enumerate() {
        objects.push(encode_row(plan, row, i + 1, &mut warnings)?);
    }
    Ok(EncodedDataset {
        objects,
        width,
        warnings,
    })
}

/// Convenience: fit a plan and encode in one step.
pub fn fit_and_encode(dataset: &Dataset) -> Result<(EncodingPlan, EncodedDataset), EncodeError> {
    let plan = fit_plan(dataset)?;
    let encoded = encode_dataset(&plan, dataset)?;
    Ok((plan, encoded))
}

const PLAN_HEADER: &str = "rca-encoding-plan v1";

/// Human-readable, re-parsable plan text so runs are reproducible and
/// cut points can be overridden by hand.
pub fn plan_to_text(plan: &EncodingPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PLAN_HEADER}");
    for enc in &plan.attributes {
        match enc {
            AttributeEncoder::Continuous(c) => {
                let _ = writeln!(out, "attribute continuous {}", c.name);
                for (i, iv) in c.intervals.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  interval {} code {} lo {:?} hi {:?}",
                        i, INTERVAL_CODES[i], iv.lo, iv.hi
                    );
                }
            }
            AttributeEncoder::Categorical(c) => {
                let _ = writeln!(out, "attribute categorical {}", c.name);
                for (i, value) in c.codebook.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  value {} code {} text {}",
                        i,
                        categorical_code(i, c.codebook.len()),
                        value
                    );
                }
            }
        }
    }
    let _ = writeln!(out, "total-bits {}", plan.total_bits());
    out
}

pub fn plan_from_text(text: &str) -> Result<EncodingPlan, EncodeError> {
    let err = |line: usize, reason: &str| EncodeError::PlanParse {
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == PLAN_HEADER => {}
        _ => return Err(err(1, "missing plan header")),
    }
    let mut attributes: Vec<AttributeEncoder> = Vec::new();
    let mut declared_bits: Option<usize> = None;
    for (idx, raw) in lines {
        let line = raw.trim();
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("attribute continuous ") {
            attributes.push(AttributeEncoder::Continuous(ContinuousEncoder {
                name: rest.to_string(),
                intervals: Vec::new(),
            }));
        } else if let Some(rest) = line.strip_prefix("attribute categorical ") {
            attributes.push(AttributeEncoder::Categorical(CategoricalEncoder {
                name: rest.to_string(),
                codebook: Vec::new(),
            }));
        } else if line.starts_with("interval ") {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 8 || parts[2] != "code" || parts[4] != "lo" || parts[6] != "hi" {
                return Err(err(line_no, "expected `interval I code C lo X hi Y`"));
            }
            let lo: f64 = parts[5].parse().map_err(|_| err(line_no, "bad lo"))?;
            let hi: f64 = parts[7].parse().map_err(|_| err(line_no, "bad hi"))?;
            match attributes.last_mut() {
                Some(AttributeEncoder::Continuous(c)) => c.intervals.push(Interval { lo, hi }),
                _ => return Err(err(line_no, "interval outside a continuous attribute")),
            }
        } else if line.starts_with("value ") {
            let (head, textval) = line
                .split_once(" text ")
                .ok_or_else(|| err(line_no, "expected `value I code C text V`"))?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            if parts.len() != 4 || parts[2] != "code" {
                return Err(err(line_no, "expected `value I code C text V`"));
            }
            match attributes.last_mut() {
                Some(AttributeEncoder::Categorical(c)) => c.codebook.push(textval.to_string()),
                _ => return Err(err(line_no, "value outside a categorical attribute")),
            }
        } else if let Some(rest) = line.strip_prefix("total-bits ") {
            declared_bits = Some(rest.parse().map_err(|_| err(line_no, "bad total-bits"))?);
        } else {
            return Err(err(line_no, "unrecognized line"));
        }
    }
    let plan = EncodingPlan { attributes };
    for enc in &plan.attributes {
        let ok = match enc {
            AttributeEncoder::Continuous(c) => {
                !c.intervals.is_empty() && c.intervals.len() <= INTERVAL_CODES.len()
            }
            AttributeEncoder::Categorical(c) => !c.codebook.is_empty(),
        };
        if !ok {
            return Err(EncodeError::PlanMismatch(format!(
                "attribute {:?} has no codes",
                enc.name()
            )));
        }
    }
    if let Some(bits) = declared_bits {
        if bits != plan.total_bits() {
            return Err(EncodeError::PlanMismatch(format!(
                "declared total-bits {bits} but attributes sum to {}",
                plan.total_bits()
            )));
        }
    }
    Ok(plan)
}

/// Check a (possibly hand-edited) plan against a dataset's schema.
pub fn validate_plan(plan: &EncodingPlan, dataset: &Dataset) -> Result<(), EncodeError> {
    if plan.attributes.len() != dataset.schema.len() {
        return Err(EncodeError::PlanMismatch(format!(
            "plan has {} attributes, dataset has {}",
            plan.attributes.len(),
            dataset.schema.len()
        )));
    }
    for (enc, spec) in plan.attributes.iter().zip(&dataset.schema) {
        if enc.name() != spec.name {
            return Err(EncodeError::PlanMismatch(format!(
                "plan attribute {:?} does not match dataset column {:?}",
                enc.name(),
                spec.name
            )));
        }
        let kinds_match = matches!(
            (enc, spec.kind),
            (AttributeEncoder::Continuous(_), AttributeKind::Continuous)
                | (AttributeEncoder::Categorical(_), AttributeKind::Categorical)
        );
        if !kinds_match {
            return Err(EncodeError::PlanMismatch(format!(
                "plan and dataset disagree on the kind of {:?}",
                spec.name
            )));
        }
    }
    Ok(())
}
