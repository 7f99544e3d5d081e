//! Parallel rule-tuple search. Tuples are enumerated in a documented
//! deterministic order (rule pool ascending by decimal, tuples
//! lexicographic), evaluated by a pool of stateless workers, and merged
//! in enumeration order, so the leaderboard is byte-identical for any
//! worker count.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use rayon::prelude::*;
use rca_cluster::encoding::EncodedDataset;
use rca_cluster::metrics::FeatureMatrix;

use crate::output::{score_labels, Scores};
use crate::run;

/// Lexicographic tuples (with repetition) over the ascending pool; a
/// nonzero budget truncates the enumeration.
pub fn enumerate_tuples(pool: &[u32], tuple_length: usize, budget: usize) -> Vec<Vec<u32>> {
    let mut sorted = pool.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let total = sorted.len().pow(tuple_length as u32);
    let cap = if budget == 0 {
        total
    } else {
        budget.min(total)
    };
    let mut tuples = Vec::with_capacity(cap);
    let mut indices = vec![0usize; tuple_length];
    for _ in 0..cap {
        tuples.push(indices.iter().map(|&i| sorted[i]).collect());
        for pos in (0..tuple_length).rev() {
            indices[pos] += 1;
            if indices[pos] < sorted.len() {
                break;
            }
            indices[pos] = 0;
        }
    }
    tuples
}

pub struct Evaluation {
    pub rules: Vec<u32>,
    /// Scores of the completed run, or the failure message.
    pub outcome: Result<Scores, String>,
}

impl Evaluation {
    pub fn silhouette(&self) -> Option<f64> {
        self.outcome.as_ref().ok().and_then(|s| s.silhouette_value)
    }
}

/// Evaluate every tuple over a fixed-size worker pool. Results come back
/// in enumeration order regardless of scheduling.
pub fn evaluate_tuples(
    encoded: &EncodedDataset,
    matrix: &FeatureMatrix,
    tuples: &[Vec<u32>],
    split_size: usize,
    clusters: usize,
    max_cell_length: usize,
    threads: usize,
) -> Result<Vec<Evaluation>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    let evaluations = pool.install(|| {
        tuples
            .par_iter()
            .map(|rules| {
                let outcome = run::run_tuple(encoded, rules, split_size, clusters, max_cell_length)
                    .map(|result| score_labels(matrix, &result.labels))
                    .map_err(|e| format!("{e:#}"));
                Evaluation {
                    rules: rules.clone(),
                    outcome,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(evaluations)
}

/// Indices of evaluations ranked best-first: silhouette descending,
/// failures excluded, ties broken by the lexicographically smaller tuple.
pub fn rank(evaluations: &[Evaluation]) -> Vec<usize> {
    let mut ranked: Vec<usize> = (0..evaluations.len())
        .filter(|&i| evaluations[i].silhouette().is_some())
        .collect();
    ranked.sort_by(|&a, &b| {
        let (sa, sb) = (
            evaluations[a].silhouette().unwrap(),
            evaluations[b].silhouette().unwrap(),
        );
        sb.total_cmp(&sa)
            .then_with(|| evaluations[a].rules.cmp(&evaluations[b].rules))
    });
    ranked
}

fn rules_text(rules: &[u32]) -> String {
    rules
        .iter()
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn leaderboard_text(
    fingerprint: &str,
    evaluations: &[Evaluation],
    ranked: &[usize],
    top: usize,
) -> String {
    let failed = evaluations.iter().filter(|e| e.outcome.is_err()).count();
    let mut out = String::from("rca-cluster leaderboard v1\n");
    let _ = writeln!(out, "dataset-fingerprint {fingerprint}");
    let _ = writeln!(
        out,
        "tuples-evaluated {} failed {failed}",
        evaluations.len()
    );
    for (pos, &idx) in ranked.iter().take(top).enumerate() {
        let e = &evaluations[idx];
        let scores = e.outcome.as_ref().unwrap();
        let _ = writeln!(
            out,
            "rank {} rules {} silhouette {} davies_bouldin {} calinski_harabasz {}",
            pos + 1,
            rules_text(&e.rules),
            scores.silhouette,
            scores.davies_bouldin,
            scores.calinski_harabasz,
        );
    }
    out
}

pub fn replay_leaderboard_text(fingerprint: &str, rules: &[u32], scores: &Scores) -> String {
    let mut out = String::from("rca-cluster leaderboard v1\n");
    let _ = writeln!(out, "dataset-fingerprint {fingerprint}");
    let _ = writeln!(out, "replayed-from-state true");
    let _ = writeln!(
        out,
        "rank 1 rules {} silhouette {} davies_bouldin {} calinski_harabasz {}",
        rules_text(rules),
        scores.silhouette,
        scores.davies_bouldin,
        scores.calinski_harabasz,
    );
    out
}
