//! Output files: label CSV, score report, trace. Everything is written
//! to a temporary file and renamed into place so failed runs leave no
//! partial outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rca_cluster::clustering::ClusteringResult;
use rca_cluster::metrics::{FeatureMatrix, MetricOutcome, MetricsError};

pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default(),
        std::process::id()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("moving {} into place as {}", tmp.display(), path.display()))?;
    Ok(())
}

pub fn labels_csv(labels: &[u32]) -> String {
    let mut out = String::from("row,label\n");
    for (i, label) in labels.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, label);
    }
    out
}

/// Three validity indices of a labeling, each rendered as a fixed-point
/// value or an explicit OUT_OF_DOMAIN marker.
pub struct Scores {
    pub silhouette: String,
    pub davies_bouldin: String,
    pub calinski_harabasz: String,
    /// Numeric silhouette when defined (used for search ranking).
    pub silhouette_value: Option<f64>,
}

fn outcome_text(outcome: Result<MetricOutcome, MetricsError>) -> String {
    match outcome {
        Ok(o) => o.to_string(),
        Err(e) => format!("OUT_OF_DOMAIN ({e})"),
    }
}

pub fn score_labels(matrix: &FeatureMatrix, labels: &[u32]) -> Scores {
    let sil = rca_cluster::metrics::silhouette(matrix, labels);
    Scores {
        silhouette_value: sil.as_ref().ok().copied(),
        silhouette: match sil {
            Ok(v) => format!("{v:.6}"),
            Err(e) => format!("OUT_OF_DOMAIN ({e})"),
        },
        davies_bouldin: outcome_text(rca_cluster::metrics::davies_bouldin(matrix, labels)),
        calinski_harabasz: outcome_text(rca_cluster::metrics::calinski_harabasz(matrix, labels)),
    }
}

pub struct ReportInput<'a> {
    pub input: &'a str,
    pub rows: usize,
    pub attributes: usize,
    pub encoded_bits: usize,
    pub rules: &'a [u32],
    pub split_size: usize,
    pub clusters: usize,
    pub scores: &'a Scores,
    pub result: &'a ClusteringResult,
}

pub fn report_text(r: &ReportInput<'_>) -> String {
    let rules: Vec<String> = r.rules.iter().map(|d| d.to_string()).collect();
    let mut out = String::from("rca-cluster report v1\n");
    let _ = writeln!(out, "input {}", r.input);
    let _ = writeln!(out, "rows {}", r.rows);
    let _ = writeln!(out, "attributes {}", r.attributes);
    let _ = writeln!(out, "encoded-bits {}", r.encoded_bits);
    let _ = writeln!(out, "rules {}", rules.join(","));
    let _ = writeln!(out, "split-size {}", r.split_size);
    let _ = writeln!(out, "clusters {}", r.clusters);
    let _ = writeln!(out, "final-cycles {}", r.result.trace.final_cycle_count);
    let _ = writeln!(out, "recursion-depth {}", r.result.trace.recursion_depth);
    let _ = writeln!(out, "silhouette {}", r.scores.silhouette);
    let _ = writeln!(out, "davies_bouldin {}", r.scores.davies_bouldin);
    let _ = writeln!(out, "calinski_harabasz {}", r.scores.calinski_harabasz);
    out
}
