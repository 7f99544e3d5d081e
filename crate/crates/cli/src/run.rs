//! Shared run plumbing: dataset ingestion, plan resolution, encoding and
//! a single clustering invocation, each failure attributed to its stage.

use std::path::Path;

use anyhow::{Context, Result};
use rca_cluster::clustering::{self, ClusterParams, ClusteringResult};
use rca_cluster::dataset::Dataset;
use rca_cluster::encoding::{self, EncodedDataset};
use rca_cluster::metrics::FeatureMatrix;
use rca_cluster::Rule;

pub struct LoadedRun {
    pub dataset: Dataset,
    pub plan_text: String,
    pub encoded: EncodedDataset,
    pub matrix: FeatureMatrix,
    pub input_bytes: Vec<u8>,
}

pub fn load_inputs(
    input: &Path,
    schema: Option<&Path>,
    plan_path: Option<&Path>,
    standardize: bool,
) -> Result<LoadedRun> {
    let input_bytes = std::fs::read(input)
        .with_context(|| format!("ingestion stage: reading {}", input.display()))?;
    let dataset = rca_cluster::load_dataset(input, schema).context("ingestion stage")?;
    let plan = match plan_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("encoding stage: reading plan {}", p.display()))?;
            let plan = encoding::plan_from_text(&text).context("encoding stage: parsing plan")?;
            encoding::validate_plan(&plan, &dataset)
                .context("encoding stage: plan/dataset mismatch")?;
            plan
        }
        None => encoding::fit_plan(&dataset).context("encoding stage")?,
    };
    let encoded = encoding::encode_dataset(&plan, &dataset).context("encoding stage")?;
    for warning in &encoded.warnings {
        eprintln!(
            "warning: row {} attribute {:?}: value {} outside fitted intervals, clamped to interval {}",
            warning.row, warning.attribute, warning.value, warning.interval + 1
        );
    }
    let matrix = rca_cluster::feature_matrix(&dataset, standardize);
    let plan_text = encoding::plan_to_text(&plan);
    Ok(LoadedRun {
        dataset,
        plan_text,
        encoded,
        matrix,
        input_bytes,
    })
}

pub fn run_tuple(
    encoded: &EncodedDataset,
    rules: &[u32],
    split_size: usize,
    clusters: usize,
    max_cell_length: usize,
) -> Result<ClusteringResult> {
    let mut params = ClusterParams::new(
        rules.iter().map(|&d| Rule::from_decimal(d)).collect(),
        split_size,
        clusters,
    );
    params.max_cell_length = max_cell_length;
    clustering::cluster(encoded, &params).context("clustering stage")
}
