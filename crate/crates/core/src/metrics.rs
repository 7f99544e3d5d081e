//! Cluster-validity indices over a numeric feature matrix: Silhouette,
//! Davies-Bouldin and Calinski-Harabasz, with Euclidean distances.
//! Continuous attributes pass through raw; categorical attributes expand
//! to one-hot columns.

use thiserror::Error;

use crate::dataset::{AttributeKind, Dataset, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("labels length {labels} does not match row count {rows}")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster count {clusters} must be below the point count {points}")]
    TooManyClusters { clusters: usize, points: usize },
}

/// A metric value, or an explicit out-of-domain report when a denominator
/// degenerates (coincident centroids, zero within-group dispersion).
#[derive(Debug, Clone, PartialEq)]
pub enum MetricOutcome {
    Value(f64),
    OutOfDomain(&'static str),
}

impl MetricOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricOutcome::Value(v) => Some(*v),
            MetricOutcome::OutOfDomain(_) => None,
        }
    }
}

impl std::fmt::Display for MetricOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricOutcome::Value(v) => write!(f, "{v:.6}"),
            MetricOutcome::OutOfDomain(reason) => write!(f, "OUT_OF_DOMAIN ({reason})"),
        }
    }
}

/// Row-major numeric matrix.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize) -> Self {
        assert_eq!(data.len(), rows * cols);
        FeatureMatrix { data, rows, cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        squared_distance(self.row(i), self.row(j)).sqrt()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Build the metric feature space from a dataset: raw continuous columns
/// plus one one-hot column per categorical value (first-appearance order).
/// With `standardize`, every column is z-scored (columns with zero spread
/// are left at zero).
pub fn feature_matrix(dataset: &Dataset, standardize: bool) -> FeatureMatrix {
    let rows = dataset.row_count();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (col, spec) in dataset.schema.iter().enumerate() {
        match spec.kind {
            AttributeKind::Continuous => {
                columns.push(
                    dataset
                        .rows
                        .iter()
                        .map(|r| r[col].as_number().unwrap_or(f64::NAN))
                        .collect(),
                );
            }
            AttributeKind::Categorical => {
                let mut seen: Vec<&str> = Vec::new();
                for row in &dataset.rows {
                    if let Some(Value::Text(s)) = row.get(col) {
                        if !seen.contains(&s.as_str()) {
                            seen.push(s);
                        }
                    }
                }
                for value in seen {
                    columns.push(
                        dataset
                            .rows
                            .iter()
                            .map(|r| {
                                if r[col].as_text() == Some(value) {
                                    1.0
                                } else {
                                    0.0
                                }
                            })
                            .collect(),
                    );
                }
            }
        }
    }
    if standardize {
        for column in &mut columns {
            let mean = column.iter().sum::<f64>() / rows as f64;
            let var = column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / rows as f64;
            let sd = var.sqrt();
            for x in column.iter_mut() {
                *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
            }
        }
    }
    let cols = columns.len();
    let mut data = vec![0.0; rows * cols];
    for (c, column) in columns.iter().enumerate() {
        for (r, &value) in column.iter().enumerate() {
            data[r * cols + c] = value;
        }
    }
    FeatureMatrix { data, rows, cols }
}

struct Grouping {
    /// Dense cluster id per point.
    ids: Vec<usize>,
    sizes: Vec<usize>,
}

fn group(labels: &[u32], rows: usize) -> Result<Grouping, MetricsError> {
    if labels.len() != rows {
        return Err(MetricsError::LabelMismatch {
            rows,
            labels: labels.len(),
        });
    }
    let mut distinct: Vec<u32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap())
        .collect();
    let mut sizes = vec![0usize; distinct.len()];
    for &id in &ids {
        sizes[id] += 1;
    }
    Ok(Grouping { ids, sizes })
}

/// Mean over all points of (b - a) / max(a, b), where a is the mean
/// distance to co-members and b the smallest mean distance to another
/// cluster. A point alone in its cluster contributes 0.
pub fn silhouette(matrix: &FeatureMatrix, labels: &[u32]) -> Result<f64, MetricsError> {
    let t = matrix.rows();
    if t < 2 {
        return Err(MetricsError::TooFewPoints(t));
    }
    let g = group(labels, t)?;
    let k = g.sizes.len();
    if k < 2 {
        return Err(MetricsError::TooFewClusters(k));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for i in 0..t {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..t {
            if i != j {
                sums[g.ids[j]] += matrix.distance(i, j);
            }
        }
        let own = g.ids[i];
        if g.sizes[own] == 1 {
            continue; // singleton contributes 0
        }
        let a = sums[own] / (g.sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / g.sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / t as f64)
}

fn centroids(matrix: &FeatureMatrix, g: &Grouping) -> Vec<Vec<f64>> {
    let k = g.sizes.len();
    let d = matrix.cols();
    let mut centers = vec![vec![0.0f64; d]; k];
    for i in 0..matrix.rows() {
        let c = g.ids[i];
        for (acc, &x) in centers[c].iter_mut().zip(matrix.row(i)) {
            *acc += x;
        }
    }
    for (center, &size) in centers.iter_mut().zip(&g.sizes) {
        for x in center.iter_mut() {
            *x /= size as f64;
        }
    }
    centers
}

/// Mean over clusters of the worst (sigma_i + sigma_j) / d(c_i, c_j)
/// ratio, sigma being the mean member-to-centroid distance. Coincident
/// centroids of two clusters make the index infinite, reported as
/// out-of-domain.
pub fn davies_bouldin(
    matrix: &FeatureMatrix,
    labels: &[u32],
) -> Result<MetricOutcome, MetricsError> {
    let t = matrix.rows();
    if t < 2 {
        return Err(MetricsError::TooFewPoints(t));
    }
    let g = group(labels, t)?;
    let k = g.sizes.len();
    if k < 2 {
        return Err(MetricsError::TooFewClusters(k));
    }
    let centers = centroids(matrix, &g);
    let mut sigma = vec![0.0f64; k];
    for i in 0..t {
        let c = g.ids[i];
        sigma[c] += squared_distance(matrix.row(i), &centers[c]).sqrt();
    }
    for (s, &size) in sigma.iter_mut().zip(&g.sizes) {
        *s /= size as f64;
    }
    let mut sum = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j {
                continue;
            }
            let dist = squared_distance(&centers[i], &centers[j]).sqrt();
            if dist == 0.0 {
                if sigma[i] + sigma[j] == 0.0 {
                    continue; // identical degenerate clusters contribute nothing
                }
                return Ok(MetricOutcome::OutOfDomain("coincident cluster centroids"));
            }
            worst = worst.max((sigma[i] + sigma[j]) / dist);
        }
        sum += worst;
    }
    Ok(MetricOutcome::Value(sum / k as f64))
}

/// Between-group dispersion over (K-1) divided by within-group dispersion
/// over (N-K). Zero within-group dispersion is reported as out-of-domain.
pub fn calinski_harabasz(
    matrix: &FeatureMatrix,
    labels: &[u32],
) -> Result<MetricOutcome, MetricsError> {
    let t = matrix.rows();
    if t < 2 {
        return Err(MetricsError::TooFewPoints(t));
    }
    let g = group(labels, t)?;
    let k = g.sizes.len();
    if k < 2 {
        return Err(MetricsError::TooFewClusters(k));
    }
    if k >= t {
        return Err(MetricsError::TooManyClusters {
            clusters: k,
            points: t,
        });
    }
    let centers = centroids(matrix, &g);
    let d = matrix.cols();
    let mut global = vec![0.0f64; d];
    for i in 0..t {
        for (acc, &x) in global.iter_mut().zip(matrix.row(i)) {
            *acc += x;
        }
    }
    for x in global.iter_mut() {
        *x /= t as f64;
    }
    let between: f64 = (0..k)
        .map(|c| g.sizes[c] as f64 * squared_distance(&centers[c], &global))
        .sum();
    let within: f64 = (0..t)
        .map(|i| squared_distance(matrix.row(i), &centers[g.ids[i]]))
        .sum();
    if within == 0.0 {
        return Ok(MetricOutcome::OutOfDomain("zero within-group dispersion"));
    }
    Ok(MetricOutcome::Value(
        (between / (k - 1) as f64) / (within / (t - k) as f64),
    ))
}
