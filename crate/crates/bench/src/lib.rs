//! Shared synthetic-data builders for the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rca_cluster::dataset::{AttributeKind, AttributeSpec, Dataset};

/// Continuous dataset of the given shape with a fixed seed.
pub fn synthetic(rows: usize, attributes: usize, seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let schema: Vec<AttributeSpec> = (0..attributes)
        .map(|i| AttributeSpec {
            name: format!("attr{i}"),
            kind: AttributeKind::Continuous,
        })
        .collect();
    let cells: Vec<Vec<String>> = (0..rows)
        .map(|_| {
            (0..attributes)
                .map(|_| format!("{:.4}", rng.random_range(0.0..100.0)))
                .collect()
        })
        .collect();
    Dataset::from_cells(schema, cells).unwrap()
}
