//! Client data partitioning: seeded uniform splits and label-skewed
//! Dirichlet splits.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};

use crate::data::PartitionPlan;
use crate::error::{Error, Result};

/// Shuffle [0, n) and split into `clients` near-equal parts
/// (sizes differ by at most one).
pub fn partition_uniform(n: usize, clients: usize, seed: u64) -> Result<PartitionPlan> {
    if clients == 0 || n < clients {
        return Err(Error::PartitionTooSmall { n, clients });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);

    let base = n / clients;
    let remainder = n % clients;
    let mut assignments = Vec::with_capacity(clients);
    let mut start = 0;
    for j in 0..clients {
        let size = base + usize::from(j < remainder);
        assignments.push(indices[start..start + size].to_vec());
        start += size;
    }
    Ok(PartitionPlan { assignments })
}

/// Skewed label partition: for each class, a Dirichlet(alpha) proportion
/// vector decides how many of that class's (shuffled) indices each client
/// receives. A client left empty takes one index from the largest client.
pub fn partition_dirichlet(
    y: &Array1<f64>,
    clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<PartitionPlan> {
    let n = y.len();
    if clients == 0 || n < clients {
        return Err(Error::PartitionTooSmall { n, clients });
    }
    if clients == 1 {
        return Ok(PartitionPlan {
            assignments: vec![(0..n).collect()],
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new(); clients];

    for class in [0.0, 1.0] {
        let mut class_indices: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        if class_indices.is_empty() {
            continue;
        }
        class_indices.shuffle(&mut rng);

        let dirichlet =
            Dirichlet::new(&vec![alpha; clients]).map_err(|e| Error::config(e.to_string()))?;
        let proportions = dirichlet.sample(&mut rng);

        // Cut the shuffled indices at the rounded cumulative proportions.
        let count = class_indices.len() as f64;
        let mut cumulative = 0.0;
        let mut start = 0;
        for (j, p) in proportions.iter().enumerate() {
            cumulative += p;
            let end = if j + 1 == clients {
                class_indices.len()
            } else {
                ((cumulative * count).round() as usize)
                    .clamp(start, class_indices.len())
            };
            assignments[j].extend_from_slice(&class_indices[start..end]);
            start = end;
        }
    }

    // Repair empty clients so M stays fixed.
    loop {
        let Some(empty) = assignments.iter().position(Vec::is_empty) else {
            break;
        };
        let largest = assignments
            .iter()
            .enumerate()
            .max_by_key(|(_, a)| a.len())
            .map(|(j, _)| j)
            .expect("at least one client");
        let moved = assignments[largest].pop().expect("largest is non-empty");
        assignments[empty].push(moved);
    }

    Ok(PartitionPlan { assignments })
}
