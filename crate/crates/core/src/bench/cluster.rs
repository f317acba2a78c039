use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::BenchError;

/// Embedding row as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub vec: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: String,
    /// Representative first, then the others in input order.
    pub members: Vec<String>,
    pub threshold: f64,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn normalized(embeddings: &[Embedding]) -> Result<DMatrix<f64>, BenchError> {
    let dim = embeddings.first().map_or(0, |e| e.vec.len());
    let mut m = DMatrix::zeros(embeddings.len(), dim);
    for (i, e) in embeddings.iter().enumerate() {
        if e.vec.len() != dim {
            return Err(BenchError::DimensionMismatch {
                id: e.id.clone(),
                expected: dim,
                found: e.vec.len(),
            });
        }
        let norm = e.vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(BenchError::ZeroVector(e.id.clone()));
        }
        for (j, x) in e.vec.iter().enumerate() {
            m[(i, j)] = x / norm;
        }
    }
    Ok(m)
}

/// Community detection over cosine similarity.
///
/// Point `i` seeds a community of every point with similarity at least
/// `threshold` to it (itself included) when that community has at least
/// `min_size` points. Communities are visited largest first, ties by the
/// smaller representative id; a community whose representative is already
/// claimed is skipped, otherwise its unclaimed members form a cluster if
/// there are still `min_size` of them.
pub fn fast_cluster(
    embeddings: &[Embedding],
    threshold: f64,
    min_size: usize,
) -> Result<Vec<Cluster>, BenchError> {
    if embeddings.is_empty() {
        return Ok(Vec::new());
    }
    let x = normalized(embeddings)?;
    let sim = &x * x.transpose();
    let n = embeddings.len();

    let mut seeds: Vec<(usize, Vec<usize>)> = (0..n)
        .filter_map(|i| {
            let members: Vec<usize> = (0..n)
                .filter(|&j| j == i || sim[(i, j)] >= threshold)
                .collect();
            (members.len() >= min_size.max(1)).then_some((i, members))
        })
        .collect();
    seeds.sort_by(|(a, ma), (b, mb)| {
        mb.len()
            .cmp(&ma.len())
            .then_with(|| embeddings[*a].id.cmp(&embeddings[*b].id))
    });

    let mut claimed = HashSet::new();
    let mut out = Vec::new();
    for (rep, members) in seeds {
        if claimed.contains(&rep) {
            continue;
        }
        let free: Vec<usize> = members
            .into_iter()
            .filter(|j| !claimed.contains(j))
            .collect();
        if free.len() < min_size.max(1) {
            continue;
        }
        claimed.extend(free.iter().copied());
        let mut ids = vec![embeddings[rep].id.clone()];
        ids.extend(
            free.iter()
                .filter(|&&j| j != rep)
                .map(|&j| embeddings[j].id.clone()),
        );
        out.push(Cluster {
            representative: embeddings[rep].id.clone(),
            members: ids,
            threshold,
        });
    }
    Ok(out)
}
