use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{edge_key, Adjacency, EdgeExample, Graph, GraphError};

/// Sampled 1-hop neighbourhood of `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborhoodSample {
    pub center: usize,
    pub neighbor_ids: Vec<usize>,
    pub include_self: bool,
    /// No eligible neighbour existed; the encoder falls back to the self path.
    pub isolated: bool,
}

/// Seeded wrapper over [`sample_neighbors_with`].
pub fn sample_neighbors(
    adj: &Adjacency,
    center: usize,
    sample_size: usize,
    time_cutoff: Option<f64>,
    seed: u64,
) -> NeighborhoodSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_neighbors_with(adj, center, sample_size, time_cutoff, false, &mut rng)
}

/// Draws up to `sample_size` adjacency entries of `center` without
/// replacement. Entries at or after `time_cutoff` are ineligible. When
/// `pad` is set and fewer than `sample_size` are eligible, the remainder is
/// filled with replacement.
pub fn sample_neighbors_with<R: Rng + ?Sized>(
    adj: &Adjacency,
    center: usize,
    sample_size: usize,
    time_cutoff: Option<f64>,
    pad: bool,
    rng: &mut R,
) -> NeighborhoodSample {
    sample_neighbors_excluding(adj, center, sample_size, time_cutoff, None, pad, rng)
}

/// As [`sample_neighbors_with`], but every adjacency entry equal to
/// `exclude` is ineligible. Used when scoring the pair `(center, exclude)`
/// so that an edge never feeds its own prediction.
pub fn sample_neighbors_excluding<R: Rng + ?Sized>(
    adj: &Adjacency,
    center: usize,
    sample_size: usize,
    time_cutoff: Option<f64>,
    exclude: Option<usize>,
    pad: bool,
    rng: &mut R,
) -> NeighborhoodSample {
    let eligible: Vec<usize> = adj
        .neighbors(center)
        .iter()
        .zip(adj.neighbor_times(center))
        .filter(|(&n, t)| {
            Some(n) != exclude && time_cutoff.map_or(true, |cut| t.map_or(true, |t| t < cut))
        })
        .map(|(&n, _)| n)
        .collect();
    let neighbor_ids = if eligible.len() > sample_size {
        index::sample(rng, eligible.len(), sample_size)
            .into_iter()
            .map(|i| eligible[i])
            .collect()
    } else {
        let mut ids = eligible.clone();
        if pad && !eligible.is_empty() {
            while ids.len() < sample_size {
                ids.push(eligible[rng.gen_range(0..eligible.len())]);
            }
        }
        ids
    };
    NeighborhoodSample {
        center,
        isolated: neighbor_ids.is_empty(),
        neighbor_ids,
        include_self: true,
    }
}

/// Draws `positives.len()` label-0 pairs that are not edges of `graph`.
pub fn sample_negatives(
    graph: &Graph,
    positives: &[EdgeExample],
    seed: u64,
) -> Result<Vec<EdgeExample>, GraphError> {
    let nodes: Vec<usize> = (0..graph.num_nodes()).collect();
    sample_negatives_among(graph, &nodes, positives.len(), positives, seed)
}

/// Draws `count` non-edges with both endpoints in `nodes`. Each negative
/// copies the timestamp of the positive at the same position (if any), so
/// chronological neighbourhoods stay aligned.
pub fn sample_negatives_among(
    graph: &Graph,
    nodes: &[usize],
    count: usize,
    positives: &[EdgeExample],
    seed: u64,
) -> Result<Vec<EdgeExample>, GraphError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if nodes.len() < 2 {
        return Err(GraphError::TooFewNodes(nodes.len()));
    }
    let observed = graph.edge_set();
    let allowed: HashSet<usize> = nodes.iter().copied().collect();
    let inside = observed
        .iter()
        .filter(|(a, b)| a != b && allowed.contains(a) && allowed.contains(b))
        .count();
    let possible = nodes.len() * (nodes.len() - 1) / 2;
    let budget = 100 * count + 1000;
    if inside >= possible {
        return Err(GraphError::NegativeBudget {
            wanted: count,
            found: 0,
            budget,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == budget {
            return Err(GraphError::NegativeBudget {
                wanted: count,
                found: out.len(),
                budget,
            });
        }
        attempts += 1;
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        if a == b || observed.contains(&edge_key(a, b)) {
            continue;
        }
        let ts = positives.get(out.len()).and_then(|p| p.timestamp);
        out.push(EdgeExample::negative(a, b, ts));
    }
    Ok(out)
}
