//! Exact k-hop neighborhoods per snapshot and hop-ranked triplet sampling.
//!
//! Hop distance is the unweighted shortest-path length on the undirected
//! view of a snapshot. A triplet pairs an anchor with a positive at a
//! strictly smaller hop distance than its negative, which instantiates the
//! pairwise energy ranking the training loss enforces.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Snapshot;

/// Per-node exact-hop neighbor sets up to `max_hop`.
#[derive(Debug, Clone)]
pub struct HopTable {
    /// `sets[node][k - 1]` lists nodes at exact hop distance `k`, ascending.
    sets: Vec<Vec<Vec<usize>>>,
    pub max_hop: usize,
    /// Total incident edge weight per node, for weighted draws.
    strength: Vec<f64>,
}

impl HopTable {
    pub fn node_count(&self) -> usize {
        self.sets.len()
    }

    /// Nodes at exact hop distance `k` (1-based) from `node`.
    pub fn hop_set(&self, node: usize, k: usize) -> &[usize] {
        &self.sets[node][k - 1]
    }

    /// Hop levels of `node` that contain at least one neighbor.
    pub fn nonempty_levels(&self, node: usize) -> Vec<usize> {
        (1..=self.max_hop)
            .filter(|&k| !self.hop_set(node, k).is_empty())
            .collect()
    }
}

/// Breadth-first exact-hop sets up to `max_hop` per node.
///
/// Isolated nodes simply get empty sets. Runs one BFS per source node.
pub fn build_hop_table(snapshot: &Snapshot, max_hop: usize) -> HopTable {
    assert!(max_hop >= 1, "max_hop must be at least 1");
    let n = snapshot.node_count;
    let adj = snapshot.undirected_adjacency();
    let mut strength = vec![0.0f64; n];
    for (node, list) in adj.iter().enumerate() {
        strength[node] = list.iter().map(|&(_, w)| w).sum();
    }

    let mut sets = Vec::with_capacity(n);
    let mut dist = vec![usize::MAX; n];
    for source in 0..n {
        let mut levels = vec![Vec::new(); max_hop];
        dist[source] = 0;
        let mut touched = vec![source];
        let mut queue = VecDeque::new();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            if d == max_hop {
                continue;
            }
            for &(v, _) in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = d + 1;
                    touched.push(v);
                    levels[d].push(v);
                    queue.push_back(v);
                }
            }
        }
        // adjacency lists are sorted, so each level comes out sorted already;
        // keep an explicit sort as the canonical-order guarantee
        for level in &mut levels {
            level.sort_unstable();
        }
        for u in touched {
            dist[u] = usize::MAX;
        }
        sets.push(levels);
    }
    HopTable {
        sets,
        max_hop,
        strength,
    }
}

/// One anchor/positive/negative sample with its hop annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
    pub hop_pos: usize,
    pub hop_neg: usize,
}

/// Triplets sampled for one snapshot.
#[derive(Debug, Clone)]
pub struct TripletSet {
    pub timestamp_index: usize,
    pub triplets: Vec<Triplet>,
    pub seed: u64,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

/// Options for [`sample_triplets`].
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    /// Triplets drawn per anchor and ordered hop pair.
    pub per_anchor: usize,
    /// Bias draws inside a hop set by total incident edge weight instead of
    /// uniformly.
    pub weighted: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            per_anchor: 3,
            weighted: false,
        }
    }
}

/// Sample triplets from a hop table.
///
/// For every anchor and every ordered pair of nonempty hop levels
/// `(k1, k2)` with `k1 < k2`, draws `per_anchor` triplets whose positive
/// comes from level `k1` and negative from level `k2`, so each emitted
/// triplet satisfies `hop_pos < hop_neg` by construction. Anchors without
/// two nonempty levels contribute nothing.
pub fn sample_triplets(
    table: &HopTable,
    timestamp_index: usize,
    options: SampleOptions,
    seed: u64,
) -> TripletSet {
    assert!(options.per_anchor >= 1, "per_anchor must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for anchor in 0..table.node_count() {
        let levels = table.nonempty_levels(anchor);
        if levels.len() < 2 {
            continue;
        }
        for (i, &k1) in levels.iter().enumerate() {
            for &k2 in &levels[i + 1..] {
                for _ in 0..options.per_anchor {
                    let positive = draw(table, anchor, k1, options.weighted, &mut rng);
                    let negative = draw(table, anchor, k2, options.weighted, &mut rng);
                    triplets.push(Triplet {
                        anchor,
                        positive,
                        negative,
                        hop_pos: k1,
                        hop_neg: k2,
                    });
                }
            }
        }
    }
    TripletSet {
        timestamp_index,
        triplets,
        seed,
    }
}

fn draw(
    table: &HopTable,
    anchor: usize,
    level: usize,
    weighted: bool,
    rng: &mut ChaCha8Rng,
) -> usize {
    let set = table.hop_set(anchor, level);
    debug_assert!(!set.is_empty());
    if weighted {
        let total: f64 = set.iter().map(|&v| table.strength[v]).sum();
        if total > 0.0 {
            let mut ticket = rng.gen::<f64>() * total;
            for &v in set {
                ticket -= table.strength[v];
                if ticket < 0.0 {
                    return v;
                }
            }
            return *set.last().unwrap();
        }
        // all-zero strengths fall back to the uniform draw
    }
    set[rng.gen_range(0..set.len())]
}

/// Render a triplet set as `anchor positive negative hop_pos hop_neg` lines.
pub fn dump_triplets(set: &TripletSet) -> String {
    let mut out = String::new();
    for t in &set.triplets {
        out.push_str(&format!(
            "{} {} {} {} {}\n",
            t.anchor, t.positive, t.negative, t.hop_pos, t.hop_neg
        ));
    }
    out
}
