//! Synthetic dynamic stochastic-block-model graphs.
//!
//! Snapshot 0 draws independent edges with probability `p_in` inside each
//! community and `p_out` across. Every later snapshot picks a uniform number
//! of nodes in `[move_min, move_max]`, reassigns each to a different
//! community and redraws only the moved nodes' incident edges under the new
//! memberships; every other edge carries over unchanged.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Edge, Snapshot, TemporalGraph};

/// Parameters of the dynamic SBM generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmConfig {
    pub n_nodes: usize,
    pub n_communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub move_min: usize,
    pub move_max: usize,
    pub n_timestamps: usize,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.n_communities == 0 || self.n_timestamps == 0 {
            return Err(Error::validation(
                "n_nodes, n_communities and n_timestamps must be positive",
            ));
        }
        if self.n_communities < 2 {
            return Err(Error::validation(
                "need at least 2 communities to move nodes between",
            ));
        }
        if !self.n_nodes.is_multiple_of(self.n_communities) {
            return Err(Error::validation(format!(
                "n_communities {} must divide n_nodes {} (equal-sized blocks)",
                self.n_communities, self.n_nodes
            )));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.p_out > self.p_in {
            return Err(Error::validation(format!(
                "p_out {} must not exceed p_in {}",
                self.p_out, self.p_in
            )));
        }
        if self.move_min > self.move_max || self.move_max >= self.n_nodes {
            return Err(Error::validation(format!(
                "need move_min <= move_max < n_nodes, got {}..{} for {} nodes",
                self.move_min, self.move_max, self.n_nodes
            )));
        }
        Ok(())
    }
}

/// A generated graph plus the per-step sets of moved nodes, for drift audits.
#[derive(Debug, Clone)]
pub struct SbmTrace {
    pub graph: TemporalGraph,
    /// `moved[t]` holds the nodes reassigned when producing snapshot `t + 1`.
    pub moved: Vec<Vec<usize>>,
}

pub fn generate_sbm(config: &SbmConfig) -> Result<TemporalGraph> {
    Ok(generate_sbm_traced(config)?.graph)
}

/// Like [`generate_sbm`] but also reports which nodes moved at each step.
pub fn generate_sbm_traced(config: &SbmConfig) -> Result<SbmTrace> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_nodes;
    let block = n / config.n_communities;
    let mut membership: Vec<usize> = (0..n).map(|i| i / block).collect();

    // adjacency matrix of the current snapshot, upper triangle (i < j)
    let mut present = vec![false; n * n];
    let pair = |i: usize, j: usize| {
        debug_assert!(i < j);
        i * n + j
    };
    let edge_prob = |same: bool| if same { config.p_in } else { config.p_out };

    for i in 0..n {
        for j in (i + 1)..n {
            let p = edge_prob(membership[i] == membership[j]);
            present[pair(i, j)] = rng.gen::<f64>() < p;
        }
    }

    let collect_snapshot = |t: usize, present: &[bool]| -> Result<Snapshot> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if present[pair(i, j)] {
                    edges.push(Edge {
                        source: i,
                        target: j,
                        weight: 1.0,
                    });
                }
            }
        }
        Snapshot::new(t, n, edges, false)
    };

    let mut snapshots = vec![collect_snapshot(0, &present)?];
    let mut moved_per_step = Vec::new();

    for t in 1..config.n_timestamps {
        let m = rng.gen_range(config.move_min..=config.move_max);
        // sample m distinct nodes uniformly
        let mut moved: Vec<usize> = Vec::with_capacity(m);
        while moved.len() < m {
            let candidate = rng.gen_range(0..n);
            if !moved.contains(&candidate) {
                moved.push(candidate);
            }
        }
        moved.sort_unstable();
        for &u in &moved {
            // uniformly chosen *other* community
            let shift = rng.gen_range(1..config.n_communities);
            membership[u] = (membership[u] + shift) % config.n_communities;
        }
        // redraw every pair with a moved endpoint under the new memberships
        let moved_flag: Vec<bool> = {
            let mut f = vec![false; n];
            for &u in &moved {
                f[u] = true;
            }
            f
        };
        for &u in &moved {
            #[allow(clippy::needless_range_loop)]
            for v in 0..n {
                if v == u || (moved_flag[v] && v < u) {
                    continue;
                }
                let (i, j) = if u < v { (u, v) } else { (v, u) };
                let p = edge_prob(membership[i] == membership[j]);
                present[pair(i, j)] = rng.gen::<f64>() < p;
            }
        }
        snapshots.push(collect_snapshot(t, &present)?);
        moved_per_step.push(moved);
    }

    Ok(SbmTrace {
        graph: TemporalGraph::with_identity_ids(snapshots)?,
        moved: moved_per_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn small_config() -> SbmConfig {
        SbmConfig {
            n_nodes: 300,
            n_communities: 3,
            p_in: 0.2,
            p_out: 0.01,
            move_min: 10,
            move_max: 20,
            n_timestamps: 6,
            seed: 71,
        }
    }

    #[test]
    fn rejects_indivisible_communities() {
        let mut cfg = small_config();
        cfg.n_nodes = 1000;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn timestamp_count_matches_config() {
        let mut cfg = small_config();
        cfg.n_nodes = 999;
        cfg.n_timestamps = 50;
        let g = generate_sbm(&cfg).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!(g.global_node_count, 999);
    }

    #[test]
    fn zero_probabilities_give_empty_snapshots() {
        let mut cfg = small_config();
        cfg.p_in = 0.0;
        cfg.p_out = 0.0;
        let g = generate_sbm(&cfg).unwrap();
        assert!(g.snapshots().iter().all(|s| s.edge_count() == 0));
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = small_config();
        let a = generate_sbm(&cfg).unwrap();
        let b = generate_sbm(&cfg).unwrap();
        for (sa, sb) in a.snapshots().iter().zip(b.snapshots()) {
            assert_eq!(sa.edges(), sb.edges());
        }
    }

    #[test]
    fn block_edge_fraction_near_expectation() {
        // Binomial oracle: within-block edge count should land inside
        // 4 standard deviations of W * p_in, cross-block inside 4 sd of
        // C * p_out, where W and C count candidate pairs.
        let cfg = small_config();
        let g = generate_sbm(&cfg).unwrap();
        let block = cfg.n_nodes / cfg.n_communities;
        let (mut within, mut cross) = (0u64, 0u64);
        for e in g.snapshot(0).edges() {
            if e.source / block == e.target / block {
                within += 1;
            } else {
                cross += 1;
            }
        }
        let w_pairs = (cfg.n_communities * block * (block - 1) / 2) as f64;
        let total_pairs = (cfg.n_nodes * (cfg.n_nodes - 1) / 2) as f64;
        let c_pairs = total_pairs - w_pairs;
        let w_mean = w_pairs * cfg.p_in;
        let w_sd = (w_pairs * cfg.p_in * (1.0 - cfg.p_in)).sqrt();
        let c_mean = c_pairs * cfg.p_out;
        let c_sd = (c_pairs * cfg.p_out * (1.0 - cfg.p_out)).sqrt();
        assert!(
            (within as f64 - w_mean).abs() <= 4.0 * w_sd,
            "within-block count {within} outside {w_mean} +- 4*{w_sd}"
        );
        assert!(
            (cross as f64 - c_mean).abs() <= 4.0 * c_sd,
            "cross-block count {cross} outside {c_mean} +- 4*{c_sd}"
        );
    }

    #[test]
    fn drift_bounded_by_move_max() {
        let cfg = small_config();
        let trace = generate_sbm_traced(&cfg).unwrap();
        for t in 1..cfg.n_timestamps {
            let before: HashSet<(usize, usize)> = trace
                .graph
                .snapshot(t - 1)
                .edges()
                .iter()
                .map(|e| (e.source, e.target))
                .collect();
            let after: HashSet<(usize, usize)> = trace
                .graph
                .snapshot(t)
                .edges()
                .iter()
                .map(|e| (e.source, e.target))
                .collect();
            let moved: HashSet<usize> = trace.moved[t - 1].iter().copied().collect();
            assert!(moved.len() <= cfg.move_max);
            assert!(moved.len() >= cfg.move_min);
            for &(s, t) in before.symmetric_difference(&after) {
                assert!(
                    moved.contains(&s) || moved.contains(&t),
                    "edge ({s}, {t}) changed without a moved endpoint"
                );
            }
        }
    }
}
