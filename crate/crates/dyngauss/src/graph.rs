//! Dynamic graph data model: snapshots, edge-list loaders and the canonical
//! on-disk dataset format.
//!
//! A dataset on disk is one whitespace-separated edge-list file
//! (`source target [weight] timestamp`, `#` comments allowed) plus a small
//! `key = value` descriptor giving the directed flag and column layout.
//! Node ids are remapped densely to `[0, N)` at load in first-appearance
//! order and the original-id map is persisted beside the dataset.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fs;
use std::ops::Range;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::kv;

/// One edge of a snapshot. Unweighted inputs store weight 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// A graph observed at one discrete timestamp.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub timestamp_index: usize,
    pub node_count: usize,
    edges: Vec<Edge>,
    pub directed: bool,
}

impl Snapshot {
    /// Build a snapshot, canonicalizing edges: undirected edges are stored
    /// with `source <= target`, duplicates keep the first occurrence, and the
    /// list is sorted by `(source, target)`.
    pub fn new(
        timestamp_index: usize,
        node_count: usize,
        edges: Vec<Edge>,
        directed: bool,
    ) -> Result<Self> {
        let mut canonical: Vec<Edge> = Vec::with_capacity(edges.len());
        let mut seen: HashMap<(usize, usize), ()> = HashMap::with_capacity(edges.len());
        for e in edges {
            if e.source >= node_count || e.target >= node_count {
                return Err(Error::validation(format!(
                    "edge ({}, {}) outside node range [0, {node_count})",
                    e.source, e.target
                )));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::validation(format!(
                    "edge ({}, {}) has invalid weight {}",
                    e.source, e.target, e.weight
                )));
            }
            let (s, t) = if directed || e.source <= e.target {
                (e.source, e.target)
            } else {
                (e.target, e.source)
            };
            if seen.insert((s, t), ()).is_none() {
                canonical.push(Edge {
                    source: s,
                    target: t,
                    weight: e.weight,
                });
            }
        }
        canonical.sort_by_key(|e| (e.source, e.target));
        Ok(Self {
            timestamp_index,
            node_count,
            edges: canonical,
            directed,
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbor lists of the undirected view (direction dropped, self-loops
    /// kept out). Each entry is `(neighbor, weight)`, sorted by neighbor id.
    pub fn undirected_adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            if e.source == e.target {
                continue;
            }
            adj[e.source].push((e.target, e.weight));
            adj[e.target].push((e.source, e.weight));
        }
        for list in &mut adj {
            list.sort_by_key(|&(n, _)| n);
            list.dedup_by_key(|&mut (n, _)| n);
        }
        adj
    }

    /// True if the canonical pair is present.
    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        let (s, t) = if self.directed || source <= target {
            (source, target)
        } else {
            (target, source)
        };
        self.edges
            .binary_search_by_key(&(s, t), |e| (e.source, e.target))
            .is_ok()
    }
}

/// Ordered sequence of graph snapshots.
#[derive(Debug, Clone)]
pub struct TemporalGraph {
    snapshots: Vec<Snapshot>,
    pub global_node_count: usize,
    /// Original id of each internal node id. Identity for generated graphs.
    pub original_ids: Vec<i64>,
}

impl TemporalGraph {
    /// Validates ordering, contiguity from 0 and the growing-graph assumption
    /// (node counts never shrink).
    pub fn new(snapshots: Vec<Snapshot>, original_ids: Vec<i64>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::validation("temporal graph has no snapshots"));
        }
        let mut prev_count = 0usize;
        for (i, snap) in snapshots.iter().enumerate() {
            if snap.timestamp_index != i {
                return Err(Error::validation(format!(
                    "snapshot {i} has timestamp_index {}, expected {i}",
                    snap.timestamp_index
                )));
            }
            if snap.node_count < prev_count {
                return Err(Error::validation(format!(
                    "node_count shrinks at timestamp {i} ({} -> {})",
                    prev_count, snap.node_count
                )));
            }
            prev_count = snap.node_count;
        }
        let global_node_count = prev_count;
        if original_ids.len() != global_node_count {
            return Err(Error::validation(format!(
                "id map covers {} nodes, graph has {global_node_count}",
                original_ids.len()
            )));
        }
        Ok(Self {
            snapshots,
            global_node_count,
            original_ids,
        })
    }

    /// Identity id map, for generated graphs.
    pub fn with_identity_ids(snapshots: Vec<Snapshot>) -> Result<Self> {
        let n = snapshots.last().map_or(0, |s| s.node_count);
        Self::new(snapshots, (0..n as i64).collect())
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }
}

/// Per-node input features for the encoder.
#[derive(Debug, Clone)]
pub enum NodeFeatures {
    /// Identity features, represented symbolically (never materialized).
    /// Feature dimension equals the node count.
    OneHot { count: usize },
    /// Explicit row-per-node feature matrix.
    Explicit(Array2<f64>),
}

impl NodeFeatures {
    pub fn one_hot(count: usize) -> Self {
        NodeFeatures::OneHot { count }
    }

    pub fn explicit(matrix: Array2<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("feature matrix has non-finite entries"));
        }
        Ok(NodeFeatures::Explicit(matrix))
    }

    /// Feature dimension D.
    pub fn dim(&self) -> usize {
        match self {
            NodeFeatures::OneHot { count } => *count,
            NodeFeatures::Explicit(m) => m.ncols(),
        }
    }

    /// Number of feature rows (= nodes covered).
    pub fn row_count(&self) -> usize {
        match self {
            NodeFeatures::OneHot { count } => *count,
            NodeFeatures::Explicit(m) => m.nrows(),
        }
    }
}

/// Column layout of an edge-list file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLayout {
    SourceTargetTimestamp,
    SourceTargetWeightTimestamp,
}

impl ColumnLayout {
    fn column_count(self) -> usize {
        match self {
            ColumnLayout::SourceTargetTimestamp => 3,
            ColumnLayout::SourceTargetWeightTimestamp => 4,
        }
    }

    fn descriptor_value(self) -> &'static str {
        match self {
            ColumnLayout::SourceTargetTimestamp => "source target timestamp",
            ColumnLayout::SourceTargetWeightTimestamp => "source target weight timestamp",
        }
    }

    fn from_descriptor(value: &str) -> Result<Self> {
        match value {
            "source target timestamp" => Ok(ColumnLayout::SourceTargetTimestamp),
            "source target weight timestamp" => Ok(ColumnLayout::SourceTargetWeightTimestamp),
            other => Err(Error::validation(format!(
                "unknown column layout {other:?}"
            ))),
        }
    }
}

/// Edge-list file format: column layout plus directedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetFormat {
    pub columns: ColumnLayout,
    pub directed: bool,
}

const DESCRIPTOR_VERSION: u32 = 1;
pub const EDGES_FILE: &str = "edges.txt";
pub const DESCRIPTOR_FILE: &str = "descriptor.txt";
pub const IDMAP_FILE: &str = "idmap.txt";

/// Load a raw edge-list file.
///
/// Records are bucketed by the timestamp values already present in the file
/// (distinct values in sorted order become snapshot indices 0..T). Node ids
/// are remapped densely in first-appearance order; per-snapshot node counts
/// are the running maximum so the graph only ever grows.
pub fn load_temporal_graph(path: impl AsRef<Path>, format: DatasetFormat) -> Result<TemporalGraph> {
    let text = fs::read_to_string(path.as_ref())?;
    parse_edge_list(&text, format, None)
}

/// With `persisted_ids`, records already use dense internal ids (a dataset
/// directory round trip): ids are validated against the map instead of being
/// remapped by first appearance.
fn parse_edge_list(
    text: &str,
    format: DatasetFormat,
    persisted_ids: Option<Vec<i64>>,
) -> Result<TemporalGraph> {
    struct RawEdge {
        source: i64,
        target: i64,
        weight: f64,
        timestamp: i64,
    }

    let expected_cols = format.columns.column_count();
    let mut raw: Vec<RawEdge> = Vec::new();
    for (idx, line_raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line_raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != expected_cols {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {expected_cols} columns, got {}", cols.len()),
            });
        }
        let parse_id = |s: &str| -> Result<i64> {
            s.parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid node id {s:?}"),
            })
        };
        let parse_ts = |s: &str| -> Result<i64> {
            s.parse::<i64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid timestamp {s:?}"),
            })
        };
        let source = parse_id(cols[0])?;
        let target = parse_id(cols[1])?;
        let (weight, timestamp) = match format.columns {
            ColumnLayout::SourceTargetTimestamp => (1.0, parse_ts(cols[2])?),
            ColumnLayout::SourceTargetWeightTimestamp => {
                let w: f64 = cols[2].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid weight {:?}", cols[2]),
                })?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::validation(format!(
                        "line {line_no}: negative or non-finite weight {w}"
                    )));
                }
                (w, parse_ts(cols[3])?)
            }
        };
        raw.push(RawEdge {
            source,
            target,
            weight,
            timestamp,
        });
    }
    if raw.is_empty() {
        return Err(Error::validation("edge list contains no records"));
    }

    // Dense remap in first-appearance order, unless the ids are already the
    // persisted internal ids.
    let mut id_map: HashMap<i64, usize> = HashMap::new();
    let mut original_ids: Vec<i64> = Vec::new();
    let preserve = persisted_ids.is_some();
    if let Some(ids) = persisted_ids {
        original_ids = ids;
    }
    let id_count = original_ids.len();
    let mut remap = |orig: i64| -> Result<usize> {
        if preserve {
            let id = usize::try_from(orig).ok().filter(|&i| i < id_count);
            return id.ok_or_else(|| {
                Error::validation(format!(
                    "edge references id {orig}, outside the persisted id map of size {id_count}"
                ))
            });
        }
        Ok(*id_map.entry(orig).or_insert_with(|| {
            original_ids.push(orig);
            original_ids.len() - 1
        }))
    };

    // Distinct timestamps in sorted order become snapshot indices.
    let mut distinct_ts: Vec<i64> = raw.iter().map(|e| e.timestamp).collect();
    distinct_ts.sort_unstable();
    distinct_ts.dedup();
    let ts_index: HashMap<i64, usize> = distinct_ts
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i))
        .collect();

    let mut buckets: Vec<Vec<Edge>> = vec![Vec::new(); distinct_ts.len()];
    for e in &raw {
        let s = remap(e.source)?;
        let t = remap(e.target)?;
        buckets[ts_index[&e.timestamp]].push(Edge {
            source: s,
            target: t,
            weight: e.weight,
        });
    }

    let mut snapshots = Vec::with_capacity(buckets.len());
    let mut running_count = 0usize;
    for (t, edges) in buckets.into_iter().enumerate() {
        let max_id = edges
            .iter()
            .map(|e| e.source.max(e.target))
            .max()
            .expect("every bucket holds at least one record");
        running_count = running_count.max(max_id + 1);
        snapshots.push(Snapshot::new(t, running_count, edges, format.directed)?);
    }
    if preserve {
        // the persisted map fixes the global node count even when trailing
        // ids never appear in any edge
        let last = snapshots.len() - 1;
        snapshots[last].node_count = snapshots[last].node_count.max(original_ids.len());
    }
    TemporalGraph::new(snapshots, original_ids)
}

/// Write a dataset directory: canonical edge list, descriptor and id map.
///
/// Edges are written with internal ids and snapshot indices as timestamps,
/// so reloading the directory reproduces the canonicalized edge multiset
/// exactly.
pub fn write_dataset(graph: &TemporalGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let directed = graph.snapshots().first().is_some_and(|s| s.directed);
    let mut edges_out = String::from("# source target weight timestamp\n");
    for snap in graph.snapshots() {
        for e in snap.edges() {
            edges_out.push_str(&format!(
                "{} {} {} {}\n",
                e.source, e.target, e.weight, snap.timestamp_index
            ));
        }
    }
    fs::write(dir.join(EDGES_FILE), edges_out)?;

    let mut descriptor = BTreeMap::new();
    descriptor.insert("format_version".to_string(), DESCRIPTOR_VERSION.to_string());
    descriptor.insert("directed".to_string(), directed.to_string());
    descriptor.insert(
        "columns".to_string(),
        ColumnLayout::SourceTargetWeightTimestamp
            .descriptor_value()
            .to_string(),
    );
    descriptor.insert("timestamps".to_string(), graph.len().to_string());
    descriptor.insert("nodes".to_string(), graph.global_node_count.to_string());
    fs::write(dir.join(DESCRIPTOR_FILE), kv::render(&descriptor))?;

    let mut idmap_out = String::from("# internal_id original_id\n");
    for (internal, original) in graph.original_ids.iter().enumerate() {
        idmap_out.push_str(&format!("{internal} {original}\n"));
    }
    fs::write(dir.join(IDMAP_FILE), idmap_out)?;
    Ok(())
}

fn parse_idmap(text: &str) -> Result<Vec<i64>> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<i64> {
            s.and_then(|v| v.parse().ok()).ok_or(Error::Parse {
                line: idx + 1,
                msg: format!("bad id map line {line:?}"),
            })
        };
        let internal = parse(cols.next())?;
        let original = parse(cols.next())?;
        if internal as usize != entries.len() {
            return Err(Error::validation(format!(
                "id map out of order at line {}: internal id {internal}",
                idx + 1
            )));
        }
        entries.push(original);
    }
    Ok(entries)
}

/// Load a dataset directory written by [`write_dataset`] (or hand-assembled
/// with a matching descriptor).
///
/// When the id map is present, edge records are taken to use the dense
/// internal ids it defines, so a write/load cycle is exact. Without one,
/// ids are remapped by first appearance as for raw files.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<TemporalGraph> {
    let dir = dir.as_ref();
    let descriptor_text = fs::read_to_string(dir.join(DESCRIPTOR_FILE))?;
    let descriptor = kv::parse(&descriptor_text)?;
    let version: u32 = descriptor
        .get("format_version")
        .ok_or_else(|| Error::validation("descriptor missing format_version"))?
        .parse()
        .map_err(|_| Error::validation("descriptor format_version is not an integer"))?;
    if version != DESCRIPTOR_VERSION {
        return Err(Error::VersionMismatch {
            expected: DESCRIPTOR_VERSION,
            actual: version,
        });
    }
    let directed: bool = descriptor
        .get("directed")
        .ok_or_else(|| Error::validation("descriptor missing directed flag"))?
        .parse()
        .map_err(|_| Error::validation("descriptor directed flag is not a boolean"))?;
    let columns = ColumnLayout::from_descriptor(
        descriptor
            .get("columns")
            .ok_or_else(|| Error::validation("descriptor missing columns"))?,
    )?;
    let idmap_path = dir.join(IDMAP_FILE);
    let persisted_ids = if idmap_path.exists() {
        Some(parse_idmap(&fs::read_to_string(idmap_path)?)?)
    } else {
        None
    };
    let text = fs::read_to_string(dir.join(EDGES_FILE))?;
    parse_edge_list(&text, DatasetFormat { columns, directed }, persisted_ids)
}

/// Contiguous chronological train/val/test ranges over snapshot indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampSplit {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Split timestamps chronologically by ratio.
///
/// Train and validation sizes are floored and the remainder goes to test;
/// if any split ends up empty the largest split donates one timestamp.
pub fn split_timestamps(graph: &TemporalGraph, ratios: (f64, f64, f64)) -> Result<TimestampSplit> {
    let (r_train, r_val, r_test) = ratios;
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "split ratios must sum to 1, got {}",
            r_train + r_val + r_test
        )));
    }
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::validation("split ratios must be nonnegative"));
    }
    let total = graph.len();
    if total < 3 {
        return Err(Error::validation(format!(
            "need at least 3 snapshots to split, got {total}"
        )));
    }
    let mut train = (total as f64 * r_train).floor() as usize;
    let mut val = (total as f64 * r_val).floor() as usize;
    let mut test = total - train - val;
    while train == 0 || val == 0 || test == 0 {
        let donor = if train >= val && train >= test {
            &mut train
        } else if val >= test {
            &mut val
        } else {
            &mut test
        };
        *donor -= 1;
        let receiver = if train == 0 {
            &mut train
        } else if val == 0 {
            &mut val
        } else {
            &mut test
        };
        *receiver += 1;
    }
    Ok(TimestampSplit {
        train: 0..train,
        val: train..train + val,
        test: train + val..total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn fmt3(directed: bool) -> DatasetFormat {
        DatasetFormat {
            columns: ColumnLayout::SourceTargetTimestamp,
            directed,
        }
    }

    #[test]
    fn buckets_by_timestamp() {
        let g = parse_edge_list("0 1 5\n1 2 5\n0 2 6\n", fmt3(false), None).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.snapshot(0).edge_count(), 2);
        assert_eq!(g.snapshot(1).edge_count(), 1);
        assert!(g.snapshot(0).has_edge(0, 1));
        assert!(g.snapshot(0).has_edge(1, 2));
        assert!(g.snapshot(1).has_edge(0, 2));
    }

    #[test]
    fn non_integer_id_is_parse_error() {
        let err = parse_edge_list("a b 1\n", fmt3(false), None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_validation_error() {
        assert!(matches!(
            parse_edge_list("# only comments\n", fmt3(false), None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn negative_weight_is_validation_error() {
        let fmt = DatasetFormat {
            columns: ColumnLayout::SourceTargetWeightTimestamp,
            directed: false,
        };
        assert!(matches!(
            parse_edge_list("0 1 -2.0 0\n", fmt, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn undirected_edges_canonicalized_and_deduped() {
        let g = parse_edge_list("3 1 0\n1 3 0\n3 1 0\n", fmt3(false), None).unwrap();
        // ids remapped in first-appearance order: 3 -> 0, 1 -> 1
        let snap = g.snapshot(0);
        assert_eq!(snap.edge_count(), 1);
        assert_eq!(snap.edges()[0].source, 0);
        assert_eq!(snap.edges()[0].target, 1);
    }

    #[test]
    fn directed_keeps_both_orientations() {
        let g = parse_edge_list("0 1 0\n1 0 0\n", fmt3(true), None).unwrap();
        assert_eq!(g.snapshot(0).edge_count(), 2);
    }

    #[test]
    fn node_counts_never_shrink() {
        let g = parse_edge_list("0 5 0\n0 1 1\n", fmt3(false), None).unwrap();
        assert_eq!(g.snapshot(0).node_count, 2);
        // timestamp 1 references only ids 0 and 2 but keeps the running count
        assert_eq!(g.snapshot(1).node_count, 3);
        assert_eq!(g.global_node_count, 3);
    }

    #[test]
    fn many_distinct_timestamps_become_many_snapshots() {
        // Contract behind loading real benchmark dumps: one snapshot per
        // distinct timestamp value, 88 here.
        let mut text = String::new();
        for t in 0..88 {
            text.push_str(&format!("{} {} {}\n", t % 7, (t + 1) % 7, t * 10 + 3));
        }
        let g = parse_edge_list(&text, fmt3(true), None).unwrap();
        assert_eq!(g.len(), 88);
    }

    #[test]
    fn dataset_round_trip_preserves_edges() {
        let g = parse_edge_list("4 2 7\n2 9 7\n9 4 8\n4 2 9\n", fmt3(false), None).unwrap();
        let dir = tempdir().unwrap();
        write_dataset(&g, dir.path()).unwrap();
        let reloaded = load_dataset(dir.path()).unwrap();
        assert_eq!(reloaded.len(), g.len());
        for (a, b) in g.snapshots().iter().zip(reloaded.snapshots()) {
            assert_eq!(a.node_count, b.node_count);
            assert_eq!(a.edges(), b.edges());
        }
        // second write is byte-identical
        let bytes1 = fs::read(dir.path().join(EDGES_FILE)).unwrap();
        let dir2 = tempdir().unwrap();
        write_dataset(&reloaded, dir2.path()).unwrap();
        let bytes2 = fs::read(dir2.path().join(EDGES_FILE)).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn descriptor_version_checked() {
        let dir = tempdir().unwrap();
        let g = parse_edge_list("0 1 0\n1 2 1\n", fmt3(false), None).unwrap();
        write_dataset(&g, dir.path()).unwrap();
        let desc = dir.path().join(DESCRIPTOR_FILE);
        let text = fs::read_to_string(&desc)
            .unwrap()
            .replace("format_version = 1", "format_version = 99");
        fs::write(&desc, text).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::VersionMismatch {
                expected: 1,
                actual: 99
            })
        ));
    }

    #[test]
    fn split_matches_benchmark_counts() {
        let make = |t: usize| {
            let snaps = (0..t)
                .map(|i| {
                    Snapshot::new(
                        i,
                        2,
                        vec![Edge {
                            source: 0,
                            target: 1,
                            weight: 1.0,
                        }],
                        false,
                    )
                    .unwrap()
                })
                .collect();
            TemporalGraph::with_identity_ids(snaps).unwrap()
        };
        let s = split_timestamps(&make(100), (0.7, 0.1, 0.2)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 10, 20));
        let s = split_timestamps(&make(50), (0.7, 0.1, 0.2)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (35, 5, 10));
        let s = split_timestamps(&make(3), (0.7, 0.1, 0.2)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1, 1, 1));
        assert_eq!(s.train, 0..1);
        assert_eq!(s.val, 1..2);
        assert_eq!(s.test, 2..3);
        assert!(split_timestamps(&make(2), (0.7, 0.1, 0.2)).is_err());
    }
}
