//! Widen the encoder input layer for a grown graph and verify old nodes keep
//! their embeddings bit for bit.
//!
//! ```text
//! cargo run --example widen_warm_start
//! ```

use dyngauss::encoder::{encode_node, init_params};
use dyngauss::graph::NodeFeatures;
use dyngauss::widen::{widen_input, WidenOptions};

fn main() -> dyngauss::Result<()> {
    let old_nodes = 6;
    let new_nodes = 9;
    let params = init_params(old_nodes, 16, 4, 7);

    let (widened, map) = widen_input(&params, new_nodes, 21, WidenOptions::default())?;
    println!("index map g (new row -> source row):");
    for (j, &src) in map.g.iter().enumerate() {
        let kind = if j < old_nodes { "old" } else { "new" };
        println!("  {j} -> {src}  ({kind})");
    }
    println!(
        "replication counts per old row: {:?}",
        map.replication_count
    );

    let before = NodeFeatures::one_hot(old_nodes);
    let after = NodeFeatures::one_hot(new_nodes);
    for node in 0..old_nodes {
        let a = encode_node(&params, &before, node)?;
        let b = encode_node(&widened, &after, node)?;
        assert_eq!(a, b);
        println!("node {node}: embedding unchanged (mu[0] = {:+.6})", a.mu[0]);
    }
    for node in old_nodes..new_nodes {
        let e = encode_node(&widened, &after, node)?;
        println!(
            "node {node}: warm-started from row {} (mu[0] = {:+.6})",
            map.g[node], e.mu[0]
        );
    }
    Ok(())
}
