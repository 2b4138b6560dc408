//! Edge-list text import/export and structural queries.
//!
//!     cargo run -p qbalance --example graph_io
//!
//! The format is the one the harness accepts via `--graph-file`: first
//! line is the node count, then one `from to` pair per line, 0-based.

use qbalance::graph::Digraph;
use qbalance::rng::SeedStream;

fn main() {
    let graph = Digraph::ring_plus_random(5, 0.3, &SeedStream::new(3)).expect("generator");

    let text = graph.to_edge_list();
    println!("edge-list form:\n{text}");

    let parsed = Digraph::from_edge_list(&text).expect("round trip");
    assert_eq!(parsed, graph);
    println!("round trip: parsed graph is identical");

    println!("strongly connected: {}", graph.is_strongly_connected());
    println!("directed hop distances (rows = source):");
    for i in graph.nodes() {
        let row: Vec<String> = graph
            .nodes()
            .map(|j| match graph.distance(i, j) {
                Some(d) => d.to_string(),
                None => "-".to_string(),
            })
            .collect();
        println!("  {}", row.join(" "));
    }
}
