use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::DeltaProgram;
use crate::model::{AttrType, Database, DatabaseBuilder, Value};
use crate::oracles::fixtures::schema_of;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub n: usize,
    /// Each edge once, as `(u, v)` with `u < v`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges = edges
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        Graph { n, edges }
    }

    pub fn triangle() -> Self {
        Graph::new(3, [(0, 1), (1, 2), (0, 2)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcVariant {
    /// Three rules whose minimum stabilizing set is a minimum vertex cover.
    Independent3Rule,
    /// The edge rule alone; its best firing sequence deletes a minimum
    /// vertex cover.
    Step1Rule,
}

const EDGE_RULE: &str = "-VC(x) :- E(x, y), VC(x), VC(y).\n";
const EDGE_GUARDS: &str = "-VC(x) :- VC(x), -E(x, y).\n-VC(y) :- VC(y), -E(x, y).\n";

/// `E` holds both directions of every edge and `VC` every vertex.
pub fn encode_vertex_cover(graph: &Graph, variant: VcVariant) -> (DeltaProgram, Database) {
    let schema = schema_of(&[
        ("E", &[("x", AttrType::Int), ("y", AttrType::Int)]),
        ("VC", &[("x", AttrType::Int)]),
    ]);
    let text = match variant {
        VcVariant::Independent3Rule => format!("{EDGE_RULE}{EDGE_GUARDS}"),
        VcVariant::Step1Rule => EDGE_RULE.to_string(),
    };
    let program = DeltaProgram::parse(&text, &schema).expect("vertex cover program");
    let mut b = DatabaseBuilder::new(schema);
    for &(u, v) in &graph.edges {
        for (x, y) in [(u, v), (v, u)] {
            b.insert("E", vec![Value::Int(x as i64), Value::Int(y as i64)])
                .expect("edge");
        }
    }
    for v in 0..graph.n {
        b.insert("VC", vec![Value::Int(v as i64)]).expect("vertex");
    }
    (program, b.build())
}

/// Size of a minimum vertex cover, by trying vertex subsets in increasing
/// size. Intended for small graphs.
pub fn min_vertex_cover(graph: &Graph) -> usize {
    assert!(graph.n < 32, "graph too large for exhaustive search");
    (0u32..1 << graph.n)
        .filter(|mask| {
            graph
                .edges
                .iter()
                .all(|&(u, v)| mask & (1 << u) != 0 || mask & (1 << v) != 0)
        })
        .map(u32::count_ones)
        .min()
        .unwrap_or(0) as usize
}

/// Connected graph on `n` vertices: a random spanning tree plus each other
/// pair with probability `density`.
pub fn random_connected_graph(n: usize, density: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(density) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}
