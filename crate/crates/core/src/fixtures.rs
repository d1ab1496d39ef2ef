//! Small graphs used by tests, the CLI and examples, plus random
//! generators for 1-coaligned 2-graphs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kgraph::KGraph;

/// Single vertex, colors {e, f} and {g, h}, with eg=he, eh=hf, fg=gf, fh=ge.
pub fn example_2graph() -> KGraph {
    KGraph::from_tables(
        2,
        &["v"],
        &[("e", 1, "v", "v"), ("f", 1, "v", "v"), ("g", 2, "v", "v"), ("h", 2, "v", "v")],
        &[["e", "g", "h", "e"], ["e", "h", "h", "f"], ["f", "g", "g", "f"], ["f", "h", "g", "e"]],
    )
    .expect("well-formed tables")
}

/// The 1-graph with one vertex and `n` loops.
pub fn loops(n: usize) -> KGraph {
    let names: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
    let edges: Vec<_> = names.iter().map(|s| (s.clone(), 1, "v".to_string(), "v".to_string())).collect();
    KGraph::build(1, vec!["v".into()], edges, Vec::new()).expect("well-formed tables")
}

/// A 1-graph with `adj[v][w]` edges from w to v (so A(v, w) = |vΛ^1 w|).
pub fn one_graph(adj: &[Vec<usize>]) -> KGraph {
    let n = adj.len();
    let vertices: Vec<String> = (0..n).map(|v| format!("v{v}")).collect();
    let mut edges = Vec::new();
    for (r, row) in adj.iter().enumerate() {
        for (s, &count) in row.iter().enumerate() {
            for c in 0..count {
                edges.push((format!("a{r}_{s}_{c}"), 1, vertices[s].clone(), vertices[r].clone()));
            }
        }
    }
    KGraph::build(1, vertices, edges, Vec::new()).expect("well-formed tables")
}

/// The Cartesian product of two 1-graphs: color 1 moves in the first
/// factor, color 2 in the second, and the squares are the obvious ones.
pub fn product(a: &KGraph, b: &KGraph) -> KGraph {
    assert!(a.k() == 1 && b.k() == 1, "product expects 1-graphs");
    let vname = |x: usize, y: usize| format!("{}.{}", a.vertex_name(x), b.vertex_name(y));
    let mut vertices = Vec::new();
    for x in 0..a.num_vertices() {
        for y in 0..b.num_vertices() {
            vertices.push(vname(x, y));
        }
    }
    let red = |e: usize, y: usize| format!("{}@{}", a.edges()[e].name, b.vertex_name(y));
    let blue = |x: usize, f: usize| format!("{}@{}", a.vertex_name(x), b.edges()[f].name);
    let mut edges = Vec::new();
    for (e, ed) in a.edges().iter().enumerate() {
        for y in 0..b.num_vertices() {
            edges.push((red(e, y), 1, vname(ed.source, y), vname(ed.range, y)));
        }
    }
    for (f, fd) in b.edges().iter().enumerate() {
        for x in 0..a.num_vertices() {
            edges.push((blue(x, f), 2, vname(x, fd.source), vname(x, fd.range)));
        }
    }
    let mut squares = Vec::new();
    for (e, ed) in a.edges().iter().enumerate() {
        for (f, fd) in b.edges().iter().enumerate() {
            squares.push([red(e, fd.range), blue(ed.source, f), blue(ed.range, f), red(e, fd.source)]);
        }
    }
    KGraph::build(2, vertices, edges, squares).expect("well-formed tables")
}

/// A single-vertex 2-graph with `n1` and `n2` loops whose squares are the
/// bijection `perm` of {0..n1} × {0..n2}: (e_i, f_j) ↦ perm[i*n2 + j] = (j', i')
/// read as f_{j'} e_{i'}.
pub fn single_vertex_2graph(n1: usize, n2: usize, perm: &[usize]) -> KGraph {
    let red: Vec<String> = (0..n1).map(|i| format!("e{i}")).collect();
    let blue: Vec<String> = (0..n2).map(|j| format!("f{j}")).collect();
    let mut edges = Vec::new();
    for r in &red {
        edges.push((r.clone(), 1, "v".to_string(), "v".to_string()));
    }
    for b in &blue {
        edges.push((b.clone(), 2, "v".to_string(), "v".to_string()));
    }
    let mut squares = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let t = perm[i * n2 + j];
            let (j2, i2) = (t / n1, t % n1);
            squares.push([red[i].clone(), blue[j].clone(), blue[j2].clone(), red[i2].clone()]);
        }
    }
    KGraph::build(2, vec!["v".into()], edges, squares).expect("well-formed tables")
}

/// A random strongly connected 1-graph on `n` vertices: a Hamiltonian
/// cycle plus random extra edges.
pub fn random_strongly_connected<R: Rng>(rng: &mut R, n: usize, max_extra: usize) -> KGraph {
    let mut adj = vec![vec![0usize; n]; n];
    for v in 0..n {
        adj[(v + 1) % n][v] += 1;
    }
    for _ in 0..rng.gen_range(0..=max_extra) {
        let (r, s) = (rng.gen_range(0..n), rng.gen_range(0..n));
        adj[r][s] += 1;
    }
    one_graph(&adj)
}

/// A random valid 1-coaligned 2-graph with at most 4 vertices: either a
/// single-vertex graph with random squares or a product of two strongly
/// connected 1-graphs.
pub fn random_coaligned_2graph<R: Rng>(rng: &mut R) -> KGraph {
    if rng.gen_bool(0.5) {
        let (n1, n2) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        loop {
            let mut perm: Vec<usize> = (0..n1 * n2).collect();
            perm.shuffle(rng);
            let g = single_vertex_2graph(n1, n2, &perm);
            if g.is_one_coaligned().coaligned {
                return g;
            }
        }
    } else {
        let (na, nb) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let a = random_strongly_connected(rng, na, 2);
        let b = random_strongly_connected(rng, nb, 2);
        product(&a, &b)
    }
}

/// Positive random vertex weights in (0.1, 1].
pub fn random_vertex_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.1..=1.0)).collect()
}
