//! The sectioned text format for k-graphs.
//!
//! ```text
//! [k]
//! 2
//! [vertices]
//! v
//! [edges]
//! # id color source range
//! e 1 v v
//! [squares]
//! # e f f' e'  meaning ef = f'e'
//! e g h e
//! ```

use kgraph_kms::{KGraph, KGraphError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Structure(KGraphError),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    K,
    Vertices,
    Edges,
    Squares,
}

/// Parses the text into a graph; axioms are not checked here.
pub fn parse_kgraph(text: &str) -> Result<KGraph, InputError> {
    let mut section = None;
    let mut k = None;
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut squares = Vec::new();
    let mut seen = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| InputError::Syntax { line, msg };
        if content.starts_with('[') {
            let s = match content {
                "[k]" => Section::K,
                "[vertices]" => Section::Vertices,
                "[edges]" => Section::Edges,
                "[squares]" => Section::Squares,
                other => return Err(err(format!("unknown section {other}"))),
            };
            if seen.contains(&s) {
                return Err(err(format!("repeated section {content}")));
            }
            seen.push(s);
            section = Some(s);
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match section {
            None => return Err(err("content before the first section".into())),
            Some(Section::K) => {
                if k.is_some() || fields.len() != 1 {
                    return Err(err("[k] holds a single positive integer".into()));
                }
                let v: usize = fields[0].parse().map_err(|_| err(format!("bad k {:?}", fields[0])))?;
                if v == 0 {
                    return Err(err("k must be positive".into()));
                }
                k = Some(v);
            }
            Some(Section::Vertices) => vertices.extend(fields.iter().map(|s| s.to_string())),
            Some(Section::Edges) => {
                let [id, color, source, range] = fields[..] else {
                    return Err(err("edge lines are `id color source range`".into()));
                };
                let c: usize = color.parse().map_err(|_| err(format!("bad color {color:?}")))?;
                edges.push((id.to_string(), c, source.to_string(), range.to_string()));
            }
            Some(Section::Squares) => {
                let [e, f, f2, e2] = fields[..] else {
                    return Err(err("square lines are `e f f' e'`".into()));
                };
                squares.push([e, f, f2, e2].map(String::from));
            }
        }
    }
    let k = k.ok_or(InputError::Syntax { line: 0, msg: "missing [k] section".into() })?;
    if vertices.is_empty() {
        return Err(InputError::Syntax { line: 0, msg: "no vertices".into() });
    }
    KGraph::build(k, vertices, edges, squares).map_err(InputError::Structure)
}

pub fn read_kgraph(path: &std::path::Path) -> Result<KGraph, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError::Io(path.display().to_string(), e))?;
    parse_kgraph(&text)
}

/// Renders a graph in the input format; `parse_kgraph` reads it back.
pub fn write_kgraph(g: &KGraph) -> String {
    let mut out = format!("[k]\n{}\n[vertices]\n", g.k());
    for v in 0..g.num_vertices() {
        out += &format!("{}\n", g.vertex_name(v));
    }
    out += "[edges]\n";
    for e in g.edges() {
        out += &format!("{} {} {} {}\n", e.name, e.color + 1, g.vertex_name(e.source), g.vertex_name(e.range));
    }
    out += "[squares]\n";
    let mut squares = g.squares();
    squares.sort();
    let name = |e: usize| g.edges()[e].name.as_str();
    for ((e, f), (f2, e2)) in squares {
        out += &format!("{} {} {} {}\n", name(e), name(f), name(f2), name(e2));
    }
    out
}

/// The two-color single-vertex example in this format.
pub const EXAMPLE: &str = "\
[k]
2
[vertices]
v
[edges]
e 1 v v
f 1 v v
g 2 v v
h 2 v v
[squares]
e g h e
e h h f
f g g f
f h g e
";
