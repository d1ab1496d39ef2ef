//! Finite k-graphs given by colored edges and factorization squares.
//!
//! Morphisms are stored as edge words in color-ascending normal form. Any
//! other factorization is reached by swapping adjacent edges of different
//! colors through the square table.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::degree::Degree;

/// Default cap on the number of morphisms in a single enumerated level.
pub const DEFAULT_MORPHISM_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KGraphError {
    #[error("k must be positive")]
    ZeroK,
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("edge `{edge}` refers to unknown vertex `{vertex}`")]
    DanglingVertex { edge: String, vertex: String },
    #[error("square refers to unknown edge `{0}`")]
    DanglingEdge(String),
    #[error("edge `{edge}` has color {color}, expected 1..={k}")]
    BadColor { edge: String, color: usize, k: usize },
    #[error("square ({0}) must pair two edges of distinct colors")]
    SquareColors(String),
    #[error("k-graph fails validation: {0}")]
    Invalid(ValidationReport),
    #[error("paths {0:?} and {1:?} are not composable")]
    NotComposable(Path, Path),
    #[error("segment ({m}, {n}) out of range for a path of degree {d}")]
    SegmentRange { m: Degree, n: Degree, d: Degree },
    #[error("degree {degree} has {count} morphisms, over the budget of {budget}")]
    Budget { degree: Degree, count: f64, budget: usize },
    #[error("degree {0} has the wrong number of entries")]
    DegreeShape(Degree),
    #[error("operation needs a single-vertex 2-graph")]
    WrongShape,
    #[error("no square for the pair ({0}, {1})")]
    MissingSquare(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    /// 0-based color.
    pub color: usize,
    pub source: usize,
    pub range: usize,
}

/// A morphism in color-ascending normal form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Path {
    degree: Degree,
    range: usize,
    source: usize,
    edges: Vec<usize>,
}

impl Path {
    pub fn vertex(k: usize, v: usize) -> Self {
        Path { degree: Degree::zero(k), range: v, source: v, edges: Vec::new() }
    }

    pub fn degree(&self) -> &Degree {
        &self.degree
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn is_vertex(&self) -> bool {
        self.edges.is_empty()
    }
}

impl Ord for Path {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.degree, &self.edges, self.range).cmp(&(&other.degree, &other.edges, other.range))
    }
}

impl PartialOrd for Path {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.edges.is_empty() {
            write!(f, "v{}", self.range)
        } else {
            write!(f, "{:?}", self.edges)
        }
    }
}

/// One failed axiom together with the data that witnesses it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomFailure {
    pub axiom: &'static str,
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub failures: Vec<AxiomFailure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.failures.is_empty() {
            return write!(f, "valid");
        }
        for (i, fail) in self.failures.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} at ({})", fail.axiom, fail.witness.join(","))?;
        }
        Ok(())
    }
}

/// A k-graph checked for 1-coalignedness, with the witness on failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalignedReport {
    pub coaligned: bool,
    /// (λ, μ, number of completions) for the first failing pair.
    pub witness: Option<(usize, usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhoMap {
    Bijection(Vec<usize>),
    NotBijective(Vec<usize>),
}

impl RhoMap {
    pub fn images(&self) -> &[usize] {
        match self {
            RhoMap::Bijection(v) | RhoMap::NotBijective(v) => v,
        }
    }

    pub fn is_bijection(&self) -> bool {
        matches!(self, RhoMap::Bijection(_))
    }
}

/// The adjacency matrices A_i(v,w) = |vΛ^{e_i}w|.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexMatrices {
    pub mats: Vec<DMatrix<u64>>,
}

impl VertexMatrices {
    pub fn commute(&self) -> bool {
        for a in &self.mats {
            for b in &self.mats {
                if a * b != b * a {
                    return false;
                }
            }
        }
        true
    }

    pub fn as_f64(&self) -> Vec<DMatrix<f64>> {
        self.mats.iter().map(|m| m.map(|x| x as f64)).collect()
    }

    /// Π_i A_i^{n_i}
    pub fn power(&self, n: &Degree) -> DMatrix<f64> {
        let a = self.as_f64();
        let dim = a[0].nrows();
        let mut out = DMatrix::identity(dim, dim);
        for (i, ai) in a.iter().enumerate() {
            for _ in 0..n[i] {
                out = &out * ai;
            }
        }
        out
    }
}

/// Enumerated morphisms of one degree, sorted.
#[derive(Debug)]
pub struct Level {
    pub degree: Degree,
    pub paths: Vec<Path>,
    index: HashMap<Path, usize>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn index_of(&self, p: &Path) -> Option<usize> {
        self.index.get(p).copied()
    }
}

#[derive(Default)]
struct Cache {
    levels: HashMap<Degree, Arc<Level>>,
    segments: HashMap<(Degree, Degree, Degree), Arc<Vec<usize>>>,
}

pub struct KGraph {
    k: usize,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    /// (e, f) with color(e) < color(f), s(e) = r(f)  ↦  (f', e') with ef = f'e'.
    squares: HashMap<(usize, usize), (usize, usize)>,
    inverse: HashMap<(usize, usize), (usize, usize)>,
    duplicate_squares: Vec<(usize, usize)>,
    budget: usize,
    cache: Mutex<Cache>,
}

impl Clone for KGraph {
    fn clone(&self) -> Self {
        KGraph {
            k: self.k,
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            squares: self.squares.clone(),
            inverse: self.inverse.clone(),
            duplicate_squares: self.duplicate_squares.clone(),
            budget: self.budget,
            cache: Mutex::new(Cache::default()),
        }
    }
}

impl fmt::Debug for KGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KGraph")
            .field("k", &self.k)
            .field("vertices", &self.vertices)
            .field("edges", &self.edges)
            .field("squares", &self.squares.len())
            .finish()
    }
}

impl KGraph {
    /// Builds a k-graph from named tables. Colors in `edges` are 1-based and
    /// each square `[e, f, f', e']` means ef = f'e'.
    ///
    /// Only structural problems are errors here; axiom failures are left to
    /// [`KGraph::validate`].
    pub fn from_tables(
        k: usize,
        vertices: &[&str],
        edges: &[(&str, usize, &str, &str)],
        squares: &[[&str; 4]],
    ) -> Result<KGraph, KGraphError> {
        let vertices: Vec<String> = vertices.iter().map(|s| s.to_string()).collect();
        let edges: Vec<(String, usize, String, String)> = edges
            .iter()
            .map(|(a, c, s, r)| (a.to_string(), *c, s.to_string(), r.to_string()))
            .collect();
        let squares: Vec<[String; 4]> =
            squares.iter().map(|sq| sq.map(|s| s.to_string())).collect();
        Self::build(k, vertices, edges, squares)
    }

    pub fn build(
        k: usize,
        vertices: Vec<String>,
        edges: Vec<(String, usize, String, String)>,
        squares: Vec<[String; 4]>,
    ) -> Result<KGraph, KGraphError> {
        if k == 0 {
            return Err(KGraphError::ZeroK);
        }
        let mut vid = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if vid.insert(v.clone(), i).is_some() {
                return Err(KGraphError::DuplicateVertex(v.clone()));
            }
        }
        let mut eid = HashMap::new();
        let mut es = Vec::with_capacity(edges.len());
        for (name, color, s, r) in edges {
            if color == 0 || color > k {
                return Err(KGraphError::BadColor { edge: name, color, k });
            }
            let lookup = |v: &String| {
                vid.get(v).copied().ok_or_else(|| KGraphError::DanglingVertex {
                    edge: name.clone(),
                    vertex: v.clone(),
                })
            };
            let source = lookup(&s)?;
            let range = lookup(&r)?;
            if eid.insert(name.clone(), es.len()).is_some() {
                return Err(KGraphError::DuplicateEdge(name));
            }
            es.push(Edge { name, color: color - 1, source, range });
        }
        let mut table = HashMap::new();
        let mut duplicate_squares = Vec::new();
        for sq in &squares {
            let ids = sq
                .iter()
                .map(|s| eid.get(s).copied().ok_or_else(|| KGraphError::DanglingEdge(s.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            let (e, f, f2, e2) = (ids[0], ids[1], ids[2], ids[3]);
            if es[e].color == es[f].color {
                return Err(KGraphError::SquareColors(sq.join(" ")));
            }
            // store in color-i-then-color-j orientation
            let (key, val) = if es[e].color < es[f].color { ((e, f), (f2, e2)) } else { ((f2, e2), (e, f)) };
            if table.insert(key, val).is_some() {
                duplicate_squares.push(key);
            }
        }
        let mut inverse = HashMap::new();
        for (key, val) in &table {
            inverse.insert(*val, *key);
        }
        Ok(KGraph {
            k,
            vertices,
            edges: es,
            squares: table,
            inverse,
            duplicate_squares,
            budget: DEFAULT_MORPHISM_BUDGET,
            cache: Mutex::new(Cache::default()),
        })
    }

    /// Builds and validates, returning the failure report as an error.
    pub fn validated(self) -> Result<KGraph, KGraphError> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(KGraphError::Invalid(report))
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_id(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    pub fn vertex_id(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    /// Square table in color-ascending orientation, sorted.
    pub fn squares(&self) -> Vec<((usize, usize), (usize, usize))> {
        let mut out: Vec<_> = self.squares.iter().map(|(a, b)| (*a, *b)).collect();
        out.sort();
        out
    }

    /// The edge as a degree-e_i path.
    pub fn edge_path(&self, e: usize) -> Path {
        let edge = &self.edges[e];
        Path {
            degree: Degree::unit(self.k, edge.color),
            range: edge.range,
            source: edge.source,
            edges: vec![e],
        }
    }

    pub fn vertex_path(&self, v: usize) -> Path {
        Path::vertex(self.k, v)
    }

    /// Human-readable path, edges joined by `.`.
    pub fn path_name(&self, p: &Path) -> String {
        if p.edges.is_empty() {
            self.vertices[p.range].clone()
        } else {
            p.edges.iter().map(|&e| self.edges[e].name.as_str()).collect::<Vec<_>>().join(".")
        }
    }

    /// Parses a path from edge names; the word may be in any composable order.
    pub fn path_from_names(&self, names: &[&str]) -> Result<Path, KGraphError> {
        let mut p: Option<Path> = None;
        for n in names {
            let e = self.edge_id(n).ok_or_else(|| KGraphError::DanglingEdge(n.to_string()))?;
            let q = self.edge_path(e);
            p = Some(match p {
                None => q,
                Some(p) => self.compose(&p, &q)?,
            });
        }
        p.ok_or(KGraphError::WrongShape)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let name = |e: usize| self.edges[e].name.clone();
        for &(e, f) in &self.duplicate_squares {
            failures.push(AxiomFailure { axiom: "square_duplicate", witness: vec![name(e), name(f)] });
        }
        let mut shape_ok = true;
        for (&(e, f), &(f2, e2)) in &self.squares {
            let (ee, ef, ef2, ee2) = (&self.edges[e], &self.edges[f], &self.edges[f2], &self.edges[e2]);
            let ok = ee.color == ee2.color
                && ef.color == ef2.color
                && ee.source == ef.range
                && ef2.range == ee.range
                && ee2.source == ef.source
                && ef2.source == ee2.range;
            if !ok {
                shape_ok = false;
                failures.push(AxiomFailure {
                    axiom: "square_shape",
                    witness: vec![name(e), name(f), name(f2), name(e2)],
                });
            }
        }
        // totality and bijectivity for every ordered color pair i<j
        let mut images: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (&key, &val) in &self.squares {
            if let Some(prev) = images.insert(val, key) {
                let (lo, hi) = if prev < key { (prev, key) } else { (key, prev) };
                failures.push(AxiomFailure {
                    axiom: "square_not_injective",
                    witness: vec![name(lo.0), name(lo.1), name(hi.0), name(hi.1)],
                });
            }
        }
        for e in 0..self.edges.len() {
            for f in 0..self.edges.len() {
                let (ce, cf) = (self.edges[e].color, self.edges[f].color);
                if self.edges[e].source != self.edges[f].range || ce == cf {
                    continue;
                }
                if ce < cf && !self.squares.contains_key(&(e, f)) {
                    failures.push(AxiomFailure { axiom: "square_missing", witness: vec![name(e), name(f)] });
                }
                if ce > cf && shape_ok && !images.contains_key(&(e, f)) {
                    failures.push(AxiomFailure { axiom: "square_not_surjective", witness: vec![name(e), name(f)] });
                }
            }
        }
        if failures.is_empty() && self.k >= 3 {
            failures.extend(self.hexagon_failures());
        }
        for v in 0..self.vertices.len() {
            for i in 0..self.k {
                if !self.edges.iter().any(|e| e.color == i && e.range == v) {
                    failures.push(AxiomFailure {
                        axiom: "source",
                        witness: vec![self.vertices[v].clone(), (i + 1).to_string()],
                    });
                }
                if !self.edges.iter().any(|e| e.color == i && e.source == v) {
                    failures.push(AxiomFailure {
                        axiom: "sink",
                        witness: vec![self.vertices[v].clone(), (i + 1).to_string()],
                    });
                }
            }
        }
        failures.sort_by(|a, b| (a.axiom, &a.witness).cmp(&(b.axiom, &b.witness)));
        ValidationReport { failures }
    }

    fn hexagon_failures(&self) -> Vec<AxiomFailure> {
        let mut out = Vec::new();
        let n = self.edges.len();
        for a in 0..n {
            for b in 0..n {
                if self.edges[a].source != self.edges[b].range {
                    continue;
                }
                for c in 0..n {
                    if self.edges[b].source != self.edges[c].range {
                        continue;
                    }
                    let (ca, cb, cc) = (self.edges[a].color, self.edges[b].color, self.edges[c].color);
                    if !(ca < cb && cb < cc) {
                        continue;
                    }
                    // the two reduced words for reversing three letters
                    let left = [0, 1, 0].iter().try_fold(vec![a, b, c], |w, &p| self.swap_at(w, p));
                    let right = [1, 0, 1].iter().try_fold(vec![a, b, c], |w, &p| self.swap_at(w, p));
                    if left.is_err() || right.is_err() || left != right {
                        let nm = |e: usize| self.edges[e].name.clone();
                        out.push(AxiomFailure { axiom: "hexagon", witness: vec![nm(a), nm(b), nm(c)] });
                    }
                }
            }
        }
        out
    }

    /// Replaces the adjacent pair at positions (p, p+1) by the other
    /// factorization of the same 2-colored morphism.
    fn swap_at(&self, mut w: Vec<usize>, p: usize) -> Result<Vec<usize>, KGraphError> {
        let (a, b) = (w[p], w[p + 1]);
        let (ca, cb) = (self.edges[a].color, self.edges[b].color);
        let table = if ca < cb { &self.squares } else { &self.inverse };
        let &(x, y) = table
            .get(&(a, b))
            .ok_or_else(|| KGraphError::MissingSquare(self.edges[a].name.clone(), self.edges[b].name.clone()))?;
        w[p] = x;
        w[p + 1] = y;
        Ok(w)
    }

    /// Rewrites a composable word into the factorization with the given
    /// color pattern (same color multiset). Bubble sort on target slots;
    /// same-colored letters never cross, so slots are well defined.
    fn rewrite(&self, word: &[usize], target: &[usize]) -> Result<Vec<usize>, KGraphError> {
        let mut slots_by_color: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for (slot, &c) in target.iter().enumerate() {
            slots_by_color[c].push(slot);
        }
        let mut seen = vec![0usize; self.k];
        let mut keys: Vec<usize> = word
            .iter()
            .map(|&e| {
                let c = self.edges[e].color;
                let s = slots_by_color[c][seen[c]];
                seen[c] += 1;
                s
            })
            .collect();
        let mut w = word.to_vec();
        let n = w.len();
        for pass in 0..n {
            let mut swapped = false;
            for p in 0..n.saturating_sub(1 + pass) {
                if keys[p] > keys[p + 1] {
                    w = self.swap_at(w, p)?;
                    keys.swap(p, p + 1);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        Ok(w)
    }

    fn degree_of_word(&self, w: &[usize]) -> Degree {
        let mut d = vec![0u32; self.k];
        for &e in w {
            d[self.edges[e].color] += 1;
        }
        Degree::new(d)
    }

    fn path_from_word(&self, range: usize, w: Vec<usize>) -> Result<Path, KGraphError> {
        let degree = self.degree_of_word(&w);
        let nf = self.rewrite(&w, &degree.color_pattern())?;
        let source = nf.last().map_or(range, |&e| self.edges[e].source);
        Ok(Path { degree, range, source, edges: nf })
    }

    pub fn compose(&self, p: &Path, q: &Path) -> Result<Path, KGraphError> {
        if p.source != q.range {
            return Err(KGraphError::NotComposable(p.clone(), q.clone()));
        }
        if q.is_vertex() {
            return Ok(p.clone());
        }
        if p.is_vertex() {
            return Ok(q.clone());
        }
        let mut w = p.edges.clone();
        w.extend_from_slice(&q.edges);
        self.path_from_word(p.range, w)
    }

    /// λ(m, n) from the factorization λ = λ(0,m) λ(m,n) λ(n,d(λ)).
    pub fn segment(&self, p: &Path, m: &Degree, n: &Degree) -> Result<Path, KGraphError> {
        if m.k() != self.k || n.k() != self.k || !m.le(n) || !n.le(&p.degree) {
            return Err(KGraphError::SegmentRange { m: m.clone(), n: n.clone(), d: p.degree.clone() });
        }
        let mid = n.checked_sub(m).expect("m <= n");
        let tail = p.degree.checked_sub(n).expect("n <= d");
        let mut target = m.color_pattern();
        target.extend(mid.color_pattern());
        target.extend(tail.color_pattern());
        let w = self.rewrite(&p.edges, &target)?;
        let (a, b) = (m.total() as usize, n.total() as usize);
        let range = if a == 0 { p.range } else { self.edges[w[a - 1]].source };
        let edges = w[a..b].to_vec();
        let source = edges.last().map_or(range, |&e| self.edges[e].source);
        Ok(Path { degree: mid, range, source, edges })
    }

    pub fn vertex_matrices(&self) -> VertexMatrices {
        let n = self.vertices.len();
        let mut mats = vec![DMatrix::<u64>::zeros(n, n); self.k];
        for e in &self.edges {
            mats[e.color][(e.range, e.source)] += 1;
        }
        VertexMatrices { mats }
    }

    /// |Λ^n| from the vertex matrices, as a float to avoid overflow.
    pub fn count_morphisms(&self, n: &Degree) -> f64 {
        self.vertex_matrices().power(n).sum()
    }

    /// All degree-n morphisms in normal form, sorted.
    pub fn enumerate_morphisms(&self, n: &Degree) -> Result<Vec<Path>, KGraphError> {
        Ok(self.level(n)?.paths.clone())
    }

    /// The cached enumeration of Λ^n.
    pub fn level(&self, n: &Degree) -> Result<Arc<Level>, KGraphError> {
        if n.k() != self.k {
            return Err(KGraphError::DegreeShape(n.clone()));
        }
        if let Some(l) = self.cache.lock().unwrap().levels.get(n) {
            return Ok(l.clone());
        }
        let count = self.count_morphisms(n);
        if count > self.budget as f64 {
            return Err(KGraphError::Budget { degree: n.clone(), count, budget: self.budget });
        }
        let pattern = n.color_pattern();
        let mut by_range: Vec<Vec<Vec<usize>>> = vec![Vec::new(); self.k];
        for c in 0..self.k {
            by_range[c] = vec![Vec::new(); self.vertices.len()];
        }
        for (i, e) in self.edges.iter().enumerate() {
            by_range[e.color][e.range].push(i);
        }
        let mut paths = Vec::with_capacity(count as usize);
        for v in 0..self.vertices.len() {
            let mut stack = vec![(v, Vec::with_capacity(pattern.len()))];
            while let Some((cur, word)) = stack.pop() {
                if word.len() == pattern.len() {
                    paths.push(Path { degree: n.clone(), range: v, source: cur, edges: word });
                    continue;
                }
                let c = pattern[word.len()];
                for &e in by_range[c][cur].iter().rev() {
                    let mut w2 = word.clone();
                    w2.push(e);
                    stack.push((self.edges[e].source, w2));
                }
            }
        }
        paths.sort();
        let index = paths.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let level = Arc::new(Level { degree: n.clone(), paths, index });
        self.cache.lock().unwrap().levels.insert(n.clone(), level.clone());
        Ok(level)
    }

    /// For each path λ in Λ^q, the index of λ(a, b) in Λ^{b−a}.
    pub fn segment_map(&self, q: &Degree, a: &Degree, b: &Degree) -> Result<Arc<Vec<usize>>, KGraphError> {
        let key = (q.clone(), a.clone(), b.clone());
        if let Some(m) = self.cache.lock().unwrap().segments.get(&key) {
            return Ok(m.clone());
        }
        let level = self.level(q)?;
        let target = self.level(&b.checked_sub(a).ok_or_else(|| KGraphError::SegmentRange {
            m: a.clone(),
            n: b.clone(),
            d: q.clone(),
        })?)?;
        let map = level
            .paths
            .iter()
            .map(|p| {
                let s = self.segment(p, a, b)?;
                Ok(target.index_of(&s).expect("segments are enumerated"))
            })
            .collect::<Result<Vec<_>, KGraphError>>()?;
        let map = Arc::new(map);
        self.cache.lock().unwrap().segments.insert(key, map.clone());
        Ok(map)
    }

    /// Λ^min(μ, ν): pairs (ξ, η) with μξ = νη of degree d(μ) ∨ d(ν).
    pub fn lambda_min(&self, mu: &Path, nu: &Path) -> Result<Vec<(Path, Path)>, KGraphError> {
        let d = mu.degree.join(&nu.degree);
        let xi_deg = d.checked_sub(&mu.degree).expect("join");
        let eta_deg = d.checked_sub(&nu.degree).expect("join");
        let mut ext: HashMap<Path, Vec<Path>> = HashMap::new();
        for xi in self.level(&xi_deg)?.paths.iter().filter(|p| p.range == mu.source) {
            ext.entry(self.compose(mu, xi)?).or_default().push(xi.clone());
        }
        let mut out = BTreeSet::new();
        for eta in self.level(&eta_deg)?.paths.iter().filter(|p| p.range == nu.source) {
            if let Some(xis) = ext.get(&self.compose(nu, eta)?) {
                for xi in xis {
                    out.insert((xi.clone(), eta.clone()));
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Checks that every pair of differently colored edges with a common
    /// source has exactly one completing square.
    pub fn is_one_coaligned(&self) -> CoalignedReport {
        for (l, el) in self.edges.iter().enumerate() {
            for (m, em) in self.edges.iter().enumerate() {
                if el.color >= em.color || el.source != em.source {
                    continue;
                }
                // ηλ = ζμ with η of μ's color, ζ of λ's color; ζμ is already
                // in normal form, so count η whose rewrite of ηλ ends in μ.
                let count = self
                    .edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.color == em.color && e.source == el.range)
                    .filter(|(eta, _)| self.inverse.get(&(*eta, l)).is_some_and(|&(_, mu)| mu == m))
                    .count();
                if count != 1 {
                    return CoalignedReport { coaligned: false, witness: Some((l, m, count)) };
                }
            }
        }
        CoalignedReport { coaligned: true, witness: None }
    }

    /// For a single-vertex 2-graph: ρ_f(e) = (ef)(e_2, e_1+e_2) for each
    /// color-2 edge f, as a map on the color-1 edges (listed by edge id).
    pub fn rho_f_maps(&self) -> Result<Vec<(usize, RhoMap)>, KGraphError> {
        if self.k != 2 || self.vertices.len() != 1 {
            return Err(KGraphError::WrongShape);
        }
        let reds: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].color == 0).collect();
        let blues: Vec<usize> = (0..self.edges.len()).filter(|&e| self.edges[e].color == 1).collect();
        let mut out = Vec::new();
        for &f in &blues {
            let mut images = Vec::with_capacity(reds.len());
            for &e in &reds {
                let &(_, e2) = self
                    .squares
                    .get(&(e, f))
                    .ok_or_else(|| KGraphError::MissingSquare(self.edges[e].name.clone(), self.edges[f].name.clone()))?;
                images.push(e2);
            }
            let distinct: BTreeSet<_> = images.iter().collect();
            let map = if distinct.len() == reds.len() { RhoMap::Bijection(images) } else { RhoMap::NotBijective(images) };
            out.push((f, map));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn example() -> KGraph {
        crate::fixtures::example_2graph()
    }

    #[test]
    fn example_is_valid() {
        assert!(example().validate().is_valid());
    }

    #[test]
    fn deleted_square_is_reported() {
        let g = KGraph::from_tables(
            2,
            &["v"],
            &[("e", 1, "v", "v"), ("f", 1, "v", "v"), ("g", 2, "v", "v"), ("h", 2, "v", "v")],
            &[["e", "h", "h", "f"], ["f", "g", "g", "f"], ["f", "h", "g", "e"]],
        )
        .unwrap();
        let report = g.validate();
        assert!(report
            .failures
            .iter()
            .any(|f| f.axiom == "square_missing" && f.witness == vec!["e".to_string(), "g".to_string()]));
    }

    #[test]
    fn dangling_ids_are_structural_errors() {
        let r = KGraph::from_tables(1, &["v"], &[("e", 1, "v", "w")], &[]);
        assert!(matches!(r, Err(KGraphError::DanglingVertex { .. })));
    }

    #[test]
    fn compose_rewrites_to_normal_form() {
        let g = example();
        let e = g.edge_path(g.edge_id("e").unwrap());
        let ge = g.compose(&g.edge_path(g.edge_id("g").unwrap()), &e).unwrap();
        assert_eq!(g.path_name(&ge), "f.h");
        let h = g.segment(&ge, &Degree::from([1, 0]), &Degree::from([1, 1])).unwrap();
        assert_eq!(g.path_name(&h), "h");
    }

    #[test]
    fn enumeration_counts() {
        let g = example();
        assert_eq!(g.enumerate_morphisms(&Degree::from([1, 1])).unwrap().len(), 4);
        assert_eq!(g.enumerate_morphisms(&Degree::from([0, 0])).unwrap().len(), 1);
        let two_loops = KGraph::from_tables(1, &["v"], &[("a", 1, "v", "v"), ("b", 1, "v", "v")], &[]).unwrap();
        assert_eq!(two_loops.enumerate_morphisms(&Degree::from([3])).unwrap().len(), 8);
    }

    #[test]
    fn rho_maps_of_example() {
        let g = example();
        let maps = g.rho_f_maps().unwrap();
        let (e, f) = (g.edge_id("e").unwrap(), g.edge_id("f").unwrap());
        assert_eq!(maps[0].1, RhoMap::Bijection(vec![e, f]));
        assert_eq!(maps[1].1, RhoMap::Bijection(vec![f, e]));
        assert!(g.is_one_coaligned().coaligned);
    }

    #[test]
    fn budget_is_enforced() {
        let g = example().with_budget(10);
        assert!(matches!(g.level(&Degree::from([2, 2])), Err(KGraphError::Budget { .. })));
    }
}
