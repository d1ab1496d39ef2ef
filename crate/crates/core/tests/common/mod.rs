#![allow(dead_code)]

use kgraph_kms::fixtures::random_coaligned_2graph;
use kgraph_kms::{Degree, Exact, KGraph, Path, Scalar};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn d(a: u32, b: u32) -> Degree {
    Degree::from([a, b])
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn graph(seed: u64) -> KGraph {
    random_coaligned_2graph(&mut rng(seed))
}

pub fn random_path<R: Rng>(g: &KGraph, rng: &mut R, n: &Degree) -> Path {
    let level = g.level(n).unwrap();
    level.paths[rng.gen_range(0..level.len())].clone()
}

pub fn random_degree<R: Rng>(rng: &mut R, k: usize, max: u32) -> Degree {
    Degree::new((0..k).map(|_| rng.gen_range(0..=max)).collect())
}

pub fn ex(v: i64) -> Exact {
    Exact::from_i64(v)
}

pub fn ex_c(re: i64, im: i64) -> Exact {
    Exact::new(Exact::from_i64(re).re, Exact::from_i64(im).re)
}

/// 1ᵀ Π A_i^{n_i} 1 with A_i(v, w) = |vΛ^{e_i}w|, from the edge list.
pub fn count_oracle(g: &KGraph, n: &Degree) -> u128 {
    let nv = g.num_vertices();
    let mut vec = vec![1u128; nv];
    for (i, &times) in n.entries().iter().enumerate() {
        for _ in 0..times {
            let mut next = vec![0u128; nv];
            for e in g.edges().iter().filter(|e| e.color == i) {
                next[e.source] += vec[e.range];
            }
            vec = next;
        }
    }
    vec.iter().sum()
}

/// Λ^min(μ, ν) by scanning Λ^{d(μ) ∨ d(ν)}.
pub fn lambda_min_brute(g: &KGraph, mu: &Path, nu: &Path) -> Vec<(Path, Path)> {
    let top = mu.degree().join(nu.degree());
    let zero = Degree::zero(g.k());
    let mut out = Vec::new();
    for l in &g.level(&top).unwrap().paths {
        if &g.segment(l, &zero, mu.degree()).unwrap() == mu && &g.segment(l, &zero, nu.degree()).unwrap() == nu {
            out.push((g.segment(l, mu.degree(), &top).unwrap(), g.segment(l, nu.degree(), &top).unwrap()));
        }
    }
    out.sort();
    out
}

pub fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}
