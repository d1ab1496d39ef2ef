mod common;

use common::*;
use kgraph_kms::fixtures::example_2graph;
use kgraph_kms::kms::{measure_from_vertex_vector, SplitStrategy};
use kgraph_kms::pathspace::*;
use kgraph_kms::{Degree, Exact, KGraph, Path};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

fn random_function<R: Rng>(g: &KGraph, rng: &mut R, fiber: &Degree, extra: u32) -> CylinderFunction<Exact> {
    let depth = fiber + &random_degree(rng, g.k(), extra);
    let n = g.level(&depth).unwrap().len();
    let w = (0..n).map(|_| ex_c(rng.gen_range(-2..=2), rng.gen_range(-1..=1))).collect();
    CylinderFunction::from_weights(g, fiber.clone(), depth, w).unwrap()
}

fn chi(g: &KGraph, p: &Path) -> CylinderFunction<Exact> {
    CylinderFunction::indicator(g, p).unwrap()
}

/// ⟨x, y⟩ on Λ^{q−m} by summing over the degree-m extensions ξη.
fn inner_brute(g: &KGraph, x: &CylinderFunction<Exact>, y: &CylinderFunction<Exact>) -> CylinderFunction<Exact> {
    let m = x.fiber().clone();
    let q = x.depth().join(y.depth()).join(&m);
    let rest = q.checked_sub(&m).unwrap();
    let heads = g.level(&m).unwrap();
    let w = g
        .level(&rest)
        .unwrap()
        .paths
        .iter()
        .map(|eta| {
            let mut acc = Exact::zero();
            for xi in heads.paths.iter().filter(|xi| xi.source() == eta.range()) {
                let p = g.compose(xi, eta).unwrap();
                acc = acc + x.value_on(g, &p).unwrap().conj() * y.value_on(g, &p).unwrap();
            }
            acc
        })
        .collect();
    CylinderFunction::from_weights(g, Degree::zero(g.k()), rest, w).unwrap()
}

fn rational_measure(g: &KGraph, seed: u64, levels: u32) -> CylinderMeasure<BigRational> {
    let eps = vec![BigRational::one(); g.num_vertices()];
    measure_from_vertex_vector(g, &eps, SplitStrategy::Random(seed), levels).unwrap()
}

#[test]
fn indicators_partition_unity() {
    let g = example_2graph();
    for n in d(2, 2).box_below() {
        let mut acc = CylinderFunction::zero(&g, n.clone());
        for p in &g.level(&n).unwrap().paths {
            acc = acc.add(&g, &chi(&g, p)).unwrap();
        }
        assert!(acc.same(&g, &CylinderFunction::constant(&g, ex(1), n.clone())).unwrap());
    }
}

#[test]
fn indicator_algebra() {
    let g = graph(5);
    for p in &g.level(&d(1, 1)).unwrap().paths {
        let ip = inner_product(&g, &chi(&g, p), &chi(&g, p)).unwrap();
        assert!(ip.same(&g, &chi(&g, &g.vertex_path(p.source()))).unwrap());
        for q in &g.level(&d(1, 0)).unwrap().paths {
            let prod = multiply(&g, &chi(&g, p), &chi(&g, q)).unwrap();
            if p.source() == q.range() {
                assert!(prod.same(&g, &chi(&g, &g.compose(p, q).unwrap())).unwrap());
            } else {
                assert!(prod.is_zero());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inner_product_matches_brute_force(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let m = random_degree(&mut r, 2, 1);
        let (x, y) = (random_function(&g, &mut r, &m, 1), random_function(&g, &mut r, &m, 1));
        prop_assert!(inner_product(&g, &x, &y).unwrap().same(&g, &inner_brute(&g, &x, &y)).unwrap());
    }

    #[test]
    fn multiplication_is_associative(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let fs: Vec<_> = (0..3).map(|_| {
            let m = random_degree(&mut r, 2, 1);
            random_function(&g, &mut r, &m, 1)
        }).collect();
        let left = multiply(&g, &multiply(&g, &fs[0], &fs[1]).unwrap(), &fs[2]).unwrap();
        let right = multiply(&g, &fs[0], &multiply(&g, &fs[1], &fs[2]).unwrap()).unwrap();
        prop_assert!(left.same(&g, &right).unwrap());
    }

    #[test]
    fn decompose_recombine_round_trip(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let (m, n) = (random_degree(&mut r, 2, 1), random_degree(&mut r, 2, 1));
        let z = random_function(&g, &mut r, &(&m + &n), 1);
        let terms = decompose(&g, &z, &m, &n).unwrap();
        prop_assert!(recombine(&g, &terms, &(&m + &n)).unwrap().same(&g, &z).unwrap());
    }

    #[test]
    fn parseval_for_standard_and_shifted_frames(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let i = r.gen_range(0..2);
        let m = Degree::unit(2, i);
        let n = Degree::unit(2, 1 - i).scale(r.gen_range(0..=2));
        let xs: Vec<_> = (0..3).map(|_| random_function(&g, &mut r, &m, 1)).collect();
        prop_assert_eq!(standard_frame(&g, &m).unwrap().parseval_witness(&g, &xs).unwrap(), None);
        prop_assert_eq!(shifted_frame(&g, &m, &n).unwrap().parseval_witness(&g, &xs).unwrap(), None);
    }

    #[test]
    fn flip_is_an_isometric_involution(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let (m, n) = (d(r.gen_range(1..=2), 0), d(0, r.gen_range(1..=2)));
        let (x, y) = (random_function(&g, &mut r, &m, 1), random_function(&g, &mut r, &n, 1));
        let (x2, y2) = (random_function(&g, &mut r, &m, 1), random_function(&g, &mut r, &n, 1));
        let once = flip(&g, &x, &y).unwrap();
        let t = vec![(x.clone(), y.clone())];
        prop_assert!(tensors_equal(&g, &flip_sum(&g, &once).unwrap(), &t).unwrap());
        let before = tensor_inner(&g, &t, &vec![(x2.clone(), y2.clone())]).unwrap();
        let after = tensor_inner(&g, &once, &flip(&g, &x2, &y2).unwrap()).unwrap();
        prop_assert!(before.same(&g, &after).unwrap());
    }

    #[test]
    fn compacts_act_as_multiplication(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let m = random_degree(&mut r, 2, 1);
        let a = random_function(&g, &mut r, &Degree::zero(2), 2);
        let x = random_function(&g, &mut r, &m, 1);
        let mut acc = CylinderFunction::zero(&g, m.clone());
        for xi in standard_frame::<Exact>(&g, &m).unwrap().elements {
            let theta = right_action(&g, &left_action(&g, &a, &xi).unwrap(), &inner_product(&g, &xi, &x).unwrap()).unwrap();
            acc = acc.add(&g, &theta).unwrap();
        }
        prop_assert!(acc.same(&g, &left_action(&g, &a, &x).unwrap()).unwrap());
    }

    #[test]
    fn transfer_matches_brute_force_and_duality(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let nu = rational_measure(&g, seed, 3);
        let n = random_degree(&mut r, 2, 1);
        let a = random_function(&g, &mut r, &Degree::zero(2), 2);
        // ∫a dR^nν = ∫ Σ_{σ^n w = z} a(w) dν(z)
        let heads = g.level(&n).unwrap();
        let sum_over_preimages: Vec<Exact> = g
            .level(a.depth())
            .unwrap()
            .paths
            .iter()
            .map(|zeta| {
                heads
                    .paths
                    .iter()
                    .filter(|eta| eta.source() == zeta.range())
                    .fold(Exact::zero(), |acc, eta| acc + a.value_on(&g, &g.compose(eta, zeta).unwrap()).unwrap())
            })
            .collect();
        let b = CylinderFunction::from_weights(&g, Degree::zero(2), a.depth().clone(), sum_over_preimages).unwrap();
        let rn = transfer(&g, &n, &nu, &d(2, 2).box_below()).unwrap();
        let lhs: Exact = integrate(&g, &a, &rn).unwrap();
        let rhs: Exact = integrate(&g, &b, &nu).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn vertex_transfer_is_the_vertex_matrix(seed in seeds()) {
        let g = graph(seed);
        let nu = rational_measure(&g, seed, 1);
        let v0 = nu.level(&g, &Degree::zero(2)).unwrap();
        for i in 0..2 {
            let got = transfer_level(&g, &Degree::unit(2, i), &nu, &Degree::zero(2)).unwrap();
            let mut want = vec![BigRational::zero(); g.num_vertices()];
            for e in g.edges().iter().filter(|e| e.color == i) {
                want[e.range] += v0[e.source].clone();
            }
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn transfer_is_a_semigroup(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let nu = rational_measure(&g, seed, 3);
        let (a, b) = (random_degree(&mut r, 2, 1), random_degree(&mut r, 2, 1));
        let q = d(1, 1);
        let inner = transfer(&g, &b, &nu, &(&q + &a).box_below()).unwrap();
        prop_assert_eq!(transfer_level(&g, &a, &inner, &q).unwrap(), transfer_level(&g, &(&a + &b), &nu, &q).unwrap());
    }

    #[test]
    fn integration_is_refinement_invariant(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let nu = rational_measure(&g, seed, 2);
        let a = random_function(&g, &mut r, &Degree::zero(2), 1);
        let fine = a.refine(&g, &d(2, 2)).unwrap();
        let x: Exact = integrate(&g, &a, &nu).unwrap();
        let y: Exact = integrate(&g, &fine, &nu).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(nu.consistency_defect(&g).unwrap().is_zero());
    }
}
