use kgraph_kms::fixtures::{example_2graph, random_coaligned_2graph};
use kgraph_kms::nt::{cross_product, multiply, NtElement};
use kgraph_kms::pathspace::CylinderFunction;
use kgraph_kms::representations::*;
use kgraph_kms::{Degree, Exact, KGraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn d(a: u32, b: u32) -> Degree {
    Degree::from([a, b])
}

fn chi(g: &KGraph, names: &[&str]) -> CylinderFunction<Exact> {
    CylinderFunction::indicator(g, &g.path_from_names(names).unwrap()).unwrap()
}

#[test]
fn formula_holds_as_fock_identity() {
    let g = example_2graph();
    for x in ["e", "f"] {
        for y in ["g", "h"] {
            let c = check_formula_fock(&g, &chi(&g, &[x]), &chi(&g, &[y]), &d(2, 2), &d(1, 1)).unwrap();
            assert!(c.pass(), "{x} {y}: {:?}", c.witness);
            assert!(c.cases > 0);
        }
    }
}

#[test]
fn help_formula_on_indicators() {
    let g = example_2graph();
    for x in ["e", "f"] {
        for y in ["g", "h"] {
            assert!(check_help_formula(&g, &chi(&g, &[x]), &chi(&g, &[y])).unwrap());
        }
    }
}

#[test]
fn cross_product_agrees_with_fock_operators() {
    let g = example_2graph();
    for y in [vec!["g"], vec!["e"], vec!["e", "g"]] {
        for x in [vec!["e"], vec!["f"], vec!["f", "h"], vec!["h"]] {
            let (cy, cx) = (chi(&g, &y), chi(&g, &x));
            let e = cross_product(&g, &cy, &cx).unwrap();
            let lhs = FockOp::word(vec![FockFactor::Annihilate(cy), FockFactor::Create(cx)]);
            let c = compare_on_window(&g, "cross", &d(3, 3), &d(1, 1), &d(1, 1), |v| lhs.apply(&g, v), |v| {
                fock_apply_element(&g, &e, v)
            })
            .unwrap();
            assert!(c.pass(), "{y:?} {x:?}: {:?}", c.witness);
        }
    }
}

#[test]
fn nica_and_frame_projection_dichotomy() {
    let g = example_2graph();
    for (m, p) in [(d(1, 0), d(0, 1)), (d(0, 0), d(1, 1)), (d(1, 0), d(1, 0)), (d(1, 1), d(0, 1))] {
        let c = check_nica_covariance::<Exact>(&g, &m, &p, &d(2, 2), &d(1, 1)).unwrap();
        assert!(c.pass(), "{:?}", c.witness);
    }
    for n in [d(1, 0), d(0, 1), d(1, 1)] {
        let c = check_lemma_positive::<Exact>(&g, &n, &d(2, 2), &d(1, 1)).unwrap();
        assert!(c.pass());
    }
}

#[test]
fn tck4_is_strict_in_fock_and_ck_holds_in_pathspace() {
    let g = example_2graph();
    let c = tck4_strictness::<Exact>(&g, 0, &d(1, 1), &d(2, 2), &d(0, 0)).unwrap();
    let (p, l) = c.witness.expect("strict");
    assert_eq!(p, d(0, 0));
    assert!(l.is_vertex());
    let ck = check_ck::<Exact>(&g, 0, &d(1, 1), &d(1, 1)).unwrap();
    assert!(ck.pass());
    let a = chi(&g, &["e"]).in_fiber(d(0, 0));
    for m in [d(1, 0), d(0, 1), d(1, 1)] {
        assert!(check_kernel_generator(&g, &a, &m, &d(1, 1)).unwrap().pass());
    }
}

#[test]
fn random_graphs_calculus_matches_fock() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let g = random_coaligned_2graph(&mut rng);
        let lv = g.level(&d(1, 0)).unwrap();
        let lw = g.level(&d(0, 1)).unwrap();
        let a = NtElement::<Exact>::s(&g, &lv.paths[0]).unwrap();
        let b = NtElement::<Exact>::s(&g, &lw.paths[0]).unwrap();
        let prod = multiply(&g, &b.adjoint(), &a).unwrap();
        let word = FockOp::word(vec![FockFactor::Element(b.adjoint()), FockFactor::Element(a)]);
        let c = compare_on_window(&g, "rand", &d(2, 2), &d(1, 1), &d(1, 1), |v| word.apply(&g, v), |v| {
            fock_apply_element(&g, &prod, v)
        })
        .unwrap();
        assert!(c.pass());
    }
}
