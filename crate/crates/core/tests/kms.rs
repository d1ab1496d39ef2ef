mod common;

use approx::assert_relative_eq;
use common::*;
use kgraph_kms::fixtures::{example_2graph, loops, random_vertex_weights};
use kgraph_kms::kms::*;
use kgraph_kms::nt::{range_projection, NtElement, SpanningTerm};
use kgraph_kms::pathspace::{integrate, CylinderFunction, CylinderMeasure};
use kgraph_kms::thermo::{beta_c, check_subinvariance, f_beta, Dynamics};
use kgraph_kms::{Degree, KGraph, Numeric, Path};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::Rng;

fn c(x: f64) -> Numeric {
    Numeric::new(x, 0.0)
}

fn chi(g: &KGraph, p: &Path, fiber: &Degree) -> CylinderFunction<Numeric> {
    CylinderFunction::indicator(g, p).unwrap().in_fiber(fiber.clone())
}

fn s_s_star(g: &KGraph, l: &Path, m: &Path) -> NtElement<Numeric> {
    NtElement::from_term(g, &SpanningTerm::new(chi(g, l, l.degree()), chi(g, m, m.degree()))).unwrap()
}

fn psi0(g: &KGraph, l: &Path) -> NtElement<Numeric> {
    NtElement::psi(g, &chi(g, l, &Degree::zero(g.k()))).unwrap()
}

fn example_state(split: SplitStrategy, beta: f64) -> (KGraph, KmsState) {
    let g = example_2graph();
    let eps = measure_from_vertex_vector(&g, &[1.0], split, 2).unwrap();
    let state = make_kms_state(&g, &eps, &Dynamics::new(beta, vec![1.0, 1.0])).unwrap();
    (g, state)
}

#[test]
fn kms_relation_on_example() {
    let g = example_2graph();
    let dynamics = Dynamics::new(5f64.ln(), vec![1.0, 1.0]);
    let eps = measure_from_vertex_vector(&g, &[1.0], SplitStrategy::Random(3), 2).unwrap();
    let state = make_kms_state(&g, &eps, &dynamics).unwrap();
    let report = check_kms(&g, &state, &d(1, 1), &d(2, 2)).unwrap();
    assert!(report.pass, "{:?}", report.witness());
    assert!(report.basis_size > 0);
    let bad = check_kms(&g, &KmsState::raw_functional(&state.eps, &dynamics), &d(1, 1), &d(2, 2)).unwrap();
    assert!(!bad.pass);
    assert!(bad.witness().is_some());
}

#[test]
fn normalization_examples() {
    let beta: f64 = 1.5;
    let g = loops(1);
    let eps = measure_from_vertex_vector(&g, &[7.0], SplitStrategy::Uniform, 1).unwrap();
    let s = make_kms_state(&g, &eps, &Dynamics::new(beta, vec![1.0])).unwrap();
    let z = Degree::from([0]);
    assert_relative_eq!(s.eps.level(&g, &z).unwrap()[0], 1.0 - (-beta).exp(), epsilon = 1e-12);
    assert_relative_eq!(s.mu_level(&g, &z).unwrap()[0], 1.0, epsilon = 1e-12);

    let g = loops(2);
    let eps = measure_from_vertex_vector(&g, &[3.0], SplitStrategy::Uniform, 1).unwrap();
    let s = make_kms_state(&g, &eps, &Dynamics::new(4f64.ln(), vec![1.0])).unwrap();
    assert_relative_eq!(s.eps.level(&g, &z).unwrap()[0], 0.5, epsilon = 1e-12);
    assert_relative_eq!(s.normalizer, 6.0, epsilon = 1e-12);
}

#[test]
fn eval_examples() {
    let g = graph(11);
    let mut r = rng(11);
    let bc = beta_c::<f64>(&g);
    let dynamics = Dynamics::new(bc.iter().fold(0.0f64, |a, &b| a.max(b)) + 0.5, vec![1.0, 1.0]);
    let eps = measure_from_vertex_vector(&g, &random_vertex_weights(&mut r, g.num_vertices()), SplitStrategy::Random(1), 2)
        .unwrap();
    let s = make_kms_state(&g, &eps, &dynamics).unwrap();
    assert_relative_eq!(s.eval(&g, &NtElement::<Numeric>::identity(&g)).unwrap().re, 1.0, epsilon = 1e-12);
    let mu0 = s.mu_level(&g, &Degree::zero(2)).unwrap();
    for v in 0..g.num_vertices() {
        let sv = NtElement::<Numeric>::s(&g, &g.vertex_path(v)).unwrap();
        assert_relative_eq!(s.eval(&g, &sv).unwrap().re, mu0[v], epsilon = 1e-12);
    }
    for (l, m) in toeplitz_samples(&g, &d(1, 1)).unwrap() {
        if l.degree() != m.degree() {
            assert_eq!(s.eval(&g, &s_s_star(&g, &l, &m)).unwrap(), c(0.0));
        }
    }
}

#[test]
fn uniform_state_closed_forms() {
    // one vertex, uniform ε: μ(Z(λ)) = 1/|Λ^{d(λ)}| and φ(S_λS_λ*) = e^{−βr·d(λ)}
    let beta = 2.0;
    let (g, s) = example_state(SplitStrategy::Uniform, beta);
    for n in d(1, 1).box_below() {
        let level = g.level(&n).unwrap();
        for l in &level.paths {
            let want = (-beta * n.total() as f64).exp();
            assert_relative_eq!(s.eval(&g, &s_s_star(&g, l, l)).unwrap().re, want, epsilon = 1e-12);
            assert_relative_eq!(s.eval(&g, &psi0(&g, l)).unwrap().re, 1.0 / level.len() as f64, epsilon = 1e-12);
        }
    }
}

#[test]
fn split_is_visible_below_the_toeplitz_algebra() {
    let beta = 2.0;
    let (g, uniform) = example_state(SplitStrategy::Uniform, beta);
    let (_, random) = example_state(SplitStrategy::Random(5), beta);
    let mut deep: f64 = 0.0;
    for l in &g.level(&d(1, 0)).unwrap().paths {
        let (a, b) = (s_s_star(&g, l, l), psi0(&g, l));
        assert_relative_eq!(uniform.eval(&g, &a).unwrap().re, random.eval(&g, &a).unwrap().re, epsilon = 1e-12);
        deep = deep.max((uniform.eval(&g, &b).unwrap() - random.eval(&g, &b).unwrap()).norm());
    }
    assert!(deep > 1e-6);
}

#[test]
fn restriction_depends_on_vertex_marginals_only() {
    let g = example_2graph();
    let dynamics = Dynamics::new(2.0, vec![1.0, 1.0]);
    let y = f_beta(&g, &dynamics).unwrap()[0];
    let a = measure_from_vertex_vector(&g, &[1.0 / y], SplitStrategy::Uniform, 2).unwrap();
    let b = measure_from_vertex_vector(&g, &[1.0 / y], SplitStrategy::Random(9), 2).unwrap();
    assert!(restrict_to_toeplitz(&g, &a, &dynamics, &d(1, 1)).unwrap().pass);
    let cmp = compare_restrictions(&g, &a, &b, &dynamics, &d(1, 1), &d(1, 1)).unwrap();
    assert!(cmp.toeplitz_max_diff <= KMS_TOL);
    assert!(cmp.deep_max_diff > KMS_TOL, "{cmp:?}");
}

#[test]
fn ground_state_values() {
    let g = example_2graph();
    let eps = measure_from_vertex_vector(&g, &[1.0], SplitStrategy::Random(2), 2).unwrap();
    let ground = ground_state(&g, &eps).unwrap();
    for n in d(1, 1).box_below() {
        for l in &g.level(&n).unwrap().paths {
            let v = ground.eval(&g, &s_s_star(&g, l, l)).unwrap();
            if n.is_zero() {
                assert_relative_eq!(v.re, 1.0, epsilon = 1e-12);
            } else {
                assert_eq!(v, c(0.0));
            }
            let want: Numeric = integrate(&g, &chi(&g, l, &Degree::zero(2)), &eps).unwrap();
            assert_relative_eq!(ground.eval(&g, &psi0(&g, l)).unwrap().re, want.re, epsilon = 1e-12);
        }
    }
    assert!(matches!(ground_state(&g, &eps.scale(&2.0)), Err(KmsError::NotProbability(_))));
}

#[test]
fn kms_states_converge_to_the_ground_state() {
    let g = example_2graph();
    let eps = measure_from_vertex_vector(&g, &[1.0], SplitStrategy::Random(4), 2).unwrap();
    let ground = ground_state(&g, &eps).unwrap();
    let samples: Vec<_> = monomial_basis(&g, &d(1, 1), &d(1, 1)).unwrap().iter().map(|m| m.element::<Numeric>(&g).unwrap()).collect();
    let mut last = f64::INFINITY;
    for beta in [5.0, 10.0, 20.0, 40.0] {
        let s = make_kms_state(&g, &eps, &Dynamics::new(beta, vec![1.0, 1.0])).unwrap();
        let mut worst: f64 = 0.0;
        for e in &samples {
            worst = worst.max((s.eval(&g, e).unwrap() - ground.eval(&g, e).unwrap()).norm());
        }
        assert!(worst <= last);
        last = worst;
    }
    assert!(last <= 1e-6, "{last}");
}

#[test]
fn obstruction_equals_the_epsilon_integral() {
    let (g, s) = example_state(SplitStrategy::Random(8), 5f64.ln());
    for v in 0..g.num_vertices() {
        let a = chi(&g, &g.vertex_path(v), &Degree::zero(2));
        let want: Numeric = integrate(&g, &a, &s.eps).unwrap();
        let got = obstruction_value(&g, &s, &a).unwrap();
        assert!((got - want).norm() <= KMS_TOL);
        assert!(got.re > 0.0);
    }
}

#[test]
fn uniform_builder_on_one_vertex() {
    let g = example_2graph();
    let eps = BigRational::new(3.into(), 7.into());
    let nu = measure_from_vertex_vector(&g, std::slice::from_ref(&eps), SplitStrategy::Uniform, 3).unwrap();
    for l in 0..=3u32 {
        let q = Degree::ones(2).scale(l);
        let size = g.level(&q).unwrap().len();
        let want = eps.clone() / BigRational::from_integer(size.into());
        assert!(nu.level(&g, &q).unwrap().iter().all(|w| *w == want));
    }
    assert!(nu.consistency_defect(&g).unwrap().is_zero());
    let h = graph(6);
    let perron = measure_from_vertex_vector(&h, &vec![BigRational::one(); h.num_vertices()], SplitStrategy::Perron, 2).unwrap();
    assert!(perron.consistency_defect(&h).unwrap().is_zero());
}

#[test]
fn critical_sequence_on_example() {
    let g = example_2graph();
    let schedule = default_schedule();
    let report = critical_sequence(&g, &schedule, &[d(1, 0)]).unwrap();
    assert!(report.increasing);
    for (step, beta) in report.steps.iter().zip(&schedule) {
        // r = (ln 2, ln 2): f = (1 − 2^{1−β})^{−2}
        let want = (1.0 - 2f64.powf(1.0 - beta)).powi(-2);
        assert_relative_eq!(step.f_u, want, max_relative = 1e-9);
    }
    let last = report.steps.last().unwrap();
    assert!(last.vanishing[0].1 > 0.999);
    assert!(matches!(critical_sequence(&loops(1), &schedule, &[]), Err(KmsError::ZeroCriticalTemperature(1))));
}

#[test]
fn range_projection_value_matches_the_state_formula() {
    let (g, s) = example_state(SplitStrategy::Random(2), 3.0);
    let q = range_projection::<Numeric>(&g, &d(1, 1), None).unwrap();
    // four paths of degree (1,1), each e^{−2β}μ(Z(v)) with μ(Z(v)) = 1
    assert_relative_eq!(s.eval(&g, &q).unwrap().re, 4.0 * (-6.0f64).exp(), epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn constructed_states_are_kms_and_subinvariant(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let bc = beta_c::<f64>(&g);
        let rr = vec![r.gen_range(0.5..2.0), r.gen_range(0.5..2.0)];
        let beta = (0..2).map(|i| (bc[i] + r.gen_range(0.2..1.0)) / rr[i]).fold(0.0, f64::max);
        let dynamics = Dynamics::new(beta, rr);
        let w = random_vertex_weights(&mut r, g.num_vertices());
        let eps = measure_from_vertex_vector(&g, &w, SplitStrategy::Random(seed), 2).unwrap();
        let s = make_kms_state(&g, &eps, &dynamics).unwrap();
        let f = f_beta(&g, &dynamics).unwrap();
        let integral: f64 = s.eps.level(&g, &Degree::zero(2)).unwrap().iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        prop_assert!((integral - 1.0).abs() <= 1e-12);
        let report = check_kms(&g, &s, &d(1, 1), &d(1, 1)).unwrap();
        prop_assert!(report.pass, "{:?}", report.witness());
        let levels = d(1, 1).box_below();
        let mu: CylinderMeasure<f64> = s.mu(&g, &d(2, 2).box_below()).unwrap();
        for p in &levels {
            prop_assert!(check_subinvariance(&g, &mu, &dynamics, p, 1e-12).unwrap().pass);
        }
        prop_assert!(simplex_roundtrip(&g, &s, &levels).unwrap().pass);
        let other = make_kms_state(&g, &measure_from_vertex_vector(&g, &w, SplitStrategy::Uniform, 2).unwrap(), &dynamics).unwrap();
        let samples: Vec<_> = monomial_basis(&g, &d(1, 1), &d(1, 1)).unwrap().iter().take(40).map(|m| m.element::<Numeric>(&g).unwrap()).collect();
        for t in [0.0, 0.3, 1.0] {
            prop_assert!(affine_defect(&g, &s, &other, t, &d(2, 2).box_below(), &samples).unwrap() <= KMS_TOL);
        }
    }
}
