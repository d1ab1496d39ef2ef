mod common;

use approx::assert_relative_eq;
use common::*;
use kgraph_kms::fixtures::{example_2graph, loops, one_graph, random_strongly_connected, random_vertex_weights};
use kgraph_kms::kms::{measure_from_vertex_vector, SplitStrategy};
use kgraph_kms::pathspace::{point_mass, CylinderMeasure};
use kgraph_kms::thermo::*;
use kgraph_kms::{Degree, KGraph};
use nalgebra::{DMatrix, Schur};
use proptest::prelude::*;
use rand::Rng;

fn dyn2(beta: f64, r: [f64; 2]) -> Dynamics<f64> {
    Dynamics::new(beta, r.to_vec())
}

fn vertex_matrix(g: &KGraph, color: usize) -> DMatrix<f64> {
    let n = g.num_vertices();
    let mut a = DMatrix::zeros(n, n);
    for e in g.edges().iter().filter(|e| e.color == color) {
        a[(e.range, e.source)] += 1.0;
    }
    a
}

/// Σ_{n ≤ cap} e^{−βr·n} (1ᵀ Π A_i^{n_i})_v, color by color.
fn f_beta_brute(g: &KGraph, dynamics: &Dynamics<f64>, cap: usize) -> Vec<f64> {
    let n = g.num_vertices();
    let mut row = DMatrix::from_element(1, n, 1.0);
    for (i, t) in dynamics.t().into_iter().enumerate() {
        let a = vertex_matrix(g, i);
        let mut term = row.clone();
        let mut sum = row.clone();
        for _ in 0..cap {
            term = &term * &a * t;
            sum += &term;
        }
        row = sum;
    }
    row.iter().copied().collect()
}

/// ρ(A) = ρ(A + I) − 1 for non-negative A; the shift keeps the QR
/// iteration away from eigenvalues of equal modulus.
fn spectral_radius_oracle(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let schur = Schur::try_new(a + DMatrix::identity(n, n), 1e-15, 100_000).expect("Schur converges");
    schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max) - 1.0
}

#[test]
fn spectral_radius_examples() {
    assert_relative_eq!(spectral_radius(&DMatrix::from_element(1, 1, 2.0)), 2.0, epsilon = 1e-12);
    assert_relative_eq!(spectral_radius(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])), 1.0, epsilon = 1e-12);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert_relative_eq!(spectral_radius(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0])), golden, epsilon = 1e-12);
    assert_eq!(spectral_radius(&DMatrix::<f64>::zeros(3, 3)), 0.0);
}

#[test]
fn critical_temperatures_examples() {
    assert_relative_eq!(beta_c::<f64>(&loops(2))[0], 2f64.ln(), epsilon = 1e-12);
    for b in beta_c::<f64>(&example_2graph()) {
        assert_relative_eq!(b, 2f64.ln(), epsilon = 1e-12);
    }
    assert_relative_eq!(beta_c::<f64>(&one_graph(&[vec![0, 1], vec![1, 0]]))[0], 0.0, epsilon = 1e-12);
}

#[test]
fn f_beta_examples() {
    let beta: f64 = 3.0;
    let f = f_beta(&loops(1), &Dynamics::new(beta, vec![1.0])).unwrap();
    assert_relative_eq!(f[0], 1.0 / (1.0 - (-beta).exp()), epsilon = 1e-12);
    let f = f_beta(&loops(2), &Dynamics::new(4f64.ln(), vec![1.0])).unwrap();
    assert_relative_eq!(f[0], 2.0, epsilon = 1e-12);
    let f = f_beta(&example_2graph(), &dyn2(4f64.ln(), [1.0, 1.0])).unwrap();
    assert_relative_eq!(f[0], 4.0, epsilon = 1e-12);
}

#[test]
fn inadmissible_dynamics_are_rejected() {
    let g = example_2graph();
    assert!(matches!(f_beta(&g, &dyn2(0.5, [1.0, 1.0])), Err(ThermoError::NotAdmissible { color: 1, .. })));
    assert!(matches!(f_beta(&g, &Dynamics::new(1.0, vec![1.0])), Err(ThermoError::Shape { .. })));
}

#[test]
fn single_loop_measures() {
    let g = loops(1);
    let beta: f64 = 2.0;
    let dynamics = Dynamics::new(beta, vec![1.0]);
    let eps = measure_from_vertex_vector(&g, &[0.25], SplitStrategy::Uniform, 3).unwrap();
    let levels: Vec<Degree> = (0..4).map(|l| Degree::from([l])).collect();
    let mu = solve_mu(&g, &eps, &dynamics, &levels).unwrap();
    for q in &levels {
        assert_relative_eq!(mu.level(&g, q).unwrap()[0], 0.25 / (1.0 - (-beta).exp()), epsilon = 1e-12);
    }
    let back = recover_epsilon(&g, &mu, &dynamics, &levels[..3], 1e-12).unwrap();
    for q in &levels[..3] {
        assert_relative_eq!(back.level(&g, q).unwrap()[0], 0.25, epsilon = 1e-12);
    }
}

#[test]
fn point_masses_are_not_subinvariant() {
    let g = loops(2);
    let beta: f64 = 5.0;
    let dynamics = Dynamics::new(beta, vec![1.0]);
    let (l0, l1) = (g.path_from_names(&["l0"]).unwrap(), g.path_from_names(&["l1"]).unwrap());
    // δ at z = l1 l0 l0 …; on Λ^1 the K = {1} value is δ(Z(λ)) − e^{−β}#{w ∈ Z(λ) : σ(w) = z}
    // and the count is 1 for every λ
    let delta = point_mass::<f64>(&g, &l1, &l0).unwrap();
    let one = Degree::from([1]);
    let vals = subinvariance_level(&g, &delta, &dynamics, 1, &one).unwrap();
    let level = g.level(&one).unwrap();
    assert_relative_eq!(vals[level.index_of(&l0).unwrap()], -(-beta).exp(), epsilon = 1e-15);
    assert_relative_eq!(vals[level.index_of(&l1).unwrap()], 1.0 - (-beta).exp(), epsilon = 1e-15);
    let report = check_subinvariance(&g, &delta, &dynamics, &one, 1e-12).unwrap();
    assert!(!report.pass);
    let k1 = report.entries.iter().find(|e| e.colors == vec![1]).unwrap();
    assert!(k1.min_value < 0.0);
    let empty = report.entries.iter().find(|e| e.colors.is_empty()).unwrap();
    assert!(empty.min_value >= 0.0);
    let periodic = point_mass::<f64>(&g, &g.vertex_path(0), &l0).unwrap();
    let vals = subinvariance_level(&g, &periodic, &dynamics, 1, &one).unwrap();
    assert_relative_eq!(vals[level.index_of(&l1).unwrap()], -(-beta).exp(), epsilon = 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_radius_matches_eigenvalues(seed in seeds(), n in 1usize..=6) {
        let g = random_strongly_connected(&mut rng(seed), n, 6);
        let a = vertex_matrix(&g, 0);
        let rho = spectral_radius(&a);
        prop_assert!((rho - spectral_radius_oracle(&a)).abs() <= 1e-9 * rho.max(1.0));
        prop_assert!((gelfand_estimate(&a, 5000) - rho.ln()).abs() <= 5e-3);
    }

    #[test]
    fn f_beta_resolvent_series_and_brute_force_agree(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let bc = beta_c::<f64>(&g);
        let rr = [r.gen_range(0.5..2.0), r.gen_range(0.5..2.0)];
        let beta = (0..2).map(|i| (bc[i] + 1.0) / rr[i]).fold(0.0, f64::max);
        let dynamics = dyn2(beta, rr);
        let f = f_beta(&g, &dynamics).unwrap();
        let (s, bound) = f_beta_series(&g, &dynamics, 1e-13).unwrap();
        let brute = f_beta_brute(&g, &dynamics, 80);
        for v in 0..g.num_vertices() {
            prop_assert!(f[v] >= 1.0);
            prop_assert!((f[v] - s[v]).abs() <= bound + 1e-12);
            prop_assert!((f[v] - brute[v]).abs() <= 1e-10 * f[v]);
        }
    }

    #[test]
    fn mu_mass_is_the_integral_of_f_beta(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let bc = beta_c::<f64>(&g);
        let beta = bc.iter().fold(0.0f64, |a, &b| a.max(b)) + r.gen_range(0.1..1.0);
        let dynamics = dyn2(beta, [1.0, 1.0]);
        let w = random_vertex_weights(&mut r, g.num_vertices());
        let eps = CylinderMeasure::from_vertex_weights(2, w.clone());
        let mu = solve_mu(&g, &eps, &dynamics, &[Degree::zero(2)]).unwrap();
        let f = f_beta(&g, &dynamics).unwrap();
        let integral: f64 = w.iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        let mass: f64 = mu.level(&g, &Degree::zero(2)).unwrap().iter().sum();
        prop_assert!((mass - integral).abs() <= 1e-10 * integral);
        // so μ is a probability measure exactly when ∫f dε = 1
        let normalized = eps.scale(&(1.0 / integral));
        let mu1 = solve_mu(&g, &normalized, &dynamics, &[Degree::zero(2)]).unwrap();
        prop_assert!((mu1.total_mass(&g).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn closed_form_mu_matches_series(seed in seeds()) {
        let g = graph(seed);
        let mut r = rng(seed);
        let bc = beta_c::<f64>(&g);
        let beta = bc.iter().fold(0.0f64, |a, &b| a.max(b)) + r.gen_range(0.3..1.0);
        let dynamics = dyn2(beta, [1.0, 1.0]);
        let w = random_vertex_weights(&mut r, g.num_vertices());
        let eps = measure_from_vertex_vector(&g, &w, SplitStrategy::Random(seed), 2).unwrap();
        let q = d(1, 1);
        let closed = solve_mu(&g, &eps, &dynamics, std::slice::from_ref(&q)).unwrap().level(&g, &q).unwrap();
        let (series, bound) = solve_mu_series(&g, &eps, &dynamics, &q, 1e-12).unwrap();
        for (a, b) in closed.iter().zip(series.level(&g, &q).unwrap()) {
            prop_assert!((a - b).abs() <= bound + 1e-12);
        }
    }
}
