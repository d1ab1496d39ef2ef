//! KMS_β, ground and critical-temperature states given by measures on the
//! infinite-path space.
//!
//! The state attached to ε is
//! φ(ψ_m(x)ψ_n(y)*) = δ_{m,n} e^{−βr·m} ∫⟨y, x⟩ dμ with
//! μ = Σ_n e^{−βr·n} R^n ε.

use std::collections::BTreeMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::nt::{range_projection, Calculus, CalculusError, NtElement, SpanningTerm};
use crate::pathspace::{integrate, point_mass, CylinderFunction, CylinderMeasure, PathSpaceError};
use crate::scalar::{Scalar, Weight};
use crate::thermo::{beta_c, f_beta, recover_epsilon, resolvent_apply, solve_mu, Dynamics, ThermoError};
use crate::Numeric;

/// Relative tolerance of the KMS relation.
pub const KMS_TOL: f64 = 1e-9;
/// Per-cylinder tolerance of ε → μ → ε.
pub const ROUNDTRIP_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KmsError {
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("measure has zero mass")]
    ZeroMeasure,
    #[error("measure has negative weight {0:e}")]
    NegativeWeight(f64),
    #[error("measure has total mass {0}, expected 1")]
    NotProbability(f64),
    #[error("∫f_β dδ = {0}, expected 1")]
    NotNormalized(f64),
    #[error("critical inverse temperature of color {0} is 0, so the preferred dynamics is undefined")]
    ZeroCriticalTemperature(usize),
    #[error("vertex {0} has no paths of degree (1,…,1)")]
    NoExtensions(usize),
}

impl From<PathSpaceError> for KmsError {
    fn from(e: PathSpaceError) -> Self {
        KmsError::Thermo(e.into())
    }
}

impl From<crate::kgraph::KGraphError> for KmsError {
    fn from(e: crate::kgraph::KGraphError) -> Self {
        KmsError::Thermo(PathSpaceError::from(e).into())
    }
}

type Result<T> = std::result::Result<T, KmsError>;

fn vertex_function(g: &KGraph, vals: &[f64]) -> CylinderFunction<Numeric> {
    let z = Degree::zero(g.k());
    let w = vals.iter().map(|&x| Complex::new(x, 0.0)).collect();
    CylinderFunction::from_weights(g, z.clone(), z, w).expect("one weight per vertex")
}

fn integrate_real(g: &KGraph, f: &[f64], nu: &CylinderMeasure<f64>) -> Result<f64> {
    Ok(integrate::<Numeric, f64>(g, &vertex_function(g, f), nu)?.re)
}

#[derive(Debug)]
enum MuSource {
    Series,
    /// Used verbatim; only for negative controls.
    Fixed(CylinderMeasure<f64>),
}

/// φ_ε for a normalized ε.
#[derive(Debug)]
pub struct KmsState {
    pub dynamics: Dynamics<f64>,
    pub eps: CylinderMeasure<f64>,
    /// ∫f_β dε_raw before normalization.
    pub normalizer: f64,
    source: MuSource,
    mu_cache: Mutex<BTreeMap<Degree, Vec<f64>>>,
}

impl Clone for KmsState {
    fn clone(&self) -> Self {
        let source = match &self.source {
            MuSource::Series => MuSource::Series,
            MuSource::Fixed(m) => MuSource::Fixed(m.clone()),
        };
        KmsState {
            dynamics: self.dynamics.clone(),
            eps: self.eps.clone(),
            normalizer: self.normalizer,
            source,
            mu_cache: Mutex::new(self.mu_cache.lock().unwrap().clone()),
        }
    }
}

/// Normalizes ε_raw so that ∫f_β dε = 1; μ is computed on demand.
pub fn make_kms_state(g: &KGraph, eps_raw: &CylinderMeasure<f64>, dynamics: &Dynamics<f64>) -> Result<KmsState> {
    let f = f_beta(g, dynamics)?;
    let lowest = eps_raw.min_weight();
    if lowest < 0.0 {
        return Err(KmsError::NegativeWeight(lowest));
    }
    let norm = integrate_real(g, f.as_slice(), eps_raw)?;
    if norm <= 0.0 {
        return Err(KmsError::ZeroMeasure);
    }
    Ok(KmsState {
        dynamics: dynamics.clone(),
        eps: eps_raw.scale(&(1.0 / norm)),
        normalizer: norm,
        source: MuSource::Series,
        mu_cache: Mutex::new(BTreeMap::new()),
    })
}

impl KmsState {
    /// The functional given by the state formula with μ replaced by the
    /// unnormalized ε_raw. It is not a state in general.
    pub fn raw_functional(eps_raw: &CylinderMeasure<f64>, dynamics: &Dynamics<f64>) -> Self {
        KmsState {
            dynamics: dynamics.clone(),
            eps: eps_raw.clone(),
            normalizer: 1.0,
            source: MuSource::Fixed(eps_raw.clone()),
            mu_cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn mu_level(&self, g: &KGraph, q: &Degree) -> Result<Vec<f64>> {
        if let Some(v) = self.mu_cache.lock().unwrap().get(q) {
            return Ok(v.clone());
        }
        let v = match &self.source {
            MuSource::Series => solve_mu(g, &self.eps, &self.dynamics, std::slice::from_ref(q))?.level(g, q)?,
            MuSource::Fixed(m) => m.level(g, q)?,
        };
        self.mu_cache.lock().unwrap().insert(q.clone(), v.clone());
        Ok(v)
    }

    pub fn mu(&self, g: &KGraph, levels: &[Degree]) -> Result<CylinderMeasure<f64>> {
        let mut out = BTreeMap::new();
        for q in levels {
            out.insert(q.clone(), self.mu_level(g, q)?);
        }
        Ok(CylinderMeasure::from_levels(g.k(), out))
    }

    /// φ(E); only the diagonal terms S_α ψ_0(χ_γ) S_α* contribute, each
    /// with e^{−βr·d(α)} μ(Z(γ)).
    pub fn eval<S: Scalar>(&self, g: &KGraph, e: &NtElement<S>) -> Result<Numeric> {
        let mut acc = Numeric::new(0.0, 0.0);
        for ((m, n), core, &(a, b, c), v) in e.raw_terms() {
            if m != n || a != b {
                continue;
            }
            let mu = self.mu_level(g, core)?;
            acc += v.to_c64() * self.dynamics.weight(m) * mu[c];
        }
        Ok(acc)
    }
}

/// The KMS_∞ state φ(ψ_m(x)ψ_n(y)*) = δ_{m,0}δ_{n,0} ∫ conj(y)x dε.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub eps: CylinderMeasure<f64>,
}

pub fn ground_state(g: &KGraph, eps: &CylinderMeasure<f64>) -> Result<GroundState> {
    let mass = eps.total_mass(g)?;
    if (mass - 1.0).abs() > ROUNDTRIP_TOL {
        return Err(KmsError::NotProbability(mass));
    }
    Ok(GroundState { eps: eps.clone() })
}

impl GroundState {
    pub fn eval<S: Scalar>(&self, g: &KGraph, e: &NtElement<S>) -> Result<Numeric> {
        let mut acc = Numeric::new(0.0, 0.0);
        for ((m, n), core, &(a, b, c), v) in e.raw_terms() {
            if !m.is_zero() || !n.is_zero() || a != b {
                continue;
            }
            acc += v.to_c64() * self.eps.level(g, core)?[c];
        }
        Ok(acc)
    }
}

/// The canonical monomial ψ_m(χ_{αγ}) ψ_n(χ_{βγ})*.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub m: Degree,
    pub n: Degree,
    pub x: Path,
    pub y: Path,
}

impl Monomial {
    pub fn element<S: Scalar>(&self, g: &KGraph) -> Result<NtElement<S>> {
        let t = SpanningTerm::new(
            CylinderFunction::indicator(g, &self.x)?.in_fiber(self.m.clone()),
            CylinderFunction::indicator(g, &self.y)?.in_fiber(self.n.clone()),
        );
        Ok(NtElement::from_term(g, &t)?)
    }

    pub fn describe(&self, g: &KGraph) -> String {
        format!("psi_{}({})psi_{}({})*", self.m, g.path_name(&self.x), self.n, g.path_name(&self.y))
    }
}

/// Monomials with m, n ≤ `max_mn` and core c = depth − m ∨ n; together they
/// span every monomial whose arguments have depth at most `depth`.
pub fn monomial_basis(g: &KGraph, max_mn: &Degree, depth: &Degree) -> Result<Vec<Monomial>> {
    let mut out = Vec::new();
    for m in max_mn.box_below() {
        for n in max_mn.box_below() {
            let Some(c) = depth.checked_sub(&m.join(&n)) else { continue };
            let (lm, ln, lc) = (g.level(&m)?, g.level(&n)?, g.level(&c)?);
            for gamma in &lc.paths {
                for alpha in lm.paths.iter().filter(|p| p.source() == gamma.range()) {
                    for beta in ln.paths.iter().filter(|p| p.source() == gamma.range()) {
                        out.push(Monomial {
                            m: m.clone(),
                            n: n.clone(),
                            x: g.compose(alpha, gamma)?,
                            y: g.compose(beta, gamma)?,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Outcome of [`check_kms`].
#[derive(Clone, Debug, PartialEq)]
pub struct KmsReport {
    pub basis_size: usize,
    pub pairs: usize,
    /// max |φ(bc) − e^{−βr·(m−n)}φ(cb)| / (1 + |φ(bc)|)
    pub worst_relation: f64,
    pub relation_witness: Option<(String, String)>,
    /// φ(1)
    pub normalization: f64,
    /// min over K and ν of φ(S_ν Π_{i∈K}(1 − Σ_{Λ^{e_i}} S_λS_λ*) S_ν*)
    pub positivity_min: f64,
    pub positivity_witness: Option<String>,
    pub pass: bool,
}

impl KmsReport {
    /// The first failing pair; normalization failures are reported as (1, 1).
    pub fn witness(&self) -> Option<(String, String)> {
        if (self.normalization - 1.0).abs() > KMS_TOL {
            return Some(("1".into(), "1".into()));
        }
        if let Some(w) = &self.relation_witness {
            return Some(w.clone());
        }
        self.positivity_witness.as_ref().map(|w| (w.clone(), w.clone()))
    }
}

/// Checks φ(bc) = e^{−βr·(m−n)}φ(cb) for all basis pairs, φ(1) = 1 and
/// positivity on the defect projections.
pub fn check_kms(g: &KGraph, state: &KmsState, max_mn: &Degree, depth: &Degree) -> Result<KmsReport> {
    let calc = Calculus::<Numeric>::new(g)?;
    let basis = monomial_basis(g, max_mn, depth)?;
    let elems: Vec<NtElement<Numeric>> = basis.iter().map(|b| b.element(g)).collect::<Result<_>>()?;
    // warm the μ levels so the parallel section only reads the cache
    for q in depth.box_below() {
        state.mu_level(g, &q)?;
    }
    let rows: Vec<(f64, Option<usize>)> = (0..elems.len())
        .into_par_iter()
        .map(|i| -> Result<(f64, Option<usize>)> {
            let b = &elems[i];
            let w = (-state.dynamics.beta
                * (dot(&basis[i].m, &state.dynamics.r) - dot(&basis[i].n, &state.dynamics.r)))
                .exp();
            let mut worst = 0.0;
            let mut at = None;
            for (j, c) in elems.iter().enumerate() {
                let lhs = state.eval(g, &calc.multiply(b, c)?)?;
                let rhs = state.eval(g, &calc.multiply(c, b)?)? * w;
                let err = (lhs - rhs).norm() / (1.0 + lhs.norm());
                if err > worst {
                    worst = err;
                    at = Some(j);
                }
            }
            Ok((worst, at))
        })
        .collect::<Result<_>>()?;
    let mut worst_relation = 0.0;
    let mut relation_witness = None;
    for (i, (w, at)) in rows.iter().enumerate() {
        if *w > worst_relation {
            worst_relation = *w;
            if *w > KMS_TOL {
                let j = at.expect("set with worst");
                relation_witness = Some((basis[i].describe(g), basis[j].describe(g)));
            }
        }
        if relation_witness.is_some() {
            break;
        }
    }
    let normalization = state.eval(g, &NtElement::<Numeric>::identity(g))?.re;
    let (positivity_min, positivity_witness) = positivity_spot_checks(g, &calc, state, max_mn)?;
    let pass = worst_relation <= KMS_TOL && (normalization - 1.0).abs() <= KMS_TOL && positivity_witness.is_none();
    Ok(KmsReport {
        basis_size: basis.len(),
        pairs: basis.len() * basis.len(),
        worst_relation,
        relation_witness,
        normalization,
        positivity_min,
        positivity_witness,
        pass,
    })
}

fn dot(n: &Degree, r: &[f64]) -> f64 {
    n.entries().iter().zip(r).map(|(&a, &b)| a as f64 * b).sum()
}

fn positivity_spot_checks(
    g: &KGraph,
    calc: &Calculus<Numeric>,
    state: &KmsState,
    max_mn: &Degree,
) -> Result<(f64, Option<String>)> {
    let k = g.k();
    let one = NtElement::<Numeric>::identity(g);
    let defects: Vec<NtElement<Numeric>> = (0..k)
        .map(|i| one.sub(g, &range_projection(g, &Degree::unit(k, i), None)?))
        .collect::<std::result::Result<_, CalculusError>>()?;
    let mut lo = f64::INFINITY;
    let mut witness = None;
    for mask in 1..(1usize << k) {
        let mut p = one.clone();
        for (i, d) in defects.iter().enumerate() {
            if mask >> i & 1 == 1 {
                p = calc.multiply(&p, d)?;
            }
        }
        for deg in max_mn.box_below() {
            for nu in &g.level(&deg)?.paths {
                let s = NtElement::s(g, nu)?;
                let e = calc.multiply(&calc.multiply(&s, &p)?, &s.adjoint())?;
                let v = state.eval(g, &e)?.re;
                if v < lo {
                    lo = v;
                }
                if v < -KMS_TOL && witness.is_none() {
                    let colors: Vec<String> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
                    witness = Some(format!("S_{} P_{{{}}} S_{}*", g.path_name(nu), colors.join(","), g.path_name(nu)));
                }
            }
        }
    }
    Ok((lo, witness))
}

/// ε → μ → ε on the given levels, and affineness against a second state.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripReport {
    pub max_error: f64,
    pub pass: bool,
}

pub fn simplex_roundtrip(g: &KGraph, state: &KmsState, levels: &[Degree]) -> Result<RoundTripReport> {
    // recovering at level p reads μ at levels p + e_J
    let mut need: Vec<Degree> = Vec::new();
    let ones = Degree::ones(g.k());
    for p in levels {
        for d in ones.box_below() {
            let q = p + &d;
            if !need.contains(&q) {
                need.push(q);
            }
        }
    }
    let mu = state.mu(g, &need)?;
    let eps = recover_epsilon(g, &mu, &state.dynamics, levels, ROUNDTRIP_TOL)?;
    let mut max_error: f64 = 0.0;
    for p in levels {
        let a = eps.level(g, p)?;
        let b = state.eps.level(g, p)?;
        for (x, y) in a.iter().zip(&b) {
            max_error = max_error.max((x - y).abs());
        }
    }
    Ok(RoundTripReport { max_error, pass: max_error <= ROUNDTRIP_TOL })
}

/// max |φ_{tε₁+(1−t)ε₂}(E) − tφ₁(E) − (1−t)φ₂(E)| over the samples, for
/// normalized ε₁, ε₂.
pub fn affine_defect<S: Scalar>(
    g: &KGraph,
    s1: &KmsState,
    s2: &KmsState,
    t: f64,
    levels: &[Degree],
    samples: &[NtElement<S>],
) -> Result<f64> {
    let mix = s1.eps.affine(g, &t, &s2.eps, &(1.0 - t), levels)?;
    let s = make_kms_state(g, &mix, &s1.dynamics)?;
    let mut worst: f64 = 0.0;
    for e in samples {
        let lhs = s.eval(g, e)?;
        let rhs = s1.eval(g, e)? * t + s2.eval(g, e)? * (1.0 - t);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// φ(Π_i(1 − Σ_{Λ^{e_i}} S_λS_λ*)ψ_0(a)), which equals ∫a dε for a of depth 0.
pub fn obstruction_value(g: &KGraph, state: &KmsState, a: &CylinderFunction<Numeric>) -> Result<Numeric> {
    let calc = Calculus::<Numeric>::new(g)?;
    let k = g.k();
    let one = NtElement::<Numeric>::identity(g);
    let mut p = NtElement::psi(g, a)?;
    for i in 0..k {
        let d = one.sub(g, &range_projection(g, &Degree::unit(k, i), None)?)?;
        p = calc.multiply(&d, &p)?;
    }
    state.eval(g, &p)
}

/// r = (β_{c_1}, …, β_{c_k}).
pub fn preferred_r(g: &KGraph) -> Result<Vec<f64>> {
    let bc = beta_c::<f64>(g);
    if let Some(i) = bc.iter().position(|&b| b <= 1e-12) {
        return Err(KmsError::ZeroCriticalTemperature(i + 1));
    }
    Ok(bc)
}

/// The left Perron eigenvector of a non-negative matrix, by power iteration on
/// (A + I)ᵀ.
fn left_perron(a: &DMatrix<f64>) -> DVector<f64> {
    right_perron(&a.transpose())
}

fn right_perron(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows();
    let b = a + DMatrix::identity(n, n);
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..100_000 {
        let mut y = &b * &x;
        let s = y.sum();
        y /= s;
        let diff = (&y - &x).amax();
        x = y;
        if diff < 1e-15 {
            break;
        }
    }
    x
}

/// An ultimately periodic path prefix·cycle·cycle·… with r(u) maximizing the
/// left Perron vector of A_1.
pub fn critical_path(g: &KGraph) -> Result<(Path, Path)> {
    let a1 = g.vertex_matrices().as_f64()[0].clone();
    let y = left_perron(&a1);
    let start = (0..g.num_vertices()).fold(0, |b, v| if y[v] > y[b] + 1e-12 { v } else { b });
    let ones = Degree::ones(g.k());
    let level = g.level(&ones)?;
    let mut visited = vec![start];
    let mut steps: Vec<Path> = Vec::new();
    loop {
        let v = *visited.last().unwrap();
        let step = level.paths.iter().find(|p| p.range() == v).ok_or(KmsError::NoExtensions(v))?.clone();
        let w = step.source();
        steps.push(step);
        if let Some(pos) = visited.iter().position(|&x| x == w) {
            let mut prefix = g.vertex_path(start);
            for s in &steps[..pos] {
                prefix = g.compose(&prefix, s)?;
            }
            let mut cycle = g.vertex_path(steps[pos].range());
            for s in &steps[pos..] {
                cycle = g.compose(&cycle, s)?;
            }
            return Ok((prefix, cycle));
        }
        visited.push(w);
    }
}

/// One step of the critical-temperature sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalStep {
    pub beta: f64,
    pub f_u: f64,
    /// φ_j(Σ_{λ∈Λ^n} S_λS_λ*) for each requested n.
    pub vanishing: Vec<(Degree, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalReport {
    pub r: Vec<f64>,
    pub prefix: String,
    pub cycle: String,
    pub steps: Vec<CriticalStep>,
    pub increasing: bool,
}

/// β_j = 1 + 2^{−j}, j = 0..=12.
pub fn default_schedule() -> Vec<f64> {
    (0..=12).map(|j| 1.0 + 2f64.powi(-j)).collect()
}

/// States φ_j from ε_j = f_{β_j}(u)^{−1}δ_u under the preferred dynamics.
pub fn critical_sequence(g: &KGraph, schedule: &[f64], ns: &[Degree]) -> Result<CriticalReport> {
    let r = preferred_r(g)?;
    let (prefix, cycle) = critical_path(g)?;
    let delta = point_mass::<f64>(g, &prefix, &cycle)?;
    let mut steps = Vec::new();
    for &beta in schedule {
        let dynamics = Dynamics::new(beta, r.clone());
        let f = f_beta(g, &dynamics)?;
        let f_u = f[prefix.range()];
        let state = make_kms_state(g, &delta, &dynamics)?;
        let mut vanishing = Vec::new();
        for n in ns {
            let q = range_projection::<Numeric>(g, n, None)?;
            vanishing.push((n.clone(), state.eval(g, &q)?.re));
        }
        steps.push(CriticalStep { beta, f_u, vanishing });
    }
    let increasing = steps.windows(2).all(|w| w[1].f_u > w[0].f_u);
    Ok(CriticalReport { r, prefix: g.path_name(&prefix), cycle: g.path_name(&cycle), steps, increasing })
}

/// How mass at a cylinder is split among its degree-(1,…,1) extensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitStrategy {
    Uniform,
    /// Proportional to the right Perron vector of A_1⋯A_k at the source.
    Perron,
    /// Random positive proportions from the given seed.
    Random(u64),
}

/// Weights at the levels lD, l ≤ max_l, D = (1,…,1), starting from ε on
/// the vertices and splitting each cylinder's mass among its extensions.
pub fn measure_from_vertex_vector<W: Weight>(
    g: &KGraph,
    eps: &[W],
    strategy: SplitStrategy,
    max_l: u32,
) -> Result<CylinderMeasure<W>> {
    let k = g.k();
    let d = Degree::ones(k);
    let ext = g.level(&d)?;
    let nv = g.num_vertices();
    // split[i] for λ_i ∈ Λ^D: share of r(λ_i)'s mass going to λ_i
    let raw: Vec<W> = match strategy {
        SplitStrategy::Uniform => vec![W::one(); ext.len()],
        SplitStrategy::Perron => {
            let x = right_perron(&g.vertex_matrices().power(&d));
            ext.paths.iter().map(|p| W::of_f64(x[p.source()])).collect()
        }
        SplitStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ext.paths.iter().map(|_| W::of_usize(rng.gen_range(1..=9))).collect()
        }
    };
    let mut totals = vec![W::zero(); nv];
    for (p, w) in ext.paths.iter().zip(&raw) {
        totals[p.range()] = totals[p.range()].clone() + w.clone();
    }
    if let Some(v) = totals.iter().position(|t| t.is_zero()) {
        return Err(KmsError::NoExtensions(v));
    }
    let split: Vec<W> = ext.paths.iter().zip(&raw).map(|(p, w)| w.clone() / totals[p.range()].clone()).collect();
    let mut levels = BTreeMap::new();
    let mut cur_deg = Degree::zero(k);
    let mut cur = eps.to_vec();
    levels.insert(cur_deg.clone(), cur.clone());
    for _ in 0..max_l {
        let next_deg = &cur_deg + &d;
        let head = g.segment_map(&next_deg, &Degree::zero(k), &cur_deg)?;
        let tail = g.segment_map(&next_deg, &cur_deg, &next_deg)?;
        let next: Vec<W> = head.iter().zip(tail.iter()).map(|(&h, &t)| cur[h].clone() * split[t].clone()).collect();
        levels.insert(next_deg.clone(), next.clone());
        cur = next;
        cur_deg = next_deg;
    }
    Ok(CylinderMeasure::from_levels(k, levels))
}

/// The restriction of φ_δ to the Toeplitz algebra of Λ.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionReport {
    pub y_dot_eps: f64,
    /// max |φ_δ(S_λS_μ*) − δ_{λ,μ} e^{−βr·d(λ)} m_{s(λ)}| with
    /// m = Π(I − e^{−βr_i}A_i)^{−1}ε.
    pub toeplitz_defect: f64,
    pub samples: usize,
    pub pass: bool,
}

/// All S_λS_μ* with d(λ), d(μ) ≤ max.
pub fn toeplitz_samples(g: &KGraph, max: &Degree) -> Result<Vec<(Path, Path)>> {
    let mut paths = Vec::new();
    for d in max.box_below() {
        paths.extend(g.level(&d)?.paths.iter().cloned());
    }
    let mut out = Vec::new();
    for l in &paths {
        for m in &paths {
            if l.source() == m.source() {
                out.push((l.clone(), m.clone()));
            }
        }
    }
    Ok(out)
}

pub fn restrict_to_toeplitz(
    g: &KGraph,
    delta: &CylinderMeasure<f64>,
    dynamics: &Dynamics<f64>,
    max: &Degree,
) -> Result<RestrictionReport> {
    let y = f_beta(g, dynamics)?;
    let eps = delta.level(g, &Degree::zero(g.k()))?;
    let y_dot_eps: f64 = y.iter().zip(&eps).map(|(a, b)| a * b).sum();
    if (y_dot_eps - 1.0).abs() > ROUNDTRIP_TOL {
        return Err(KmsError::NotNormalized(y_dot_eps));
    }
    let state = make_kms_state(g, delta, dynamics)?;
    let mvec = resolvent_apply(g, dynamics, &DVector::from_vec(eps))?;
    let calc = Calculus::<Numeric>::new(g)?;
    let samples = toeplitz_samples(g, max)?;
    let mut toeplitz_defect: f64 = 0.0;
    for (l, m) in &samples {
        let e = calc.multiply(&NtElement::s(g, l)?, &NtElement::s(g, m)?.adjoint())?;
        let got = state.eval(g, &e)?;
        let want = if l == m { dynamics.weight(l.degree()) * mvec[l.source()] } else { 0.0 };
        toeplitz_defect = toeplitz_defect.max((got - want).norm());
    }
    Ok(RestrictionReport {
        y_dot_eps,
        toeplitz_defect,
        samples: samples.len(),
        pass: toeplitz_defect <= KMS_TOL,
    })
}

/// Compares two states on Toeplitz samples and on the deep diagonal terms
/// ψ_m(χ_λ)ψ_m(χ_λ)* with d(λ) = m + depth.
#[derive(Clone, Debug, PartialEq)]
pub struct RestrictionComparison {
    pub toeplitz_max_diff: f64,
    pub deep_max_diff: f64,
    pub deep_witness: Option<String>,
}

pub fn compare_restrictions(
    g: &KGraph,
    d1: &CylinderMeasure<f64>,
    d2: &CylinderMeasure<f64>,
    dynamics: &Dynamics<f64>,
    max: &Degree,
    depth: &Degree,
) -> Result<RestrictionComparison> {
    let s1 = make_kms_state(g, d1, dynamics)?;
    let s2 = make_kms_state(g, d2, dynamics)?;
    let calc = Calculus::<Numeric>::new(g)?;
    let mut toeplitz_max_diff: f64 = 0.0;
    for (l, m) in toeplitz_samples(g, max)? {
        let e = calc.multiply(&NtElement::s(g, &l)?, &NtElement::s(g, &m)?.adjoint())?;
        toeplitz_max_diff = toeplitz_max_diff.max((s1.eval(g, &e)? - s2.eval(g, &e)?).norm());
    }
    let mut deep_max_diff: f64 = 0.0;
    let mut deep_witness = None;
    for m in max.box_below() {
        for lam in &g.level(&(&m + depth))?.paths {
            let chi = CylinderFunction::<Numeric>::indicator(g, lam)?.in_fiber(m.clone());
            let e = NtElement::from_term(g, &SpanningTerm::new(chi.clone(), chi))?;
            let diff = (s1.eval(g, &e)? - s2.eval(g, &e)?).norm();
            if diff > deep_max_diff {
                deep_max_diff = diff;
                deep_witness = Some(format!("psi_{m}({0})psi_{m}({0})*", g.path_name(lam)));
            }
        }
    }
    Ok(RestrictionComparison { toeplitz_max_diff, deep_max_diff, deep_witness })
}
