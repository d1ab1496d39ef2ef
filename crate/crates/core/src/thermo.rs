//! Critical inverse temperatures, f_β, and the correspondence between
//! measures ε and subinvariant measures μ = Σ_n e^{−βr·n} R^n ε.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::KGraph;
use crate::pathspace::{transfer_level, CylinderMeasure, PathSpaceError};
use crate::scalar::Real;

/// Minimum of βr_i − ln ρ(A_i) accepted by the resolvent formulas.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-9;
/// Relative tolerance of the power iteration.
pub const SPECTRAL_TOL: f64 = 1e-12;
/// Default j-schedule for the Gelfand estimator.
pub const GELFAND_SCHEDULE: [usize; 4] = [10, 100, 1000, 5000];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error(transparent)]
    PathSpace(#[from] PathSpaceError),
    #[error("dynamics not admissible: βr_{color} − ln ρ(A_{color}) = {margin:.3e}")]
    NotAdmissible { color: usize, margin: f64 },
    #[error("r needs {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("resolvent is singular")]
    Singular,
    #[error("recovered ε is negative ({value:.3e}) at level {level}, cylinder {index}")]
    NotSubinvariant { level: Degree, index: usize, value: f64 },
    #[error("series did not reach tolerance {0:e}")]
    NoConvergence(f64),
}

/// The dynamics α_t = γ_{e^{itr}} at inverse temperature β.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics<F> {
    pub r: Vec<F>,
    pub beta: F,
    /// Declared, not certified: floating-point r cannot be tested for
    /// rational independence.
    pub rationally_independent: bool,
}

impl<F: Real> Dynamics<F> {
    pub fn new(beta: F, r: Vec<F>) -> Self {
        Dynamics { r, beta, rationally_independent: false }
    }

    /// t_i = e^{−βr_i}
    pub fn t(&self) -> Vec<F> {
        self.r.iter().map(|&ri| (-(self.beta * ri)).exp()).collect()
    }

    /// e^{−βr·n}
    pub fn weight(&self, n: &Degree) -> F {
        let s = n.entries().iter().zip(&self.r).fold(F::zero(), |acc, (&ni, &ri)| acc + F::from_u32(ni).unwrap() * ri);
        (-(self.beta * s)).exp()
    }

    pub fn with_beta(&self, beta: F) -> Self {
        Dynamics { beta, ..self.clone() }
    }

    /// βr_i − β_{c_i} for each color.
    pub fn margins(&self, beta_c: &[F]) -> Vec<F> {
        self.r.iter().zip(beta_c).map(|(&ri, &bc)| self.beta * ri - bc).collect()
    }

    pub fn check_admissible(&self, beta_c: &[F]) -> Result<(), ThermoError> {
        if self.r.len() != beta_c.len() {
            return Err(ThermoError::Shape { expected: beta_c.len(), got: self.r.len() });
        }
        for (i, m) in self.margins(beta_c).into_iter().enumerate() {
            if m.to_f64().unwrap() < ADMISSIBILITY_MARGIN {
                return Err(ThermoError::NotAdmissible { color: i + 1, margin: m.to_f64().unwrap() });
            }
        }
        Ok(())
    }
}

fn from_f64<F: Real>(x: f64) -> F {
    F::from_f64(x).unwrap()
}

/// ρ(A) for a non-negative matrix: power iteration on each strongly
/// connected block, bracketed by Collatz–Wielandt bounds.
pub fn spectral_radius<F: Real>(a: &DMatrix<F>) -> F {
    let n = a.nrows();
    let mut dg = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| dg.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] > F::zero() {
                dg.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut best = F::zero();
    for comp in tarjan_scc(&dg) {
        let idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
        let m = idx.len();
        let b = DMatrix::from_fn(m, m, |i, j| a[(idx[i], idx[j])]);
        if b.iter().all(|x| x.is_zero()) {
            continue;
        }
        best = best.max(irreducible_radius(&b));
    }
    best
}

fn irreducible_radius<F: Real>(b: &DMatrix<F>) -> F {
    let m = b.nrows();
    // B + I is primitive, so the iteration converges without periodic
    // oscillation.
    let shifted = b + DMatrix::identity(m, m);
    let tol = from_f64::<F>(SPECTRAL_TOL).max(F::default_epsilon() * from_f64(16.0));
    let mut x = DVector::from_element(m, F::one());
    let (mut lo, mut hi) = (F::zero(), F::max_value().unwrap());
    for _ in 0..1_000_000 {
        let y = &shifted * &x;
        lo = F::max_value().unwrap();
        hi = F::zero();
        for i in 0..m {
            let ratio = y[i] / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        if hi - lo <= tol * hi {
            break;
        }
        let norm = y.max();
        x = y / norm;
    }
    (lo + hi) / from_f64(2.0) - F::one()
}

/// g(j) = j⁻¹ ln max_v (1ᵀA^j)_v, normalized at every step.
pub fn gelfand_estimate<F: Real>(a: &DMatrix<F>, j: usize) -> F {
    let n = a.nrows();
    let mut row = DVector::from_element(n, F::one()).transpose();
    let mut log_scale = F::zero();
    for _ in 0..j {
        row = &row * a;
        let mx = row.max();
        if mx <= F::zero() {
            return F::min_value().unwrap();
        }
        log_scale += mx.ln();
        row /= mx;
    }
    log_scale / F::from_usize(j).unwrap()
}

/// Critical inverse temperatures with the Gelfand cross-check.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalTemperatures<F> {
    pub spectral_radii: Vec<F>,
    pub beta_c: Vec<F>,
    /// For each color, (j, g(j)) along the schedule.
    pub gelfand: Vec<Vec<(usize, F)>>,
}

pub fn critical_temperatures<F: Real>(g: &KGraph, schedule: &[usize]) -> CriticalTemperatures<F> {
    let mats: Vec<DMatrix<F>> =
        g.vertex_matrices().mats.iter().map(|m| m.map(|x| F::from_u64(x).unwrap())).collect();
    let spectral_radii: Vec<F> = mats.iter().map(spectral_radius).collect();
    let beta_c = spectral_radii.iter().map(|r| r.ln()).collect();
    let gelfand = mats.iter().map(|a| schedule.iter().map(|&j| (j, gelfand_estimate(a, j))).collect()).collect();
    CriticalTemperatures { spectral_radii, beta_c, gelfand }
}

pub fn beta_c<F: Real>(g: &KGraph) -> Vec<F> {
    critical_temperatures::<F>(g, &[]).beta_c
}

fn vertex_mats<F: Real>(g: &KGraph) -> Vec<DMatrix<F>> {
    g.vertex_matrices().mats.iter().map(|m| m.map(|x| F::from_u64(x).unwrap())).collect()
}

/// f_β(v) = (1ᵀ Π_i (I − e^{−βr_i}A_i)^{−1})_v
pub fn f_beta<F: Real>(g: &KGraph, dynamics: &Dynamics<F>) -> Result<DVector<F>, ThermoError> {
    dynamics.check_admissible(&beta_c::<F>(g))?;
    let n = g.num_vertices();
    let mut f = DVector::from_element(n, F::one());
    for (a, t) in vertex_mats::<F>(g).iter().zip(dynamics.t()) {
        let m = DMatrix::identity(n, n) - a.transpose() * t;
        f = m.lu().solve(&f).ok_or(ThermoError::Singular)?;
    }
    Ok(f)
}

/// μ(Z(v)) = (Π_i (I − e^{−βr_i}A_i)^{−1} ε)_v
pub fn resolvent_apply<F: Real>(g: &KGraph, dynamics: &Dynamics<F>, eps: &DVector<F>) -> Result<DVector<F>, ThermoError> {
    let n = g.num_vertices();
    let mut v = eps.clone();
    for (a, t) in vertex_mats::<F>(g).iter().zip(dynamics.t()) {
        let m = DMatrix::identity(n, n) - a * t;
        v = m.lu().solve(&v).ok_or(ThermoError::Singular)?;
    }
    Ok(v)
}

fn col_norm<F: Real>(m: &DMatrix<F>) -> F {
    m.column_iter().map(|c| c.iter().fold(F::zero(), |a, &x| a + x.abs())).fold(F::zero(), |a, b| a.max(b))
}

fn row_norm<F: Real>(m: &DMatrix<F>) -> F {
    col_norm(&m.transpose())
}

/// Truncation of Σ_n Π_i (t_iA_i)^{n_i} to n_i < len with a certified bound
/// on the neglected part in the given submultiplicative norm.
struct TruncatedSeries<F> {
    partial: Vec<DMatrix<F>>,
    tail_bound: F,
}

fn truncated_series<F: Real>(
    mats: &[DMatrix<F>],
    t: &[F],
    tol: F,
    norm: fn(&DMatrix<F>) -> F,
) -> Result<TruncatedSeries<F>, ThermoError> {
    let n = mats[0].nrows();
    let eye = DMatrix::<F>::identity(n, n);
    let scaled: Vec<DMatrix<F>> = mats.iter().zip(t).map(|(a, &ti)| a * ti).collect();
    // block length J_i with ‖(t_iA_i)^J‖ < 1
    let mut blocks = Vec::new();
    for s in &scaled {
        let mut p = s.clone();
        let mut found = None;
        for j in 1..=100_000 {
            let q = norm(&p);
            if q < from_f64(0.999) {
                found = Some((j, q));
                break;
            }
            p = &p * s;
            let mx = p.max();
            if mx.is_zero() {
                found = Some((j + 1, F::zero()));
                break;
            }
        }
        blocks.push(found.ok_or(ThermoError::NoConvergence(tol.to_f64().unwrap()))?);
    }
    let mut len = 8usize;
    loop {
        let mut partial = Vec::new();
        let mut bounds = Vec::new();
        for (s, &(block, q)) in scaled.iter().zip(&blocks) {
            let mut sum = eye.clone();
            let mut p = eye.clone();
            for _ in 1..len {
                p = &p * s;
                sum += &p;
            }
            // tail Σ_{j≥len} ≤ Σ_{r<J} ‖s^{len+r}‖ / (1 − q)
            let mut tail = F::zero();
            let mut pr = &p * s;
            for _ in 0..block {
                tail += norm(&pr);
                pr = &pr * s;
            }
            let tail = tail / (F::one() - q);
            bounds.push((norm(&sum) + tail, tail));
            partial.push(sum);
        }
        let full: F = bounds.iter().fold(F::one(), |a, (b, _)| a * *b);
        let kept: F = bounds.iter().fold(F::one(), |a, (b, tl)| a * (*b - *tl));
        let tail_bound = full - kept;
        if tail_bound <= tol {
            return Ok(TruncatedSeries { partial, tail_bound });
        }
        if len > 1 << 20 {
            return Err(ThermoError::NoConvergence(tol.to_f64().unwrap()));
        }
        len *= 2;
    }
}

/// f_β by truncated series, with the certified bound on the remainder.
pub fn f_beta_series<F: Real>(g: &KGraph, dynamics: &Dynamics<F>, tol: F) -> Result<(DVector<F>, F), ThermoError> {
    dynamics.check_admissible(&beta_c::<F>(g))?;
    let n = g.num_vertices();
    let ts = truncated_series(&vertex_mats::<F>(g), &dynamics.t(), tol, col_norm)?;
    let mut row = DVector::from_element(n, F::one()).transpose();
    for s in &ts.partial {
        row = &row * s;
    }
    Ok((row.transpose(), ts.tail_bound))
}

/// The operator T_i = R^{e_i} on weights over Λ^p, for p_i = 0.
fn level_transfer_matrix<F: Real>(g: &KGraph, p: &Degree, i: usize) -> Result<DMatrix<F>, ThermoError> {
    let k = g.k();
    let top = p + &Degree::unit(k, i);
    let n = g.level(p).map_err(PathSpaceError::from)?.len();
    let head = g.segment_map(&top, &Degree::zero(k), p).map_err(PathSpaceError::from)?;
    let tail = g.segment_map(&top, &Degree::unit(k, i), &top).map_err(PathSpaceError::from)?;
    let mut m = DMatrix::zeros(n, n);
    for (h, t) in head.iter().zip(tail.iter()) {
        m[(*h, *t)] += F::one();
    }
    Ok(m)
}

/// μ = Σ_n e^{−βr·n} R^n ε on the given levels, in closed form.
///
/// Writing n = a + j with a ≤ q and j supported where a_i = q_i, each term
/// is R^j ε read at level q − a, and the sum over j is a product of
/// resolvents of the level operators T_i.
pub fn solve_mu<F: Real>(
    g: &KGraph,
    eps: &CylinderMeasure<F>,
    dynamics: &Dynamics<F>,
    levels: &[Degree],
) -> Result<CylinderMeasure<F>, ThermoError> {
    dynamics.check_admissible(&beta_c::<F>(g))?;
    let k = g.k();
    let t = dynamics.t();
    let mut cache: HashMap<(Degree, Vec<usize>), DVector<F>> = HashMap::new();
    let mut out = BTreeMap::new();
    for q in levels {
        let n = g.level(q).map_err(PathSpaceError::from)?.len();
        let mut mu = vec![F::zero(); n];
        for a in q.box_below() {
            let colors: Vec<usize> = (0..k).filter(|&i| a[i] == q[i]).collect();
            let low = q.checked_sub(&a).expect("a <= q");
            let key = (low.clone(), colors.clone());
            if !cache.contains_key(&key) {
                let mut v = DVector::from_vec(eps.level(g, &low)?);
                let dim = v.len();
                for &i in &colors {
                    let ti = level_transfer_matrix::<F>(g, &low, i)?;
                    let m = DMatrix::identity(dim, dim) - ti * t[i];
                    v = m.lu().solve(&v).ok_or(ThermoError::Singular)?;
                }
                cache.insert(key.clone(), v);
            }
            let v = &cache[&key];
            let w = dynamics.weight(&a);
            let seg = g.segment_map(q, &a, q).map_err(PathSpaceError::from)?;
            for (x, &s) in mu.iter_mut().zip(seg.iter()) {
                *x += w * v[s];
            }
        }
        out.insert(q.clone(), mu);
    }
    Ok(CylinderMeasure::from_levels(k, out))
}

/// μ by truncating Σ_n e^{−βr·n} R^n ε to a box, built by applying single
/// transfer steps. Returns the measure and the certified bound on each
/// cylinder's remainder.
pub fn solve_mu_series<F: Real>(
    g: &KGraph,
    eps: &CylinderMeasure<F>,
    dynamics: &Dynamics<F>,
    q: &Degree,
    tol: F,
) -> Result<(CylinderMeasure<F>, F), ThermoError> {
    dynamics.check_admissible(&beta_c::<F>(g))?;
    let k = g.k();
    let eps_vec = DVector::from_vec(eps.level(g, &Degree::zero(k))?);
    let eps_norm = eps_vec.iter().fold(F::zero(), |a, &x| a.max(x.abs()));
    let terms = series_length::<F>(g, dynamics, tol / (eps_norm + F::one()))?;
    let levels = q.box_below();
    let mut acc: BTreeMap<Degree, Vec<F>> =
        levels.iter().map(|p| Ok((p.clone(), vec![F::zero(); g.level(p).map_err(PathSpaceError::from)?.len()]))).collect::<Result<_, ThermoError>>()?;
    // R^n ε for n in the box [0, terms)^k, breadth-first along color 1 last
    let mut current: HashMap<Degree, CylinderMeasure<F>> = HashMap::new();
    let base = eps.materialize(g, &levels)?;
    current.insert(Degree::zero(k), base);
    let boxes = Degree::new(vec![terms as u32 - 1; k]).box_below();
    let mut order = boxes;
    order.sort_by_key(|d| d.total());
    for n in &order {
        let nu = match current.get(n) {
            Some(nu) => nu.clone(),
            None => {
                let i = (0..k).find(|&i| n[i] > 0).expect("nonzero");
                let prev = n.checked_sub(&Degree::unit(k, i)).unwrap();
                let src = current.get(&prev).expect("visited in order").clone();
                let mut lv = BTreeMap::new();
                for p in &levels {
                    lv.insert(p.clone(), transfer_level(g, &Degree::unit(k, i), &src, p)?);
                }
                let nu = CylinderMeasure::from_levels(k, lv);
                current.insert(n.clone(), nu.clone());
                nu
            }
        };
        let w = dynamics.weight(n);
        for p in &levels {
            let vals = nu.level(g, p)?;
            for (a, v) in acc.get_mut(p).unwrap().iter_mut().zip(vals) {
                *a += w * v;
            }
        }
    }
    let bound = series_tail::<F>(g, dynamics, terms)? * eps_norm;
    Ok((CylinderMeasure::from_levels(k, acc.into_iter().filter(|(p, _)| p == q)), bound))
}

fn series_length<F: Real>(g: &KGraph, dynamics: &Dynamics<F>, tol: F) -> Result<usize, ThermoError> {
    let mut len = 4;
    loop {
        if series_tail::<F>(g, dynamics, len)? <= tol {
            return Ok(len);
        }
        if len > 1 << 16 {
            return Err(ThermoError::NoConvergence(tol.to_f64().unwrap()));
        }
        len *= 2;
    }
}

/// Row-sum-norm bound on Σ_{n ∉ [0,len)^k} Π_i (t_iA_i)^{n_i}.
fn series_tail<F: Real>(g: &KGraph, dynamics: &Dynamics<F>, len: usize) -> Result<F, ThermoError> {
    let mats = vertex_mats::<F>(g);
    let n = mats[0].nrows();
    let eye = DMatrix::<F>::identity(n, n);
    let mut full = F::one();
    let mut kept = F::one();
    for (a, &t) in mats.iter().zip(&dynamics.t()) {
        let s = a * t;
        let mut sum = eye.clone();
        let mut p = eye.clone();
        for _ in 1..len {
            p = &p * &s;
            sum += &p;
        }
        let mut block = None;
        let mut pw = s.clone();
        for j in 1..=100_000 {
            let q = row_norm(&pw);
            if q < from_f64(0.999) {
                block = Some((j, q));
                break;
            }
            pw = &pw * &s;
        }
        let (block, q) = block.ok_or(ThermoError::NoConvergence(0.0))?;
        let mut tail = F::zero();
        let mut pr = &p * &s;
        for _ in 0..block {
            tail += row_norm(&pr);
            pr = &pr * &s;
        }
        let tail = tail / (F::one() - q);
        let b = row_norm(&sum) + tail;
        full *= b;
        kept *= b - tail;
    }
    Ok(full - kept)
}

/// Π_{i∈K} (1 − e^{−βr_i}R^{e_i}) μ on Λ^p, for K a bitmask over colors.
pub fn subinvariance_level<F: Real>(
    g: &KGraph,
    mu: &CylinderMeasure<F>,
    dynamics: &Dynamics<F>,
    mask: usize,
    p: &Degree,
) -> Result<Vec<F>, ThermoError> {
    let k = g.k();
    let t = dynamics.t();
    let n = g.level(p).map_err(PathSpaceError::from)?.len();
    let mut out = vec![F::zero(); n];
    for sub in 0..(1usize << k) {
        if sub & !mask != 0 {
            continue;
        }
        let mut coef = F::one();
        let mut e = vec![0u32; k];
        for i in 0..k {
            if sub >> i & 1 == 1 {
                coef = -(coef * t[i]);
                e[i] = 1;
            }
        }
        let vals = transfer_level(g, &Degree::new(e), mu, p)?;
        for (o, v) in out.iter_mut().zip(vals) {
            *o += coef * v;
        }
    }
    Ok(out)
}

/// ε = Π_i (1 − e^{−βr_i}R^{e_i}) μ on the given levels.
pub fn recover_epsilon<F: Real>(
    g: &KGraph,
    mu: &CylinderMeasure<F>,
    dynamics: &Dynamics<F>,
    levels: &[Degree],
    tol: F,
) -> Result<CylinderMeasure<F>, ThermoError> {
    let full = (1usize << g.k()) - 1;
    let mut out = BTreeMap::new();
    for p in levels {
        let vals = subinvariance_level(g, mu, dynamics, full, p)?;
        if let Some((index, v)) = vals.iter().enumerate().find(|(_, v)| **v < -tol) {
            return Err(ThermoError::NotSubinvariant { level: p.clone(), index, value: v.to_f64().unwrap() });
        }
        out.insert(p.clone(), vals);
    }
    Ok(CylinderMeasure::from_levels(g.k(), out))
}

/// Minimum of Π_{i∈K}(1 − e^{−βr_i}R^{e_i})μ over the cylinders of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct SubinvarianceEntry<F> {
    /// Colors in K, 1-based.
    pub colors: Vec<usize>,
    pub min_value: F,
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubinvarianceReport<F> {
    pub level: Degree,
    pub entries: Vec<SubinvarianceEntry<F>>,
    pub pass: bool,
}

pub fn check_subinvariance<F: Real>(
    g: &KGraph,
    mu: &CylinderMeasure<F>,
    dynamics: &Dynamics<F>,
    level: &Degree,
    tol: F,
) -> Result<SubinvarianceReport<F>, ThermoError> {
    let k = g.k();
    let mut entries = Vec::new();
    let mut pass = true;
    for mask in 0..(1usize << k) {
        let vals = subinvariance_level(g, mu, dynamics, mask, level)?;
        let (witness, &min_value) = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .expect("levels are nonempty");
        pass &= min_value >= -tol;
        let colors = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect();
        entries.push(SubinvarianceEntry { colors, min_value, witness });
    }
    Ok(SubinvarianceReport { level: level.clone(), entries, pass })
}

/// Everything `spectra`/`fbeta` report about one graph and dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoReport<F> {
    pub critical: CriticalTemperatures<F>,
    pub f_beta: Option<Vec<F>>,
    pub admissible: Vec<bool>,
}

pub fn thermo_report<F: Real>(g: &KGraph, dynamics: &Dynamics<F>, schedule: &[usize]) -> ThermoReport<F> {
    let critical = critical_temperatures::<F>(g, schedule);
    let admissible =
        dynamics.margins(&critical.beta_c).iter().map(|m| m.to_f64().unwrap() >= ADMISSIBILITY_MARGIN).collect();
    let f_beta = f_beta(g, dynamics).ok().map(|v| v.iter().copied().collect());
    ThermoReport { critical, f_beta, admissible }
}
