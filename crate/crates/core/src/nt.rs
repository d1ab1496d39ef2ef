//! A normal form for the spanning elements ψ_m(x)ψ_n(y)* of the
//! Nica-Toeplitz algebra, and products computed through the two-partition
//! swap formula.
//!
//! Canonical terms are triples (α, β, γ) with d(α) = m, d(β) = n and
//! d(γ) = c (the block's core degree), standing for
//! S_α ψ_0(χ_{Z(γ)}) S_β* = ψ_m(χ_{Z(αγ)}) ψ_n(χ_{Z(βγ)})*.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, KGraphError, Path};
use crate::pathspace::{
    decompose, inner_product, left_action, multiply as fmul, pullback, standard_frame, CylinderFunction,
    PathSpaceError,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalculusError {
    #[error(transparent)]
    PathSpace(#[from] PathSpaceError),
    #[error("products need a 1-coaligned graph")]
    NotCoaligned,
}

impl From<KGraphError> for CalculusError {
    fn from(e: KGraphError) -> Self {
        CalculusError::PathSpace(e.into())
    }
}

/// coeff · ψ_m(x) ψ_n(y)*, with m and n the fibers of x and y.
#[derive(Clone, Debug)]
pub struct SpanningTerm<S> {
    pub coeff: S,
    pub x: CylinderFunction<S>,
    pub y: CylinderFunction<S>,
}

impl<S: Scalar> SpanningTerm<S> {
    pub fn new(x: CylinderFunction<S>, y: CylinderFunction<S>) -> Self {
        SpanningTerm { coeff: S::one(), x, y }
    }

    pub fn m(&self) -> &Degree {
        self.x.fiber()
    }

    pub fn n(&self) -> &Degree {
        self.y.fiber()
    }
}

/// Index triple (α, β, γ) into Λ^m × Λ^n × Λ^c.
pub type Triple = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq)]
struct Block<S> {
    core: Degree,
    coeffs: BTreeMap<Triple, S>,
}

/// One canonical term with resolved paths.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalTerm<S> {
    pub m: Degree,
    pub n: Degree,
    pub alpha: Path,
    pub beta: Path,
    pub gamma: Path,
    pub coeff: S,
}

/// A finite linear combination of spanning terms in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct NtElement<S> {
    k: usize,
    blocks: BTreeMap<(Degree, Degree), Block<S>>,
}

impl<S: Scalar> NtElement<S> {
    pub fn zero(k: usize) -> Self {
        NtElement { k, blocks: BTreeMap::new() }
    }

    /// ψ_0(1)
    pub fn identity(g: &KGraph) -> Self {
        let z = Degree::zero(g.k());
        let one = CylinderFunction::constant(g, S::one(), z.clone());
        Self::from_term(g, &SpanningTerm::new(one.clone(), one)).expect("depth-0 term")
    }

    /// S_λ = ψ_{d(λ)}(χ_{Z(λ)})
    pub fn s(g: &KGraph, lambda: &Path) -> Result<Self, CalculusError> {
        Self::psi(g, &CylinderFunction::indicator(g, lambda)?)
    }

    /// ψ_m(x) for x in X_m.
    pub fn psi(g: &KGraph, x: &CylinderFunction<S>) -> Result<Self, CalculusError> {
        let one = CylinderFunction::constant(g, S::one(), Degree::zero(g.k()));
        Self::from_term(g, &SpanningTerm::new(x.clone(), one))
    }

    pub fn from_term(g: &KGraph, t: &SpanningTerm<S>) -> Result<Self, CalculusError> {
        let mut e = Self::zero(g.k());
        e.add_term(g, t)?;
        Ok(e)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Degree pairs (m, n) with nonzero blocks.
    pub fn degrees(&self) -> Vec<(Degree, Degree)> {
        self.blocks.keys().cloned().collect()
    }

    pub fn num_terms(&self) -> usize {
        self.blocks.values().map(|b| b.coeffs.len()).sum()
    }

    /// Adds coeff·ψ_m(x)ψ_n(y)*, expanding x and y over indicators.
    pub fn add_term(&mut self, g: &KGraph, t: &SpanningTerm<S>) -> Result<(), CalculusError> {
        if t.coeff.is_zero() || t.x.is_zero() || t.y.is_zero() {
            return Ok(());
        }
        let (m, n) = (t.m().clone(), t.n().clone());
        let z = Degree::zero(self.k);
        let c = t.x.depth().saturating_sub(&m).join(&t.y.depth().saturating_sub(&n));
        let (mc, nc) = (&m + &c, &n + &c);
        let xr = t.x.refine(g, &mc)?;
        let yr = t.y.refine(g, &nc)?;
        let (xa, xg) = (g.segment_map(&mc, &z, &m)?, g.segment_map(&mc, &m, &mc)?);
        let (yb, yg) = (g.segment_map(&nc, &z, &n)?, g.segment_map(&nc, &n, &nc)?);
        let mut by_gamma: HashMap<usize, Vec<(usize, S)>> = HashMap::new();
        for (w, v) in yr.weights().iter().enumerate() {
            if !v.is_zero() {
                by_gamma.entry(yg[w]).or_default().push((yb[w], v.conj()));
            }
        }
        let mut coeffs = BTreeMap::new();
        for (w, v) in xr.weights().iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            if let Some(ys) = by_gamma.get(&xg[w]) {
                let cv = t.coeff.clone() * v.clone();
                for (beta, yv) in ys {
                    let key = (xa[w], *beta, xg[w]);
                    let val = cv.clone() * yv.clone();
                    add_coeff(&mut coeffs, key, val);
                }
            }
        }
        self.merge_block(g, m, n, Block { core: c, coeffs })
    }

    fn merge_block(&mut self, g: &KGraph, m: Degree, n: Degree, block: Block<S>) -> Result<(), CalculusError> {
        if block.coeffs.is_empty() {
            return Ok(());
        }
        let key = (m, n);
        let merged = match self.blocks.remove(&key) {
            None => block,
            Some(old) => {
                let core = old.core.join(&block.core);
                let mut a = refine_block(g, &key.0, &key.1, old, &core)?;
                let b = refine_block(g, &key.0, &key.1, block, &core)?;
                for (t, v) in b.coeffs {
                    add_coeff(&mut a.coeffs, t, v);
                }
                a
            }
        };
        let merged = coarsen_block(g, &key.0, &key.1, merged)?;
        if !merged.coeffs.is_empty() {
            self.blocks.insert(key, merged);
        }
        Ok(())
    }

    pub fn add(&self, g: &KGraph, other: &Self) -> Result<Self, CalculusError> {
        let mut out = self.clone();
        for ((m, n), b) in &other.blocks {
            out.merge_block(g, m.clone(), n.clone(), b.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = NtElement::zero(self.k);
        if c.is_zero() {
            return out;
        }
        for (key, b) in &self.blocks {
            let coeffs = b.coeffs.iter().map(|(t, v)| (*t, c.clone() * v.clone())).collect();
            out.blocks.insert(key.clone(), Block { core: b.core.clone(), coeffs });
        }
        out
    }

    pub fn sub(&self, g: &KGraph, other: &Self) -> Result<Self, CalculusError> {
        self.add(g, &other.scale(&-S::one()))
    }

    /// (S_α ψ_0(χ_γ) S_β*)* = S_β ψ_0(χ_γ) S_α*
    pub fn adjoint(&self) -> Self {
        let mut out = NtElement::zero(self.k);
        for ((m, n), b) in &self.blocks {
            let coeffs = b.coeffs.iter().map(|(&(a, bb, c), v)| ((bb, a, c), v.conj())).collect();
            out.blocks.insert((n.clone(), m.clone()), Block { core: b.core.clone(), coeffs });
        }
        out
    }

    /// Coefficient equality after refining to common cores.
    pub fn same(&self, g: &KGraph, other: &Self) -> Result<bool, CalculusError> {
        Ok(self.sub(g, other)?.is_zero())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> NtElement<T> {
        let mut out = NtElement::zero(self.k);
        for (key, b) in &self.blocks {
            let coeffs: BTreeMap<Triple, T> =
                b.coeffs.iter().map(|(t, v)| (*t, f(v))).filter(|(_, v)| !v.is_zero()).collect();
            if !coeffs.is_empty() {
                out.blocks.insert(key.clone(), Block { core: b.core.clone(), coeffs });
            }
        }
        out
    }

    /// Raw canonical data: ((m, n), core, triple, coefficient).
    pub fn raw_terms(&self) -> impl Iterator<Item = (&(Degree, Degree), &Degree, &Triple, &S)> {
        self.blocks.iter().flat_map(|(key, b)| b.coeffs.iter().map(move |(t, v)| (key, &b.core, t, v)))
    }

    pub fn canonical_terms(&self, g: &KGraph) -> Result<Vec<CanonicalTerm<S>>, CalculusError> {
        let mut out = Vec::new();
        for ((m, n), core, &(a, b, c), v) in self.raw_terms() {
            out.push(CanonicalTerm {
                m: m.clone(),
                n: n.clone(),
                alpha: g.level(m)?.paths[a].clone(),
                beta: g.level(n)?.paths[b].clone(),
                gamma: g.level(core)?.paths[c].clone(),
                coeff: v.clone(),
            });
        }
        Ok(out)
    }

    /// Records (m, n, λ, μ, coeff) with λ = αγ and μ = βγ.
    pub fn records(&self, g: &KGraph) -> Result<Vec<(Degree, Degree, Path, Path, S)>, CalculusError> {
        self.canonical_terms(g)?
            .into_iter()
            .map(|t| {
                let l = g.compose(&t.alpha, &t.gamma)?;
                let r = g.compose(&t.beta, &t.gamma)?;
                Ok((t.m, t.n, l, r, t.coeff))
            })
            .collect()
    }

    /// Each canonical term as an indicator spanning term.
    pub fn spanning_terms(&self, g: &KGraph) -> Result<Vec<SpanningTerm<S>>, CalculusError> {
        self.records(g)?
            .into_iter()
            .map(|(m, n, l, r, c)| {
                Ok(SpanningTerm {
                    coeff: c,
                    x: CylinderFunction::indicator(g, &l)?.in_fiber(m),
                    y: CylinderFunction::indicator(g, &r)?.in_fiber(n),
                })
            })
            .collect()
    }
}

fn add_coeff<S: Scalar>(map: &mut BTreeMap<Triple, S>, key: Triple, val: S) {
    let next = match map.remove(&key) {
        Some(old) => old + val,
        None => val,
    };
    if !next.is_zero() {
        map.insert(key, next);
    }
}

fn refine_block<S: Scalar>(
    g: &KGraph,
    _m: &Degree,
    _n: &Degree,
    block: Block<S>,
    core: &Degree,
) -> Result<Block<S>, CalculusError> {
    if &block.core == core {
        return Ok(block);
    }
    let parent = g.segment_map(core, &Degree::zero(g.k()), &block.core)?;
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); g.level(&block.core)?.len()];
    for (w, &p) in parent.iter().enumerate() {
        children[p].push(w);
    }
    let mut coeffs = BTreeMap::new();
    for ((a, b, c), v) in block.coeffs {
        for &w in &children[c] {
            coeffs.insert((a, b, w), v.clone());
        }
    }
    Ok(Block { core: core.clone(), coeffs })
}

/// Lowers the core while every parent cylinder is covered uniformly.
fn coarsen_block<S: Scalar>(g: &KGraph, _m: &Degree, _n: &Degree, mut block: Block<S>) -> Result<Block<S>, CalculusError> {
    let k = g.k();
    loop {
        let mut reduced = false;
        for i in 0..k {
            if block.core[i] == 0 {
                continue;
            }
            let parent_deg = block.core.checked_sub(&Degree::unit(k, i)).unwrap();
            let parent = g.segment_map(&block.core, &Degree::zero(k), &parent_deg)?;
            let mut fanout = vec![0usize; g.level(&parent_deg)?.len()];
            for &p in parent.iter() {
                fanout[p] += 1;
            }
            let mut groups: BTreeMap<Triple, (usize, S, bool)> = BTreeMap::new();
            for (&(a, b, c), v) in &block.coeffs {
                let e = groups.entry((a, b, parent[c])).or_insert((0, v.clone(), true));
                e.0 += 1;
                e.2 &= e.1 == *v;
            }
            if groups.iter().all(|((_, _, p), (cnt, _, eq))| *eq && *cnt == fanout[*p]) {
                block = Block { core: parent_deg, coeffs: groups.into_iter().map(|(t, (_, v, _))| (t, v)).collect() };
                reduced = true;
            }
        }
        if !reduced {
            return Ok(block);
        }
    }
}

type CrossKey = (Degree, Path, Degree, Path);

/// Product machinery over one 1-coaligned graph, caching S_μ* S_ν.
pub struct Calculus<'g, S> {
    g: &'g KGraph,
    cross_cache: Mutex<HashMap<CrossKey, NtElement<S>>>,
}

impl<'g, S: Scalar> Calculus<'g, S> {
    pub fn new(g: &'g KGraph) -> Result<Self, CalculusError> {
        if !g.is_one_coaligned().coaligned {
            return Err(CalculusError::NotCoaligned);
        }
        Ok(Calculus { g, cross_cache: Mutex::new(HashMap::new()) })
    }

    pub fn graph(&self) -> &'g KGraph {
        self.g
    }

    /// ψ_n(y)* ψ_p(s), as an element with degrees (p − n∧p, n − n∧p).
    pub fn cross_product(&self, y: &CylinderFunction<S>, s: &CylinderFunction<S>) -> Result<NtElement<S>, CalculusError> {
        let g = self.g;
        let (n, p) = (y.fiber().clone(), s.fiber().clone());
        let a = n.meet(&p);
        let big_n = n.checked_sub(&a).unwrap();
        let big_p = p.checked_sub(&a).unwrap();
        // strip the common degree: ψ_n(y)*ψ_p(s) = Σ ψ_N(y'_ξ)* ψ_P(⟨χ_ξ, χ_ζ⟩·s'_ζ)
        let mut pairs = Vec::new();
        if a.is_zero() {
            pairs.push((y.clone(), s.clone()));
        } else {
            let dy = decompose(g, y, &a, &big_n)?;
            let ds = decompose(g, s, &a, &big_p)?;
            for (xi, y_tail) in &dy {
                let mut acc = CylinderFunction::zero(g, big_p.clone());
                for (zeta, s_tail) in &ds {
                    let ip = inner_product(g, xi, zeta)?;
                    if !ip.is_zero() {
                        acc = acc.add(g, &left_action(g, &ip, s_tail)?)?;
                    }
                }
                if !acc.is_zero() {
                    pairs.push((y_tail.clone(), acc));
                }
            }
        }
        let frame_p = standard_frame::<S>(g, &big_p)?.elements;
        let frame_n = standard_frame::<S>(g, &big_n)?.elements;
        let shifted_p: Vec<_> = frame_p.iter().map(|x| pullback(g, x, &big_n)).collect::<Result<_, _>>()?;
        let shifted_n: Vec<_> = frame_n.iter().map(|x| pullback(g, x, &big_p)).collect::<Result<_, _>>()?;
        let mut out = NtElement::zero(g.k());
        for (yy, xx) in &pairs {
            let ip_y: Vec<_> = shifted_n.iter().map(|e| inner_product(g, yy, e)).collect::<Result<_, _>>()?;
            let ip_x: Vec<_> = shifted_p.iter().map(|e| inner_product(g, xx, e)).collect::<Result<_, _>>()?;
            for (xi, chi_xi) in frame_p.iter().enumerate() {
                if ip_x[xi].is_zero() {
                    continue;
                }
                for (eta, chi_eta) in frame_n.iter().enumerate() {
                    if ip_y[eta].is_zero() {
                        continue;
                    }
                    let left = left_action(g, &ip_y[eta], chi_xi)?;
                    let right = left_action(g, &ip_x[xi], chi_eta)?;
                    out.add_term(g, &SpanningTerm::new(left, right))?;
                }
            }
        }
        Ok(out)
    }

    fn cross_indicators(&self, n: &Degree, mu: &Path, p: &Degree, nu: &Path) -> Result<NtElement<S>, CalculusError> {
        let key = (n.clone(), mu.clone(), p.clone(), nu.clone());
        if let Some(e) = self.cross_cache.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let y = CylinderFunction::indicator(self.g, mu)?.in_fiber(n.clone());
        let s = CylinderFunction::indicator(self.g, nu)?.in_fiber(p.clone());
        let e = self.cross_product(&y, &s)?;
        self.cross_cache.lock().unwrap().insert(key, e.clone());
        Ok(e)
    }

    /// Bilinear product; each pair of canonical terms goes through
    /// ψ_m(x)[ψ_n(y)*ψ_p(s)]ψ_q(t)*.
    pub fn multiply(&self, e1: &NtElement<S>, e2: &NtElement<S>) -> Result<NtElement<S>, CalculusError> {
        let g = self.g;
        let mut out = NtElement::zero(g.k());
        let mut paths: HashMap<(Degree, usize), Path> = HashMap::new();
        let mut path = |d: &Degree, i: usize| -> Result<Path, CalculusError> {
            if let Some(p) = paths.get(&(d.clone(), i)) {
                return Ok(p.clone());
            }
            let p = g.level(d)?.paths[i].clone();
            paths.insert((d.clone(), i), p.clone());
            Ok(p)
        };
        for ((m, n), core1, &(a1, b1, c1), v1) in e1.raw_terms() {
            let alpha = path(m, a1)?;
            let beta = path(n, b1)?;
            let gamma = path(core1, c1)?;
            let x = g.compose(&alpha, &gamma)?;
            let y = g.compose(&beta, &gamma)?;
            for ((p, q), core2, &(a2, b2, c2), v2) in e2.raw_terms() {
                let alpha2 = path(p, a2)?;
                let beta2 = path(q, b2)?;
                let gamma2 = path(core2, c2)?;
                let s = g.compose(&alpha2, &gamma2)?;
                let t = g.compose(&beta2, &gamma2)?;
                let mid = self.cross_indicators(n, &y, p, &s)?;
                if mid.is_zero() {
                    continue;
                }
                let coeff = v1.clone() * v2.clone();
                let fx = CylinderFunction::indicator(g, &x)?.in_fiber(m.clone());
                let ft = CylinderFunction::indicator(g, &t)?.in_fiber(q.clone());
                for term in mid.spanning_terms(g)? {
                    let left = fmul(g, &fx, &term.x)?;
                    let right = fmul(g, &ft, &term.y)?;
                    out.add_term(g, &SpanningTerm { coeff: coeff.clone() * term.coeff, x: left, y: right })?;
                }
            }
        }
        Ok(out)
    }
}

/// Product of two elements on a 1-coaligned graph.
pub fn multiply<S: Scalar>(g: &KGraph, e1: &NtElement<S>, e2: &NtElement<S>) -> Result<NtElement<S>, CalculusError> {
    Calculus::new(g)?.multiply(e1, e2)
}

/// ψ_n(y)* ψ_p(s) on a 1-coaligned graph.
pub fn cross_product<S: Scalar>(
    g: &KGraph,
    y: &CylinderFunction<S>,
    s: &CylinderFunction<S>,
) -> Result<NtElement<S>, CalculusError> {
    Calculus::new(g)?.cross_product(y, s)
}

/// S_λ for every λ of degree at most `max`.
pub fn tck_family<S: Scalar>(g: &KGraph, max: &Degree) -> Result<Vec<(Path, NtElement<S>)>, CalculusError> {
    let mut out = Vec::new();
    for d in max.box_below() {
        for p in &g.level(&d)?.paths {
            out.push((p.clone(), NtElement::s(g, p)?));
        }
    }
    Ok(out)
}

/// Σ_{λ ∈ vΛ^n} S_λ S_λ*, or over all of Λ^n when `v` is None.
pub fn range_projection<S: Scalar>(g: &KGraph, n: &Degree, v: Option<usize>) -> Result<NtElement<S>, CalculusError> {
    let mut e = NtElement::zero(g.k());
    for p in g.level(n)?.paths.iter().filter(|p| v.is_none_or(|v| p.range() == v)) {
        let chi = CylinderFunction::indicator(g, p)?;
        e.add_term(g, &SpanningTerm::new(chi.clone(), chi))?;
    }
    Ok(e)
}

/// Outcome of one relation check inside the calculus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationCheck {
    pub relation: &'static str,
    pub cases: usize,
    /// Paths (by name) of the first failing case.
    pub witness: Option<Vec<String>>,
}

impl RelationCheck {
    pub fn pass(&self) -> bool {
        self.witness.is_none()
    }
}

/// TCK1, TCK2, TCK3 and TCK5 for all paths of degree at most `max`.
pub fn check_tck<S: Scalar>(g: &KGraph, max: &Degree) -> Result<Vec<RelationCheck>, CalculusError> {
    let calc = Calculus::<S>::new(g)?;
    let family = tck_family::<S>(g, max)?;
    let name = |p: &Path| g.path_name(p);
    let mut out = Vec::new();

    let mut tck1 = RelationCheck { relation: "tck1", cases: 0, witness: None };
    for v in 0..g.num_vertices() {
        for w in 0..g.num_vertices() {
            let (pv, pw) = (g.vertex_path(v), g.vertex_path(w));
            let lhs = calc.multiply(&NtElement::s(g, &pv)?, &NtElement::s(g, &pw)?)?;
            let rhs = if v == w { NtElement::s(g, &pv)? } else { NtElement::zero(g.k()) };
            tck1.cases += 1;
            if tck1.witness.is_none() && !lhs.same(g, &rhs)? {
                tck1.witness = Some(vec![name(&pv), name(&pw)]);
            }
        }
    }
    out.push(tck1);

    let mut tck2 = RelationCheck { relation: "tck2", cases: 0, witness: None };
    let mut tck3 = RelationCheck { relation: "tck3", cases: 0, witness: None };
    let mut tck5 = RelationCheck { relation: "tck5", cases: 0, witness: None };
    for (l, sl) in &family {
        let lhs = calc.multiply(&sl.adjoint(), sl)?;
        tck3.cases += 1;
        if tck3.witness.is_none() && !lhs.same(g, &NtElement::s(g, &g.vertex_path(l.source()))?)? {
            tck3.witness = Some(vec![name(l)]);
        }
        for (m, sm) in &family {
            if l.source() == m.range() {
                tck2.cases += 1;
                let lhs = calc.multiply(sl, sm)?;
                let rhs = NtElement::s(g, &g.compose(l, m)?)?;
                if tck2.witness.is_none() && !lhs.same(g, &rhs)? {
                    tck2.witness = Some(vec![name(l), name(m)]);
                }
            }
            tck5.cases += 1;
            let lhs = calc.multiply(&sl.adjoint(), sm)?;
            let mut rhs = NtElement::zero(g.k());
            for (xi, eta) in g.lambda_min(l, m)? {
                rhs = rhs.add(g, &calc.multiply(&NtElement::s(g, &xi)?, &NtElement::s(g, &eta)?.adjoint())?)?;
            }
            if tck5.witness.is_none() && !lhs.same(g, &rhs)? {
                tck5.witness = Some(vec![name(l), name(m)]);
            }
        }
    }
    out.extend([tck2, tck3, tck5]);
    Ok(out)
}
