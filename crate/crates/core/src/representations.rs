//! The truncated Fock representation on ⊕_{p ≤ N} X_p and the path-space
//! representation on cylinder functions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::nt::{range_projection, CalculusError, NtElement, SpanningTerm};
use crate::pathspace::{
    decompose, inner_product, left_action, multiply, pullback, right_action, CylinderFunction, PathSpaceError,
};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error("component of degree {degree} leaves the window {window}")]
    WindowOverflow { degree: Degree, window: Degree },
}

impl From<PathSpaceError> for RepresentationError {
    fn from(e: PathSpaceError) -> Self {
        RepresentationError::Calculus(e.into())
    }
}

impl From<crate::kgraph::KGraphError> for RepresentationError {
    fn from(e: crate::kgraph::KGraphError) -> Self {
        RepresentationError::Calculus(e.into())
    }
}

type Result<T> = std::result::Result<T, RepresentationError>;

/// A finitely supported vector in ⊕_{p ≤ window} X_p.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector<S> {
    window: Degree,
    comps: BTreeMap<Degree, CylinderFunction<S>>,
}

impl<S: Scalar> FockVector<S> {
    pub fn zero(window: Degree) -> Self {
        FockVector { window, comps: BTreeMap::new() }
    }

    /// χ_{Z(λ)} placed in degree p.
    pub fn basis(g: &KGraph, window: Degree, p: &Degree, lambda: &Path) -> Result<Self> {
        let mut v = Self::zero(window);
        v.insert(CylinderFunction::indicator(g, lambda)?.in_fiber(p.clone()))?;
        Ok(v)
    }

    pub fn window(&self) -> &Degree {
        &self.window
    }

    pub fn components(&self) -> impl Iterator<Item = (&Degree, &CylinderFunction<S>)> {
        self.comps.iter()
    }

    pub fn component(&self, p: &Degree) -> Option<&CylinderFunction<S>> {
        self.comps.get(p)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Adds x to the component of its fiber.
    pub fn insert(&mut self, x: CylinderFunction<S>) -> Result<()> {
        if x.is_zero() {
            return Ok(());
        }
        let p = x.fiber().clone();
        if !p.le(&self.window) {
            return Err(RepresentationError::WindowOverflow { degree: p, window: self.window.clone() });
        }
        self.comps.insert(p, x);
        Ok(())
    }

    pub fn add(&self, g: &KGraph, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (p, x) in &other.comps {
            let sum = match out.comps.remove(p) {
                Some(y) => y.add(g, x)?,
                None => x.clone(),
            };
            if !sum.is_zero() {
                out.comps.insert(p.clone(), sum);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.window.clone());
        if !c.is_zero() {
            out.comps = self.comps.iter().map(|(p, x)| (p.clone(), x.scale(c))).collect();
        }
        out
    }

    pub fn same(&self, g: &KGraph, other: &Self) -> Result<bool> {
        let keys: std::collections::BTreeSet<_> = self.comps.keys().chain(other.comps.keys()).collect();
        for p in keys {
            let same = match (self.comps.get(p), other.comps.get(p)) {
                (Some(a), Some(b)) => a.same(g, b)?,
                (Some(a), None) | (None, Some(a)) => a.is_zero(),
                (None, None) => true,
            };
            if !same {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// T(x): X_p → X_{m+p}, s ↦ xs.
pub fn create<S: Scalar>(g: &KGraph, x: &CylinderFunction<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
    let mut out = FockVector::zero(v.window.clone());
    for s in v.comps.values() {
        out.insert(multiply(g, x, s)?)?;
    }
    Ok(out)
}

/// T(y)*: zero on X_p unless p ≥ n, where it sends ξ ⊗ s'' to ⟨y, ξ⟩·s''.
pub fn annihilate<S: Scalar>(g: &KGraph, y: &CylinderFunction<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
    let n = y.fiber();
    let mut out = FockVector::zero(v.window.clone());
    for (p, s) in &v.comps {
        let Some(rest) = p.checked_sub(n) else { continue };
        let mut acc = CylinderFunction::zero(g, rest.clone());
        for (xi, tail) in decompose(g, s, n, &rest)? {
            let ip = inner_product(g, y, &xi)?;
            if !ip.is_zero() {
                acc = acc.add(g, &left_action(g, &ip, &tail)?)?;
            }
        }
        out.insert(acc)?;
    }
    Ok(out)
}

/// coeff · T(x) T(y)* v
pub fn fock_apply<S: Scalar>(g: &KGraph, term: &SpanningTerm<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
    let w = annihilate(g, &term.y, v)?;
    Ok(create(g, &term.x, &w)?.scale(&term.coeff))
}

pub fn fock_apply_element<S: Scalar>(g: &KGraph, e: &NtElement<S>, v: &FockVector<S>) -> Result<FockVector<S>> {
    let mut out = FockVector::zero(v.window.clone());
    for t in e.spanning_terms(g)? {
        out = out.add(g, &fock_apply(g, &t, v)?)?;
    }
    Ok(out)
}

/// One factor of a Fock operator word.
#[derive(Clone, Debug)]
pub enum FockFactor<S> {
    Create(CylinderFunction<S>),
    Annihilate(CylinderFunction<S>),
    Element(NtElement<S>),
}

/// A sum of words, each applied right to left.
#[derive(Clone, Debug)]
pub struct FockOp<S> {
    pub words: Vec<(S, Vec<FockFactor<S>>)>,
}

impl<S: Scalar> FockOp<S> {
    pub fn new() -> Self {
        FockOp { words: Vec::new() }
    }

    pub fn word(factors: Vec<FockFactor<S>>) -> Self {
        FockOp { words: vec![(S::one(), factors)] }
    }

    pub fn push(&mut self, coeff: S, factors: Vec<FockFactor<S>>) {
        self.words.push((coeff, factors));
    }

    pub fn apply(&self, g: &KGraph, v: &FockVector<S>) -> Result<FockVector<S>> {
        let mut out = FockVector::zero(v.window.clone());
        for (c, word) in &self.words {
            let mut w = v.clone();
            for f in word.iter().rev() {
                w = match f {
                    FockFactor::Create(x) => create(g, x, &w)?,
                    FockFactor::Annihilate(y) => annihilate(g, y, &w)?,
                    FockFactor::Element(e) => fock_apply_element(g, e, &w)?,
                };
                if w.is_zero() {
                    break;
                }
            }
            out = out.add(g, &w.scale(c))?;
        }
        Ok(out)
    }

    /// Join of the degrees each word can raise by.
    pub fn shift(&self, k: usize) -> Degree {
        let mut s = Degree::zero(k);
        for (_, word) in &self.words {
            let mut up = Degree::zero(k);
            for f in word {
                match f {
                    FockFactor::Create(x) => up = &up + x.fiber(),
                    FockFactor::Annihilate(_) => {}
                    FockFactor::Element(e) => {
                        let m = e.degrees().into_iter().fold(Degree::zero(k), |a, (m, _)| a.join(&m));
                        up = &up + &m;
                    }
                }
            }
            s = s.join(&up);
        }
        s
    }
}

/// Result of comparing two operators on window basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCheck {
    pub name: String,
    pub window: Degree,
    pub depth: Degree,
    pub cases: usize,
    /// First basis vector (degree, path) on which the operators differ.
    pub witness: Option<(Degree, Path)>,
}

impl WindowCheck {
    pub fn pass(&self) -> bool {
        self.witness.is_none()
    }
}

/// Degrees p with p + shift ≤ window.
pub fn window_interior(window: &Degree, shift: &Degree) -> Vec<Degree> {
    match window.checked_sub(shift) {
        Some(top) => top.box_below(),
        None => Vec::new(),
    }
}

/// Compares two linear maps on every χ_{Z(λ)} in degree p with d(λ) = p + depth,
/// p ranging over the window interior.
pub fn compare_on_window<S, F1, F2>(
    g: &KGraph,
    name: &str,
    window: &Degree,
    depth: &Degree,
    shift: &Degree,
    lhs: F1,
    rhs: F2,
) -> Result<WindowCheck>
where
    S: Scalar,
    F1: Fn(&FockVector<S>) -> Result<FockVector<S>>,
    F2: Fn(&FockVector<S>) -> Result<FockVector<S>>,
{
    let mut check =
        WindowCheck { name: name.to_string(), window: window.clone(), depth: depth.clone(), cases: 0, witness: None };
    for p in window_interior(window, shift) {
        for lambda in &g.level(&(&p + depth))?.paths {
            let v = FockVector::basis(g, window.clone(), &p, lambda)?;
            check.cases += 1;
            if !lhs(&v)?.same(g, &rhs(&v)?)? {
                check.witness = Some((p, lambda.clone()));
                return Ok(check);
            }
        }
    }
    Ok(check)
}

/// Equality of two elements as Fock operators on the window.
pub fn operators_equal_on_window<S: Scalar>(
    g: &KGraph,
    e1: &NtElement<S>,
    e2: &NtElement<S>,
    window: &Degree,
    depth: &Degree,
) -> Result<WindowCheck> {
    let k = g.k();
    let shift = FockOp::word(vec![FockFactor::Element(e1.clone())])
        .shift(k)
        .join(&FockOp::word(vec![FockFactor::Element(e2.clone())]).shift(k));
    compare_on_window(
        g,
        "operators_equal",
        window,
        depth,
        &shift,
        |v| fock_apply_element(g, e1, v),
        |v| fock_apply_element(g, e2, v),
    )
}

/// Σ_{ξ ∈ Λ^n} T(χ_ξ) T(χ_ξ)* as a Fock operator.
pub fn frame_projection<S: Scalar>(g: &KGraph, n: &Degree) -> Result<FockOp<S>> {
    let mut op = FockOp::new();
    for xi in &g.level(n)?.paths {
        let chi = CylinderFunction::indicator(g, xi)?;
        op.push(S::one(), vec![FockFactor::Create(chi.clone()), FockFactor::Annihilate(chi)]);
    }
    Ok(op)
}

/// (Σ_{Λ^m} T T*)(Σ_{Λ^p} T T*) = Σ_{Λ^{m∨p}} T T* on the window.
pub fn check_nica_covariance<S: Scalar>(
    g: &KGraph,
    m: &Degree,
    p: &Degree,
    window: &Degree,
    depth: &Degree,
) -> Result<WindowCheck> {
    let qm = frame_projection::<S>(g, m)?;
    let qp = frame_projection::<S>(g, p)?;
    let qj = frame_projection::<S>(g, &m.join(p))?;
    compare_on_window(
        g,
        &format!("nica_covariance m={m} p={p}"),
        window,
        depth,
        &Degree::zero(g.k()),
        |v| qm.apply(g, &qp.apply(g, v)?),
        |v| qj.apply(g, v),
    )
}

/// The projection Σ_{Λ^n} T T* is the identity on X_m for m ≥ n and zero
/// otherwise.
pub fn check_lemma_positive<S: Scalar>(g: &KGraph, n: &Degree, window: &Degree, depth: &Degree) -> Result<WindowCheck> {
    let q = frame_projection::<S>(g, n)?;
    compare_on_window(
        g,
        &format!("frame_projection_dichotomy n={n}"),
        window,
        depth,
        &Degree::zero(g.k()),
        |v| q.apply(g, v),
        |v| {
            let mut out = FockVector::zero(v.window().clone());
            for (p, x) in v.components() {
                if n.le(p) {
                    out.insert(x.clone())?;
                }
            }
            Ok(out)
        },
    )
}

/// Indicators of Λ^{m+n}, read as functions in any fiber.
fn common_partition<S: Scalar>(g: &KGraph, m: &Degree, n: &Degree) -> Result<Vec<CylinderFunction<S>>> {
    let d = m + n;
    g.level(&d)?.paths.iter().map(|p| Ok(CylinderFunction::indicator(g, p)?)).collect()
}

/// ψ_n(y)*ψ_m(x) = Σ_{i,j} ψ_m(⟨y, τ_j∘σ^m⟩·τ_i) ψ_n(⟨x, τ_i∘σ^n⟩·τ_j)* with
/// the common partition τ = {χ_{Z(ζ)} : ζ ∈ Λ^{m+n}}, compared as Fock
/// operators.
pub fn check_formula_fock<S: Scalar>(
    g: &KGraph,
    x: &CylinderFunction<S>,
    y: &CylinderFunction<S>,
    window: &Degree,
    depth: &Degree,
) -> Result<WindowCheck> {
    let (m, n) = (x.fiber().clone(), y.fiber().clone());
    let lhs = FockOp::word(vec![FockFactor::Annihilate(y.clone()), FockFactor::Create(x.clone())]);
    let tau = common_partition::<S>(g, &m, &n)?;
    let mut rhs = FockOp::new();
    for ti in &tau {
        let ti_n = pullback(g, &ti.clone().in_fiber(m.clone()), &n)?;
        let b = inner_product(g, x, &ti_n)?;
        for tj in &tau {
            let tj_m = pullback(g, &tj.clone().in_fiber(n.clone()), &m)?;
            let a = inner_product(g, y, &tj_m)?;
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let left = left_action(g, &a, &ti.clone().in_fiber(m.clone()))?;
            let right = left_action(g, &b, &tj.clone().in_fiber(n.clone()))?;
            rhs.push(S::one(), vec![FockFactor::Create(left), FockFactor::Annihilate(right)]);
        }
    }
    let shift = m.join(&n);
    compare_on_window(g, "formula_fock", window, depth, &shift, |v| lhs.apply(g, v), |v| rhs.apply(g, v))
}

/// σ_{m,n}(x⊗y) = Σ_{i,j} σ_{n,m}(τ_j∘σ^m ⊗ τ_i)·⟨⟨x, τ_i∘σ^n⟩·τ_j, y⟩ with
/// the common partition over Λ^{m+n}; exact equality of functions.
pub fn check_help_formula<S: Scalar>(g: &KGraph, x: &CylinderFunction<S>, y: &CylinderFunction<S>) -> Result<bool> {
    let (m, n) = (x.fiber().clone(), y.fiber().clone());
    let tau = common_partition::<S>(g, &m, &n)?;
    let lhs = multiply(g, x, y)?;
    let mut rhs = CylinderFunction::zero(g, &n + &m);
    for ti in &tau {
        let ti_n = pullback(g, &ti.clone().in_fiber(m.clone()), &n)?;
        let xi = inner_product(g, x, &ti_n)?;
        if xi.is_zero() {
            continue;
        }
        for tj in &tau {
            let tj_n = tj.clone().in_fiber(n.clone());
            let c = inner_product(g, &left_action(g, &xi, &tj_n)?, y)?;
            if c.is_zero() {
                continue;
            }
            let tj_m = pullback(g, &tj_n, &m)?;
            let prod = multiply(g, &tj_m, &ti.clone().in_fiber(m.clone()))?;
            rhs = rhs.add(g, &right_action(g, &prod, &c)?)?;
        }
    }
    Ok(lhs.same(g, &rhs)?)
}

/// A generator of the path-space representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathGen {
    S(Path),
    SStar(Path),
}

/// π(S_λ)a = χ_{Z(λ)}·(a∘σ^{d(λ)}), π(S_λ)*a = a(λ ·) on Z(s(λ)).
pub fn pathspace_gen<S: Scalar>(g: &KGraph, gen: &PathGen, a: &CylinderFunction<S>) -> Result<CylinderFunction<S>> {
    let z = Degree::zero(g.k());
    let a0 = a.clone().in_fiber(z.clone());
    match gen {
        PathGen::S(l) => Ok(multiply(g, &CylinderFunction::indicator(g, l)?, &a0)?.in_fiber(z)),
        PathGen::SStar(l) => {
            let d = l.degree().clone();
            let q = a0.depth().join(&d);
            let rest = q.checked_sub(&d).expect("q >= d");
            let ar = a0.refine(g, &q)?;
            let level = g.level(&q)?;
            let tails = g.level(&rest)?;
            let mut w = vec![S::zero(); tails.len()];
            for (i, t) in tails.paths.iter().enumerate() {
                if t.range() == l.source() {
                    let full = g.compose(l, t)?;
                    w[i] = ar.weights()[level.index_of(&full).expect("enumerated")].clone();
                }
            }
            Ok(CylinderFunction::from_weights(g, z, rest, w)?.coarsen(g))
        }
    }
}

/// Applies a word of generators right to left.
pub fn pathspace_apply<S: Scalar>(g: &KGraph, word: &[PathGen], a: &CylinderFunction<S>) -> Result<CylinderFunction<S>> {
    let mut out = a.clone();
    for gen in word.iter().rev() {
        out = pathspace_gen(g, gen, &out)?;
    }
    Ok(out)
}

/// π(ψ_m(x)ψ_n(y)*)a = x·⟨y, a⟩ with a read in X_n.
pub fn pathspace_apply_term<S: Scalar>(
    g: &KGraph,
    term: &SpanningTerm<S>,
    a: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>> {
    let z = Degree::zero(g.k());
    let ip = inner_product(g, &term.y, &a.clone().in_fiber(term.n().clone()))?;
    Ok(multiply(g, &term.x, &ip)?.in_fiber(z).scale(&term.coeff))
}

pub fn pathspace_apply_element<S: Scalar>(
    g: &KGraph,
    e: &NtElement<S>,
    a: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>> {
    let mut out = CylinderFunction::zero(g, Degree::zero(g.k()));
    for t in e.spanning_terms(g)? {
        out = out.add(g, &pathspace_apply_term(g, &t, a)?)?;
    }
    Ok(out)
}

/// Compares two operators on cylinder functions on every χ_{Z(λ)}, d(λ) = depth.
pub fn compare_on_pathspace<S, F1, F2>(g: &KGraph, name: &str, depth: &Degree, lhs: F1, rhs: F2) -> Result<WindowCheck>
where
    S: Scalar,
    F1: Fn(&CylinderFunction<S>) -> Result<CylinderFunction<S>>,
    F2: Fn(&CylinderFunction<S>) -> Result<CylinderFunction<S>>,
{
    let z = Degree::zero(g.k());
    let mut check = WindowCheck { name: name.to_string(), window: z.clone(), depth: depth.clone(), cases: 0, witness: None };
    for lambda in &g.level(depth)?.paths {
        let a = CylinderFunction::indicator(g, lambda)?.in_fiber(z.clone());
        check.cases += 1;
        if !lhs(&a)?.same(g, &rhs(&a)?)? {
            check.witness = Some((z, lambda.clone()));
            return Ok(check);
        }
    }
    Ok(check)
}

/// Σ_{λ ∈ vΛ^n} π(S_λ)π(S_λ)* = π(S_v) on the depth basis.
pub fn check_ck<S: Scalar>(g: &KGraph, v: usize, n: &Degree, depth: &Degree) -> Result<WindowCheck> {
    let ls: Vec<Path> = g.level(n)?.paths.iter().filter(|p| p.range() == v).cloned().collect();
    let vp = g.vertex_path(v);
    compare_on_pathspace(
        g,
        &format!("cuntz_krieger v={} n={n}", g.vertex_name(v)),
        depth,
        |a: &CylinderFunction<S>| {
            let mut acc = CylinderFunction::zero(g, Degree::zero(g.k()));
            for l in &ls {
                acc = acc.add(g, &pathspace_apply(g, &[PathGen::S(l.clone()), PathGen::SStar(l.clone())], a)?)?;
            }
            Ok(acc)
        },
        |a| pathspace_apply(g, &[PathGen::S(vp.clone())], a),
    )
}

/// The kernel generator ψ_0(a) − Σ_{ξ ∈ Λ^m} ψ_m(a·χ_ξ)ψ_m(χ_ξ)*.
pub fn kernel_generator<S: Scalar>(g: &KGraph, a: &CylinderFunction<S>, m: &Degree) -> Result<NtElement<S>> {
    let z = Degree::zero(g.k());
    let mut e = NtElement::psi(g, &a.clone().in_fiber(z))?;
    for xi in &g.level(m)?.paths {
        let chi = CylinderFunction::indicator(g, xi)?;
        let x = left_action(g, a, &chi)?;
        e.add_term(g, &SpanningTerm { coeff: -S::one(), x, y: chi })?;
    }
    Ok(e)
}

/// The kernel generator for (a, m) acts as zero on cylinder functions.
pub fn check_kernel_generator<S: Scalar>(
    g: &KGraph,
    a: &CylinderFunction<S>,
    m: &Degree,
    depth: &Degree,
) -> Result<WindowCheck> {
    let e = kernel_generator(g, a, m)?;
    compare_on_pathspace(
        g,
        &format!("kernel_generator m={m}"),
        depth,
        |b| pathspace_apply_element(g, &e, b),
        |_| Ok(CylinderFunction::zero(g, Degree::zero(g.k()))),
    )
}

/// S_v against Σ_{λ ∈ vΛ^n} S_λS_λ* in the Fock representation; the
/// expected outcome is a failure witnessed in degree 0.
pub fn tck4_strictness<S: Scalar>(g: &KGraph, v: usize, n: &Degree, window: &Degree, depth: &Degree) -> Result<WindowCheck> {
    let sv = NtElement::s(g, &g.vertex_path(v))?;
    let q = range_projection::<S>(g, n, Some(v))?;
    let mut c = operators_equal_on_window(g, &sv, &q, window, depth)?;
    c.name = format!("tck4_strict v={} n={n}", g.vertex_name(v));
    Ok(c)
}
