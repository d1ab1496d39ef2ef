//! The product system of cylinder functions over the shifts σ^m, together
//! with cylinder measures and transfer operators.

mod function;
mod measure;

pub use function::CylinderFunction;
pub use measure::{integrate, marginalize, point_mass, transfer, transfer_level, CylinderMeasure};

use thiserror::Error;

use crate::degree::Degree;
use crate::kgraph::{KGraph, KGraphError};
use crate::scalar::{add_s, mul_s, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathSpaceError {
    #[error(transparent)]
    KGraph(#[from] KGraphError),
    #[error("fiber mismatch: {0} vs {1}")]
    FiberMismatch(Degree, Degree),
    #[error("cannot refine depth {from} to {to}")]
    Refinement { from: Degree, to: Degree },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("path is not a morphism of this graph")]
    UnknownPath,
    #[error("degrees {0} and {1} are not disjoint")]
    NotDisjoint(Degree, Degree),
    #[error("the graph is not 1-coaligned")]
    NotCoaligned,
    #[error("measure is not stored deep enough for level {0}")]
    InsufficientDepth(Degree),
    #[error("cycle must start and end at the source of the prefix and have positive degree in every color")]
    DegenerateCycle,
}

/// A finite sum of simple tensors x ⊗ y.
pub type TensorSum<S> = Vec<(CylinderFunction<S>, CylinderFunction<S>)>;

/// ⟨x, y⟩(z) = Σ_{σ^m(w) = z} conj(x(w)) y(w) for x, y in X_m.
pub fn inner_product<S: Scalar>(
    g: &KGraph,
    x: &CylinderFunction<S>,
    y: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    if x.fiber() != y.fiber() {
        return Err(PathSpaceError::FiberMismatch(x.fiber().clone(), y.fiber().clone()));
    }
    let m = x.fiber();
    let q = x.depth().join(y.depth()).join(m);
    let xr = x.refine(g, &q)?;
    let yr = y.refine(g, &q)?;
    let out_depth = q.checked_sub(m).expect("q >= m");
    let suffix = g.segment_map(&q, m, &q)?;
    let mut out = vec![S::zero(); g.level(&out_depth)?.len()];
    for (w, &s) in suffix.iter().enumerate() {
        let (a, b) = (&xr.weights()[w], &yr.weights()[w]);
        if !a.is_zero() && !b.is_zero() {
            out[s] = add_s(&out[s], &mul_s(&a.conj(), b));
        }
    }
    Ok(CylinderFunction::raw(Degree::zero(g.k()), out_depth, out).coarsen(g))
}

/// (a·x)(z) = a(z) x(z)
pub fn left_action<S: Scalar>(
    g: &KGraph,
    a: &CylinderFunction<S>,
    x: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    Ok(x.pointwise(g, a)?.coarsen(g))
}

/// (x·b)(z) = x(z) b(σ^m z)
pub fn right_action<S: Scalar>(
    g: &KGraph,
    x: &CylinderFunction<S>,
    b: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    let pb = pullback(g, b, x.fiber())?;
    Ok(x.pointwise(g, &pb)?.coarsen(g))
}

/// b ∘ σ^n, kept in the fiber of `b`.
pub fn pullback<S: Scalar>(
    g: &KGraph,
    b: &CylinderFunction<S>,
    n: &Degree,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    if n.is_zero() {
        return Ok(b.clone());
    }
    let depth = n + b.depth();
    let seg = g.segment_map(&depth, n, &depth)?;
    let weights = seg.iter().map(|&i| b.weights()[i].clone()).collect();
    Ok(CylinderFunction::raw(b.fiber().clone(), depth, weights))
}

/// (xy)(z) = x(z) y(σ^m z), in X_{m+n}.
pub fn multiply<S: Scalar>(
    g: &KGraph,
    x: &CylinderFunction<S>,
    y: &CylinderFunction<S>,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    let m = x.fiber();
    let pb = pullback(g, y, m)?;
    let fiber = m + y.fiber();
    Ok(x.pointwise(g, &pb)?.in_fiber(fiber).coarsen(g))
}

/// Splits z ∈ X_{m+n} as Σ_ξ χ_{Z(ξ)} ⊗ y_ξ with y_ξ(w) = z(ξw); zero
/// terms are dropped.
pub fn decompose<S: Scalar>(
    g: &KGraph,
    z: &CylinderFunction<S>,
    m: &Degree,
    n: &Degree,
) -> Result<TensorSum<S>, PathSpaceError> {
    if z.fiber() != &(m + n) {
        return Err(PathSpaceError::FiberMismatch(z.fiber().clone(), m + n));
    }
    let q = z.depth().join(m);
    let zr = z.refine(g, &q)?;
    let rest = q.checked_sub(m).expect("q >= m");
    let prefix = g.segment_map(&q, &Degree::zero(g.k()), m)?;
    let suffix = g.segment_map(&q, m, &q)?;
    let head = g.level(m)?;
    let tail_len = g.level(&rest)?.len();
    let mut ys: Vec<Option<Vec<S>>> = vec![None; head.len()];
    for (w, val) in zr.weights().iter().enumerate() {
        if val.is_zero() {
            continue;
        }
        let y = ys[prefix[w]].get_or_insert_with(|| vec![S::zero(); tail_len]);
        y[suffix[w]] = val.clone();
    }
    let mut out = Vec::new();
    for (xi, y) in ys.into_iter().enumerate() {
        if let Some(y) = y {
            let left = CylinderFunction::indicator(g, &head.paths[xi])?.in_fiber(m.clone());
            let right = CylinderFunction::raw(n.clone(), rest.clone(), y).coarsen(g);
            out.push((left, right));
        }
    }
    Ok(out)
}

/// Σ multiply(x_i, y_i)
pub fn recombine<S: Scalar>(g: &KGraph, terms: &TensorSum<S>, fiber: &Degree) -> Result<CylinderFunction<S>, PathSpaceError> {
    let mut acc = CylinderFunction::zero(g, fiber.clone());
    for (x, y) in terms {
        acc = acc.add(g, &multiply(g, x, y)?)?;
    }
    Ok(acc)
}

/// ⟨x⊗y, z⊗w⟩ = ⟨y, ⟨x,z⟩·w⟩, extended sesquilinearly.
pub fn tensor_inner<S: Scalar>(
    g: &KGraph,
    a: &TensorSum<S>,
    b: &TensorSum<S>,
) -> Result<CylinderFunction<S>, PathSpaceError> {
    let mut acc = CylinderFunction::zero(g, Degree::zero(g.k()));
    for (x, y) in a {
        for (z, w) in b {
            let c = inner_product(g, x, z)?;
            let cw = left_action(g, &c, w)?;
            acc = acc.add(g, &inner_product(g, y, &cw)?)?;
        }
    }
    Ok(acc)
}

/// Equality of tensor sums in X_a ⊗ X_b: the difference D has ⟨D, D⟩ = 0.
pub fn tensors_equal<S: Scalar>(g: &KGraph, a: &TensorSum<S>, b: &TensorSum<S>) -> Result<bool, PathSpaceError> {
    let mut diff = a.clone();
    diff.extend(b.iter().map(|(x, y)| (x.scale(&-S::one()), y.clone())));
    Ok(tensor_inner(g, &diff, &diff)?.is_zero())
}

/// A finite family {x_i} in X_m.
#[derive(Clone, Debug)]
pub struct Frame<S> {
    pub fiber: Degree,
    pub elements: Vec<CylinderFunction<S>>,
}

impl<S: Scalar> Frame<S> {
    /// Σ_i x_i · ⟨x_i, x⟩
    pub fn reconstruct(&self, g: &KGraph, x: &CylinderFunction<S>) -> Result<CylinderFunction<S>, PathSpaceError> {
        let mut acc = CylinderFunction::zero(g, self.fiber.clone());
        for xi in &self.elements {
            let c = inner_product(g, xi, x)?;
            acc = acc.add(g, &right_action(g, xi, &c)?)?;
        }
        Ok(acc)
    }

    /// Checks the reconstruction formula on each given vector; returns the
    /// first failure.
    pub fn parseval_witness(
        &self,
        g: &KGraph,
        xs: &[CylinderFunction<S>],
    ) -> Result<Option<usize>, PathSpaceError> {
        for (i, x) in xs.iter().enumerate() {
            if !self.reconstruct(g, x)?.same(g, x)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// {χ_{Z(ξ)} : ξ ∈ Λ^m}
pub fn standard_frame<S: Scalar>(g: &KGraph, m: &Degree) -> Result<Frame<S>, PathSpaceError> {
    let level = g.level(m)?;
    let elements = level.paths.iter().map(|p| CylinderFunction::indicator(g, p)).collect::<Result<_, _>>()?;
    Ok(Frame { fiber: m.clone(), elements })
}

/// {χ_{Z(ξ)} ∘ σ^n : ξ ∈ Λ^m} in X_m, for m ∧ n = 0.
pub fn shifted_frame<S: Scalar>(g: &KGraph, m: &Degree, n: &Degree) -> Result<Frame<S>, PathSpaceError> {
    if !m.meet(n).is_zero() {
        return Err(PathSpaceError::NotDisjoint(m.clone(), n.clone()));
    }
    if !g.is_one_coaligned().coaligned {
        return Err(PathSpaceError::NotCoaligned);
    }
    let std = standard_frame::<S>(g, m)?;
    let elements = std.elements.iter().map(|x| pullback(g, x, n)).collect::<Result<_, _>>()?;
    Ok(Frame { fiber: m.clone(), elements })
}

/// The flip X_m ⊗ X_n → X_n ⊗ X_m, as decompose(xy, n, m).
pub fn flip<S: Scalar>(
    g: &KGraph,
    x: &CylinderFunction<S>,
    y: &CylinderFunction<S>,
) -> Result<TensorSum<S>, PathSpaceError> {
    let (m, n) = (x.fiber(), y.fiber());
    if !m.meet(n).is_zero() {
        return Err(PathSpaceError::NotDisjoint(m.clone(), n.clone()));
    }
    if !g.is_one_coaligned().coaligned {
        return Err(PathSpaceError::NotCoaligned);
    }
    decompose(g, &multiply(g, x, y)?, n, m)
}

/// Applies the flip termwise to a tensor sum.
pub fn flip_sum<S: Scalar>(g: &KGraph, t: &TensorSum<S>) -> Result<TensorSum<S>, PathSpaceError> {
    let mut out = Vec::new();
    for (x, y) in t {
        out.extend(flip(g, x, y)?);
    }
    Ok(out)
}
