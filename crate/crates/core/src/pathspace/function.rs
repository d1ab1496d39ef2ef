use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::scalar::{add_s, mul_s, sub_s, Scalar};

use super::PathSpaceError;

/// A locally constant function z ↦ weights[z(0, depth)] on the infinite-path
/// space, read as an element of the fiber X_m.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderFunction<S> {
    fiber: Degree,
    depth: Degree,
    weights: Vec<S>,
}

impl<S: Scalar> CylinderFunction<S> {
    /// Wraps a weight table over Λ^depth.
    pub fn from_weights(g: &KGraph, fiber: Degree, depth: Degree, weights: Vec<S>) -> Result<Self, PathSpaceError> {
        let n = g.level(&depth)?.len();
        if weights.len() != n {
            return Err(PathSpaceError::WeightCount { expected: n, got: weights.len() });
        }
        Ok(CylinderFunction { fiber, depth, weights })
    }

    pub(crate) fn raw(fiber: Degree, depth: Degree, weights: Vec<S>) -> Self {
        CylinderFunction { fiber, depth, weights }
    }

    pub fn constant(g: &KGraph, c: S, fiber: Degree) -> Self {
        CylinderFunction { fiber, depth: Degree::zero(g.k()), weights: vec![c; g.num_vertices()] }
    }

    pub fn zero(g: &KGraph, fiber: Degree) -> Self {
        Self::constant(g, S::zero(), fiber)
    }

    /// χ_{Z(λ)} in the fiber X_{d(λ)}.
    pub fn indicator(g: &KGraph, lambda: &Path) -> Result<Self, PathSpaceError> {
        let level = g.level(lambda.degree())?;
        let i = level.index_of(lambda).ok_or(PathSpaceError::UnknownPath)?;
        let mut weights = vec![S::zero(); level.len()];
        weights[i] = S::one();
        Ok(CylinderFunction { fiber: lambda.degree().clone(), depth: lambda.degree().clone(), weights })
    }

    pub fn fiber(&self) -> &Degree {
        &self.fiber
    }

    pub fn depth(&self) -> &Degree {
        &self.depth
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// The same weight table read in another fiber.
    pub fn in_fiber(mut self, m: Degree) -> Self {
        self.fiber = m;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.is_zero())
    }

    pub fn scale(&self, c: &S) -> Self {
        let weights = self.weights.iter().map(|w| mul_s(c, w)).collect();
        CylinderFunction { fiber: self.fiber.clone(), depth: self.depth.clone(), weights }
    }

    pub fn conj(&self) -> Self {
        let weights = self.weights.iter().map(|w| w.conj()).collect();
        CylinderFunction { fiber: self.fiber.clone(), depth: self.depth.clone(), weights }
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> CylinderFunction<T> {
        CylinderFunction { fiber: self.fiber.clone(), depth: self.depth.clone(), weights: self.weights.iter().map(f).collect() }
    }

    /// The value on Z(λ) for any λ with d(λ) ≥ depth.
    pub fn value_on(&self, g: &KGraph, lambda: &Path) -> Result<S, PathSpaceError> {
        let p = g.segment(lambda, &Degree::zero(g.k()), &self.depth)?;
        let i = g.level(&self.depth)?.index_of(&p).ok_or(PathSpaceError::UnknownPath)?;
        Ok(self.weights[i].clone())
    }

    /// The same function stored at a deeper level q.
    pub fn refine(&self, g: &KGraph, q: &Degree) -> Result<Self, PathSpaceError> {
        if q == &self.depth {
            return Ok(self.clone());
        }
        if !self.depth.le(q) {
            return Err(PathSpaceError::Refinement { from: self.depth.clone(), to: q.clone() });
        }
        let prefix = g.segment_map(q, &Degree::zero(g.k()), &self.depth)?;
        let weights = prefix.iter().map(|&i| self.weights[i].clone()).collect();
        Ok(CylinderFunction { fiber: self.fiber.clone(), depth: q.clone(), weights })
    }

    /// Reduces the depth as far as the weights allow.
    pub fn coarsen(mut self, g: &KGraph) -> Self {
        let k = g.k();
        loop {
            let mut reduced = false;
            for i in 0..k {
                if self.depth[i] == 0 {
                    continue;
                }
                let parent = self.depth.checked_sub(&Degree::unit(k, i)).expect("positive entry");
                let Ok(prefix) = g.segment_map(&self.depth, &Degree::zero(k), &parent) else { continue };
                let Ok(plevel) = g.level(&parent) else { continue };
                let mut vals: Vec<Option<S>> = vec![None; plevel.len()];
                let mut ok = true;
                for (w, &p) in prefix.iter().enumerate() {
                    match &vals[p] {
                        None => vals[p] = Some(self.weights[w].clone()),
                        Some(v) if *v == self.weights[w] => {}
                        Some(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    // no sinks, so every parent has a child
                    self.weights = vals.into_iter().map(|v| v.unwrap_or_else(S::zero)).collect();
                    self.depth = parent;
                    reduced = true;
                }
            }
            if !reduced {
                return self;
            }
        }
    }

    /// Equality as functions, fibers included.
    pub fn same(&self, g: &KGraph, other: &Self) -> Result<bool, PathSpaceError> {
        if self.fiber != other.fiber {
            return Ok(false);
        }
        let q = self.depth.join(&other.depth);
        Ok(self.refine(g, &q)?.weights == other.refine(g, &q)?.weights)
    }

    fn zip_with(&self, g: &KGraph, other: &Self, f: impl Fn(&S, &S) -> S) -> Result<Self, PathSpaceError> {
        let q = self.depth.join(&other.depth);
        let a = self.refine(g, &q)?;
        let b = other.refine(g, &q)?;
        let weights = a.weights.iter().zip(&b.weights).map(|(x, y)| f(x, y)).collect();
        Ok(CylinderFunction { fiber: self.fiber.clone(), depth: q, weights })
    }

    pub fn add(&self, g: &KGraph, other: &Self) -> Result<Self, PathSpaceError> {
        if self.fiber != other.fiber {
            return Err(PathSpaceError::FiberMismatch(self.fiber.clone(), other.fiber.clone()));
        }
        Ok(self.zip_with(g, other, add_s)?.coarsen(g))
    }

    pub fn sub(&self, g: &KGraph, other: &Self) -> Result<Self, PathSpaceError> {
        if self.fiber != other.fiber {
            return Err(PathSpaceError::FiberMismatch(self.fiber.clone(), other.fiber.clone()));
        }
        Ok(self.zip_with(g, other, sub_s)?.coarsen(g))
    }

    /// Pointwise product; the fiber of `self` is kept.
    pub(crate) fn pointwise(&self, g: &KGraph, other: &Self) -> Result<Self, PathSpaceError> {
        self.zip_with(g, other, mul_s)
    }

    /// Nonzero weights with their paths.
    pub fn support(&self, g: &KGraph) -> Result<Vec<(Path, S)>, PathSpaceError> {
        let level = g.level(&self.depth)?;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_zero())
            .map(|(i, w)| (level.paths[i].clone(), w.clone()))
            .collect())
    }
}
