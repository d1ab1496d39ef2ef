use std::collections::BTreeMap;


use crate::degree::Degree;
use crate::kgraph::{KGraph, Path};
use crate::scalar::{Scalar, Weight};

use super::{CylinderFunction, PathSpaceError};

#[derive(Clone, Debug, PartialEq)]
enum Source<W> {
    Table(BTreeMap<Degree, Vec<W>>),
    /// Unit mass at prefix·cycle·cycle·…, scaled.
    PointMass { prefix: Path, cycle: Path, mass: W },
}

/// Non-negative weights on cylinder sets, stored by level.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderMeasure<W> {
    k: usize,
    source: Source<W>,
}

impl<W: Weight> CylinderMeasure<W> {
    pub fn from_levels(k: usize, levels: impl IntoIterator<Item = (Degree, Vec<W>)>) -> Self {
        CylinderMeasure { k, source: Source::Table(levels.into_iter().collect()) }
    }

    /// A measure known only through its vertex masses.
    pub fn from_vertex_weights(k: usize, eps: Vec<W>) -> Self {
        Self::from_levels(k, [(Degree::zero(k), eps)])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Stored levels; empty for lazily computed measures.
    pub fn stored_levels(&self) -> Vec<Degree> {
        match &self.source {
            Source::Table(t) => t.keys().cloned().collect(),
            Source::PointMass { .. } => Vec::new(),
        }
    }

    pub fn is_lazy(&self) -> bool {
        matches!(self.source, Source::PointMass { .. })
    }

    pub fn insert_level(&mut self, q: Degree, w: Vec<W>) {
        if let Source::Table(t) = &mut self.source {
            t.insert(q, w);
        }
    }

    /// Weights on Λ^q, marginalizing from the shallowest deeper stored
    /// level when q itself is not stored.
    pub fn level(&self, g: &KGraph, q: &Degree) -> Result<Vec<W>, PathSpaceError> {
        match &self.source {
            Source::Table(t) => {
                if let Some(w) = t.get(q) {
                    return Ok(w.clone());
                }
                let (deeper, w) = t
                    .iter()
                    .filter(|(d, _)| q.le(d))
                    .min_by_key(|(d, _)| d.total())
                    .ok_or_else(|| PathSpaceError::InsufficientDepth(q.clone()))?;
                marginalize(g, w, deeper, q)
            }
            Source::PointMass { prefix, cycle, mass } => {
                let level = g.level(q)?;
                let mut u = prefix.clone();
                while !q.le(u.degree()) {
                    u = g.compose(&u, cycle)?;
                }
                let head = g.segment(&u, &Degree::zero(self.k), q)?;
                let mut out = vec![W::zero(); level.len()];
                out[level.index_of(&head).expect("enumerated")] = mass.clone();
                Ok(out)
            }
        }
    }

    pub fn total_mass(&self, g: &KGraph) -> Result<W, PathSpaceError> {
        Ok(self.level(g, &Degree::zero(self.k))?.into_iter().fold(W::zero(), |a, b| a + b))
    }

    pub fn scale(&self, c: &W) -> Self {
        let source = match &self.source {
            Source::Table(t) => {
                Source::Table(t.iter().map(|(d, w)| (d.clone(), w.iter().map(|x| c.clone() * x.clone()).collect())).collect())
            }
            Source::PointMass { prefix, cycle, mass } => {
                Source::PointMass { prefix: prefix.clone(), cycle: cycle.clone(), mass: c.clone() * mass.clone() }
            }
        };
        CylinderMeasure { k: self.k, source }
    }

    /// a·self + b·other on the given levels.
    pub fn affine(&self, g: &KGraph, a: &W, other: &Self, b: &W, levels: &[Degree]) -> Result<Self, PathSpaceError> {
        let mut out = BTreeMap::new();
        for q in levels {
            let x = self.level(g, q)?;
            let y = other.level(g, q)?;
            out.insert(q.clone(), x.into_iter().zip(y).map(|(x, y)| a.clone() * x + b.clone() * y).collect());
        }
        Ok(Self::from_levels(self.k, out))
    }

    /// A table copy holding the given levels.
    pub fn materialize(&self, g: &KGraph, levels: &[Degree]) -> Result<Self, PathSpaceError> {
        let mut out = BTreeMap::new();
        for q in levels {
            out.insert(q.clone(), self.level(g, q)?);
        }
        Ok(Self::from_levels(self.k, out))
    }

    /// Largest violation of additivity between stored levels q ≤ q'.
    pub fn consistency_defect(&self, g: &KGraph) -> Result<W, PathSpaceError> {
        let Source::Table(t) = &self.source else { return Ok(W::zero()) };
        let mut worst = W::zero();
        for (q, w) in t {
            for (q2, w2) in t {
                if q == q2 || !q.le(q2) {
                    continue;
                }
                let m = marginalize(g, w2, q2, q)?;
                for (a, b) in m.iter().zip(w) {
                    let d = (a.clone() - b.clone()).abs_val();
                    if d > worst {
                        worst = d;
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Smallest stored weight; zero for lazy measures.
    pub fn min_weight(&self) -> W {
        let Source::Table(t) = &self.source else { return W::zero() };
        let mut lo: Option<W> = None;
        for w in t.values().flatten() {
            if lo.as_ref().is_none_or(|l| w < l) {
                lo = Some(w.clone());
            }
        }
        lo.unwrap_or_else(W::zero)
    }

    pub fn map_weights<V: Weight>(&self, f: impl Fn(&W) -> V) -> CylinderMeasure<V> {
        let source = match &self.source {
            Source::Table(t) => Source::Table(t.iter().map(|(d, w)| (d.clone(), w.iter().map(&f).collect())).collect()),
            Source::PointMass { prefix, cycle, mass } => {
                Source::PointMass { prefix: prefix.clone(), cycle: cycle.clone(), mass: f(mass) }
            }
        };
        CylinderMeasure { k: self.k, source }
    }
}

/// Sums weights on Λ^{from} down to Λ^{to}, to ≤ from.
pub fn marginalize<W: Weight>(g: &KGraph, w: &[W], from: &Degree, to: &Degree) -> Result<Vec<W>, PathSpaceError> {
    if from == to {
        return Ok(w.to_vec());
    }
    let prefix = g.segment_map(from, &Degree::zero(g.k()), to)?;
    let mut out = vec![W::zero(); g.level(to)?.len()];
    for (i, &p) in prefix.iter().enumerate() {
        out[p] = out[p].clone() + w[i].clone();
    }
    Ok(out)
}

/// (R^n ν)(Z(λ)) for λ ∈ Λ^q: ν(Z(λ(n, q))) when q ≥ n, otherwise the sum
/// over refinements to q ∨ n.
pub fn transfer_level<W: Weight>(
    g: &KGraph,
    n: &Degree,
    nu: &CylinderMeasure<W>,
    q: &Degree,
) -> Result<Vec<W>, PathSpaceError> {
    if n.is_zero() {
        return nu.level(g, q);
    }
    let top = q.join(n);
    let base = nu.level(g, &top.checked_sub(n).expect("top >= n"))?;
    let seg = g.segment_map(&top, n, &top)?;
    let vals: Vec<W> = seg.iter().map(|&i| base[i].clone()).collect();
    marginalize(g, &vals, &top, q)
}

/// R^n ν stored on the given levels.
pub fn transfer<W: Weight>(
    g: &KGraph,
    n: &Degree,
    nu: &CylinderMeasure<W>,
    levels: &[Degree],
) -> Result<CylinderMeasure<W>, PathSpaceError> {
    let mut out = BTreeMap::new();
    for q in levels {
        out.insert(q.clone(), transfer_level(g, n, nu, q)?);
    }
    Ok(CylinderMeasure::from_levels(g.k(), out))
}

/// ∫ a dν
pub fn integrate<S, W>(g: &KGraph, a: &CylinderFunction<S>, nu: &CylinderMeasure<W>) -> Result<S, PathSpaceError>
where
    S: Scalar + From<W>,
    W: Weight,
{
    let w = nu.level(g, a.depth())?;
    let mut acc = S::zero();
    for (x, m) in a.weights().iter().zip(w) {
        if !x.is_zero() && !m.is_zero() {
            acc = acc + x.clone() * S::from(m);
        }
    }
    Ok(acc)
}

/// The unit point mass at the ultimately periodic path prefix·cycle·cycle·…
pub fn point_mass<W: Weight>(g: &KGraph, prefix: &Path, cycle: &Path) -> Result<CylinderMeasure<W>, PathSpaceError> {
    if prefix.source() != cycle.range() || cycle.range() != cycle.source() || cycle.degree().entries().contains(&0) {
        return Err(PathSpaceError::DegenerateCycle);
    }
    Ok(CylinderMeasure { k: g.k(), source: Source::PointMass { prefix: prefix.clone(), cycle: cycle.clone(), mass: W::one() } })
}
