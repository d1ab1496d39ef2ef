use std::fmt;
use std::ops::{Add, Index};

/// An element of N^k.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Degree(Vec<u32>);

impl Degree {
    pub fn new(entries: Vec<u32>) -> Self {
        Degree(entries)
    }

    pub fn zero(k: usize) -> Self {
        Degree(vec![0; k])
    }

    /// The generator e_i (0-based color index).
    pub fn unit(k: usize, i: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = 1;
        Degree(v)
    }

    /// (1, ..., 1)
    pub fn ones(k: usize) -> Self {
        Degree(vec![1; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn meet(&self, other: &Degree) -> Degree {
        Degree(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn join(&self, other: &Degree) -> Degree {
        Degree(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    /// Componentwise partial order.
    pub fn le(&self, other: &Degree) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn checked_sub(&self, other: &Degree) -> Option<Degree> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Degree)
    }

    /// Componentwise truncated subtraction.
    pub fn saturating_sub(&self, other: &Degree) -> Degree {
        Degree(self.0.iter().zip(&other.0).map(|(a, b)| a.saturating_sub(*b)).collect())
    }

    pub fn scale(&self, l: u32) -> Degree {
        Degree(self.0.iter().map(|a| a * l).collect())
    }

    /// Colors of the normal-form word of this degree, in order.
    pub fn color_pattern(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (i, &n) in self.0.iter().enumerate() {
            out.extend(std::iter::repeat(i).take(n as usize));
        }
        out
    }

    /// All degrees d with 0 <= d <= self.
    pub fn box_below(&self) -> Vec<Degree> {
        let mut out = vec![Vec::new()];
        for &n in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (n as usize + 1));
            for prefix in &out {
                for a in 0..=n {
                    let mut p = prefix.clone();
                    p.push(a);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(Degree).collect()
    }

    /// Dot product with a real vector.
    pub fn dot(&self, r: &[f64]) -> f64 {
        self.0.iter().zip(r).map(|(&n, &x)| n as f64 * x).sum()
    }
}

impl Add for &Degree {
    type Output = Degree;
    fn add(self, other: &Degree) -> Degree {
        Degree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Add for Degree {
    type Output = Degree;
    fn add(self, other: Degree) -> Degree {
        &self + &other
    }
}

impl Index<usize> for Degree {
    type Output = u32;
    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

impl fmt::Debug for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for Degree {
    fn from(v: Vec<u32>) -> Self {
        Degree(v)
    }
}

impl<const K: usize> From<[u32; K]> for Degree {
    fn from(v: [u32; K]) -> Self {
        Degree(v.to_vec())
    }
}
