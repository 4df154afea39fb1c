//! Finite-dimensional normed spaces over exact rational coordinates.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    /// `Σ wᵢ|vᵢ|`
    #[serde(rename = "wl1")]
    WeightedL1,
    #[serde(rename = "linf")]
    LInf,
    #[serde(rename = "l2")]
    L2,
}

impl NormKind {
    pub fn is_polyhedral(self) -> bool {
        !matches!(self, NormKind::L2)
    }

    pub fn tag(self) -> &'static str {
        match self {
            NormKind::WeightedL1 => "wl1",
            NormKind::LInf => "linf",
            NormKind::L2 => "l2",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "wl1" => Ok(NormKind::WeightedL1),
            "linf" => Ok(NormKind::LInf),
            "l2" => Ok(NormKind::L2),
            other => Err(Error::Input(format!("unknown norm kind {other:?}"))),
        }
    }
}

/// A coordinate vector stored sparsely: sorted `(index, value)` pairs with
/// no explicit zeros, so structural equality is numerical equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Vector {
    dim: usize,
    entries: Vec<(usize, Rational)>,
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        Vector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(coords: Vec<Rational>) -> Self {
        let dim = coords.len();
        let entries = coords
            .into_iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .collect();
        Vector { dim, entries }
    }

    /// Builds from arbitrary `(index, value)` pairs; duplicates are summed.
    pub fn from_entries(dim: usize, mut entries: Vec<(usize, Rational)>) -> Result<Self> {
        if let Some((i, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::Input(format!("index {i} out of range for dimension {dim}")));
        }
        entries.sort_by_key(|(i, _)| *i);
        let mut out: Vec<(usize, Rational)> = Vec::with_capacity(entries.len());
        for (i, x) in entries {
            match out.last_mut() {
                Some((j, y)) if *j == i => *y += x,
                _ => out.push((i, x)),
            }
        }
        out.retain(|(_, x)| !x.is_zero());
        Ok(Vector { dim, entries: out })
    }

    /// `value` on the coordinates in `range`, zero elsewhere.
    pub fn block(dim: usize, range: std::ops::Range<usize>, value: &Rational) -> Self {
        Vector {
            dim,
            entries: range.map(|i| (i, value.clone())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> Rational {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(p) => self.entries[p].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim];
        for (i, x) in &self.entries {
            out[*i] = x.clone();
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> Vector {
        if c.is_zero() {
            return Vector::zeros(self.dim);
        }
        Vector {
            dim: self.dim,
            entries: self.entries.iter().map(|(i, x)| (*i, x * c)).collect(),
        }
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: &Rational, other: &Vector) {
        debug_assert_eq!(self.dim, other.dim);
        if c.is_zero() || other.entries.is_empty() {
            return;
        }
        let old = std::mem::take(&mut self.entries);
        let mut merged = Vec::with_capacity(old.len() + other.entries.len());
        let mut rhs = other.entries.iter().peekable();
        for (i, x) in old {
            while let Some((j, y)) = rhs.next_if(|(j, _)| *j < i) {
                merged.push((*j, c * y));
            }
            match rhs.next_if(|(j, _)| *j == i) {
                Some((_, y)) => {
                    let z = x + c * y;
                    if !z.is_zero() {
                        merged.push((i, z));
                    }
                }
                None => merged.push((i, x)),
            }
        }
        merged.extend(rhs.map(|(j, y)| (*j, c * y)));
        self.entries = merged;
    }

    pub fn to_f64(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, x) in &self.entries {
            out[*i] = to_f64(x);
        }
        out
    }
}

impl From<Vec<Rational>> for Vector {
    fn from(v: Vec<Rational>) -> Self {
        Vector::from_dense(v)
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.to_dense().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        let mut out = self.clone();
        out.add_scaled(&Rational::one(), rhs);
        out
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        let mut out = self.clone();
        out.add_scaled(&-Rational::one(), rhs);
        out
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector {
            dim: self.dim,
            entries: self.entries.iter().map(|(i, x)| (*i, -x)).collect(),
        }
    }
}

/// A linear functional `v ↦ Σ fᵢ vᵢ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Functional(pub Vec<Rational>);

impl Functional {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn eval(&self, v: &Vector) -> Result<Rational> {
        functional_eval(self, v)
    }
}

pub fn functional_eval(f: &Functional, v: &Vector) -> Result<Rational> {
    if f.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: v.dim(),
        });
    }
    Ok(v.entries.iter().map(|(i, x)| &f.0[*i] * x).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormedSpace {
    dimension: usize,
    kind: NormKind,
    weights: Vec<Rational>,
}

impl NormedSpace {
    /// `weights` is required (and must be positive) for weighted-ℓ1 and
    /// ignored otherwise.
    pub fn new(dimension: usize, kind: NormKind, weights: Vec<Rational>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Input("dimension must be at least 1".into()));
        }
        let weights = match kind {
            NormKind::WeightedL1 => {
                if weights.len() != dimension {
                    return Err(Error::Input(format!(
                        "weighted-l1 needs {dimension} weights, got {}",
                        weights.len()
                    )));
                }
                if let Some(i) = weights.iter().position(|w| !w.is_positive()) {
                    return Err(Error::Input(format!("weight {i} is not positive")));
                }
                weights
            }
            _ => Vec::new(),
        };
        Ok(NormedSpace {
            dimension,
            kind,
            weights,
        })
    }

    pub fn weighted_l1(weights: Vec<Rational>) -> Result<Self> {
        Self::new(weights.len(), NormKind::WeightedL1, weights)
    }

    pub fn linf(dimension: usize) -> Result<Self> {
        Self::new(dimension, NormKind::LInf, Vec::new())
    }

    pub fn l2(dimension: usize) -> Result<Self> {
        Self::new(dimension, NormKind::L2, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn check(&self, v: &Vector) -> Result<()> {
        if v.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: v.dim(),
            });
        }
        Ok(())
    }

    /// Exact for the polyhedral norms; the Euclidean norm is exact only when
    /// the sum of squares is a perfect square of a rational.
    pub fn norm(&self, v: &Vector) -> Result<Real> {
        self.check(v)?;
        Ok(match self.kind {
            NormKind::WeightedL1 => Real::Exact(
                v.entries
                    .iter()
                    .map(|(i, x)| x.abs() * &self.weights[*i])
                    .sum(),
            ),
            NormKind::LInf => Real::Exact(
                v.entries
                    .iter()
                    .map(|(_, x)| x.abs())
                    .max()
                    .unwrap_or_else(Rational::zero),
            ),
            NormKind::L2 => {
                let sq: Rational = v.entries.iter().map(|(_, x)| x * x).sum();
                match exact_sqrt(&sq) {
                    Some(r) => Real::Exact(r),
                    None => Real::Approx(to_f64(&sq).sqrt()),
                }
            }
        })
    }

    pub fn distance(&self, a: &Vector, b: &Vector) -> Result<Real> {
        self.check(a)?;
        self.check(b)?;
        self.norm(&(a - b))
    }

    /// Operator norm of `f` through the dual-norm formula of this space.
    pub fn dual_norm(&self, f: &Functional) -> Result<Real> {
        if f.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: f.dim(),
            });
        }
        Ok(match self.kind {
            NormKind::WeightedL1 => Real::Exact(
                f.0.iter()
                    .zip(&self.weights)
                    .map(|(c, w)| c.abs() / w)
                    .max()
                    .unwrap_or_else(Rational::zero),
            ),
            NormKind::LInf => Real::Exact(f.0.iter().map(|c| c.abs()).sum()),
            NormKind::L2 => {
                let sq: Rational = f.0.iter().map(|x| x * x).sum();
                match exact_sqrt(&sq) {
                    Some(r) => Real::Exact(r),
                    None => Real::Approx(to_f64(&sq).sqrt()),
                }
            }
        })
    }
}

fn exact_sqrt(q: &Rational) -> Option<Rational> {
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn v(xs: &[(i64, i64)]) -> Vector {
        Vector::from_dense(xs.iter().map(|&(n, d)| ratio(n, d)).collect())
    }

    fn half_half() -> NormedSpace {
        NormedSpace::weighted_l1(vec![ratio(1, 2), ratio(1, 2)]).unwrap()
    }

    #[test]
    fn weighted_l1_examples() {
        let s = half_half();
        assert_eq!(s.norm(&v(&[(1, 1), (1, 1)])).unwrap(), Real::Exact(int(1)));
        assert_eq!(s.norm(&v(&[(2, 1), (0, 1)])).unwrap(), Real::Exact(int(1)));
        assert_eq!(s.norm(&Vector::zeros(2)).unwrap(), Real::zero());
    }

    #[test]
    fn zero_has_zero_norm_everywhere() {
        for s in [half_half(), NormedSpace::linf(2).unwrap(), NormedSpace::l2(2).unwrap()] {
            assert_eq!(s.norm(&Vector::zeros(2)).unwrap(), Real::zero());
        }
    }

    #[test]
    fn l2_is_exact_on_pythagorean_input() {
        let s = NormedSpace::l2(2).unwrap();
        assert_eq!(s.norm(&v(&[(3, 1), (4, 1)])).unwrap(), Real::Exact(int(5)));
        let r = s.norm(&v(&[(1, 1), (1, 1)])).unwrap();
        assert!(!r.is_exact());
        assert!((r.to_f64() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn functional_examples() {
        let f = Functional(vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(functional_eval(&f, &v(&[(1, 1), (1, 1)])).unwrap(), int(1));
        assert_eq!(functional_eval(&f, &v(&[(2, 1), (0, 1)])).unwrap(), int(1));
        assert_eq!(functional_eval(&f, &Vector::zeros(2)).unwrap(), int(0));
        assert_eq!(half_half().dual_norm(&f).unwrap(), Real::Exact(int(1)));
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let s = half_half();
        assert!(matches!(
            s.norm(&Vector::zeros(3)),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        let f = Functional(vec![int(1)]);
        assert!(functional_eval(&f, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn rejects_bad_spaces() {
        assert!(NormedSpace::new(0, NormKind::LInf, vec![]).is_err());
        assert!(NormedSpace::weighted_l1(vec![int(1), int(0)]).is_err());
        assert!(NormedSpace::new(2, NormKind::WeightedL1, vec![int(1)]).is_err());
    }

    #[test]
    fn dual_norms() {
        let f = Functional(vec![ratio(1, 3), ratio(-2, 3)]);
        assert_eq!(NormedSpace::linf(2).unwrap().dual_norm(&f).unwrap(), Real::Exact(int(1)));
        let g = Functional(vec![ratio(3, 5), ratio(4, 5)]);
        assert_eq!(NormedSpace::l2(2).unwrap().dual_norm(&g).unwrap(), Real::Exact(int(1)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_rational() -> impl Strategy<Value = Rational> {
            (-20i64..=20, 1i64..=6).prop_map(|(n, d)| ratio(n, d))
        }

        fn vec3() -> impl Strategy<Value = Vector> {
            proptest::collection::vec(small_rational(), 3).prop_map(Vector::from_dense)
        }

        fn spaces() -> Vec<NormedSpace> {
            vec![
                NormedSpace::weighted_l1(vec![ratio(1, 3), int(2), ratio(5, 7)]).unwrap(),
                NormedSpace::linf(3).unwrap(),
                NormedSpace::l2(3).unwrap(),
            ]
        }

        proptest! {
            #[test]
            fn norm_axioms(a in vec3(), b in vec3(), c in small_rational()) {
                for s in spaces() {
                    let na = s.norm(&a).unwrap();
                    prop_assert_eq!(na.to_f64() == 0.0, a.is_zero());
                    let scaled = s.norm(&a.scale(&c)).unwrap();
                    match (&scaled, &na) {
                        (Real::Exact(x), Real::Exact(y)) if s.kind().is_polyhedral() => {
                            prop_assert_eq!(x.clone(), y * c.abs());
                        }
                        _ => {
                            let want = na.to_f64() * to_f64(&c).abs();
                            prop_assert!((scaled.to_f64() - want).abs() <= 1e-9 * (1.0 + want));
                        }
                    }
                    let nab = s.norm(&(&a + &b)).unwrap().to_f64();
                    let nb = s.norm(&b).unwrap().to_f64();
                    prop_assert!(nab <= na.to_f64() + nb + 1e-12);
                }
            }
        }
    }
}
