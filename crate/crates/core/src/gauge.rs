//! Minkowski gauge of `conv(B_X ∪ {±b₁, …, ±b_M})`.
//!
//! The gauge is the infimal convolution of the base norm with the ℓ1-type
//! gauge of the symmetric hull of the extra points:
//!
//! ```text
//! gauge(v) = min { ‖u‖ + Σⱼ |cⱼ| : v = u + Σⱼ cⱼ bⱼ }
//! ```
//!
//! For polyhedral base norms this is a single exact LP. For the Euclidean
//! norm the ball is replaced by polyhedral outer approximations (tangent
//! cuts) until the LP lower bound and the true objective at the LP
//! minimizer agree within [`L2_TOLERANCE`].

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{Rational, Real};
use crate::simplex::{LinearProgram, LpOutcome, LpScalar};
use crate::space::{NormKind, NormedSpace, Vector};

pub const L2_TOLERANCE: f64 = 1e-8;
const L2_MAX_CUTS: usize = 2_000;

pub fn gauge_renorm(space: &NormedSpace, bush_vectors: &[Vector], v: &Vector) -> Result<Real> {
    space.check(v)?;
    if bush_vectors.is_empty() {
        return Err(Error::Input("gauge needs at least one extra vector".into()));
    }
    let mut gens: Vec<&Vector> = Vec::with_capacity(bush_vectors.len());
    for b in bush_vectors {
        space.check(b)?;
        if b.is_zero() {
            return Err(Error::Input("extra vectors must be nonzero".into()));
        }
        if !gens.contains(&b) {
            gens.push(b);
        }
    }
    if v.is_zero() {
        return Ok(Real::zero());
    }
    match space.kind() {
        NormKind::WeightedL1 => weighted_l1_gauge(space, &gens, v).map(Real::Exact),
        NormKind::LInf => linf_gauge(space, &gens, v).map(Real::Exact),
        NormKind::L2 => l2_gauge(&gens, v).map(Real::Approx),
    }
}

fn optimal_value<T: LpScalar + std::fmt::Debug>(lp: LinearProgram<T>) -> Result<(T, Vec<T>)> {
    match lp.solve()? {
        LpOutcome::Optimal { value, x } => Ok((value, x)),
        // u = v, c = 0 is always feasible and the objective is bounded below by 0
        other => Err(Error::Numerical(format!("gauge LP returned {other:?}"))),
    }
}

// variables: u⁺ (d), u⁻ (d), c⁺ (M), c⁻ (M)
fn weighted_l1_gauge(space: &NormedSpace, gens: &[&Vector], v: &Vector) -> Result<Rational> {
    let d = space.dimension();
    let m = gens.len();
    let mut objective = Vec::with_capacity(2 * d + 2 * m);
    objective.extend(space.weights().iter().cloned());
    objective.extend(space.weights().iter().cloned());
    objective.extend((0..2 * m).map(|_| Rational::one()));
    let dense: Vec<Vec<Rational>> = gens.iter().map(|b| b.to_dense()).collect();
    let mut rows = Vec::with_capacity(d);
    for i in 0..d {
        let mut row = vec![Rational::zero(); 2 * d + 2 * m];
        row[i] = Rational::one();
        row[d + i] = -Rational::one();
        for (j, b) in dense.iter().enumerate() {
            row[2 * d + j] = b[i].clone();
            row[2 * d + m + j] = -b[i].clone();
        }
        rows.push(row);
    }
    let lp = LinearProgram::new(objective, rows, v.to_dense())?;
    optimal_value(lp).map(|(value, _)| value)
}

// variables: τ, c⁺ (M), c⁻ (M), σ⁺ (d), σ⁻ (d)
//   (Bc)ᵢ + τ − σ⁺ᵢ =  vᵢ      i.e.  vᵢ − (Bc)ᵢ ≤ τ
//  −(Bc)ᵢ + τ − σ⁻ᵢ = −vᵢ      i.e.  (Bc)ᵢ − vᵢ ≤ τ
fn linf_gauge(space: &NormedSpace, gens: &[&Vector], v: &Vector) -> Result<Rational> {
    let d = space.dimension();
    let m = gens.len();
    let width = 1 + 2 * m + 2 * d;
    let mut objective = vec![Rational::zero(); width];
    for c in objective.iter_mut().take(1 + 2 * m) {
        *c = Rational::one();
    }
    let dense: Vec<Vec<Rational>> = gens.iter().map(|b| b.to_dense()).collect();
    let vd = v.to_dense();
    let mut rows = Vec::with_capacity(2 * d);
    let mut rhs = Vec::with_capacity(2 * d);
    for sign in [1i64, -1] {
        for i in 0..d {
            let s = Rational::from_integer(sign.into());
            let mut row = vec![Rational::zero(); width];
            row[0] = Rational::one();
            for (j, b) in dense.iter().enumerate() {
                row[1 + j] = &s * &b[i];
                row[1 + m + j] = -(&s * &b[i]);
            }
            let slack = if sign == 1 { 1 + 2 * m + i } else { 1 + 2 * m + d + i };
            row[slack] = -Rational::one();
            rows.push(row);
            rhs.push(&s * &vd[i]);
        }
    }
    let lp = LinearProgram::new(objective, rows, rhs)?;
    optimal_value(lp).map(|(value, _)| value)
}

/// Cutting-plane sandwich for `min_c ‖v − Bc‖₂ + ‖c‖₁`.
///
/// The LP replaces `‖w‖₂` by `max_k aₖ·w` over unit cut directions `aₖ`,
/// which can only underestimate, so its value is a lower bound; the true
/// objective at the LP minimizer is an upper bound.
fn l2_gauge(gens: &[&Vector], v: &Vector) -> Result<f64> {
    let d = v.dim();
    let m = gens.len();
    let vf = v.to_f64();
    let bf: Vec<Vec<f64>> = gens.iter().map(|b| b.to_f64()).collect();
    let objective_at = |c: &[f64]| -> f64 {
        let mut w = vf.clone();
        for (cj, b) in c.iter().zip(&bf) {
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= cj * bi;
            }
        }
        let l2 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        l2 + c.iter().map(|x| x.abs()).sum::<f64>()
    };
    // start from the coordinate directions: the first LP sees ‖·‖∞
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut a = vec![0.0; d];
            a[i] = s;
            cuts.push(a);
        }
    }
    let mut best_upper = vf.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut lower = 0.0;
    for _ in 0..L2_MAX_CUTS {
        // variables: z, c⁺ (M), c⁻ (M), slack per cut
        //   z − a·v + a·Bc⁺ − a·Bc⁻ − slack = 0
        let k = cuts.len();
        let width = 1 + 2 * m + k;
        let mut objective = vec![0.0; width];
        for o in objective.iter_mut().take(1 + 2 * m) {
            *o = 1.0;
        }
        let mut rows = Vec::with_capacity(k);
        let mut rhs = Vec::with_capacity(k);
        for (r, a) in cuts.iter().enumerate() {
            let mut row = vec![0.0; width];
            row[0] = 1.0;
            for (j, b) in bf.iter().enumerate() {
                let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                row[1 + j] = ab;
                row[1 + m + j] = -ab;
            }
            row[1 + 2 * m + r] = -1.0;
            rows.push(row);
            rhs.push(a.iter().zip(&vf).map(|(x, y)| x * y).sum());
        }
        let (value, x) = optimal_value(LinearProgram::new(objective, rows, rhs)?)?;
        lower = f64::max(lower, value);
        let c: Vec<f64> = (0..m).map(|j| x[1 + j] - x[1 + m + j]).collect();
        let upper = objective_at(&c);
        best_upper = best_upper.min(upper);
        if best_upper - lower <= L2_TOLERANCE {
            return Ok(best_upper);
        }
        let mut w = vf.clone();
        for (cj, b) in c.iter().zip(&bf) {
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= cj * bi;
            }
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return Ok(best_upper);
        }
        cuts.push(w.iter().map(|x| x / nw).collect());
    }
    Err(Error::Numerical(format!(
        "l2 gauge did not converge after {L2_MAX_CUTS} cuts: lower {lower:e}, upper {best_upper:e}, gap {:e}",
        best_upper - lower
    )))
}

/// The gauge as a reusable norm: `B_X` enlarged by `±bush_vectors`.
#[derive(Debug, Clone)]
pub struct Renormed {
    space: NormedSpace,
    extra: Vec<Vector>,
}

impl Renormed {
    pub fn new(space: NormedSpace, extra: Vec<Vector>) -> Result<Self> {
        if extra.is_empty() {
            return Err(Error::Input("gauge needs at least one extra vector".into()));
        }
        for b in &extra {
            space.check(b)?;
        }
        Ok(Renormed { space, extra })
    }

    pub fn gauge(&self, v: &Vector) -> Result<Real> {
        gauge_renorm(&self.space, &self.extra, v)
    }

    pub fn base(&self) -> &NormedSpace {
        &self.space
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn approx_eq(a: &Real, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    fn dyadic1() -> (NormedSpace, Vec<Vector>) {
        let s = NormedSpace::weighted_l1(vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let vs = vec![
            Vector::from_dense(vec![int(1), int(1)]),
            Vector::from_dense(vec![int(2), int(0)]),
            Vector::from_dense(vec![int(0), int(2)]),
        ];
        (s, vs)
    }

    #[test]
    fn bush_vectors_have_gauge_one() {
        let (s, vs) = dyadic1();
        for b in &vs {
            assert_eq!(gauge_renorm(&s, &vs, b).unwrap(), Real::Exact(int(1)));
        }
    }

    #[test]
    fn zero_and_half_vectors() {
        let (s, vs) = dyadic1();
        assert_eq!(gauge_renorm(&s, &vs, &Vector::zeros(2)).unwrap(), Real::zero());
        let half = Vector::from_dense(vec![int(1), int(0)]);
        assert_eq!(gauge_renorm(&s, &vs, &half).unwrap(), Real::Exact(ratio(1, 2)));
    }

    #[test]
    fn extra_points_shrink_the_norm() {
        // base ℓ∞ on R², extra point (2, 0): gauge of (2, 0) is 1, of (2, 2) is 2
        let s = NormedSpace::linf(2).unwrap();
        let extra = vec![Vector::from_dense(vec![int(2), int(0)])];
        assert_eq!(gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(2), int(0)])).unwrap(), Real::Exact(int(1)));
        assert_eq!(gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(2), int(2)])).unwrap(), Real::Exact(int(2)));
        // (3, 1) = (2, 0) + (1, 1): 1 + 1
        assert_eq!(gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(3), int(1)])).unwrap(), Real::Exact(int(2)));
    }

    #[test]
    fn l2_gauge_matches_closed_form() {
        // hull of the Euclidean disc and ±(2, 0): the point (1, 1) lies on the
        // tangent from (2, 0) to the circle; its gauge is known in closed form
        let s = NormedSpace::l2(2).unwrap();
        let extra = vec![Vector::from_dense(vec![int(2), int(0)])];
        let g = gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(2), int(0)])).unwrap();
        assert!(approx_eq(&g, 1.0, 1e-8), "{g:?}");
        let g = gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(0), int(1)])).unwrap();
        assert!(approx_eq(&g, 1.0, 1e-8), "{g:?}");
        // brute-force oracle: min over c of ‖v − c b‖₂ + |c| on a fine grid
        let v = [1.0, 1.0];
        let oracle = (0..=200_000)
            .map(|i| {
                let c = -1.0 + 3.0 * i as f64 / 200_000.0;
                ((v[0] - 2.0 * c).powi(2) + v[1] * v[1]).sqrt() + c.abs()
            })
            .fold(f64::INFINITY, f64::min);
        let g = gauge_renorm(&s, &extra, &Vector::from_dense(vec![int(1), int(1)])).unwrap();
        assert!((g.to_f64() - oracle).abs() < 1e-7, "{g:?} vs {oracle}");
    }

    #[test]
    fn rejects_empty_generator_list() {
        let (s, _) = dyadic1();
        assert!(gauge_renorm(&s, &[], &Vector::zeros(2)).is_err());
        assert!(gauge_renorm(&s, &[Vector::zeros(2)], &Vector::zeros(2)).is_err());
    }
}
