//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  Ax = b, x ≥ 0`. The scalar type decides whether
//! the solve is exact ([`Rational`]) or floating point (`f64`, with a fixed
//! pivot tolerance).

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub trait LpScalar:
    Clone
    + PartialOrd
    + Zero
    + One
    + Signed
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + Neg<Output = Self>
{
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_nil(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

impl LpScalar for Rational {
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

const F64_EPS: f64 = 1e-11;

impl LpScalar for f64 {
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<Vec<T>>,
    pub rhs: Vec<T>,
}

/// Pivot cap; Bland's rule cannot cycle, so this only guards against
/// floating-point stalls.
const MAX_PIVOTS: usize = 200_000;

struct Tableau<T> {
    // rows[i] has n + 1 entries; the last is the right-hand side
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    n: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = v.clone() / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.clone() - &(f.clone() * pv);
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` over the current basis. Columns with
    /// `allowed[j] == false` never enter.
    fn optimize(&mut self, cost: &[T], allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            // reduced cost of column j: c_j - Σ_i c_{basis[i]} a_ij
            let mut entering = None;
            for j in 0..self.n {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero() && !row[j].is_zero() {
                        rc = rc - &(cb.clone() * &row[j]);
                    }
                }
                if rc.is_neg() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Ok(true);
            };
            // ratio test, ties broken by smallest basic index (Bland)
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_pos() {
                    continue;
                }
                let ratio = row[self.n].clone() / &row[c];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(Error::Numerical(format!(
            "simplex did not terminate within {MAX_PIVOTS} pivots"
        )))
    }
}

impl<T: LpScalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, rows: Vec<Vec<T>>, rhs: Vec<T>) -> Result<Self> {
        let n = objective.len();
        if rows.len() != rhs.len() {
            return Err(Error::Input("row count and rhs length differ".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Input(format!("row {i} has the wrong width")));
        }
        Ok(LinearProgram {
            objective,
            rows,
            rhs,
        })
    }

    pub fn solve(&self) -> Result<LpOutcome<T>> {
        let n = self.objective.len();
        let m = self.rows.len();
        let total = n + m;
        // phase 1: artificial variable per row, rhs made nonnegative
        let mut rows = Vec::with_capacity(m);
        for (i, (row, b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let flip = b.is_neg();
            let mut r: Vec<T> = Vec::with_capacity(total + 1);
            for a in row {
                r.push(if flip { -a.clone() } else { a.clone() });
            }
            for k in 0..m {
                r.push(if k == i { T::one() } else { T::zero() });
            }
            r.push(if flip { -b.clone() } else { b.clone() });
            rows.push(r);
        }
        let mut tab = Tableau {
            rows,
            basis: (n..total).collect(),
            n: total,
        };
        let mut phase1_cost = vec![T::zero(); total];
        for c in phase1_cost.iter_mut().skip(n) {
            *c = T::one();
        }
        let all = vec![true; total];
        tab.optimize(&phase1_cost, &all)?;
        let infeas: T = tab
            .basis
            .iter()
            .zip(&tab.rows)
            .filter(|(&b, _)| b >= n)
            .fold(T::zero(), |acc, (_, row)| acc + &row[total]);
        if infeas.is_pos() {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining (zero-valued) artificials out of the basis
        let mut r = 0;
        while r < tab.rows.len() {
            if tab.basis[r] >= n {
                match (0..n).find(|&j| !tab.rows[r][j].is_nil()) {
                    Some(j) => {
                        tab.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        // redundant constraint
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        // phase 2
        let mut cost = self.objective.clone();
        cost.extend((0..m).map(|_| T::zero()));
        let mut allowed = vec![true; total];
        for a in allowed.iter_mut().skip(n) {
            *a = false;
        }
        if !tab.optimize(&cost, &allowed)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![T::zero(); n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.rows[i][total].clone();
            }
        }
        let value = x
            .iter()
            .zip(&self.objective)
            .fold(T::zero(), |acc, (xi, ci)| acc + &(xi.clone() * ci));
        Ok(LpOutcome::Optimal { value, x })
    }
}
