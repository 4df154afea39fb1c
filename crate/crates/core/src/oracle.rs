//! Exhaustive grid-restricted thickness search over a small family.
//!
//! For a pair `(g, h)` the best witness on a grid takes every grid point
//! where the curves agree as a `q`-point (adding `q`-points only adds
//! `s`-slots) and, between consecutive `q`-points, the grid point of
//! largest deviation as the `s`-point.

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::construction::LineTree;
use crate::error::{Error, Result};
use crate::family::{Curve, PastedGeodesic, ThicknessWitness};
use crate::rational::{Rational, Real};
use crate::space::Vector;

/// Largest number of grid points; agreement sets are kept as bit masks.
pub const MAX_GRID: usize = 64;

/// Cap on `|family|² · #challenges`.
pub const WORK_BUDGET: f64 = 5e7;

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub geodesic: usize,
    pub challenge: Vec<Rational>,
    /// Best answer for that challenge, if any family member fits.
    pub response: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaReport {
    /// `min` over geodesics and challenges of `max` over answers of the
    /// grid deviation.
    pub bound: Real,
    pub family_size: usize,
    pub grid_size: usize,
    pub n_max: usize,
    pub challenges: usize,
    pub worst: Option<WorstCase>,
}

struct PairTable {
    common: Vec<Vec<u64>>,
    deviation: Vec<Vec<Real>>,
}

fn sorted_grid(grid: &[Rational]) -> Result<Vec<Rational>> {
    let mut g = grid.to_vec();
    g.sort();
    g.dedup();
    if g.len() > MAX_GRID {
        return Err(Error::Budget(format!(
            "grid of {} points exceeds {MAX_GRID}",
            g.len()
        )));
    }
    if g.is_empty() {
        return Err(Error::Input("the grid is empty".into()));
    }
    if g.iter().any(|x| *x < Rational::zero() || *x > Rational::one()) {
        return Err(Error::Input("grid points must lie in [0, 1]".into()));
    }
    Ok(g)
}

fn points(tree: &LineTree, c: &dyn Curve, grid: &[Rational], depth: usize) -> Result<Vec<Vector>> {
    grid.iter().map(|s| c.point(tree, s, depth)).collect()
}

/// Common-point mask and the optimal witness for one pair of sampled curves.
fn pair_witness(
    tree: &LineTree,
    grid: &[Rational],
    a: &[Vector],
    b: &[Vector],
) -> Result<(u64, Vec<usize>, Vec<usize>, Real)> {
    let space = tree.bush().space();
    let dist = a
        .iter()
        .zip(b)
        .map(|(x, y)| space.distance(x, y))
        .collect::<Result<Vec<Real>>>()?;
    let common: Vec<usize> = (0..grid.len())
        .filter(|&i| dist[i].at_most(&Rational::zero(), 1e-12))
        .collect();
    let mask = common.iter().fold(0u64, |m, &i| m | (1 << i));
    // segments between consecutive common points, both ends included
    let mut bounds = vec![0usize];
    bounds.extend(common.iter().copied());
    bounds.push(grid.len().saturating_sub(1));
    let mut s = Vec::with_capacity(bounds.len() - 1);
    let mut total = Real::zero();
    for w in bounds.windows(2) {
        let best = (w[0]..=w[1])
            .max_by(|&i, &j| dist[i].total_cmp(&dist[j]).then(j.cmp(&i)))
            .unwrap_or(w[0]);
        total = total.add(&dist[best]);
        s.push(best);
    }
    Ok((mask, common, s, total))
}

/// Grid-restricted witness for `(g, h)`: `q` are the grid points where they
/// agree, `s` the per-gap maximizers. The grid should contain 0 and 1.
pub fn grid_witness(
    tree: &LineTree,
    g: &dyn Curve,
    h: &dyn Curve,
    grid: &[Rational],
) -> Result<ThicknessWitness> {
    let grid = sorted_grid(grid)?;
    let depth = g.depth().max(h.depth());
    let a = points(tree, g, &grid, depth)?;
    let b = points(tree, h, &grid, depth)?;
    let (_, common, s, total) = pair_witness(tree, &grid, &a, &b)?;
    Ok(ThicknessWitness {
        q: common.iter().map(|&i| grid[i].clone()).collect(),
        s: s.iter().map(|&i| grid[i].clone()).collect(),
        deviation_total: total,
        gaps: Vec::new(),
    })
}

fn subsets(n: usize, k_max: usize) -> Vec<u64> {
    let mut out = vec![0u64];
    let mut frontier = vec![(0u64, 0usize)];
    for _ in 0..k_max {
        let mut next = Vec::new();
        for (mask, from) in frontier {
            for i in from..n {
                let m = mask | (1 << i);
                out.push(m);
                next.push((m, i + 1));
            }
        }
        frontier = next;
    }
    out
}

fn binomial_sum(n: usize, k_max: usize) -> f64 {
    let mut total = 0.0;
    let mut c = 1.0;
    for k in 0..=k_max.min(n) {
        total += c;
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    total
}

pub fn brute_force_alpha(
    tree: &LineTree,
    family: &[PastedGeodesic],
    n_max: usize,
    grid: &[Rational],
) -> Result<AlphaReport> {
    let grid = sorted_grid(grid)?;
    let work = (family.len() as f64).powi(2) * binomial_sum(grid.len(), n_max);
    if work > WORK_BUDGET {
        return Err(Error::Budget(format!(
            "{} geodesics, {} grid points and n_max = {n_max} need about {work:.0} pair checks",
            family.len(),
            grid.len()
        )));
    }
    let depth = family.iter().map(|g| g.depth()).max().unwrap_or(0);
    let samples = family
        .par_iter()
        .map(|g| points(tree, g, &grid, depth))
        .collect::<Result<Vec<_>>>()?;
    let n = family.len();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut common = vec![0u64; n];
            let mut deviation = vec![Real::zero(); n];
            for j in 0..n {
                if i != j {
                    let (mask, _, _, total) = pair_witness(tree, &grid, &samples[i], &samples[j])?;
                    common[j] = mask;
                    deviation[j] = total;
                }
            }
            Ok((common, deviation))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = PairTable {
        common: rows.iter().map(|r| r.0.clone()).collect(),
        deviation: rows.into_iter().map(|r| r.1).collect(),
    };

    let challenges = subsets(grid.len(), n_max);
    // per geodesic: the challenge with the weakest best answer
    let per_geodesic: Vec<(Real, usize, u64, Option<usize>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst: Option<(Real, u64, Option<usize>)> = None;
            for &t in &challenges {
                let mut best: Option<(Real, usize)> = None;
                for j in 0..n {
                    if j == i || table.common[i][j] & t != t {
                        continue;
                    }
                    let d = &table.deviation[i][j];
                    if best.as_ref().map_or(true, |(b, _)| d.total_cmp(b).is_gt()) {
                        best = Some((d.clone(), j));
                    }
                }
                let (value, resp) = match best {
                    Some((d, j)) => (d, Some(j)),
                    None => (Real::zero(), None),
                };
                if worst.as_ref().map_or(true, |(w, _, _)| value.total_cmp(w).is_lt()) {
                    worst = Some((value, t, resp));
                }
            }
            let (v, t, r) = worst.unwrap_or((Real::zero(), 0, None));
            (v, i, t, r)
        })
        .collect();

    let worst = per_geodesic
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (bound, worst) = match worst {
        Some((v, i, t, r)) => (
            v,
            Some(WorstCase {
                geodesic: i,
                challenge: (0..grid.len())
                    .filter(|k| t & (1 << k) != 0)
                    .map(|k| grid[k].clone())
                    .collect(),
                response: r,
            }),
        ),
        None => (Real::zero(), None),
    };
    Ok(AlphaReport {
        bound,
        family_size: n,
        grid_size: grid.len(),
        n_max,
        challenges: challenges.len() * n,
        worst,
    })
}
