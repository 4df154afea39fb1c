//! ε-bushes: leveled families of vectors where every vector is a convex
//! combination of its children, each child at distance at least ε.
//!
//! Indices are 0-based throughout: `x(n, j)` is the `j`-th vector of level
//! `n`, and `block(n, k)` lists the children at level `n` of the parent
//! `x(n - 1, k)` in ascending order.

use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{dyadic, int, ratio, Rational, Real};
use crate::space::{Functional, NormedSpace, Vector};

/// Largest bush depth and broken-line label length accepted unless
/// overridden.
pub const DEFAULT_DEPTH_BUDGET: usize = 12;

/// Tolerance used when normalization has to be decided on floating-point
/// norms (Euclidean spaces).
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Raw ingredients of a bush, as read from a file or assembled by hand.
#[derive(Debug, Clone, PartialEq)]
pub struct BushParts {
    pub space: NormedSpace,
    pub epsilon: Rational,
    /// `levels[n][j] = x(n, j)`; `levels[0]` has exactly one vector.
    pub levels: Vec<Vec<Vector>>,
    /// `partitions[n - 1][k]` = children of `x(n - 1, k)` at level `n`.
    pub partitions: Vec<Vec<Vec<usize>>>,
    /// Parallel to `levels`; `weights[0] == [1]`.
    pub weights: Vec<Vec<Rational>>,
    pub functional: Functional,
}

#[derive(Debug)]
pub struct Bush {
    parts: BushParts,
    parent: Vec<Vec<usize>>,
    midpoints: Vec<Vec<Vector>>,
    normalized: OnceLock<std::result::Result<(), String>>,
}

impl Clone for Bush {
    fn clone(&self) -> Self {
        Bush {
            parts: self.parts.clone(),
            parent: self.parent.clone(),
            midpoints: self.midpoints.clone(),
            normalized: OnceLock::new(),
        }
    }
}

impl PartialEq for Bush {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl Bush {
    /// Checks the structure (sizes, dimensions, partitions) but none of the
    /// metric axioms; see [`validate_bush`] for those.
    pub fn new(parts: BushParts) -> Result<Self> {
        let dim = parts.space.dimension();
        if parts.levels.is_empty() {
            return Err(Error::Structural("a bush needs at least level 0".into()));
        }
        if parts.levels[0].len() != 1 {
            return Err(Error::Structural(format!(
                "level 0 must hold exactly one vector, found {}",
                parts.levels[0].len()
            )));
        }
        if !parts.epsilon.is_positive() {
            return Err(Error::Structural("epsilon must be positive".into()));
        }
        if parts.functional.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: parts.functional.dim(),
            });
        }
        for (n, level) in parts.levels.iter().enumerate() {
            if level.is_empty() {
                return Err(Error::Structural(format!("level {n} is empty")));
            }
            for (j, v) in level.iter().enumerate() {
                if v.dim() != dim {
                    return Err(Error::Structural(format!(
                        "x({n},{j}) has dimension {}, expected {dim}",
                        v.dim()
                    )));
                }
            }
        }
        let depth = parts.levels.len() - 1;
        if parts.partitions.len() != depth {
            return Err(Error::Structural(format!(
                "expected {depth} partition levels, found {}",
                parts.partitions.len()
            )));
        }
        if parts.weights.len() != depth + 1 {
            return Err(Error::Structural(format!(
                "expected {} weight levels, found {}",
                depth + 1,
                parts.weights.len()
            )));
        }
        for (n, (w, level)) in parts.weights.iter().zip(&parts.levels).enumerate() {
            if w.len() != level.len() {
                return Err(Error::Structural(format!(
                    "level {n} has {} vectors but {} weights",
                    level.len(),
                    w.len()
                )));
            }
        }
        let mut parent = vec![vec![0]];
        for n in 1..=depth {
            let blocks = &parts.partitions[n - 1];
            let m_prev = parts.levels[n - 1].len();
            let m = parts.levels[n].len();
            if blocks.len() != m_prev {
                return Err(Error::Structural(format!(
                    "level {n}: {} blocks for {m_prev} parents",
                    blocks.len()
                )));
            }
            let mut owner: Vec<Option<usize>> = vec![None; m];
            let mut overlaps = Vec::new();
            let mut out_of_range = Vec::new();
            for (k, block) in blocks.iter().enumerate() {
                if block.is_empty() {
                    return Err(Error::Structural(format!(
                        "level {n}: block of parent {k} is empty"
                    )));
                }
                for &j in block {
                    match owner.get_mut(j) {
                        None => out_of_range.push(j),
                        Some(Some(_)) => overlaps.push(j),
                        Some(slot) => *slot = Some(k),
                    }
                }
            }
            let gaps: Vec<usize> = (0..m).filter(|&j| owner[j].is_none()).collect();
            if !overlaps.is_empty() || !gaps.is_empty() || !out_of_range.is_empty() {
                return Err(Error::Structural(format!(
                    "level {n}: partition is not a partition (overlapping {overlaps:?}, missing {gaps:?}, out of range {out_of_range:?})"
                )));
            }
            parent.push(owner.into_iter().map(|o| o.unwrap_or(0)).collect());
        }
        let mut parts = parts;
        for blocks in parts.partitions.iter_mut() {
            for block in blocks.iter_mut() {
                block.sort_unstable();
            }
        }
        let half = ratio(1, 2);
        let mut midpoints = vec![Vec::new()];
        for n in 1..=depth {
            let level: Vec<Vector> = parts.levels[n]
                .iter()
                .enumerate()
                .map(|(j, x)| (&parts.levels[n - 1][parent[n][j]] + x).scale(&half))
                .collect();
            midpoints.push(level);
        }
        Ok(Bush {
            parts,
            parent,
            midpoints,
            normalized: OnceLock::new(),
        })
    }

    pub fn parts(&self) -> &BushParts {
        &self.parts
    }

    pub fn into_parts(self) -> BushParts {
        self.parts
    }

    pub fn space(&self) -> &NormedSpace {
        &self.parts.space
    }

    pub fn epsilon(&self) -> &Rational {
        &self.parts.epsilon
    }

    pub fn functional(&self) -> &Functional {
        &self.parts.functional
    }

    pub fn depth(&self) -> usize {
        self.parts.levels.len() - 1
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.parts.levels.iter().map(Vec::len).collect()
    }

    pub fn level_size(&self, n: usize) -> usize {
        self.parts.levels[n].len()
    }

    pub fn x(&self, n: usize, j: usize) -> &Vector {
        &self.parts.levels[n][j]
    }

    pub fn root(&self) -> &Vector {
        &self.parts.levels[0][0]
    }

    pub fn weight(&self, n: usize, j: usize) -> &Rational {
        &self.parts.weights[n][j]
    }

    pub fn block(&self, n: usize, k: usize) -> &[usize] {
        &self.parts.partitions[n - 1][k]
    }

    pub fn parent(&self, n: usize, j: usize) -> usize {
        self.parent[n][j]
    }

    /// `y(n, j) = ½(x(n - 1, parent) + x(n, j))` for `n ≥ 1`.
    pub fn midpoint(&self, n: usize, j: usize) -> &Vector {
        &self.midpoints[n][j]
    }

    pub fn vectors(&self) -> impl Iterator<Item = (usize, usize, &Vector)> {
        self.parts
            .levels
            .iter()
            .enumerate()
            .flat_map(|(n, level)| level.iter().enumerate().map(move |(j, v)| (n, j, v)))
    }

    pub fn all_vectors(&self) -> Vec<Vector> {
        self.vectors().map(|(_, _, v)| v.clone()).collect()
    }

    /// Runs (once) the normalized validation at tolerance 0 for polyhedral
    /// norms and [`NORMALIZATION_TOL`] otherwise.
    pub fn ensure_normalized(&self) -> Result<()> {
        let cached = self.normalized.get_or_init(|| {
            let tol = if self.space().kind().is_polyhedral() {
                0.0
            } else {
                NORMALIZATION_TOL
            };
            let report = validate_bush(self, tol);
            if report.is_normalized() {
                Ok(())
            } else {
                let mut msgs = report.failures;
                msgs.extend(report.warnings);
                Err(msgs.join("; "))
            }
        });
        cached.clone().map_err(Error::NotNormalized)
    }
}

/// Outcome of checking the bush axioms and the derived bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BushReport {
    pub depth: usize,
    pub level_sizes: Vec<usize>,
    pub epsilon: Rational,
    pub weights_nonnegative: bool,
    pub weight_sums: bool,
    pub convexity: bool,
    pub separation: bool,
    pub min_separation: Option<Real>,
    pub blocks_nontrivial: bool,
    pub unit_norms: bool,
    pub max_norm: Real,
    pub functional_values: bool,
    pub functional_norm: Real,
    pub functional_norm_one: bool,
    pub lambda_max: Rational,
    pub lambda_bound: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl BushReport {
    /// All axioms of an ε-bush hold.
    pub fn is_bush(&self) -> bool {
        self.weights_nonnegative
            && self.weight_sums
            && self.convexity
            && self.separation
            && self.blocks_nontrivial
    }

    /// Bush axioms plus unit norms, `x*(x) = 1` and `‖x*‖ = 1`.
    pub fn is_normalized(&self) -> bool {
        self.is_bush()
            && self.unit_norms
            && self.functional_values
            && self.functional_norm_one
            && self.lambda_bound
    }
}

pub fn lambda_max(b: &Bush) -> Rational {
    b.parts
        .weights
        .iter()
        .skip(1)
        .flatten()
        .max()
        .cloned()
        .unwrap_or_else(Rational::one)
}

/// Checks every axiom. Convexity, weight sums and functional values are
/// exact; norm comparisons use `tol` when a norm is not exact (and are
/// exact when `tol == 0` and the norm is polyhedral).
pub fn validate_bush(b: &Bush, tol: f64) -> BushReport {
    let space = b.space();
    let eps = b.epsilon().clone();
    let mut failures = Vec::new();
    let mut warnings = Vec::new();

    let mut weights_nonnegative = true;
    let mut weight_sums = true;
    let mut convexity = true;
    let mut separation = true;
    let mut blocks_nontrivial = true;
    let mut min_sep: Option<Real> = None;

    if !b.weight(0, 0).is_one() {
        warnings.push("level-0 weight is not 1 (ignored)".into());
    }
    for n in 1..=b.depth() {
        for k in 0..b.level_size(n - 1) {
            let block = b.block(n, k);
            if block.len() < 2 {
                blocks_nontrivial = false;
                failures.push(format!(
                    "block A({n},{k}) has a single element; separation and convexity conflict"
                ));
            }
            let mut sum = Rational::zero();
            let mut combo = Vector::zeros(space.dimension());
            for &j in block {
                let w = b.weight(n, j);
                if w.is_negative() {
                    weights_nonnegative = false;
                    failures.push(format!("weight λ({n},{j}) = {w} is negative"));
                }
                sum += w;
                combo.add_scaled(w, b.x(n, j));
            }
            if !sum.is_one() {
                weight_sums = false;
                failures.push(format!("weights of block A({n},{k}) sum to {sum}"));
            }
            if &combo != b.x(n - 1, k) {
                convexity = false;
                failures.push(format!(
                    "x({},{k}) is not the weighted sum of its children (got {combo})",
                    n - 1
                ));
            }
            for &j in block {
                // dimensions were checked at construction
                let d = space.distance(b.x(n, j), b.x(n - 1, k)).unwrap_or(Real::zero());
                if !d.at_least(&eps, tol) {
                    separation = false;
                    failures.push(format!(
                        "‖x({n},{j}) − x({},{k})‖ = {d} < ε = {eps}",
                        n - 1
                    ));
                }
                min_sep = Some(match min_sep {
                    None => d,
                    Some(m) if d.to_f64() < m.to_f64() => d,
                    Some(m) => m,
                });
            }
        }
    }

    let mut unit_norms = true;
    let mut functional_values = true;
    let mut max_norm = Real::zero();
    for (n, j, v) in b.vectors() {
        let nv = space.norm(v).unwrap_or(Real::zero());
        if !nv.close_to(&Rational::one(), tol) {
            unit_norms = false;
        }
        if nv.to_f64() > max_norm.to_f64() || (nv.is_exact() && !max_norm.is_exact()) {
            max_norm = nv;
        }
        let fv = b.functional().eval(v).unwrap_or_else(|_| Rational::zero());
        if !fv.is_one() {
            functional_values = false;
            warnings.push(format!("x*(x({n},{j})) = {fv}, not 1"));
        }
    }
    if !unit_norms {
        warnings.push(format!(
            "not all bush vectors have norm 1 (max {max_norm}); renorm before building geodesics"
        ));
    }
    let functional_norm = space
        .dual_norm(b.functional())
        .unwrap_or(Real::Exact(Rational::zero()));
    let functional_norm_one = functional_norm.close_to(&Rational::one(), tol);
    if !functional_norm_one {
        warnings.push(format!("‖x*‖ = {functional_norm}, not 1"));
    }

    let lmax = lambda_max(b);
    let bound = Rational::one() - &eps / int(2);
    let lambda_bound = lmax <= bound;
    if !lambda_bound {
        let msg = format!("λ_max = {lmax} exceeds 1 − ε/2 = {bound}");
        if unit_norms && functional_values {
            failures.push(msg);
        } else {
            warnings.push(msg);
        }
    }

    BushReport {
        depth: b.depth(),
        level_sizes: b.level_sizes(),
        epsilon: eps,
        weights_nonnegative,
        weight_sums,
        convexity,
        separation,
        min_separation: min_sep,
        blocks_nontrivial,
        unit_norms,
        max_norm,
        functional_values,
        functional_norm,
        functional_norm_one,
        lambda_max: lmax,
        lambda_bound,
        failures,
        warnings,
    }
}

/// The Haar-type bush in the dyadic discretization of `L₁[0,1]`: dimension
/// `2^N` with all weights `2^-N`, `x(n, j) = 2ⁿ · 1[block j of size 2^(N-n)]`,
/// binary blocks with weights ½, `ε = 1`, and `x*` the integral.
pub fn dyadic_bush(depth: usize) -> Result<Bush> {
    dyadic_bush_with_budget(depth, DEFAULT_DEPTH_BUDGET)
}

pub fn dyadic_bush_with_budget(depth: usize, budget: usize) -> Result<Bush> {
    if depth == 0 {
        return Err(Error::Input("dyadic bush depth must be at least 1".into()));
    }
    if depth > budget {
        return Err(Error::Depth {
            requested: depth,
            available: budget,
            reason: "depth budget",
        });
    }
    let dim = 1usize << depth;
    let w = dyadic(depth as u32);
    let space = NormedSpace::weighted_l1(vec![w.clone(); dim])?;
    let mut levels = Vec::with_capacity(depth + 1);
    let mut weights = Vec::with_capacity(depth + 1);
    let mut partitions = Vec::with_capacity(depth);
    for n in 0..=depth {
        let height = Rational::from_integer((1i64 << n).into());
        let width = 1usize << (depth - n);
        let level: Vec<Vector> = (0..1usize << n)
            .map(|j| Vector::block(dim, j * width..(j + 1) * width, &height))
            .collect();
        weights.push(if n == 0 {
            vec![Rational::one()]
        } else {
            vec![ratio(1, 2); 1 << n]
        });
        if n > 0 {
            partitions.push((0..1usize << (n - 1)).map(|k| vec![2 * k, 2 * k + 1]).collect());
        }
        levels.push(level);
    }
    Bush::new(BushParts {
        space,
        epsilon: Rational::one(),
        levels,
        partitions,
        weights,
        functional: Functional(vec![w; dim]),
    })
}

/// A random normalized bush in a weighted-ℓ1 space.
///
/// Every vector is a nonnegative density with `x*(x) = ‖x‖ = 1` where
/// `x*` has the space weights as coefficients. Children restrict their
/// parent to equal-size coordinate ranges and renormalize, so each child
/// weight is the parent mass on its range; branching per level is 2 or 3
/// and `ε` is at most the smallest parent-child distance.
pub fn random_bush(seed: u64, depth: usize) -> Result<Bush> {
    if depth == 0 || depth > 4 {
        return Err(Error::Input("random bushes support depths 1..=4".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let branching: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=3)).collect();
    let dim: usize = branching.iter().product();
    let weights: Vec<Rational> = (0..dim).map(|_| ratio(rng.gen_range(1..=4), 4)).collect();
    let raw: Vec<Rational> = (0..dim).map(|_| int(rng.gen_range(1..=5))).collect();
    let mass: Rational = raw.iter().zip(&weights).map(|(a, w)| a * w).sum();
    let root = Vector::from_dense(raw.iter().map(|a| a / &mass).collect());
    let space = NormedSpace::weighted_l1(weights.clone())?;

    let mut levels = vec![vec![root]];
    let mut lambdas = vec![vec![Rational::one()]];
    let mut partitions = Vec::new();
    let mut ranges = vec![(0usize, dim)];
    let mut min_sep: Option<Rational> = None;
    for &r in &branching {
        let prev = levels.last().cloned().unwrap_or_default();
        let mut level = Vec::new();
        let mut lam = Vec::new();
        let mut blocks = Vec::new();
        let mut next_ranges = Vec::new();
        for (k, x) in prev.iter().enumerate() {
            let (lo, hi) = ranges[k];
            let width = (hi - lo) / r;
            let mut block = Vec::new();
            for i in 0..r {
                let (a, z) = (lo + i * width, lo + (i + 1) * width);
                let m: Rational = (a..z).map(|c| x.get(c) * &weights[c]).sum();
                let child = Vector::from_entries(dim, (a..z).map(|c| (c, x.get(c) / &m)).collect())?;
                let sep = space.norm(&(&child - x))?;
                let sep = sep.exact().cloned().unwrap_or_else(Rational::zero);
                min_sep = Some(match min_sep {
                    Some(s) if s <= sep => s,
                    _ => sep,
                });
                block.push(level.len());
                level.push(child);
                lam.push(m);
                next_ranges.push((a, z));
            }
            blocks.push(block);
        }
        levels.push(level);
        lambdas.push(lam);
        partitions.push(blocks);
        ranges = next_ranges;
    }
    let shrink = [ratio(1, 1), ratio(3, 4), ratio(1, 2)][rng.gen_range(0..3)].clone();
    let epsilon = min_sep.unwrap_or_else(Rational::one) * shrink;
    Bush::new(BushParts {
        space,
        epsilon,
        levels,
        partitions,
        weights: lambdas,
        functional: Functional(weights),
    })
}

/// Translates every vector by `x`. Differences, and therefore separation and
/// convex combinations, are unchanged.
pub fn shift_bush(b: &Bush, x: &Vector) -> Result<Bush> {
    b.space().check(x)?;
    let mut parts = b.parts.clone();
    for level in parts.levels.iter_mut() {
        for v in level.iter_mut() {
            *v = &*v + x;
        }
    }
    Bush::new(parts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MidpointVector {
    /// Level of the child, `ℓ + 1`.
    pub level: usize,
    pub parent: usize,
    pub child: usize,
    pub value: Vector,
    pub norm: Real,
    pub distance_to_parent: Real,
    pub distance_to_child: Real,
}

/// `y = ½(x(level - 1, parent) + x(level, child))` with its norm and its
/// distances to both ends.
pub fn midpoint_y(b: &Bush, level: usize, parent: usize, child: usize) -> Result<MidpointVector> {
    if level == 0 || level > b.depth() {
        return Err(Error::Index(format!(
            "midpoint level {level} outside 1..={}",
            b.depth()
        )));
    }
    if parent >= b.level_size(level - 1) {
        return Err(Error::Index(format!("no parent {parent} at level {}", level - 1)));
    }
    if !b.block(level, parent).contains(&child) {
        return Err(Error::Index(format!(
            "{child} is not in block A({level},{parent}) = {:?}",
            b.block(level, parent)
        )));
    }
    let value = b.midpoint(level, child).clone();
    let space = b.space();
    Ok(MidpointVector {
        level,
        parent,
        child,
        norm: space.norm(&value)?,
        distance_to_parent: space.distance(&value, b.x(level - 1, parent))?,
        distance_to_child: space.distance(&value, b.x(level, child))?,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::NormKind;

    fn q(n: i64) -> Rational {
        int(n)
    }

    fn vecq(xs: &[i64]) -> Vector {
        Vector::from_dense(xs.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn dyadic_one_matches_hand_values() {
        let b = dyadic_bush(1).unwrap();
        assert_eq!(b.root(), &vecq(&[1, 1]));
        assert_eq!(b.x(1, 0), &vecq(&[2, 0]));
        assert_eq!(b.x(1, 1), &vecq(&[0, 2]));
        assert_eq!(b.epsilon(), &q(1));
        let d = b.space().distance(b.x(1, 0), b.root()).unwrap();
        assert_eq!(d, Real::Exact(q(1)));
        assert_eq!(b.functional().eval(b.x(1, 0)).unwrap(), q(1));
    }

    #[test]
    fn dyadic_two_convex_combination() {
        let b = dyadic_bush(2).unwrap();
        assert_eq!(b.x(1, 0), &vecq(&[2, 2, 0, 0]));
        assert_eq!(b.x(2, 0), &vecq(&[4, 0, 0, 0]));
        let combo = &b.x(2, 0).scale(&ratio(1, 2)) + &b.x(2, 1).scale(&ratio(1, 2));
        assert_eq!(&combo, b.x(1, 0));
    }

    #[test]
    fn dyadic_bushes_validate_exactly() {
        for n in 1..=12 {
            let b = dyadic_bush(n).unwrap();
            let r = validate_bush(&b, 0.0);
            assert!(r.is_normalized(), "N={n}: {:?}", r.failures);
            assert_eq!(r.lambda_max, ratio(1, 2));
            assert_eq!(r.epsilon, q(1));
            assert_eq!(r.max_norm, Real::Exact(q(1)));
        }
        assert!(matches!(dyadic_bush(13), Err(Error::Depth { .. })));
        assert!(dyadic_bush(0).is_err());
    }

    #[test]
    fn perturbed_weight_breaks_convexity() {
        let mut parts = dyadic_bush(2).unwrap().into_parts();
        parts.weights[2][0] = ratio(3, 5);
        parts.weights[2][1] = ratio(2, 5);
        let r = validate_bush(&Bush::new(parts).unwrap(), 0.0);
        assert!(!r.convexity);
        assert!(r.weight_sums);
        assert!(!r.is_bush());
    }

    #[test]
    fn singleton_block_fails() {
        // x(1,0) = x(0,0) with a single-element block
        let space = NormedSpace::weighted_l1(vec![ratio(1, 2), ratio(1, 2)]).unwrap();
        let parts = BushParts {
            space,
            epsilon: q(1),
            levels: vec![vec![vecq(&[1, 1])], vec![vecq(&[1, 1])]],
            partitions: vec![vec![vec![0]]],
            weights: vec![vec![q(1)], vec![q(1)]],
            functional: Functional(vec![ratio(1, 2), ratio(1, 2)]),
        };
        let r = validate_bush(&Bush::new(parts).unwrap(), 0.0);
        assert!(!r.blocks_nontrivial);
        assert!(!r.separation);
        assert!(r.convexity);
        assert!(!r.is_bush());
    }

    #[test]
    fn malformed_partitions_are_structural_errors() {
        let mut parts = dyadic_bush(2).unwrap().into_parts();
        parts.partitions[1] = vec![vec![0, 1], vec![1, 2]];
        match Bush::new(parts) {
            Err(Error::Structural(msg)) => {
                assert!(msg.contains("overlapping [1]"), "{msg}");
                assert!(msg.contains("missing [3]"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    fn three_quarter_bush(eps: Rational) -> Bush {
        // weights (3/4, 1/4), root (1, 1), children (4/3, 0) and (0, 4)
        let space = NormedSpace::weighted_l1(vec![ratio(3, 4), ratio(1, 4)]).unwrap();
        Bush::new(BushParts {
            space,
            epsilon: eps,
            levels: vec![
                vec![vecq(&[1, 1])],
                vec![Vector::from_dense(vec![ratio(4, 3), q(0)]), vecq(&[0, 4])],
            ],
            partitions: vec![vec![vec![0, 1]]],
            weights: vec![vec![q(1)], vec![ratio(3, 4), ratio(1, 4)]],
            functional: Functional(vec![ratio(3, 4), ratio(1, 4)]),
        })
        .unwrap()
    }

    #[test]
    fn lambda_max_examples() {
        assert_eq!(lambda_max(&dyadic_bush(3).unwrap()), ratio(1, 2));
        let ok = three_quarter_bush(ratio(1, 2));
        assert_eq!(lambda_max(&ok), ratio(3, 4));
        let r = validate_bush(&ok, 0.0);
        assert!(r.lambda_bound);
        assert!(r.is_normalized(), "{:?}", r.failures);
        let too_big = three_quarter_bush(ratio(3, 5));
        let r = validate_bush(&too_big, 0.0);
        assert!(!r.lambda_bound);
        assert!(!r.separation);
    }

    #[test]
    fn thirds_lambda_max() {
        let space = NormedSpace::weighted_l1(vec![ratio(1, 3); 3]).unwrap();
        let b = Bush::new(BushParts {
            space,
            epsilon: ratio(1, 2),
            levels: vec![vec![vecq(&[1, 1, 1])], vec![vecq(&[3, 0, 0]), vecq(&[0, 3, 0]), vecq(&[0, 0, 3])]],
            partitions: vec![vec![vec![0, 1, 2]]],
            weights: vec![vec![q(1)], vec![ratio(1, 3); 3]],
            functional: Functional(vec![ratio(1, 3); 3]),
        })
        .unwrap();
        assert_eq!(lambda_max(&b), ratio(1, 3));
        assert!(validate_bush(&b, 0.0).is_normalized());
    }

    #[test]
    fn shift_examples() {
        let b = dyadic_bush(1).unwrap();
        assert_eq!(shift_bush(&b, &Vector::zeros(2)).unwrap(), b);
        let s = shift_bush(&b, &vecq(&[1, 1])).unwrap();
        assert_eq!(s.root(), &vecq(&[2, 2]));
        let r = validate_bush(&s, 0.0);
        assert!(r.is_bush());
        assert_eq!(r.min_separation, Some(Real::Exact(q(1))));
        assert!(!r.unit_norms);
        let back = shift_bush(&s, &vecq(&[-1, -1])).unwrap();
        assert_eq!(back, b);
        assert!(shift_bush(&b, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn midpoint_examples() {
        let b = dyadic_bush(1).unwrap();
        let y = midpoint_y(&b, 1, 0, 0).unwrap();
        assert_eq!(y.value, Vector::from_dense(vec![ratio(3, 2), ratio(1, 2)]));
        assert_eq!(y.norm, Real::Exact(q(1)));
        assert_eq!(y.distance_to_parent, Real::Exact(ratio(1, 2)));
        assert_eq!(y.distance_to_child, y.distance_to_parent);

        let b2 = dyadic_bush(2).unwrap();
        let y = midpoint_y(&b2, 2, 0, 1).unwrap();
        assert_eq!(y.value, vecq(&[1, 3, 0, 0]));
        assert_eq!(y.norm, Real::Exact(q(1)));

        assert!(matches!(midpoint_y(&b2, 2, 0, 2), Err(Error::Index(_))));
        assert!(matches!(midpoint_y(&b2, 0, 0, 0), Err(Error::Index(_))));
    }

    #[test]
    fn random_bushes_are_normalized() {
        for seed in 0..40 {
            for depth in 1..=3 {
                let b = random_bush(seed, depth).unwrap();
                let r = validate_bush(&b, 0.0);
                assert!(r.is_normalized(), "seed {seed} depth {depth}: {:?}", r.failures);
                assert_eq!(b.space().kind(), NormKind::WeightedL1);
            }
        }
    }

    #[test]
    fn midpoints_are_equidistant_and_far() {
        for seed in 0..10 {
            let b = random_bush(seed, 3).unwrap();
            let half_eps = b.epsilon() / int(2);
            for n in 1..=b.depth() {
                for j in 0..b.level_size(n) {
                    let y = midpoint_y(&b, n, b.parent(n, j), j).unwrap();
                    assert_eq!(y.distance_to_parent, y.distance_to_child);
                    assert!(y.distance_to_parent.at_least(&half_eps, 0.0));
                    assert_eq!(y.norm, Real::Exact(q(1)));
                }
            }
        }
    }
}
