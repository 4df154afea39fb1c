//! Branch limits, pasted geodesics and the thickness game.
//!
//! A branch of the binary tree is stored as a finite prefix; bits beyond
//! the prefix are 0. Its limit geodesic passes through every vertex of every
//! line along the branch, so at a vertex arclength the depth-`D` line already
//! gives the exact limit value, and elsewhere it is within `λ_max^D`.
//!
//! A pasted geodesic is evaluated with all pieces at one common depth (the
//! deepest piece), which keeps it an exact geodesic: each piece is a broken
//! line and neighbouring pieces meet at a shared vertex.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::Rng;

use crate::construction::{GapDeviation, Label, LineTree};
use crate::error::{Error, Result};
use crate::rational::{int, to_f64, Rational, Real};
use crate::space::Vector;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BranchSpec {
    pub bits: Label,
    pub depth: usize,
}

impl BranchSpec {
    pub fn new(bits: Label, depth: usize) -> Result<Self> {
        if depth < bits.len() {
            return Err(Error::Input(format!(
                "evaluation depth {depth} is shorter than the prefix {bits}"
            )));
        }
        Ok(BranchSpec { bits, depth })
    }

    /// The branch label truncated or zero-extended to `depth` bits.
    pub fn label_at(&self, depth: usize) -> Label {
        self.bits.resized(depth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchValue {
    pub point: Vector,
    /// Uniform distance bound to the limit geodesic, `λ_max^D`.
    pub error_bound: Rational,
    /// `s` is a vertex of the depth-`D` line, where the value is the limit
    /// value itself.
    pub at_vertex: bool,
}

pub fn branch_eval(tree: &LineTree, spec: &BranchSpec, s: &Rational) -> Result<BranchValue> {
    let line = tree.line(&spec.label_at(spec.depth))?;
    let point = tree.eval(&line, s)?;
    Ok(BranchValue {
        point,
        error_bound: tree.lambda_max().pow(spec.depth as i32),
        at_vertex: line.vertex_index(s).is_some(),
    })
}

/// Anything the witness validator can evaluate: a curve sampled at
/// arclength `s` with its lines built at `depth`.
pub trait Curve: Sync {
    /// Smallest depth at which the curve is defined.
    fn depth(&self) -> usize;
    fn point(&self, tree: &LineTree, s: &Rational, depth: usize) -> Result<Vector>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PastedGeodesic {
    breakpoints: Vec<Rational>,
    pieces: Vec<BranchSpec>,
}

impl PastedGeodesic {
    /// A single branch over the whole of `[0, 1]`.
    pub fn branch(tree: &LineTree, spec: BranchSpec) -> Result<Self> {
        paste(tree, vec![Rational::zero(), Rational::one()], vec![spec])
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[BranchSpec] {
        &self.pieces
    }

    /// `(start, end, spec)` for every piece.
    pub fn intervals(&self) -> impl Iterator<Item = (&Rational, &Rational, &BranchSpec)> {
        self.breakpoints
            .windows(2)
            .zip(&self.pieces)
            .map(|(w, p)| (&w[0], &w[1], p))
    }

    /// Index of the piece whose closed interval contains `s`, preferring the
    /// left one at a breakpoint.
    pub fn piece_index(&self, s: &Rational) -> usize {
        let i = self.breakpoints[1..].partition_point(|h| h < s);
        i.min(self.pieces.len() - 1)
    }

    pub fn eval(&self, tree: &LineTree, s: &Rational) -> Result<Vector> {
        self.point(tree, s, self.depth())
    }
}

impl Curve for PastedGeodesic {
    fn depth(&self) -> usize {
        self.pieces.iter().map(|p| p.depth).max().unwrap_or(0)
    }

    fn point(&self, tree: &LineTree, s: &Rational, depth: usize) -> Result<Vector> {
        if *s < Rational::zero() || *s > Rational::one() {
            return Err(Error::Input(format!("arclength {s} outside [0, 1]")));
        }
        let spec = &self.pieces[self.piece_index(s)];
        if depth < spec.bits.len() {
            return Err(Error::Input(format!(
                "depth {depth} is shorter than the prefix {}",
                spec.bits
            )));
        }
        let line = tree.line(&spec.label_at(depth))?;
        tree.eval(&line, s)
    }
}

/// Assembles a pasted geodesic, checking that every interior breakpoint is
/// a vertex of both neighbouring lines at the common depth, with equal
/// points there.
pub fn paste(
    tree: &LineTree,
    breakpoints: Vec<Rational>,
    pieces: Vec<BranchSpec>,
) -> Result<PastedGeodesic> {
    if breakpoints.len() < 2 || pieces.len() + 1 != breakpoints.len() {
        return Err(Error::Input(format!(
            "{} breakpoints need {} pieces, got {}",
            breakpoints.len(),
            breakpoints.len().saturating_sub(1),
            pieces.len()
        )));
    }
    if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
        return Err(Error::Input("breakpoints must start at 0 and end at 1".into()));
    }
    if let Some(w) = breakpoints.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Input(format!(
            "breakpoints must increase strictly ({} then {})",
            w[0], w[1]
        )));
    }
    for p in &pieces {
        if p.depth < p.bits.len() {
            return Err(Error::Input(format!(
                "piece {} has depth {} below its prefix length",
                p.bits, p.depth
            )));
        }
    }
    let g = PastedGeodesic {
        breakpoints,
        pieces,
    };
    let depth = g.depth();
    for (d, h) in g.breakpoints.iter().enumerate().skip(1).take(g.pieces.len() - 1) {
        let left = tree.line(&g.pieces[d - 1].label_at(depth))?;
        let right = tree.line(&g.pieces[d].label_at(depth))?;
        let fail = |reason: String| Error::Pasting {
            breakpoint: h.to_string(),
            reason,
        };
        let (Some(i), Some(j)) = (left.vertex_index(h), right.vertex_index(h)) else {
            return Err(fail(format!(
                "not a vertex of both lines {} and {} at depth {depth}",
                left.label(),
                right.label()
            )));
        };
        if tree.vertex(&left, i)? != tree.vertex(&right, j)? {
            return Err(fail(format!(
                "lines {} and {} pass through different points",
                left.label(),
                right.label()
            )));
        }
    }
    Ok(g)
}

fn merge_pieces(breakpoints: Vec<Rational>, pieces: Vec<BranchSpec>) -> (Vec<Rational>, Vec<BranchSpec>) {
    let mut bp = vec![breakpoints[0].clone()];
    let mut out: Vec<BranchSpec> = Vec::new();
    for (h, p) in breakpoints.into_iter().skip(1).zip(pieces) {
        if out.last() == Some(&p) {
            *bp.last_mut().unwrap() = h;
        } else {
            out.push(p);
            bp.push(h);
        }
    }
    (bp, out)
}

/// Definition of thickness for one pair `(g, g̃)`: `g = g̃` on `q`, and the
/// deviations at the interleaved points `s` add up to `deviation_total`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessWitness {
    pub q: Vec<Rational>,
    pub s: Vec<Rational>,
    pub deviation_total: Real,
    pub gaps: Vec<GapDeviation>,
}

/// How one piece of `g` was answered.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceResponse {
    pub start: Rational,
    pub end: Rational,
    pub branch: Label,
    /// Depth of the lines whose gaps cover the challenge points.
    pub level: usize,
    pub covering: Vec<(Rational, Rational)>,
    pub covered_length: Rational,
    /// Branch followed by `g̃` off the covering.
    pub switched: Label,
    pub deviation: Real,
    /// `ε/4 · (end - start)`
    pub guaranteed: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeResponse {
    pub g_tilde: PastedGeodesic,
    pub witness: ThicknessWitness,
    pub pieces: Vec<PieceResponse>,
}

fn check_unit(t: &[Rational]) -> Result<()> {
    match t.iter().find(|x| **x < Rational::zero() || **x > Rational::one()) {
        Some(x) => Err(Error::Input(format!("challenge point {x} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Merges closed intervals sorted by start.
fn merge_intervals(mut iv: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    iv.sort();
    let mut out: Vec<(Rational, Rational)> = Vec::new();
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

/// Answers the challenge `(g, t)` with a second geodesic that agrees with
/// `g` at every `t` and deviates from it by at least `ε/4` in total.
///
/// Per piece `[a, b]` of `g` the smallest level `L` is chosen such that `a`
/// and `b` are vertices of the depth-`L` line and the depth-`L` gaps holding
/// the challenge points have total length at most `(b - a)/2`. Off those
/// gaps `g̃` turns into the sibling branch at bit `L + 1`.
pub fn challenge_respond(
    tree: &LineTree,
    g: &PastedGeodesic,
    t: &[Rational],
) -> Result<ChallengeResponse> {
    check_unit(t)?;
    let half = Rational::new(1.into(), 2.into());
    let quarter_eps = tree.bush().epsilon() / int(4);
    let max_level = tree.max_depth();
    let mut new_bp = vec![Rational::zero()];
    let mut new_pieces = Vec::new();
    let mut responses = Vec::new();
    let mut gaps = Vec::new();
    let mut mids: BTreeMap<Rational, Rational> = BTreeMap::new();
    let mut total = Real::zero();

    for (a, b, spec) in g.intervals() {
        let inside: Vec<&Rational> = t.iter().filter(|x| *x >= a && *x <= b).collect();
        let allowed = (b - a) * &half;
        let mut chosen = None;
        for level in 0..max_level {
            let line = tree.line(&spec.label_at(level))?;
            if line.vertex_index(a).is_none() || line.vertex_index(b).is_none() {
                continue;
            }
            let arcs = line.arclengths();
            let cover = merge_intervals(
                inside
                    .iter()
                    .map(|x| match line.vertex_index(x) {
                        Some(_) => ((*x).clone(), (*x).clone()),
                        None => {
                            let i = line.segment_index(x);
                            (arcs[i].clone(), arcs[i + 1].clone())
                        }
                    })
                    .collect(),
            );
            let covered: Rational = cover.iter().map(|(c, d)| d - c).sum();
            if covered <= allowed {
                chosen = Some((level, cover, covered));
                break;
            }
        }
        let Some((level, cover, covered)) = chosen else {
            let n = inside.len().max(1) as f64;
            let lam = to_f64(tree.lambda_max());
            let need = ((2.0 * n / to_f64(&(b - a))).ln() / (1.0 / lam).ln()).ceil().max(0.0);
            return Err(Error::Budget(format!(
                "piece [{a}, {b}] with {} challenge points needs level about {need} \
                 (plus one for the switch) but only depth {max_level} is available",
                inside.len()
            )));
        };

        let prefix = spec.label_at(level);
        let next_bit = spec.label_at(level + 1).bits()[level];
        let switched = prefix.child(1 - next_bit);
        let switched_spec = BranchSpec {
            bits: switched.clone(),
            depth: level + 1,
        };
        // complement of the covering inside [a, b]
        let mut cursor = a.clone();
        let mut complement = Vec::new();
        for (c, d) in &cover {
            if *c > cursor {
                complement.push((cursor.clone(), c.clone()));
            }
            if *d > cursor {
                cursor = d.clone();
            }
        }
        if *b > cursor {
            complement.push((cursor, b.clone()));
        }
        // pieces of g̃ in order
        let mut marks: Vec<(Rational, Rational, bool)> = complement
            .iter()
            .map(|(c, d)| (c.clone(), d.clone(), true))
            .chain(
                cover
                    .iter()
                    .filter(|(c, d)| c < d)
                    .map(|(c, d)| (c.clone(), d.clone(), false)),
            )
            .collect();
        marks.sort();
        for (_, d, switch) in &marks {
            new_pieces.push(if *switch {
                switched_spec.clone()
            } else {
                spec.clone()
            });
            new_bp.push(d.clone());
        }

        let overline = tree.intermediate(&prefix)?;
        let mut selection = Vec::new();
        for (c, d) in &complement {
            let (Some(i), Some(j)) = (overline.vertex_index(c), overline.vertex_index(d)) else {
                return Err(Error::Numerical(format!(
                    "covering endpoint {c} or {d} is not a vertex of the refinement"
                )));
            };
            selection.extend(i..j);
        }
        let dev = tree.sibling_deviation(&prefix, Some(&selection))?;
        for gap in &dev.gaps {
            mids.insert(gap.start.clone(), gap.midpoint.clone());
        }
        total = total.add(&dev.total);
        responses.push(PieceResponse {
            start: a.clone(),
            end: b.clone(),
            branch: spec.bits.clone(),
            level,
            covering: cover,
            covered_length: covered,
            switched,
            deviation: dev.total.clone(),
            guaranteed: &quarter_eps * (b - a),
        });
        gaps.extend(dev.gaps);
    }

    let (bp, pieces) = merge_pieces(new_bp, new_pieces);
    let g_tilde = paste(tree, bp, pieces)?;

    let mut q: BTreeSet<Rational> = t.iter().cloned().collect();
    q.extend(g.breakpoints().iter().cloned());
    q.extend(g_tilde.breakpoints().iter().cloned());
    for gap in &gaps {
        q.insert(gap.start.clone());
        q.insert(&gap.start + &gap.length);
    }
    let q: Vec<Rational> = q.into_iter().collect();
    let mut s = Vec::with_capacity(q.len() + 1);
    s.push(Rational::zero());
    for w in q.windows(2) {
        s.push(match mids.get(&w[0]) {
            Some(m) if *m < w[1] => m.clone(),
            _ => w[0].clone(),
        });
    }
    s.push(Rational::one());

    Ok(ChallengeResponse {
        g_tilde,
        witness: ThicknessWitness {
            q,
            s,
            deviation_total: total,
            gaps,
        },
        pieces: responses,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub containment: bool,
    pub interleaving: bool,
    pub common_points: bool,
    pub deviation: bool,
    pub challenge_images: bool,
    /// The claimed total does not exceed the recomputed one.
    pub honest_total: bool,
    pub achieved: Real,
    pub alpha: Rational,
    pub depth: usize,
    pub failures: Vec<String>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.containment
            && self.interleaving
            && self.common_points
            && self.deviation
            && self.challenge_images
            && self.honest_total
    }
}

/// Checks a thickness witness for `(g, g̃)` against the challenge points
/// `t` and the constant `alpha`. Both curves are evaluated at their common
/// depth; norm comparisons use `tol`.
pub fn validate_witness(
    tree: &LineTree,
    g: &dyn Curve,
    g_tilde: &dyn Curve,
    t: &[Rational],
    w: &ThicknessWitness,
    alpha: &Rational,
    tol: f64,
) -> WitnessReport {
    let depth = g.depth().max(g_tilde.depth());
    let space = tree.bush().space();
    let mut failures = Vec::new();
    let zero = Rational::zero();
    let one = Rational::one();

    let q_set: BTreeSet<&Rational> = w.q.iter().collect();
    let missing: Vec<String> = t
        .iter()
        .filter(|x| !q_set.contains(x))
        .map(|x| x.to_string())
        .collect();
    let containment = missing.is_empty();
    if !containment {
        failures.push(format!("q misses challenge points {}", missing.join(", ")));
    }

    let mut interleaving = w.s.len() == w.q.len() + 1;
    if !interleaving {
        failures.push(format!(
            "{} s-points for {} q-points",
            w.s.len(),
            w.q.len()
        ));
    } else {
        let mut chain = Vec::with_capacity(2 * w.q.len() + 3);
        chain.push(&zero);
        for (si, qi) in w.s.iter().zip(&w.q) {
            chain.push(si);
            chain.push(qi);
        }
        chain.push(&w.s[w.q.len()]);
        chain.push(&one);
        if let Some(k) = chain.windows(2).position(|p| p[0] > p[1]) {
            interleaving = false;
            failures.push(format!(
                "interleaving breaks between {} and {}",
                chain[k],
                chain[k + 1]
            ));
        }
    }

    let distance = |s: &Rational| -> Result<Real> {
        let a = g.point(tree, s, depth)?;
        let b = g_tilde.point(tree, s, depth)?;
        space.distance(&a, &b)
    };

    let agree = |points: &[Rational], what: &str, failures: &mut Vec<String>| -> bool {
        let mut ok = true;
        for p in points {
            match distance(p) {
                Ok(d) if d.at_most(&zero, tol) => {}
                Ok(d) => {
                    ok = false;
                    failures.push(format!("{what}: curves differ by {d} at {p}"));
                }
                Err(e) => {
                    ok = false;
                    failures.push(format!("{what}: cannot evaluate at {p}: {e}"));
                }
            }
        }
        ok
    };
    let common_points = agree(&w.q, "common point", &mut failures);
    let challenge_images = agree(t, "challenge point", &mut failures);

    let mut achieved = Real::zero();
    let mut evaluated = true;
    for s in &w.s {
        match distance(s) {
            Ok(d) => achieved = achieved.add(&d),
            Err(e) => {
                evaluated = false;
                failures.push(format!("cannot evaluate deviation at {s}: {e}"));
            }
        }
    }
    let deviation = evaluated && achieved.at_least(alpha, tol);
    if evaluated && !deviation {
        failures.push(format!("deviation {achieved} below {alpha}"));
    }
    let honest_total = match &w.deviation_total {
        Real::Exact(claim) => achieved.at_least(claim, tol),
        Real::Approx(claim) => achieved.to_f64() >= claim - tol,
    };
    if !honest_total {
        failures.push(format!(
            "claimed deviation {} exceeds recomputed {achieved}",
            w.deviation_total
        ));
    }

    WitnessReport {
        containment,
        interleaving,
        common_points,
        deviation,
        challenge_images,
        honest_total,
        achieved,
        alpha: alpha.clone(),
        depth,
        failures,
    }
}

/// Every valid pasting of depth-`depth` branches over the cells cut by the
/// vertex arclengths of the depth-`(depth - 1)` zero branch, with identical
/// neighbours merged.
pub fn truncated_family(tree: &LineTree, depth: usize) -> Result<Vec<PastedGeodesic>> {
    if depth == 0 {
        let root = BranchSpec::new(Label::root(), 0)?;
        return Ok(vec![PastedGeodesic::branch(tree, root)?]);
    }
    let cells = tree.line(&Label::root().resized(depth - 1))?.arclengths().to_vec();
    let labels = Label::all_of_length(depth);
    let combos = (labels.len() as f64).powi(cells.len() as i32 - 1);
    if combos > 1e6 {
        return Err(Error::Budget(format!(
            "{} cells with {} labels each is too many pastings",
            cells.len() - 1,
            labels.len()
        )));
    }
    let lines = labels
        .iter()
        .map(|l| tree.line(l))
        .collect::<Result<Vec<_>>>()?;
    // compatible[a][b][h]: lines a and b meet at interior cell boundary h
    let mut compatible = vec![vec![vec![false; cells.len()]; labels.len()]; labels.len()];
    for (a, la) in lines.iter().enumerate() {
        for (b, lb) in lines.iter().enumerate() {
            for (h, x) in cells.iter().enumerate() {
                compatible[a][b][h] = match (la.vertex_index(x), lb.vertex_index(x)) {
                    (Some(i), Some(j)) => tree.vertex(la, i)? == tree.vertex(lb, j)?,
                    _ => false,
                };
            }
        }
    }
    let n_cells = cells.len() - 1;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack: Vec<Vec<usize>> = (0..labels.len()).map(|a| vec![a]).collect();
    stack.reverse();
    while let Some(seq) = stack.pop() {
        if seq.len() == n_cells {
            let pieces: Vec<BranchSpec> = seq
                .iter()
                .map(|&a| BranchSpec {
                    bits: labels[a].clone(),
                    depth,
                })
                .collect();
            let (bp, pieces) = merge_pieces(cells.clone(), pieces);
            let key: Vec<(Rational, Label)> =
                bp.iter().cloned().zip(pieces.iter().map(|p| p.bits.clone())).collect();
            if seen.insert(key) {
                out.push(paste(tree, bp, pieces)?);
            }
            continue;
        }
        let last = *seq.last().unwrap_or(&0);
        for next in (0..labels.len()).rev() {
            if compatible[last][next][seq.len()] {
                let mut s = seq.clone();
                s.push(next);
                stack.push(s);
            }
        }
    }
    Ok(out)
}

/// A random pasting of up to `max_pieces` branches with prefixes of at most
/// `max_prefix` bits. Each new branch keeps a prefix of the previous one
/// and starts at a vertex of that shared prefix line.
pub fn random_pasted_geodesic<R: Rng>(
    tree: &LineTree,
    rng: &mut R,
    max_pieces: usize,
    max_prefix: usize,
) -> Result<PastedGeodesic> {
    let max_prefix = max_prefix.min(tree.max_depth());
    let random_bits = |rng: &mut R, base: Label, len: usize| -> Label {
        let mut l = base;
        while l.len() < len {
            l = l.child(rng.gen_range(0..=1));
        }
        l
    };
    let spec_for = |rng: &mut R, bits: Label| -> BranchSpec {
        let depth = rng.gen_range(bits.len()..=max_prefix.max(bits.len()));
        BranchSpec { bits, depth }
    };
    let first_len = rng.gen_range(0..=max_prefix);
    let first = random_bits(rng, Label::root(), first_len);
    let mut pieces = vec![spec_for(rng, first)];
    let mut breakpoints = vec![Rational::zero()];
    let target = rng.gen_range(1..=max_pieces.max(1));
    let mut attempts = 0;
    while pieces.len() < target && attempts < 32 {
        attempts += 1;
        let prev = pieces.last().map(|p| p.bits.clone()).unwrap_or_default();
        let k = rng.gen_range(1..=max_prefix.max(1));
        if k > max_prefix {
            break;
        }
        let shared = prev.resized(k);
        let line = tree.line(&shared)?;
        let last = breakpoints.last().cloned().unwrap_or_else(Rational::zero);
        let options: Vec<&Rational> = line
            .arclengths()
            .iter()
            .filter(|h| **h > last && !h.is_one())
            .collect();
        if options.is_empty() {
            continue;
        }
        let h = options[rng.gen_range(0..options.len())].clone();
        let len = rng.gen_range(k..=max_prefix);
        let bits = random_bits(rng, shared, len);
        breakpoints.push(h);
        pieces.push(spec_for(rng, bits));
    }
    breakpoints.push(Rational::one());
    let (bp, pieces) = merge_pieces(breakpoints, pieces);
    paste(tree, bp, pieces)
}
