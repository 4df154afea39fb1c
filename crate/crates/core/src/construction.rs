//! Broken-line geodesics labelled by vertices of the infinite binary tree.
//!
//! A line is an ordered list of terms `c · g` whose vector sum is `x(0,0)`
//! and whose coefficients sum to 1. Since every generator `g` has norm 1
//! and `x*(g) = 1`, each line is a geodesic from `0` to `x(0,0)`
//! parameterized by arclength.
//!
//! Children are built in two passes. The intermediate pass replaces every
//! term `c · x(ℓ,k)` by `c λ(ℓ+1,j) · y(ℓ+1,j)` for `j` in the block of `k`;
//! the split pass replaces every `c · y(ℓ+1,j)` by the pair
//! `c/2 · x(ℓ,k), c/2 · x(ℓ+1,j)` (bit 0) or the reversed pair (bit 1).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};

use crate::bush::{lambda_max, Bush, DEFAULT_DEPTH_BUDGET};
use crate::error::{Error, Result};
use crate::rational::{int, ratio, Rational, Real};
use crate::space::Vector;

/// A finite 0/1 string; the empty label is the root of the tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Vec<u8>);

impl Label {
    pub fn root() -> Self {
        Label(Vec::new())
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Input(format!("label bits must be 0 or 1, got {b}")));
        }
        Ok(Label(bits.to_vec()))
    }

    /// Accepts strings of `0`/`1`; `""`, `"∅"` and `"-"` denote the root.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() || t == "∅" || t == "-" {
            return Ok(Label::root());
        }
        t.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Input(format!("invalid label character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Label)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, bit: u8) -> Label {
        let mut bits = self.0.clone();
        bits.push(bit);
        Label(bits)
    }

    pub fn parent(&self) -> Option<(Label, u8)> {
        let (last, rest) = self.0.split_last()?;
        Some((Label(rest.to_vec()), *last))
    }

    pub fn prefix(&self, n: usize) -> Label {
        Label(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Truncates or pads with zeros to exactly `n` bits.
    pub fn resized(&self, n: usize) -> Label {
        let mut bits = self.0.clone();
        bits.resize(n, 0);
        Label(bits)
    }

    pub fn is_prefix_of(&self, other: &Label) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Every label of length `n`, in lexicographic order.
    pub fn all_of_length(n: usize) -> Vec<Label> {
        (0..1usize << n)
            .map(|k| Label((0..n).map(|i| ((k >> (n - 1 - i)) & 1) as u8).collect()))
            .collect()
    }

    /// The canonical string: bits, or `∅` for the root.
    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|b| if *b == 0 { '0' } else { '1' }).collect()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "∅")
        } else {
            write!(f, "{}", self.to_bit_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `x(level, index)`
    Bush { level: usize, index: usize },
    /// `y(level, child) = ½(x(level - 1, parent) + x(level, child))`
    Midpoint {
        level: usize,
        parent: usize,
        child: usize,
    },
}

impl Generator {
    pub fn vector<'a>(&self, b: &'a Bush) -> &'a Vector {
        match *self {
            Generator::Bush { level, index } => b.x(level, index),
            Generator::Midpoint { level, child, .. } => b.midpoint(level, child),
        }
    }

    pub fn level(&self) -> usize {
        match *self {
            Generator::Bush { level, .. } | Generator::Midpoint { level, .. } => level,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Bush { level, index } => write!(f, "x({level},{index})"),
            Generator::Midpoint { level, child, .. } => write!(f, "y({level},{child})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coefficient: Rational,
    pub generator: Generator,
}

impl Term {
    pub fn vector(&self, b: &Bush) -> Vector {
        self.generator.vector(b).scale(&self.coefficient)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrokenLine {
    label: Label,
    intermediate: bool,
    terms: Vec<Term>,
    arclengths: Vec<Rational>,
    /// `block_start[r]..block_start[r + 1]` are the terms produced from term
    /// `r` of the line this one was derived from. Empty for the root.
    block_start: Vec<usize>,
}

impl BrokenLine {
    fn new(label: Label, intermediate: bool, terms: Vec<Term>, block_start: Vec<usize>) -> Self {
        let mut arclengths = Vec::with_capacity(terms.len() + 1);
        let mut acc = Rational::zero();
        arclengths.push(acc.clone());
        for t in &terms {
            acc += &t.coefficient;
            arclengths.push(acc.clone());
        }
        BrokenLine {
            label,
            intermediate,
            terms,
            arclengths,
            block_start,
        }
    }

    pub fn label(&self) -> &Label {
        &self.label
    }

    pub fn is_intermediate(&self) -> bool {
        self.intermediate
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Cumulative coefficients: the arclength of every vertex, from 0 to 1.
    pub fn arclengths(&self) -> &[Rational] {
        &self.arclengths
    }

    pub fn vertex_count(&self) -> usize {
        self.arclengths.len()
    }

    pub fn total_length(&self) -> &Rational {
        self.arclengths.last().unwrap_or(&self.arclengths[0])
    }

    /// Index of the vertex at arclength `s`, if there is one.
    pub fn vertex_index(&self, s: &Rational) -> Option<usize> {
        self.arclengths.binary_search(s).ok()
    }

    /// Index `i` of the segment `[arc(i), arc(i+1)]` containing `s`; vertices
    /// belong to the segment they start (the last vertex to the last
    /// segment).
    pub fn segment_index(&self, s: &Rational) -> usize {
        let last = self.terms.len().saturating_sub(1);
        match self.arclengths.binary_search(s) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    pub fn max_gap(&self) -> Rational {
        self.terms
            .iter()
            .map(|t| t.coefficient.clone())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Highest bush level among the generators.
    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|t| t.generator.level()).max().unwrap_or(0)
    }
}

fn check_s(s: &Rational) -> Result<()> {
    if *s < Rational::zero() || *s > Rational::one() {
        return Err(Error::Input(format!("arclength {s} outside [0, 1]")));
    }
    Ok(())
}

pub fn root_line(b: &Bush) -> Result<BrokenLine> {
    b.ensure_normalized()?;
    Ok(BrokenLine::new(
        Label::root(),
        false,
        vec![Term {
            coefficient: Rational::one(),
            generator: Generator::Bush { level: 0, index: 0 },
        }],
        Vec::new(),
    ))
}

/// The refinement `overline(label)` of a non-intermediate line.
pub fn intermediate_line(b: &Bush, line: &BrokenLine) -> Result<BrokenLine> {
    b.ensure_normalized()?;
    if line.intermediate {
        return Err(Error::Input(format!(
            "line {} is already intermediate",
            line.label
        )));
    }
    let needed = line.label.len() + 1;
    if b.depth() < needed {
        return Err(Error::Depth {
            requested: needed,
            available: b.depth(),
            reason: "bush depth for the intermediate refinement",
        });
    }
    let mut terms = Vec::new();
    let mut block_start = Vec::with_capacity(line.terms.len() + 1);
    for t in &line.terms {
        block_start.push(terms.len());
        let Generator::Bush { level, index } = t.generator else {
            return Err(Error::Input("non-intermediate line holds a midpoint term".into()));
        };
        for &j in b.block(level + 1, index) {
            let w = b.weight(level + 1, j);
            if w.is_zero() {
                continue;
            }
            terms.push(Term {
                coefficient: &t.coefficient * w,
                generator: Generator::Midpoint {
                    level: level + 1,
                    parent: index,
                    child: j,
                },
            });
        }
    }
    block_start.push(terms.len());
    Ok(BrokenLine::new(line.label.clone(), true, terms, block_start))
}

fn split_line(overline: &BrokenLine, bit: u8) -> Result<BrokenLine> {
    let half = ratio(1, 2);
    let mut terms = Vec::with_capacity(2 * overline.terms.len());
    for t in &overline.terms {
        let Generator::Midpoint { level, parent, child } = t.generator else {
            return Err(Error::Input("intermediate line holds a bush-vector term".into()));
        };
        let c = &t.coefficient * &half;
        let low = Term {
            coefficient: c.clone(),
            generator: Generator::Bush {
                level: level - 1,
                index: parent,
            },
        };
        let high = Term {
            coefficient: c,
            generator: Generator::Bush { level, index: child },
        };
        if bit == 0 {
            terms.extend([low, high]);
        } else {
            terms.extend([high, low]);
        }
    }
    let block_start = (0..=overline.terms.len()).map(|r| 2 * r).collect();
    Ok(BrokenLine::new(
        overline.label.child(bit),
        false,
        terms,
        block_start,
    ))
}

/// The line labelled `(line.label, bit)`, built through the intermediate
/// refinement of `line`.
pub fn child_line(b: &Bush, line: &BrokenLine, bit: u8) -> Result<BrokenLine> {
    if bit > 1 {
        return Err(Error::Input(format!("bit must be 0 or 1, got {bit}")));
    }
    let overline = intermediate_line(b, line)?;
    split_line(&overline, bit)
}

/// All vertices `(arclength, point)` by direct partial sums.
pub fn vertices(b: &Bush, line: &BrokenLine) -> Vec<(Rational, Vector)> {
    let mut out = Vec::with_capacity(line.terms.len() + 1);
    let mut p = Vector::zeros(b.space().dimension());
    out.push((Rational::zero(), p.clone()));
    for (t, s) in line.terms.iter().zip(line.arclengths.iter().skip(1)) {
        p.add_scaled(&t.coefficient, t.generator.vector(b));
        out.push((s.clone(), p.clone()));
    }
    out
}

/// The point at arclength `s`, by direct partial sums.
pub fn eval_at(b: &Bush, line: &BrokenLine, s: &Rational) -> Result<Vector> {
    check_s(s)?;
    let i = line.segment_index(s);
    let mut p = Vector::zeros(b.space().dimension());
    for t in &line.terms[..i] {
        p.add_scaled(&t.coefficient, t.generator.vector(b));
    }
    let t = &line.terms[i];
    p.add_scaled(&(s - &line.arclengths[i]), t.generator.vector(b));
    Ok(p)
}

/// One gap of `overline(label)` and the distance between the two new
/// vertices the sibling children put inside it.
#[derive(Debug, Clone, PartialEq)]
pub struct GapDeviation {
    pub gap: usize,
    pub start: Rational,
    pub length: Rational,
    /// Arclength of the new vertices, `start + length / 2`.
    pub midpoint: Rational,
    pub deviation: Real,
    /// `length · ε / 2`
    pub lower_bound: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiblingDeviation {
    pub label: Label,
    pub total: Real,
    pub selected_length: Rational,
    /// `ε/2 · selected_length`
    pub guaranteed: Rational,
    pub gaps: Vec<GapDeviation>,
    pub empty_selection: bool,
}

/// Memoized lines of one bush, keyed by label.
///
/// Safe to share between threads; concurrent construction of the same label
/// produces identical lines, so whichever insert lands first is kept.
#[derive(Debug)]
pub struct LineTree {
    bush: Arc<Bush>,
    budget: usize,
    lambda_max: Rational,
    cache: RwLock<HashMap<(Label, bool), Arc<BrokenLine>>>,
}

impl LineTree {
    pub fn new(bush: Arc<Bush>) -> Result<Self> {
        Self::with_budget(bush, DEFAULT_DEPTH_BUDGET)
    }

    pub fn with_budget(bush: Arc<Bush>, budget: usize) -> Result<Self> {
        bush.ensure_normalized()?;
        let lambda_max = lambda_max(&bush);
        Ok(LineTree {
            bush,
            budget,
            lambda_max,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn bush(&self) -> &Bush {
        &self.bush
    }

    pub fn bush_arc(&self) -> Arc<Bush> {
        Arc::clone(&self.bush)
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn lambda_max(&self) -> &Rational {
        &self.lambda_max
    }

    /// Longest label whose line can be built.
    pub fn max_depth(&self) -> usize {
        self.bush.depth().min(self.budget)
    }

    fn check_depth(&self, needed: usize, reason: &'static str) -> Result<()> {
        if needed > self.budget {
            return Err(Error::Depth {
                requested: needed,
                available: self.budget,
                reason: "depth budget",
            });
        }
        if needed > self.bush.depth() {
            return Err(Error::Depth {
                requested: needed,
                available: self.bush.depth(),
                reason,
            });
        }
        Ok(())
    }

    fn cached(&self, key: &(Label, bool)) -> Option<Arc<BrokenLine>> {
        self.cache
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    fn store(&self, line: BrokenLine) -> Arc<BrokenLine> {
        let key = (line.label.clone(), line.intermediate);
        let mut cache = self.cache.write().unwrap_or_else(|e| e.into_inner());
        Arc::clone(cache.entry(key).or_insert_with(|| Arc::new(line)))
    }

    pub fn line(&self, label: &Label) -> Result<Arc<BrokenLine>> {
        self.check_depth(label.len(), "bush depth for this label")?;
        if let Some(l) = self.cached(&(label.clone(), false)) {
            return Ok(l);
        }
        let line = match label.parent() {
            None => root_line(&self.bush)?,
            Some((parent, bit)) => split_line(&*self.intermediate(&parent)?, bit)?,
        };
        Ok(self.store(line))
    }

    pub fn intermediate(&self, label: &Label) -> Result<Arc<BrokenLine>> {
        self.check_depth(label.len() + 1, "bush depth for the intermediate refinement")?;
        if let Some(l) = self.cached(&(label.clone(), true)) {
            return Ok(l);
        }
        let base = self.line(label)?;
        let line = intermediate_line(&self.bush, &base)?;
        Ok(self.store(line))
    }

    /// The line this one was derived from: `overline(parent)` for a child,
    /// the plain line for an intermediate one.
    fn source(&self, line: &BrokenLine) -> Result<Option<Arc<BrokenLine>>> {
        if line.intermediate {
            return self.line(&line.label).map(Some);
        }
        match line.label.parent() {
            None => Ok(None),
            Some((parent, _)) => self.intermediate(&parent).map(Some),
        }
    }

    /// Vertex `i` of `line`, computed through the chain of ancestors: the
    /// start of each block is a vertex of the source line.
    pub fn vertex(&self, line: &BrokenLine, i: usize) -> Result<Vector> {
        if i >= line.vertex_count() {
            return Err(Error::Index(format!(
                "vertex {i} of a line with {} vertices",
                line.vertex_count()
            )));
        }
        let b = &*self.bush;
        let Some(source) = self.source(line)? else {
            return Ok(if i == 0 {
                Vector::zeros(b.space().dimension())
            } else {
                b.root().clone()
            });
        };
        // largest r with block_start[r] <= i
        let r = line.block_start.partition_point(|&start| start <= i) - 1;
        let mut p = self.vertex(&source, r)?;
        for t in &line.terms[line.block_start[r]..i] {
            p.add_scaled(&t.coefficient, t.generator.vector(b));
        }
        Ok(p)
    }

    pub fn eval(&self, line: &BrokenLine, s: &Rational) -> Result<Vector> {
        check_s(s)?;
        if let Some(i) = line.vertex_index(s) {
            return self.vertex(line, i);
        }
        let i = line.segment_index(s);
        let mut p = self.vertex(line, i)?;
        let t = &line.terms[i];
        p.add_scaled(&(s - &line.arclengths[i]), t.generator.vector(&self.bush));
        Ok(p)
    }

    pub fn vertices(&self, line: &BrokenLine) -> Vec<(Rational, Vector)> {
        vertices(&self.bush, line)
    }

    /// Deviation between the children `(label, 0)` and `(label, 1)` over the
    /// gaps of `overline(label)`; `None` selects every gap.
    pub fn sibling_deviation(
        &self,
        label: &Label,
        selection: Option<&[usize]>,
    ) -> Result<SiblingDeviation> {
        let overline = self.intermediate(label)?;
        let zero = self.line(&label.child(0))?;
        let one = self.line(&label.child(1))?;
        let gaps: Vec<usize> = match selection {
            None => (0..overline.terms.len()).collect(),
            Some(sel) => {
                let mut sel = sel.to_vec();
                sel.sort_unstable();
                sel.dedup();
                if let Some(&g) = sel.iter().find(|&&g| g >= overline.terms.len()) {
                    return Err(Error::Index(format!(
                        "gap {g} of a line with {} gaps",
                        overline.terms.len()
                    )));
                }
                sel
            }
        };
        let b = &*self.bush;
        let space = b.space();
        let half_eps = b.epsilon() / int(2);
        let mut total = Real::zero();
        let mut selected_length = Rational::zero();
        let mut details = Vec::with_capacity(gaps.len());
        for r in gaps {
            // both children share vertex `start`; their next vertices differ
            // by the first half-terms of the split pair
            let u = zero.terms[2 * r].vector(b);
            let v = one.terms[2 * r].vector(b);
            let deviation = space.norm(&(&u - &v))?;
            let length = overline.terms[r].coefficient.clone();
            let start = overline.arclengths[r].clone();
            total = total.add(&deviation);
            selected_length += &length;
            details.push(GapDeviation {
                gap: r,
                midpoint: &start + &length / int(2),
                start,
                lower_bound: &length * &half_eps,
                length,
                deviation,
            });
        }
        Ok(SiblingDeviation {
            label: label.clone(),
            total,
            guaranteed: &half_eps * &selected_length,
            empty_selection: details.is_empty(),
            selected_length,
            gaps: details,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bush::{dyadic_bush, random_bush};

    fn q(n: i64, d: i64) -> Rational {
        ratio(n, d)
    }

    fn vq(xs: &[(i64, i64)]) -> Vector {
        Vector::from_dense(xs.iter().map(|&(n, d)| q(n, d)).collect())
    }

    fn tree(n: usize) -> LineTree {
        LineTree::new(Arc::new(dyadic_bush(n).unwrap())).unwrap()
    }

    fn bush_term(c: Rational, level: usize, index: usize) -> Term {
        Term {
            coefficient: c,
            generator: Generator::Bush { level, index },
        }
    }

    #[test]
    fn labels_parse_and_print() {
        assert_eq!(Label::parse("∅").unwrap(), Label::root());
        assert_eq!(Label::parse("").unwrap(), Label::root());
        assert_eq!(Label::parse("010").unwrap().bits(), &[0, 1, 0]);
        assert!(Label::parse("012").is_err());
        assert_eq!(Label::root().to_string(), "∅");
        assert_eq!(Label::parse("10").unwrap().to_string(), "10");
        assert_eq!(Label::all_of_length(2).len(), 4);
        assert_eq!(Label::parse("1").unwrap().resized(3).bits(), &[1, 0, 0]);
    }

    #[test]
    fn root_examples() {
        let b = dyadic_bush(1).unwrap();
        let root = root_line(&b).unwrap();
        assert_eq!(root.terms(), &[bush_term(q(1, 1), 0, 0)]);
        let vs = vertices(&b, &root);
        assert_eq!(vs, vec![(q(0, 1), Vector::zeros(2)), (q(1, 1), vq(&[(1, 1), (1, 1)]))]);
        assert_eq!(eval_at(&b, &root, &q(1, 2)).unwrap(), vq(&[(1, 2), (1, 2)]));
    }

    #[test]
    fn unnormalized_bush_is_rejected() {
        let b = crate::bush::shift_bush(&dyadic_bush(1).unwrap(), &vq(&[(1, 1), (0, 1)])).unwrap();
        assert!(matches!(root_line(&b), Err(Error::NotNormalized(_))));
        assert!(LineTree::new(Arc::new(b)).is_err());
    }

    #[test]
    fn intermediate_of_root_is_first_sequence() {
        let b = dyadic_bush(1).unwrap();
        let root = root_line(&b).unwrap();
        let ov = intermediate_line(&b, &root).unwrap();
        assert!(ov.is_intermediate());
        let gens: Vec<_> = ov.terms().iter().map(|t| (t.coefficient.clone(), t.generator)).collect();
        assert_eq!(
            gens,
            vec![
                (q(1, 2), Generator::Midpoint { level: 1, parent: 0, child: 0 }),
                (q(1, 2), Generator::Midpoint { level: 1, parent: 0, child: 1 }),
            ]
        );
        assert_eq!(ov.total_length(), &q(1, 1));
        // vertex (1/2, y(1,0)/2) = (3/4, 1/4); root vertices survive
        let vs = vertices(&b, &ov);
        assert_eq!(vs[1].1, vq(&[(3, 4), (1, 4)]));
        assert_eq!(vs[0].1, Vector::zeros(2));
        assert_eq!(vs[2].1, vq(&[(1, 1), (1, 1)]));
        assert!(intermediate_line(&b, &ov).is_err());
        let one = child_line(&b, &root, 0).unwrap();
        assert!(matches!(intermediate_line(&b, &one), Err(Error::Depth { .. })));
    }

    #[test]
    fn depth_one_children() {
        let b = dyadic_bush(1).unwrap();
        let root = root_line(&b).unwrap();
        let zero = child_line(&b, &root, 0).unwrap();
        let quarter = q(1, 4);
        assert_eq!(
            zero.terms(),
            &[
                bush_term(quarter.clone(), 0, 0),
                bush_term(quarter.clone(), 1, 0),
                bush_term(quarter.clone(), 0, 0),
                bush_term(quarter.clone(), 1, 1),
            ]
        );
        let one = child_line(&b, &root, 1).unwrap();
        assert_eq!(
            one.terms(),
            &[
                bush_term(quarter.clone(), 1, 0),
                bush_term(quarter.clone(), 0, 0),
                bush_term(quarter.clone(), 1, 1),
                bush_term(quarter, 0, 0),
            ]
        );
        let vs = vertices(&b, &zero);
        let arcs: Vec<_> = vs.iter().map(|(s, _)| s.clone()).collect();
        assert_eq!(arcs, vec![q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)]);
        let pts: Vec<_> = vs.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(
            pts,
            vec![
                vq(&[(0, 1), (0, 1)]),
                vq(&[(1, 4), (1, 4)]),
                vq(&[(3, 4), (1, 4)]),
                vq(&[(1, 1), (1, 2)]),
                vq(&[(1, 1), (1, 1)]),
            ]
        );
        assert_eq!(zero.max_gap(), q(1, 4));
        assert_eq!(eval_at(&b, &zero, &q(1, 4)).unwrap(), vq(&[(1, 4), (1, 4)]));
        assert_eq!(eval_at(&b, &zero, &q(0, 1)).unwrap(), Vector::zeros(2));
        // both children pass through the intermediate vertex at 1/2
        assert_eq!(eval_at(&b, &zero, &q(1, 2)).unwrap(), vq(&[(3, 4), (1, 4)]));
        assert_eq!(eval_at(&b, &one, &q(1, 2)).unwrap(), vq(&[(3, 4), (1, 4)]));
        assert!(eval_at(&b, &zero, &q(3, 2)).is_err());
    }

    #[test]
    fn term_count_and_conservation() {
        let t = tree(4);
        let b = t.bush();
        for p in 0..=3 {
            for label in Label::all_of_length(p) {
                let line = t.line(&label).unwrap();
                assert_eq!(line.terms().len(), 4usize.pow(p as u32));
                assert_eq!(line.total_length(), &q(1, 1));
                let mut sum = Vector::zeros(b.space().dimension());
                for term in line.terms() {
                    sum.add_scaled(&term.coefficient, term.generator.vector(b));
                }
                assert_eq!(&sum, b.root());
                assert!(line.max_level() <= p);
            }
        }
    }

    #[test]
    fn tree_matches_free_functions() {
        let t = tree(3);
        let b = t.bush();
        let root = root_line(b).unwrap();
        let direct = child_line(b, &child_line(b, &root, 1).unwrap(), 0).unwrap();
        let memo = t.line(&Label::parse("10").unwrap()).unwrap();
        assert_eq!(&direct, &*memo);
        // hierarchical vertex evaluation agrees with partial sums
        for line in [memo.clone(), t.intermediate(&Label::parse("10").unwrap()).unwrap()] {
            let vs = vertices(b, &line);
            for (i, (s, p)) in vs.iter().enumerate() {
                assert_eq!(&t.vertex(&line, i).unwrap(), p);
                assert_eq!(&t.eval(&line, s).unwrap(), p);
            }
        }
        let s = q(5, 37);
        assert_eq!(t.eval(&memo, &s).unwrap(), eval_at(b, &memo, &s).unwrap());
    }

    #[test]
    fn vertex_heredity() {
        let t = tree(4);
        for p in 0..3 {
            for label in Label::all_of_length(p) {
                let parent = t.line(&label).unwrap();
                let overline = t.intermediate(&label).unwrap();
                let pv = t.vertices(&parent);
                let ov = t.vertices(&overline);
                for bit in 0..2 {
                    let child = t.line(&label.child(bit)).unwrap();
                    let cv = t.vertices(&child);
                    for v in pv.iter().chain(&ov) {
                        assert!(cv.contains(v), "{label}/{bit} misses vertex at {}", v.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sibling_deviation_examples() {
        let t = tree(1);
        let full = t.sibling_deviation(&Label::root(), None).unwrap();
        assert_eq!(full.total, Real::Exact(q(1, 2)));
        assert_eq!(full.gaps.len(), 2);
        for g in &full.gaps {
            assert_eq!(g.deviation, Real::Exact(q(1, 4)));
        }
        let first = t.sibling_deviation(&Label::root(), Some(&[0])).unwrap();
        assert_eq!(first.total, Real::Exact(q(1, 4)));
        assert_eq!(first.guaranteed, q(1, 4));
        let none = t.sibling_deviation(&Label::root(), Some(&[])).unwrap();
        assert_eq!(none.total, Real::zero());
        assert!(none.empty_selection);
        assert!(matches!(
            t.sibling_deviation(&Label::root(), Some(&[2])),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            t.sibling_deviation(&Label::parse("0").unwrap(), None),
            Err(Error::Depth { .. })
        ));
    }

    #[test]
    fn deviation_uses_actual_new_vertices() {
        // ‖u − v‖ from the term shortcut equals the distance of the actual
        // mid-gap vertices of the two children
        let t = tree(3);
        let b = t.bush();
        for label in Label::all_of_length(1) {
            let dev = t.sibling_deviation(&label, None).unwrap();
            let zero = t.line(&label.child(0)).unwrap();
            let one = t.line(&label.child(1)).unwrap();
            for g in &dev.gaps {
                let u = eval_at(b, &zero, &g.midpoint).unwrap();
                let v = eval_at(b, &one, &g.midpoint).unwrap();
                assert_eq!(b.space().distance(&u, &v).unwrap(), g.deviation);
            }
        }
    }

    #[test]
    fn random_bush_lines_are_geodesics() {
        for seed in 0..6 {
            let bush = random_bush(seed, 3).unwrap();
            let t = LineTree::new(Arc::new(bush)).unwrap();
            let b = t.bush();
            let lmax = t.lambda_max().clone();
            for label in Label::all_of_length(2) {
                let line = t.line(&label).unwrap();
                let vs = t.vertices(&line);
                for w in vs.windows(2) {
                    let d = b.space().distance(&w[1].1, &w[0].1).unwrap();
                    assert_eq!(d, Real::Exact(&w[1].0 - &w[0].0));
                }
                for (s, p) in &vs {
                    assert_eq!(&b.functional().eval(p).unwrap(), s);
                }
                assert!(line.max_gap() <= lmax.pow(2));
                let dev = t.sibling_deviation(&label, None).unwrap();
                assert!(dev.total.at_least(&(b.epsilon() / int(2)), 0.0));
                for g in &dev.gaps {
                    assert!(g.deviation.at_least(&g.lower_bound, 0.0));
                }
            }
        }
    }

    #[test]
    fn concurrent_construction_is_consistent() {
        let t = Arc::new(tree(5));
        let labels = Label::all_of_length(4);
        std::thread::scope(|scope| {
            for chunk in labels.chunks(4) {
                let t = Arc::clone(&t);
                scope.spawn(move || {
                    for l in chunk.iter().rev() {
                        t.line(l).unwrap();
                    }
                });
            }
        });
        let serial = tree(5);
        for l in &labels {
            assert_eq!(*t.line(l).unwrap(), *serial.line(l).unwrap());
        }
    }
}
