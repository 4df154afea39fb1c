//! Text formats: bush documents, vertex tables, challenges and witnesses.
//!
//! Every scalar is written as a rational string (`"3/2"`) so that reading
//! back reproduces the data bit for bit. Vertex tables may instead be
//! written in decimal for plotting.

use serde::{Deserialize, Serialize};

use crate::bush::{Bush, BushParts};
use crate::construction::{BrokenLine, GapDeviation, Label, LineTree};
use crate::error::{Error, Result};
use crate::family::{paste, BranchSpec, ChallengeResponse, PastedGeodesic, ThicknessWitness};
use crate::rational::{format_decimal, parse_rational, Rational, Real};
use crate::space::{Functional, NormKind, NormedSpace, Vector};

/// Vectors in spaces larger than this are written as sparse entry lists.
pub const DENSE_LIMIT: usize = 256;

/// Significant digits in decimal output.
pub const DECIMAL_DIGITS: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NumberFormat {
    #[default]
    Rational,
    Decimal,
}

impl NumberFormat {
    pub fn render(self, q: &Rational) -> String {
        match self {
            NumberFormat::Rational => q.to_string(),
            NumberFormat::Decimal => format_decimal(q, DECIMAL_DIGITS),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            NumberFormat::Rational => "rational",
            NumberFormat::Decimal => "decimal",
        }
    }
}

fn qs(q: &Rational) -> String {
    q.to_string()
}

fn qs_all(v: &[Rational]) -> Vec<String> {
    v.iter().map(qs).collect()
}

fn parse_all(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse_rational(s)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub dimension: usize,
    pub norm: NormKind,
    #[serde(default)]
    pub weights: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCoords {
    pub dim: usize,
    pub entries: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coords {
    Dense(Vec<String>),
    Sparse(SparseCoords),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BushFile {
    pub space: SpaceFile,
    pub epsilon: String,
    pub levels: Vec<Vec<Coords>>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    pub weights: Vec<Vec<String>>,
    pub functional: Vec<String>,
}

fn coords_of(v: &Vector) -> Coords {
    if v.dim() > DENSE_LIMIT {
        Coords::Sparse(SparseCoords {
            dim: v.dim(),
            entries: v.entries().iter().map(|(i, q)| (*i, qs(q))).collect(),
        })
    } else {
        Coords::Dense(qs_all(&v.to_dense()))
    }
}

fn vector_of(c: &Coords) -> Result<Vector> {
    match c {
        Coords::Dense(xs) => Ok(Vector::from_dense(parse_all(xs)?)),
        Coords::Sparse(s) => Vector::from_entries(
            s.dim,
            s.entries
                .iter()
                .map(|(i, q)| parse_rational(q).map(|q| (*i, q)))
                .collect::<Result<Vec<_>>>()?,
        ),
    }
}

impl BushFile {
    pub fn from_bush(b: &Bush) -> Self {
        let p = b.parts();
        let space = &p.space;
        BushFile {
            space: SpaceFile {
                dimension: space.dimension(),
                norm: space.kind(),
                weights: match space.kind() {
                    NormKind::WeightedL1 => qs_all(space.weights()),
                    _ => Vec::new(),
                },
            },
            epsilon: qs(&p.epsilon),
            levels: p
                .levels
                .iter()
                .map(|level| level.iter().map(coords_of).collect())
                .collect(),
            partitions: p.partitions.clone(),
            weights: p.weights.iter().map(|w| qs_all(w)).collect(),
            functional: qs_all(&p.functional.0),
        }
    }

    pub fn to_bush(&self) -> Result<Bush> {
        let kind = self.space.norm;
        let space = match kind {
            NormKind::WeightedL1 => NormedSpace::new(
                self.space.dimension,
                kind,
                parse_all(&self.space.weights)?,
            )?,
            NormKind::LInf => NormedSpace::linf(self.space.dimension)?,
            NormKind::L2 => NormedSpace::l2(self.space.dimension)?,
        };
        let levels = self
            .levels
            .iter()
            .map(|level| level.iter().map(vector_of).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let weights = self
            .weights
            .iter()
            .map(|w| parse_all(w))
            .collect::<Result<Vec<_>>>()?;
        Bush::new(BushParts {
            space,
            epsilon: parse_rational(&self.epsilon)?,
            levels,
            partitions: self.partitions.clone(),
            weights,
            functional: Functional(parse_all(&self.functional)?),
        })
    }
}

pub fn write_bush(b: &Bush) -> Result<String> {
    serde_json::to_string_pretty(&BushFile::from_bush(b)).map_err(|e| Error::Input(e.to_string()))
}

pub fn read_bush(text: &str) -> Result<Bush> {
    let file: BushFile =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("bad bush document: {e}")))?;
    file.to_bush()
}

/// Vertex table of a line: a `#` header with the label, a column header,
/// then one `arclength,x1,...,xd` row per vertex.
pub fn write_line_table(tree: &LineTree, line: &BrokenLine, format: NumberFormat) -> String {
    let vertices = tree.vertices(line);
    let dim = tree.bush().space().dimension();
    let mut out = String::new();
    out.push_str(&format!(
        "# label={} intermediate={} vertices={} format={}\n",
        line.label().to_bit_string(),
        line.is_intermediate(),
        vertices.len(),
        format.tag()
    ));
    out.push_str("arclength");
    for i in 1..=dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (s, p) in &vertices {
        out.push_str(&format.render(s));
        for c in p.to_dense() {
            out.push(',');
            out.push_str(&format.render(&c));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineTable {
    pub label: Label,
    pub intermediate: bool,
    pub rows: Vec<(Rational, Vector)>,
}

/// Reads a table written in rational format.
pub fn read_line_table(text: &str) -> Result<LineTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Input("empty table".into()))?;
    let meta = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Input("table must start with a # header".into()))?;
    let mut label = Label::root();
    let mut intermediate = false;
    for field in meta.split_whitespace() {
        match field.split_once('=') {
            Some(("label", v)) => label = Label::parse(v)?,
            Some(("intermediate", v)) => intermediate = v == "true",
            Some(("format", v)) if v != "rational" => {
                return Err(Error::Input(format!("cannot read back a {v} table")));
            }
            _ => {}
        }
    }
    lines.next();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut cells = l.split(',').map(parse_rational);
            let s = cells
                .next()
                .ok_or_else(|| Error::Input("empty row".into()))??;
            let coords = cells.collect::<Result<Vec<_>>>()?;
            Ok((s, Vector::from_dense(coords)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LineTable {
        label,
        intermediate,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceFile {
    pub bits: String,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicFile {
    pub breakpoints: Vec<String>,
    pub pieces: Vec<PieceFile>,
}

impl GeodesicFile {
    pub fn from_geodesic(g: &PastedGeodesic) -> Self {
        GeodesicFile {
            breakpoints: qs_all(g.breakpoints()),
            pieces: g
                .pieces()
                .iter()
                .map(|p| PieceFile {
                    bits: p.bits.to_bit_string(),
                    depth: p.depth,
                })
                .collect(),
        }
    }

    pub fn to_geodesic(&self, tree: &LineTree) -> Result<PastedGeodesic> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| BranchSpec::new(Label::parse(&p.bits)?, p.depth))
            .collect::<Result<Vec<_>>>()?;
        paste(tree, parse_all(&self.breakpoints)?, pieces)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeFile {
    pub geodesic: GeodesicFile,
    pub t: Vec<String>,
}

impl ChallengeFile {
    pub fn new(g: &PastedGeodesic, t: &[Rational]) -> Self {
        ChallengeFile {
            geodesic: GeodesicFile::from_geodesic(g),
            t: qs_all(t),
        }
    }

    pub fn points(&self) -> Result<Vec<Rational>> {
        parse_all(&self.t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapFile {
    pub gap: usize,
    pub start: String,
    pub length: String,
    pub s: String,
    pub deviation: String,
    pub lower_bound: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceResponseFile {
    pub start: String,
    pub end: String,
    pub branch: String,
    pub level: usize,
    pub covering: Vec<[String; 2]>,
    pub covered_length: String,
    pub switched: String,
    pub deviation: String,
    pub guaranteed: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseFile {
    pub geodesic: GeodesicFile,
    pub pieces: Vec<PieceResponseFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub q: Vec<String>,
    pub s: Vec<String>,
    pub deviation_total: String,
    pub gaps: Vec<GapFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseFile>,
}

impl WitnessFile {
    pub fn from_witness(w: &ThicknessWitness) -> Self {
        WitnessFile {
            q: qs_all(&w.q),
            s: qs_all(&w.s),
            deviation_total: w.deviation_total.to_string_repr(),
            gaps: w
                .gaps
                .iter()
                .map(|g| GapFile {
                    gap: g.gap,
                    start: qs(&g.start),
                    length: qs(&g.length),
                    s: qs(&g.midpoint),
                    deviation: g.deviation.to_string_repr(),
                    lower_bound: qs(&g.lower_bound),
                })
                .collect(),
            response: None,
        }
    }

    pub fn from_response(r: &ChallengeResponse) -> Self {
        let mut file = Self::from_witness(&r.witness);
        file.response = Some(ResponseFile {
            geodesic: GeodesicFile::from_geodesic(&r.g_tilde),
            pieces: r
                .pieces
                .iter()
                .map(|p| PieceResponseFile {
                    start: qs(&p.start),
                    end: qs(&p.end),
                    branch: p.branch.to_bit_string(),
                    level: p.level,
                    covering: p.covering.iter().map(|(a, b)| [qs(a), qs(b)]).collect(),
                    covered_length: qs(&p.covered_length),
                    switched: p.switched.to_bit_string(),
                    deviation: p.deviation.to_string_repr(),
                    guaranteed: qs(&p.guaranteed),
                })
                .collect(),
        });
        file
    }

    pub fn to_witness(&self) -> Result<ThicknessWitness> {
        let gaps = self
            .gaps
            .iter()
            .map(|g| {
                Ok(GapDeviation {
                    gap: g.gap,
                    start: parse_rational(&g.start)?,
                    length: parse_rational(&g.length)?,
                    midpoint: parse_rational(&g.s)?,
                    deviation: Real::parse(&g.deviation)?,
                    lower_bound: parse_rational(&g.lower_bound)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ThicknessWitness {
            q: parse_all(&self.q)?,
            s: parse_all(&self.s)?,
            deviation_total: Real::parse(&self.deviation_total)?,
            gaps,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Input(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Input(format!("bad {what} document: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bush::{dyadic_bush, random_bush};
    use crate::family::challenge_respond;
    use crate::rational::ratio;
    use std::sync::Arc;

    #[test]
    fn bush_round_trip_is_exact() {
        for b in [dyadic_bush(2).unwrap(), random_bush(3, 3).unwrap(), dyadic_bush(9).unwrap()] {
            let text = write_bush(&b).unwrap();
            let back = read_bush(&text).unwrap();
            assert_eq!(back, b);
            assert_eq!(write_bush(&back).unwrap(), text);
        }
    }

    #[test]
    fn bush_document_shape() {
        let text = write_bush(&dyadic_bush(1).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["space"]["norm"], "wl1");
        assert_eq!(v["space"]["weights"][0], "1/2");
        assert_eq!(v["levels"][1][0][0], "2");
        assert_eq!(v["partitions"][0][0][1], 1);
        assert!(read_bush("{").is_err());
    }

    #[test]
    fn line_table_round_trip() {
        let tree = LineTree::new(Arc::new(dyadic_bush(3).unwrap())).unwrap();
        let line = tree.line(&Label::parse("01").unwrap()).unwrap();
        let text = write_line_table(&tree, &line, NumberFormat::Rational);
        assert!(text.starts_with("# label=01 intermediate=false vertices=17"));
        let table = read_line_table(&text).unwrap();
        assert_eq!(table.label, Label::parse("01").unwrap());
        assert_eq!(table.rows, tree.vertices(&line));
        let dec = write_line_table(&tree, &line, NumberFormat::Decimal);
        assert!(dec.lines().nth(3).unwrap().starts_with("0.0625,"));
        assert!(read_line_table(&dec).is_err());
    }

    #[test]
    fn witness_round_trip() {
        let tree = LineTree::new(Arc::new(dyadic_bush(3).unwrap())).unwrap();
        let g = PastedGeodesic::branch(&tree, BranchSpec::new(Label::parse("1").unwrap(), 2).unwrap())
            .unwrap();
        let t = vec![ratio(1, 3)];
        let challenge = ChallengeFile::new(&g, &t);
        let text = to_json(&challenge).unwrap();
        let back: ChallengeFile = from_json(&text, "challenge").unwrap();
        assert_eq!(back.geodesic.to_geodesic(&tree).unwrap(), g);
        assert_eq!(back.points().unwrap(), t);

        let r = challenge_respond(&tree, &g, &t).unwrap();
        let file = WitnessFile::from_response(&r);
        let text = to_json(&file).unwrap();
        let back: WitnessFile = from_json(&text, "witness").unwrap();
        assert_eq!(back.to_witness().unwrap(), r.witness);
        assert_eq!(
            back.response.unwrap().geodesic.to_geodesic(&tree).unwrap(),
            r.g_tilde
        );
    }
}
